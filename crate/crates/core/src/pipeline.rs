//! End-to-end fit and decode, shared by the command-line driver and tests.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig, RunStamp};
use crate::decode::DecoderRegistry;
use crate::error::{invalid, CvError, Result};
use crate::hmm::ChangeStateModel;
use crate::ingest::Panel;
use crate::preprocess::{apply_scaling, change_vectors, pooled_scaling, zscore_panel, ChangeSeries, Scaling, ZScope};
use crate::states::{
    assign_states, estimate_emissions, estimate_transitions, fit_kmeans, ChangeStateSet, DecodedSequence,
    SalientFactor,
};

/// How signals were standardized before differencing; reapplied at decode time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "kebab-case")]
pub enum Standardization {
    None,
    PerEntity,
    Pooled { mean: Vec<f64>, sd: Vec<f64> },
}

impl Standardization {
    pub fn apply(&self, panel: &Panel) -> Result<Panel> {
        match self {
            Standardization::None => Ok(panel.clone()),
            Standardization::PerEntity => zscore_panel(panel, ZScope::PerEntity),
            Standardization::Pooled { mean, sd } => apply_scaling(
                panel,
                &Scaling {
                    mean: mean.clone(),
                    sd: sd.clone(),
                },
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub mode: Mode,
    pub variables: Vec<String>,
    pub member_counts: Vec<usize>,
    pub transition_counts: Vec<Vec<u64>>,
    pub iterations: usize,
    pub converged: bool,
    pub var_floor: f64,
    pub smoothing: f64,
    pub source: String,
    pub population_sd: bool,
    pub standardization: Standardization,
    pub n_entities: usize,
    pub n_vectors: usize,
    #[serde(flatten)]
    pub stamp: RunStamp,
}

/// The serialized model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub salient_factors: Vec<SalientFactor>,
    pub seed: u64,
    pub inertia: f64,
    pub metadata: ModelMetadata,
}

impl ModelFile {
    pub fn to_model(&self) -> Result<ChangeStateModel> {
        if self.centroids.len() != self.k {
            return Err(CvError::Dimension {
                expected: self.k,
                got: self.centroids.len(),
            });
        }
        ChangeStateModel::new(
            self.centroids.clone(),
            self.variances.clone(),
            self.transition.clone(),
            self.initial.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        writer
            .write_all(self.to_json()?.as_bytes())
            .map_err(|e| CvError::io("<model json>", e))
    }
}

/// Standardizes each panel according to `config` and differences it.
pub fn prepare(panels: &[Panel], config: &RunConfig) -> Result<(ChangeSeries, Standardization)> {
    if panels.is_empty() {
        return Err(invalid!("no input panels"));
    }
    let standardization = if !config.standardize {
        Standardization::None
    } else {
        match config.zscore_scope {
            ZScope::PerEntity => Standardization::PerEntity,
            ZScope::Pooled => {
                let merged = merge_panels(panels)?;
                let s = pooled_scaling(&merged)?;
                Standardization::Pooled { mean: s.mean, sd: s.sd }
            }
        }
    };
    let series = changes_under(panels, &standardization)?;
    Ok((series, standardization))
}

/// Change vectors of `panels` after applying a stored standardization.
pub fn changes_under(panels: &[Panel], standardization: &Standardization) -> Result<ChangeSeries> {
    let parts = panels
        .iter()
        .map(|p| change_vectors(&standardization.apply(p)?))
        .collect::<Result<Vec<_>>>()?;
    ChangeSeries::concat(parts)
}

fn merge_panels(panels: &[Panel]) -> Result<Panel> {
    if panels.len() == 1 {
        return Ok(panels[0].clone());
    }
    let first = &panels[0];
    let mut ids = Vec::new();
    let mut dense = Vec::new();
    for p in panels {
        if p.variables() != first.variables() || p.timepoints() != first.timepoints() {
            return Err(invalid!("pooled standardization needs panels with identical layout"));
        }
        for e in 0..p.n_entities() {
            ids.push(p.entity_ids()[e].clone());
            dense.push(
                (0..p.n_timepoints())
                    .map(|t| p.row(e, t).ok_or_else(|| invalid!("missing value in '{}'", p.entity_ids()[e])))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
    }
    Panel::from_dense(ids, first.timepoints().to_vec(), first.variables().to_vec(), &dense)
}

/// Everything produced by a fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub file: ModelFile,
    pub model: ChangeStateModel,
    pub states: ChangeStateSet,
    pub assignments: Vec<DecodedSequence>,
}

/// k-means, then transition and emission estimates from the k-means labels.
pub fn fit_series(series: &ChangeSeries, standardization: Standardization, config: &RunConfig) -> Result<FitOutcome> {
    config.validate()?;
    let states = fit_kmeans(series, config.k, config.seed, config.max_iter)?;
    let assignments = assign_states(series, &states)?;
    let transitions = estimate_transitions(&assignments, config.k, config.smoothing)?;
    let variances = estimate_emissions(series, &assignments, &states, config.var_floor)?;
    let model = ChangeStateModel::new(
        states.centroids.clone(),
        variances.clone(),
        transitions.probabilities.clone(),
        transitions.initial.clone(),
    )?;
    let file = ModelFile {
        k: config.k,
        centroids: states.centroids.clone(),
        variances,
        transition: transitions.probabilities,
        initial: transitions.initial,
        salient_factors: states.salient_factors.clone(),
        seed: config.seed,
        inertia: states.inertia,
        metadata: ModelMetadata {
            mode: config.mode,
            variables: series.variables().to_vec(),
            member_counts: states.member_counts.clone(),
            transition_counts: transitions.counts,
            iterations: states.iterations,
            converged: states.converged,
            var_floor: config.var_floor,
            smoothing: config.smoothing,
            source: "kmeans-init".into(),
            population_sd: true,
            standardization,
            n_entities: series.entities().len(),
            n_vectors: series.total_vectors(),
            stamp: RunStamp::new(config),
        },
    };
    Ok(FitOutcome {
        file,
        model,
        states,
        assignments,
    })
}

pub fn fit_panels(panels: &[Panel], config: &RunConfig) -> Result<FitOutcome> {
    let (series, standardization) = prepare(panels, config)?;
    fit_series(&series, standardization, config)
}

/// Decodes `panels` under a stored model with the named decoder.
pub fn decode_panels(
    file: &ModelFile,
    panels: &[Panel],
    method: &str,
    registry: &DecoderRegistry,
) -> Result<Vec<DecodedSequence>> {
    let decoder = registry.get(method)?;
    let model = file.to_model()?;
    let series = changes_under(panels, &file.metadata.standardization)?;
    if series.variables() != file.metadata.variables.as_slice() {
        return Err(invalid!(
            "input variables [{}] differ from the model's [{}]",
            series.variables().join(", "),
            file.metadata.variables.join(", ")
        ));
    }
    decoder.decode(&model, &series)
}
