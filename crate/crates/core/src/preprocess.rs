//! Standardization and change-vector extraction.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CvError, Result};
use crate::ingest::Panel;

/// Which observations share a mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZScope {
    /// One mean/SD per variable over every entity and timepoint.
    Pooled,
    /// One mean/SD per entity per variable.
    PerEntity,
}

/// Location/scale used for one group of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: Vec<f64>,
    /// Population standard deviation (divides by N).
    pub sd: Vec<f64>,
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / n as f64).sqrt(), n)
}

fn degenerate_sd(mean: f64, sd: f64) -> bool {
    !(sd.is_finite() && sd > 1e-12 * mean.abs().max(1.0))
}

fn entity_values(panel: &Panel, e: usize, v: usize) -> impl Iterator<Item = f64> + Clone + '_ {
    (0..panel.n_timepoints()).filter_map(move |t| panel.get(e, t, v))
}

/// Computes pooled location/scale for every variable of `panel`, skipping missing cells.
pub fn pooled_scaling(panel: &Panel) -> Result<Scaling> {
    let mut mean = Vec::with_capacity(panel.n_variables());
    let mut sd = Vec::with_capacity(panel.n_variables());
    for (v, name) in panel.variables().iter().enumerate() {
        let values = (0..panel.n_entities()).flat_map(|e| entity_values(panel, e, v));
        let (m, s, n) = moments(values);
        if n == 0 || degenerate_sd(m, s) {
            return Err(CvError::ZeroVariance(name.clone()));
        }
        mean.push(m);
        sd.push(s);
    }
    Ok(Scaling { mean, sd })
}

/// Applies a fixed scaling to every entity.
pub fn apply_scaling(panel: &Panel, scaling: &Scaling) -> Result<Panel> {
    if scaling.mean.len() != panel.n_variables() || scaling.sd.len() != panel.n_variables() {
        return Err(CvError::Dimension {
            expected: panel.n_variables(),
            got: scaling.mean.len(),
        });
    }
    let mut out = panel.clone();
    for e in 0..panel.n_entities() {
        for t in 0..panel.n_timepoints() {
            for v in 0..panel.n_variables() {
                let z = panel
                    .get(e, t, v)
                    .map(|x| (x - scaling.mean[v]) / scaling.sd[v]);
                out.set(e, t, v, z);
            }
        }
    }
    Ok(out)
}

/// Z-scores every variable of the panel within the requested scope.
pub fn zscore_panel(panel: &Panel, scope: ZScope) -> Result<Panel> {
    match scope {
        ZScope::Pooled => apply_scaling(panel, &pooled_scaling(panel)?),
        ZScope::PerEntity => {
            let mut out = panel.clone();
            for e in 0..panel.n_entities() {
                for (v, name) in panel.variables().iter().enumerate() {
                    let (m, s, n) = moments(entity_values(panel, e, v));
                    if n == 0 || degenerate_sd(m, s) {
                        return Err(CvError::ZeroVariance(format!(
                            "{name} (entity '{}')",
                            panel.entity_ids()[e]
                        )));
                    }
                    for t in 0..panel.n_timepoints() {
                        out.set(e, t, v, panel.get(e, t, v).map(|x| (x - m) / s));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Change vectors of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityChanges {
    pub entity_id: String,
    /// `vectors[i] = x[i + 1] - x[i]`.
    pub vectors: Vec<Vec<f64>>,
    /// Timepoint values `(t_from, t_to)` each vector spans.
    pub spans: Vec<(i64, i64)>,
}

impl EntityChanges {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Per-entity sequences of D-dimensional change vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    variables: Vec<String>,
    entities: Vec<EntityChanges>,
}

impl ChangeSeries {
    pub fn new(variables: Vec<String>, entities: Vec<EntityChanges>) -> Result<Self> {
        let d = variables.len();
        for ent in &entities {
            if ent.spans.len() != ent.vectors.len() {
                return Err(invalid!(
                    "entity '{}' has {} vectors but {} spans",
                    ent.entity_id,
                    ent.vectors.len(),
                    ent.spans.len()
                ));
            }
            if let Some(bad) = ent.vectors.iter().find(|v| v.len() != d) {
                return Err(CvError::Dimension {
                    expected: d,
                    got: bad.len(),
                });
            }
        }
        Ok(Self {
            variables,
            entities,
        })
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn entities(&self) -> &[EntityChanges] {
        &self.entities
    }

    pub fn total_vectors(&self) -> usize {
        self.entities.iter().map(EntityChanges::len).sum()
    }

    /// All vectors in entity order.
    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.entities
            .iter()
            .flat_map(|e| e.vectors.iter().map(Vec::as_slice))
    }

    /// Concatenates the entities of several series sharing a variable set.
    pub fn concat(parts: Vec<ChangeSeries>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut first = iter.next().ok_or_else(|| invalid!("no change series to combine"))?;
        for part in iter {
            if part.variables != first.variables {
                return Err(invalid!(
                    "variable sets differ: {:?} vs {:?}",
                    first.variables,
                    part.variables
                ));
            }
            first.entities.extend(part.entities);
        }
        Ok(first)
    }

    /// Writes `entity_id,t_from,t_to,d_1..d_D`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["entity_id".to_string(), "t_from".into(), "t_to".into()];
        header.extend((1..=self.dim()).map(|d| format!("d_{d}")));
        w.write_record(&header)?;
        for ent in &self.entities {
            for (vector, (from, to)) in ent.vectors.iter().zip(&ent.spans) {
                let mut row = vec![ent.entity_id.clone(), from.to_string(), to.to_string()];
                row.extend(vector.iter().map(|x| x.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| CvError::io("<change csv>", e))?;
        Ok(())
    }
}

/// Differences between adjacent timepoints for every entity of a dense panel.
pub fn change_vectors(panel: &Panel) -> Result<ChangeSeries> {
    if panel.n_timepoints() < 2 {
        return Err(invalid!(
            "change vectors need at least 2 timepoints, panel has {}",
            panel.n_timepoints()
        ));
    }
    let tps = panel.timepoints();
    let mut entities = Vec::with_capacity(panel.n_entities());
    for (e, id) in panel.entity_ids().iter().enumerate() {
        let rows = (0..panel.n_timepoints())
            .map(|t| {
                panel
                    .row(e, t)
                    .ok_or_else(|| invalid!("entity '{id}' has missing values at timepoint {}", tps[t]))
            })
            .collect::<Result<Vec<_>>>()?;
        let vectors = rows
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
            .collect();
        let spans = tps.windows(2).map(|w| (w[0], w[1])).collect();
        entities.push(EntityChanges {
            entity_id: id.clone(),
            vectors,
            spans,
        });
    }
    ChangeSeries::new(panel.variables().to_vec(), entities)
}
