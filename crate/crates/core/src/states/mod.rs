//! Change-state induction: clustering change vectors, naming the clusters,
//! and estimating how sequences move between them.

mod kmeans;

pub use kmeans::{kmeans, nearest, KMeansFit};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CvError, Result};
use crate::preprocess::ChangeSeries;

/// Allowed state counts for a change-state model.
pub const K_RANGE: std::ops::RangeInclusive<usize> = 2..=16;

/// Where a state sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Kmeans,
    Viterbi,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Kmeans => "kmeans",
            Provenance::Viterbi => "viterbi",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Provenance {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Provenance::Kmeans),
            "viterbi" => Ok(Provenance::Viterbi),
            other => Err(invalid!("unknown provenance '{other}'")),
        }
    }
}

/// Hidden-state sequence for one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSequence {
    pub entity_id: String,
    pub states: Vec<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increased,
    Decreased,
}

/// The dominant dimension of a centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientFactor {
    pub state: usize,
    pub variable: String,
    pub direction: Direction,
    pub component: f64,
    pub label: String,
}

/// Largest-magnitude component of `centroid`; ties go to the lowest dimension.
pub fn salient_factor(state: usize, centroid: &[f64], variables: &[String]) -> SalientFactor {
    let mut best = 0;
    for (d, x) in centroid.iter().enumerate() {
        if x.abs() > centroid[best].abs() {
            best = d;
        }
    }
    let component = centroid[best];
    let direction = if component >= 0.0 {
        Direction::Increased
    } else {
        Direction::Decreased
    };
    let variable = variables[best].clone();
    let label = match direction {
        Direction::Increased => format!("increased {variable}"),
        Direction::Decreased => format!("decreased {variable}"),
    };
    SalientFactor {
        state,
        variable,
        direction,
        component,
        label,
    }
}

/// K centroids in change-vector space plus fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeStateSet {
    pub centroids: Vec<Vec<f64>>,
    pub member_counts: Vec<usize>,
    pub salient_factors: Vec<SalientFactor>,
    pub inertia: f64,
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub variables: Vec<String>,
}

impl ChangeStateSet {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }
}

/// Clusters every change vector of `series` into `k` change-states.
pub fn fit_kmeans(series: &ChangeSeries, k: usize, seed: u64, max_iter: usize) -> Result<ChangeStateSet> {
    if !K_RANGE.contains(&k) {
        return Err(invalid!(
            "state count {k} outside {}..={}",
            K_RANGE.start(),
            K_RANGE.end()
        ));
    }
    if series.total_vectors() == 0 {
        return Err(invalid!("change series is empty"));
    }
    let points: Vec<&[f64]> = series.points().collect();
    let fit = kmeans(&points, k, seed, max_iter)?;
    if !fit.converged {
        log::warn!("k-means stopped at max_iter={max_iter} before assignments settled");
    }
    let mut member_counts = vec![0; k];
    for &l in &fit.labels {
        member_counts[l] += 1;
    }
    let salient_factors = fit
        .centroids
        .iter()
        .enumerate()
        .map(|(s, c)| salient_factor(s, c, series.variables()))
        .collect();
    Ok(ChangeStateSet {
        centroids: fit.centroids,
        member_counts,
        salient_factors,
        inertia: fit.inertia,
        inertia_trace: fit.inertia_trace,
        iterations: fit.iterations,
        converged: fit.converged,
        seed,
        variables: series.variables().to_vec(),
    })
}

/// Nearest-centroid state for every vector of every entity.
pub fn assign_to_centroids(series: &ChangeSeries, centroids: &[Vec<f64>]) -> Result<Vec<DecodedSequence>> {
    if let Some(c) = centroids.iter().find(|c| c.len() != series.dim()) {
        return Err(CvError::Dimension {
            expected: c.len(),
            got: series.dim(),
        });
    }
    Ok(series
        .entities()
        .iter()
        .map(|ent| DecodedSequence {
            entity_id: ent.entity_id.clone(),
            states: ent.vectors.iter().map(|v| nearest(v, centroids).0).collect(),
            provenance: Provenance::Kmeans,
        })
        .collect())
}

pub fn assign_states(series: &ChangeSeries, states: &ChangeStateSet) -> Result<Vec<DecodedSequence>> {
    assign_to_centroids(series, &states.centroids)
}

/// Transition counts and smoothed probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    /// `counts[from][to]`.
    pub counts: Vec<Vec<u64>>,
    pub probabilities: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

fn normalize(row: &[f64]) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter().map(|x| x / total).collect()
    } else {
        // never visited and unsmoothed
        vec![1.0 / row.len() as f64; row.len()]
    }
}

/// Tallies within-entity adjacent pairs `(from, to)` into a `k × k` table.
pub fn transition_counts(sequences: &[DecodedSequence], k: usize) -> Result<Vec<Vec<u64>>> {
    let mut counts = vec![vec![0u64; k]; k];
    for seq in sequences {
        if let Some(&s) = seq.states.iter().find(|&&s| s >= k) {
            return Err(invalid!(
                "entity '{}' has state {s}, but K = {k}",
                seq.entity_id
            ));
        }
        for w in seq.states.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
    }
    Ok(counts)
}

/// Estimates the transition matrix and initial distribution from state sequences.
///
/// Rows never visited with `smoothing == 0` fall back to uniform.
pub fn estimate_transitions(sequences: &[DecodedSequence], k: usize, smoothing: f64) -> Result<TransitionEstimate> {
    if sequences.is_empty() {
        return Err(invalid!("no sequences to estimate transitions from"));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(invalid!("smoothing must be a finite value >= 0"));
    }
    let counts = transition_counts(sequences, k)?;
    let probabilities = counts
        .iter()
        .map(|row| normalize(&row.iter().map(|&c| c as f64 + smoothing).collect::<Vec<_>>()))
        .collect();
    let mut first = vec![smoothing; k];
    for seq in sequences {
        if let Some(&s) = seq.states.first() {
            first[s] += 1.0;
        }
    }
    Ok(TransitionEstimate {
        counts,
        probabilities,
        initial: normalize(&first),
    })
}

/// Per-state, per-dimension variance of member vectors around their centroid,
/// floored at `var_floor`.
pub fn estimate_emissions(
    series: &ChangeSeries,
    assignments: &[DecodedSequence],
    states: &ChangeStateSet,
    var_floor: f64,
) -> Result<Vec<Vec<f64>>> {
    if var_floor.is_nan() || var_floor <= 0.0 {
        return Err(invalid!("var_floor must be positive"));
    }
    if assignments.len() != series.entities().len() {
        return Err(invalid!(
            "{} assignment sequences for {} entities",
            assignments.len(),
            series.entities().len()
        ));
    }
    let k = states.k();
    let dim = series.dim();
    let mut ss = vec![vec![0.0; dim]; k];
    let mut n = vec![0usize; k];
    for (ent, seq) in series.entities().iter().zip(assignments) {
        if seq.states.len() != ent.len() {
            return Err(invalid!(
                "entity '{}' has {} vectors but {} states",
                ent.entity_id,
                ent.len(),
                seq.states.len()
            ));
        }
        for (v, &s) in ent.vectors.iter().zip(&seq.states) {
            if s >= k {
                return Err(invalid!("state {s} out of range for K = {k}"));
            }
            n[s] += 1;
            for ((acc, x), c) in ss[s].iter_mut().zip(v).zip(&states.centroids[s]) {
                *acc += (x - c) * (x - c);
            }
        }
    }
    if let Some(s) = n.iter().position(|&c| c == 0) {
        return Err(CvError::Degenerate(format!("state {s} has no members")));
    }
    Ok(ss
        .into_iter()
        .zip(n)
        .map(|(row, count)| row.into_iter().map(|x| (x / count as f64).max(var_floor)).collect())
        .collect())
}
