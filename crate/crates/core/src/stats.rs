//! Effect sizes and transition-frequency contingency statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CvError, Result};
use crate::states::{transition_counts, DecodedSequence};

/// |Pearson residual| at or above this marks a cell as significant.
pub const RESIDUAL_THRESHOLD: f64 = 2.0;

/// Retained expected counts below this trigger a sparse-cell warning.
pub const MIN_EXPECTED: f64 = 5.0;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Cohen's d with the pooled sample standard deviation.
pub fn cohens_d(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(invalid!(
            "Cohen's d needs at least 2 values per group (got {} and {})",
            group_a.len(),
            group_b.len()
        ));
    }
    let (ma, va) = mean_var(group_a);
    let (mb, vb) = mean_var(group_b);
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let pooled = (((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0)).sqrt();
    let scale = ma.abs().max(mb.abs()).max(1.0);
    if pooled.is_nan() || pooled <= 1e-12 * scale {
        return Err(CvError::Degenerate("pooled standard deviation is zero".into()));
    }
    Ok((ma - mb) / pooled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEffect {
    pub d: f64,
    pub n_faces: usize,
    pub n_shapes: usize,
}

fn split_by_design<'a>(values: impl Iterator<Item = (f64, u8)> + 'a) -> (Vec<f64>, Vec<f64>) {
    let mut faces = Vec::new();
    let mut shapes = Vec::new();
    for (v, l) in values {
        if l == 1 {
            faces.push(v);
        } else {
            shapes.push(v);
        }
    }
    (faces, shapes)
}

/// Cohen's d of curve values at faces timepoints versus shapes timepoints.
pub fn condition_effect_size(curve: &[f64], design: &[u8]) -> Result<ConditionEffect> {
    if curve.len() != design.len() {
        return Err(invalid!("curve has {} values, design has {}", curve.len(), design.len()));
    }
    let (faces, shapes) = split_by_design(curve.iter().copied().zip(design.iter().copied()));
    if faces.is_empty() || shapes.is_empty() {
        return Err(invalid!("design must contain both conditions"));
    }
    Ok(ConditionEffect {
        d: cohens_d(&faces, &shapes)?,
        n_faces: faces.len(),
        n_shapes: shapes.len(),
    })
}

/// Per-scan variant: every (scan, timepoint) value counts as one observation.
pub fn per_scan_effect_size<S: AsRef<[f64]>>(series: &[S], design: &[u8]) -> Result<ConditionEffect> {
    for s in series {
        if s.as_ref().len() != design.len() {
            return Err(invalid!("series has {} values, design has {}", s.as_ref().len(), design.len()));
        }
    }
    let (faces, shapes) = split_by_design(
        series
            .iter()
            .flat_map(|s| s.as_ref().iter().copied().zip(design.iter().copied())),
    );
    if faces.is_empty() || shapes.is_empty() {
        return Err(invalid!("design must contain both conditions"));
    }
    Ok(ConditionEffect {
        d: cohens_d(&faces, &shapes)?,
        n_faces: faces.len(),
        n_shapes: shapes.len(),
    })
}

/// Row of the effect-size CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeRow {
    pub stratum: String,
    pub method: String,
    pub d: f64,
    pub n_faces: usize,
    pub n_shapes: usize,
}

/// Writes `stratum,method,d,n_faces,n_shapes`.
pub fn write_effect_sizes<W: Write>(writer: W, rows: &[EffectSizeRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["stratum", "method", "d", "n_faces", "n_shapes"])?;
    }
    w.flush().map_err(|e| CvError::io("<effect csv>", e))?;
    Ok(())
}

/// Row-major flattened K×K transition counts.
pub fn transition_table(sequences: &[DecodedSequence], k: usize) -> Result<Vec<u64>> {
    Ok(transition_counts(sequences, k)?.into_iter().flatten().collect())
}

/// Chi-squared test of independence between two groups' transition tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    pub observed: [Vec<u64>; 2],
    /// Column indices (into the flattened table) with a nonzero total.
    pub retained: Vec<usize>,
    pub expected: [Vec<f64>; 2],
    pub chi2: f64,
    pub dof: usize,
    /// Pearson residuals `(o − e)/√e`; zero in dropped columns.
    pub residuals: [Vec<f64>; 2],
    pub cramers_v: f64,
    pub n: u64,
    pub warnings: Vec<String>,
}

impl GroupComparison {
    pub fn significant(&self, group: usize, cell: usize) -> bool {
        self.residuals[group][cell].abs() >= RESIDUAL_THRESHOLD
    }
}

/// Builds the 2 × C contingency table from two count vectors (zero-total columns
/// dropped) and computes chi-squared, Pearson residuals and Cramér's V.
pub fn compare_groups(table_a: &[u64], table_b: &[u64]) -> Result<GroupComparison> {
    if table_a.len() != table_b.len() {
        return Err(CvError::Dimension {
            expected: table_a.len(),
            got: table_b.len(),
        });
    }
    let rows = [table_a, table_b];
    let row_totals: [u64; 2] = rows.map(|r| r.iter().sum());
    if row_totals.contains(&0) {
        return Err(CvError::Degenerate(format!(
            "each group needs at least one transition (totals {} and {})",
            row_totals[0], row_totals[1]
        )));
    }
    let n = row_totals[0] + row_totals[1];
    let cells = table_a.len();
    let retained: Vec<usize> = (0..cells).filter(|&j| table_a[j] + table_b[j] > 0).collect();

    let mut expected = [vec![0.0; cells], vec![0.0; cells]];
    let mut residuals = [vec![0.0; cells], vec![0.0; cells]];
    let mut chi2 = 0.0;
    let mut sparse = 0;
    for &j in &retained {
        let col = (table_a[j] + table_b[j]) as f64;
        for g in 0..2 {
            let e = row_totals[g] as f64 * col / n as f64;
            let o = rows[g][j] as f64;
            expected[g][j] = e;
            residuals[g][j] = (o - e) / e.sqrt();
            chi2 += (o - e) * (o - e) / e;
            if e < MIN_EXPECTED {
                sparse += 1;
            }
        }
    }
    let mut warnings = Vec::new();
    if sparse > 0 {
        warnings.push(format!(
            "{sparse} of {} retained cells have expected count below {MIN_EXPECTED}",
            2 * retained.len()
        ));
    }
    let dof = retained.len().saturating_sub(1);
    let min_dim = retained.len().min(2);
    let cramers_v = if min_dim > 1 {
        (chi2 / (n as f64 * (min_dim - 1) as f64)).sqrt().min(1.0)
    } else {
        0.0
    };
    Ok(GroupComparison {
        observed: [table_a.to_vec(), table_b.to_vec()],
        retained,
        expected,
        chi2,
        dof,
        residuals,
        cramers_v,
        n,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub v_viterbi: f64,
    pub v_kmeans: f64,
    /// Strictly higher association under Viterbi decoding.
    pub enhanced: bool,
}

pub fn enhancement_report(viterbi: &GroupComparison, kmeans: &GroupComparison) -> EnhancementReport {
    EnhancementReport {
        v_viterbi: viterbi.cramers_v,
        v_kmeans: kmeans.cramers_v,
        enhanced: viterbi.cramers_v > kmeans.cramers_v,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantCell {
    pub group: String,
    pub from: usize,
    pub to: usize,
    pub observed: u64,
    pub residual: f64,
}

/// Serializable form of a [`GroupComparison`] over K×K transition tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub grouping: String,
    pub groups: [String; 2],
    pub provenance: String,
    pub residual_kind: String,
    pub chi2: f64,
    pub dof: usize,
    pub cramers_v: f64,
    pub n: u64,
    /// Per group, `K × K` observed counts.
    pub observed: Vec<Vec<Vec<u64>>>,
    /// Per group, `K × K` Pearson residuals.
    pub residuals: Vec<Vec<Vec<f64>>>,
    pub significant_cells: Vec<SignificantCell>,
    pub warnings: Vec<String>,
}

fn square<T: Clone>(flat: &[T], k: usize) -> Vec<Vec<T>> {
    flat.chunks(k).map(<[T]>::to_vec).collect()
}

impl TransitionReport {
    pub fn new(cmp: &GroupComparison, k: usize, grouping: &str, groups: &[String; 2], provenance: &str) -> Self {
        let mut significant_cells = Vec::new();
        for (g, name) in groups.iter().enumerate() {
            for &cell in &cmp.retained {
                if cmp.significant(g, cell) {
                    significant_cells.push(SignificantCell {
                        group: name.clone(),
                        from: cell / k,
                        to: cell % k,
                        observed: cmp.observed[g][cell],
                        residual: cmp.residuals[g][cell],
                    });
                }
            }
        }
        Self {
            grouping: grouping.to_string(),
            groups: groups.clone(),
            provenance: provenance.to_string(),
            residual_kind: "pearson".into(),
            chi2: cmp.chi2,
            dof: cmp.dof,
            cramers_v: cmp.cramers_v,
            n: cmp.n,
            observed: cmp.observed.iter().map(|o| square(o, k)).collect(),
            residuals: cmp.residuals.iter().map(|r| square(r, k)).collect(),
            significant_cells,
            warnings: cmp.warnings.clone(),
        }
    }
}
