use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CvError, Result};

/// Entity × timepoint × variable observation grid.
///
/// Questionnaire cohorts and single fMRI scans share this representation; a
/// scan is a panel with one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    entity_ids: Vec<String>,
    timepoints: Vec<i64>,
    variables: Vec<String>,
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl Panel {
    /// Creates an all-missing panel.
    pub fn empty(entity_ids: Vec<String>, timepoints: Vec<i64>, variables: Vec<String>) -> Result<Self> {
        if timepoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("timepoints must be strictly increasing"));
        }
        let len = entity_ids.len() * timepoints.len() * variables.len();
        Ok(Self {
            entity_ids,
            timepoints,
            variables,
            values: vec![0.0; len],
            missing: vec![true; len],
        })
    }

    /// Builds a dense panel from `values[entity][timepoint][variable]`.
    pub fn from_dense(
        entity_ids: Vec<String>,
        timepoints: Vec<i64>,
        variables: Vec<String>,
        values: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let mut panel = Self::empty(entity_ids, timepoints, variables)?;
        if values.len() != panel.n_entities() {
            return Err(CvError::Dimension {
                expected: panel.n_entities(),
                got: values.len(),
            });
        }
        for (e, rows) in values.iter().enumerate() {
            if rows.len() != panel.n_timepoints() {
                return Err(CvError::Dimension {
                    expected: panel.n_timepoints(),
                    got: rows.len(),
                });
            }
            for (t, row) in rows.iter().enumerate() {
                if row.len() != panel.n_variables() {
                    return Err(CvError::Dimension {
                        expected: panel.n_variables(),
                        got: row.len(),
                    });
                }
                for (v, &x) in row.iter().enumerate() {
                    panel.set(e, t, v, Some(x));
                }
            }
        }
        Ok(panel)
    }

    fn index(&self, e: usize, t: usize, v: usize) -> usize {
        (e * self.timepoints.len() + t) * self.variables.len() + v
    }

    pub fn entity_ids(&self) -> &[String] {
        &self.entity_ids
    }

    pub fn timepoints(&self) -> &[i64] {
        &self.timepoints
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn n_entities(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn n_timepoints(&self) -> usize {
        self.timepoints.len()
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn get(&self, e: usize, t: usize, v: usize) -> Option<f64> {
        let i = self.index(e, t, v);
        (!self.missing[i]).then(|| self.values[i])
    }

    pub fn set(&mut self, e: usize, t: usize, v: usize, value: Option<f64>) {
        let i = self.index(e, t, v);
        match value {
            Some(x) => {
                self.values[i] = x;
                self.missing[i] = false;
            }
            None => {
                self.values[i] = 0.0;
                self.missing[i] = true;
            }
        }
    }

    pub fn is_dense(&self) -> bool {
        !self.missing.iter().any(|&m| m)
    }

    pub fn entity_has_missing(&self, e: usize) -> bool {
        let width = self.timepoints.len() * self.variables.len();
        self.missing[e * width..(e + 1) * width].iter().any(|&m| m)
    }

    /// Observation vector of entity `e` at timepoint index `t`; `None` if any value is missing.
    pub fn row(&self, e: usize, t: usize) -> Option<Vec<f64>> {
        (0..self.variables.len()).map(|v| self.get(e, t, v)).collect()
    }

    /// Keeps only the listed entities, in the given order.
    pub fn select_entities(&self, keep: &[usize]) -> Panel {
        let width = self.timepoints.len() * self.variables.len();
        let mut values = Vec::with_capacity(keep.len() * width);
        let mut missing = Vec::with_capacity(keep.len() * width);
        for &e in keep {
            values.extend_from_slice(&self.values[e * width..(e + 1) * width]);
            missing.extend_from_slice(&self.missing[e * width..(e + 1) * width]);
        }
        Panel {
            entity_ids: keep.iter().map(|&e| self.entity_ids[e].clone()).collect(),
            timepoints: self.timepoints.clone(),
            variables: self.variables.clone(),
            values,
            missing,
        }
    }

    /// Drops the listed timepoint values.
    pub fn drop_timepoints(&self, drop: &[i64]) -> Panel {
        let keep: Vec<usize> = (0..self.timepoints.len())
            .filter(|&t| !drop.contains(&self.timepoints[t]))
            .collect();
        let mut out = Panel {
            entity_ids: self.entity_ids.clone(),
            timepoints: keep.iter().map(|&t| self.timepoints[t]).collect(),
            variables: self.variables.clone(),
            values: vec![0.0; self.entity_ids.len() * keep.len() * self.variables.len()],
            missing: vec![true; self.entity_ids.len() * keep.len() * self.variables.len()],
        };
        for e in 0..self.n_entities() {
            for (new_t, &t) in keep.iter().enumerate() {
                for v in 0..self.n_variables() {
                    out.set(e, new_t, v, self.get(e, t, v));
                }
            }
        }
        out
    }

    /// Column of one variable for one entity across all timepoints.
    pub fn series(&self, e: usize, v: usize) -> Vec<Option<f64>> {
        (0..self.n_timepoints()).map(|t| self.get(e, t, v)).collect()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }
}

/// Per-timepoint condition codes of a block design: 1 = faces, 0 = shapes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignLabels {
    labels: Vec<u8>,
}

impl DesignLabels {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(invalid!(
                "design label at timepoint {i} must be 0 or 1, got {}",
                labels[i]
            ));
        }
        Ok(Self { labels })
    }

    /// Alternating blocks starting with shapes: `n_cycles` × (shapes, faces).
    pub fn blocks(block_len: usize, n_cycles: usize) -> Self {
        let labels = (0..n_cycles)
            .flat_map(|_| std::iter::repeat_n(0, block_len).chain(std::iter::repeat_n(1, block_len)))
            .collect();
        Self { labels }
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Shifts labels later by `lag` frames; the first `lag` frames repeat the first label.
    pub fn shifted(&self, lag: usize) -> Self {
        let n = self.labels.len();
        let labels = (0..n)
            .map(|t| self.labels[t.saturating_sub(lag)])
            .collect();
        Self { labels }
    }
}

/// Entity → group code for a two-group comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    groups: BTreeMap<String, String>,
    codes: [String; 2],
}

impl GroupAssignment {
    pub fn new(groups: BTreeMap<String, String>) -> Result<Self> {
        let mut codes: Vec<&String> = groups.values().collect();
        codes.sort();
        codes.dedup();
        if codes.len() != 2 {
            return Err(invalid!(
                "group assignment needs exactly 2 distinct groups, found {}",
                codes.len()
            ));
        }
        let codes = [codes[0].clone(), codes[1].clone()];
        Ok(Self { groups, codes })
    }

    /// The two group codes in sorted order.
    pub fn codes(&self) -> &[String; 2] {
        &self.codes
    }

    pub fn group_of(&self, entity: &str) -> Option<&str> {
        self.groups.get(entity).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.groups.iter()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}
