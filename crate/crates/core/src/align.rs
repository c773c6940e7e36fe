//! Label-switching resolution against a block design.
//!
//! State indices are arbitrary, so each state is mapped to the condition
//! (faces = 1, shapes = 0) it occurs in most often. Sequences are then
//! binarized through that map and averaged across scans.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CvError, Result};
use crate::ingest::{DesignLabels, Panel};
use crate::states::DecodedSequence;

/// Which frame of a change vector's span supplies its design label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// The earlier frame.
    #[default]
    TFrom,
    /// The later frame.
    TTo,
}

impl std::str::FromStr for Alignment {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t_from" => Ok(Alignment::TFrom),
            "t_to" => Ok(Alignment::TTo),
            other => Err(invalid!("alignment must be t_from or t_to, got '{other}'")),
        }
    }
}

/// Frame index supplying the label of change vector `i`.
pub fn frame_of(i: usize, alignment: Alignment) -> usize {
    match alignment {
        Alignment::TFrom => i,
        Alignment::TTo => i + 1,
    }
}

/// Projects a per-frame design (length T) onto change-vector positions (length T − 1),
/// after delaying it by `lag` frames.
pub fn align_design(design: &DesignLabels, alignment: Alignment, lag: usize) -> Result<DesignLabels> {
    if design.len() < 2 {
        return Err(invalid!("design needs at least 2 frames to align change vectors"));
    }
    let shifted = design.shifted(lag);
    let labels = (0..design.len() - 1)
        .map(|i| shifted.labels()[frame_of(i, alignment)])
        .collect();
    DesignLabels::new(labels)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateConditionMap {
    /// 1 = faces, 0 = shapes.
    pub conditions: Vec<u8>,
    pub faces_counts: Vec<u64>,
    pub shapes_counts: Vec<u64>,
}

impl StateConditionMap {
    pub fn k(&self) -> usize {
        self.conditions.len()
    }
}

/// Maps each state to faces iff it occurs strictly more often under faces than
/// under shapes; ties (including states that never occur) map to shapes.
pub fn majority_vote(sequences: &[DecodedSequence], design: &DesignLabels, k: usize) -> Result<StateConditionMap> {
    let mut faces = vec![0u64; k];
    let mut shapes = vec![0u64; k];
    for seq in sequences {
        if seq.states.len() != design.len() {
            return Err(invalid!(
                "entity '{}' has {} states but the design has {} labels",
                seq.entity_id,
                seq.states.len(),
                design.len()
            ));
        }
        for (&s, &label) in seq.states.iter().zip(design.labels()) {
            if s >= k {
                return Err(invalid!("entity '{}' has state {s}, but K = {k}", seq.entity_id));
            }
            if label == 1 {
                faces[s] += 1;
            } else {
                shapes[s] += 1;
            }
        }
    }
    let conditions = faces
        .iter()
        .zip(&shapes)
        .map(|(f, s)| u8::from(f > s))
        .collect();
    Ok(StateConditionMap {
        conditions,
        faces_counts: faces,
        shapes_counts: shapes,
    })
}

pub fn binarize(sequence: &DecodedSequence, map: &StateConditionMap) -> Result<Vec<u8>> {
    sequence
        .states
        .iter()
        .map(|&s| {
            map.conditions
                .get(s)
                .copied()
                .ok_or_else(|| invalid!("state {s} of '{}' is not in the condition map", sequence.entity_id))
        })
        .collect()
}

/// Per-timepoint arithmetic mean across series of equal length.
pub fn mean_curve<S: AsRef<[f64]>>(series: &[S]) -> Result<Vec<f64>> {
    let first = series.first().ok_or_else(|| invalid!("no series to average"))?;
    let len = first.as_ref().len();
    let mut acc = vec![0.0; len];
    for s in series {
        let s = s.as_ref();
        if s.len() != len {
            return Err(invalid!("series lengths differ: {len} vs {}", s.len()));
        }
        for (a, x) in acc.iter_mut().zip(s) {
            *a += x;
        }
    }
    let n = series.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Majority-vote map, then mean of the binarized sequences.
pub fn condition_curve(sequences: &[DecodedSequence], design: &DesignLabels, k: usize) -> Result<(StateConditionMap, Vec<f64>)> {
    let map = majority_vote(sequences, design, k)?;
    let binarized = sequences
        .iter()
        .map(|s| Ok(binarize(s, &map)?.into_iter().map(f64::from).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok((map, mean_curve(&binarized)?))
}

/// Mean over scans of the average of the selected ROI columns, sampled at the
/// frame each change vector is aligned to.
pub fn roi_curve(scans: &[Panel], rois: &[String], alignment: Alignment) -> Result<Vec<f64>> {
    if rois.is_empty() {
        return Err(invalid!("no ROI columns selected"));
    }
    let per_scan = scans
        .iter()
        .map(|scan| {
            let cols = rois
                .iter()
                .map(|r| {
                    scan.variable_index(r)
                        .ok_or_else(|| invalid!("scan '{}' has no column '{r}'", scan.entity_ids()[0]))
                })
                .collect::<Result<Vec<_>>>()?;
            if scan.n_timepoints() < 2 {
                return Err(invalid!("scan '{}' is too short", scan.entity_ids()[0]));
            }
            (0..scan.n_timepoints() - 1)
                .map(|i| {
                    let t = frame_of(i, alignment);
                    let sum = cols
                        .iter()
                        .map(|&c| scan.get(0, t, c).ok_or_else(|| invalid!("missing value in scan")))
                        .sum::<Result<f64>>()?;
                    Ok(sum / cols.len() as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    mean_curve(&per_scan)
}

/// The plot-ready curve table: design overlay plus up to three mean curves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveTable {
    pub design: Vec<u8>,
    pub viterbi: Option<Vec<f64>>,
    pub kmeans: Option<Vec<f64>>,
    pub raw: Option<Vec<f64>>,
}

impl CurveTable {
    fn columns(&self) -> [(&'static str, Option<&Vec<f64>>); 3] {
        [
            ("viterbi_mean", self.viterbi.as_ref()),
            ("kmeans_mean", self.kmeans.as_ref()),
            ("raw_mean", self.raw.as_ref()),
        ]
    }

    /// Writes `t_index,design,viterbi_mean,kmeans_mean,raw_mean`; absent curves are blank.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        for (name, col) in self.columns() {
            if let Some(c) = col {
                if c.len() != self.design.len() {
                    return Err(invalid!("{name} has {} rows, design has {}", c.len(), self.design.len()));
                }
            }
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_index", "design", "viterbi_mean", "kmeans_mean", "raw_mean"])?;
        for (t, d) in self.design.iter().enumerate() {
            let mut row = vec![t.to_string(), d.to_string()];
            for (_, col) in self.columns() {
                row.push(col.map(|c| c[t].to_string()).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CvError::io("<curve csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| invalid!("missing column '{name}'"))
        };
        let design_col = col("design")?;
        let curve_cols = [col("viterbi_mean")?, col("kmeans_mean")?, col("raw_mean")?];
        let mut design = Vec::new();
        let mut curves: [Vec<Option<f64>>; 3] = Default::default();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 2;
            let record = record?;
            let bad = |what: &str| CvError::Row {
                row,
                message: format!("{what} is not a valid value"),
            };
            design.push(record[design_col].parse::<u8>().map_err(|_| bad("design"))?);
            for (curve, &c) in curves.iter_mut().zip(&curve_cols) {
                let raw = &record[c];
                curve.push(if raw.is_empty() {
                    None
                } else {
                    Some(raw.parse::<f64>().map_err(|_| bad("curve value"))?)
                });
            }
        }
        if design.is_empty() {
            return Err(invalid!("curve file has no rows"));
        }
        DesignLabels::new(design.clone())?;
        let [viterbi, kmeans, raw] = curves.map(|c| {
            if c.iter().all(Option::is_none) {
                Ok(None)
            } else {
                c.into_iter()
                    .collect::<Option<Vec<f64>>>()
                    .map(Some)
                    .ok_or_else(|| invalid!("curve column is partially blank"))
            }
        });
        Ok(Self {
            design,
            viterbi: viterbi?,
            kmeans: kmeans?,
            raw: raw?,
        })
    }
}
