//! Synthetic scans and cohorts with known hidden states.
//!
//! Scan mode mirrors a faces/shapes block design: during faces blocks the
//! hidden state is drawn from the faces half of the states, during shapes
//! blocks from the shapes half. The first change of every block is that
//! half's entry state, which moves the signal channels up (faces) or down
//! (shapes); the remaining changes are drawn uniformly from the half's other
//! ("hold") states, which leave the signal channels alone and have no net drift.
//!
//! Cohort mode draws each entity's states from its group's transition
//! matrix and emits 4-D questionnaire-style panels.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CvError, Result};
use crate::hmm::{integrate_changes, ChangeStateModel};
use crate::ingest::{
    write_design, write_groups, write_manifest, write_scan, write_scored, write_to_path,
    DesignLabels, GroupAssignment, ManifestEntry, Panel, ScoredRecord, QUESTIONNAIRE_VARIABLES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Entities per group (cohort mode) or number of scans (scan mode).
    pub n_entities: usize,
    /// Timepoints per entity in cohort mode. Scan length is `2 · block_len · n_cycles`.
    pub timepoints: usize,
    pub dims: usize,
    pub k: usize,
    pub noise_sigma: f64,
    /// Magnitude of each state's mean change along its salient direction.
    pub separation: f64,
    /// Step of the entry states on the signal channels (scan mode).
    pub signal_amplitude: f64,
    pub block_len: usize,
    pub n_cycles: usize,
    /// Channels moved by the faces/shapes entry states (scan mode).
    pub signal_channels: Vec<usize>,
    /// Per-group transition matrices (cohort mode); both groups share the initial distribution.
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl SynthSpec {
    /// 115 scans × 8 ROIs, K = 7, 5 cycles of 12-frame blocks; ROIs 7 and 8 carry a weak block signal.
    pub fn scans_default() -> Self {
        Self {
            n_entities: 115,
            timepoints: 120,
            dims: 8,
            k: 7,
            noise_sigma: 0.6,
            separation: 1.0,
            signal_amplitude: 0.25,
            block_len: 12,
            n_cycles: 5,
            signal_channels: vec![6, 7],
            transitions: Vec::new(),
            seed: 0,
        }
    }

    /// Two groups of 400, 12 timepoints, K = 5 in 4-D.
    pub fn cohort_default() -> Self {
        Self {
            n_entities: 400,
            timepoints: 12,
            dims: 4,
            k: 5,
            noise_sigma: 1.0,
            separation: 2.5,
            signal_amplitude: 0.0,
            block_len: 0,
            n_cycles: 0,
            signal_channels: Vec::new(),
            transitions: vec![sticky_matrix(5, 0.6), cyclic_matrix(5, 0.6)],
            seed: 0,
        }
    }

    pub fn scan_len(&self) -> usize {
        2 * self.block_len * self.n_cycles
    }

    /// Faces states are the first `k / 2`; the rest (one more when `k` is odd) are shapes.
    pub fn faces_states(&self) -> std::ops::Range<usize> {
        0..self.k / 2
    }

    pub fn shapes_states(&self) -> std::ops::Range<usize> {
        self.k / 2..self.k
    }

    fn check_common(&self) -> Result<()> {
        if self.n_entities == 0 || self.dims == 0 || self.k < 2 {
            return Err(invalid!("synthetic spec needs n_entities, dims >= 1 and k >= 2"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid!("noise_sigma must be finite and >= 0"));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(invalid!("separation must be positive"));
        }
        Ok(())
    }
}

/// `p` on the diagonal, the rest spread evenly.
pub fn sticky_matrix(k: usize, p: f64) -> Vec<Vec<f64>> {
    let off = (1.0 - p) / (k - 1) as f64;
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { p } else { off }).collect())
        .collect()
}

/// `p` on the move to the next state (cyclically), the rest spread evenly.
pub fn cyclic_matrix(k: usize, p: f64) -> Vec<Vec<f64>> {
    let off = (1.0 - p) / (k - 1) as f64;
    (0..k)
        .map(|i| (0..k).map(|j| if j == (i + 1) % k { p } else { off }).collect())
        .collect()
}

fn entity_rng(seed: u64, entity: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(entity as u64);
    rng
}

fn noise_variances(spec: &SynthSpec) -> Vec<Vec<f64>> {
    let v = (spec.noise_sigma * spec.noise_sigma).max(1e-300);
    vec![vec![v; spec.dims]; spec.k]
}

/// Ground-truth state path of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthSequence {
    pub entity_id: String,
    pub states: Vec<usize>,
}

pub fn write_ground_truth<W: Write>(writer: W, truth: &[TruthSequence]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["entity_id", "t_index", "true_state"])?;
    for seq in truth {
        for (t, s) in seq.states.iter().enumerate() {
            w.write_record([seq.entity_id.as_str(), &t.to_string(), &s.to_string()])?;
        }
    }
    w.flush().map_err(|e| CvError::io("<ground truth csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanDataset {
    pub scans: Vec<Panel>,
    /// Per-frame labels, length = scan length.
    pub design: DesignLabels,
    pub truth: Vec<TruthSequence>,
    /// Change vectors exactly as sampled, per scan.
    pub changes: Vec<Vec<Vec<f64>>>,
    pub means: Vec<Vec<f64>>,
}

/// State means for scan mode. Entry states move the signal channels. Within
/// each condition the hold states come in `+h`/`−h` pairs on a fresh
/// non-signal channel; an unpaired hold is the zero ("stable") vector, or a
/// lone `+h` on a fresh channel once the zero vector is taken.
pub fn scan_state_means(spec: &SynthSpec) -> Result<Vec<Vec<f64>>> {
    let h = spec.separation;
    let mut others = (0..spec.dims).filter(|c| !spec.signal_channels.contains(c));
    let mut means = vec![vec![0.0; spec.dims]; spec.k];
    let mut zero_used = false;
    for (sign, subset) in [(1.0, spec.faces_states()), (-1.0, spec.shapes_states())] {
        for &c in &spec.signal_channels {
            means[subset.start][c] = sign * spec.signal_amplitude;
        }
        let holds: Vec<usize> = (subset.start + 1..subset.end).collect();
        for pair in holds.chunks(2) {
            if pair.len() == 1 && !zero_used {
                zero_used = true;
                continue;
            }
            let c = others
                .next()
                .ok_or_else(|| invalid!("k = {} needs more non-signal channels than {}", spec.k, spec.dims))?;
            means[pair[0]][c] = h;
            if let Some(&s) = pair.get(1) {
                means[s][c] = -h;
            }
        }
    }
    Ok(means)
}

pub fn synth_scans(spec: &SynthSpec) -> Result<ScanDataset> {
    spec.check_common()?;
    if spec.block_len < 2 || spec.n_cycles == 0 {
        return Err(invalid!("scan mode needs block_len >= 2 and n_cycles >= 1"));
    }
    if spec.k < 4 {
        return Err(invalid!("scan mode needs k >= 4 (an entry and a hold state per condition)"));
    }
    if !(spec.signal_amplitude.is_finite() && spec.signal_amplitude > 0.0) {
        return Err(invalid!("signal_amplitude must be positive"));
    }
    if spec.signal_channels.is_empty() || spec.signal_channels.iter().any(|&c| c >= spec.dims) {
        return Err(invalid!("signal channels must be nonempty and < dims"));
    }
    let means = scan_state_means(spec)?;
    let model = ChangeStateModel::new(
        means.clone(),
        noise_variances(spec),
        vec![vec![1.0 / spec.k as f64; spec.k]; spec.k],
        vec![1.0 / spec.k as f64; spec.k],
    )?;
    let design = DesignLabels::blocks(spec.block_len, spec.n_cycles);
    let frames = design.len();
    let faces: Vec<usize> = spec.faces_states().collect();
    let shapes: Vec<usize> = spec.shapes_states().collect();

    let mut scans = Vec::with_capacity(spec.n_entities);
    let mut truth = Vec::with_capacity(spec.n_entities);
    let mut all_changes = Vec::with_capacity(spec.n_entities);
    let variables: Vec<String> = (1..=spec.dims).map(|d| format!("roi_{d}")).collect();
    for e in 0..spec.n_entities {
        let mut rng = entity_rng(spec.seed, e);
        let mut states = Vec::with_capacity(frames - 1);
        for i in 0..frames - 1 {
            let subset = if design.labels()[i] == 1 { &faces } else { &shapes };
            let block_start = i % spec.block_len == 0;
            let s = if block_start {
                subset[0]
            } else {
                subset[1 + rng.random_range(0..subset.len() - 1)]
            };
            states.push(s);
        }
        let changes: Vec<Vec<f64>> = states
            .iter()
            .map(|&s| model.draw_emission(s, &mut rng))
            .collect();
        let frames_data = integrate_changes(&vec![0.0; spec.dims], &changes);
        let id = format!("scan_{:03}", e + 1);
        scans.push(Panel::from_dense(
            vec![id.clone()],
            (0..frames as i64).collect(),
            variables.clone(),
            &[frames_data],
        )?);
        truth.push(TruthSequence {
            entity_id: id,
            states,
        });
        all_changes.push(changes);
    }
    Ok(ScanDataset {
        scans,
        design,
        truth,
        changes: all_changes,
        means,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortDataset {
    pub panel: Panel,
    pub groups: GroupAssignment,
    pub truth: Vec<TruthSequence>,
    pub changes: Vec<Vec<Vec<f64>>>,
    pub means: Vec<Vec<f64>>,
}

/// Cohort state means: state `s` moves dimension `s / 2` (mod D) up for even `s`,
/// down for odd `s`, scaled by `separation`.
pub fn cohort_state_means(spec: &SynthSpec) -> Vec<Vec<f64>> {
    (0..spec.k)
        .map(|s| {
            let mut m = vec![0.0; spec.dims];
            let d = (s / 2) % spec.dims;
            m[d] = if s % 2 == 0 { spec.separation } else { -spec.separation };
            m
        })
        .collect()
}

pub fn synth_cohort(spec: &SynthSpec) -> Result<CohortDataset> {
    spec.check_common()?;
    if spec.transitions.len() != 2 {
        return Err(invalid!("cohort mode needs exactly 2 group transition matrices"));
    }
    if spec.timepoints < 2 {
        return Err(invalid!("cohort mode needs at least 2 timepoints"));
    }
    if 2 * spec.dims < spec.k {
        return Err(invalid!("k = {} states need at least {} dimensions", spec.k, spec.k.div_ceil(2)));
    }
    let means = cohort_state_means(spec);
    let initial = vec![1.0 / spec.k as f64; spec.k];
    let models = spec
        .transitions
        .iter()
        .map(|t| ChangeStateModel::new(means.clone(), noise_variances(spec), t.clone(), initial.clone()))
        .collect::<Result<Vec<_>>>()?;

    let variables: Vec<String> = if spec.dims == QUESTIONNAIRE_VARIABLES.len() {
        QUESTIONNAIRE_VARIABLES.map(String::from).to_vec()
    } else {
        (1..=spec.dims).map(|d| format!("v_{d}")).collect()
    };
    let group_codes = ["A", "B"];
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut truth = Vec::new();
    let mut all_changes = Vec::new();
    let mut groups = BTreeMap::new();
    for (g, model) in models.iter().enumerate() {
        for i in 0..spec.n_entities {
            let e = g * spec.n_entities + i;
            let mut rng = entity_rng(spec.seed, e);
            let (states, changes) = model.sample_with(spec.timepoints - 1, &mut rng);
            let id = format!("s{:04}", e + 1);
            values.push(integrate_changes(&vec![0.0; spec.dims], &changes));
            groups.insert(id.clone(), group_codes[g].to_string());
            truth.push(TruthSequence {
                entity_id: id.clone(),
                states,
            });
            all_changes.push(changes);
            ids.push(id);
        }
    }
    let panel = Panel::from_dense(ids, (1..=spec.timepoints as i64).collect(), variables, &values)?;
    Ok(CohortDataset {
        panel,
        groups: GroupAssignment::new(groups)?,
        truth,
        changes: all_changes,
        means,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CvError::io(dir, e))
}

/// Writes `scans/scan_XXX.csv`, `manifest.csv`, `design.csv` and `ground_truth.csv` under `dir`.
pub fn write_scan_dataset(dir: &Path, data: &ScanDataset, stratum: &str) -> Result<Vec<PathBuf>> {
    let scan_dir = dir.join("scans");
    ensure_dir(&scan_dir)?;
    let mut entries = Vec::new();
    for scan in &data.scans {
        let id = &scan.entity_ids()[0];
        let rel = PathBuf::from("scans").join(format!("{id}.csv"));
        write_to_path(&dir.join(&rel), |f| write_scan(f, scan, 0))?;
        entries.push(ManifestEntry {
            scan_file: rel,
            entity_id: id.clone(),
            stratum: stratum.to_string(),
        });
    }
    let manifest = dir.join("manifest.csv");
    write_to_path(&manifest, |f| write_manifest(f, &entries))?;
    let design = dir.join("design.csv");
    write_to_path(&design, |f| write_design(f, &data.design))?;
    let truth = dir.join("ground_truth.csv");
    write_to_path(&truth, |f| write_ground_truth(f, &data.truth))?;
    Ok(vec![manifest, design, truth])
}

/// Writes `panel.csv` (scored-panel format), `groups.csv` and `ground_truth.csv` under `dir`.
pub fn write_cohort_dataset(dir: &Path, data: &CohortDataset) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let p = &data.panel;
    if p.n_variables() != QUESTIONNAIRE_VARIABLES.len() {
        return Err(invalid!("cohort export needs the 4 questionnaire variables"));
    }
    let mut records = Vec::with_capacity(p.n_entities() * p.n_timepoints());
    for (e, id) in p.entity_ids().iter().enumerate() {
        for (t, &tp) in p.timepoints().iter().enumerate() {
            records.push(ScoredRecord {
                subject_id: id.clone(),
                timepoint: tp,
                depression: p.get(e, t, 0),
                loneliness: p.get(e, t, 1),
                anxiety: p.get(e, t, 2),
                exercise: p.get(e, t, 3),
            });
        }
    }
    let panel = dir.join("panel.csv");
    write_to_path(&panel, |f| write_scored(f, &records))?;
    let groups = dir.join("groups.csv");
    write_to_path(&groups, |f| write_groups(f, &data.groups))?;
    let truth = dir.join("ground_truth.csv");
    write_to_path(&truth, |f| write_ground_truth(f, &data.truth))?;
    Ok(vec![panel, groups, truth])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::change_vectors;

    fn small_scans() -> SynthSpec {
        SynthSpec {
            n_entities: 3,
            block_len: 5,
            n_cycles: 2,
            ..SynthSpec::scans_default()
        }
    }

    #[test]
    fn scan_states_respect_block_subsets() {
        let spec = small_scans();
        let data = synth_scans(&spec).unwrap();
        assert_eq!(data.design.len(), 20);
        for seq in &data.truth {
            assert_eq!(seq.states.len(), 19);
            for (i, &s) in seq.states.iter().enumerate() {
                if data.design.labels()[i] == 1 {
                    assert!(spec.faces_states().contains(&s));
                } else {
                    assert!(spec.shapes_states().contains(&s));
                }
            }
            assert_eq!(seq.states[0], 3);
            assert_eq!(seq.states[5], 0);
        }
    }

    #[test]
    fn scan_means_are_distinct() {
        let means = scan_state_means(&SynthSpec::scans_default()).unwrap();
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                assert_ne!(means[i], means[j]);
            }
        }
        let too_many = SynthSpec {
            k: 16,
            ..SynthSpec::scans_default()
        };
        assert!(scan_state_means(&too_many).is_err());
    }

    #[test]
    fn integration_inverse() {
        let data = synth_scans(&small_scans()).unwrap();
        for (scan, changes) in data.scans.iter().zip(&data.changes) {
            let cs = change_vectors(scan).unwrap();
            for (a, b) in cs.entities()[0].vectors.iter().zip(changes) {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let a = synth_scans(&small_scans()).unwrap();
        assert_eq!(a, synth_scans(&small_scans()).unwrap());
        let other = SynthSpec {
            seed: 1,
            ..small_scans()
        };
        assert_ne!(a.changes, synth_scans(&other).unwrap().changes);

        let c = SynthSpec {
            n_entities: 5,
            ..SynthSpec::cohort_default()
        };
        assert_eq!(synth_cohort(&c).unwrap(), synth_cohort(&c).unwrap());
    }

    #[test]
    fn cohort_shapes() {
        let spec = SynthSpec {
            n_entities: 10,
            ..SynthSpec::cohort_default()
        };
        let data = synth_cohort(&spec).unwrap();
        assert_eq!(data.panel.n_entities(), 20);
        assert_eq!(data.panel.n_timepoints(), 12);
        assert_eq!(data.panel.variables()[0], "depression");
        assert!(data.truth.iter().all(|t| t.states.len() == 11 && t.states.iter().all(|&s| s < 5)));
        assert_eq!(data.groups.group_of("s0011"), Some("B"));
    }

    #[test]
    fn invalid_specs() {
        let bad = SynthSpec {
            noise_sigma: -1.0,
            ..SynthSpec::scans_default()
        };
        assert!(synth_scans(&bad).is_err());
        let bad = SynthSpec {
            transitions: vec![sticky_matrix(5, 0.6)],
            ..SynthSpec::cohort_default()
        };
        assert!(synth_cohort(&bad).is_err());
        let bad = SynthSpec {
            k: 3,
            ..SynthSpec::scans_default()
        };
        assert!(synth_scans(&bad).is_err());
    }
}
