//! Gaussian change-vector HMM: each hidden state emits a change vector from a
//! diagonal Gaussian centred on its change-state mean.
//!
//! Decoding is done in log space. Probabilities are never multiplied raw, so
//! sequences of any length are safe from underflow.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, CvError, Result};

/// Tolerance for stochastic rows when a model is constructed or loaded.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default variance floor in standardized units.
pub const DEFAULT_VAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeStateModel {
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    initial: Vec<f64>,
    log_transition: Vec<Vec<f64>>,
    log_initial: Vec<f64>,
    // Σ_d −½·log(2π v_{s,d})
    log_norm: Vec<f64>,
}

fn check_stochastic(name: &str, row: &[f64]) -> Result<()> {
    if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(invalid!("{name} has invalid probability {x}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(invalid!("{name} sums to {sum}, not 1"));
    }
    Ok(())
}

impl ChangeStateModel {
    pub fn new(
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(invalid!("model needs at least one state"));
        }
        let dim = means[0].len();
        for rows in [&means, &variances] {
            if rows.len() != k {
                return Err(CvError::Dimension {
                    expected: k,
                    got: rows.len(),
                });
            }
            if let Some(r) = rows.iter().find(|r| r.len() != dim) {
                return Err(CvError::Dimension {
                    expected: dim,
                    got: r.len(),
                });
            }
        }
        if let Some(v) = variances.iter().flatten().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid!("variances must be positive, found {v}"));
        }
        if means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(invalid!("means must be finite"));
        }
        if transition.len() != k || transition.iter().any(|r| r.len() != k) {
            return Err(invalid!("transition matrix must be {k} x {k}"));
        }
        if initial.len() != k {
            return Err(CvError::Dimension {
                expected: k,
                got: initial.len(),
            });
        }
        for (i, row) in transition.iter().enumerate() {
            check_stochastic(&format!("transition row {i}"), row)?;
        }
        check_stochastic("initial distribution", &initial)?;

        let log_transition = transition
            .iter()
            .map(|r| r.iter().map(|p| p.ln()).collect())
            .collect();
        let log_initial = initial.iter().map(|p| p.ln()).collect();
        let log_norm = variances
            .iter()
            .map(|vs| vs.iter().map(|v| -0.5 * (2.0 * PI * v).ln()).sum())
            .collect();
        Ok(Self {
            means,
            variances,
            transition,
            initial,
            log_transition,
            log_initial,
            log_norm,
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    fn check_dim(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.dim() {
            return Err(CvError::Dimension {
                expected: self.dim(),
                got: obs.len(),
            });
        }
        Ok(())
    }

    fn log_emission_unchecked(&self, state: usize, obs: &[f64]) -> f64 {
        let quad: f64 = obs
            .iter()
            .zip(&self.means[state])
            .zip(&self.variances[state])
            .map(|((o, m), v)| (o - m) * (o - m) / (2.0 * v))
            .sum();
        self.log_norm[state] - quad
    }

    /// Diagonal-Gaussian log density of `obs` under `state`.
    pub fn log_emission(&self, state: usize, obs: &[f64]) -> Result<f64> {
        if state >= self.k() {
            return Err(invalid!("state {state} out of range for K = {}", self.k()));
        }
        self.check_dim(obs)?;
        Ok(self.log_emission_unchecked(state, obs))
    }

    /// Log joint probability of a given state path and observations.
    pub fn log_joint(&self, states: &[usize], observations: &[Vec<f64>]) -> Result<f64> {
        if states.len() != observations.len() || states.is_empty() {
            return Err(invalid!(
                "path length {} does not match {} observations",
                states.len(),
                observations.len()
            ));
        }
        let mut total = 0.0;
        let mut prev: Option<usize> = None;
        for (&s, o) in states.iter().zip(observations) {
            total += match prev {
                None => self.log_initial[s],
                Some(p) => self.log_transition[p][s],
            };
            total += self.log_emission(s, o)?;
            prev = Some(s);
        }
        Ok(total)
    }

    /// Most likely hidden-state path. At every maximisation ties go to the lowest state index.
    pub fn viterbi(&self, observations: &[Vec<f64>]) -> Result<ViterbiResult> {
        if observations.is_empty() {
            return Err(invalid!("cannot decode an empty observation sequence"));
        }
        for o in observations {
            self.check_dim(o)?;
        }
        let k = self.k();
        let n = observations.len();
        let mut delta: Vec<f64> = (0..k)
            .map(|s| self.log_initial[s] + self.log_emission_unchecked(s, &observations[0]))
            .collect();
        let mut back = vec![0usize; n * k];
        let mut next = vec![0.0; k];
        for (t, obs) in observations.iter().enumerate().skip(1) {
            for (s, slot) in next.iter_mut().enumerate() {
                let mut best_r = 0;
                let mut best = delta[0] + self.log_transition[0][s];
                for (r, d) in delta.iter().enumerate().skip(1) {
                    let cand = d + self.log_transition[r][s];
                    if cand > best {
                        best = cand;
                        best_r = r;
                    }
                }
                back[t * k + s] = best_r;
                *slot = best + self.log_emission_unchecked(s, obs);
            }
            std::mem::swap(&mut delta, &mut next);
        }
        let mut last = 0;
        for (s, d) in delta.iter().enumerate() {
            if *d > delta[last] {
                last = s;
            }
        }
        let log_joint = delta[last];
        let mut states = vec![0; n];
        states[n - 1] = last;
        for t in (1..n).rev() {
            states[t - 1] = back[t * k + states[t]];
        }
        Ok(ViterbiResult { states, log_joint })
    }

    /// Draws a state path and change vectors of length `len`.
    pub fn sample(&self, len: usize, seed: u64) -> (Vec<usize>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(len, &mut rng)
    }

    pub fn sample_with<R: Rng>(&self, len: usize, rng: &mut R) -> (Vec<usize>, Vec<Vec<f64>>) {
        let mut states = Vec::with_capacity(len);
        let mut obs = Vec::with_capacity(len);
        for t in 0..len {
            let row = if t == 0 {
                &self.initial
            } else {
                &self.transition[states[t - 1]]
            };
            let s = draw_categorical(row, rng);
            states.push(s);
            obs.push(self.draw_emission(s, rng));
        }
        (states, obs)
    }

    /// One change vector from the Gaussian of `state`.
    pub fn draw_emission<R: Rng>(&self, state: usize, rng: &mut R) -> Vec<f64> {
        self.means[state]
            .iter()
            .zip(&self.variances[state])
            .map(|(m, v)| {
                let z: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * z
            })
            .collect()
    }
}

/// Inverse-CDF draw from a probability row.
pub fn draw_categorical<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; take the last state with mass
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiResult {
    pub states: Vec<usize>,
    pub log_joint: f64,
}

/// Applies change vectors cumulatively from `start`; returns `changes.len() + 1` frames.
pub fn integrate_changes(start: &[f64], changes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(changes.len() + 1);
    out.push(start.to_vec());
    for c in changes {
        let next = out
            .last()
            .unwrap()
            .iter()
            .zip(c)
            .map(|(x, d)| x + d)
            .collect();
        out.push(next);
    }
    out
}
