//! State decoders, registered by name and chosen at run time.
//!
//! A decoder turns each entity's change vectors into a hidden-state sequence
//! under a fitted [`ChangeStateModel`]. Two ship by default: `kmeans`
//! (nearest change-state centroid, per vector) and `viterbi` (jointly most
//! likely path under the HMM).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{invalid, CvError, Result};
use crate::hmm::ChangeStateModel;
use crate::preprocess::ChangeSeries;
use crate::states::{nearest, DecodedSequence, Provenance};

pub trait StateDecoder: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    fn provenance(&self) -> Provenance;

    fn decode_entity(&self, model: &ChangeStateModel, observations: &[Vec<f64>]) -> Result<Vec<usize>>;

    fn decode(&self, model: &ChangeStateModel, series: &ChangeSeries) -> Result<Vec<DecodedSequence>> {
        if series.dim() != model.dim() {
            return Err(CvError::Dimension {
                expected: model.dim(),
                got: series.dim(),
            });
        }
        series
            .entities()
            .iter()
            .map(|ent| {
                Ok(DecodedSequence {
                    entity_id: ent.entity_id.clone(),
                    states: self.decode_entity(model, &ent.vectors)?,
                    provenance: self.provenance(),
                })
            })
            .collect()
    }
}

/// Nearest centroid, one vector at a time.
#[derive(Debug, Default, Clone, Copy)]
pub struct KMeansDecoder;

impl StateDecoder for KMeansDecoder {
    fn name(&self) -> &'static str {
        "kmeans"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Kmeans
    }

    fn decode_entity(&self, model: &ChangeStateModel, observations: &[Vec<f64>]) -> Result<Vec<usize>> {
        observations
            .iter()
            .map(|o| {
                if o.len() != model.dim() {
                    return Err(CvError::Dimension {
                        expected: model.dim(),
                        got: o.len(),
                    });
                }
                Ok(nearest(o, model.means()).0)
            })
            .collect()
    }
}

/// Viterbi path under the HMM.
#[derive(Debug, Default, Clone, Copy)]
pub struct ViterbiDecoder;

impl StateDecoder for ViterbiDecoder {
    fn name(&self) -> &'static str {
        "viterbi"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Viterbi
    }

    fn decode_entity(&self, model: &ChangeStateModel, observations: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(model.viterbi(observations)?.states)
    }
}

/// Name → decoder map.
#[derive(Clone, Default)]
pub struct DecoderRegistry {
    decoders: BTreeMap<&'static str, Arc<dyn StateDecoder>>,
}

impl DecoderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `kmeans` and `viterbi`.
    pub fn builtin() -> Self {
        let mut reg = Self::new();
        reg.register(KMeansDecoder).expect("fresh registry");
        reg.register(ViterbiDecoder).expect("fresh registry");
        reg
    }

    pub fn register<D: StateDecoder + 'static>(&mut self, decoder: D) -> Result<()> {
        let name = decoder.name();
        if self.decoders.contains_key(name) {
            return Err(invalid!("decoder '{name}' is already registered"));
        }
        self.decoders.insert(name, Arc::new(decoder));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn StateDecoder>> {
        self.decoders.get(name).cloned().ok_or_else(|| {
            invalid!(
                "unknown decoder '{name}' (available: {})",
                self.names().join(", ")
            )
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.decoders.keys().copied().collect()
    }
}

impl std::fmt::Debug for DecoderRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecoderRegistry")
            .field("decoders", &self.names())
            .finish()
    }
}

/// Writes `entity_id,t_index,state,provenance`.
pub fn write_sequences<W: Write>(writer: W, sequences: &[DecodedSequence]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["entity_id", "t_index", "state", "provenance"])?;
    for seq in sequences {
        for (t, s) in seq.states.iter().enumerate() {
            w.write_record([
                seq.entity_id.as_str(),
                &t.to_string(),
                &s.to_string(),
                seq.provenance.as_str(),
            ])?;
        }
    }
    w.flush().map_err(|e| CvError::io("<sequences csv>", e))?;
    Ok(())
}

/// Reads a sequences CSV. Entities keep their first-appearance order within each
/// provenance; `t_index` must run 0, 1, 2, … per entity.
pub fn read_sequences<R: Read>(reader: R) -> Result<Vec<DecodedSequence>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid!("missing column '{name}'"))
    };
    let (entity, t_index, state, provenance) =
        (col("entity_id")?, col("t_index")?, col("state")?, col("provenance")?);
    let mut out: Vec<DecodedSequence> = Vec::new();
    let mut index: BTreeMap<(Provenance, String), usize> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let parse = |c: usize, name: &str| -> Result<usize> {
            record[c].parse().map_err(|_| CvError::Row {
                row,
                message: format!("{name}: '{}' is not a non-negative integer", &record[c]),
            })
        };
        let prov: Provenance = record[provenance].parse().map_err(|e: CvError| CvError::Row {
            row,
            message: e.to_string(),
        })?;
        let key = (prov, record[entity].to_string());
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            out.push(DecodedSequence {
                entity_id: key.1.clone(),
                states: Vec::new(),
                provenance: prov,
            });
            out.len() - 1
        });
        let t = parse(t_index, "t_index")?;
        if t != out[slot].states.len() {
            return Err(CvError::Row {
                row,
                message: format!(
                    "entity '{}' expected t_index {}, got {t}",
                    key.1,
                    out[slot].states.len()
                ),
            });
        }
        out[slot].states.push(parse(state, "state")?);
    }
    if out.is_empty() {
        return Err(invalid!("sequences file has no rows"));
    }
    Ok(out)
}

/// Sequences of one provenance, in file order.
pub fn by_provenance(sequences: &[DecodedSequence], provenance: Provenance) -> Vec<DecodedSequence> {
    sequences
        .iter()
        .filter(|s| s.provenance == provenance)
        .cloned()
        .collect()
}
