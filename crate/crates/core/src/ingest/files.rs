//! CSV formats consumed by the pipeline, and the writers that produce them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{invalid, CvError, Result};
use crate::ingest::panel::{DesignLabels, GroupAssignment, Panel};
use crate::ingest::scoring::{
    impute_exercise, score_anxiety, score_cesd, score_loneliness, ANXIETY_ITEMS, CESD_COLUMNS,
    CESD_ITEMS, EXERCISE_MAX, LONELINESS_ITEMS,
};

/// Variable order of a scored questionnaire panel.
pub const QUESTIONNAIRE_VARIABLES: [&str; 4] = ["depression", "loneliness", "anxiety", "exercise"];

/// One row of the raw questionnaire CSV. An instrument is `None` when any of its items is blank.
#[derive(Debug, Clone, PartialEq)]
pub struct RawQuestionnaireRecord {
    pub subject_id: String,
    pub timepoint: i64,
    pub cesd_items: Option<[u8; CESD_ITEMS]>,
    pub loneliness_items: Option<[u8; LONELINESS_ITEMS]>,
    pub anxiety_items: Option<[u8; ANXIETY_ITEMS]>,
    pub exercise_item: Option<u8>,
}

/// Derived measures for one subject at one timepoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub subject_id: String,
    pub timepoint: i64,
    pub depression: Option<f64>,
    pub loneliness: Option<f64>,
    pub anxiety: Option<f64>,
    pub exercise: Option<f64>,
}

impl ScoredRecord {
    fn values(&self) -> [Option<f64>; 4] {
        [self.depression, self.loneliness, self.anxiety, self.exercise]
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CvError::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| CvError::io(path, e))
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| invalid!("missing column '{name}'"))
}

fn row_err(row: usize, err: CvError) -> CvError {
    match err {
        CvError::Validation(message) => CvError::Row { row, message },
        other => other,
    }
}

fn parse_opt_u8(raw: &str, row: usize, name: &str) -> Result<Option<u8>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse().map(Some).map_err(|_| CvError::Row {
        row,
        message: format!("{name}: '{raw}' is not a small non-negative integer"),
    })
}

fn parse_opt_f64(raw: &str, row: usize, name: &str) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let x: f64 = raw.parse().map_err(|_| CvError::Row {
        row,
        message: format!("{name}: '{raw}' is not a number"),
    })?;
    if !x.is_finite() {
        return Err(CvError::Row {
            row,
            message: format!("{name}: non-finite value"),
        });
    }
    Ok(Some(x))
}

fn parse_i64(raw: &str, row: usize, name: &str) -> Result<i64> {
    raw.trim().parse().map_err(|_| CvError::Row {
        row,
        message: format!("{name}: '{}' is not an integer", raw.trim()),
    })
}

/// Reads all items of one instrument; `None` if every item is blank, error if only some are.
fn parse_items<const N: usize>(
    record: &csv::StringRecord,
    cols: &[usize; N],
    names: &[String; N],
    row: usize,
) -> Result<Option<[u8; N]>> {
    let mut out = [0u8; N];
    let mut blanks = 0;
    for i in 0..N {
        match parse_opt_u8(&record[cols[i]], row, &names[i])? {
            Some(v) => out[i] = v,
            None => blanks += 1,
        }
    }
    match blanks {
        0 => Ok(Some(out)),
        b if b == N => Ok(None),
        _ => Err(CvError::Row {
            row,
            message: format!("{} partially answered", names[0].trim_end_matches(char::is_numeric)),
        }),
    }
}

fn item_names<const N: usize>(prefix: &str) -> [String; N] {
    std::array::from_fn(|i| format!("{prefix}{}", i + 1))
}

/// Parses the raw questionnaire CSV. Columns are located by name; row numbers in
/// errors count the header as row 1.
pub fn read_questionnaire<R: Read>(reader: R, max_timepoint: i64) -> Result<Vec<RawQuestionnaireRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let subject = column(&headers, "subject_id")?;
    let timepoint = column(&headers, "timepoint")?;
    let cesd_names: [String; CESD_ITEMS] = CESD_COLUMNS.map(String::from);
    let lone_names: [String; LONELINESS_ITEMS] = item_names("lone_");
    let anx_names: [String; ANXIETY_ITEMS] = item_names("anx_");
    let mut cesd = [0; CESD_ITEMS];
    for (slot, name) in cesd.iter_mut().zip(&cesd_names) {
        *slot = column(&headers, name)?;
    }
    let mut lone = [0; LONELINESS_ITEMS];
    for (slot, name) in lone.iter_mut().zip(&lone_names) {
        *slot = column(&headers, name)?;
    }
    let mut anx = [0; ANXIETY_ITEMS];
    for (slot, name) in anx.iter_mut().zip(&anx_names) {
        *slot = column(&headers, name)?;
    }
    let exercise = column(&headers, "exercise")?;

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let tp = parse_i64(&record[timepoint], row, "timepoint")?;
        if !(0..=max_timepoint).contains(&tp) {
            return Err(CvError::Row {
                row,
                message: format!("timepoint {tp} outside 0..={max_timepoint}"),
            });
        }
        let raw = RawQuestionnaireRecord {
            subject_id: record[subject].to_string(),
            timepoint: tp,
            cesd_items: parse_items(&record, &cesd, &cesd_names, row)?,
            loneliness_items: parse_items(&record, &lone, &lone_names, row)?,
            anxiety_items: parse_items(&record, &anx, &anx_names, row)?,
            exercise_item: parse_opt_u8(&record[exercise], row, "exercise")?,
        };
        if raw.subject_id.is_empty() {
            return Err(CvError::Row {
                row,
                message: "empty subject_id".into(),
            });
        }
        // range checks
        if let Some(items) = &raw.cesd_items {
            score_cesd(items).map_err(|e| row_err(row, e))?;
        }
        if let Some(items) = &raw.loneliness_items {
            score_loneliness(items).map_err(|e| row_err(row, e))?;
        }
        if let Some(items) = &raw.anxiety_items {
            score_anxiety(items).map_err(|e| row_err(row, e))?;
        }
        if let Some(x) = raw.exercise_item {
            if x > EXERCISE_MAX {
                return Err(CvError::Row {
                    row,
                    message: format!("exercise must be in 0..={EXERCISE_MAX}, got {x}"),
                });
            }
        }
        out.push(raw);
    }
    if out.is_empty() {
        return Err(invalid!("questionnaire file has no data rows"));
    }
    Ok(out)
}

/// Output of [`score_records`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringOutput {
    pub records: Vec<ScoredRecord>,
    /// Subjects whose exercise series needed a leading or trailing fill.
    pub edge_filled: Vec<String>,
    /// Subjects with no observed exercise at all; their exercise stays missing.
    pub no_exercise: Vec<String>,
}

/// Scores every record and imputes exercise within each subject's series.
/// Output is sorted by subject then timepoint.
pub fn score_records(records: &[RawQuestionnaireRecord]) -> Result<ScoringOutput> {
    let mut by_subject: BTreeMap<&str, Vec<&RawQuestionnaireRecord>> = BTreeMap::new();
    for r in records {
        by_subject.entry(&r.subject_id).or_default().push(r);
    }
    let mut out = ScoringOutput {
        records: Vec::with_capacity(records.len()),
        edge_filled: Vec::new(),
        no_exercise: Vec::new(),
    };
    for (subject, mut rows) in by_subject {
        rows.sort_by_key(|r| r.timepoint);
        if let Some(w) = rows.windows(2).find(|w| w[0].timepoint == w[1].timepoint) {
            return Err(invalid!(
                "duplicate row for subject '{subject}' at timepoint {}",
                w[0].timepoint
            ));
        }
        let exercise: Vec<Option<f64>> = rows
            .iter()
            .map(|r| r.exercise_item.map(f64::from))
            .collect();
        let exercise = match impute_exercise(&exercise) {
            Ok(imputed) => {
                if imputed.edge_filled {
                    out.edge_filled.push(subject.to_string());
                }
                imputed.values.into_iter().map(Some).collect()
            }
            Err(_) => {
                log::warn!("subject '{subject}' has no exercise responses");
                out.no_exercise.push(subject.to_string());
                exercise
            }
        };
        for (r, ex) in rows.iter().zip(exercise) {
            out.records.push(ScoredRecord {
                subject_id: subject.to_string(),
                timepoint: r.timepoint,
                depression: r
                    .cesd_items
                    .map(|i| score_cesd(&i).map(|s| f64::from(s.score)))
                    .transpose()?,
                loneliness: r
                    .loneliness_items
                    .map(|i| score_loneliness(&i).map(f64::from))
                    .transpose()?,
                anxiety: r.anxiety_items.map(|i| score_anxiety(&i)).transpose()?,
                exercise: ex,
            });
        }
    }
    Ok(out)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `subject_id,timepoint,depression,loneliness,anxiety,exercise`.
pub fn write_scored<W: Write>(writer: W, records: &[ScoredRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["subject_id", "timepoint"].iter().chain(&QUESTIONNAIRE_VARIABLES))?;
    for r in records {
        let mut row = vec![r.subject_id.clone(), r.timepoint.to_string()];
        row.extend(r.values().iter().map(|v| fmt_opt(*v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CvError::io("<scored csv>", e))?;
    Ok(())
}

pub fn read_scored<R: Read>(reader: R) -> Result<Vec<ScoredRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let subject = column(&headers, "subject_id")?;
    let timepoint = column(&headers, "timepoint")?;
    let mut cols = [0; 4];
    for (slot, name) in cols.iter_mut().zip(QUESTIONNAIRE_VARIABLES) {
        *slot = column(&headers, name)?;
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let v = |k: usize| parse_opt_f64(&record[cols[k]], row, QUESTIONNAIRE_VARIABLES[k]);
        out.push(ScoredRecord {
            subject_id: record[subject].to_string(),
            timepoint: parse_i64(&record[timepoint], row, "timepoint")?,
            depression: v(0)?,
            loneliness: v(1)?,
            anxiety: v(2)?,
            exercise: v(3)?,
        });
    }
    if out.is_empty() {
        return Err(invalid!("scored panel file has no data rows"));
    }
    Ok(out)
}

/// Controls for [`build_panel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelOptions {
    pub complete_case: bool,
    pub exclude_baseline: bool,
    pub baseline_timepoint: i64,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self {
            complete_case: true,
            exclude_baseline: true,
            baseline_timepoint: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelBuild {
    pub panel: Panel,
    /// Entities removed by complete-case filtering.
    pub dropped: Vec<String>,
}

/// Assembles scored records into a subject × timepoint × measure panel.
pub fn build_panel(records: &[ScoredRecord], opts: &PanelOptions) -> Result<PanelBuild> {
    if records.is_empty() {
        return Err(invalid!("no records to build a panel from"));
    }
    let records: Vec<&ScoredRecord> = records
        .iter()
        .filter(|r| !(opts.exclude_baseline && r.timepoint == opts.baseline_timepoint))
        .collect();
    if records.is_empty() {
        return Err(invalid!("no records left after baseline exclusion"));
    }
    let subjects: BTreeSet<&str> = records.iter().map(|r| r.subject_id.as_str()).collect();
    let timepoints: BTreeSet<i64> = records.iter().map(|r| r.timepoint).collect();
    let entity_index: HashMap<&str, usize> =
        subjects.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let tp_index: HashMap<i64, usize> = timepoints.iter().enumerate().map(|(i, t)| (*t, i)).collect();

    let mut panel = Panel::empty(
        subjects.iter().map(|s| s.to_string()).collect(),
        timepoints.iter().copied().collect(),
        QUESTIONNAIRE_VARIABLES.map(String::from).to_vec(),
    )?;
    let mut seen = BTreeSet::new();
    for r in &records {
        if !seen.insert((r.subject_id.as_str(), r.timepoint)) {
            return Err(invalid!(
                "duplicate row for subject '{}' at timepoint {}",
                r.subject_id,
                r.timepoint
            ));
        }
        let e = entity_index[r.subject_id.as_str()];
        let t = tp_index[&r.timepoint];
        for (v, value) in r.values().into_iter().enumerate() {
            panel.set(e, t, v, value);
        }
    }

    let mut dropped = Vec::new();
    if opts.complete_case {
        let keep: Vec<usize> = (0..panel.n_entities())
            .filter(|&e| {
                let missing = panel.entity_has_missing(e);
                if missing {
                    dropped.push(panel.entity_ids()[e].clone());
                }
                !missing
            })
            .collect();
        panel = panel.select_entities(&keep);
        if panel.n_entities() == 0 {
            return Err(invalid!("no entity has complete data"));
        }
    }
    Ok(PanelBuild { panel, dropped })
}

/// Reads one scan (rows = TRs, columns = ROIs) into a single-entity panel.
///
/// When `rois` is given only those columns are kept, in that order.
pub fn read_scan<R: Read>(reader: R, entity_id: &str, rois: Option<&[String]>) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (cols, names): (Vec<usize>, Vec<String>) = match rois {
        Some(rois) => {
            let cols = rois.iter().map(|r| column(&headers, r)).collect::<Result<_>>()?;
            (cols, rois.to_vec())
        }
        None => (0..headers.len()).zip(headers.iter().map(String::from)).unzip(),
    };
    if names.is_empty() {
        return Err(invalid!("scan '{entity_id}' has no ROI columns"));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let values = cols
            .iter()
            .zip(&names)
            .map(|(&c, n)| {
                parse_opt_f64(&record[c], row, n)?.ok_or_else(|| CvError::Row {
                    row,
                    message: format!("{n}: missing value"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(invalid!("scan '{entity_id}' has no rows"));
    }
    let tps = (0..rows.len() as i64).collect();
    Panel::from_dense(vec![entity_id.to_string()], tps, names, &[rows])
}

pub fn write_scan<W: Write>(writer: W, panel: &Panel, entity: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(panel.variables())?;
    for t in 0..panel.n_timepoints() {
        let row: Vec<String> = (0..panel.n_variables())
            .map(|v| fmt_opt(panel.get(entity, t, v)))
            .collect();
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CvError::io("<scan csv>", e))?;
    Ok(())
}

pub fn read_design<R: Read>(reader: R) -> Result<DesignLabels> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let col = column(&rdr.headers()?.clone(), "condition")?;
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let label = parse_opt_u8(&record[col], row, "condition")?.ok_or_else(|| CvError::Row {
            row,
            message: "condition: missing value".into(),
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(invalid!("design file has no rows"));
    }
    DesignLabels::new(labels)
}

pub fn write_design<W: Write>(writer: W, design: &DesignLabels) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["condition"])?;
    for l in design.labels() {
        w.write_record([l.to_string()])?;
    }
    w.flush().map_err(|e| CvError::io("<design csv>", e))?;
    Ok(())
}

pub fn read_groups<R: Read>(reader: R) -> Result<GroupAssignment> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let entity = column(&headers, "entity_id")?;
    let group = column(&headers, "group")?;
    let mut map = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if map
            .insert(record[entity].to_string(), record[group].to_string())
            .is_some()
        {
            return Err(CvError::Row {
                row: i + 2,
                message: format!("entity '{}' listed twice", &record[entity]),
            });
        }
    }
    GroupAssignment::new(map)
}

pub fn write_groups<W: Write>(writer: W, groups: &GroupAssignment) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["entity_id", "group"])?;
    for (e, g) in groups.iter() {
        w.write_record([e, g])?;
    }
    w.flush().map_err(|e| CvError::io("<group csv>", e))?;
    Ok(())
}

/// One row of a scan manifest (`scan_file,entity_id,stratum`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub scan_file: PathBuf,
    pub entity_id: String,
    pub stratum: String,
}

/// Reads a manifest. Relative scan paths are resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    let file = column(&headers, "scan_file")?;
    let entity = column(&headers, "entity_id")?;
    let stratum = column(&headers, "stratum")?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let entity_id = record[entity].to_string();
        if !seen.insert(entity_id.clone()) {
            return Err(CvError::Row {
                row: i + 2,
                message: format!("scan entity '{entity_id}' listed twice"),
            });
        }
        out.push(ManifestEntry {
            scan_file: base.join(&record[file]),
            entity_id,
            stratum: record[stratum].to_string(),
        });
    }
    if out.is_empty() {
        return Err(invalid!("manifest {} has no rows", path.display()));
    }
    Ok(out)
}

pub fn write_manifest<W: Write>(writer: W, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scan_file", "entity_id", "stratum"])?;
    for e in entries {
        w.write_record([
            e.scan_file.to_string_lossy().as_ref(),
            e.entity_id.as_str(),
            e.stratum.as_str(),
        ])?;
    }
    w.flush().map_err(|e| CvError::io("<manifest csv>", e))?;
    Ok(())
}

/// Loads every scan listed in a manifest, optionally restricted to one stratum.
/// All scans must share the same ROI set.
pub fn load_scans(
    manifest: &Path,
    stratum: Option<&str>,
    rois: Option<&[String]>,
) -> Result<Vec<Panel>> {
    let entries = read_manifest(manifest)?;
    let mut scans = Vec::new();
    for entry in entries
        .iter()
        .filter(|e| stratum.is_none_or(|s| e.stratum == s))
    {
        let scan = read_scan(open(&entry.scan_file)?, &entry.entity_id, rois)?;
        if let Some(first) = scans.first() {
            let first: &Panel = first;
            if first.variables() != scan.variables() {
                return Err(invalid!(
                    "scan '{}' has ROI columns {:?}, expected {:?}",
                    entry.entity_id,
                    scan.variables(),
                    first.variables()
                ));
            }
        }
        scans.push(scan);
    }
    if scans.is_empty() {
        return Err(invalid!(
            "no scans in {} match stratum {:?}",
            manifest.display(),
            stratum
        ));
    }
    Ok(scans)
}

/// Helper for writers that target a path.
pub fn write_to_path(path: &Path, f: impl FnOnce(File) -> Result<()>) -> Result<()> {
    f(create(path)?)
}

/// Helper for readers that take a path.
pub fn read_from_path<T>(path: &Path, f: impl FnOnce(File) -> Result<T>) -> Result<T> {
    f(open(path)?)
}
