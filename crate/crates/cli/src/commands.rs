use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use cvhmm::align::{align_design, condition_curve, roi_curve, CurveTable, StateConditionMap};
use cvhmm::config::{ConfigOverrides, Mode, RunConfig, RunStamp};
use cvhmm::decode::{by_provenance, read_sequences, write_sequences, DecoderRegistry};
use cvhmm::ingest::{
    build_panel, load_scans, read_design, read_from_path, read_groups, read_questionnaire, read_scored,
    score_records, write_scored, write_to_path, Panel, PanelOptions,
};
use cvhmm::pipeline::{fit_panels, ModelFile, Standardization};
use cvhmm::states::{DecodedSequence, Provenance};
use cvhmm::stats::{
    compare_groups, condition_effect_size, enhancement_report, transition_table, write_effect_sizes,
    EffectSizeRow, EnhancementReport, TransitionReport,
};
use cvhmm::synth::{
    cyclic_matrix, sticky_matrix, synth_cohort, synth_scans, write_cohort_dataset, write_scan_dataset, SynthSpec,
};
use cvhmm::{CvError, Result};

use crate::args::{Cli, Command, Global, StatsCommand, SynthArgs, SynthCommand};

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Score { input, output } => score(g, &input, &output),
        Command::Fit { input, stratum, output } => fit(g, &input, stratum, &output),
        Command::Decode {
            model,
            input,
            methods,
            stratum,
            output,
        } => decode(g, &model, &input, &methods, stratum, &output),
        Command::Align {
            sequences,
            design,
            manifest,
            stratum,
            alignment,
            lag,
            output,
            map_output,
        } => {
            let local = ConfigOverrides {
                stratum,
                alignment: alignment.map(Into::into),
                lag,
                ..Default::default()
            };
            align(g, local, &sequences, &design, manifest.as_deref(), &output, &map_output)
        }
        Command::Stats(StatsCommand::EffectSize { curves, stratum, output }) => {
            effect_size(g, &curves, stratum, &output)
        }
        Command::Stats(StatsCommand::Transitions {
            sequences,
            groups,
            grouping,
            output,
        }) => transitions(g, &sequences, &groups, &grouping, &output),
        Command::Synth(cmd) => synth(g, cmd),
    }
}

fn resolve(global: &Global, local: ConfigOverrides, default_mode: Mode) -> Result<RunConfig> {
    let file = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CvError::io(path, e))?;
            ConfigOverrides::from_toml_str(&text)?
        }
        None => ConfigOverrides::default(),
    };
    file.merge(global.overrides()).merge(local).resolve(default_mode)
}

fn out_path(global: &Global, name: &Path) -> Result<PathBuf> {
    fs::create_dir_all(&global.out_dir).map_err(|e| CvError::io(&global.out_dir, e))?;
    Ok(global.out_dir.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CvError::io(path, e))
}

/// Writes `<file>.meta.json` beside a CSV output.
fn write_meta(csv: &Path, command: &str, config: &RunConfig, extra: Value) -> Result<()> {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.json");
    let stamp = RunStamp::new(config);
    write_json(
        Path::new(&name),
        &json!({
            "command": command,
            "config": stamp.config,
            "config_hash": stamp.config_hash,
            "details": extra,
        }),
    )
}

fn score(g: &Global, input: &Path, output: &Path) -> Result<()> {
    let cfg = resolve(g, ConfigOverrides::default(), Mode::Questionnaire)?;
    let raw = read_from_path(input, |f| read_questionnaire(f, cfg.max_timepoint))?;
    let scored = score_records(&raw)?;
    for s in &scored.no_exercise {
        log::warn!("subject '{s}' has no exercise responses; exercise left missing");
    }
    let path = out_path(g, output)?;
    write_to_path(&path, |f| write_scored(f, &scored.records))?;
    write_meta(
        &path,
        "score",
        &cfg,
        json!({
            "records": scored.records.len(),
            "exercise_edge_fill": "nearest observed value",
            "edge_filled": scored.edge_filled,
            "no_exercise": scored.no_exercise,
        }),
    )
}

fn load_input(input: &Path, cfg: &RunConfig) -> Result<Vec<Panel>> {
    match cfg.mode {
        Mode::Questionnaire => {
            let records = read_from_path(input, read_scored)?;
            let built = build_panel(
                &records,
                &PanelOptions {
                    complete_case: cfg.complete_case,
                    exclude_baseline: cfg.exclude_baseline,
                    baseline_timepoint: cfg.baseline_timepoint,
                },
            )?;
            if !built.dropped.is_empty() {
                log::warn!("complete-case filter dropped {} subjects", built.dropped.len());
            }
            Ok(vec![built.panel])
        }
        Mode::Fmri => {
            let rois = (!cfg.rois.is_empty()).then_some(cfg.rois.as_slice());
            load_scans(input, cfg.stratum.as_deref(), rois)
        }
    }
}

fn fit(g: &Global, input: &Path, stratum: Option<String>, output: &Path) -> Result<()> {
    let local = ConfigOverrides {
        stratum,
        ..Default::default()
    };
    let cfg = resolve(g, local, Mode::Fmri)?;
    let panels = load_input(input, &cfg)?;
    let fit = fit_panels(&panels, &cfg)?;
    if !fit.states.converged {
        log::warn!("k-means reached max_iter = {} without settling", cfg.max_iter);
    }
    let path = out_path(g, output)?;
    write_to_path(&path, |f| fit.file.write(f))
}

fn read_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| CvError::io(path, e))?;
    ModelFile::from_json(&text)
}

fn decode(
    g: &Global,
    model: &Path,
    input: &Path,
    methods: &[String],
    stratum: Option<String>,
    output: &Path,
) -> Result<()> {
    let file = read_model(model)?;
    let local = ConfigOverrides {
        stratum,
        k: Some(file.k),
        ..Default::default()
    };
    let cfg = resolve(g, local, file.metadata.mode)?;
    if cfg.mode != file.metadata.mode {
        return Err(CvError::Validation(format!(
            "model was fitted in {:?} mode, run is configured for {:?}",
            file.metadata.mode, cfg.mode
        )));
    }
    let registry = DecoderRegistry::builtin();
    let panels = load_input(input, &cfg)?;
    let mut sequences = Vec::new();
    for method in methods {
        sequences.extend(cvhmm::pipeline::decode_panels(&file, &panels, method, &registry)?);
    }
    let path = out_path(g, output)?;
    write_to_path(&path, |f| write_sequences(f, &sequences))?;
    write_meta(
        &path,
        "decode",
        &cfg,
        json!({
            "model": model,
            "model_config_hash": file.metadata.stamp.config_hash,
            "methods": methods,
            "entities": panels.iter().map(Panel::n_entities).sum::<usize>(),
        }),
    )
}

#[derive(Serialize)]
struct MapFile {
    alignment: cvhmm::align::Alignment,
    lag: usize,
    maps: BTreeMap<String, StateConditionMap>,
    #[serde(flatten)]
    stamp: RunStamp,
}

fn align(
    g: &Global,
    local: ConfigOverrides,
    sequences: &Path,
    design: &Path,
    manifest: Option<&Path>,
    output: &Path,
    map_output: &Path,
) -> Result<()> {
    let cfg = resolve(g, local, Mode::Fmri)?;
    let seqs = read_from_path(sequences, read_sequences)?;
    let design = align_design(&read_from_path(design, read_design)?, cfg.alignment, cfg.lag)?;
    let mut maps = BTreeMap::new();
    let mut table = CurveTable {
        design: design.labels().to_vec(),
        ..Default::default()
    };
    for prov in [Provenance::Viterbi, Provenance::Kmeans] {
        let subset = by_provenance(&seqs, prov);
        if subset.is_empty() {
            continue;
        }
        let (map, curve) = condition_curve(&subset, &design, cfg.k)?;
        match prov {
            Provenance::Viterbi => table.viterbi = Some(curve),
            Provenance::Kmeans => table.kmeans = Some(curve),
        }
        maps.insert(prov.as_str().to_string(), map);
    }
    if let Some(manifest) = manifest {
        let rois = (!cfg.rois.is_empty()).then_some(cfg.rois.as_slice());
        let scans = load_scans(manifest, cfg.stratum.as_deref(), rois)?;
        let standardization = if cfg.standardize {
            Standardization::PerEntity
        } else {
            Standardization::None
        };
        let scans = scans
            .iter()
            .map(|s| standardization.apply(s))
            .collect::<Result<Vec<_>>>()?;
        let raw = roi_curve(&scans, &cfg.signal_rois, cfg.alignment)?;
        if raw.len() != design.len() {
            return Err(CvError::Dimension {
                expected: design.len(),
                got: raw.len(),
            });
        }
        table.raw = Some(raw);
    }
    let path = out_path(g, output)?;
    write_to_path(&path, |f| table.write_csv(f))?;
    write_meta(&path, "align", &cfg, json!({ "sequences": sequences }))?;
    write_json(
        &out_path(g, map_output)?,
        &MapFile {
            alignment: cfg.alignment,
            lag: cfg.lag,
            maps,
            stamp: RunStamp::new(&cfg),
        },
    )
}

fn effect_size(g: &Global, curves: &Path, stratum: Option<String>, output: &Path) -> Result<()> {
    let local = ConfigOverrides {
        stratum,
        ..Default::default()
    };
    let cfg = resolve(g, local, Mode::Fmri)?;
    let table = read_from_path(curves, CurveTable::read_csv)?;
    let label = cfg.stratum.clone().unwrap_or_else(|| "all".into());
    let mut rows = Vec::new();
    for (method, curve) in [("viterbi", &table.viterbi), ("kmeans", &table.kmeans), ("raw", &table.raw)] {
        if let Some(curve) = curve {
            let e = condition_effect_size(curve, &table.design)?;
            rows.push(EffectSizeRow {
                stratum: label.clone(),
                method: method.into(),
                d: e.d,
                n_faces: e.n_faces,
                n_shapes: e.n_shapes,
            });
        }
    }
    if rows.is_empty() {
        return Err(CvError::Validation("curve file has no curves".into()));
    }
    let path = out_path(g, output)?;
    write_to_path(&path, |f| write_effect_sizes(f, &rows))?;
    write_meta(&path, "stats effect-size", &cfg, json!({ "curves": curves }))
}

#[derive(Serialize)]
struct TransitionsFile {
    reports: Vec<TransitionReport>,
    enhancement: Option<EnhancementReport>,
    #[serde(flatten)]
    stamp: RunStamp,
}

fn transitions(g: &Global, sequences: &Path, groups: &Path, grouping: &str, output: &Path) -> Result<()> {
    let cfg = resolve(g, ConfigOverrides::default(), Mode::Questionnaire)?;
    let seqs = read_from_path(sequences, read_sequences)?;
    let groups = read_from_path(groups, read_groups)?;
    let codes = groups.codes().clone();
    let mut reports = Vec::new();
    let mut comparisons = BTreeMap::new();
    for prov in [Provenance::Viterbi, Provenance::Kmeans] {
        let subset = by_provenance(&seqs, prov);
        if subset.is_empty() {
            continue;
        }
        let mut split: [Vec<DecodedSequence>; 2] = [Vec::new(), Vec::new()];
        for s in subset {
            let code = groups.group_of(&s.entity_id).ok_or_else(|| {
                CvError::Validation(format!("entity '{}' has no group assignment", s.entity_id))
            })?;
            split[usize::from(code == codes[1])].push(s);
        }
        let cmp = compare_groups(&transition_table(&split[0], cfg.k)?, &transition_table(&split[1], cfg.k)?)?;
        for w in &cmp.warnings {
            log::warn!("{}: {w}", prov.as_str());
        }
        reports.push(TransitionReport::new(&cmp, cfg.k, grouping, &codes, prov.as_str()));
        comparisons.insert(prov, cmp);
    }
    let enhancement = match (comparisons.get(&Provenance::Viterbi), comparisons.get(&Provenance::Kmeans)) {
        (Some(v), Some(k)) => Some(enhancement_report(v, k)),
        _ => None,
    };
    write_json(
        &out_path(g, output)?,
        &TransitionsFile {
            reports,
            enhancement,
            stamp: RunStamp::new(&cfg),
        },
    )
}

fn apply_common(spec: &mut SynthSpec, common: &SynthArgs, cfg: &RunConfig) {
    spec.seed = cfg.seed;
    spec.k = cfg.k;
    if let Some(n) = common.n {
        spec.n_entities = n;
    }
    if let Some(s) = common.noise_sigma {
        spec.noise_sigma = s;
    }
    if let Some(s) = common.separation {
        spec.separation = s;
    }
}

fn synth(g: &Global, cmd: SynthCommand) -> Result<()> {
    let (cfg, spec, written) = match cmd {
        SynthCommand::Scans {
            common,
            signal_amplitude,
            block_len,
            n_cycles,
            stratum,
        } => {
            let cfg = resolve(g, ConfigOverrides::default(), Mode::Fmri)?;
            let mut spec = SynthSpec::scans_default();
            apply_common(&mut spec, &common, &cfg);
            if let Some(a) = signal_amplitude {
                spec.signal_amplitude = a;
            }
            if let Some(b) = block_len {
                spec.block_len = b;
            }
            if let Some(c) = n_cycles {
                spec.n_cycles = c;
            }
            let data = synth_scans(&spec)?;
            let written = write_scan_dataset(&out_path(g, Path::new(""))?, &data, &stratum)?;
            (cfg, spec, written)
        }
        SynthCommand::Cohort {
            common,
            timepoints,
            null,
        } => {
            let cfg = resolve(g, ConfigOverrides::default(), Mode::Questionnaire)?;
            let mut spec = SynthSpec::cohort_default();
            apply_common(&mut spec, &common, &cfg);
            if let Some(t) = timepoints {
                spec.timepoints = t;
            }
            spec.transitions = if null {
                vec![sticky_matrix(spec.k, 0.6), sticky_matrix(spec.k, 0.6)]
            } else {
                vec![sticky_matrix(spec.k, 0.6), cyclic_matrix(spec.k, 0.6)]
            };
            let data = synth_cohort(&spec)?;
            let written = write_cohort_dataset(&out_path(g, Path::new(""))?, &data)?;
            (cfg, spec, written)
        }
    };
    for path in &written {
        log::info!("wrote {}", path.display());
    }
    write_json(
        &out_path(g, Path::new("synth.json"))?,
        &json!({ "spec": spec, "config": cfg, "config_hash": cfg.hash() }),
    )
}
