use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cvhmm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvhmm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = cvhmm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn scan_pipeline_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "data", "--seed", "4", "synth", "scans", "--n", "25"]);
    ok(d, &["--out-dir", "run", "--seed", "4", "fit", "--input", "data/manifest.csv"]);
    ok(
        d,
        &[
            "--out-dir", "run", "decode", "--model", "run/model.json", "--input", "data/manifest.csv",
            "--method", "viterbi", "--method", "kmeans",
        ],
    );
    ok(
        d,
        &[
            "--out-dir", "run", "align", "--sequences", "run/sequences.csv", "--design", "data/design.csv",
            "--manifest", "data/manifest.csv",
        ],
    );
    ok(d, &["--out-dir", "run", "stats", "effect-size", "--curves", "run/curves.csv", "--stratum", "day1"]);

    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("run/model.json")).unwrap()).unwrap();
    assert_eq!(model["K"], 7);
    assert_eq!(model["metadata"]["source"], "kmeans-init");
    assert_eq!(model["metadata"]["config"]["seed"], 4);
    assert_eq!(model["metadata"]["config_hash"].as_str().unwrap().len(), 64);

    let seqs = fs::read_to_string(d.join("run/sequences.csv")).unwrap();
    assert!(seqs.starts_with("entity_id,t_index,state,provenance\n"));
    assert_eq!(seqs.lines().count(), 1 + 2 * 25 * 119);

    let curves = fs::read_to_string(d.join("run/curves.csv")).unwrap();
    assert!(curves.starts_with("t_index,design,viterbi_mean,kmeans_mean,raw_mean\n"));
    let map: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("run/state_map.json")).unwrap()).unwrap();
    assert_eq!(map["alignment"], "t_from");
    assert_eq!(map["maps"]["viterbi"]["conditions"].as_array().unwrap().len(), 7);

    let effects = fs::read_to_string(d.join("run/effect_sizes.csv")).unwrap();
    let lines: Vec<&str> = effects.lines().collect();
    assert_eq!(lines[0], "stratum,method,d,n_faces,n_shapes");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("day1,viterbi,"));
    assert!(d.join("run/effect_sizes.csv.meta.json").exists());
}

#[test]
fn cohort_transitions_report() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "data", "--seed", "2", "synth", "cohort", "--n", "80"]);
    ok(d, &["--mode", "questionnaire", "--out-dir", "run", "fit", "--input", "data/panel.csv"]);
    ok(
        d,
        &[
            "--out-dir", "run", "decode", "--model", "run/model.json", "--input", "data/panel.csv",
            "--method", "viterbi", "--method", "kmeans",
        ],
    );
    ok(
        d,
        &[
            "--out-dir", "run", "stats", "transitions", "--sequences", "run/sequences.csv", "--groups",
            "data/groups.csv", "--grouping", "arm",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("run/transitions.json")).unwrap()).unwrap();
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r["grouping"], "arm");
        assert_eq!(r["residuals"].as_array().unwrap().len(), 2);
        assert_eq!(r["residuals"][0].as_array().unwrap().len(), 5);
        let v = r["cramers_v"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
    assert!(report["enhancement"]["v_viterbi"].is_number());
    assert_eq!(report["config"]["mode"], "questionnaire");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "data", "--seed", "9", "synth", "scans", "--n", "12"]);
    let files = ["model.json", "sequences.csv", "sequences.csv.meta.json"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        ok(d, &["--out-dir", "run", "--seed", "9", "fit", "--input", "data/manifest.csv"]);
        ok(d, &["--out-dir", "run", "decode", "--model", "run/model.json", "--input", "data/manifest.csv"]);
        runs.push(files.map(|f| fs::read(d.join("run").join(f)).unwrap()));
    }
    for (i, file) in files.iter().enumerate() {
        assert_eq!(runs[0][i], runs[1][i], "{file} differs");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "data", "synth", "cohort", "--n", "40"]);
    fs::write(d.join("run.toml"), "mode = \"questionnaire\"\nk = 6\nseed = 5\n").unwrap();
    ok(d, &["--config", "run.toml", "--out-dir", "a", "fit", "--input", "data/panel.csv"]);
    ok(d, &["--config", "run.toml", "--k", "8", "--out-dir", "b", "fit", "--input", "data/panel.csv"]);
    let k = |dir: &str| {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join(dir).join("model.json")).unwrap()).unwrap();
        (v["K"].as_u64().unwrap(), v["seed"].as_u64().unwrap())
    };
    assert_eq!(k("a"), (6, 5));
    assert_eq!(k("b"), (8, 5));

    fs::write(d.join("bad.toml"), "colour = \"blue\"\n").unwrap();
    let out = cvhmm(d, &["--config", "bad.toml", "fit", "--input", "data/panel.csv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("ERROR:validation:config:"));
}

#[test]
fn too_many_states_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("flat.csv"), "roi_1\n1\n2\n3\n4\n").unwrap();
    fs::write(d.join("m.csv"), "scan_file,entity_id,stratum\nflat.csv,s1,base\n").unwrap();
    let out = cvhmm(d, &["--k", "5", "fit", "--input", "m.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR:degenerate:"), "{}", stderr(&out));
    assert!(!d.join("model.json").exists());
}

#[test]
fn usage_and_validation_errors_are_prefixed() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = cvhmm(d, &["fit"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("ERROR:usage:"));

    let out = cvhmm(d, &["fit", "--input", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR:io:"));

    let out = cvhmm(d, &["--k", "12", "fit", "--input", "missing.csv"]);
    assert!(stderr(&out).starts_with("ERROR:validation:K = 12"));

    ok(d, &["--out-dir", "data", "synth", "cohort", "--n", "30"]);
    ok(d, &["--mode", "questionnaire", "--out-dir", "run", "fit", "--input", "data/panel.csv"]);
    let out = cvhmm(
        d,
        &["decode", "--model", "run/model.json", "--input", "data/panel.csv", "--method", "forward"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("available: kmeans, viterbi"));
}

#[test]
fn score_reports_row_numbers_and_imputation() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let header = "subject_id,timepoint,cesd_1,cesd_2,cesd_3,cesd_4,cesd_5,cesd_6,cesd_7,cesd_8,\
                  lone_1,lone_2,lone_3,anx_1,anx_2,anx_3,anx_4,anx_5,exercise";
    let row = |id: &str, t: u32, ex: &str| format!("{id},{t},1,0,1,0,1,1,0,0,1,2,3,1,1,2,2,3,{ex}");
    let body = [row("p1", 1, ""), row("p1", 2, "4"), row("p1", 3, ""), row("p1", 4, "2")].join("\n");
    fs::write(d.join("q.csv"), format!("{header}\n{body}\n")).unwrap();
    ok(d, &["--out-dir", "out", "score", "--input", "q.csv"]);
    let scored = fs::read_to_string(d.join("out/scored.csv")).unwrap();
    let lines: Vec<&str> = scored.lines().collect();
    assert_eq!(lines[0], "subject_id,timepoint,depression,loneliness,anxiety,exercise");
    assert!(lines[1].ends_with(",4"), "{}", lines[1]);
    assert!(lines[3].ends_with(",3"), "{}", lines[3]);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("out/scored.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["details"]["edge_filled"][0], "p1");

    let bad = format!("{header}\n{}\n{}\n", row("p1", 1, "2"), row("p1", 2, "2").replacen(",1,0,1,0", ",1,7,1,0", 1));
    fs::write(d.join("bad.csv"), bad).unwrap();
    let out = cvhmm(d, &["score", "--input", "bad.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR:validation:row 3:"), "{}", stderr(&out));
}
