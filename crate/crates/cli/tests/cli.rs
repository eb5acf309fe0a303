use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lsqkf_cli::output::strip_timings;
use lsqkf_cli::Summary;

fn lsqkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsqkf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
steps = 2048
seeds = [0, 1, 2]
checkpoints = [256, 2048]

[model]
preset = "ROTATION_MARGINAL"

[diagnostics]
f_step = 2
state_prediction = true
alternative_regret = true
"#;

fn only_dir(root: &Path) -> PathBuf {
    let dirs: Vec<_> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

#[test]
fn run_writes_layout_and_consistent_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "exp.toml", SMALL);
    let out = tmp.path().join("out");
    let res = lsqkf(&[
        "run",
        cfg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let dir = only_dir(&out);
    assert_eq!(dir.file_name().unwrap().len(), 16);
    for seed in 0..3 {
        assert!(dir.join(format!("runs/{seed}.json")).exists());
    }
    assert!(dir.join("config.toml").exists());
    let leftovers = fs::read_dir(dir.join("runs"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "tmp")
        .count();
    assert_eq!(leftovers, 0);

    // CSV and JSON summaries carry the same numbers.
    let summary: Summary =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("checkpoint_N,stat,value"));
    let rows = summary.rows();
    let parsed: Vec<(usize, String, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].to_string(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(parsed.len(), rows.len());
    for ((n, stat, value), row) in parsed.iter().zip(&rows) {
        assert_eq!(
            (*n, stat.as_str(), *value),
            (row.checkpoint, row.stat.as_str(), row.value)
        );
    }
    assert!(rows
        .iter()
        .any(|r| r.stat == "regret_ratio_vs_256" && r.checkpoint == 2048));
    assert!(rows.iter().any(|r| r.stat == "state_regret_median"));

    // Re-summarizing from disk reproduces the same files.
    let before = fs::read_to_string(dir.join("summary.json")).unwrap();
    let res = lsqkf(&["summarize", dir.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(
        fs::read_to_string(dir.join("summary.json")).unwrap(),
        before
    );
}

#[test]
fn repeated_runs_are_identical_except_timings() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "exp.toml", SMALL);
    let mut texts = Vec::new();
    for (i, jobs) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let res = lsqkf(&[
            "run",
            cfg.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(res.status.success());
        let dir = only_dir(&out);
        let text = fs::read_to_string(dir.join("runs/1.json")).unwrap();
        texts.push(strip_timings(&text).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn seed_offset_shares_the_experiment_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "exp.toml",
        "steps = 512\nseeds = [0]\n[model]\npreset = \"SCALAR_STABLE\"\n[diagnostics]\nwhiteness = false\n",
    );
    let out = tmp.path().join("out");
    for offset in ["0", "10"] {
        let res = lsqkf(&[
            "run",
            cfg.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--seed-offset",
            offset,
        ]);
        assert!(res.status.success());
    }
    let dir = only_dir(&out);
    assert!(dir.join("runs/0.json").exists() && dir.join("runs/10.json").exists());
    let res = lsqkf(&["summarize", dir.to_str().unwrap()]);
    assert!(res.status.success());
    let summary: Summary =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.seeds, vec![0, 10]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(
        tmp.path(),
        "bad.toml",
        "steps = 4096\n[model]\npreset = \"SCALAR_STABLE\"\n[schedule]\nt_init = 4\nbeta = 10.0\n",
    );
    let res = lsqkf(&["validate", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("T_init"));

    let missing = lsqkf(&["run", tmp.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    // Unobservable, unstable: the Riccati iteration diverges.
    let diverge = write_config(
        tmp.path(),
        "diverge.toml",
        "steps = 512\n[model]\na = [[2.0]]\nc = [[0.0]]\nq = [[1.0]]\nr = [[1.0]]\nsigma0 = [[1.0]]\n",
    );
    let res = lsqkf(&[
        "run",
        diverge.to_str().unwrap(),
        "--output",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("riccati"));

    let ok = write_config(
        tmp.path(),
        "ok.toml",
        "steps = 4096\n[model]\npreset = \"INTEGRATOR2\"\n",
    );
    let res = lsqkf(&["validate", ok.to_str().unwrap()]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("# hash ") && text.contains("t_init = 32"));
    assert!(text.contains("warning"), "{text}");

    let res = lsqkf(&["presets"]);
    assert!(res.status.success());
    assert_eq!(String::from_utf8_lossy(&res.stdout).lines().count(), 5);
}
