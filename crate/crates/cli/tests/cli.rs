use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hurstnn"))
}

fn run(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn analyze(cfg: &Path, out: &Path) -> Output {
    bin()
        .args(["analyze", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn synth_files_feed_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_cfg = write(
        tmp.path(),
        "synth.toml",
        "synthetic_kind = \"fgn\"\nsynthetic_count = 4\nsynthetic_months = 84\nseed = 3\n",
    );
    let data = tmp.path().join("data");
    let out = bin()
        .args(["synth", "--config"])
        .arg(&synth_cfg)
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(data.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 5);
    assert!(manifest.starts_with("index_id,kind,hurst,"));
    let first = fs::read_to_string(data.join("synth_000.csv")).unwrap();
    assert!(first.starts_with("date,close\n"));
    assert_eq!(first.lines().count(), 84 * 21 + 2);

    // Files are read back with calendar months: the 21-day synthetic months
    // span fewer calendar months, so ask for a shorter protocol.
    let analyze_cfg = write(
        tmp.path(),
        "analyze.toml",
        "inputs = [\"data/synth_000.csv\", \"data/synth_001.csv\", \"data/synth_002.csv\", \"data/synth_003.csv\"]\n\
         regions = [\"Europe\", \"Asia-Pacific\", \"Americas\", \"Africa\"]\n\
         estimation_months = 36\nprediction_months = 12\nroll_months = 12\n",
    );
    let res = tmp.path().join("res");
    let out = analyze(&analyze_cfg, &res);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "index_id,H_mean,hit_mean,n_windows,region,status");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("synth_001,") && lines[2].ends_with(",Asia-Pacific,ok"));
    let windows = fs::read_to_string(res.join("windows.csv")).unwrap();
    assert!(windows.lines().skip(1).all(|l| l.split(',').count() == 14));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(res.join("correlation.json")).unwrap()).unwrap();
    assert_eq!(report["n_indexes"], 4);
    assert_eq!(report["quadrants"].as_array().unwrap().len(), 4);

    // Recomputing from the summary table gives the same report.
    let out = run(&["correlate"], &[&res.join("summary.csv")]);
    assert!(out.status.success());
    let again: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(again, report);

    let out = run(&["report"], &[&res.join("correlation.json")]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pearson") && text.contains("synth_003"));
}

#[test]
fn short_index_gives_partial_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_cfg = write(
        tmp.path(),
        "s.toml",
        "synthetic_kind = \"random-walk\"\nsynthetic_count = 3\nsynthetic_months = 84\n",
    );
    assert!(run(&["synth", "--config"], &[&synth_cfg, Path::new("--out"), tmp.path()])
        .status
        .success());
    write(tmp.path(), "tiny.csv", "date,close\n2020-01-02,100\n2020-01-03,101\n2020-01-06,99\n");
    let cfg = write(
        tmp.path(),
        "a.toml",
        "inputs = [\"synth_000.csv\", \"synth_001.csv\", \"synth_002.csv\", \"tiny.csv\"]\n\
         estimation_months = 36\n",
    );
    let res = tmp.path().join("res");
    let out = analyze(&cfg, &res);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient-history"));
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    assert!(summary.contains("tiny,,,0,other,insufficient-history"));
    let scatter = fs::read_to_string(res.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 4);
    assert!(res.join("correlation.json").exists());
}

#[test]
fn bad_input_exits_two_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "bad.csv", "date,close\n2020-01-02,100\n2020-01-03,-1\n");
    let cfg = write(tmp.path(), "a.toml", "inputs = [\"bad.csv\"]\n");
    let out = analyze(&cfg, &tmp.path().join("res"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
    assert!(!tmp.path().join("res").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write(tmp.path(), "u.toml", "synthetic_count = 3\nbogus = 1\n");
    assert_eq!(analyze(&unknown, tmp.path()).status.code(), Some(2));
    let missing = tmp.path().join("nope.toml");
    assert_eq!(analyze(&missing, tmp.path()).status.code(), Some(2));
    let no_out = write(tmp.path(), "n.toml", "synthetic_count = 3\n");
    let out = run(&["analyze", "--config"], &[&no_out]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "synthetic_kind = \"random-walk\"\nsynthetic_count = 1\nsynthetic_months = 12\nseed = 5\n",
    );
    let read = |seed: Option<&str>, name: &str| {
        let dir = tmp.path().join(name);
        let mut cmd = bin();
        cmd.args(["synth", "--config"]).arg(&cfg).arg("--out").arg(&dir);
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read_to_string(dir.join("synth_000.csv")).unwrap()
    };
    let base = read(None, "a");
    assert_eq!(read(Some("5"), "b"), base);
    assert_ne!(read(Some("6"), "c"), base);
}

#[test]
fn random_walk_files_ingest_and_fgn_file_recovers_hurst() {
    let tmp = tempfile::tempdir().unwrap();
    let rw = write(
        tmp.path(),
        "rw.toml",
        "synthetic_kind = \"random-walk\"\nsynthetic_count = 5\nsynthetic_months = 24\nseed = 9\n",
    );
    let rw_dir = tmp.path().join("rw");
    assert!(run(&["synth", "--config"], &[&rw, Path::new("--out"), &rw_dir]).status.success());
    for i in 0..5 {
        let p = rw_dir.join(format!("synth_{i:03}.csv"));
        assert_eq!(hurstnn::io::ingest_csv(&p).unwrap().len(), 24 * 21 + 1);
    }

    let fgn = write(
        tmp.path(),
        "fgn.toml",
        "synthetic_kind = \"fgn\"\nsynthetic_count = 3\nsynthetic_months = 180\n\
         synthetic_hurst_min = 0.7\nsynthetic_hurst_max = 0.7\nseed = 21\n",
    );
    let fgn_dir = tmp.path().join("fgn");
    assert!(run(&["synth", "--config"], &[&fgn, Path::new("--out"), &fgn_dir]).status.success());
    let cfg = write(
        tmp.path(),
        "a.toml",
        "inputs = [\"fgn/synth_000.csv\", \"fgn/synth_001.csv\", \"fgn/synth_002.csv\"]\n",
    );
    let res = tmp.path().join("res");
    assert_eq!(analyze(&cfg, &res).status.code(), Some(0));
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let h: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((h - 0.7).abs() <= 0.07, "{line}");
    }
}

#[test]
fn surrogates_replace_inputs_by_matched_random_walks() {
    let tmp = tempfile::tempdir().unwrap();
    let fgn = write(
        tmp.path(),
        "fgn.toml",
        "synthetic_kind = \"fgn\"\nsynthetic_count = 3\nsynthetic_months = 120\n\
         synthetic_hurst_min = 0.75\nsynthetic_hurst_max = 0.75\nsynthetic_std = 0.02\nseed = 4\n",
    );
    assert!(run(&["synth", "--config"], &[&fgn, Path::new("--out"), tmp.path()]).status.success());
    let inputs = "inputs = [\"synth_000.csv\", \"synth_001.csv\", \"synth_002.csv\"]\n";
    let hurst_means = |extra: &str, name: &str| -> Vec<f64> {
        let cfg = write(tmp.path(), &format!("{name}.toml"), &format!("{inputs}{extra}"));
        let out = tmp.path().join(name);
        assert_eq!(analyze(&cfg, &out).status.code(), Some(0));
        fs::read_to_string(out.join("summary.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let original = hurst_means("", "orig");
    let surrogate = hurst_means("surrogates = true\n", "surr");
    assert!(original.iter().all(|h| *h > 0.65), "{original:?}");
    assert!(surrogate.iter().all(|h| (h - 0.5).abs() < 0.08), "{surrogate:?}");
    let windows = fs::read_to_string(tmp.path().join("orig/windows.csv")).unwrap();
    let surr_windows = fs::read_to_string(tmp.path().join("surr/windows.csv")).unwrap();
    let dates = |w: &str| -> Vec<String> {
        w.lines().map(|l| l.split(',').take(5).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(dates(&windows), dates(&surr_windows));
}
