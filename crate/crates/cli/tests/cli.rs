use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gramspec(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gramspec"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().expect("spawn gramspec")
}

fn ok(args: &[&str]) -> Output {
    let out = gramspec(args, None);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn table_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let out_s = out.to_str().unwrap();
    let args = [
        "random", "--dim", "48", "--tau", "1.5", "--trials", "6", "--seed", "9", "--out", out_s,
    ];
    let mut files = Vec::new();
    for threads in [1, 4] {
        let o = gramspec(&args, Some(threads));
        assert!(o.status.success());
        files.push((
            fs::read(&out).unwrap(),
            fs::read(dir.path().join("run.hist.csv")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn json_is_identical_across_thread_counts() {
    let args = [
        "classical",
        "--dim",
        "500",
        "--tau",
        "1",
        "--trials",
        "5",
        "--seed",
        "2",
        "--format",
        "json",
    ];
    let a = gramspec(&args, Some(1));
    let b = gramspec(&args, Some(3));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("completed in"));
    assert!(!String::from_utf8_lossy(&a.stdout).contains("duration"));
}

#[test]
fn exit_codes() {
    assert_eq!(
        gramspec(&["random", "--dim", "8", "--tau", "1"], None)
            .status
            .code(),
        Some(0)
    );
    // bins below 10, missing tau, zero trials, start out of range
    for args in [
        &["random", "--dim", "8", "--tau", "1", "--bins", "5"][..],
        &["random", "--dim", "8"][..],
        &["random", "--dim", "8", "--steps", "4", "--trials", "0"][..],
        &["permutation", "--dim", "4", "--steps", "4", "--start", "7"][..],
        &["fit", "whatever.csv", "--tau", "-1"][..],
    ] {
        let o = gramspec(args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = gramspec(&["fit", "/definitely/not/here.csv", "--tau", "1"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_error_names_the_field() {
    let o = gramspec(
        &["random", "--dim", "8", "--tau", "1", "--trials", "0"],
        None,
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"dim": 30, "steps": 12, "trials": 2, "seed": 5}"#).unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let from_file = ok(&["random", "--config", cfg_s]);
    let rows = table_rows(&String::from_utf8_lossy(&from_file.stdout));
    assert_eq!(rows.len(), 2 * 12);

    // --tau replaces the file's steps: K = ceil(2 * 30) = 60
    let over = ok(&["random", "--config", cfg_s, "--tau", "2"]);
    let rows = table_rows(&String::from_utf8_lossy(&over.stdout));
    assert_eq!(rows.len(), 2 * 60);

    fs::write(&cfg, r#"{"dim": 30, "steps": 12, "colour": "blue"}"#).unwrap();
    assert_eq!(
        gramspec(&["random", "--config", cfg_s], None).status.code(),
        Some(2)
    );
}

#[test]
fn histogram_conserves_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    ok(&[
        "random",
        "--dim",
        "20",
        "--tau",
        "2",
        "--trials",
        "3",
        "--bins",
        "12",
        "--out",
        out.to_str().unwrap(),
    ]);
    let hist = fs::read_to_string(dir.path().join("h.hist.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("bin_left,bin_right,count"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 1 + 12);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("0", "0"));
    // rank bound: 20 of every 40 eigenvalues vanish
    assert_eq!(rows[0][2], "60");
    let total: usize = rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 3 * 40);
}

#[test]
fn fit_on_stored_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let out_s = out.to_str().unwrap();
    ok(&[
        "random", "--dim", "128", "--tau", "1", "--trials", "4", "--seed", "1", "--out", out_s,
    ]);
    let fit = ok(&["fit", out_s, "--tau", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    let ks = v["fit"]["ks_distance"].as_f64().unwrap();
    assert!(ks < 0.06, "ks {ks}");

    // the fit matches the one embedded in the run output
    let text = fs::read_to_string(&out).unwrap();
    let line = text.lines().find(|l| l.starts_with("# fit: ")).unwrap();
    let embedded: serde_json::Value = serde_json::from_str(&line["# fit: ".len()..]).unwrap();
    assert_eq!(embedded, v["fit"]);

    let json_arr = dir.path().join("arr.json");
    fs::write(&json_arr, "[2.0, 0.0]").unwrap();
    let csv = ok(&["fit", json_arr.to_str().unwrap(), "--tau", "2"]);
    let text = String::from_utf8_lossy(&csv.stdout);
    assert!(text.starts_with("statistic,value\n"));
    assert!(text.contains("atom_fraction_empirical,0.5\n"));
}

#[test]
fn mp_grid_rows() {
    let o = ok(&["mp-grid"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l == "tau,x,density,cdf,atom_weight"));
    let rows = table_rows(&text);
    assert_eq!(rows.len(), 150 * 400);
    for r in &rows {
        let tau: f64 = r[0].parse().unwrap();
        let atom: f64 = r[4].parse().unwrap();
        assert!((atom - (0.0f64).max((tau - 1.0) / tau)).abs() < 1e-15);
    }
    let taus: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(taus[0], 0.02);
    assert_eq!(*taus.last().unwrap(), 3.0);
}

#[test]
fn permutation_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let perm = dir.path().join("p.json");
    fs::write(&perm, "[1, 2, 0, 4, 3]").unwrap();
    let o = ok(&[
        "permutation",
        "--dim",
        "5",
        "--steps",
        "7",
        "--start",
        "0",
        "--perm",
        perm.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("# cycle_type: [3,2]"));
    assert!(text.contains("# period: 3"));
    let values: Vec<f64> = table_rows(&text)
        .iter()
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert_eq!(values, vec![3.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);

    fs::write(&perm, "[0, 0, 1, 2, 3]").unwrap();
    let o = gramspec(
        &[
            "permutation",
            "--dim",
            "5",
            "--steps",
            "7",
            "--perm",
            perm.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn floquet_identity_run() {
    let o = ok(&[
        "floquet", "--dim", "16", "--steps", "9", "--kick", "0", "--rot", "0", "--start", "3",
    ]);
    let values: Vec<f64> = table_rows(&String::from_utf8_lossy(&o.stdout))
        .iter()
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert_eq!(values[0], 9.0);
    assert!(values[1..].iter().all(|&v| v == 0.0));
}

#[test]
fn json_run_result_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    ok(&[
        "random",
        "--dim",
        "10",
        "--steps",
        "5",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!Path::new(&dir.path().join("r.hist.csv")).exists());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["dim"], 10);
    assert_eq!(v["spectra"][0].as_array().unwrap().len(), 5);
    let fit = ok(&[
        "fit",
        out.to_str().unwrap(),
        "--tau",
        "0.5",
        "--format",
        "json",
    ]);
    assert!(serde_json::from_slice::<serde_json::Value>(&fit.stdout).is_ok());
}
