use std::process::{Command, Output};

fn qswd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qswd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a table, preamble and header dropped.
fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn value(o: &Output, quantity: &str) -> f64 {
    rows(o).iter().find(|r| r[1] == quantity).unwrap()[2]
        .parse()
        .unwrap()
}

#[test]
fn bounds_of_presets() {
    let o = qswd(&["bounds"]);
    assert!(o.status.success());
    assert!((value(&o, "helstrom") - 0.8535533906).abs() < 1e-9);
    assert!((value(&o, "classical_helstrom") - 0.5).abs() < 1e-12);

    let o = qswd(&["bounds", "--ensemble", "mub_mixture", "--alpha", "0"]);
    assert!((value(&o, "symmetric_mary") - 0.25).abs() < 1e-12);
    let o = qswd(&["bounds", "--ensemble", "equiphase", "--states", "8"]);
    assert!((value(&o, "symmetric_mary") - 0.25).abs() < 1e-12);
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let args = [
        "sweep",
        "--model",
        "2-2-2",
        "--p",
        "0,0.5",
        "--tau",
        "3",
        "--restarts",
        "3",
        "--seed",
        "7",
    ];
    let a = qswd(&args);
    let b = qswd(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r = rows(&a);
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|row| row[10].is_empty()));
    let pc: f64 = r[0][3].parse().unwrap();
    let bound: f64 = r[0][4].parse().unwrap();
    assert!(pc > 0.5 && pc <= bound + 1e-6);
}

#[test]
fn preamble_carries_config_hash() {
    let text = stdout(&qswd(&["bounds", "--seed", "3"]));
    assert!(text.starts_with("# qswd "));
    assert!(text.contains("# seed: 3"));
    let hash = text
        .lines()
        .find_map(|l| l.strip_prefix("# config_sha256: "))
        .unwrap();
    assert_eq!(hash.len(), 64);
    let other = stdout(&qswd(&["bounds", "--seed", "4"]));
    assert!(!other.contains(hash));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "ensemble = \"mub_mixture\"\nalpha = 0.0\nstates = 4\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let o = qswd(&["bounds", "--config", path]);
    assert!((value(&o, "symmetric_mary") - 0.25).abs() < 1e-12);
    let o = qswd(&["bounds", "--config", path, "--alpha", "1"]);
    assert!((value(&o, "symmetric_mary") - 1.0).abs() < 1e-12);

    std::fs::write(&cfg, "ensmble = \"pair-a\"\n").unwrap();
    assert_eq!(qswd(&["bounds", "--config", path]).status.code(), Some(1));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = qswd(&["bounds", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(out)
        .unwrap()
        .contains("pair-a,helstrom,"));
}

#[test]
fn configuration_errors_exit_one() {
    for args in [
        &["sweep", "--p", "1.5"][..],
        &["sweep", "--restarts", "0"],
        &["sweep", "--model", "2-x-2"],
        &["bounds", "--ensemble", "nope"],
        &["analytic", "p1", "--d", "0.1,0.2"],
        &["robustness", "--error-pct", "-5"],
        &["sweep", "--bogus"],
    ] {
        assert_eq!(qswd(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn empty_config_grid_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "tau = []\n").unwrap();
    let o = qswd(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
}

#[test]
fn analytic_columns_agree() {
    for case in ["p0", "p1"] {
        let o = qswd(&["analytic", case]);
        assert!(o.status.success());
        for r in rows(&o) {
            let dev: f64 = r[3].parse().unwrap();
            assert!(dev < 1e-8, "{case}: {r:?}");
        }
    }
    let o = qswd(&["analytic", "p0", "--h", "0"]);
    for r in rows(&o) {
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn single_run_has_no_spread() {
    let o = qswd(&[
        "robustness",
        "--runs",
        "1",
        "--p",
        "0",
        "--tau",
        "1",
        "--error-pct",
        "0,50",
        "--restarts",
        "2",
    ]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 2);
    for row in r {
        assert_eq!(row[5], row[6]);
        assert_eq!(row[5], row[7]);
        assert_eq!(row[8].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn depth_and_topo() {
    let o = qswd(&["depth", "--depths", "1", "--tau", "10", "--restarts", "2"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r[0][1], "2r-2r-2");
    assert!(r[0][5].parse::<f64>().unwrap() >= -1e-6);

    let o = qswd(&["topo", "--model", "2-2-2"]);
    assert!(stdout(&o).starts_with("model 2-2-2"));
}
