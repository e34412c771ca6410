mod support;

use support::*;

fn code(out: &std::process::Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn malformed_config_exits_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = [").unwrap();
    let out = pbit(&["tune"], &path);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&pbit(&["tune"], &dir.path().join("absent.toml"))), 2);

    let mut table = default_config();
    set(&mut table, "calibration", "tau0", -1.0);
    let out = pbit(&["sigmoid"], &write_config(dir.path(), table));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau0"));
}

#[test]
fn missing_dataset_exits_with_the_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = default_config();
    set(&mut table, "dbn", "data_dir", "");
    let config = write_config(dir.path(), table);
    let out = std::process::Command::new(BIN)
        .args(["dbn-train", "--config"])
        .arg(&config)
        .env("PBIT_MNIST_DIR", dir.path().join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));

    let out = std::process::Command::new(BIN)
        .args(["knee", "--config"])
        .arg(&config)
        .env_remove("PBIT_MNIST_DIR")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "no directory configured at all is a config error");
}

#[test]
fn missing_model_exits_with_the_data_code() {
    if !mnist_dir().join("t10k-images-idx3-ubyte").exists() {
        eprintln!("skipping: MNIST not found at {}", mnist_dir().display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = pbit(&["dbn-eval"], &write_config(dir.path(), default_config()));
    assert_eq!(code(&out), 3);
}

#[test]
fn window_cap_exits_with_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = default_config();
    set(&mut table, "tune", "cap_factor", 1.0);
    let out = pbit(&["tune"], &write_config(dir.path(), table));
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbit(&["plot"], &write_config(dir.path(), default_config()));
    assert_ne!(code(&out), 0);
}

#[test]
fn csv_starts_with_schema_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbit(&["tune"], &write_config(dir.path(), default_config()));
    assert!(out.status.success());
    let (comment, rows) = parse(&out.stdout);
    let hash = comment.strip_prefix("# schema=pbit.tune.v1 config=").expect(&comment);
    assert_eq!(hash.len(), 16);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(&rows[0], vec!["eb_kT", "min_tau_s_ns", "timescale_ns", "window_over_timescale"]);
    assert_eq!(rows.len(), 6);
}

#[test]
fn seed_override_changes_hash_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), default_config());
    let base = pbit(&["sigmoid"], &config);
    let same = pbit(&["sigmoid", "--seed", "2020"], &config);
    let other = pbit(&["sigmoid", "--seed", "9"], &config);
    assert_eq!(base.stdout, same.stdout);
    let (h0, r0) = parse(&base.stdout);
    let (h1, r1) = parse(&other.stdout);
    assert_ne!(h0, h1);
    assert_ne!(r0, r1);
}

#[test]
fn full_scale_flag_is_part_of_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), default_config());
    let desk = parse(&pbit(&["energy"], &config).stdout);
    let full = parse(&pbit(&["energy", "--full-scale"], &config).stdout);
    assert_ne!(desk.0, full.0);
    // Per-p-bit energy is scale-free; the network total is not.
    assert_eq!(desk.1[1][4], full.1[1][4]);
    assert_ne!(desk.1[1][5], full.1[1][5]);
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), default_config());
    let csv = dir.path().join("energy.csv");
    let out = std::process::Command::new(BIN)
        .args(["energy", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&csv).unwrap();
    assert_eq!(written, pbit(&["energy"], &config).stdout);
}

#[test]
fn relative_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = default_config();
    set(&mut table, "dbn", "data_dir", "missing-subdir");
    let path = dir.path().join("c.toml");
    std::fs::write(&path, toml::to_string(&table).unwrap()).unwrap();
    let out = pbit(&["dbn-train"], &path);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&dir.path().join("missing-subdir").display().to_string()), "{err}");
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn sigmoid_csv_agrees_with_the_analytic_curve() {
    let out = pbit(&["sigmoid"], &repo_root().join("configs/default.toml"));
    let (_, rows) = parse(&out.stdout);
    let rows = &rows[1..];
    assert_eq!(rows.len(), 41);
    for r in rows {
        let (v, p, emp, se) = (num(&r[0]), num(&r[1]), num(&r[2]), num(&r[3]));
        assert!((emp - p).abs() <= 3.0 * se, "v={v}: {emp} vs {p} (stderr {se})");
    }
    assert!(num(&rows[0][2]) < 1e-3 && num(&rows[40][2]) > 1.0 - 1e-3);
}

#[test]
fn trace_dwells_grow_by_the_arrhenius_factor() {
    let out = pbit(&["trace"], &repo_root().join("configs/default.toml"));
    let (_, rows) = parse(&out.stdout);
    let mean_dwell = |eb: f64| {
        let d: Vec<f64> = rows[1..]
            .iter()
            .filter(|r| num(&r[0]) == eb && r[1].is_empty())
            .map(|r| num(&r[3]))
            .collect();
        assert!(!d.is_empty());
        // The last segment is cut off by the end of the trace.
        d[..d.len() - 1].iter().sum::<f64>() / (d.len() - 1) as f64
    };
    let means: Vec<f64> = [0.5, 1.0, 1.5, 2.0].iter().map(|&eb| mean_dwell(eb)).collect();
    for w in means.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio / 0.5f64.exp() - 1.0).abs() < 0.15, "{means:?}");
    }
}
