//! Regression against checked-in CSVs produced from `configs/default.toml`.
//! Regenerate with `PBIT_BLESS=1 cargo test -p pbit-cli --test golden`.

mod support;

use support::*;

fn check(command: &str) {
    let config = repo_root().join("configs/default.toml");
    let out = pbit(&[command], &config);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/{command}.csv"));
    if std::env::var_os("PBIT_BLESS").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
        return;
    }
    let golden = std::fs::read(&path).expect("golden file exists");
    assert!(
        out.stdout == golden,
        "{command} output drifted from {}:\n{}",
        path.display(),
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn sigmoid_matches_golden() {
    check("sigmoid");
}

#[test]
fn tune_matches_golden() {
    check("tune");
}

#[test]
fn energy_matches_golden() {
    check("energy");
}
