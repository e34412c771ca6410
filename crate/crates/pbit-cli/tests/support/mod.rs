//! Helpers for driving the `pbit` binary from tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_pbit");

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn mnist_dir() -> PathBuf {
    std::env::var_os("PBIT_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| repo_root().join("data/mnist"))
}

pub fn default_config() -> toml::Table {
    let text = std::fs::read_to_string(repo_root().join("configs/default.toml")).unwrap();
    text.parse().unwrap()
}

/// Writes `table` into `dir` with absolute dataset and model paths.
pub fn write_config(dir: &Path, mut table: toml::Table) -> PathBuf {
    let dbn = table.get_mut("dbn").unwrap().as_table_mut().unwrap();
    if dbn.get("data_dir").and_then(|v| v.as_str()) != Some("") {
        dbn.insert("data_dir".into(), mnist_dir().display().to_string().into());
    }
    dbn.insert("model".into(), dir.join("model.bin").display().to_string().into());
    let path = dir.join("config.toml");
    std::fs::write(&path, toml::to_string(&table).unwrap()).unwrap();
    path
}

pub fn set(table: &mut toml::Table, section: &str, key: &str, value: impl Into<toml::Value>) {
    table.get_mut(section).unwrap().as_table_mut().unwrap().insert(key.into(), value.into());
}

pub fn pbit(args: &[&str], config: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

/// Parses CSV output after the schema comment line.
pub fn parse(stdout: &[u8]) -> (String, Vec<csv::StringRecord>) {
    let text = std::str::from_utf8(stdout).unwrap();
    let (comment, body) = text.split_once('\n').unwrap();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut rows = vec![r.headers().unwrap().clone()];
    rows.extend(r.records().map(|x| x.unwrap()));
    (comment.to_string(), rows)
}
