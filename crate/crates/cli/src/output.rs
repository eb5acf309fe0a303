use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::RunRecord;
use crate::summary::Summary;

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn runs_dir(dir: &Path) -> PathBuf {
    dir.join("runs")
}

/// Creates `dir/runs` and writes the canonical `dir/config.toml`.
pub fn prepare_dir(dir: &Path, config: &ExperimentConfig) -> Result<(), CliError> {
    let runs = runs_dir(dir);
    fs::create_dir_all(&runs).map_err(|e| CliError::io(&runs, e))?;
    write_atomic(&dir.join("config.toml"), config.canonical().as_bytes())
}

pub fn record_json(record: &RunRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("records serialize");
    s.push('\n');
    s
}

pub fn write_record(dir: &Path, record: &RunRecord) -> Result<(), CliError> {
    write_atomic(
        &runs_dir(dir).join(format!("{}.json", record.seed)),
        record_json(record).as_bytes(),
    )
}

/// Loads every `runs/*.json` under `dir`, sorted by seed.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let runs = runs_dir(dir);
    let entries = fs::read_dir(&runs).map_err(|e| CliError::io(&runs, e))?;
    let mut records = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(&runs, e))?.path();
        if path.extension().is_none_or(|ext| ext != "json") {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|e| CliError::Record {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        records.push(record);
    }
    records.sort_by_key(|r| r.seed);
    Ok(records)
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(summary).expect("summary serializes");
    json.push('\n');
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    write_atomic(&dir.join("summary.csv"), summary.to_csv().as_bytes())
}

/// A record's JSON with the `timings` field removed.
pub fn strip_timings(json: &str) -> Result<String, serde_json::Error> {
    let mut value: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("timings");
    }
    serde_json::to_string(&value)
}
