//! CSV and JSON export of experiment results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::ExportFormat;
use super::experiment::ExperimentResult;

pub const CSV_HEADER: &str = "method,seed,iter,sfo,grad_norm,drift_sq,batch_size,loss";

/// 17 significant digits, enough to round-trip every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `contents` through a temporary sibling so a failed export leaves
/// no partial file behind.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn check_nonempty(result: &ExperimentResult) -> Result<()> {
    if result.methods.iter().all(|m| m.traces.iter().all(|t| t.is_empty())) {
        return Err(Error::EmptyResult(format!(
            "experiment '{}' has no recorded states",
            result.name
        )));
    }
    Ok(())
}

pub fn csv_string(result: &ExperimentResult) -> Result<String> {
    check_nonempty(result)?;
    let mut s = String::with_capacity(1 << 20);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for m in &result.methods {
        for t in &m.traces {
            for k in 0..t.len() {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    m.label,
                    t.seed,
                    k,
                    t.sfo_cum[k],
                    fmt_f64(t.grad_norm[k]),
                    fmt_f64(t.drift_sq[k]),
                    t.batch_size[k],
                    fmt_f64(t.loss[k])
                )
                .expect("writing to a String cannot fail");
            }
        }
    }
    Ok(s)
}

pub fn json_string(result: &ExperimentResult) -> Result<String> {
    check_nonempty(result)?;
    serde_json::to_string_pretty(result).map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes `<dir>/<name>.<ext>` for the format and returns the path.
pub fn export(result: &ExperimentResult, format: ExportFormat, dir: &Path) -> Result<PathBuf> {
    let (body, ext) = match format {
        ExportFormat::Csv => (csv_string(result)?, "csv"),
        ExportFormat::Json => (json_string(result)?, "json"),
    };
    let path = dir.join(format!("{}.{ext}", result.name));
    write_atomic(&path, body.as_bytes())?;
    Ok(path)
}

/// One parsed data row of an exported CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub method: String,
    pub seed: u64,
    pub iter: usize,
    pub sfo: u64,
    pub grad_norm: f64,
    pub drift_sq: f64,
    pub batch_size: u64,
    pub loss: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Serialization("unexpected CSV header".into()));
    }
    let bad = |line: &str| Error::Serialization(format!("malformed CSV row: {line}"));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad(line));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line));
            let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad(line));
            Ok(CsvRow {
                method: f[0].to_string(),
                seed: int(1)?,
                iter: int(2)? as usize,
                sfo: int(3)?,
                grad_norm: num(4)?,
                drift_sq: num(5)?,
                batch_size: int(6)?,
                loss: num(7)?,
            })
        })
        .collect()
}
