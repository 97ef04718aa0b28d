//! CSV, JSON-lines and sidecar writers. Everything is rendered to bytes
//! first so output order never depends on worker scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CliError, CliResult};

pub fn csv_bytes<R: Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io("csv buffer".into(), e.into_error()))
}

pub fn jsonl_bytes<R: Serialize>(records: &[R]) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a, C: Serialize> {
    pub command: &'a str,
    pub tool_version: &'static str,
    pub config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
}

impl<'a, C: Serialize> Sidecar<'a, C> {
    pub fn new(command: &'a str, config: &'a C, reproducible: bool) -> Self {
        let now = (!reproducible).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            generated_at_unix: now,
        }
    }
}

/// `out.csv` → `out.json`; other names get `.json` appended.
pub fn sidecar_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "csv") {
        out.with_extension("json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(path.display().to_string(), e))
}

/// Write `bytes` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io("stdout".into(), e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        x: Option<f64>,
    }

    #[test]
    fn csv_layout() {
        let b = csv_bytes(&[Row { n: 1, x: Some(0.5) }, Row { n: 2, x: None }]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "n,x\n1,0.5\n2,\n");
    }

    #[test]
    fn sidecar_names_and_timestamp() {
        assert_eq!(sidecar_path(Path::new("a/b.csv")), PathBuf::from("a/b.json"));
        assert_eq!(sidecar_path(Path::new("b.out")), PathBuf::from("b.out.json"));
        let cfg = 3;
        let s = serde_json::to_string(&Sidecar::new("x", &cfg, true)).unwrap();
        assert!(!s.contains("generated_at_unix"));
        let s = serde_json::to_string(&Sidecar::new("x", &cfg, false)).unwrap();
        assert!(s.contains("generated_at_unix"));
    }
}
