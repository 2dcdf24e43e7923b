//! CSV and JSON serialization for event series, distributions, and fit
//! results.
//!
//! Decimals are written with Rust's shortest round-trip formatting, so
//! rereading a file reproduces the exact f64 bits. All writes go through
//! write-then-rename so a crash never leaves a truncated file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::BinnedDistribution;
use crate::simulate::EventSeries;

/// Write bytes atomically: to `<path>.tmp`, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = {
        let mut os = path.as_os_str().to_owned();
        os.push(".tmp");
        PathBuf::from(os)
    };
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Serialize as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Single-column timestamp CSV: header `t`, one timestamp per row.
pub fn write_series_csv(path: &Path, series: &EventSeries) -> Result<()> {
    let mut out = String::from("t\n");
    for &t in series.times() {
        out.push_str(&format!("{t}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Two-column ensemble CSV: header `replica,t`.
pub fn write_combined_csv(path: &Path, series: &[EventSeries]) -> Result<()> {
    let mut out = String::from("replica,t\n");
    for (i, s) in series.iter().enumerate() {
        for &t in s.times() {
            out.push_str(&format!("{i},{t}\n"));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// `t,value` rows of a binned distribution.
pub fn write_distribution_csv(path: &Path, dist: &BinnedDistribution) -> Result<()> {
    let mut out = String::from("t,value\n");
    for p in &dist.points {
        out.push_str(&format!("{},{}\n", p.t, p.value));
    }
    write_atomic(path, out.as_bytes())
}

/// `t,survival,density` rows for theory curves.
pub fn write_theory_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut out = String::from("t,survival,density\n");
    for &(t, s, f) in rows {
        out.push_str(&format!("{t},{s},{f}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Timestamp input: either one series (column `t`) or an ensemble
/// (columns `replica,t`).
#[derive(Debug)]
pub enum TimestampData {
    Single(Vec<f64>),
    Replicated(Vec<Vec<f64>>),
}

/// Reads a timestamp CSV. A single column is one series; two columns are
/// `replica,t`. The header row is optional and timestamps may be
/// unsorted; callers sort. Values must be finite and nonnegative.
pub fn read_timestamps(path: &Path) -> Result<TimestampData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut single: Vec<f64> = Vec::new();
    let mut grouped: std::collections::BTreeMap<u64, Vec<f64>> = std::collections::BTreeMap::new();
    let mut two_column: Option<bool> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let is_two = match fields.len() {
            1 => false,
            2 => true,
            n => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    message: format!("expected 1 or 2 columns, found {n}"),
                })
            }
        };
        match two_column {
            None => two_column = Some(is_two),
            Some(expect) if expect != is_two => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    message: "mixed column counts".into(),
                })
            }
            _ => {}
        }
        if is_two {
            let (rep, t) = (fields[0], fields[1]);
            // optional header
            if rep.parse::<u64>().is_err() {
                if lineno == 0 {
                    continue;
                }
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    message: format!("bad replica id {rep:?}"),
                });
            }
            let rep: u64 = rep.parse().unwrap();
            let t = parse_time(t, path, lineno)?;
            grouped.entry(rep).or_default().push(t);
        } else {
            let raw = fields[0];
            if raw.parse::<f64>().is_err() {
                if lineno == 0 {
                    continue;
                }
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    message: format!("bad timestamp {raw:?}"),
                });
            }
            single.push(parse_time(raw, path, lineno)?);
        }
    }

    match two_column {
        Some(true) => Ok(TimestampData::Replicated(
            grouped.into_values().collect(),
        )),
        Some(false) if !single.is_empty() => Ok(TimestampData::Single(single)),
        _ => Err(Error::EmptySample(format!(
            "no timestamps in {}",
            path.display()
        ))),
    }
}

fn parse_time(raw: &str, path: &Path, lineno: usize) -> Result<f64> {
    let t: f64 = raw.parse().map_err(|_| Error::Parse {
        path: path.into(),
        line: lineno + 1,
        message: format!("bad timestamp {raw:?}"),
    })?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Parse {
            path: path.into(),
            line: lineno + 1,
            message: format!("timestamp must be finite and >= 0, got {t}"),
        });
    }
    Ok(t)
}
