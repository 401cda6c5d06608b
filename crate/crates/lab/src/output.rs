//! CSV and JSON writers. Floats are written with 17 significant digits so
//! every `f64` survives a text round trip.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Short label for a lookahead value, safe in file names.
pub fn sigma_label(sigma: f64) -> String {
    format!("{sigma}")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| LabError::from(e).context(path.display().to_string()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Column-oriented view of a CSV file, for plotting.
pub struct CsvColumns {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvColumns {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| LabError::from(e).context(path.display().to_string()))?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    /// Parsed values of a column; blank cells become `None`.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| crate::error::usage(format!("no column `{name}` (have: {})", self.header.join(", "))))?;
        self.rows
            .iter()
            .map(|row| {
                let cell = row.get(j).map(String::as_str).unwrap_or("");
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .map_err(|_| crate::error::usage(format!("column `{name}`: `{cell}` is not a number")))
                }
            })
            .collect()
    }
}

/// Records every file written by a command, in write order.
#[derive(Debug, Default, Clone)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

impl Written {
    pub fn csv(&mut self, path: PathBuf, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        write_csv(&path, header, rows)?;
        self.files.push(path);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        write_json(&path, value)?;
        self.files.push(path);
        Ok(())
    }

    pub fn text(&mut self, path: PathBuf, body: &str) -> Result<()> {
        fs::write(&path, body).map_err(|e| LabError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_opt(None), "");
        assert_eq!(sigma_label(4.0), "4");
        assert_eq!(sigma_label(0.9), "0.9");
    }
}
