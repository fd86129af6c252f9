//! Run records and their on-disk form: CSV series, JSON metadata, collision
//! intervals and a gnuplot script, written atomically with a hashed manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::CollisionInterval;
use crate::error::{Error, Result};

pub const METADATA_FILE: &str = "metadata.json";
pub const SERIES_FILE: &str = "series.csv";
pub const INTERVALS_FILE: &str = "intervals.json";
pub const PLOT_FILE: &str = "plots.gp";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Column-named table of reals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: vec![] }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: &[f64]) -> Result<()> {
        if values.len() != self.rows.len() {
            return Err(Error::contract(format!(
                "column has {} values for {} rows",
                values.len(),
                self.rows.len()
            )));
        }
        self.columns.push(name.into());
        for (r, v) in self.rows.iter_mut().zip(values) {
            r.push(*v);
        }
        Ok(())
    }

    /// CSV with 17 significant digits; non-finite entries are written as `nan`/`inf`/`-inf`.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                if v.is_finite() {
                    let _ = write!(s, "{v:.16e}");
                } else if v.is_nan() {
                    s.push_str("nan");
                } else if *v > 0.0 {
                    s.push_str("inf");
                } else {
                    s.push_str("-inf");
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::ConfigParse("empty CSV".into()))?;
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = vec![];
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::ConfigParse(format!("CSV line {}: cannot read {s:?}", i + 2)))
                })
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(Error::ConfigParse(format!(
                    "CSV line {}: {} fields for {} columns",
                    i + 2,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

/// Everything a scenario produces.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    pub metadata: serde_json::Value,
    pub series: Option<Series>,
    pub intervals: Option<Vec<CollisionInterval>>,
    pub plot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn hash_of(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|f| f.path == path).map(|f| f.sha256.as_str())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Write `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
    Ok(target)
}

fn to_json(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Write the record into `dir` and return the manifest (also written as `manifest.json`).
/// Files listed in a previous manifest but absent from this record are removed.
pub fn emit_outputs(record: &RunRecord, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![(METADATA_FILE, to_json(&record.metadata))];
    if let Some(s) = &record.series {
        files.push((SERIES_FILE, s.to_csv().into_bytes()));
    }
    if let Some(iv) = &record.intervals {
        files.push((INTERVALS_FILE, to_json(iv)));
    }
    if let Some(p) = &record.plot {
        files.push((PLOT_FILE, p.clone().into_bytes()));
    }
    let previous: Option<Manifest> = fs::read(dir.join(MANIFEST_FILE))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok());
    let mut manifest = Manifest::default();
    for (name, bytes) in &files {
        write_atomic(dir, name, bytes)?;
        manifest.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }
    write_atomic(dir, MANIFEST_FILE, &to_json(&manifest))?;
    if let Some(prev) = previous {
        for f in prev.files {
            let stale = manifest.files.iter().all(|m| m.path != f.path);
            if stale && !f.path.contains('/') && !f.path.contains("..") {
                let p = dir.join(&f.path);
                if p.exists() {
                    fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
                }
            }
        }
    }
    Ok(manifest)
}

/// Gnuplot script plotting the named columns of `series.csv` against the first column.
pub fn plot_script(series: &Series, panels: &[(&str, Vec<String>)]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
    for (title, cols) in panels {
        let present: Vec<usize> = cols
            .iter()
            .filter_map(|c| series.columns.iter().position(|x| x == c))
            .collect();
        if present.is_empty() {
            continue;
        }
        let stem: String = title
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let _ = writeln!(s, "set output '{stem}.png'");
        let _ = writeln!(s, "set title '{title}'");
        let _ = writeln!(s, "set xlabel '{}'", series.columns[0]);
        let parts: Vec<String> = present
            .iter()
            .map(|k| format!("'{SERIES_FILE}' using 1:{} with lines", k + 1))
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> Series {
        Series {
            columns: vec!["t".into(), "d".into()],
            rows: vec![vec![0.0, 0.1], vec![0.5, 1.0 / 3.0]],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = series();
        let back = Series::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        assert!(s.to_csv().contains("3.3333333333333331e-1"));
    }

    #[test]
    fn empty_record_writes_metadata_only() {
        let dir = tempfile::tempdir().unwrap();
        let m = emit_outputs(&RunRecord::default(), dir.path()).unwrap();
        assert_eq!(m.files.len(), 1);
        assert_eq!(m.files[0].path, METADATA_FILE);
    }

    #[test]
    fn standard_record_and_rerun() {
        let dir = tempfile::tempdir().unwrap();
        let s = series();
        let mut rec = RunRecord {
            metadata: serde_json::json!({"k": 1}),
            plot: Some(plot_script(&s, &[("d", vec!["d".into()])])),
            series: Some(s),
            intervals: Some(vec![]),
        };
        let m1 = emit_outputs(&rec, dir.path()).unwrap();
        let names: Vec<&str> = m1.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, vec![METADATA_FILE, SERIES_FILE, INTERVALS_FILE, PLOT_FILE]);
        rec.metadata = serde_json::json!({"k": 2});
        let m2 = emit_outputs(&rec, dir.path()).unwrap();
        assert_ne!(m1.hash_of(METADATA_FILE), m2.hash_of(METADATA_FILE));
        assert_eq!(m1.hash_of(SERIES_FILE), m2.hash_of(SERIES_FILE));
        let on_disk = fs::read(dir.path().join(METADATA_FILE)).unwrap();
        assert_eq!(Some(sha256_hex(&on_disk).as_str()), m2.hash_of(METADATA_FILE));
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
        emit_outputs(&RunRecord::default(), dir.path()).unwrap();
        assert!(!dir.path().join(SERIES_FILE).exists());
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        let e = emit_outputs(&RunRecord::default(), &file.join("sub")).unwrap_err();
        assert_eq!(e.exit_code(), 4);
        assert!(e.to_string().contains("plain"));
    }
}
