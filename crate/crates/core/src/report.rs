//! Deterministic CSV/JSON emission and atomic file writes.
//!
//! Floats in CSV use `{:.16e}` (17 significant digits); lines end in `\n`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::spectrum::SpectrumReport;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.16e}", if x == 0.0 { 0.0 } else { x })
    }
}

#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `re_lambda, im_lambda, residual, mode_tag, multiplicity`.
pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let mut t = CsvTable::new(&["re_lambda", "im_lambda", "residual", "mode_tag", "multiplicity"]);
    for e in &report.entries {
        t.push(vec![
            fmt_f64(e.lambda.re),
            fmt_f64(e.lambda.im),
            fmt_f64(e.residual),
            e.mode_tag.replace(',', ";"),
            e.multiplicity.to_string(),
        ]);
    }
    t.render()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::NumericalFailure(format!("JSON serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| crate::Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(crate::Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{SpectrumEntry, C64};

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn empty_spectrum_has_header_only() {
        assert_eq!(spectrum_csv(&SpectrumReport::default()), "re_lambda,im_lambda,residual,mode_tag,multiplicity\n");
    }

    #[test]
    fn spectrum_rows() {
        let r = SpectrumReport::new(vec![SpectrumEntry {
            lambda: C64::new(1.5, -0.25),
            residual: 1e-12,
            mode_tag: "n=0".into(),
            multiplicity: 1,
        }]);
        let csv = spectrum_csv(&r);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with("n=0,1\n"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("impedance-report-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "b\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_parent_is_io_error() {
        let p = Path::new("/nonexistent-dir-xyz/out.csv");
        assert!(matches!(write_atomic(p, "x"), Err(crate::Error::Io(_))));
    }
}
