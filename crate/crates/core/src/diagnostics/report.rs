use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows of numbers under named columns plus a provenance tag per row
/// (`formula`, `grid`, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub values: Vec<f64>,
    pub provenance: String,
}

impl ReportTable {
    pub fn new(name: &str, columns: Vec<String>) -> Self {
        ReportTable {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, values: Vec<f64>, provenance: &str) {
        assert_eq!(
            values.len(),
            self.columns.len(),
            "row width differs from header"
        );
        self.rows.push(ReportRow {
            values,
            provenance: provenance.to_string(),
        });
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    /// Rows whose provenance matches.
    pub fn filtered(&self, provenance: &str) -> ReportTable {
        ReportTable {
            name: self.name.clone(),
            columns: self.columns.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.provenance == provenance)
                .cloned()
                .collect(),
            notes: self.notes.clone(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.values.iter().all(|v| v.is_finite()))
    }

    /// Header row naming every column; numbers in shortest round-trip form.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.columns.clone();
        header.push("provenance".into());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.values.iter().map(|v| format!("{v:?}")).collect();
            rec.push(r.provenance.clone());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(String::from)
            .collect();
        let Some((last, cols)) = header.split_last() else {
            return Err(Error::arg("empty csv header"));
        };
        if last != "provenance" {
            return Err(Error::arg("last csv column must be provenance"));
        }
        let mut table = ReportTable::new(name, cols.to_vec());
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let values = cols
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    rec[i]
                        .parse::<f64>()
                        .map_err(|e| Error::arg(format!("bad number {:?}: {e}", &rec[i])))
                })
                .collect::<Result<Vec<f64>>>()?;
            table.push(values, &rec[cols.len()]);
        }
        Ok(table)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// One named pass/fail verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Relative size of a decrease that counts as real rather than rounding.
pub const TREND_FLOOR: f64 = 1e-10;

/// Each step drops by more than `TREND_FLOOR · scale`.
pub fn strictly_decreasing(values: &[f64], scale: f64) -> bool {
    let floor = TREND_FLOOR * scale.abs();
    values.len() >= 2 && values.windows(2).all(|w| w[0] - w[1] > floor)
}

pub fn format_series(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Trend verdict: strict decrease and, when `max_ratio` is given,
/// `final/initial < max_ratio`.
pub fn trend_assertion(
    name: &str,
    values: &[f64],
    scale: f64,
    max_ratio: Option<f64>,
) -> Assertion {
    let dec = strictly_decreasing(values, scale);
    let ratio = match (values.first(), values.last()) {
        (Some(a), Some(b)) if *a != 0.0 => b / a,
        _ => f64::NAN,
    };
    let ratio_ok = max_ratio.is_none_or(|m| ratio < m);
    let mut detail = format!(
        "values {}; strictly decreasing: {dec}",
        format_series(values)
    );
    if let Some(m) = max_ratio {
        detail.push_str(&format!("; final/initial {ratio:.4} (< {m} required)"));
    }
    Assertion::new(name, dec && ratio_ok, detail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = ReportTable::new("sweep", vec!["N".into(), "x".into()]);
        t.push(vec![8.0, 0.1], "grid");
        t.push(vec![16.0, 1.0 / 3.0], "formula");
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("N,x,provenance\n8.0,0.1,grid\n"));
        let back = ReportTable::from_csv("sweep", &text).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.filtered("grid").rows.len(), 1);
    }

    #[test]
    fn trends_need_real_decreases() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0], 3.0));
        assert!(!strictly_decreasing(&[3.0, 2.0, 2.0], 3.0));
        // rounding-level wiggles around zero are not a trend
        assert!(!strictly_decreasing(
            &[2e-15, 1e-15, -3e-16],
            std::f64::consts::TAU
        ));
        assert!(!strictly_decreasing(&[1.0], 1.0));
        let a = trend_assertion("t", &[4.0, 2.0, 1.5], 4.0, Some(0.5));
        assert!(a.passed);
        assert!(!trend_assertion("t", &[4.0, 3.0, 2.5], 4.0, Some(0.5)).passed);
    }
}
