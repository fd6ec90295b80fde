//! Regression datasets and their CSV / JSON file formats.
//!
//! CSV: a header `phi_1,...,phi_d,y` followed by one row per sample.
//! JSON: `{"regressors": [[...], ...], "outputs": [...]}`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpsError};

/// `n` regressor rows of dimension `d` and the matching outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    regressors: DMatrix<f64>,
    outputs: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    regressors: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(regressors: DMatrix<f64>, outputs: DVector<f64>) -> Result<Self> {
        let (n, d) = regressors.shape();
        if d == 0 {
            return Err(SpsError::config("regressor dimension must be at least 1"));
        }
        if n < d {
            return Err(SpsError::DegenerateSample { n, d });
        }
        if outputs.len() != n {
            return Err(SpsError::DimensionMismatch { expected: n, got: outputs.len() });
        }
        if let Some(t) = (0..n).find(|&t| {
            !outputs[t].is_finite() || regressors.row(t).iter().any(|v| !v.is_finite())
        }) {
            return Err(SpsError::config(format!("sample {} is not finite", t + 1)));
        }
        Ok(Dataset { regressors, outputs })
    }

    /// Builds a dataset from row vectors `phi_t` and outputs `y_t`.
    pub fn from_rows(rows: &[Vec<f64>], outputs: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(SpsError::DimensionMismatch { expected: d, got: bad.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(
            DMatrix::from_row_slice(rows.len(), d, &flat),
            DVector::from_vec(outputs),
        )
    }

    pub fn n(&self) -> usize {
        self.regressors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.regressors.ncols()
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.regressors
    }

    pub fn outputs(&self) -> &DVector<f64> {
        &self.outputs
    }

    /// Regressors flattened row-major (`phi_1` first), for tight loops.
    pub fn regressor_rows(&self) -> Vec<f64> {
        self.regressors.transpose().as_slice().to_vec()
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| SpsError::Parse { line: 1, message: e.to_string() })?
            .clone();
        let d = header.len().saturating_sub(1);
        if d == 0 {
            return Err(SpsError::Parse {
                line: 1,
                message: "header must be phi_1,...,phi_d,y".into(),
            });
        }
        for (k, name) in header.iter().enumerate() {
            let expected = if k == d { "y".to_string() } else { format!("phi_{}", k + 1) };
            if name != expected {
                return Err(SpsError::Parse {
                    line: 1,
                    message: format!("column {}: expected `{expected}`, found `{name}`", k + 1),
                });
            }
        }

        let mut flat = Vec::new();
        let mut outputs = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| SpsError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != d + 1 {
                return Err(SpsError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", d + 1, record.len()),
                });
            }
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| SpsError::Parse {
                    line,
                    message: format!("field {} (`{field}`) is not a number", k + 1),
                })?;
                if !v.is_finite() {
                    return Err(SpsError::Parse {
                        line,
                        message: format!("field {} is not finite", k + 1),
                    });
                }
                if k == d {
                    outputs.push(v);
                } else {
                    flat.push(v);
                }
            }
        }
        let n = outputs.len();
        Self::new(DMatrix::from_row_slice(n, d, &flat), DVector::from_vec(outputs))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let header: Vec<String> = (1..=d)
            .map(|k| format!("phi_{k}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.n() {
            let row: Vec<String> = self
                .regressors
                .row(t)
                .iter()
                .chain(std::iter::once(&self.outputs[t]))
                .map(|v| format!("{v:e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let raw: DatasetJson = serde_json::from_reader(reader)?;
        Self::from_rows(&raw.regressors, raw.outputs)
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = DatasetJson {
            regressors: (0..self.n())
                .map(|t| self.regressors.row(t).iter().copied().collect())
                .collect(),
            outputs: self.outputs.iter().copied().collect(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    /// Loads a dataset, choosing the format by extension (`.json` or CSV).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json_reader(file),
            _ => Self::from_csv_reader(file),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let data = Dataset::from_rows(
            &[vec![1.0, 0.5], vec![-0.25, 2.0], vec![3.0, 1.0]],
            vec![0.1, -0.2, 0.3],
        )
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn json_round_trip() {
        let data = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![3.0, 4.0]).unwrap();
        let back = Dataset::from_json_reader(data.to_json().unwrap().as_bytes()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "phi_1,phi_2,y\n1,2,3\n4,oops,6\n";
        match Dataset::from_csv_reader(text.as_bytes()) {
            Err(SpsError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = "phi_1,phi_2,y\n1,2,3\n4,5\n";
        assert!(matches!(
            Dataset::from_csv_reader(short.as_bytes()),
            Err(SpsError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn bad_header_rejected() {
        let text = "a,b,y\n1,2,3\n";
        assert!(matches!(
            Dataset::from_csv_reader(text.as_bytes()),
            Err(SpsError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_too_few_samples_and_nonfinite() {
        assert!(matches!(
            Dataset::from_rows(&[vec![1.0, 2.0]], vec![1.0]),
            Err(SpsError::DegenerateSample { n: 1, d: 2 })
        ));
        assert!(Dataset::from_rows(&[vec![f64::NAN]], vec![1.0]).is_err());
    }
}
