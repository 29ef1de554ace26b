//! CSV (one matrix row per line) and JSON (`{rows, cols, data}`) forms.

use std::fs;
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

impl Matrix {
    /// Rows as lines of comma-separated decimals. Values use Rust's shortest
    /// round-trip formatting, so parsing the output reproduces every bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows() {
            let line: Vec<String> = (0..self.cols()).map(|j| format!("{:?}", self[(i, j)])).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Matrix> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut values = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            match cols {
                None => cols = Some(record.len()),
                Some(c) if c != record.len() => {
                    return Err(Error::Parse(format!(
                        "row {} has {} fields, expected {c}",
                        rows + 1,
                        record.len()
                    )))
                }
                _ => {}
            }
            for field in record.iter() {
                let x: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: '{field}' is not a number", rows + 1)))?;
                values.push(x);
            }
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Parse("empty CSV matrix".into()))?;
        Matrix::from_row_major(rows, cols, &values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Matrix> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Loads a matrix from `.json` (matrix-JSON) or any other extension (CSV).
    pub fn load(path: impl AsRef<Path>) -> Result<Matrix> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Matrix::from_json(&text)
        } else {
            Matrix::from_csv(&text)
        };
        parsed.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            self.to_json()
        } else {
            self.to_csv()
        };
        fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let a = Matrix::from_rows(&[[0.1, 1.0 / 3.0, -2.5e-300], [1e17, std::f64::consts::PI, 0.0]]);
        let text = a.to_csv();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(Matrix::from_csv(&text).unwrap(), a);
    }

    #[test]
    fn csv_rejects_ragged_and_garbage() {
        assert!(Matrix::from_csv("1,2\n3\n").is_err());
        assert!(Matrix::from_csv("1,x\n").is_err());
        assert!(Matrix::from_csv("").is_err());
        assert!(Matrix::from_csv("1,NaN\n").is_err());
    }

    #[test]
    fn csv_tolerates_whitespace_and_comments() {
        let m = Matrix::from_csv("# header\n 1, 2\n\n3 ,4\n").unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
    }

    #[test]
    fn file_round_trip_by_extension() {
        let dir = std::env::temp_dir().join(format!("landscape-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let a = Matrix::from_rows(&[[1.5, -2.0, 0.25]]);
        for name in ["a.csv", "a.json"] {
            let p = dir.join(name);
            a.save(&p).unwrap();
            assert_eq!(Matrix::load(&p).unwrap(), a);
        }
        fs::remove_dir_all(&dir).ok();
    }
}
