//! Row-major JSON matrix format:
//! `{"n": 2, "entries": [[[re, im], [re, im]], [[re, im], [re, im]]]}`.
//!
//! With `"hermitian": true` the lower triangle may be omitted, either by
//! writing `null` for those entries or by giving row `i` only its entries
//! from the diagonal onward.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, HermitianMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<Vec<Option<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub hermitian: bool,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let entries = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| Some([m[(i, j)].re, m[(i, j)].im])).collect())
            .collect();
        MatrixJson {
            n: m.nrows(),
            entries,
            hermitian: false,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Parse("n: must be positive".into()));
        }
        if self.entries.len() != n {
            return Err(Error::Parse(format!(
                "entries: expected {n} rows, found {}",
                self.entries.len()
            )));
        }
        let mut m = CMatrix::zeros(n, n);
        let mut given = vec![vec![false; n]; n];
        for (i, row) in self.entries.iter().enumerate() {
            let offset = if row.len() == n {
                0
            } else if self.hermitian && row.len() == n - i {
                i
            } else {
                return Err(Error::Parse(format!(
                    "entries[{i}]: expected {n} entries, found {}",
                    row.len()
                )));
            };
            for (jj, e) in row.iter().enumerate() {
                let j = jj + offset;
                if let Some([re, im]) = e {
                    if !(re.is_finite() && im.is_finite()) {
                        return Err(Error::Parse(format!("entries[{i}][{jj}]: non-finite value")));
                    }
                    m[(i, j)] = Complex64::new(*re, *im);
                    given[i][j] = true;
                } else if !self.hermitian || j >= i {
                    return Err(Error::Parse(format!("entries[{i}][{jj}]: missing value")));
                }
            }
        }
        if self.hermitian {
            for i in 0..n {
                for j in 0..i {
                    if !given[i][j] {
                        m[(i, j)] = m[(j, i)].conj();
                    }
                }
            }
        }
        Ok(m)
    }
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let raw: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.to_matrix()
}

pub fn parse_hermitian(text: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(parse_matrix(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64 * 0.5));
        let text = serde_json::to_string(&MatrixJson::from_matrix(&m)).unwrap();
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn hermitian_upper_rows() {
        let text = r#"{"n": 2, "hermitian": true, "entries": [[[1,0],[2,3]], [[4,0]]]}"#;
        let h = parse_hermitian(text).unwrap();
        assert_eq!(h.matrix()[(1, 0)], Complex64::new(2.0, -3.0));
    }

    #[test]
    fn hermitian_null_lower() {
        let text = r#"{"n": 2, "hermitian": true, "entries": [[[1,0],[2,3]], [null,[4,0]]]}"#;
        let h = parse_hermitian(text).unwrap();
        assert_eq!(h.matrix()[(1, 0)], Complex64::new(2.0, -3.0));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_matrix(r#"{"n": 2, "entries": [[[1,0],[2,0]], [[1,0]]]}"#).unwrap_err();
        assert!(e.to_string().contains("entries[1]"));
        let e = parse_matrix(r#"{"n": 2, "entries": [[[1,0],null], [[1,0],[1,0]]]}"#).unwrap_err();
        assert!(e.to_string().contains("entries[0][1]"));
        let e = parse_matrix("{\"n\": 2,\n \"entries\": 5}").unwrap_err();
        assert!(e.to_string().contains("line 2"));
    }
}
