use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub indices: Vec<usize>,
    pub pass: bool,
    /// Infinite for checks that could not be evaluated; written as `null`.
    #[serde(with = "residual")]
    pub max_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// A list of check records; passes iff every record passes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
        self.notes.extend(other.notes);
    }

    /// Records a pass/fail outcome without a numeric residual.
    pub fn flag(&mut self, name: &str, indices: &[usize], pass: bool, detail: Option<String>) {
        self.records.push(CheckRecord {
            name: name.to_string(),
            indices: indices.to_vec(),
            pass,
            max_residual: if pass { 0.0 } else { f64::INFINITY },
            detail,
        });
    }

    /// Records a domain error as a failed check.
    pub fn error(&mut self, name: &str, indices: &[usize], err: impl std::fmt::Display) {
        self.flag(name, indices, false, Some(err.to_string()));
    }

    /// Compares two blocks under the scalar mode's equality rule.
    pub fn compare<S: Scalar>(
        &mut self,
        name: &str,
        indices: &[usize],
        actual: &Matrix<S>,
        expected: &Matrix<S>,
        tol: f64,
    ) -> bool {
        let residual = actual.max_abs_diff(expected);
        let pass = actual.near(expected, tol);
        self.records.push(CheckRecord {
            name: name.to_string(),
            indices: indices.to_vec(),
            pass,
            max_residual: residual,
            detail: None,
        });
        pass
    }

    /// Compares two coefficient sequences, padding the shorter with zeros.
    pub fn compare_coeffs<S: Scalar>(
        &mut self,
        name: &str,
        indices: &[usize],
        actual: &[Matrix<S>],
        expected: &[Matrix<S>],
        tol: f64,
    ) -> bool {
        let (residual, pass) = coeff_distance(actual, expected, tol);
        self.records.push(CheckRecord {
            name: name.to_string(),
            indices: indices.to_vec(),
            pass,
            max_residual: residual,
            detail: None,
        });
        pass
    }
}

mod residual {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `(max residual, equal-under-mode)` for two zero-padded block sequences.
pub(crate) fn coeff_distance<S: Scalar>(a: &[Matrix<S>], b: &[Matrix<S>], tol: f64) -> (f64, bool) {
    let len = a.len().max(b.len());
    let mut residual: f64 = 0.0;
    let mut pass = true;
    for k in 0..len {
        match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => {
                residual = residual.max(x.max_abs_diff(y));
                pass &= x.near(y, tol);
            }
            (Some(x), None) | (None, Some(x)) => {
                residual = residual.max(x.max_abs());
                pass &= x.near(&Matrix::zeros(x.rows(), x.cols()), tol);
            }
            (None, None) => unreachable!(),
        }
    }
    (residual, pass)
}
