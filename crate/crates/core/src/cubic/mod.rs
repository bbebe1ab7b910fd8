//! Cubic matrices and the coefficient conditions that decide whether the
//! associated quadratic operator preserves the simplex.

mod conditions;

pub use conditions::{
    check_conditions, check_edge_necessity, quadratic_range_on_unit_interval, ConditionReport,
    DiagonalViolation, EdgeCheck, EdgeVerdict, PairCondition, PairViolation, SumCondition,
    UnitRange, ViolationKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `m x m x m` coefficient tensor `P[i][j][k]`.
///
/// Entry `(i, j, k)` is the weight of the product `x_i x_j` in output
/// coordinate `k`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl CubicMatrix {
    /// All-zero matrix of dimension `m`.
    pub fn zeros(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!(
                "cubic matrix dimension must be at least 2, got {m}"
            )));
        }
        Ok(Self {
            m,
            entries: vec![0.0; m * m * m],
        })
    }

    /// Builds a matrix by evaluating `f(i, j, k)` for every index triple.
    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut out = Self::zeros(m)?;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.entries[(i * m + j) * m + k] = f(i, j, k);
                }
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Builds a matrix from a nested `entries[i][j][k]` array.
    pub fn from_nested(entries: &[Vec<Vec<f64>>]) -> Result<Self> {
        let m = entries.len();
        for (i, plane) in entries.iter().enumerate() {
            if plane.len() != m {
                return Err(Error::Format(format!(
                    "entries[{i}] has {} rows, expected {m}",
                    plane.len()
                )));
            }
            for (j, row) in plane.iter().enumerate() {
                if row.len() != m {
                    return Err(Error::Format(format!(
                        "entries[{i}][{j}] has {} values, expected {m}",
                        row.len()
                    )));
                }
            }
        }
        Self::from_fn(m, |i, j, k| entries[i][j][k])
    }

    fn validate(&self) -> Result<()> {
        if let Some(pos) = self.entries.iter().position(|v| !v.is_finite()) {
            let m = self.m;
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {}, {})",
                pos / (m * m),
                (pos / m) % m,
                pos % m
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.m + j) * self.m + k]
    }

    /// Sets `P[i][j][k]`; non-finite values are rejected.
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite value {value} at ({i}, {j}, {k})"
            )));
        }
        let m = self.m;
        self.entries[(i * m + j) * m + k] = value;
        Ok(())
    }

    /// Sets both `P[i][j][k]` and `P[j][i][k]`.
    pub fn set_sym(&mut self, i: usize, j: usize, k: usize, value: f64) -> Result<()> {
        self.set(i, j, k, value)?;
        self.set(j, i, k, value)
    }

    /// The output weights `(P[i][j][0], ..., P[i][j][m-1])` of the pair `(i, j)`.
    pub fn row(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.m + j) * self.m;
        &self.entries[start..start + self.m]
    }

    pub fn is_symmetric(&self) -> bool {
        let m = self.m;
        (0..m).all(|i| (0..m).all(|j| self.row(i, j) == self.row(j, i)))
    }

    /// Replaces `P[i][j][k]` by `(P[i][j][k] + P[j][i][k]) / 2`.
    ///
    /// The quadratic operator is unchanged, and the result is exactly
    /// symmetric in `(i, j)`.
    pub fn symmetrize(&self) -> Result<Self> {
        self.validate()?;
        let m = self.m;
        let mut out = self.clone();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let a = self.get(i, j, k);
                    let b = self.get(j, i, k);
                    // `a == b` keeps already-symmetric entries bit-identical.
                    out.entries[(i * m + j) * m + k] = if a == b { a } else { (a + b) / 2.0 };
                }
            }
        }
        Ok(out)
    }

    /// Nested `entries[i][j][k]` copy, the layout of the matrix file.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let m = self.m;
        (0..m)
            .map(|i| (0..m).map(|j| self.row(i, j).to_vec()).collect())
            .collect()
    }

    /// Parses the JSON matrix file format and symmetrizes on ingest.
    pub fn from_json_str(text: &str) -> Result<LoadedMatrix> {
        let file: MatrixFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.entries.len() != file.m {
            return Err(Error::Format(format!(
                "declared m = {} but entries has {} planes",
                file.m,
                file.entries.len()
            )));
        }
        let raw = Self::from_nested(&file.entries)?;
        let matrix = raw.symmetrize()?;
        let symmetrization_changed = matrix != raw;
        Ok(LoadedMatrix {
            matrix,
            symmetrization_changed,
        })
    }

    pub fn to_json_string(&self) -> String {
        let file = MatrixFile {
            m: self.m,
            entries: self.to_nested(),
        };
        serde_json::to_string_pretty(&file).expect("matrix serializes")
    }
}

/// On-disk layout: `{"m": 3, "entries": [[[...], ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub m: usize,
    pub entries: Vec<Vec<Vec<f64>>>,
}

/// A matrix read from disk, together with whether symmetrization altered it.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub matrix: CubicMatrix,
    pub symmetrization_changed: bool,
}
