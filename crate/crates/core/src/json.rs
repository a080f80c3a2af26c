//! On-disk JSON format.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested arrays. A state file is
//! `{"dim": d, "matrix": [[...]]}` and a POVM file is `{"dim": d, "elements": [[[...]]], ...]}`.
//! Parse errors carry serde_json's line and column.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator};
use crate::objects::{DensityMatrix, Povm};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: JsonMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub dim: usize,
    pub elements: Vec<JsonMatrix>,
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Square matrix of declared dimension `dim`.
pub fn matrix_from_json(rows: &JsonMatrix, dim: usize) -> Result<CMatrix> {
    if rows.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rows.len(),
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::NotSquare {
            rows: dim,
            cols: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = rows[i][j];
        Complex64::new(re, im)
    }))
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        StateFile {
            dim: rho.dim(),
            matrix: matrix_to_json(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(matrix_from_json(&self.matrix, self.dim)?)
    }
}

impl PovmFile {
    pub fn from_povm(m: &Povm) -> Self {
        PovmFile {
            dim: m.dim(),
            elements: m
                .elements()
                .iter()
                .map(|e| matrix_to_json(e.matrix()))
                .collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let elements = self
            .elements
            .iter()
            .map(|e| HermitianOperator::new(matrix_from_json(e, self.dim)?))
            .collect::<Result<_>>()?;
        Povm::new(elements)
    }
}

pub fn parse_state(text: &str) -> Result<DensityMatrix> {
    serde_json::from_str::<StateFile>(text)?.to_state()
}

pub fn parse_povm(text: &str) -> Result<Povm> {
    serde_json::from_str::<PovmFile>(text)?.to_povm()
}

pub fn read_state(path: &std::path::Path) -> Result<DensityMatrix> {
    parse_state(&std::fs::read_to_string(path)?)
}

pub fn read_povm(path: &std::path::Path) -> Result<Povm> {
    parse_povm(&std::fs::read_to_string(path)?)
}
