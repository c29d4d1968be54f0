//! JSON representation of complex numbers and matrices.
//!
//! A complex number is a two-element array `[re, im]`; vectors and matrices
//! are (nested) arrays of those, matrices row by row.

use mlab::linalg::{CMatrix, CVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type WireComplex = [f64; 2];
pub type WireVector = Vec<WireComplex>;
pub type WireMatrix = Vec<Vec<WireComplex>>;

/// Matrix entry that may be written as a plain real number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex(WireComplex),
}

impl Entry {
    pub fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub fn complex(z: Complex64) -> WireComplex {
    [z.re, z.im]
}

pub fn vector_to_wire(v: &CVector) -> WireVector {
    v.iter().map(|z| complex(*z)).collect()
}

pub fn vector_from_wire(v: &[WireComplex]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|[re, im]| Complex64::new(*re, *im)))
}

pub fn matrix_to_wire(m: &CMatrix) -> WireMatrix {
    m.row_iter()
        .map(|row| row.iter().map(|z| complex(*z)).collect())
        .collect()
}

pub fn real_matrix_to_wire(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|row| row.iter().copied().collect())
        .collect()
}

fn rectangular<T: Copy>(rows: &[Vec<T>], what: &str) -> Result<(usize, usize), CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(CliError::validation(format!(
            "{what} must be a nonempty matrix"
        )));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::validation(format!(
            "{what}: row {i} has {} entries, expected {cols}",
            row.len()
        )));
    }
    Ok((rows.len(), cols))
}

pub fn matrix_from_wire(rows: &[Vec<WireComplex>], what: &str) -> Result<CMatrix, CliError> {
    let (r, c) = rectangular(rows, what)?;
    Ok(CMatrix::from_fn(r, c, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn matrix_from_entries(rows: &[Vec<Entry>], what: &str) -> Result<CMatrix, CliError> {
    let (r, c) = rectangular(rows, what)?;
    Ok(CMatrix::from_fn(r, c, |i, j| rows[i][j].value()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_accept_numbers_and_pairs() {
        let rows: Vec<Vec<Entry>> =
            serde_json::from_str("[[1, [0.5, -0.25]], [[0.5, 0.25], 1.0]]").unwrap();
        let m = matrix_from_entries(&rows, "g").unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.5, -0.25));
        assert_eq!(m[(1, 1)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let rows = vec![vec![[1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]];
        assert!(matrix_from_wire(&rows, "m").is_err());
        assert!(matrix_from_wire(&[], "m").is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64 * 0.5));
        assert_eq!(matrix_from_wire(&matrix_to_wire(&m), "m").unwrap(), m);
    }
}
