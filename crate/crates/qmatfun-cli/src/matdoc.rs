//! JSON matrix interchange: square complex matrices with entries stored as
//! `[re, im]` pairs in row-major order.

use std::path::Path;

use num_complex::Complex64;
use qmatfun::ComplexMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let p = m.dim();
        let mut data = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                let e = m.get(i, j);
                data.push([e.re, e.im]);
            }
        }
        MatrixDocument {
            rows: p,
            cols: p,
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, String> {
        if self.rows != self.cols {
            return Err(format!(
                "matrix document must be square, got {}x{}",
                self.rows, self.cols
            ));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix document has {} entries, expected {}",
                self.data.len(),
                self.rows * self.cols
            ));
        }
        let entries: Vec<Complex64> = self
            .data
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        ComplexMatrix::from_row_slice(self.rows, &entries).map_err(|e| e.to_string())
    }
}

/// Reads a matrix document from a JSON file.
pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc: MatrixDocument = serde_json::from_str(&text)
        .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
    doc.to_matrix()
        .map_err(|e| format!("{}: {e}", path.display()))
}
