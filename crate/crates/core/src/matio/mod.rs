//! Matrix ingestion and characterization.
//!
//! Parses Matrix Market coordinate files into a canonical COO form, computes
//! the row-length statistics the search engine keys its pruning on, and
//! provides the brute-force SpMV oracle every generated design is verified
//! against.

mod cache;
mod market;

pub use cache::{read_coo_cache, write_coo_cache};
pub use market::{parse_matrix_market, parse_matrix_market_str};

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatioError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("entry {entry} has index ({row}, {col}) outside {n_rows}x{n_cols}")]
    IndexOutOfRange {
        entry: usize,
        row: i64,
        col: i64,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("row {row} has no nonzeros (empty rows are not supported)")]
    EmptyRow { row: usize },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad cache file: {0}")]
    BadCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Canonical source representation of the input sparse matrix.
///
/// Entries are sorted lexicographically by (row, col), hold no duplicates,
/// and every row has at least one nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_idx: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CooMatrix<T> {
    /// Builds a matrix from triples, enforcing all invariants.
    pub fn from_triples(
        n_rows: usize,
        n_cols: usize,
        mut triples: Vec<(usize, usize, T)>,
    ) -> Result<Self, MatioError> {
        triples.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_idx = Vec::with_capacity(triples.len());
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        for (i, &(r, c, v)) in triples.iter().enumerate() {
            if r >= n_rows || c >= n_cols {
                return Err(MatioError::IndexOutOfRange {
                    entry: i,
                    row: r as i64,
                    col: c as i64,
                    n_rows,
                    n_cols,
                });
            }
            if i > 0 && triples[i - 1].0 == r && triples[i - 1].1 == c {
                return Err(MatioError::DuplicateEntry { row: r, col: c });
            }
            row_idx.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let m = CooMatrix {
            n_rows,
            n_cols,
            row_idx,
            col_idx,
            values,
        };
        m.check_no_empty_rows()?;
        Ok(m)
    }

    fn check_no_empty_rows(&self) -> Result<(), MatioError> {
        let mut seen = vec![false; self.n_rows];
        for &r in &self.row_idx {
            seen[r] = true;
        }
        if let Some(row) = seen.iter().position(|&s| !s) {
            return Err(MatioError::EmptyRow { row });
        }
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Number of nonzeros in each row.
    pub fn row_lengths(&self) -> Vec<usize> {
        let mut lens = vec![0usize; self.n_rows];
        for &r in &self.row_idx {
            lens[r] += 1;
        }
        lens
    }

    /// Number of nonzeros in each column.
    pub fn col_lengths(&self) -> Vec<usize> {
        let mut lens = vec![0usize; self.n_cols];
        for &c in &self.col_idx {
            lens[c] += 1;
        }
        lens
    }

    /// Converts the value type, e.g. the f64 ingestion form to f32 mode.
    pub fn cast<U: Scalar>(&self) -> CooMatrix<U> {
        CooMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_idx: self.row_idx.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }

    /// Renders the matrix as Matrix Market coordinate/general text.
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        out.push_str(&format!("{} {} {}\n", self.n_rows, self.n_cols, self.nnz()));
        for i in 0..self.nnz() {
            out.push_str(&format!(
                "{} {} {:e}\n",
                self.row_idx[i] + 1,
                self.col_idx[i] + 1,
                self.values[i]
            ));
        }
        out
    }
}

/// Row-length statistics of a matrix; drives pruning decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStats {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
    /// nnz / n_rows, exactly.
    pub avg_row_len: f64,
    /// Mean squared deviation of row lengths from the average.
    pub row_len_variance: f64,
    pub max_row_len: usize,
    pub min_row_len: usize,
}

impl MatrixStats {
    /// A matrix is irregular when its row-length variance exceeds 100.
    pub fn is_irregular(&self) -> bool {
        self.row_len_variance > 100.0
    }
}

/// Computes row-length statistics.
pub fn compute_stats<T: Scalar>(m: &CooMatrix<T>) -> MatrixStats {
    let lens = m.row_lengths();
    let avg = m.nnz() as f64 / m.n_rows as f64;
    let variance = lens
        .iter()
        .map(|&l| {
            let d = l as f64 - avg;
            d * d
        })
        .sum::<f64>()
        / m.n_rows as f64;
    MatrixStats {
        n_rows: m.n_rows,
        n_cols: m.n_cols,
        nnz: m.nnz(),
        avg_row_len: avg,
        row_len_variance: variance,
        max_row_len: lens.iter().copied().max().unwrap_or(0),
        min_row_len: lens.iter().copied().min().unwrap_or(0),
    }
}

/// Brute-force y = Ax, accumulated in entry order. The ground truth that
/// every generated kernel plan must reproduce.
pub fn spmv_oracle<T: Scalar>(m: &CooMatrix<T>, x: &[T]) -> Result<Vec<T>, MatioError> {
    if x.len() != m.n_cols {
        return Err(MatioError::DimensionMismatch {
            expected: m.n_cols,
            got: x.len(),
        });
    }
    let mut y = vec![T::zero(); m.n_rows];
    for i in 0..m.nnz() {
        y[m.row_idx[i]] += m.values[i] * x[m.col_idx[i]];
    }
    Ok(y)
}

#[cfg(test)]
mod tests;
