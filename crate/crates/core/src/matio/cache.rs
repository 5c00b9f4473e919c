//! Binary `.coo` cache: a faster-to-load mirror of a parsed matrix.
//!
//! Layout: 8 magic bytes, then n_rows/n_cols/nnz as little-endian u64,
//! then the row index, column index and value arrays (u64 / u64 / f64).

use std::io::{Read, Write};

use super::{CooMatrix, MatioError};

const MAGIC: &[u8; 8] = b"SPMVCOO1";

pub fn write_coo_cache<W: Write>(m: &CooMatrix<f64>, out: &mut W) -> Result<(), MatioError> {
    out.write_all(MAGIC)?;
    for v in [m.n_rows as u64, m.n_cols as u64, m.nnz() as u64] {
        out.write_all(&v.to_le_bytes())?;
    }
    for &r in &m.row_idx {
        out.write_all(&(r as u64).to_le_bytes())?;
    }
    for &c in &m.col_idx {
        out.write_all(&(c as u64).to_le_bytes())?;
    }
    for &v in &m.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_coo_cache<R: Read>(input: &mut R) -> Result<CooMatrix<f64>, MatioError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MatioError::BadCache("bad magic bytes".into()));
    }
    let mut buf8 = [0u8; 8];
    let mut read_u64 = |input: &mut R| -> Result<u64, MatioError> {
        input.read_exact(&mut buf8)?;
        Ok(u64::from_le_bytes(buf8))
    };
    let n_rows = read_u64(input)? as usize;
    let n_cols = read_u64(input)? as usize;
    let nnz = read_u64(input)? as usize;
    let mut triples = Vec::with_capacity(nnz);
    let mut rows = Vec::with_capacity(nnz);
    let mut cols = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        rows.push(read_u64(input)? as usize);
    }
    for _ in 0..nnz {
        cols.push(read_u64(input)? as usize);
    }
    for i in 0..nnz {
        input.read_exact(&mut buf8)?;
        triples.push((rows[i], cols[i], f64::from_le_bytes(buf8)));
    }
    CooMatrix::from_triples(n_rows, n_cols, triples)
}
