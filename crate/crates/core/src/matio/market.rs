//! Matrix Market coordinate reader.

use std::io::BufRead;

use super::{CooMatrix, MatioError};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Parses Matrix Market coordinate text from a reader.
///
/// Accepts real/integer/pattern fields and general/symmetric symmetry.
/// Symmetric storage is expanded to general, pattern entries get value 1.0,
/// and indices are converted from 1-based to 0-based.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CooMatrix<f64>, MatioError> {
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| MatioError::MalformedHeader("empty input".into()))?;
    let header = header?;
    let (field, symmetry) = parse_header(&header)?;

    // size line: first non-comment, non-blank line after the header
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let lineno = lineno + 1; // 1-based for messages
        if dims.is_none() {
            let mut it = text.split_whitespace();
            let m = next_count(&mut it, lineno, "row count")?;
            let n = next_count(&mut it, lineno, "column count")?;
            let nnz = next_count(&mut it, lineno, "nonzero count")?;
            dims = Some((m, n, nnz));
            triples.reserve(nnz);
            continue;
        }
        let (n_rows, n_cols, _) = dims.unwrap();
        let mut it = text.split_whitespace();
        let r = next_count(&mut it, lineno, "row index")? as i64;
        let c = next_count(&mut it, lineno, "column index")? as i64;
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => {
                let tok = it.next().ok_or_else(|| MatioError::Syntax {
                    line: lineno,
                    msg: "missing value".into(),
                })?;
                tok.parse::<f64>().map_err(|_| MatioError::Syntax {
                    line: lineno,
                    msg: format!("bad value `{tok}`"),
                })?
            }
        };
        if r < 1 || r as usize > n_rows || c < 1 || c as usize > n_cols {
            return Err(MatioError::IndexOutOfRange {
                entry: triples.len(),
                row: r - 1,
                col: c - 1,
                n_rows,
                n_cols,
            });
        }
        let (r, c) = (r as usize - 1, c as usize - 1);
        triples.push((r, c, v));
        if symmetry == Symmetry::Symmetric && r != c {
            triples.push((c, r, v));
        }
    }

    let (n_rows, n_cols, declared) = dims.ok_or_else(|| MatioError::Syntax {
        line: 0,
        msg: "missing size line".into(),
    })?;
    // stored entry count before symmetric expansion must match the size line
    let raw_stored = match symmetry {
        Symmetry::General => triples.len(),
        Symmetry::Symmetric => {
            let off_diag = triples.iter().filter(|&&(r, c, _)| r != c).count();
            triples.len() - off_diag / 2
        }
    };
    if raw_stored != declared {
        return Err(MatioError::Syntax {
            line: 0,
            msg: format!("size line declares {declared} entries, found {raw_stored}"),
        });
    }

    CooMatrix::from_triples(n_rows, n_cols, triples)
}

/// Convenience wrapper over [`parse_matrix_market`] for in-memory text.
pub fn parse_matrix_market_str(text: &str) -> Result<CooMatrix<f64>, MatioError> {
    parse_matrix_market(text.as_bytes())
}

fn parse_header(line: &str) -> Result<(Field, Symmetry), MatioError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 5 || !toks[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(MatioError::MalformedHeader(format!(
            "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`, got `{line}`"
        )));
    }
    if !toks[1].eq_ignore_ascii_case("matrix") {
        return Err(MatioError::MalformedHeader(format!(
            "unsupported object `{}`",
            toks[1]
        )));
    }
    if !toks[2].eq_ignore_ascii_case("coordinate") {
        return Err(MatioError::MalformedHeader(format!(
            "unsupported format `{}` (only coordinate is supported)",
            toks[2]
        )));
    }
    let field = match toks[3].to_ascii_lowercase().as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => {
            return Err(MatioError::MalformedHeader(format!(
                "unsupported field `{other}`"
            )))
        }
    };
    let symmetry = match toks[4].to_ascii_lowercase().as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => {
            return Err(MatioError::MalformedHeader(format!(
                "unsupported symmetry `{other}`"
            )))
        }
    };
    Ok((field, symmetry))
}

fn next_count<'a, I: Iterator<Item = &'a str>>(
    it: &mut I,
    line: usize,
    what: &str,
) -> Result<usize, MatioError> {
    let tok = it.next().ok_or_else(|| MatioError::Syntax {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse::<usize>().map_err(|_| MatioError::Syntax {
        line,
        msg: format!("bad {what} `{tok}`"),
    })
}
