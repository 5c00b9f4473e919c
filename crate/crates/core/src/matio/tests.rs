use super::*;

/// The 4x4 matrix used throughout the test suite: rows of lengths
/// [2, 1, 3, 1], values 1..=7 in entry order.
pub fn canonical_a() -> CooMatrix<f64> {
    CooMatrix::from_triples(
        4,
        4,
        vec![
            (0, 0, 1.0),
            (0, 2, 2.0),
            (1, 1, 3.0),
            (2, 0, 4.0),
            (2, 1, 5.0),
            (2, 3, 6.0),
            (3, 3, 7.0),
        ],
    )
    .unwrap()
}

#[test]
fn parses_one_by_one() {
    let m = parse_matrix_market_str("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 5.0\n").unwrap();
    assert_eq!(m.n_rows, 1);
    assert_eq!(m.nnz(), 1);
    assert_eq!(m.values, vec![5.0]);
}

#[test]
fn expands_symmetric_storage() {
    let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 1 3.0\n";
    let m = parse_matrix_market_str(text).unwrap();
    assert_eq!(m.nnz(), 3);
    let triples: Vec<(usize, usize, f64)> = (0..3).map(|i| (m.row_idx[i], m.col_idx[i], m.values[i])).collect();
    assert_eq!(triples, vec![(0, 0, 1.0), (0, 1, 3.0), (1, 0, 3.0)]);
}

#[test]
fn rejects_empty_row() {
    // 3x3 where row 2 (1-based) has no entries
    let text = "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1.0\n3 1 2.0\n3 3 4.0\n";
    let err = parse_matrix_market_str(text).unwrap_err();
    assert!(matches!(err, MatioError::EmptyRow { row: 1 }));
}

#[test]
fn rejects_duplicates_and_bad_indices() {
    let dup = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n";
    assert!(matches!(
        parse_matrix_market_str(dup).unwrap_err(),
        MatioError::DuplicateEntry { .. }
    ));
    let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
    assert!(matches!(
        parse_matrix_market_str(oob).unwrap_err(),
        MatioError::IndexOutOfRange { .. }
    ));
}

#[test]
fn rejects_bad_headers() {
    for text in [
        "%%MatrixMarket matrix array real general\n",
        "%%MatrixMarket matrix coordinate complex general\n",
        "not a header\n",
    ] {
        assert!(matches!(
            parse_matrix_market_str(text).unwrap_err(),
            MatioError::MalformedHeader(_)
        ));
    }
}

#[test]
fn pattern_field_gets_unit_values() {
    let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n";
    let m = parse_matrix_market_str(text).unwrap();
    assert_eq!(m.values, vec![1.0, 1.0]);
}

#[test]
fn stats_on_canonical_matrix() {
    let s = compute_stats(&canonical_a());
    assert_eq!(s.avg_row_len, 1.75);
    assert_eq!(s.row_len_variance, 0.6875);
    assert_eq!(s.max_row_len, 3);
    assert_eq!(s.min_row_len, 1);
    assert!(!s.is_irregular());
}

#[test]
fn stats_variance_boundary_is_regular() {
    // rows of lengths [1, 21]: avg 11, variance exactly 100 -> still regular
    let mut triples = vec![(0usize, 0usize, 1.0)];
    for c in 0..21 {
        triples.push((1, c, 1.0));
    }
    let m = CooMatrix::from_triples(2, 21, triples).unwrap();
    let s = compute_stats(&m);
    assert_eq!(s.avg_row_len, 11.0);
    assert_eq!(s.row_len_variance, 100.0);
    assert!(!s.is_irregular());
}

#[test]
fn stats_uniform_rows_have_zero_variance() {
    let m = CooMatrix::from_triples(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
    assert_eq!(compute_stats(&m).row_len_variance, 0.0);
}

#[test]
fn oracle_identity_and_canonical() {
    let id = CooMatrix::from_triples(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
    assert_eq!(spmv_oracle(&id, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);

    let a = canonical_a();
    assert_eq!(spmv_oracle(&a, &[1.0; 4]).unwrap(), vec![3.0, 3.0, 15.0, 7.0]);
    assert_eq!(spmv_oracle(&a, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    assert!(matches!(
        spmv_oracle(&a, &[1.0; 3]).unwrap_err(),
        MatioError::DimensionMismatch { .. }
    ));
}

#[test]
fn coo_cache_round_trip() {
    let a = canonical_a();
    let mut buf = Vec::new();
    write_coo_cache(&a, &mut buf).unwrap();
    let back = read_coo_cache(&mut buf.as_slice()).unwrap();
    assert_eq!(a, back);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_matrix() -> impl Strategy<Value = CooMatrix<f64>> {
        (1usize..12, 1usize..12)
            .prop_flat_map(|(n_rows, n_cols)| {
                let row = proptest::collection::vec(
                    proptest::collection::btree_set(0..n_cols, 1..=n_cols.min(6)),
                    n_rows,
                );
                (Just(n_rows), Just(n_cols), row)
            })
            .prop_map(|(n_rows, n_cols, row_cols)| {
                let mut triples = Vec::new();
                for (r, cols) in row_cols.into_iter().enumerate() {
                    for c in cols {
                        triples.push((r, c, (r * 31 + c) as f64 * 0.5 + 1.0));
                    }
                }
                CooMatrix::from_triples(n_rows, n_cols, triples).unwrap()
            })
    }

    proptest! {
        #[test]
        fn market_round_trip(m in arb_matrix()) {
            let text = m.to_matrix_market();
            let back = parse_matrix_market_str(&text).unwrap();
            prop_assert_eq!(m, back);
        }

        #[test]
        fn oracle_matches_dense_product(m in arb_matrix()) {
            let x: Vec<f64> = (0..m.n_cols).map(|i| (i as f64 * 0.37) - 1.0).collect();
            let y = spmv_oracle(&m, &x).unwrap();
            // dense reference
            let mut dense = vec![vec![0.0f64; m.n_cols]; m.n_rows];
            for i in 0..m.nnz() {
                dense[m.row_idx[i]][m.col_idx[i]] = m.values[i];
            }
            for r in 0..m.n_rows {
                let want: f64 = (0..m.n_cols).map(|c| dense[r][c] * x[c]).sum();
                prop_assert!((y[r] - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
    }
}
