use std::collections::BTreeSet;

use super::*;
use crate::reference;

fn no_ban() -> BTreeSet<OperatorKind> {
    BTreeSet::new()
}

#[test]
fn successors_of_empty_graph_are_converting_ops() {
    let g = OperatorGraph::new();
    let got = legal_successors(&g, INPUT_NODE, &no_ban()).unwrap();
    let want: BTreeSet<_> = [
        OperatorKind::RowDiv,
        OperatorKind::ColDiv,
        OperatorKind::Sort,
        OperatorKind::SortSub,
        OperatorKind::Bin,
        OperatorKind::Compress,
    ]
    .into_iter()
    .collect();
    assert_eq!(got, want);
}

#[test]
fn successors_after_bmt_block_exclude_coarser_levels() {
    let mut g = OperatorGraph::new();
    let leaf = g.add_chain(
        INPUT_NODE,
        &[
            (OperatorKind::Compress, params::none()),
            (OperatorKind::BmtRowBlock, params::int("rows_per_block", 1)),
        ],
    );
    let got = legal_successors(&g, leaf, &no_ban()).unwrap();
    for k in [
        OperatorKind::BmtbRowBlock,
        OperatorKind::BmtbNnzBlock,
        OperatorKind::BmwRowBlock,
        OperatorKind::BmwNnzBlock,
        OperatorKind::Sort,
        OperatorKind::Compress,
        OperatorKind::WarpTotalRed,
        OperatorKind::ShmemOffsetRed,
    ] {
        assert!(!got.contains(&k), "{k} should be excluded");
    }
    for k in [
        OperatorKind::BmtPad,
        OperatorKind::ThreadTotalRed,
        OperatorKind::ThreadBitmapRed,
        OperatorKind::SetResources,
        OperatorKind::GmemAtomRed,
    ] {
        assert!(got.contains(&k), "{k} should be legal");
    }
}

#[test]
fn terminated_path_has_no_successors() {
    let g = reference::csr_scalar_graph();
    let leaf = g.leaves()[0];
    assert!(legal_successors(&g, leaf, &no_ban()).unwrap().is_empty());
}

#[test]
fn ban_list_filters_successors() {
    let g = OperatorGraph::new();
    let banned: BTreeSet<_> = [OperatorKind::Bin, OperatorKind::Sort].into_iter().collect();
    let got = legal_successors(&g, INPUT_NODE, &banned).unwrap();
    assert!(!got.contains(&OperatorKind::Bin));
    assert!(!got.contains(&OperatorKind::Sort));
    assert!(got.contains(&OperatorKind::Compress));
}

#[test]
fn unknown_node_is_an_error() {
    let g = OperatorGraph::new();
    assert!(legal_successors(&g, 99, &no_ban()).is_err());
}

#[test]
fn sell_style_graph_validates() {
    let g = reference::sell_graph(2);
    assert!(validate_graph(&g).is_empty());
    assert!(g.is_complete());
}

#[test]
fn sort_after_compress_is_a_stage_violation() {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[
            (OperatorKind::Compress, params::none()),
            (OperatorKind::Sort, params::none()),
        ],
    );
    let v = validate_graph(&g);
    assert_eq!(v.len(), 1);
    assert!(v[0].rule.contains("COMPRESS"));
}

#[test]
fn warp_reduction_without_bmw_is_a_level_violation() {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[
            (OperatorKind::Compress, params::none()),
            (OperatorKind::WarpTotalRed, params::none()),
            (OperatorKind::GmemAtomRed, params::none()),
        ],
    );
    let v = validate_graph(&g);
    assert!(v.iter().any(|v| v.rule.contains("BMW")));
}

#[test]
fn param_schema_violations_are_reported() {
    let mut g = OperatorGraph::new();
    g.add_node(INPUT_NODE, OperatorKind::SortSub, params::int("group_size", 1));
    assert!(!validate_graph(&g).is_empty());

    let mut g = OperatorGraph::new();
    g.add_node(INPUT_NODE, OperatorKind::RowDiv, params::array("cuts", vec![3, 2]));
    assert!(!validate_graph(&g).is_empty());

    let mut g = OperatorGraph::new();
    let div = g.add_node(INPUT_NODE, OperatorKind::RowDiv, params::array("cuts", vec![2]));
    g.add_node(div, OperatorKind::Compress, params::none());
    g.add_node(div, OperatorKind::Compress, params::none());
    g.add_node(div, OperatorKind::Compress, params::none());
    let v = validate_graph(&g);
    assert!(v.iter().any(|v| v.rule.contains("stripes")), "{v:?}");
}

#[test]
fn branching_outside_div_is_rejected() {
    let mut g = OperatorGraph::new();
    let s = g.add_node(INPUT_NODE, OperatorKind::Sort, params::none());
    g.add_node(s, OperatorKind::Compress, params::none());
    g.add_node(s, OperatorKind::Compress, params::none());
    let v = validate_graph(&g);
    assert!(v.iter().any(|v| v.rule.contains("branching")));
}

#[test]
fn empty_graph_round_trips() {
    let g = OperatorGraph::new();
    let text = serialize_graph(&g);
    let back = parse_graph(&text).unwrap();
    assert_eq!(g, back);
}

#[test]
fn reference_graph_round_trips_byte_identically() {
    let g = reference::sell_graph(2);
    let text = serialize_graph(&g);
    let text2 = serialize_graph(&parse_graph(&text).unwrap());
    assert_eq!(text, text2);
}

#[test]
fn unknown_kind_is_a_parse_error() {
    let text = r#"{"nodes":[{"id":1,"kind":"FOO_RED","params":{}}],"edges":[[0,1]]}"#;
    assert!(matches!(parse_graph(text), Err(ParseError::Json(_))));
}

#[test]
fn cycles_and_orphans_are_parse_errors() {
    let cycle = r#"{"nodes":[{"id":1,"kind":"SORT","params":{}},{"id":2,"kind":"COMPRESS","params":{}}],"edges":[[1,2],[2,1]]}"#;
    assert!(parse_graph(cycle).is_err());
    let orphan = r#"{"nodes":[{"id":1,"kind":"SORT","params":{}}],"edges":[]}"#;
    assert!(parse_graph(orphan).is_err());
}

#[test]
fn draft_operator_aliases_parse_to_final_names() {
    assert_eq!("WARP_SEG_ADD_RED".parse::<OperatorKind>().unwrap(), OperatorKind::WarpSegRed);
    assert_eq!(
        "THREAD_BITMAP_RED_G".parse::<OperatorKind>().unwrap(),
        OperatorKind::ThreadBitmapRed
    );
}

mod props {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Grows a random graph by repeatedly appending uniformly chosen legal
    /// successors under every open leaf.
    pub fn random_growth(seed: u64, max_ops: usize) -> OperatorGraph {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut g = OperatorGraph::new();
        let banned = BTreeSet::new();
        for _ in 0..max_ops {
            let open: Vec<_> = g
                .leaves()
                .into_iter()
                .filter(|&l| {
                    l == INPUT_NODE
                        || g.node(l).map(|n| n.kind != OperatorKind::GmemAtomRed).unwrap_or(false)
                })
                .collect();
            if open.is_empty() {
                break;
            }
            let leaf = open[rng.random_range(0..open.len())];
            let kinds: Vec<_> = legal_successors(&g, leaf, &banned).unwrap().into_iter().collect();
            if kinds.is_empty() {
                break;
            }
            let kind = kinds[rng.random_range(0..kinds.len())];
            let id = g.add_node(leaf, kind, Params::new());
            // give DIV nodes a second stripe half the time
            if matches!(kind, OperatorKind::RowDiv | OperatorKind::ColDiv) && rng.random_bool(0.5) {
                let _ = id;
            }
        }
        g
    }

    proptest! {
        /// Closure: any graph grown through legal_successors validates.
        #[test]
        fn growth_by_legal_successors_stays_valid(seed in 0u64..500, n in 1usize..14) {
            let g = random_growth(seed, n);
            let v = validate_graph(&g);
            prop_assert!(v.is_empty(), "violations: {:?}", v);
        }

        /// Soundness: every advertised successor keeps the graph valid.
        #[test]
        fn every_successor_is_sound(seed in 0u64..200, n in 1usize..10) {
            let g = random_growth(seed, n);
            for leaf in g.leaves() {
                for kind in legal_successors(&g, leaf, &BTreeSet::new()).unwrap() {
                    let mut g2 = g.clone();
                    g2.add_node(leaf, kind, Params::new());
                    let v = validate_graph(&g2);
                    prop_assert!(v.is_empty(), "adding {kind} broke: {:?}", v);
                }
            }
        }

        /// Serialization: parse(serialize(g)) == canonical g.
        #[test]
        fn serialization_round_trips(seed in 0u64..300, n in 0usize..14) {
            let g = random_growth(seed, n);
            let back = parse_graph(&serialize_graph(&g)).unwrap();
            prop_assert_eq!(g.canonicalize(), back);
        }
    }
}
