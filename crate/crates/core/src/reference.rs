//! Reference operator graphs for well-known designs. The CSR-scalar graph
//! doubles as the search's seed candidate and performance floor.

use crate::opgraph::{params, OperatorGraph, OperatorKind::*, INPUT_NODE};

/// CSR-scalar: one row per thread, serial row sum, atomic write.
pub fn csr_scalar_graph() -> OperatorGraph {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[
            (Compress, params::none()),
            (BmtRowBlock, params::int("rows_per_block", 1)),
            (ThreadTotalRed, params::none()),
            (GmemAtomRed, params::none()),
        ],
    );
    g
}

/// ELL-like: one row per thread, every block zero-padded to the global
/// maximum row length.
pub fn ell_graph() -> OperatorGraph {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[
            (Compress, params::none()),
            (BmtRowBlock, params::int("rows_per_block", 1)),
            (BmtPad, params::enum_val("scope", "global")),
            (ThreadTotalRed, params::none()),
            (GmemAtomRed, params::none()),
        ],
    );
    g
}

/// SELL-like: rows sorted by length, sliced into row blocks, padded within
/// each slice only.
pub fn sell_graph(rows_per_slice: i64) -> OperatorGraph {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[
            (Sort, params::none()),
            (Compress, params::none()),
            (BmtbRowBlock, params::int("rows_per_block", rows_per_slice)),
            (BmtRowBlock, params::int("rows_per_block", 1)),
            (BmtPad, params::enum_val("scope", "per_bmtb")),
            (ThreadTotalRed, params::none()),
            (GmemAtomRed, params::none()),
        ],
    );
    g
}

/// COO-style element kernel: every product is atomically accumulated.
pub fn coo_atomic_graph() -> OperatorGraph {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[(Compress, params::none()), (GmemAtomRed, params::none())],
    );
    g
}

/// CSR-vector style: one row per warp, lanes stride the row.
pub fn csr_vector_graph() -> OperatorGraph {
    let mut g = OperatorGraph::new();
    g.add_chain(
        INPUT_NODE,
        &[
            (Compress, params::none()),
            (BmwRowBlock, params::int("rows_per_block", 1)),
            (WarpTotalRed, params::none()),
            (GmemAtomRed, params::none()),
        ],
    );
    g
}
