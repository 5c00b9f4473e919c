//! Dependency rules between operators: which operator may follow which.
//!
//! The rules are expressed as a small state machine walked along every
//! root-to-leaf path. `legal_successors` and `validate_graph` share it, so
//! growth by legal successors can never produce an invalid graph.

use std::collections::BTreeSet;

use super::{check_params, BlockFlavor, NodeId, OperatorGraph, OperatorKind, Stage, INPUT_NODE};

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub node: NodeId,
    pub rule: String,
}

/// Cumulative state of one path through the graph.
#[derive(Debug, Clone, Default)]
pub struct PathState {
    compress_done: bool,
    implementing: bool,
    done: bool,
    row_div_used: bool,
    col_div_used: bool,
    sort_used: bool,
    sort_sub_used: bool,
    bin_used: bool,
    bmtb: Option<BlockFlavor>,
    bmw: Option<BlockFlavor>,
    bmt: Option<BlockFlavor>,
    pad_used: bool,
    sort_bmtb_used: bool,
    thread_red: bool,
    warp_red: bool,
    block_red: bool,
    set_resources_used: bool,
}

impl PathState {
    pub fn new() -> Self {
        PathState::default()
    }

    /// Checks whether `kind` may be appended in this state.
    pub fn check(&self, kind: OperatorKind) -> Result<(), String> {
        use OperatorKind::*;
        if self.done {
            return Err("path already terminated by GMEM_ATOM_RED".into());
        }
        match kind.stage() {
            Stage::Converting => {
                if self.compress_done {
                    return Err("converting operators must precede COMPRESS".into());
                }
            }
            Stage::Mapping => {
                if !self.compress_done {
                    return Err("mapping operators require a prior COMPRESS".into());
                }
                if self.implementing {
                    return Err("mapping operators must precede the implementing stage".into());
                }
            }
            Stage::Implementing => {
                if !self.compress_done {
                    return Err("implementing operators require a prior COMPRESS".into());
                }
            }
        }
        match kind {
            RowDiv if self.row_div_used => Err("ROW_DIV already used on this path".into()),
            ColDiv if self.col_div_used => Err("COL_DIV already used on this path".into()),
            Sort if self.sort_used => Err("SORT already used on this path".into()),
            SortSub if self.sort_sub_used => Err("SORT_SUB already used on this path".into()),
            Bin if self.bin_used => Err("BIN already used on this path".into()),
            RowDiv | ColDiv | Sort | SortSub | Bin | Compress => Ok(()),

            BmtbRowBlock | BmtbNnzBlock => {
                if self.bmtb.is_some() || self.bmw.is_some() || self.bmt.is_some() {
                    Err("BMTB blocking must come before warp or thread blocking".into())
                } else {
                    Ok(())
                }
            }
            BmwRowBlock | BmwNnzBlock => {
                if self.bmw.is_some() {
                    Err("BMW level already blocked".into())
                } else if self.bmt.is_some() {
                    Err("a block mapped to a thread cannot be split onto warps".into())
                } else {
                    Ok(())
                }
            }
            BmtRowBlock | BmtNnzBlock => {
                if self.bmt.is_some() {
                    Err("BMT level already blocked".into())
                } else {
                    Ok(())
                }
            }
            BmtPad => {
                if self.bmt.is_none() {
                    Err("BMT_PAD requires a prior BMT_* block".into())
                } else if self.pad_used {
                    Err("BMT_PAD already applied".into())
                } else {
                    Ok(())
                }
            }
            SortBmtb => {
                if self.bmtb.is_none() {
                    Err("SORT_BMTB requires a prior BMTB_* block".into())
                } else if self.bmw.is_some() || self.bmt.is_some() {
                    Err("SORT_BMTB must come before finer blocking".into())
                } else if self.sort_bmtb_used {
                    Err("SORT_BMTB already applied".into())
                } else {
                    Ok(())
                }
            }

            SetResources => {
                if self.set_resources_used {
                    Err("SET_RESOURCES already set".into())
                } else {
                    Ok(())
                }
            }
            ThreadTotalRed => match self.bmt {
                None => Err("THREAD_* reductions require a BMT_* block".into()),
                Some(BlockFlavor::Nnz) => {
                    Err("THREAD_TOTAL_RED requires row-aligned BMT blocks".into())
                }
                Some(BlockFlavor::Row) if self.thread_red => {
                    Err("thread-level reduction already chosen".into())
                }
                Some(BlockFlavor::Row) => Ok(()),
            },
            ThreadBitmapRed => {
                if self.bmt.is_none() {
                    Err("THREAD_* reductions require a BMT_* block".into())
                } else if self.thread_red {
                    Err("thread-level reduction already chosen".into())
                } else {
                    Ok(())
                }
            }
            WarpTotalRed => match self.bmw {
                None => Err("WARP_* reductions require a BMW_* block".into()),
                Some(BlockFlavor::Nnz) => {
                    Err("WARP_TOTAL_RED requires row-aligned BMW blocks".into())
                }
                Some(BlockFlavor::Row) if self.warp_red => {
                    Err("warp-level reduction already chosen".into())
                }
                Some(BlockFlavor::Row) => Ok(()),
            },
            WarpBitmapRed | WarpSegRed => {
                if self.bmw.is_none() {
                    Err("WARP_* reductions require a BMW_* block".into())
                } else if self.warp_red {
                    Err("warp-level reduction already chosen".into())
                } else {
                    Ok(())
                }
            }
            ShmemTotalRed => match self.bmtb {
                None => Err("SHMEM_* reductions require a BMTB_* block".into()),
                Some(BlockFlavor::Nnz) => {
                    Err("SHMEM_TOTAL_RED requires row-aligned BMTB blocks".into())
                }
                Some(BlockFlavor::Row) if self.block_red => {
                    Err("block-level reduction already chosen".into())
                }
                Some(BlockFlavor::Row) => Ok(()),
            },
            ShmemOffsetRed => {
                if self.bmtb.is_none() {
                    Err("SHMEM_* reductions require a BMTB_* block".into())
                } else if self.block_red {
                    Err("block-level reduction already chosen".into())
                } else {
                    Ok(())
                }
            }
            GmemAtomRed => Ok(()),
        }
        .and_then(|()| self.check_reduction_order(kind))
    }

    // Reductions flow thread -> warp -> shared memory -> global memory;
    // a finer-level reduction cannot be added once a coarser one exists.
    fn check_reduction_order(&self, kind: OperatorKind) -> Result<(), String> {
        use OperatorKind::*;
        match kind {
            ThreadTotalRed | ThreadBitmapRed if self.warp_red || self.block_red => {
                Err("thread-level reduction must precede warp/block reductions".into())
            }
            WarpTotalRed | WarpBitmapRed | WarpSegRed if self.block_red => {
                Err("warp-level reduction must precede block reductions".into())
            }
            _ => Ok(()),
        }
    }

    /// Applies `kind`, assuming `check` passed.
    pub fn apply(&mut self, kind: OperatorKind) {
        use OperatorKind::*;
        match kind {
            RowDiv => self.row_div_used = true,
            ColDiv => self.col_div_used = true,
            Sort => self.sort_used = true,
            SortSub => self.sort_sub_used = true,
            Bin => self.bin_used = true,
            Compress => self.compress_done = true,
            BmtbRowBlock | BmtbNnzBlock | BmwRowBlock | BmwNnzBlock | BmtRowBlock
            | BmtNnzBlock => {
                let (level, flavor) = kind.blocking().unwrap();
                match level {
                    super::Level::Bmtb => self.bmtb = Some(flavor),
                    super::Level::Bmw => self.bmw = Some(flavor),
                    super::Level::Bmt => self.bmt = Some(flavor),
                }
            }
            BmtPad => self.pad_used = true,
            SortBmtb => self.sort_bmtb_used = true,
            SetResources => {
                self.set_resources_used = true;
                self.implementing = true;
            }
            ThreadTotalRed | ThreadBitmapRed => {
                self.thread_red = true;
                self.implementing = true;
            }
            WarpTotalRed | WarpBitmapRed | WarpSegRed => {
                self.warp_red = true;
                self.implementing = true;
            }
            ShmemTotalRed | ShmemOffsetRed => {
                self.block_red = true;
                self.implementing = true;
            }
            GmemAtomRed => {
                self.done = true;
                self.implementing = true;
            }
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// All kinds legal in this state.
    pub fn legal_kinds(&self) -> BTreeSet<OperatorKind> {
        OperatorKind::ALL
            .iter()
            .copied()
            .filter(|&k| self.check(k).is_ok())
            .collect()
    }
}

/// Operator kinds whose addition under `leaf` keeps the graph valid, minus
/// the active ban list.
pub fn legal_successors(
    g: &OperatorGraph,
    leaf: NodeId,
    banned: &BTreeSet<OperatorKind>,
) -> Result<BTreeSet<OperatorKind>, String> {
    if leaf != INPUT_NODE && g.node(leaf).is_none() {
        return Err(format!("unknown node {leaf}"));
    }
    let path = g
        .path_to(leaf)
        .ok_or_else(|| format!("node {leaf} not reachable from input"))?;
    let mut state = PathState::new();
    for id in path {
        state.apply(g.node(id).unwrap().kind);
    }
    let mut kinds = state.legal_kinds();
    kinds.retain(|k| !banned.contains(k));
    Ok(kinds)
}

/// Checks every type invariant on every path. Violations name the node and
/// the rule broken; an empty list means the graph is valid.
pub fn validate_graph(g: &OperatorGraph) -> Vec<Violation> {
    let mut violations = Vec::new();

    for node in g.nodes() {
        if let Err(rule) = check_params(node.kind, &node.params) {
            violations.push(Violation { node: node.id, rule });
        }
        let kids = g.children_of(node.id);
        let is_div = matches!(node.kind, OperatorKind::RowDiv | OperatorKind::ColDiv);
        if !is_div && kids.len() > 1 {
            violations.push(Violation {
                node: node.id,
                rule: "branching is only allowed at ROW_DIV / COL_DIV".into(),
            });
        }
        if is_div {
            if let Some(cuts) = node.params.get("cuts").and_then(|v| v.as_array()) {
                if !kids.is_empty() && kids.len() != cuts.len() + 1 {
                    violations.push(Violation {
                        node: node.id,
                        rule: format!(
                            "{} stripes declared by cuts but {} children",
                            cuts.len() + 1,
                            kids.len()
                        ),
                    });
                }
            }
        }
    }

    for path in g.paths() {
        let mut state = PathState::new();
        for id in path {
            let kind = g.node(id).unwrap().kind;
            if let Err(rule) = state.check(kind) {
                violations.push(Violation { node: id, rule });
                // keep walking so later independent violations still surface
            }
            state.apply(kind);
        }
    }

    violations.sort_by(|a, b| (a.node, &a.rule).cmp(&(b.node, &b.rule)));
    violations.dedup();
    violations
}
