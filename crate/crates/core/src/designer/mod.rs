//! Executes an operator graph node-by-node, mutating the matrix metadata
//! set: the cumulative record of how the matrix has been converted.
//!
//! Metadata lives in one namespace per leaf path (per ROW_DIV/COL_DIV
//! stripe). A namespace carries the converted entry arrays plus everything
//! the blocking and reduction operators derived from them, all addressable
//! through string keys so the format generator can project arrays out.

mod ops;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::matio::CooMatrix;
use crate::opgraph::{
    validate_graph, BlockFlavor, Level, NodeId, OperatorGraph, OperatorKind, PadScope, Violation,
    INPUT_NODE,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("graph is invalid: {0:?}")]
    InvalidGraph(Vec<Violation>),
    #[error("node {node} ({kind}): {msg}")]
    Op {
        node: NodeId,
        kind: OperatorKind,
        msg: String,
    },
}

/// One typed value in the metadata key-value store.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaEntry<T> {
    Scalar(i64),
    IntArray(Vec<i64>),
    RealArray(Vec<T>),
}

impl<T> MetaEntry<T> {
    pub fn len(&self) -> usize {
        match self {
            MetaEntry::Scalar(_) => 1,
            MetaEntry::IntArray(v) => v.len(),
            MetaEntry::RealArray(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Blocks of one parallelism level. `nz_offsets` always brackets the
/// namespace's entry range; row-flavored blocks also carry cumulative row
/// offsets, nnz-flavored ones the first row touched by each block.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelBlocks {
    pub flavor: BlockFlavor,
    pub size: i64,
    pub nz_offsets: Vec<i64>,
    pub row_offsets: Option<Vec<i64>>,
    pub first_rows: Vec<i64>,
}

impl LevelBlocks {
    pub fn count(&self) -> usize {
        self.nz_offsets.len() - 1
    }

    pub fn nz_range(&self, i: usize) -> (i64, i64) {
        (self.nz_offsets[i], self.nz_offsets[i + 1])
    }
}

/// Reduction strategy choices recorded by the implementing stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreadRed {
    Total,
    Bitmap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpRed {
    Total,
    Bitmap,
    Seg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRed {
    Total,
    Offset,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImplChoices {
    pub thread_red: Option<ThreadRed>,
    pub warp_red: Option<WarpRed>,
    pub block_red: Option<BlockRed>,
    pub threads_per_block: Option<i64>,
    pub gmem_atomic: bool,
}

/// Zero padding applied to the BMT level. `widths` holds the padded BMT
/// size per BMTB (a single entry when no BMTB level exists).
#[derive(Debug, Clone, PartialEq)]
pub struct PadInfo {
    pub scope: PadScope,
    pub widths: Vec<i64>,
}

/// The converted matrix state of one stripe.
#[derive(Debug, Clone, PartialEq)]
pub struct Namespace<T> {
    pub id: usize,
    /// Local (post-permutation, stripe-rebased) row index per entry.
    pub rows: Vec<i64>,
    /// Global column index per entry.
    pub cols: Vec<i64>,
    pub values: Vec<T>,
    pub pads: Vec<bool>,
    pub n_local_rows: usize,
    /// Maps local row -> original global row.
    pub origin_rows: Vec<i64>,
    /// Real (pad-free) nonzeros per local row.
    pub row_lengths: Vec<i64>,
    /// Global column range `[start, end)` this stripe covers.
    pub col_range: (i64, i64),
    pub bin_offsets: Option<Vec<i64>>,
    pub bmtb: Option<LevelBlocks>,
    pub bmw: Option<LevelBlocks>,
    pub bmt: Option<LevelBlocks>,
    pub pad: Option<PadInfo>,
    pub impl_choices: ImplChoices,
    /// Arrays materialized by implementing-stage operators.
    extra: BTreeMap<String, MetaEntry<T>>,
    provenance: BTreeMap<String, NodeId>,
}

impl<T: Scalar> Namespace<T> {
    fn from_matrix(m: &CooMatrix<T>) -> Self {
        let mut ns = Namespace {
            id: 0,
            rows: m.row_idx.iter().map(|&r| r as i64).collect(),
            cols: m.col_idx.iter().map(|&c| c as i64).collect(),
            values: m.values.clone(),
            pads: vec![false; m.nnz()],
            n_local_rows: m.n_rows,
            origin_rows: (0..m.n_rows as i64).collect(),
            row_lengths: m.row_lengths().iter().map(|&l| l as i64).collect(),
            col_range: (0, m.n_cols as i64),
            bin_offsets: None,
            bmtb: None,
            bmw: None,
            bmt: None,
            pad: None,
            impl_choices: ImplChoices::default(),
            extra: BTreeMap::new(),
            provenance: BTreeMap::new(),
        };
        for key in ["row_indices", "col_indices", "values", "origin_rows"] {
            ns.provenance.insert(key.to_string(), INPUT_NODE);
        }
        ns
    }

    pub fn nnz_stored(&self) -> usize {
        self.values.len()
    }

    pub fn real_nnz(&self) -> usize {
        self.pads.iter().filter(|&&p| !p).count()
    }

    /// True when `origin_rows` is not the identity over the whole matrix,
    /// i.e. the kernel must map local rows back through an array (or an
    /// equivalent fitted model).
    pub fn permuted(&self) -> bool {
        self.origin_rows
            .iter()
            .enumerate()
            .any(|(i, &o)| o != i as i64)
    }

    fn record(&mut self, key: &str, node: NodeId) {
        self.provenance.entry(key.to_string()).or_insert(node);
    }

    fn set_extra(&mut self, key: &str, entry: MetaEntry<T>, node: NodeId) {
        self.extra.insert(key.to_string(), entry);
        self.record(key, node);
    }

    pub fn provenance_of(&self, key: &str) -> Option<NodeId> {
        self.provenance.get(key).copied()
    }

    pub fn level(&self, level: Level) -> Option<&LevelBlocks> {
        match level {
            Level::Bmtb => self.bmtb.as_ref(),
            Level::Bmw => self.bmw.as_ref(),
            Level::Bmt => self.bmt.as_ref(),
        }
    }

    /// The finest blocking level present, if any.
    pub fn finest_level(&self) -> Option<Level> {
        if self.bmt.is_some() {
            Some(Level::Bmt)
        } else if self.bmw.is_some() {
            Some(Level::Bmw)
        } else if self.bmtb.is_some() {
            Some(Level::Bmtb)
        } else {
            None
        }
    }

    /// Per-row entry offsets (pads included): row r owns
    /// `[starts[r], starts[r+1])` of the entry arrays.
    pub fn row_starts(&self) -> Vec<i64> {
        let mut counts = vec![0i64; self.n_local_rows];
        for &r in &self.rows {
            counts[r as usize] += 1;
        }
        let mut starts = Vec::with_capacity(self.n_local_rows + 1);
        starts.push(0i64);
        for r in 0..self.n_local_rows {
            starts.push(starts[r] + counts[r]);
        }
        starts
    }

    /// Child-index offsets of `child` blocks within each `parent` block.
    fn derive_child_offsets(parent: &LevelBlocks, child: &LevelBlocks) -> Vec<i64> {
        let mut out = Vec::with_capacity(parent.count() + 1);
        let mut ci = 0usize;
        out.push(0);
        for p in 0..parent.count() {
            let (_, p_end) = parent.nz_range(p);
            while ci < child.count() && child.nz_offsets[ci + 1] <= p_end {
                ci += 1;
            }
            out.push(ci as i64);
        }
        out
    }

    /// Looks a metadata key up, synthesizing the view from typed state.
    pub fn get(&self, key: &str) -> Option<MetaEntry<T>> {
        if let Some(e) = self.extra.get(key) {
            return Some(e.clone());
        }
        match key {
            "row_indices" => Some(MetaEntry::IntArray(self.rows.clone())),
            "col_indices" => Some(MetaEntry::IntArray(self.cols.clone())),
            "values" => Some(MetaEntry::RealArray(self.values.clone())),
            "pad_flags" => Some(MetaEntry::IntArray(
                self.pads.iter().map(|&p| p as i64).collect(),
            )),
            "row_lengths" => Some(MetaEntry::IntArray(self.row_lengths.clone())),
            "origin_rows" => Some(MetaEntry::IntArray(self.origin_rows.clone())),
            "bin_offsets" => self.bin_offsets.clone().map(MetaEntry::IntArray),
            "bmtb_nz_offsets" => self
                .bmtb
                .as_ref()
                .map(|l| MetaEntry::IntArray(l.nz_offsets.clone())),
            "bmw_nz_offsets" => self
                .bmw
                .as_ref()
                .map(|l| MetaEntry::IntArray(l.nz_offsets.clone())),
            "bmt_nz_offsets" => self
                .bmt
                .as_ref()
                .map(|l| MetaEntry::IntArray(l.nz_offsets.clone())),
            "bmtb_row_offsets" => self
                .bmtb
                .as_ref()
                .and_then(|l| l.row_offsets.clone())
                .map(MetaEntry::IntArray),
            "bmw_row_offsets" => self
                .bmw
                .as_ref()
                .and_then(|l| l.row_offsets.clone())
                .map(MetaEntry::IntArray),
            "bmt_row_offsets" => self
                .bmt
                .as_ref()
                .and_then(|l| l.row_offsets.clone())
                .map(MetaEntry::IntArray),
            "first_row_of_bmtb" => self
                .bmtb
                .as_ref()
                .map(|l| MetaEntry::IntArray(l.first_rows.clone())),
            "bmw_first_rows" => self
                .bmw
                .as_ref()
                .map(|l| MetaEntry::IntArray(l.first_rows.clone())),
            "bmt_first_rows" => self
                .bmt
                .as_ref()
                .map(|l| MetaEntry::IntArray(l.first_rows.clone())),
            "bmtb_bmw_offsets" => match (&self.bmtb, &self.bmw) {
                (Some(p), Some(c)) => Some(MetaEntry::IntArray(Self::derive_child_offsets(p, c))),
                _ => None,
            },
            "bmtb_bmt_offsets" => match (&self.bmtb, &self.bmt) {
                (Some(p), Some(c)) => Some(MetaEntry::IntArray(Self::derive_child_offsets(p, c))),
                _ => None,
            },
            "bmw_bmt_offsets" => match (&self.bmw, &self.bmt) {
                (Some(p), Some(c)) => Some(MetaEntry::IntArray(Self::derive_child_offsets(p, c))),
                _ => None,
            },
            "bmt_sizes_of_bmtb" => self
                .pad
                .as_ref()
                .map(|p| MetaEntry::IntArray(p.widths.clone())),
            "threads_per_block" => self.impl_choices.threads_per_block.map(MetaEntry::Scalar),
            _ => None,
        }
    }

    /// Every key currently present, in sorted order.
    pub fn keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = [
            "row_indices",
            "col_indices",
            "values",
            "pad_flags",
            "row_lengths",
            "origin_rows",
            "bin_offsets",
            "bmtb_nz_offsets",
            "bmtb_row_offsets",
            "first_row_of_bmtb",
            "bmtb_bmw_offsets",
            "bmtb_bmt_offsets",
            "bmw_nz_offsets",
            "bmw_row_offsets",
            "bmw_first_rows",
            "bmw_bmt_offsets",
            "bmt_nz_offsets",
            "bmt_row_offsets",
            "bmt_first_rows",
            "bmt_sizes_of_bmtb",
            "threads_per_block",
        ]
        .iter()
        .filter(|k| self.get(k).is_some())
        .map(|k| k.to_string())
        .collect();
        keys.extend(self.extra.keys().cloned());
        keys.sort();
        keys.dedup();
        keys
    }

    /// Reconstructs (row, col, value) triples in original coordinates,
    /// dropping pads. Sorting is up to the caller.
    pub fn real_triples(&self) -> Vec<(usize, usize, T)> {
        (0..self.values.len())
            .filter(|&i| !self.pads[i])
            .map(|i| {
                (
                    self.origin_rows[self.rows[i] as usize] as usize,
                    self.cols[i] as usize,
                    self.values[i],
                )
            })
            .collect()
    }
}

/// The cumulative result of executing an operator graph on a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataSet<T> {
    pub namespaces: Vec<Namespace<T>>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub real_nnz: usize,
}

impl<T: Scalar> MetadataSet<T> {
    /// Rebuilds the original matrix from the namespaces; the semantics
    /// preservation check used by tests and `cmd_verify`.
    pub fn reconstruct(&self) -> Result<CooMatrix<T>, crate::matio::MatioError> {
        let mut triples = Vec::with_capacity(self.real_nnz);
        for ns in &self.namespaces {
            triples.extend(ns.real_triples());
        }
        CooMatrix::from_triples(self.n_rows, self.n_cols, triples)
    }
}

/// Executes a validated graph over a matrix: one namespace per leaf path,
/// with all per-operator effects applied cumulatively.
pub fn execute_graph<T: Scalar>(
    g: &OperatorGraph,
    m: &CooMatrix<T>,
) -> Result<MetadataSet<T>, DesignError> {
    let violations = validate_graph(g);
    if !violations.is_empty() {
        return Err(DesignError::InvalidGraph(violations));
    }
    let root = Namespace::from_matrix(m);
    let mut namespaces = Vec::new();
    let kids = g.children_of(INPUT_NODE);
    match kids.len() {
        0 => namespaces.push(root),
        1 => exec_node(g, kids[0], root, &mut namespaces)?,
        _ => {
            return Err(DesignError::Op {
                node: INPUT_NODE,
                kind: OperatorKind::Compress,
                msg: "the input node cannot branch".into(),
            })
        }
    }
    for (i, ns) in namespaces.iter_mut().enumerate() {
        ns.id = i;
    }
    Ok(MetadataSet {
        namespaces,
        n_rows: m.n_rows,
        n_cols: m.n_cols,
        real_nnz: m.nnz(),
    })
}

fn exec_node<T: Scalar>(
    g: &OperatorGraph,
    id: NodeId,
    ns: Namespace<T>,
    out: &mut Vec<Namespace<T>>,
) -> Result<(), DesignError> {
    let node = g.node(id).unwrap();
    let kids = g.children_of(id);
    if matches!(node.kind, OperatorKind::RowDiv | OperatorKind::ColDiv) {
        let stripes = ops::split(&ns, node)?;
        if kids.is_empty() {
            out.extend(stripes);
            return Ok(());
        }
        if kids.len() != stripes.len() {
            return Err(DesignError::Op {
                node: id,
                kind: node.kind,
                msg: format!("{} stripes but {} children", stripes.len(), kids.len()),
            });
        }
        for (stripe, &kid) in stripes.into_iter().zip(kids) {
            exec_node(g, kid, stripe, out)?;
        }
        Ok(())
    } else {
        let mut ns = ns;
        ops::apply(&mut ns, node)?;
        match kids.len() {
            0 => {
                out.push(ns);
                Ok(())
            }
            1 => exec_node(g, kids[0], ns, out),
            _ => Err(DesignError::Op {
                node: id,
                kind: node.kind,
                msg: "branching outside ROW_DIV/COL_DIV".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests;
