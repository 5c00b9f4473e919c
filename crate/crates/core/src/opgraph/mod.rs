//! Operators, their parameter schemas, dependency rules, and the Operator
//! Graph: the ordered DAG that encodes one point of the format/kernel
//! design space.

mod io;
mod legality;

pub use io::{parse_graph, serialize_graph, serialize_graph_pretty, ParseError};
pub use legality::{legal_successors, validate_graph, PathState, Violation};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Design stage an operator belongs to. Along any root-to-leaf path the
/// stages appear in order: converting, then mapping, then implementing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Converting,
    Mapping,
    Implementing,
}

/// Parallelism level a block is mapped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    /// Block mapped to a thread block.
    Bmtb,
    /// Block mapped to a warp.
    Bmw,
    /// Block mapped to a thread.
    Bmt,
}

/// How a blocking operator cuts nonzeros: whole rows at a time, or a fixed
/// nonzero count per block (rows may then span blocks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockFlavor {
    Row,
    Nnz,
}

macro_rules! operator_kinds {
    ($(($variant:ident, $name:literal, $stage:ident)),+ $(,)?) => {
        /// Every operator the designer understands.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum OperatorKind {
            $($variant),+
        }

        impl OperatorKind {
            pub const ALL: &'static [OperatorKind] = &[$(OperatorKind::$variant),+];

            pub fn stage(self) -> Stage {
                match self {
                    $(OperatorKind::$variant => Stage::$stage),+
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $(OperatorKind::$variant => $name),+
                }
            }
        }

        impl FromStr for OperatorKind {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($name => Ok(OperatorKind::$variant),)+
                    // aliases kept from an earlier operator naming draft
                    "WARP_SEG_ADD_RED" => Ok(OperatorKind::WarpSegRed),
                    "THREAD_BITMAP_RED_G" => Ok(OperatorKind::ThreadBitmapRed),
                    _ => Err(()),
                }
            }
        }
    };
}

operator_kinds! {
    (RowDiv, "ROW_DIV", Converting),
    (ColDiv, "COL_DIV", Converting),
    (Sort, "SORT", Converting),
    (SortSub, "SORT_SUB", Converting),
    (Bin, "BIN", Converting),
    (Compress, "COMPRESS", Converting),
    (BmtbRowBlock, "BMTB_ROW_BLOCK", Mapping),
    (BmtbNnzBlock, "BMTB_NNZ_BLOCK", Mapping),
    (BmwRowBlock, "BMW_ROW_BLOCK", Mapping),
    (BmwNnzBlock, "BMW_NNZ_BLOCK", Mapping),
    (BmtRowBlock, "BMT_ROW_BLOCK", Mapping),
    (BmtNnzBlock, "BMT_NNZ_BLOCK", Mapping),
    (BmtPad, "BMT_PAD", Mapping),
    (SortBmtb, "SORT_BMTB", Mapping),
    (SetResources, "SET_RESOURCES", Implementing),
    (ThreadTotalRed, "THREAD_TOTAL_RED", Implementing),
    (ThreadBitmapRed, "THREAD_BITMAP_RED", Implementing),
    (WarpTotalRed, "WARP_TOTAL_RED", Implementing),
    (WarpBitmapRed, "WARP_BITMAP_RED", Implementing),
    (WarpSegRed, "WARP_SEG_RED", Implementing),
    (ShmemTotalRed, "SHMEM_TOTAL_RED", Implementing),
    (ShmemOffsetRed, "SHMEM_OFFSET_RED", Implementing),
    (GmemAtomRed, "GMEM_ATOM_RED", Implementing),
}

impl OperatorKind {
    /// Blocking level and flavor for the `_BLOCK` family.
    pub fn blocking(self) -> Option<(Level, BlockFlavor)> {
        use OperatorKind::*;
        match self {
            BmtbRowBlock => Some((Level::Bmtb, BlockFlavor::Row)),
            BmtbNnzBlock => Some((Level::Bmtb, BlockFlavor::Nnz)),
            BmwRowBlock => Some((Level::Bmw, BlockFlavor::Row)),
            BmwNnzBlock => Some((Level::Bmw, BlockFlavor::Nnz)),
            BmtRowBlock => Some((Level::Bmt, BlockFlavor::Row)),
            BmtNnzBlock => Some((Level::Bmt, BlockFlavor::Nnz)),
            _ => None,
        }
    }

    /// Reduction level for the `_RED` family (global memory excluded).
    pub fn reduction_level(self) -> Option<Level> {
        use OperatorKind::*;
        match self {
            ThreadTotalRed | ThreadBitmapRed => Some(Level::Bmt),
            WarpTotalRed | WarpBitmapRed | WarpSegRed => Some(Level::Bmw),
            ShmemTotalRed | ShmemOffsetRed => Some(Level::Bmtb),
            _ => None,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for OperatorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for OperatorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| serde::de::Error::custom(format!("unknown operator kind `{s}`")))
    }
}

/// A single operator parameter value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    IntArray(Vec<i64>),
    Enum(String),
}

impl ParamValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[i64]> {
        match self {
            ParamValue::IntArray(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<&str> {
        match self {
            ParamValue::Enum(v) => Some(v),
            _ => None,
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// Scope of the zero padding a `BMT_PAD` operator applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadScope {
    PerBmtb,
    Global,
}

impl PadScope {
    pub fn name(self) -> &'static str {
        match self {
            PadScope::PerBmtb => "per_bmtb",
            PadScope::Global => "global",
        }
    }
}

pub type NodeId = usize;

/// The implicit input node every graph is rooted at.
pub const INPUT_NODE: NodeId = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorNode {
    pub id: NodeId,
    pub kind: OperatorKind,
    #[serde(default)]
    pub params: Params,
}

/// Ordered DAG of operators rooted at the input node (id 0). Branching only
/// happens at ROW_DIV / COL_DIV, one child per stripe.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperatorGraph {
    nodes: BTreeMap<NodeId, OperatorNode>,
    children: BTreeMap<NodeId, Vec<NodeId>>,
    next_id: NodeId,
}

impl OperatorGraph {
    pub fn new() -> Self {
        OperatorGraph {
            nodes: BTreeMap::new(),
            children: BTreeMap::new(),
            next_id: 1,
        }
    }

    /// Appends an operator under `parent`, returning the new node id.
    pub fn add_node(&mut self, parent: NodeId, kind: OperatorKind, params: Params) -> NodeId {
        assert!(
            parent == INPUT_NODE || self.nodes.contains_key(&parent),
            "unknown parent {parent}"
        );
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(id, OperatorNode { id, kind, params });
        self.children.entry(parent).or_default().push(id);
        id
    }

    /// Appends a chain of operators under `parent`, returning the last id.
    pub fn add_chain(&mut self, parent: NodeId, ops: &[(OperatorKind, Params)]) -> NodeId {
        let mut at = parent;
        for (kind, params) in ops {
            at = self.add_node(at, *kind, params.clone());
        }
        at
    }

    pub fn node(&self, id: NodeId) -> Option<&OperatorNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &OperatorNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children_of(&self, id: NodeId) -> &[NodeId] {
        self.children.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn set_params(&mut self, id: NodeId, params: Params) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.params = params;
        }
    }

    /// Parent of a node (the input node has none).
    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.children
            .iter()
            .find(|(_, kids)| kids.contains(&id))
            .map(|(&p, _)| p)
    }

    /// Current leaves: nodes without children, or the input node for an
    /// empty graph.
    pub fn leaves(&self) -> Vec<NodeId> {
        if self.nodes.is_empty() {
            return vec![INPUT_NODE];
        }
        let mut out: Vec<NodeId> = self
            .nodes
            .keys()
            .copied()
            .filter(|id| self.children_of(*id).is_empty())
            .collect();
        out.sort_unstable();
        out
    }

    /// Node ids from the input node down to `id`, excluding the input node.
    pub fn path_to(&self, id: NodeId) -> Option<Vec<NodeId>> {
        if id == INPUT_NODE {
            return Some(Vec::new());
        }
        self.nodes.get(&id)?;
        let mut path = vec![id];
        let mut at = id;
        while let Some(p) = self.parent_of(at) {
            if p == INPUT_NODE {
                path.reverse();
                return Some(path);
            }
            path.push(p);
            at = p;
        }
        None
    }

    /// All root-to-leaf paths, as node id sequences.
    pub fn paths(&self) -> Vec<Vec<NodeId>> {
        self.leaves()
            .into_iter()
            .filter(|&l| l != INPUT_NODE)
            .filter_map(|l| self.path_to(l))
            .collect()
    }

    /// True when every path terminates in GMEM_ATOM_RED.
    pub fn is_complete(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        self.leaves().iter().all(|&l| {
            self.node(l)
                .map(|n| n.kind == OperatorKind::GmemAtomRed)
                .unwrap_or(false)
        })
    }

    /// Renumbers nodes in depth-first visit order (children in edge order),
    /// giving a stable canonical form for serialization and hashing.
    pub fn canonicalize(&self) -> OperatorGraph {
        let mut out = OperatorGraph::new();
        let mut stack: Vec<(NodeId, NodeId)> = self
            .children_of(INPUT_NODE)
            .iter()
            .rev()
            .map(|&c| (INPUT_NODE, c))
            .collect();
        let mut mapped = BTreeMap::new();
        mapped.insert(INPUT_NODE, INPUT_NODE);
        while let Some((old_parent, old_id)) = stack.pop() {
            let node = &self.nodes[&old_id];
            let new_id = out.add_node(mapped[&old_parent], node.kind, node.params.clone());
            mapped.insert(old_id, new_id);
            for &c in self.children_of(old_id).iter().rev() {
                stack.push((old_id, c));
            }
        }
        out
    }
}

/// Parameter schema description for one operator kind.
pub struct ParamSchema {
    pub kind: OperatorKind,
    pub check: fn(&Params) -> Result<(), String>,
}

fn no_params(p: &Params) -> Result<(), String> {
    if p.is_empty() {
        Ok(())
    } else {
        Err(format!("takes no parameters, got {:?}", p.keys().collect::<Vec<_>>()))
    }
}

fn only_keys(p: &Params, keys: &[&str]) -> Result<(), String> {
    for k in p.keys() {
        if !keys.contains(&k.as_str()) {
            return Err(format!("unknown parameter `{k}`"));
        }
    }
    Ok(())
}

fn check_cuts(p: &Params) -> Result<(), String> {
    only_keys(p, &["cuts"])?;
    if let Some(v) = p.get("cuts") {
        let cuts = v.as_array().ok_or("`cuts` must be an integer array")?;
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                return Err("`cuts` must be strictly increasing".into());
            }
        }
        if cuts.first().is_some_and(|&c| c < 1) {
            return Err("`cuts` positions must be >= 1".into());
        }
    }
    Ok(())
}

fn check_size(p: &Params, key: &'static str) -> Result<(), String> {
    only_keys(p, &[key])?;
    if let Some(v) = p.get(key) {
        let n = v.as_int().ok_or(format!("`{key}` must be an integer"))?;
        if n < 1 {
            return Err(format!("`{key}` must be >= 1"));
        }
    }
    Ok(())
}

/// Validates a node's parameters against its kind's schema. Unset
/// parameters are allowed: structure search fills them in later.
pub fn check_params(kind: OperatorKind, p: &Params) -> Result<(), String> {
    use OperatorKind::*;
    match kind {
        RowDiv | ColDiv => check_cuts(p),
        Sort | SortBmtb | ThreadTotalRed | ThreadBitmapRed | WarpTotalRed | WarpBitmapRed
        | WarpSegRed | ShmemTotalRed | ShmemOffsetRed | GmemAtomRed | Compress => no_params(p),
        SortSub => {
            only_keys(p, &["group_size"])?;
            if let Some(v) = p.get("group_size") {
                let g = v.as_int().ok_or("`group_size` must be an integer")?;
                if g < 2 {
                    return Err("`group_size` must be >= 2".into());
                }
            }
            Ok(())
        }
        Bin => {
            only_keys(p, &["thresholds"])?;
            if let Some(v) = p.get("thresholds") {
                let t = v.as_array().ok_or("`thresholds` must be an integer array")?;
                if t.is_empty() {
                    return Err("`thresholds` must not be empty".into());
                }
                for w in t.windows(2) {
                    if w[1] <= w[0] {
                        return Err("`thresholds` must be ascending".into());
                    }
                }
            }
            Ok(())
        }
        BmtbRowBlock | BmwRowBlock | BmtRowBlock => check_size(p, "rows_per_block"),
        BmtbNnzBlock | BmwNnzBlock | BmtNnzBlock => check_size(p, "nnz_per_block"),
        BmtPad => {
            only_keys(p, &["scope"])?;
            if let Some(v) = p.get("scope") {
                match v.as_enum() {
                    Some("per_bmtb") | Some("global") => {}
                    _ => return Err("`scope` must be `per_bmtb` or `global`".into()),
                }
            }
            Ok(())
        }
        SetResources => {
            only_keys(p, &["threads_per_block"])?;
            if let Some(v) = p.get("threads_per_block") {
                let t = v.as_int().ok_or("`threads_per_block` must be an integer")?;
                if !(32..=1024).contains(&t) || t % 32 != 0 {
                    return Err("`threads_per_block` must be in 32..=1024 and a multiple of 32".into());
                }
            }
            Ok(())
        }
    }
}

/// Convenience constructors for common parameter maps.
pub mod params {
    use super::{ParamValue, Params};

    pub fn none() -> Params {
        Params::new()
    }

    pub fn int(key: &str, v: i64) -> Params {
        let mut p = Params::new();
        p.insert(key.to_string(), ParamValue::Int(v));
        p
    }

    pub fn array(key: &str, v: Vec<i64>) -> Params {
        let mut p = Params::new();
        p.insert(key.to_string(), ParamValue::IntArray(v));
        p
    }

    pub fn enum_val(key: &str, v: &str) -> Params {
        let mut p = Params::new();
        p.insert(key.to_string(), ParamValue::Enum(v.to_string()));
        p
    }
}

#[cfg(test)]
mod tests;
