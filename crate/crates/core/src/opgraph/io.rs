//! JSON persistence for operator graphs.
//!
//! The on-disk form lists operator nodes (the input node is implicit, id 0)
//! and parent->child edges:
//! `{"nodes":[{"id":1,"kind":"SORT","params":{}}],"edges":[[0,1]]}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{NodeId, OperatorGraph, OperatorNode, INPUT_NODE};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("bad graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph structure: {0}")]
    Structure(String),
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<OperatorNode>,
    edges: Vec<(NodeId, NodeId)>,
}

fn to_file(g: &OperatorGraph) -> GraphFile {
    let canon = g.canonicalize();
    let nodes: Vec<OperatorNode> = canon.nodes().cloned().collect();
    let mut edges = Vec::new();
    let mut stack = vec![INPUT_NODE];
    while let Some(id) = stack.pop() {
        for &c in canon.children_of(id) {
            edges.push((id, c));
            stack.push(c);
        }
    }
    edges.sort_unstable();
    GraphFile { nodes, edges }
}

/// Canonical single-line JSON text of a graph. Equal graphs (up to node
/// renumbering) serialize to identical bytes.
pub fn serialize_graph(g: &OperatorGraph) -> String {
    serde_json::to_string(&to_file(g)).expect("graph serialization cannot fail")
}

/// Pretty-printed variant used for artifact files.
pub fn serialize_graph_pretty(g: &OperatorGraph) -> String {
    let mut s = serde_json::to_string_pretty(&to_file(g)).expect("graph serialization cannot fail");
    s.push('\n');
    s
}

/// Parses a graph from JSON text, checking structural sanity: unique ids,
/// every node reachable from the input node through exactly one parent.
pub fn parse_graph(text: &str) -> Result<OperatorGraph, ParseError> {
    let file: GraphFile = serde_json::from_str(text)?;

    let mut by_id: BTreeMap<NodeId, OperatorNode> = BTreeMap::new();
    for n in file.nodes {
        if n.id == INPUT_NODE {
            return Err(ParseError::Structure("node id 0 is reserved for the input node".into()));
        }
        if by_id.insert(n.id, n.clone()).is_some() {
            return Err(ParseError::Structure(format!("duplicate node id {}", n.id)));
        }
    }
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (p, c) in &file.edges {
        if *p != INPUT_NODE && !by_id.contains_key(p) {
            return Err(ParseError::Structure(format!("edge references unknown parent {p}")));
        }
        if !by_id.contains_key(c) {
            return Err(ParseError::Structure(format!("edge references unknown child {c}")));
        }
        if parent.insert(*c, *p).is_some() {
            return Err(ParseError::Structure(format!("node {c} has multiple parents")));
        }
        children.entry(*p).or_default().push(*c);
    }
    for id in by_id.keys() {
        if !parent.contains_key(id) {
            return Err(ParseError::Structure(format!("node {id} is not connected to the input node")));
        }
    }

    // rebuild through the public API in depth-first order so reachability
    // (and absence of cycles) is verified on the way
    let mut g = OperatorGraph::new();
    let mut mapped: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    mapped.insert(INPUT_NODE, INPUT_NODE);
    let mut stack: Vec<NodeId> = children
        .get(&INPUT_NODE)
        .map(|v| v.iter().rev().copied().collect())
        .unwrap_or_default();
    let mut visited = 0usize;
    while let Some(id) = stack.pop() {
        let node = &by_id[&id];
        let new_parent = mapped[&parent[&id]];
        let new_id = g.add_node(new_parent, node.kind, node.params.clone());
        mapped.insert(id, new_id);
        visited += 1;
        if let Some(kids) = children.get(&id) {
            for &c in kids.iter().rev() {
                stack.push(c);
            }
        }
    }
    if visited != by_id.len() {
        return Err(ParseError::Structure("graph contains a cycle or unreachable nodes".into()));
    }
    Ok(g)
}
