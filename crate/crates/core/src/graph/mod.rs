//! Temporal heterogeneous information networks.
//!
//! A [`TemporalHin`] is an undirected multigraph whose nodes carry a type
//! and whose edges carry an integer timestamp. Each node keeps its incident
//! edges in a list sorted by timestamp, so every temporal neighbor query the
//! walker issues is a pair of binary searches returning a borrowed slice.
//!
//! Node ids are arbitrary strings mapped to dense indices in order of first
//! appearance. Edge types are stored but never consulted by the walker.

mod index;
mod io;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use index::{binary_path, load_index, load_index_with_note, mapping_path, save_index};
pub use io::{load_edge_stream, parse_edge_stream, read_edge_records, EdgeDialect, EdgeRecord, LoadOptions};

pub type Timestamp = i64;

/// Interned node-type label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRef {
    pub id: String,
    pub index: usize,
    pub type_label: TypeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TemporalEdge {
    pub src: usize,
    pub dst: usize,
    pub timestamp: Timestamp,
    pub edge_type: Option<u32>,
}

/// One adjacency entry: the far endpoint of an incident edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub timestamp: Timestamp,
    pub node_type: TypeId,
}

#[derive(Debug, Clone, Default)]
pub struct TemporalHin {
    nodes: Vec<NodeRef>,
    lookup: HashMap<String, usize>,
    node_types: Vec<String>,
    node_type_lookup: HashMap<String, TypeId>,
    edge_types: Vec<String>,
    edge_type_lookup: HashMap<String, u32>,
    edges: Vec<TemporalEdge>,
    adjacency: Vec<Vec<Neighbor>>,
    directed: bool,
}

impl TemporalHin {
    pub fn new(directed: bool) -> Self {
        TemporalHin {
            directed,
            ..Default::default()
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_type_count(&self) -> usize {
        self.node_types.len()
    }

    pub fn edge_type_count(&self) -> usize {
        self.edge_types.len()
    }

    pub fn nodes(&self) -> &[NodeRef] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &NodeRef {
        &self.nodes[index]
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn node_type(&self, index: usize) -> TypeId {
        self.nodes[index].type_label
    }

    pub fn node_type_name(&self, ty: TypeId) -> &str {
        &self.node_types[ty.0 as usize]
    }

    pub fn node_type_names(&self) -> &[String] {
        &self.node_types
    }

    pub fn edge_type_names(&self) -> &[String] {
        &self.edge_types
    }

    /// `(min, max)` over all edge timestamps, `None` for an edgeless graph.
    pub fn time_range(&self) -> Option<(Timestamp, Timestamp)> {
        let min = self.edges.iter().map(|e| e.timestamp).min()?;
        let max = self.edges.iter().map(|e| e.timestamp).max()?;
        Some((min, max))
    }

    pub fn latest_timestamp(&self) -> Option<Timestamp> {
        self.edges.iter().map(|e| e.timestamp).max()
    }

    pub fn distinct_timestamp_count(&self) -> usize {
        let mut ts: Vec<_> = self.edges.iter().map(|e| e.timestamp).collect();
        ts.sort_unstable();
        ts.dedup();
        ts.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// All adjacency entries of `v`, ascending by timestamp.
    pub fn neighbors(&self, v: usize) -> &[Neighbor] {
        &self.adjacency[v]
    }

    /// Entries of `v` with timestamp `>= t`.
    pub fn neighbors_at_or_after(&self, v: usize, t: Timestamp) -> &[Neighbor] {
        let adj = &self.adjacency[v];
        let lo = adj.partition_point(|n| n.timestamp < t);
        &adj[lo..]
    }

    /// Entries of `v` with timestamp exactly `t`. Multi-edges appear once
    /// per edge.
    pub fn neighbors_exactly_at(&self, v: usize, t: Timestamp) -> &[Neighbor] {
        self.neighbors_between(v, t, t)
    }

    /// Entries of `v` with `lo <= timestamp <= hi`.
    pub fn neighbors_between(&self, v: usize, lo: Timestamp, hi: Timestamp) -> &[Neighbor] {
        let adj = &self.adjacency[v];
        let start = adj.partition_point(|n| n.timestamp < lo);
        let end = adj.partition_point(|n| n.timestamp <= hi);
        if start >= end {
            &[]
        } else {
            &adj[start..end]
        }
    }

    /// Distinct incident timestamps of `v` strictly greater than `t`,
    /// ascending.
    pub fn distinct_timestamps_after(&self, v: usize, t: Timestamp) -> Vec<Timestamp> {
        let adj = &self.adjacency[v];
        let lo = adj.partition_point(|n| n.timestamp <= t);
        distinct_times(&adj[lo..])
    }

    /// Distinct incident timestamps of `v` in `[floor, t)`, ascending.
    pub fn distinct_timestamps_before(&self, v: usize, t: Timestamp, floor: Timestamp) -> Vec<Timestamp> {
        let adj = &self.adjacency[v];
        let lo = adj.partition_point(|n| n.timestamp < floor);
        let hi = adj.partition_point(|n| n.timestamp < t);
        if lo >= hi {
            Vec::new()
        } else {
            distinct_times(&adj[lo..hi])
        }
    }

    /// Whether some edge joins `u` and `v` at exactly `t`.
    pub fn has_edge_at(&self, u: usize, v: usize, t: Timestamp) -> bool {
        self.neighbors_exactly_at(u, t).iter().any(|n| n.node == v)
    }

    /// Dense index for `id`, registering the node on first sight.
    pub fn ensure_node(&mut self, id: &str, type_name: &str) -> Result<usize> {
        if let Some(&index) = self.lookup.get(id) {
            let expected = self.nodes[index].type_label;
            if self.node_types[expected.0 as usize] != type_name {
                return Err(Error::ConflictingNodeType {
                    id: id.to_owned(),
                    expected: self.node_types[expected.0 as usize].clone(),
                    found: type_name.to_owned(),
                });
            }
            return Ok(index);
        }
        let type_label = self.intern_node_type(type_name);
        let index = self.nodes.len();
        self.nodes.push(NodeRef {
            id: id.to_owned(),
            index,
            type_label,
        });
        self.lookup.insert(id.to_owned(), index);
        self.adjacency.push(Vec::new());
        Ok(index)
    }

    fn intern_node_type(&mut self, name: &str) -> TypeId {
        if let Some(&ty) = self.node_type_lookup.get(name) {
            return ty;
        }
        let ty = TypeId(self.node_types.len() as u32);
        self.node_types.push(name.to_owned());
        self.node_type_lookup.insert(name.to_owned(), ty);
        ty
    }

    pub fn intern_edge_type(&mut self, name: &str) -> u32 {
        if let Some(&ty) = self.edge_type_lookup.get(name) {
            return ty;
        }
        let ty = self.edge_types.len() as u32;
        self.edge_types.push(name.to_owned());
        self.edge_type_lookup.insert(name.to_owned(), ty);
        ty
    }

    /// Registers both endpoints of a parsed record and returns the edge
    /// without inserting it.
    pub fn resolve_record(&mut self, record: &EdgeRecord) -> Result<TemporalEdge> {
        let src = self.ensure_node(&record.src_id, &record.src_type)?;
        let dst = self.ensure_node(&record.dst_id, &record.dst_type)?;
        let edge_type = record.edge_type.as_deref().map(|t| self.intern_edge_type(t));
        Ok(TemporalEdge {
            src,
            dst,
            timestamp: record.timestamp,
            edge_type,
        })
    }

    fn check_endpoints(&self, edge: &TemporalEdge) -> Result<()> {
        for v in [edge.src, edge.dst] {
            if v >= self.nodes.len() {
                return Err(Error::NodeOutOfRange(v));
            }
        }
        Ok(())
    }

    fn push_adjacency(&mut self, edge: &TemporalEdge) {
        let dst_type = self.nodes[edge.dst].type_label;
        self.adjacency[edge.src].push(Neighbor {
            node: edge.dst,
            timestamp: edge.timestamp,
            node_type: dst_type,
        });
        if !self.directed && edge.src != edge.dst {
            let src_type = self.nodes[edge.src].type_label;
            self.adjacency[edge.dst].push(Neighbor {
                node: edge.src,
                timestamp: edge.timestamp,
                node_type: src_type,
            });
        }
    }

    /// Appends an edge whose timestamp is not older than anything already
    /// stored, keeping every adjacency list sorted without re-sorting.
    pub fn append_edge(&mut self, edge: TemporalEdge) -> Result<()> {
        self.check_endpoints(&edge)?;
        if let Some(latest) = self.latest_timestamp() {
            if edge.timestamp < latest {
                return Err(Error::OutOfOrderEdge {
                    got: edge.timestamp,
                    latest,
                });
            }
        }
        self.push_adjacency(&edge);
        self.edges.push(edge);
        Ok(())
    }

    /// Inserts edges in any order, then restores the per-node sort.
    pub fn extend_edges<I: IntoIterator<Item = TemporalEdge>>(&mut self, edges: I) -> Result<()> {
        for edge in edges {
            self.check_endpoints(&edge)?;
            self.push_adjacency(&edge);
            self.edges.push(edge);
        }
        for adj in &mut self.adjacency {
            adj.sort_by_key(|n| n.timestamp);
        }
        Ok(())
    }

    /// Same node set and indexing, keeping only edges accepted by `keep`.
    pub fn restricted<F: Fn(&TemporalEdge) -> bool>(&self, keep: F) -> TemporalHin {
        let mut out = TemporalHin {
            nodes: self.nodes.clone(),
            lookup: self.lookup.clone(),
            node_types: self.node_types.clone(),
            node_type_lookup: self.node_type_lookup.clone(),
            edge_types: self.edge_types.clone(),
            edge_type_lookup: self.edge_type_lookup.clone(),
            edges: Vec::new(),
            adjacency: vec![Vec::new(); self.nodes.len()],
            directed: self.directed,
        };
        let kept: Vec<_> = self.edges.iter().filter(|e| keep(e)).copied().collect();
        out.extend_edges(kept).expect("endpoints come from the same node set");
        out
    }
}

fn distinct_times(entries: &[Neighbor]) -> Vec<Timestamp> {
    let mut out: Vec<Timestamp> = Vec::new();
    for n in entries {
        if out.last() != Some(&n.timestamp) {
            out.push(n.timestamp);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Node "v" with edges at timestamps {1, 1, 3} and a fourth node at 5.
    fn fixture() -> (TemporalHin, usize) {
        let mut g = TemporalHin::new(false);
        let v = g.ensure_node("v", "A").unwrap();
        let a = g.ensure_node("a", "A").unwrap();
        let b = g.ensure_node("b", "B").unwrap();
        let c = g.ensure_node("c", "B").unwrap();
        g.extend_edges([
            TemporalEdge { src: v, dst: c, timestamp: 3, edge_type: None },
            TemporalEdge { src: v, dst: a, timestamp: 1, edge_type: None },
            TemporalEdge { src: b, dst: v, timestamp: 1, edge_type: None },
        ])
        .unwrap();
        (g, v)
    }

    #[test]
    fn at_or_after_queries() {
        let (g, v) = fixture();
        let later = g.neighbors_at_or_after(v, 2);
        assert_eq!(later.len(), 1);
        assert_eq!(later[0].timestamp, 3);
        assert!(g.neighbors_at_or_after(v, 4).is_empty());
        assert_eq!(g.neighbors_at_or_after(v, 1).len(), 3);
    }

    #[test]
    fn exactly_at_queries() {
        let (g, v) = fixture();
        let at1 = g.neighbors_exactly_at(v, 1);
        assert_eq!(at1.len(), 2);
        assert!(at1.iter().all(|n| n.timestamp == 1));
        assert!(g.neighbors_exactly_at(v, 2).is_empty());
    }

    #[test]
    fn multi_edges_keep_multiplicity() {
        let mut g = TemporalHin::new(false);
        let v = g.ensure_node("v", "A").unwrap();
        let u = g.ensure_node("u", "A").unwrap();
        let e = TemporalEdge { src: v, dst: u, timestamp: 4, edge_type: None };
        g.extend_edges([e, e]).unwrap();
        let at = g.neighbors_exactly_at(v, 4);
        assert_eq!(at.iter().filter(|n| n.node == u).count(), 2);
        assert_eq!(g.neighbors(u).len(), 2);
    }

    #[test]
    fn distinct_timestamps() {
        let mut g = TemporalHin::new(false);
        let v = g.ensure_node("v", "A").unwrap();
        let others: Vec<_> = (0..4).map(|i| g.ensure_node(&format!("n{i}"), "A").unwrap()).collect();
        let edges = [1, 2, 2, 5]
            .iter()
            .zip(&others)
            .map(|(&t, &o)| TemporalEdge { src: v, dst: o, timestamp: t, edge_type: None });
        g.extend_edges(edges).unwrap();
        assert_eq!(g.distinct_timestamps_after(v, 1), vec![2, 5]);
        assert!(g.distinct_timestamps_after(v, 5).is_empty());
        assert_eq!(g.distinct_timestamps_after(v, 0), vec![1, 2, 5]);
        assert_eq!(g.distinct_timestamps_before(v, 5, 0), vec![1, 2]);
        assert_eq!(g.distinct_timestamps_before(v, 5, 2), vec![2]);
    }

    #[test]
    fn conflicting_type_is_rejected() {
        let mut g = TemporalHin::new(false);
        g.ensure_node("a", "X").unwrap();
        let err = g.ensure_node("a", "Z").unwrap_err();
        assert!(matches!(err, Error::ConflictingNodeType { .. }));
    }

    #[test]
    fn append_rejects_older_edges() {
        let (mut g, v) = fixture();
        let err = g
            .append_edge(TemporalEdge { src: v, dst: 1, timestamp: 2, edge_type: None })
            .unwrap_err();
        assert!(matches!(err, Error::OutOfOrderEdge { got: 2, latest: 3 }));
        g.append_edge(TemporalEdge { src: v, dst: 1, timestamp: 3, edge_type: None })
            .unwrap();
        assert_eq!(g.neighbors_exactly_at(v, 3).len(), 2);
    }

    #[test]
    fn directed_mode_stores_one_side() {
        let mut g = TemporalHin::new(true);
        let a = g.ensure_node("a", "X").unwrap();
        let b = g.ensure_node("b", "X").unwrap();
        g.extend_edges([TemporalEdge { src: a, dst: b, timestamp: 0, edge_type: None }])
            .unwrap();
        assert_eq!(g.degree(a), 1);
        assert_eq!(g.degree(b), 0);
    }

    #[test]
    fn restriction_keeps_indexing() {
        let (g, v) = fixture();
        let early = g.restricted(|e| e.timestamp < 2);
        assert_eq!(early.node_count(), g.node_count());
        assert_eq!(early.edge_count(), 2);
        assert_eq!(early.index_of("c"), g.index_of("c"));
        assert!(early.neighbors_at_or_after(v, 2).is_empty());
    }
}
