//! Seeded synthetic temporal graphs for tests, benchmarks and examples.

use rand::Rng;

use crate::graph::{TemporalEdge, TemporalHin};
use crate::rng::{self, Stream};

/// Parameters of a temporal planted-partition graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPartition {
    pub nodes: usize,
    pub blocks: usize,
    pub node_types: usize,
    /// Timestamps `1..=timestamps`.
    pub timestamps: usize,
    pub edges_per_timestamp: usize,
    /// Chance that an edge stays inside its source's block.
    pub intra_probability: f64,
    pub seed: u64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        PlantedPartition {
            nodes: 1000,
            blocks: 20,
            node_types: 2,
            timestamps: 20,
            edges_per_timestamp: 3000,
            intra_probability: 0.9,
            seed: 0,
        }
    }
}

fn add_nodes(g: &mut TemporalHin, n: usize, type_of: impl Fn(usize) -> usize) {
    for i in 0..n {
        g.ensure_node(&format!("n{i}"), &format!("t{}", type_of(i)))
            .expect("fresh ids");
    }
}

/// Node `i` sits in block `i % blocks` and has type
/// `(i / blocks) % node_types`, so types cut across blocks. Returns the
/// graph and each node's block. Every timestamp draws the same number of
/// edges from the same block structure.
pub fn planted_partition(p: &PlantedPartition) -> (TemporalHin, Vec<usize>) {
    assert!(p.blocks >= 2 && p.nodes >= 2 * p.blocks, "each block needs two nodes");
    let mut rng = rng::derive(p.seed, Stream::Eval, u64::MAX);
    let mut g = TemporalHin::new(false);
    add_nodes(&mut g, p.nodes, |i| (i / p.blocks) % p.node_types.max(1));
    let block: Vec<usize> = (0..p.nodes).map(|i| i % p.blocks).collect();
    // nodes of block b are b, b + blocks, b + 2·blocks, ...
    let members = |b: usize| (p.nodes - b).div_ceil(p.blocks);
    let mut edges = Vec::with_capacity(p.timestamps * p.edges_per_timestamp);
    for t in 1..=p.timestamps {
        for _ in 0..p.edges_per_timestamp {
            let u = rng.gen_range(0..p.nodes);
            let v = loop {
                let v = if rng.gen_bool(p.intra_probability) {
                    block[u] + p.blocks * rng.gen_range(0..members(block[u]))
                } else {
                    let mut b = rng.gen_range(0..p.blocks - 1);
                    if b >= block[u] {
                        b += 1;
                    }
                    b + p.blocks * rng.gen_range(0..members(b))
                };
                if v != u {
                    break v;
                }
            };
            edges.push(TemporalEdge {
                src: u,
                dst: v,
                timestamp: t as i64,
                edge_type: None,
            });
        }
    }
    g.extend_edges(edges).expect("endpoints in range");
    (g, block)
}

/// A ring through all nodes plus `extra_edges` uniform random edges, all
/// at uniform timestamps in `0..timestamps`, with types assigned
/// round-robin.
pub fn random_temporal_graph(
    nodes: usize,
    extra_edges: usize,
    timestamps: i64,
    node_types: usize,
    seed: u64,
) -> TemporalHin {
    let mut rng = rng::derive(seed, Stream::Eval, u64::MAX - 1);
    let mut g = TemporalHin::new(false);
    add_nodes(&mut g, nodes, |i| i % node_types.max(1));
    let ring = (0..nodes).map(|i| (i, (i + 1) % nodes));
    let random: Vec<(usize, usize)> = (0..extra_edges)
        .map(|_| (rng.gen_range(0..nodes), rng.gen_range(0..nodes)))
        .collect();
    let edges: Vec<TemporalEdge> = ring
        .chain(random)
        .map(|(src, dst)| TemporalEdge {
            src,
            dst,
            timestamp: rng.gen_range(0..timestamps),
            edge_type: None,
        })
        .collect();
    g.extend_edges(edges).expect("endpoints in range");
    g
}

/// Two cliques `0..size` and `size..2·size`, every clique edge present at
/// timestamps `1..=timestamps`, joined by one edge at timestamp 1.
pub fn two_cliques(size: usize, timestamps: i64) -> TemporalHin {
    let mut g = TemporalHin::new(false);
    add_nodes(&mut g, 2 * size, |i| i % 2);
    let mut edges = Vec::new();
    for base in [0, size] {
        for a in base..base + size {
            for b in (a + 1)..base + size {
                for t in 1..=timestamps {
                    edges.push(TemporalEdge {
                        src: a,
                        dst: b,
                        timestamp: t,
                        edge_type: None,
                    });
                }
            }
        }
    }
    edges.push(TemporalEdge {
        src: size - 1,
        dst: size,
        timestamp: 1,
        edge_type: None,
    });
    g.extend_edges(edges).expect("endpoints in range");
    g
}
