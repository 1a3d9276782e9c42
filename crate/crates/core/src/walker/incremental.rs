//! Incremental corpus maintenance for append-only edge streams.
//!
//! After a batch of new edges lands, every node incident to one of them is
//! *involved*. The corpus is then patched instead of regenerated:
//!
//! 1. walks that touch no involved node and hold no stale hop are left
//!    exactly as they were;
//! 2. hops older than `latest - horizon` are cut from the front of every
//!    walk (walks left with fewer than two nodes are dropped);
//! 3. walks ending at an involved node are extended with ordinary forward
//!    steps, their counters re-derived from the walk tail;
//! 4. for each involved node, fresh walks are grown backward in time from
//!    one of its new edges and stored reversed, so they too read forward.

use rand::Rng;

use super::{grow_walk, step_in, Direction, Walk, WalkConfig, WalkCorpus, WalkOrigin, WalkState};
use crate::error::{Error, Result};
use crate::graph::{Neighbor, TemporalEdge, TemporalHin, Timestamp};
use crate::rng::{self, Stream};

/// Per-rule bookkeeping of one update.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateSummary {
    pub new_edges: usize,
    pub involved_nodes: usize,
    /// Walks touching no involved node, left untouched.
    pub preserved: usize,
    /// Walks touching an involved node but otherwise unchanged.
    pub involved_unchanged: usize,
    /// Walks that lost a stale prefix and survived.
    pub truncated: usize,
    /// Walks dropped because nothing but stale hops remained.
    pub removed: usize,
    /// Walks extended from an involved last node.
    pub continued: usize,
    /// Reversed walks added.
    pub reversed: usize,
    pub horizon: Timestamp,
    pub threshold: Timestamp,
}

impl UpdateSummary {
    pub fn modified(&self) -> usize {
        self.truncated + self.removed + self.continued + self.reversed
    }
}

fn validate_batch(graph: &TemporalHin, new_edges: &[TemporalEdge]) -> Result<()> {
    let mut latest = graph.latest_timestamp();
    for e in new_edges {
        for v in [e.src, e.dst] {
            if v >= graph.node_count() {
                return Err(Error::NodeOutOfRange(v));
            }
        }
        if let Some(l) = latest {
            if e.timestamp < l {
                return Err(Error::OutOfOrderEdge {
                    got: e.timestamp,
                    latest: l,
                });
            }
        }
        latest = Some(e.timestamp);
    }
    Ok(())
}

/// Appends `new_edges` to `graph` and patches `corpus` in place.
///
/// Every new edge must be at least as recent as everything already in the
/// graph (and the batch itself must be time-ordered); otherwise nothing is
/// modified and [`Error::OutOfOrderEdge`] is returned. An empty batch is a
/// no-op.
pub fn update_corpus(
    graph: &mut TemporalHin,
    corpus: &mut WalkCorpus,
    new_edges: &[TemporalEdge],
    config: &WalkConfig,
) -> Result<UpdateSummary> {
    config.validate()?;
    if new_edges.is_empty() {
        return Ok(UpdateSummary::default());
    }
    validate_batch(graph, new_edges)?;
    for &e in new_edges {
        graph.append_edge(e)?;
    }
    corpus.epoch += 1;
    let epoch = corpus.epoch;

    let mut involved = vec![false; graph.node_count()];
    let mut fresh: Vec<Vec<Neighbor>> = vec![Vec::new(); graph.node_count()];
    for e in new_edges {
        involved[e.src] = true;
        involved[e.dst] = true;
        fresh[e.src].push(Neighbor {
            node: e.dst,
            timestamp: e.timestamp,
            node_type: graph.node_type(e.dst),
        });
        if e.src != e.dst && !graph.is_directed() {
            fresh[e.dst].push(Neighbor {
                node: e.src,
                timestamp: e.timestamp,
                node_type: graph.node_type(e.src),
            });
        }
    }

    let (min_t, max_t) = graph.time_range().expect("graph has edges");
    let horizon = config
        .horizon
        .unwrap_or_else(|| ((max_t - min_t) as f64 * 0.25).round() as Timestamp);
    let threshold = max_t.saturating_sub(horizon);

    let mut summary = UpdateSummary {
        new_edges: new_edges.len(),
        involved_nodes: involved.iter().filter(|&&b| b).count(),
        horizon,
        threshold,
        ..Default::default()
    };

    let mut continue_rng = rng::derive(config.seed, Stream::Walker, u64::from(epoch) << 40);
    corpus.walks.retain_mut(|walk| {
        let touches = walk.nodes.iter().any(|&v| involved[v]);
        let stale = walk.times.first().is_some_and(|&t| t < threshold);
        if !touches && !stale {
            summary.preserved += 1;
            return true;
        }
        if stale {
            let cut = walk.times.partition_point(|&t| t < threshold);
            walk.nodes.drain(..cut);
            walk.times.drain(..cut);
            if walk.nodes.len() < 2 {
                summary.removed += 1;
                return false;
            }
            summary.truncated += 1;
        }
        let last = *walk.nodes.last().unwrap();
        if involved[last] {
            if extend_walk(graph, walk, config, &mut continue_rng) > 0 {
                summary.continued += 1;
            }
        } else if !stale {
            summary.involved_unchanged += 1;
        }
        true
    });

    let per_node = config.reverse_walk_count();
    for x in (0..graph.node_count()).filter(|&x| involved[x]) {
        let starts: Vec<Neighbor> = fresh[x].iter().filter(|n| n.timestamp >= threshold).copied().collect();
        if starts.is_empty() || config.max_walk_length < 2 {
            continue;
        }
        let mut rng = rng::derive(config.seed, Stream::Walker, (u64::from(epoch) << 40) | (x as u64 + 1));
        for _ in 0..per_node {
            let first = starts[rng.gen_range(0..starts.len())];
            let (mut nodes, mut times) = grow_walk(
                graph,
                x,
                &first,
                config,
                Direction::Backward { floor: threshold },
                &mut rng,
            );
            nodes.reverse();
            times.reverse();
            corpus.walks.push(Walk {
                nodes,
                times,
                origin: WalkOrigin { source: x, epoch },
            });
            summary.reversed += 1;
        }
    }
    log::debug!("corpus update: {summary:?}");
    Ok(summary)
}

/// Continues `walk` forward from its last node; returns the number of hops
/// added. A walk already at the length cap first gives up its oldest hop so
/// it can absorb the new edge.
fn extend_walk<R: Rng + ?Sized>(graph: &TemporalHin, walk: &mut Walk, config: &WalkConfig, rng: &mut R) -> usize {
    if config.max_walk_length < 2 {
        return 0;
    }
    let Some(mut state) = WalkState::from_tail(graph, walk) else {
        return 0;
    };
    if walk.nodes.len() >= config.max_walk_length {
        let excess = walk.nodes.len() + 1 - config.max_walk_length;
        walk.nodes.drain(..excess);
        walk.times.drain(..excess);
    }
    let mut added = 0;
    while walk.nodes.len() < config.max_walk_length {
        match step_in(graph, &mut state, config, Direction::Forward, rng) {
            Some((next, t)) => {
                walk.nodes.push(next);
                walk.times.push(t);
                added += 1;
            }
            None => break,
        }
    }
    added
}
