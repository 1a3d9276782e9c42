//! Double-constrained random walks.
//!
//! A walk moves forward in time. At every hop it first decides *when* to
//! hop (stay on the current timestamp with probability `beta^n`, otherwise
//! jump to a uniformly chosen later timestamp), then *which kind of node*
//! to visit among the neighbors at that timestamp (stay on the current
//! node type with probability `alpha^m`), and finally picks a concrete
//! adjacency entry uniformly. `n` and `m` count consecutive hops spent on
//! the current timestamp and node type, so staying gets exponentially less
//! likely the longer it lasts.
//!
//! Both constraints can be switched off independently. With the temporal
//! constraint off the walk still never goes back in time, but it picks
//! uniformly among every entry at or after the current timestamp. With the
//! type constraint off the concrete entry is picked uniformly among all
//! entries at the chosen timestamp.

mod incremental;
mod io;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Neighbor, TemporalHin, Timestamp, TypeId};
use crate::rng::{self, Stream};

pub use incremental::{update_corpus, UpdateSummary};
pub use io::{read_corpus, read_sequences, times_path, write_corpus};

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    /// Initial node-type staying probability.
    pub alpha: f64,
    /// Initial timestamp staying probability.
    pub beta: f64,
    pub walks_per_node: usize,
    /// Maximum number of nodes in a walk.
    pub max_walk_length: usize,
    pub heterogeneous: bool,
    pub temporal: bool,
    pub seed: u64,
    /// Staleness horizon for incremental updates. Hops older than
    /// `latest - horizon` are dropped. `None` means a quarter of the
    /// observed time span.
    pub horizon: Option<Timestamp>,
    /// Reversed walks grown per involved node on update. `None` means
    /// `walks_per_node`.
    pub reverse_walks: Option<usize>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            alpha: 0.9,
            beta: 0.3,
            walks_per_node: 10,
            max_walk_length: 80,
            heterogeneous: true,
            temporal: true,
            seed: 0,
            horizon: None,
            reverse_walks: None,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.walks_per_node == 0 || self.max_walk_length == 0 {
            return Err(Error::Config("walk counts must be at least 1".into()));
        }
        if matches!(self.horizon, Some(h) if h < 0) {
            return Err(Error::Config("horizon must be non-negative".into()));
        }
        Ok(())
    }

    fn reverse_walk_count(&self) -> usize {
        self.reverse_walks.unwrap_or(self.walks_per_node)
    }
}

/// Position of a walk plus its staying counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkState {
    pub current: usize,
    pub current_time: Timestamp,
    pub current_type: TypeId,
    /// Hops spent at `current_time`, starting at 1.
    pub n: u32,
    /// Hops spent at `current_type`, starting at 1.
    pub m: u32,
}

impl WalkState {
    /// State after arriving at `entry` from the start node.
    pub fn after_first_hop(entry: &Neighbor) -> Self {
        WalkState {
            current: entry.node,
            current_time: entry.timestamp,
            current_type: entry.node_type,
            n: 1,
            m: 1,
        }
    }

    fn advance(&mut self, entry: &Neighbor, forward: bool) {
        let moved = if forward {
            entry.timestamp > self.current_time
        } else {
            entry.timestamp < self.current_time
        };
        self.n = if moved { 1 } else { self.n + 1 };
        self.m = if entry.node_type == self.current_type { self.m + 1 } else { 1 };
        self.current = entry.node;
        self.current_time = entry.timestamp;
        self.current_type = entry.node_type;
    }

    /// Re-derives the counters from the tail of an existing walk.
    pub fn from_tail(graph: &TemporalHin, walk: &Walk) -> Option<Self> {
        let &last_time = walk.times.last()?;
        let &current = walk.nodes.last()?;
        let current_type = graph.node_type(current);
        let n = walk.times.iter().rev().take_while(|&&t| t == last_time).count() as u32;
        let m = walk.nodes[1..]
            .iter()
            .rev()
            .take_while(|&&v| graph.node_type(v) == current_type)
            .count() as u32;
        Some(WalkState {
            current,
            current_time: last_time,
            current_type,
            n,
            m,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeDecision {
    Stop,
    Stay(Timestamp),
    Advance(Timestamp),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeDecision {
    SameType,
    OtherType,
}

/// Time direction of a walk. Backward walks are used for the reversed
/// walks of incremental updates and never look below `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Backward { floor: Timestamp },
}

impl Direction {
    fn eligible(self, graph: &TemporalHin, v: usize, t: Timestamp) -> &[Neighbor] {
        match self {
            Direction::Forward => graph.neighbors_at_or_after(v, t),
            Direction::Backward { floor } => graph.neighbors_between(v, floor, t),
        }
    }

    fn moves(self, graph: &TemporalHin, v: usize, t: Timestamp) -> Vec<Timestamp> {
        match self {
            Direction::Forward => graph.distinct_timestamps_after(v, t),
            Direction::Backward { floor } => graph.distinct_timestamps_before(v, t, floor),
        }
    }
}

/// Which timestamp the next hop uses.
///
/// Stops when nothing is incident at or after the current time. Otherwise
/// stays with probability `beta^n` when both staying and advancing are
/// possible, always stays when only staying is, and advances to a uniform
/// later timestamp in the remaining cases.
pub fn timestamp_decision<R: Rng + ?Sized>(
    graph: &TemporalHin,
    state: &WalkState,
    beta: f64,
    rng: &mut R,
) -> TimeDecision {
    timestamp_decision_in(graph, state, beta, Direction::Forward, rng)
}

pub(crate) fn timestamp_decision_in<R: Rng + ?Sized>(
    graph: &TemporalHin,
    state: &WalkState,
    beta: f64,
    dir: Direction,
    rng: &mut R,
) -> TimeDecision {
    if dir.eligible(graph, state.current, state.current_time).is_empty() {
        return TimeDecision::Stop;
    }
    let can_stay = !graph
        .neighbors_exactly_at(state.current, state.current_time)
        .is_empty();
    let moves = dir.moves(graph, state.current, state.current_time);
    if !can_stay {
        return TimeDecision::Advance(moves[rng.gen_range(0..moves.len())]);
    }
    if moves.is_empty() || rng.gen::<f64>() < beta.powi(state.n as i32) {
        return TimeDecision::Stay(state.current_time);
    }
    TimeDecision::Advance(moves[rng.gen_range(0..moves.len())])
}

/// Whether the hop at `chosen_time` keeps the current node type: certain
/// when every neighbor at that time shares it, impossible when none does,
/// probability `alpha^m` otherwise.
///
/// # Panics
///
/// If `current` has no edge at `chosen_time`; the timestamp decision never
/// produces such a time.
pub fn type_decision<R: Rng + ?Sized>(
    graph: &TemporalHin,
    state: &WalkState,
    chosen_time: Timestamp,
    alpha: f64,
    rng: &mut R,
) -> TypeDecision {
    let candidates = graph.neighbors_exactly_at(state.current, chosen_time);
    type_decision_among(candidates, state, alpha, rng)
}

fn type_decision_among<R: Rng + ?Sized>(
    candidates: &[Neighbor],
    state: &WalkState,
    alpha: f64,
    rng: &mut R,
) -> TypeDecision {
    assert!(
        !candidates.is_empty(),
        "type decision on node {} with no candidates",
        state.current
    );
    let same = candidates
        .iter()
        .filter(|n| n.node_type == state.current_type)
        .count();
    if same == 0 {
        TypeDecision::OtherType
    } else if same == candidates.len() || rng.gen::<f64>() < alpha.powi(state.m as i32) {
        TypeDecision::SameType
    } else {
        TypeDecision::OtherType
    }
}

fn pick_where<R: Rng + ?Sized, F: Fn(&Neighbor) -> bool>(
    candidates: &[Neighbor],
    keep: F,
    rng: &mut R,
) -> Neighbor {
    let count = candidates.iter().filter(|n| keep(n)).count();
    let k = rng.gen_range(0..count);
    *candidates.iter().filter(|n| keep(n)).nth(k).unwrap()
}

/// One hop: `(next node, hop timestamp)`, or `None` when the walk stops.
/// Updates `state` in place.
pub fn step<R: Rng + ?Sized>(
    graph: &TemporalHin,
    state: &mut WalkState,
    config: &WalkConfig,
    rng: &mut R,
) -> Option<(usize, Timestamp)> {
    step_in(graph, state, config, Direction::Forward, rng)
}

pub(crate) fn step_in<R: Rng + ?Sized>(
    graph: &TemporalHin,
    state: &mut WalkState,
    config: &WalkConfig,
    dir: Direction,
    rng: &mut R,
) -> Option<(usize, Timestamp)> {
    let candidates = if config.temporal {
        match timestamp_decision_in(graph, state, config.beta, dir, rng) {
            TimeDecision::Stop => return None,
            TimeDecision::Stay(t) | TimeDecision::Advance(t) => graph.neighbors_exactly_at(state.current, t),
        }
    } else {
        let all = dir.eligible(graph, state.current, state.current_time);
        if all.is_empty() {
            return None;
        }
        all
    };
    let current_type = state.current_type;
    let entry = if config.heterogeneous {
        match type_decision_among(candidates, state, config.alpha, rng) {
            TypeDecision::SameType => pick_where(candidates, |n| n.node_type == current_type, rng),
            TypeDecision::OtherType => pick_where(candidates, |n| n.node_type != current_type, rng),
        }
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    };
    state.advance(&entry, !matches!(dir, Direction::Backward { .. }));
    Some((entry.node, entry.timestamp))
}

/// Exact next-hop law from `state`: `(node, hop time, probability)` for
/// every distinct outcome, or an empty list when the walk stops.
pub fn transition_distribution(
    graph: &TemporalHin,
    state: &WalkState,
    config: &WalkConfig,
) -> Vec<(usize, Timestamp, f64)> {
    let v = state.current;
    let mut times: Vec<(Timestamp, f64)> = Vec::new();
    if config.temporal {
        if graph.neighbors_at_or_after(v, state.current_time).is_empty() {
            return Vec::new();
        }
        let can_stay = !graph.neighbors_exactly_at(v, state.current_time).is_empty();
        let moves = graph.distinct_timestamps_after(v, state.current_time);
        let stay = match (can_stay, moves.is_empty()) {
            (false, _) => 0.0,
            (true, true) => 1.0,
            (true, false) => config.beta.powi(state.n as i32),
        };
        if can_stay {
            times.push((state.current_time, stay));
        }
        for &t in &moves {
            times.push((t, (1.0 - stay) / moves.len() as f64));
        }
    }

    let mut out: Vec<(usize, Timestamp, f64)> = Vec::new();
    let mut add = |node: usize, t: Timestamp, p: f64| {
        if p == 0.0 {
            return;
        }
        match out.iter_mut().find(|(u, s, _)| *u == node && *s == t) {
            Some(slot) => slot.2 += p,
            None => out.push((node, t, p)),
        }
    };
    let mut spread = |candidates: &[Neighbor], mass: f64| {
        if config.heterogeneous {
            let same = candidates.iter().filter(|n| n.node_type == state.current_type).count();
            let other = candidates.len() - same;
            let p_same = if same == 0 {
                0.0
            } else if other == 0 {
                1.0
            } else {
                config.alpha.powi(state.m as i32)
            };
            for n in candidates {
                let p = if n.node_type == state.current_type {
                    p_same / same as f64
                } else {
                    (1.0 - p_same) / other as f64
                };
                add(n.node, n.timestamp, mass * p);
            }
        } else {
            for n in candidates {
                add(n.node, n.timestamp, mass / candidates.len() as f64);
            }
        }
    };
    if config.temporal {
        for (t, p) in times {
            spread(graph.neighbors_exactly_at(v, t), p);
        }
    } else {
        let all = graph.neighbors_at_or_after(v, state.current_time);
        if all.is_empty() {
            return Vec::new();
        }
        spread(all, 1.0);
    }
    out
}

/// Where a walk came from: its start node and the corpus epoch that
/// created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkOrigin {
    pub source: usize,
    pub epoch: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub nodes: Vec<usize>,
    /// `times[i]` is the timestamp of the hop `nodes[i] -> nodes[i + 1]`.
    pub times: Vec<Timestamp>,
    pub origin: WalkOrigin,
}

/// Ways a walk can break its invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WalkViolation {
    Length(usize),
    TimesLength,
    TimeOrder { hop: usize },
    MissingEdge { hop: usize },
}

impl Walk {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks length bounds, time order and edge existence.
    pub fn check(&self, graph: &TemporalHin, max_len: usize) -> std::result::Result<(), WalkViolation> {
        if self.nodes.len() < 2 || self.nodes.len() > max_len {
            return Err(WalkViolation::Length(self.nodes.len()));
        }
        if self.times.len() + 1 != self.nodes.len() {
            return Err(WalkViolation::TimesLength);
        }
        for hop in 0..self.times.len() {
            if hop > 0 && self.times[hop] < self.times[hop - 1] {
                return Err(WalkViolation::TimeOrder { hop });
            }
            if !graph.has_edge_at(self.nodes[hop], self.nodes[hop + 1], self.times[hop]) {
                return Err(WalkViolation::MissingEdge { hop });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Walk>,
    /// Incremented by every non-empty update.
    pub epoch: u32,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Walk::len).sum()
    }
}

/// Grows a walk from `source` whose first hop is `first`.
pub(crate) fn grow_walk<R: Rng + ?Sized>(
    graph: &TemporalHin,
    source: usize,
    first: &Neighbor,
    config: &WalkConfig,
    dir: Direction,
    rng: &mut R,
) -> (Vec<usize>, Vec<Timestamp>) {
    let mut nodes = Vec::with_capacity(config.max_walk_length.min(128));
    let mut times = Vec::with_capacity(config.max_walk_length.min(128));
    nodes.push(source);
    nodes.push(first.node);
    times.push(first.timestamp);
    let mut state = WalkState::after_first_hop(first);
    while nodes.len() < config.max_walk_length {
        match step_in(graph, &mut state, config, dir, rng) {
            Some((next, t)) => {
                nodes.push(next);
                times.push(t);
            }
            None => break,
        }
    }
    (nodes, times)
}

fn walks_from<R: Rng + ?Sized>(
    graph: &TemporalHin,
    source: usize,
    config: &WalkConfig,
    epoch: u32,
    rng: &mut R,
) -> Vec<Walk> {
    let adj = graph.neighbors(source);
    if adj.is_empty() || config.max_walk_length < 2 {
        return Vec::new();
    }
    (0..config.walks_per_node)
        .map(|_| {
            let first = adj[rng.gen_range(0..adj.len())];
            let (nodes, times) = grow_walk(graph, source, &first, config, Direction::Forward, rng);
            Walk {
                nodes,
                times,
                origin: WalkOrigin { source, epoch },
            }
        })
        .collect()
}

/// `walks_per_node` walks from every non-isolated node, ordered by start
/// node. Start nodes are processed in parallel, each with its own stream
/// derived from the seed, so the output does not depend on thread count.
pub fn generate_corpus(graph: &TemporalHin, config: &WalkConfig) -> Result<WalkCorpus> {
    config.validate()?;
    let per_node: Vec<Vec<Walk>> = (0..graph.node_count())
        .into_par_iter()
        .map(|v| {
            let mut rng = rng::derive(config.seed, Stream::Walker, v as u64);
            walks_from(graph, v, config, 0, &mut rng)
        })
        .collect();
    Ok(WalkCorpus {
        walks: per_node.into_iter().flatten().collect(),
        epoch: 0,
    })
}
