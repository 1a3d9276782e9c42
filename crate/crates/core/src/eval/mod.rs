//! Evaluation harnesses: snapshot splitting, link-prediction AUC and node
//! classification.
//!
//! Node pairs are unordered throughout: a test edge `(u, v)` and a sampled
//! non-edge are both stored with `u < v`.

mod classify;
mod protocol;

use std::collections::HashSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::geometry::{dot, sq_norm, Backend};
use crate::graph::{TemporalEdge, TemporalHin, Timestamp};

pub use classify::{
    f1_scores, node_classification, node_type_labels, ClassificationReport, LabeledExample, LogisticRegression,
    LogisticRegressionConfig,
};
pub use protocol::{
    run_link_prediction_protocol, LinkPredictionOptions, LinkPredictionReport, SnapshotResult,
};

/// Edges of a graph partitioned into equal-width time intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSplit {
    /// `S + 1` interval boundaries, first and last equal to the time range.
    pub boundaries: Vec<f64>,
    pub snapshots: Vec<Vec<TemporalEdge>>,
    lo: Timestamp,
    span: Timestamp,
}

impl SnapshotSplit {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Interval holding timestamp `t`. Interior boundary timestamps belong
    /// to the earlier interval.
    pub fn snapshot_of(&self, t: Timestamp) -> usize {
        snapshot_index(t, self.lo, self.span, self.snapshots.len())
    }

    /// Latest timestamp present in snapshot `i`.
    pub fn last_timestamp(&self, i: usize) -> Option<Timestamp> {
        self.snapshots[i].iter().map(|e| e.timestamp).max()
    }
}

/// `S + 1` equally spaced boundaries over `[lo, hi]`.
pub fn snapshot_boundaries(lo: f64, hi: f64, s: usize) -> Vec<f64> {
    (0..=s).map(|i| lo + (hi - lo) * i as f64 / s as f64).collect()
}

fn snapshot_index(t: Timestamp, lo: Timestamp, span: Timestamp, s: usize) -> usize {
    if span == 0 {
        return 0;
    }
    let scaled = (t - lo) as i128 * s as i128;
    let ceil = (scaled + span as i128 - 1).div_euclid(span as i128);
    (ceil - 1).clamp(0, s as i128 - 1) as usize
}

pub fn split_snapshots(graph: &TemporalHin, s: usize) -> Result<SnapshotSplit> {
    if s < 2 {
        return Err(Error::Config(format!("need at least 2 snapshots, got {s}")));
    }
    let (lo, hi) = graph
        .time_range()
        .ok_or_else(|| Error::EmptyGraph("graph to split".into()))?;
    let span = hi - lo;
    let mut snapshots = vec![Vec::new(); s];
    for e in graph.edges() {
        snapshots[snapshot_index(e.timestamp, lo, span, s)].push(*e);
    }
    if span == 0 {
        log::warn!("all edges share timestamp {lo}; snapshots 2..{s} are empty");
    }
    Ok(SnapshotSplit {
        boundaries: snapshot_boundaries(lo as f64, hi as f64, s),
        snapshots,
        lo,
        span,
    })
}

/// Edge scorer for link prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Similarity {
    #[default]
    Cosine,
    /// Negated distance under the embedding's own backend.
    NegDistance,
}

impl Similarity {
    pub fn name(self) -> &'static str {
        match self {
            Similarity::Cosine => "cosine",
            Similarity::NegDistance => "neg-distance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cosine" => Some(Similarity::Cosine),
            "neg-distance" | "distance" => Some(Similarity::NegDistance),
            _ => None,
        }
    }

    pub fn score(self, backend: Backend, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Similarity::Cosine => {
                let denom = (sq_norm(a) * sq_norm(b)).sqrt();
                if denom > 0.0 {
                    dot(a, b) / denom
                } else {
                    0.0
                }
            }
            Similarity::NegDistance => -backend.distance(a, b),
        }
    }
}

/// Mann–Whitney estimate of `P(pos > neg)` with ties counted one half.
/// `None` when either side is empty.
pub fn auc_from_scores(pos: &[f64], neg: &[f64]) -> Option<f64> {
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += mean_rank * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let np = pos.len() as f64;
    let u = rank_sum - np * (np + 1.0) / 2.0;
    Some(u / (np * neg.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucOutcome {
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
    /// Pairs dropped because an endpoint had no embedding.
    pub skipped: usize,
}

pub fn link_prediction_auc(
    embeddings: &EmbeddingMatrix,
    test_edges: &[(usize, usize)],
    negative_edges: &[(usize, usize)],
    similarity: Similarity,
) -> Result<AucOutcome> {
    let mut skipped = 0;
    let mut score_all = |pairs: &[(usize, usize)]| -> Vec<f64> {
        pairs
            .iter()
            .filter_map(|&(u, v)| match (embeddings.get(u), embeddings.get(v)) {
                (Some(a), Some(b)) => Some(similarity.score(embeddings.backend(), a, b)),
                _ => {
                    skipped += 1;
                    None
                }
            })
            .collect()
    };
    let pos = score_all(test_edges);
    let neg = score_all(negative_edges);
    if skipped > 0 {
        log::warn!("{skipped} pairs skipped for missing embeddings");
    }
    let auc = auc_from_scores(&pos, &neg)
        .ok_or_else(|| Error::Evaluation("no scorable positive or negative pairs".into()))?;
    Ok(AucOutcome {
        auc,
        positives: pos.len(),
        negatives: neg.len(),
        skipped,
    })
}

fn unordered(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Distinct unordered non-loop pairs of an edge list.
pub fn distinct_pairs<'a, I: IntoIterator<Item = &'a TemporalEdge>>(edges: I) -> Vec<(usize, usize)> {
    let mut seen = HashSet::new();
    edges
        .into_iter()
        .filter(|e| e.src != e.dst)
        .map(|e| unordered(e.src, e.dst))
        .filter(|p| seen.insert(*p))
        .collect()
}

/// `count` distinct unordered pairs drawn uniformly from those that are
/// neither an edge of `graph` (at any time) nor in `test_set`.
pub fn sample_negative_edges<R: Rng + ?Sized>(
    graph: &TemporalHin,
    count: usize,
    rng: &mut R,
    test_set: &[(usize, usize)],
) -> Result<Vec<(usize, usize)>> {
    let n = graph.node_count();
    let occupied: HashSet<(usize, usize)> = graph
        .edges()
        .iter()
        .map(|e| (e.src, e.dst))
        .chain(test_set.iter().copied())
        .filter(|(u, v)| u != v)
        .map(|(u, v)| unordered(u, v))
        .collect();
    let total = n * n.saturating_sub(1) / 2;
    let available = total - occupied.len();
    if count > available {
        return Err(Error::NotEnoughNonEdges {
            requested: count,
            available,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if available <= 4 * count {
        let absent = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|p| !occupied.contains(p));
        let mut out = absent.choose_multiple(rng, count);
        out.shuffle(rng);
        return Ok(out);
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let p = unordered(u, v);
        if !occupied.contains(&p) && chosen.insert(p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
