use rayon::prelude::*;

use super::{distinct_pairs, link_prediction_auc, sample_negative_edges, split_snapshots, Similarity, SnapshotSplit};
use crate::error::{Error, Result};
use crate::graph::{TemporalEdge, TemporalHin, Timestamp};
use crate::rng::{self, Stream};
use crate::trainer::{train, TrainConfig};
use crate::walker::{generate_corpus, WalkConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredictionOptions {
    pub snapshots: usize,
    pub similarity: Similarity,
    /// Seed of the negative-pair sampler.
    pub seed: u64,
    /// Run the per-snapshot trainings concurrently.
    pub parallel: bool,
}

impl Default for LinkPredictionOptions {
    fn default() -> Self {
        LinkPredictionOptions {
            snapshots: 4,
            similarity: Similarity::Cosine,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotResult {
    /// Zero-based index of the test snapshot.
    pub snapshot: usize,
    /// Latest timestamp in the test snapshot.
    pub last_timestamp: Option<Timestamp>,
    pub train_edges: usize,
    /// Distinct test pairs after deduplication.
    pub test_edges: usize,
    pub negatives: usize,
    pub skipped: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredictionReport {
    pub boundaries: Vec<f64>,
    pub snapshots: Vec<SnapshotResult>,
    pub average: f64,
}

/// Checks that the training graph holds only edges from snapshots before
/// `t` and the test list only edges from snapshot `t`.
fn audit(split: &SnapshotSplit, t: usize, train_graph: &TemporalHin, test: &[TemporalEdge]) -> Result<()> {
    if let Some(e) = train_graph.edges().iter().find(|e| split.snapshot_of(e.timestamp) >= t) {
        return Err(Error::Evaluation(format!(
            "training graph for snapshot {t} holds an edge at timestamp {}",
            e.timestamp
        )));
    }
    if let Some(e) = test.iter().find(|e| split.snapshot_of(e.timestamp) != t) {
        return Err(Error::Evaluation(format!(
            "test set of snapshot {t} holds an edge at timestamp {}",
            e.timestamp
        )));
    }
    Ok(())
}

fn evaluate_snapshot(
    graph: &TemporalHin,
    split: &SnapshotSplit,
    t: usize,
    walk: &WalkConfig,
    train_config: &TrainConfig,
    opts: &LinkPredictionOptions,
) -> Result<Option<SnapshotResult>> {
    let train_graph = graph.restricted(|e| split.snapshot_of(e.timestamp) < t);
    let test_edges = &split.snapshots[t];
    audit(split, t, &train_graph, test_edges)?;
    let positives = distinct_pairs(test_edges);
    if train_graph.edge_count() == 0 || positives.is_empty() {
        log::warn!("snapshot {t} skipped: no training or test edges");
        return Ok(None);
    }
    let corpus = generate_corpus(&train_graph, walk)?;
    let embeddings = train(&corpus, &train_graph, train_config)?.embeddings;
    let mut eval_rng = rng::derive(opts.seed, Stream::Eval, t as u64);
    let negatives = sample_negative_edges(graph, positives.len(), &mut eval_rng, &positives)?;
    let outcome = link_prediction_auc(&embeddings, &positives, &negatives, opts.similarity)?;
    Ok(Some(SnapshotResult {
        snapshot: t,
        last_timestamp: split.last_timestamp(t),
        train_edges: train_graph.edge_count(),
        test_edges: positives.len(),
        negatives: negatives.len(),
        skipped: outcome.skipped,
        auc: outcome.auc,
    }))
}

/// Trains on the first `t` snapshots and scores snapshot `t`, for every
/// `t` in `1..S`. Test edges are deduplicated as unordered pairs and paired
/// with an equal number of sampled non-edges.
pub fn run_link_prediction_protocol(
    graph: &TemporalHin,
    walk: &WalkConfig,
    train_config: &TrainConfig,
    opts: &LinkPredictionOptions,
) -> Result<LinkPredictionReport> {
    walk.validate()?;
    train_config.validate()?;
    let split = split_snapshots(graph, opts.snapshots)?;
    let run = |t: usize| evaluate_snapshot(graph, &split, t, walk, train_config, opts);
    let results: Vec<Option<SnapshotResult>> = if opts.parallel {
        (1..split.len()).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (1..split.len()).map(run).collect::<Result<_>>()?
    };
    let snapshots: Vec<SnapshotResult> = results.into_iter().flatten().collect();
    if snapshots.is_empty() {
        return Err(Error::Evaluation("no snapshot had both training and test edges".into()));
    }
    let average = snapshots.iter().map(|s| s.auc).sum::<f64>() / snapshots.len() as f64;
    Ok(LinkPredictionReport {
        boundaries: split.boundaries,
        snapshots,
        average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_catches_leaks() {
        let mut g = TemporalHin::new(false);
        for i in 0..4 {
            g.ensure_node(&i.to_string(), "T").unwrap();
        }
        let edges: Vec<TemporalEdge> = (0..4)
            .map(|i| TemporalEdge {
                src: i,
                dst: (i + 1) % 4,
                timestamp: i as i64 * 10,
                edge_type: None,
            })
            .collect();
        g.extend_edges(edges.clone()).unwrap();
        let split = split_snapshots(&g, 3).unwrap();
        let honest = g.restricted(|e| split.snapshot_of(e.timestamp) < 2);
        assert!(audit(&split, 2, &honest, &split.snapshots[2]).is_ok());
        let leaky = g.restricted(|e| split.snapshot_of(e.timestamp) <= 2);
        assert!(audit(&split, 2, &leaky, &split.snapshots[2]).is_err());
        assert!(audit(&split, 1, &honest, &split.snapshots[2]).is_err());
    }
}
