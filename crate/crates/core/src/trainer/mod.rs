//! Embedding training over a walk corpus.
//!
//! Every epoch shuffles the co-occurrence pairs of the corpus and, for each
//! pair, draws `k` negatives, evaluates the ranking loss and moves the
//! target, the context and every negative one Riemannian step along their
//! negated loss gradients. The learning rate decays linearly from
//! `lr_initial` to `lr_final` over the whole run.
//!
//! Two execution modes exist. Deterministic mode applies updates one at a
//! time from a single seeded stream and reproduces bit-identical matrices.
//! Parallel mode splits each epoch's pairs across worker threads that read
//! and write rows without locks; concurrent writes to the same row may lose
//! an update, which sparse SGD tolerates.

mod loss;
mod negative;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::geometry::{Backend, GeometryError};
use crate::graph::TemporalHin;
use crate::rng::{self, Stream};
use crate::walker::WalkCorpus;

pub use loss::{
    cooccurrence_pairs, cooccurrence_probability, log_sigmoid, pair_loss, pair_loss_into, sigmoid, PairLoss,
    PairWorkspace,
};
pub use negative::{negative_sample, NegativeDistribution, NegativeSampler};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    /// Negatives per pair.
    pub negatives: usize,
    /// Context radius within a walk.
    pub window: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub seed: u64,
    /// Single-writer sequential updates when set; lock-free workers otherwise.
    pub deterministic: bool,
    /// Worker cap for parallel mode; 0 uses the ambient rayon pool.
    pub threads: usize,
    pub backend: Backend,
    pub negative_distribution: NegativeDistribution,
    /// Radius of the initial ball (hyperbolic backend).
    pub init_radius: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            negatives: 5,
            window: 5,
            epochs: 5,
            lr_initial: 0.001,
            lr_final: 0.0001,
            seed: 0,
            deterministic: true,
            threads: 0,
            backend: Backend::Hyperbolic,
            negative_distribution: NegativeDistribution::Uniform,
            init_radius: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("negatives must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if !(self.lr_final > 0.0 && self.lr_final <= self.lr_initial) {
            return Err(Error::Config(format!(
                "need 0 < lr_final <= lr_initial, got {} and {}",
                self.lr_final, self.lr_initial
            )));
        }
        if !(self.init_radius > 0.0 && self.init_radius < 1.0) {
            return Err(Error::Config("init_radius must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn learning_rate(&self, step: usize, total: usize) -> f64 {
        let frac = if total > 1 {
            step as f64 / (total - 1) as f64
        } else {
            0.0
        };
        self.lr_initial + (self.lr_final - self.lr_initial) * frac
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub embeddings: EmbeddingMatrix,
    /// Mean pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
    /// Pairs skipped because target and context coincided.
    pub skipped_pairs: usize,
    /// Updates dropped because of a non-finite gradient.
    pub rejected_updates: usize,
}

/// Row access shared by the sequential and the lock-free paths.
trait RowStore {
    fn read(&self, row: usize, out: &mut [f64]);
    fn write(&mut self, row: usize, src: &[f64]);
}

struct DenseRows<'a> {
    data: &'a mut [f64],
    dim: usize,
}

impl RowStore for DenseRows<'_> {
    fn read(&self, row: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn write(&mut self, row: usize, src: &[f64]) {
        self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(src);
    }
}

#[derive(Clone, Copy)]
struct SharedRows<'a> {
    cells: &'a [AtomicU64],
    dim: usize,
}

impl RowStore for SharedRows<'_> {
    fn read(&self, row: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.cells[row * self.dim..(row + 1) * self.dim]) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn write(&mut self, row: usize, src: &[f64]) {
        for (s, c) in src.iter().zip(&self.cells[row * self.dim..(row + 1) * self.dim]) {
            c.store(s.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Per-worker scratch space.
struct Scratch {
    u: Vec<f64>,
    v: Vec<f64>,
    negs: Vec<f64>,
    dir: Vec<f64>,
    ids: Vec<usize>,
    ws: PairWorkspace,
}

impl Scratch {
    fn new(dim: usize, k: usize) -> Self {
        Scratch {
            u: vec![0.0; dim],
            v: vec![0.0; dim],
            negs: vec![0.0; dim * k],
            dir: vec![0.0; dim],
            ids: Vec::with_capacity(k),
            ws: PairWorkspace::new(dim, k),
        }
    }
}

enum PairOutcome {
    Updated(f64),
    Singular,
    Rejected,
}

fn step_row(backend: Backend, x: &mut [f64], grad: &[f64], dir: &mut [f64], lr: f64) -> std::result::Result<(), GeometryError> {
    for (d, g) in dir.iter_mut().zip(grad) {
        *d = -g;
    }
    backend.step_in_place(x, dir, lr)
}

/// One SGD update for `(u, v)` with the negatives already in `s.ids`.
fn update_pair<S: RowStore>(store: &mut S, backend: Backend, dim: usize, u: usize, v: usize, lr: f64, s: &mut Scratch) -> PairOutcome {
    let k = s.ids.len();
    store.read(u, &mut s.u);
    store.read(v, &mut s.v);
    s.negs.resize(k * dim, 0.0);
    for (i, &n) in s.ids.iter().enumerate() {
        store.read(n, &mut s.negs[i * dim..(i + 1) * dim]);
    }
    let loss = {
        let negs: Vec<&[f64]> = s.negs.chunks(dim).collect();
        match pair_loss_into(backend, &s.u, &s.v, &negs, &mut s.ws) {
            Ok(l) => l,
            Err(GeometryError::SingularPair) => return PairOutcome::Singular,
            Err(_) => return PairOutcome::Rejected,
        }
    };
    let ok = step_row(backend, &mut s.u, &s.ws.grad_u, &mut s.dir, lr).is_ok()
        && step_row(backend, &mut s.v, &s.ws.grad_v, &mut s.dir, lr).is_ok()
        && (0..k).all(|i| {
            step_row(
                backend,
                &mut s.negs[i * dim..(i + 1) * dim],
                &s.ws.grad_neg[i * dim..(i + 1) * dim],
                &mut s.dir,
                lr,
            )
            .is_ok()
        });
    if !ok {
        return PairOutcome::Rejected;
    }
    store.write(u, &s.u);
    store.write(v, &s.v);
    for (i, &n) in s.ids.iter().enumerate() {
        store.write(n, &s.negs[i * dim..(i + 1) * dim]);
    }
    PairOutcome::Updated(loss)
}

#[derive(Default)]
struct EpochTally {
    loss: f64,
    updated: usize,
    singular: usize,
    rejected: usize,
}

impl EpochTally {
    fn record(&mut self, outcome: PairOutcome) {
        match outcome {
            PairOutcome::Updated(l) => {
                self.loss += l;
                self.updated += 1;
            }
            PairOutcome::Singular => self.singular += 1,
            PairOutcome::Rejected => self.rejected += 1,
        }
    }

    fn merge(mut self, other: EpochTally) -> EpochTally {
        self.loss += other.loss;
        self.updated += other.updated;
        self.singular += other.singular;
        self.rejected += other.rejected;
        self
    }
}

/// Trains from scratch on a generated corpus.
pub fn train(corpus: &WalkCorpus, graph: &TemporalHin, config: &TrainConfig) -> Result<TrainReport> {
    let seqs: Vec<&[usize]> = corpus.walks.iter().map(|w| w.nodes.as_slice()).collect();
    train_sequences(&seqs, graph, config, None, |_, _, _| {})
}

/// Trains on raw node sequences, optionally resuming from `warm_start`.
/// `on_epoch(epoch, matrix, mean_loss)` runs after every epoch.
pub fn train_sequences<S, F>(
    sequences: &[S],
    graph: &TemporalHin,
    config: &TrainConfig,
    warm_start: Option<EmbeddingMatrix>,
    mut on_epoch: F,
) -> Result<TrainReport>
where
    S: AsRef<[usize]> + Sync,
    F: FnMut(usize, &EmbeddingMatrix, f64),
{
    config.validate()?;
    let n = graph.node_count();
    let dim = config.dim;
    if sequences.iter().any(|s| s.as_ref().iter().any(|&v| v >= n)) {
        return Err(Error::Config("corpus references nodes outside the graph".into()));
    }
    let pairs: Vec<(u32, u32)> = cooccurrence_pairs(sequences.iter().map(AsRef::as_ref), config.window)
        .map(|(a, b)| (a as u32, b as u32))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut matrix = match warm_start {
        Some(m) => {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            if m.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.rows(),
                });
            }
            m
        }
        None => {
            let mut init_rng = rng::derive(config.seed, Stream::Train, 0);
            EmbeddingMatrix::random(n, dim, config.backend, config.init_radius, &mut init_rng)
        }
    };
    let sampler = NegativeSampler::for_graph(graph, config.negative_distribution);
    let total_steps = pairs.len() * config.epochs;
    let mut report = TrainReport {
        embeddings: matrix.clone(),
        epoch_losses: Vec::with_capacity(config.epochs),
        pairs_per_epoch: pairs.len(),
        skipped_pairs: 0,
        rejected_updates: 0,
    };

    let pool = if config.deterministic || config.threads == 0 {
        None
    } else {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?,
        )
    };

    let mut order = pairs;
    for epoch in 0..config.epochs {
        let mut epoch_rng = rng::derive(config.seed, Stream::Train, 1 + epoch as u64);
        order.shuffle(&mut epoch_rng);
        let base = epoch * order.len();
        let tally = if config.deterministic {
            let mut store = DenseRows {
                data: matrix.as_mut_slice(),
                dim,
            };
            let mut scratch = Scratch::new(dim, config.negatives);
            let mut tally = EpochTally::default();
            for (i, &(u, v)) in order.iter().enumerate() {
                let (u, v) = (u as usize, v as usize);
                scratch.ids.clear();
                sampler.sample_into(&mut epoch_rng, config.negatives, [u, v], &mut scratch.ids);
                let lr = config.learning_rate(base + i, total_steps);
                tally.record(update_pair(&mut store, config.backend, dim, u, v, lr, &mut scratch));
            }
            tally
        } else {
            let cells: Vec<AtomicU64> = matrix.as_slice().iter().map(|c| AtomicU64::new(c.to_bits())).collect();
            let shared = SharedRows { cells: &cells, dim };
            let chunk = order.len().div_ceil(rayon::current_num_threads().max(1) * 4).max(1);
            let run = || {
                order
                    .par_chunks(chunk)
                    .enumerate()
                    .map(|(c, pairs)| {
                        let mut store = shared;
                        let mut rng = rng::derive(
                            config.seed,
                            Stream::Train,
                            ((epoch as u64 + 1) << 32) | c as u64,
                        );
                        let mut scratch = Scratch::new(dim, config.negatives);
                        let mut tally = EpochTally::default();
                        for (i, &(u, v)) in pairs.iter().enumerate() {
                            let (u, v) = (u as usize, v as usize);
                            scratch.ids.clear();
                            sampler.sample_into(&mut rng, config.negatives, [u, v], &mut scratch.ids);
                            let lr = config.learning_rate(base + c * chunk + i, total_steps);
                            tally.record(update_pair(&mut store, config.backend, dim, u, v, lr, &mut scratch));
                        }
                        tally
                    })
                    .reduce(EpochTally::default, EpochTally::merge)
            };
            let tally = match &pool {
                Some(p) => p.install(run),
                None => run(),
            };
            for (dst, c) in matrix.as_mut_slice().iter_mut().zip(&cells) {
                *dst = f64::from_bits(c.load(Ordering::Relaxed));
            }
            tally
        };
        let mean = if tally.updated > 0 {
            tally.loss / tally.updated as f64
        } else {
            0.0
        };
        log::info!(
            "epoch {}: mean loss {mean:.6} over {} pairs ({} singular, {} rejected)",
            epoch + 1,
            tally.updated,
            tally.singular,
            tally.rejected
        );
        report.epoch_losses.push(mean);
        report.skipped_pairs += tally.singular;
        report.rejected_updates += tally.rejected;
        on_epoch(epoch, &matrix, mean);
    }
    report.embeddings = matrix;
    Ok(report)
}
