use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::TemporalHin;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledExample {
    pub node: usize,
    pub label: u32,
}

/// One example per node, labelled by node type.
pub fn node_type_labels(graph: &TemporalHin) -> Vec<LabeledExample> {
    (0..graph.node_count())
        .map(|node| LabeledExample {
            node,
            label: graph.node_type(node).0,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticRegressionConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Weight penalty `l2 / 2 · ‖W‖²`; biases are not penalised.
    pub l2: f64,
}

impl Default for LogisticRegressionConfig {
    fn default() -> Self {
        LogisticRegressionConfig {
            iterations: 500,
            learning_rate: 0.5,
            l2: 1e-4,
        }
    }
}

/// Multinomial logistic regression on standardised features, fitted by
/// full-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    classes: usize,
    dim: usize,
    /// `classes × (dim + 1)`, bias last.
    weights: Vec<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    l2: f64,
}

impl LogisticRegression {
    pub fn fit(x: &[&[f64]], y: &[usize], classes: usize, config: &LogisticRegressionConfig) -> Self {
        Self::fit_traced(x, y, classes, config).0
    }

    /// Also returns the training loss before every iteration and after the
    /// last one.
    pub fn fit_traced(
        x: &[&[f64]],
        y: &[usize],
        classes: usize,
        config: &LogisticRegressionConfig,
    ) -> (Self, Vec<f64>) {
        let dim = x.first().map_or(0, |r| r.len());
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in x {
            for (m, v) in mean.iter_mut().zip(*row) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; dim];
        for row in x {
            for j in 0..dim {
                scale[j] += (row[j] - mean[j]).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let mut model = LogisticRegression {
            classes,
            dim,
            weights: vec![0.0; classes * (dim + 1)],
            mean,
            scale,
            l2: config.l2,
        };
        let features: Vec<Vec<f64>> = x.iter().map(|r| model.standardise(r)).collect();
        let mut trace = Vec::with_capacity(config.iterations + 1);
        let mut grad = vec![0.0; model.weights.len()];
        for _ in 0..config.iterations {
            trace.push(model.loss_and_gradient(&features, y, &mut grad));
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
        trace.push(model.loss_and_gradient(&features, y, &mut grad));
        (model, trace)
    }

    fn standardise(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    fn probabilities(&self, z: &[f64], out: &mut [f64]) {
        let w = self.dim + 1;
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.weights[c * w..(c + 1) * w];
            *o = row[self.dim] + row[..self.dim].iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
    }

    /// Mean cross-entropy plus penalty over standardised rows.
    fn loss_and_gradient(&self, z: &[Vec<f64>], y: &[usize], grad: &mut [f64]) -> f64 {
        let w = self.dim + 1;
        let n = z.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut p = vec![0.0; self.classes];
        let mut loss = 0.0;
        for (row, &label) in z.iter().zip(y) {
            self.probabilities(row, &mut p);
            loss -= p[label].max(1e-300).ln();
            for c in 0..self.classes {
                let err = (p[c] - f64::from(c == label)) / n;
                let g = &mut grad[c * w..(c + 1) * w];
                for j in 0..self.dim {
                    g[j] += err * row[j];
                }
                g[self.dim] += err;
            }
        }
        let mut penalty = 0.0;
        for c in 0..self.classes {
            for j in 0..self.dim {
                let k = c * w + j;
                penalty += self.weights[k] * self.weights[k];
                grad[k] += self.l2 * self.weights[k];
            }
        }
        loss / n + 0.5 * self.l2 * penalty
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut p = vec![0.0; self.classes];
        self.probabilities(&self.standardise(row), &mut p);
        p.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(c, _)| c)
    }
}

/// Macro- and micro-averaged F1. The macro average runs over classes that
/// occur in `truth` or `predicted`.
pub fn f1_scores(truth: &[usize], predicted: &[usize], classes: usize) -> (f64, f64) {
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fneg: usize| {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let present: Vec<usize> = (0..classes).filter(|&c| tp[c] + fp[c] + fneg[c] > 0).collect();
    let macro_f1 = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|&c| f1(tp[c], fp[c], fneg[c])).sum::<f64>() / present.len() as f64
    };
    let micro_f1 = f1(tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    (macro_f1, micro_f1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub classes: usize,
}

/// Stratified split with `train_fraction` of every class used for
/// training, then F1 of the fitted classifier on the remainder. Examples
/// whose node has no embedding are dropped.
pub fn node_classification<R: Rng + ?Sized>(
    embeddings: &EmbeddingMatrix,
    labels: &[LabeledExample],
    train_fraction: f64,
    rng: &mut R,
) -> Result<ClassificationReport> {
    node_classification_with(embeddings, labels, train_fraction, rng, &LogisticRegressionConfig::default())
}

pub(crate) fn node_classification_with<R: Rng + ?Sized>(
    embeddings: &EmbeddingMatrix,
    labels: &[LabeledExample],
    train_fraction: f64,
    rng: &mut R,
    config: &LogisticRegressionConfig,
) -> Result<ClassificationReport> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for ex in labels {
        if embeddings.get(ex.node).is_some() {
            by_class.entry(ex.label).or_default().push(ex.node);
        }
    }
    if by_class.len() < 2 {
        return Err(Error::TooFewClasses(by_class.len()));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, (&label, members)) in by_class.iter_mut().enumerate() {
        members.shuffle(rng);
        let n_train = ((members.len() as f64 * train_fraction).round() as usize).min(members.len());
        if n_train == 0 {
            return Err(Error::Stratification(label));
        }
        train.extend(members[..n_train].iter().map(|&v| (v, class)));
        test.extend(members[n_train..].iter().map(|&v| (v, class)));
    }
    if test.is_empty() {
        return Err(Error::Evaluation("held-out split is empty".into()));
    }
    let classes = by_class.len();
    let x: Vec<&[f64]> = train.iter().map(|&(v, _)| embeddings.row(v)).collect();
    let y: Vec<usize> = train.iter().map(|&(_, c)| c).collect();
    let model = LogisticRegression::fit(&x, &y, classes, config);
    let truth: Vec<usize> = test.iter().map(|&(_, c)| c).collect();
    let predicted: Vec<usize> = test.iter().map(|&(v, _)| model.predict(embeddings.row(v))).collect();
    let (macro_f1, micro_f1) = f1_scores(&truth, &predicted, classes);
    Ok(ClassificationReport {
        macro_f1,
        micro_f1,
        train_size: train.len(),
        test_size: test.len(),
        classes,
    })
}
