use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::classify::node_classification_with;
use super::*;
use crate::synthetic::{planted_partition, PlantedPartition};
use crate::trainer::TrainConfig;
use crate::walker::WalkConfig;

/// Direct pairwise count of `P(pos > neg) + ½ P(pos = neg)`.
fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut total = 0.0;
    for p in pos {
        for n in neg {
            total += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    total / (pos.len() * neg.len()) as f64
}

fn line_graph(times: &[i64]) -> TemporalHin {
    let mut g = TemporalHin::new(false);
    for i in 0..=times.len() {
        g.ensure_node(&i.to_string(), "T").unwrap();
    }
    g.extend_edges(times.iter().enumerate().map(|(i, &t)| TemporalEdge {
        src: i,
        dst: i + 1,
        timestamp: t,
        edge_type: None,
    }))
    .unwrap();
    g
}

#[test]
fn boundaries_for_quarter_split() {
    assert_eq!(snapshot_boundaries(0.0, 100.0, 4), vec![0.0, 25.0, 50.0, 75.0, 100.0]);
}

#[test]
fn boundary_edges_go_to_the_earlier_interval() {
    let g = line_graph(&[0, 10, 25, 26, 50, 99, 100]);
    let split = split_snapshots(&g, 4).unwrap();
    let times: Vec<Vec<i64>> = split
        .snapshots
        .iter()
        .map(|s| s.iter().map(|e| e.timestamp).collect())
        .collect();
    assert_eq!(times, vec![vec![0, 10, 25], vec![26, 50], vec![], vec![99, 100]]);
}

#[test]
fn twenty_timestamps_in_four_snapshots() {
    let times: Vec<i64> = (1..=20).collect();
    let split = split_snapshots(&line_graph(&times), 4).unwrap();
    let last: Vec<_> = (0..4).map(|i| split.last_timestamp(i).unwrap()).collect();
    assert_eq!(last, vec![5, 10, 15, 20]);
    assert!(split.snapshots.iter().all(|s| s.len() == 5));
}

#[test]
fn single_timestamp_lands_in_one_snapshot() {
    let split = split_snapshots(&line_graph(&[7, 7, 7]), 3).unwrap();
    assert_eq!(split.snapshots[0].len(), 3);
    assert!(split.snapshots[1].is_empty() && split.snapshots[2].is_empty());
    assert!(split_snapshots(&line_graph(&[1]), 1).is_err());
}

#[test]
fn auc_examples() {
    assert_eq!(auc_from_scores(&[0.9, 0.8], &[0.1, 0.2, 0.3]), Some(1.0));
    assert_eq!(auc_from_scores(&[0.4], &[0.4]), Some(0.5));
    assert_eq!(auc_from_scores(&[], &[0.4]), None);
}

#[test]
fn iid_scores_give_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (np, nn) = (2000, 2000);
    let pos: Vec<f64> = (0..np).map(|_| rng.sample(StandardNormal)).collect();
    let neg: Vec<f64> = (0..nn).map(|_| rng.sample(StandardNormal)).collect();
    let auc = auc_from_scores(&pos, &neg).unwrap();
    let sd = ((np + nn + 1) as f64 / (12.0 * np as f64 * nn as f64)).sqrt();
    assert!((auc - 0.5).abs() < 3.0 * sd, "{auc}");
}

proptest! {
    #[test]
    fn rank_statistic_matches_pairwise_count(
        pos in proptest::collection::vec(0i32..20, 1..30),
        neg in proptest::collection::vec(0i32..20, 1..30),
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let auc = auc_from_scores(&pos, &neg).unwrap();
        prop_assert!((auc - brute_auc(&pos, &neg)).abs() < 1e-12);

        let cubed = |s: &[f64]| s.iter().map(|x| x.powi(3) + 2.0).collect::<Vec<_>>();
        prop_assert!((auc_from_scores(&cubed(&pos), &cubed(&neg)).unwrap() - auc).abs() < 1e-12);

        let negated = |s: &[f64]| s.iter().map(|x| -x).collect::<Vec<_>>();
        let flipped = auc_from_scores(&negated(&pos), &negated(&neg)).unwrap();
        prop_assert!((auc + flipped - 1.0).abs() < 1e-12);
    }
}

#[test]
fn similarity_scores() {
    assert!((Similarity::Cosine.score(Backend::Hyperbolic, &[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-12);
    assert_eq!(Similarity::Cosine.score(Backend::Hyperbolic, &[0.0, 0.0], &[2.0, 0.0]), 0.0);
    let d = Similarity::NegDistance.score(Backend::Hyperbolic, &[0.5, 0.0], &[0.0, 0.0]);
    assert!((d + 3f64.ln()).abs() < 1e-12);
}

#[test]
fn auc_skips_missing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.txt");
    let g = line_graph(&[1, 2, 3]);
    std::fs::write(&path, "3 2 euclidean\n0\t1 0\n1\t1 0.1\n2\t-1 0\n").unwrap();
    let m = EmbeddingMatrix::load(&g, &path).unwrap();
    let out = link_prediction_auc(&m, &[(0, 1), (0, 3)], &[(0, 2)], Similarity::Cosine).unwrap();
    assert_eq!(out.auc, 1.0);
    assert_eq!(out.skipped, 1);
    assert_eq!((out.positives, out.negatives), (1, 1));
    assert!(link_prediction_auc(&m, &[(0, 3)], &[(0, 2)], Similarity::Cosine).is_err());
}

#[test]
fn negatives_avoid_edges_and_tests() {
    let g = line_graph(&[1, 2, 3, 4, 5, 6, 7, 8, 9]);
    let edges: HashSet<_> = distinct_pairs(g.edges()).into_iter().collect();
    let test = vec![(0, 5), (2, 7)];
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // 45 pairs, 9 edges, 2 test pairs: 34 available, both sampler paths
        for count in [3, 20, 34] {
            let neg = sample_negative_edges(&g, count, &mut rng, &test).unwrap();
            assert_eq!(neg.len(), count);
            let distinct: HashSet<_> = neg.iter().copied().collect();
            assert_eq!(distinct.len(), count);
            for &(u, v) in &neg {
                assert!(u < v);
                assert!(!edges.contains(&(u, v)) && !test.contains(&(u, v)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_negative_edges(&g, 0, &mut rng, &test).unwrap().is_empty());
    assert!(matches!(
        sample_negative_edges(&g, 35, &mut rng, &test),
        Err(Error::NotEnoughNonEdges { requested: 35, available: 34 })
    ));
}

#[test]
fn complete_graph_has_no_negatives() {
    let mut g = TemporalHin::new(false);
    for i in 0..4 {
        g.ensure_node(&i.to_string(), "T").unwrap();
    }
    let mut edges = Vec::new();
    for a in 0..4 {
        for b in (a + 1)..4 {
            edges.push(TemporalEdge { src: a, dst: b, timestamp: 0, edge_type: None });
        }
    }
    g.extend_edges(edges).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        sample_negative_edges(&g, 1, &mut rng, &[]),
        Err(Error::NotEnoughNonEdges { available: 0, .. })
    ));
}

#[test]
fn negative_sampler_is_uniform_over_absent_pairs() {
    let g = line_graph(&[1, 2, 3, 4, 5]);
    // 15 pairs, 5 edges: 10 absent pairs, each drawn with chance 1/10
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rounds = 20_000;
    for _ in 0..rounds {
        for p in sample_negative_edges(&g, 1, &mut rng, &[]).unwrap() {
            *counts.entry(p).or_default() += 1;
        }
    }
    assert_eq!(counts.len(), 10);
    let sd = (rounds as f64 * 0.1 * 0.9).sqrt();
    for &c in counts.values() {
        assert!((c as f64 - rounds as f64 * 0.1).abs() < 4.0 * sd);
    }
}

fn labelled_matrix(points: &[(Vec<f64>, u32)]) -> (EmbeddingMatrix, Vec<LabeledExample>) {
    let m = EmbeddingMatrix::from_rows(points.iter().map(|p| p.0.clone()).collect(), Backend::Euclidean).unwrap();
    let labels = points
        .iter()
        .enumerate()
        .map(|(node, p)| LabeledExample { node, label: p.1 })
        .collect();
    (m, labels)
}

#[test]
fn f1_hand_computed() {
    let (macro_f1, micro_f1) = f1_scores(&[0, 0, 1, 1, 2], &[0, 1, 1, 1, 0], 3);
    assert!((macro_f1 - 1.3 / 3.0).abs() < 1e-12);
    assert!((micro_f1 - 0.6).abs() < 1e-12);
}

#[test]
fn separable_clouds_are_classified_perfectly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<(Vec<f64>, u32)> = (0..200)
        .map(|i| {
            let c = (i % 2) as u32;
            let centre = if c == 0 { -0.5 } else { 0.5 };
            (vec![centre + rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)], c)
        })
        .collect();
    let (m, labels) = labelled_matrix(&points);
    let r = node_classification(&m, &labels, 0.75, &mut rng).unwrap();
    assert_eq!((r.macro_f1, r.micro_f1), (1.0, 1.0));
    assert_eq!((r.train_size, r.test_size), (150, 50));
}

#[test]
fn shuffled_labels_fall_to_majority_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points: Vec<(Vec<f64>, u32)> = (0..800)
        .map(|i| {
            let x: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            (x, u32::from(i % 20 >= 17))
        })
        .collect();
    let (m, labels) = labelled_matrix(&points);
    let r = node_classification(&m, &labels, 0.75, &mut rng).unwrap();
    let p = 0.85;
    let sd = (p * (1.0 - p) / r.test_size as f64).sqrt();
    assert!((r.micro_f1 - p).abs() < 3.0 * sd, "{}", r.micro_f1);
}

#[test]
fn classification_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, labels) = labelled_matrix(&[(vec![0.0], 0), (vec![1.0], 0)]);
    assert!(matches!(node_classification(&m, &labels, 0.75, &mut rng), Err(Error::TooFewClasses(1))));
    let (m, labels) = labelled_matrix(&[(vec![0.0], 0), (vec![1.0], 0), (vec![2.0], 0), (vec![3.0], 1)]);
    assert!(matches!(node_classification(&m, &labels, 0.25, &mut rng), Err(Error::Stratification(1))));
}

#[test]
fn classifier_loss_does_not_increase_with_small_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..5).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let y: Vec<usize> = rows
        .iter()
        .map(|r| (0..3).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap())
        .collect();
    let x: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let config = LogisticRegressionConfig {
        iterations: 200,
        learning_rate: 0.05,
        l2: 1e-4,
    };
    let (_, trace) = LogisticRegression::fit_traced(&x, &y, 3, &config);
    assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(trace[trace.len() - 1] < 0.5 * trace[0]);
    let (model, _) = LogisticRegression::fit_traced(&x, &y, 3, &LogisticRegressionConfig::default());
    let acc = x.iter().zip(&y).filter(|(r, &c)| model.predict(r) == c).count() as f64 / 300.0;
    assert!(acc > 0.9);
    // the internal entry point is the one used by the public wrapper
    let (m, labels) = labelled_matrix(&rows.iter().zip(&y).map(|(r, &c)| (r.clone(), c as u32)).collect::<Vec<_>>());
    assert!(node_classification_with(&m, &labels, 0.75, &mut rng, &config).is_ok());
}

fn small_protocol_setup() -> (TemporalHin, WalkConfig, TrainConfig) {
    let (g, _) = planted_partition(&PlantedPartition {
        nodes: 120,
        blocks: 4,
        timestamps: 8,
        edges_per_timestamp: 60,
        seed: 3,
        ..PlantedPartition::default()
    });
    let walk = WalkConfig {
        walks_per_node: 4,
        max_walk_length: 20,
        seed: 1,
        ..WalkConfig::default()
    };
    let train = TrainConfig {
        dim: 8,
        epochs: 2,
        lr_initial: 0.05,
        lr_final: 0.005,
        seed: 1,
        ..TrainConfig::default()
    };
    (g, walk, train)
}

#[test]
fn protocol_is_deterministic_and_order_independent() {
    let (g, walk, train) = small_protocol_setup();
    let opts = LinkPredictionOptions {
        snapshots: 4,
        ..LinkPredictionOptions::default()
    };
    let a = run_link_prediction_protocol(&g, &walk, &train, &opts).unwrap();
    let b = run_link_prediction_protocol(&g, &walk, &train, &LinkPredictionOptions { parallel: false, ..opts }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.snapshots.len(), 3);
    assert_eq!(a.snapshots.iter().map(|s| s.last_timestamp).collect::<Vec<_>>(), vec![Some(4), Some(6), Some(8)]);
    for s in &a.snapshots {
        assert_eq!(s.negatives, s.test_edges);
        assert!((0.0..=1.0).contains(&s.auc));
    }
    let mean = a.snapshots.iter().map(|s| s.auc).sum::<f64>() / 3.0;
    assert!((a.average - mean).abs() < 1e-15);
}
