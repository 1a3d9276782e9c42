//! Hyperbolic embeddings for temporal heterogeneous networks.
//!
//! Load a timestamped edge stream with typed nodes into a
//! [`graph::TemporalHin`], generate time-respecting walks with
//! [`walker::generate_corpus`], train Poincaré-ball embeddings with
//! [`trainer::train`] and score them with the harnesses in [`eval`].
//!
//! ```
//! use chronohyp::synthetic::two_cliques;
//! use chronohyp::trainer::{train, TrainConfig};
//! use chronohyp::walker::{generate_corpus, WalkConfig};
//!
//! let graph = two_cliques(6, 3);
//! let corpus = generate_corpus(&graph, &WalkConfig::default())?;
//! let report = train(&corpus, &graph, &TrainConfig { dim: 8, ..TrainConfig::default() })?;
//! assert!(report.embeddings.is_finite());
//! # Ok::<(), chronohyp::Error>(())
//! ```

pub mod embedding;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod graph;
pub mod rng;
pub mod synthetic;
pub mod trainer;
pub mod walker;

pub use error::{Error, Result};

// Runs the guide's code blocks as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
