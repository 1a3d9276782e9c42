//! Run configuration: a `key = value` file merged with command-line
//! overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use chronohyp::eval::{LinkPredictionOptions, Similarity};
use chronohyp::geometry::Backend;
use chronohyp::graph::{EdgeDialect, LoadOptions};
use chronohyp::trainer::{NegativeDistribution, TrainConfig};
use chronohyp::walker::WalkConfig;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub negatives: usize,
    pub lr: f64,
    pub lr_final: Option<f64>,
    pub epochs: usize,
    pub window: usize,
    pub euclidean: bool,
    pub disable_temporal: bool,
    pub disable_heterogeneous: bool,
    pub deterministic: bool,
    pub init_radius: Option<f64>,
    pub negative_distribution: NegativeDistribution,
    pub horizon: Option<i64>,
    pub reverse_walks: Option<usize>,
    pub snapshots: usize,
    pub similarity: Similarity,
    pub train_fraction: f64,
    pub directed: bool,
    pub tab_separated: bool,
    pub time_scale: Option<f64>,
    pub index: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let walk = WalkConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            seed: 0,
            threads: 0,
            dim: train.dim,
            alpha: walk.alpha,
            beta: walk.beta,
            walks_per_node: walk.walks_per_node,
            walk_length: walk.max_walk_length,
            negatives: train.negatives,
            lr: train.lr_initial,
            lr_final: None,
            epochs: train.epochs,
            window: train.window,
            euclidean: false,
            disable_temporal: false,
            disable_heterogeneous: false,
            deterministic: true,
            init_radius: None,
            negative_distribution: NegativeDistribution::Uniform,
            horizon: None,
            reverse_walks: None,
            snapshots: 4,
            similarity: Similarity::Cosine,
            train_fraction: 0.75,
            directed: false,
            tab_separated: false,
            time_scale: None,
            index: None,
            corpus: None,
            embeddings: None,
            report: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("{key}: cannot parse {value:?}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("{key}: expected a boolean, got {value:?}"),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "walks_per_node" => self.walks_per_node = parse(key, value)?,
            "walk_length" => self.walk_length = parse(key, value)?,
            "negatives" => self.negatives = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "lr_final" => self.lr_final = Some(parse(key, value)?),
            "epochs" => self.epochs = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "euclidean" => self.euclidean = parse_bool(key, value)?,
            "disable_temporal" => self.disable_temporal = parse_bool(key, value)?,
            "disable_heterogeneous" => self.disable_heterogeneous = parse_bool(key, value)?,
            "deterministic" => self.deterministic = parse_bool(key, value)?,
            "init_radius" => self.init_radius = Some(parse(key, value)?),
            "negative_distribution" => {
                self.negative_distribution = NegativeDistribution::parse(value)
                    .ok_or_else(|| anyhow!("{key}: expected uniform or degree, got {value:?}"))?
            }
            "horizon" => self.horizon = Some(parse(key, value)?),
            "reverse_walks" => self.reverse_walks = Some(parse(key, value)?),
            "snapshots" => self.snapshots = parse(key, value)?,
            "similarity" => {
                self.similarity = Similarity::parse(value)
                    .ok_or_else(|| anyhow!("{key}: expected cosine or neg-distance, got {value:?}"))?
            }
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "directed" => self.directed = parse_bool(key, value)?,
            "tab_separated" => self.tab_separated = parse_bool(key, value)?,
            "time_scale" => self.time_scale = Some(parse(key, value)?),
            "index" => self.index = Some(PathBuf::from(value)),
            "corpus" => self.corpus = Some(PathBuf::from(value)),
            "embeddings" => self.embeddings = Some(PathBuf::from(value)),
            "report" => self.report = Some(PathBuf::from(value)),
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    pub fn parse_str(text: &str, source: &Path) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ctx = || format!("{}:{}", source.display(), i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("expected `key = value`"))
                .with_context(ctx)?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_owned(), i + 1) {
                return Err(anyhow!("{key:?} already set on line {first}")).with_context(ctx);
            }
            config.set(key, value).with_context(ctx)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.euclidean && self.init_radius.is_some() {
            bail!("init_radius sets the initial Poincaré ball and cannot be combined with euclidean = true");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1)");
        }
        if self.snapshots < 2 {
            bail!("snapshots must be at least 2");
        }
        if matches!(self.time_scale, Some(s) if !(s > 0.0 && s.is_finite())) {
            bail!("time_scale must be positive");
        }
        self.walk_config().validate()?;
        self.train_config().validate()?;
        Ok(())
    }

    pub fn backend(&self) -> Backend {
        if self.euclidean {
            Backend::Euclidean
        } else {
            Backend::Hyperbolic
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            alpha: self.alpha,
            beta: self.beta,
            walks_per_node: self.walks_per_node,
            max_walk_length: self.walk_length,
            heterogeneous: !self.disable_heterogeneous,
            temporal: !self.disable_temporal,
            seed: self.seed,
            horizon: self.horizon,
            reverse_walks: self.reverse_walks,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let defaults = TrainConfig::default();
        TrainConfig {
            dim: self.dim,
            negatives: self.negatives,
            window: self.window,
            epochs: self.epochs,
            lr_initial: self.lr,
            lr_final: self.lr_final.unwrap_or(self.lr / 10.0),
            seed: self.seed,
            deterministic: self.deterministic,
            threads: self.threads,
            backend: self.backend(),
            negative_distribution: self.negative_distribution,
            init_radius: self.init_radius.unwrap_or(defaults.init_radius),
        }
    }

    pub fn link_prediction_options(&self) -> LinkPredictionOptions {
        LinkPredictionOptions {
            snapshots: self.snapshots,
            similarity: self.similarity,
            seed: self.seed,
            parallel: true,
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            dialect: if self.tab_separated {
                EdgeDialect::Tab
            } else {
                EdgeDialect::Whitespace
            },
            time_scale: self.time_scale,
            directed: self.directed,
        }
    }

    /// Every setting that can change an artifact, one `key=value` per line
    /// in key order. Paths and the worker count are left out.
    pub fn canonical(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "default".to_owned(), ToString::to_string)
        }
        let entries: BTreeMap<&str, String> = BTreeMap::from([
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("dim", self.dim.to_string()),
            ("directed", self.directed.to_string()),
            ("disable_heterogeneous", self.disable_heterogeneous.to_string()),
            ("disable_temporal", self.disable_temporal.to_string()),
            ("epochs", self.epochs.to_string()),
            ("euclidean", self.euclidean.to_string()),
            ("horizon", opt(&self.horizon)),
            ("init_radius", opt(&self.init_radius)),
            ("lr", self.lr.to_string()),
            ("lr_final", opt(&self.lr_final)),
            ("negative_distribution", self.negative_distribution.name().to_owned()),
            ("negatives", self.negatives.to_string()),
            ("reverse_walks", opt(&self.reverse_walks)),
            ("seed", self.seed.to_string()),
            ("similarity", self.similarity.name().to_owned()),
            ("snapshots", self.snapshots.to_string()),
            ("tab_separated", self.tab_separated.to_string()),
            ("time_scale", opt(&self.time_scale)),
            ("train_fraction", self.train_fraction.to_string()),
            ("walk_length", self.walk_length.to_string()),
            ("walks_per_node", self.walks_per_node.to_string()),
            ("window", self.window.to_string()),
        ]);
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Provenance line written into every artifact.
    pub fn provenance(&self) -> String {
        format!("chronohyp seed={} config={}", self.seed, self.hash())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let c = RunConfig::parse_str("# run\nseed = 9\n\ndim=16\neuclidean = true\nsimilarity = neg-distance\n", Path::new("c"))
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.dim, 16);
        assert!(c.euclidean);
        assert_eq!(c.similarity, Similarity::NegDistance);
        assert_eq!(c.backend(), Backend::Euclidean);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let err = RunConfig::parse_str("seed = 1\nsede = 2\n", Path::new("c")).unwrap_err();
        assert!(format!("{err:#}").contains("c:2"));
        assert!(format!("{err:#}").contains("unknown configuration key"));
        assert!(RunConfig::parse_str("dim = 2\ndim = 3\n", Path::new("c")).is_err());
        assert!(RunConfig::parse_str("dim 2\n", Path::new("c")).is_err());
        assert!(RunConfig::parse_str("alpha = high\n", Path::new("c")).is_err());
    }

    #[test]
    fn cross_field_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.euclidean = true;
        assert!(c.validate().is_ok());
        c.init_radius = Some(0.01);
        assert!(c.validate().is_err());
        let bad_alpha = RunConfig {
            alpha: 1.5,
            ..RunConfig::default()
        };
        assert!(bad_alpha.validate().is_err());
    }

    #[test]
    fn derived_configs_follow_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.walk_config(), WalkConfig::default());
        assert_eq!(c.train_config(), TrainConfig::default());
    }

    #[test]
    fn hash_tracks_settings_but_not_paths_or_threads() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.threads = 8;
        b.report = Some("r.jsonl".into());
        assert_eq!(a.hash(), b.hash());
        b.beta = 0.4;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
