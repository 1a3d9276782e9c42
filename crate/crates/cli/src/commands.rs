use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chronohyp::embedding::EmbeddingMatrix;
use chronohyp::eval::{node_classification, node_type_labels, run_link_prediction_protocol};
use chronohyp::graph::{load_edge_stream, load_index, read_edge_records, save_index, TemporalHin};
use chronohyp::rng::{self, Stream};
use chronohyp::trainer::train_sequences;
use chronohyp::walker::{generate_corpus, read_corpus, read_sequences, update_corpus, write_corpus, WalkViolation};
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{table, write_records, Record};

fn required(arg: Option<&Path>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    arg.map(Path::to_path_buf)
        .or_else(|| fallback.clone())
        .with_context(|| format!("no {what} given (pass --{what} or set `{what}` in the config file)"))
}

fn open_index(arg: Option<&Path>, config: &RunConfig) -> Result<(PathBuf, TemporalHin)> {
    let prefix = required(arg, &config.index, "index")?;
    let graph = load_index(&prefix).with_context(|| format!("loading index {}", prefix.display()))?;
    Ok((prefix, graph))
}

pub fn ingest(config: &RunConfig, edges: &Path, out: &Path) -> Result<String> {
    let graph = load_edge_stream(edges, &config.load_options())?;
    save_index(&graph, out, Some(&config.provenance()))?;
    Ok(format!(
        "{} nodes, {} edges, {} node types, {} timestamps\nindex written to {}\n",
        graph.node_count(),
        graph.edge_count(),
        graph.node_type_count(),
        graph.distinct_timestamp_count(),
        out.display()
    ))
}

pub fn walk(config: &RunConfig, index: Option<&Path>, out: Option<&Path>) -> Result<String> {
    let (_, graph) = open_index(index, config)?;
    let out = required(out, &config.corpus, "corpus")?;
    let walk_config = config.walk_config();
    let corpus = generate_corpus(&graph, &walk_config)?;
    write_corpus(&corpus, &graph, &out, Some(&config.provenance()))?;
    let mut s = format!(
        "{} walks, {} tokens, at most {} per node over {} nodes\ncorpus written to {}\n",
        corpus.len(),
        corpus.token_count(),
        walk_config.walks_per_node,
        graph.node_count(),
        out.display()
    );
    if !walk_config.temporal {
        let violations = corpus
            .walks
            .iter()
            .filter(|w| matches!(w.check(&graph, walk_config.max_walk_length), Err(WalkViolation::TimeOrder { .. })))
            .count();
        let _ = writeln!(
            s,
            "temporal constraint disabled: hops pick uniformly among later-or-equal edges; {violations} walks out of time order"
        );
    }
    if !walk_config.heterogeneous {
        s.push_str("type constraint disabled: hops ignore node types\n");
    }
    Ok(s)
}

pub struct TrainArgs<'a> {
    pub index: Option<&'a Path>,
    pub corpus: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub warm_start: Option<&'a Path>,
    pub emit_corpus: Option<&'a Path>,
}

fn train_embeddings(
    config: &RunConfig,
    graph: &TemporalHin,
    corpus: Option<&Path>,
    emit_corpus: Option<&Path>,
    warm_start: Option<EmbeddingMatrix>,
) -> Result<(EmbeddingMatrix, String)> {
    let sequences = match corpus {
        Some(path) => read_sequences(path, graph).with_context(|| format!("reading corpus {}", path.display()))?,
        None => {
            let corpus = generate_corpus(graph, &config.walk_config())?;
            if let Some(path) = emit_corpus {
                write_corpus(&corpus, graph, path, Some(&config.provenance()))?;
            }
            corpus.walks.into_iter().map(|w| w.nodes).collect()
        }
    };
    let report = train_sequences(&sequences, graph, &config.train_config(), warm_start, |epoch, _, loss| {
        log::info!("epoch {} done, mean loss {loss:.6}", epoch + 1)
    })?;
    let losses: Vec<String> = report.epoch_losses.iter().map(|l| format!("{l:.6}")).collect();
    let mut s = format!(
        "{} sequences, {} pairs per epoch\nmean loss per epoch: {}\n",
        sequences.len(),
        report.pairs_per_epoch,
        losses.join(" ")
    );
    if report.skipped_pairs + report.rejected_updates > 0 {
        let _ = writeln!(
            s,
            "skipped {} coincident pairs, rejected {} non-finite updates",
            report.skipped_pairs, report.rejected_updates
        );
    }
    Ok((report.embeddings, s))
}

pub fn train(config: &RunConfig, args: TrainArgs<'_>) -> Result<String> {
    let (_, graph) = open_index(args.index, config)?;
    let out = required(args.out, &config.embeddings, "embeddings")?;
    let warm = match args.warm_start {
        Some(path) => {
            let m = EmbeddingMatrix::load(&graph, path).with_context(|| format!("loading {}", path.display()))?;
            if m.backend() != config.backend() {
                bail!(
                    "warm start {} holds {} embeddings but the run uses {}",
                    path.display(),
                    m.backend().name(),
                    config.backend().name()
                );
            }
            if (0..graph.node_count()).any(|v| m.get(v).is_none()) {
                bail!("warm start {} lacks rows for some nodes", path.display());
            }
            Some(m)
        }
        None => None,
    };
    let corpus = args.corpus.map(Path::to_path_buf).or_else(|| config.corpus.clone());
    let (m, mut s) = train_embeddings(config, &graph, corpus.as_deref(), args.emit_corpus, warm)?;
    m.save(&graph, &out, Some(&config.provenance()))?;
    let _ = writeln!(
        s,
        "{} x {} {} embeddings written to {}",
        m.rows(),
        m.dim(),
        m.backend().name(),
        out.display()
    );
    Ok(s)
}

pub struct UpdateArgs<'a> {
    pub index: Option<&'a Path>,
    pub corpus: Option<&'a Path>,
    pub edges: &'a Path,
    pub out_corpus: Option<&'a Path>,
    pub out_index: Option<&'a Path>,
}

pub fn update(config: &RunConfig, args: UpdateArgs<'_>) -> Result<String> {
    let (prefix, mut graph) = open_index(args.index, config)?;
    let corpus_path = required(args.corpus, &config.corpus, "corpus")?;
    let mut corpus = read_corpus(&corpus_path, &graph).with_context(|| format!("reading {}", corpus_path.display()))?;
    let records = read_edge_records(args.edges, &config.load_options())?;
    let mut edges = Vec::with_capacity(records.len());
    for r in &records {
        edges.push(graph.resolve_record(r)?);
    }
    let summary = update_corpus(&mut graph, &mut corpus, &edges, &config.walk_config())
        .with_context(|| format!("applying {}", args.edges.display()))?;
    let out_corpus = args.out_corpus.map_or(corpus_path, Path::to_path_buf);
    let out_index = args.out_index.map_or(prefix, Path::to_path_buf);
    write_corpus(&corpus, &graph, &out_corpus, Some(&config.provenance()))?;
    save_index(&graph, &out_index, Some(&config.provenance()))?;
    let mut s = format!(
        "{} walks modified (preserved {}, truncated {}, removed {}, continued {}, reversed {})\n",
        summary.modified(),
        summary.preserved,
        summary.truncated,
        summary.removed,
        summary.continued,
        summary.reversed
    );
    if summary.new_edges > 0 {
        let _ = writeln!(
            s,
            "{} new edges, {} involved nodes, horizon {}, stale below {}",
            summary.new_edges, summary.involved_nodes, summary.horizon, summary.threshold
        );
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Task {
    /// Temporal link prediction over time snapshots.
    Lp,
    /// Node-type classification.
    Nc,
}

pub struct EvalArgs<'a> {
    pub index: Option<&'a Path>,
    pub task: Task,
    pub embeddings: Option<&'a Path>,
    pub report: Option<&'a Path>,
}

pub fn eval(config: &RunConfig, args: EvalArgs<'_>) -> Result<String> {
    let (_, graph) = open_index(args.index, config)?;
    let record = |task, split: String, metric, value, note: Option<String>| Record {
        task,
        split,
        metric,
        value,
        seed: config.seed,
        config_hash: config.hash(),
        note,
    };
    let mut records = Vec::new();
    let mut s = String::new();
    match args.task {
        Task::Lp => {
            if args.embeddings.is_some() {
                log::warn!("link prediction retrains per snapshot; --embeddings is ignored");
            }
            let report = run_link_prediction_protocol(
                &graph,
                &config.walk_config(),
                &config.train_config(),
                &config.link_prediction_options(),
            )?;
            records.push(record(
                "lp",
                "protocol".into(),
                "snapshots",
                config.snapshots as f64,
                Some("test edges deduplicated as unordered pairs; one uniform non-edge per test pair".into()),
            ));
            let mut header = vec!["Timestamp".to_owned()];
            let mut row = vec!["AUC".to_owned()];
            for r in &report.snapshots {
                let label = r.last_timestamp.map_or_else(|| "-".into(), |t| t.to_string());
                let split = format!("snapshot-{}", r.snapshot + 1);
                let note = Some(format!("last timestamp {label}"));
                records.push(record("lp", split.clone(), "auc", r.auc, note));
                records.push(record("lp", split.clone(), "test_pairs", r.test_edges as f64, None));
                records.push(record("lp", split, "negatives", r.negatives as f64, None));
                header.push(label);
                row.push(format!("{:.4}", r.auc));
            }
            header.push("Avg.".into());
            row.push(format!("{:.4}", report.average));
            records.push(record("lp", "avg".into(), "auc", report.average, None));
            s.push_str(&table(&[header, row]));
        }
        Task::Nc => {
            let embeddings = match args.embeddings.map(Path::to_path_buf).or_else(|| config.embeddings.clone()) {
                Some(path) => EmbeddingMatrix::load(&graph, &path).with_context(|| format!("loading {}", path.display()))?,
                None => train_embeddings(config, &graph, None, None, None)?.0,
            };
            let mut rng = rng::derive(config.seed, Stream::Eval, 0);
            let r = node_classification(&embeddings, &node_type_labels(&graph), config.train_fraction, &mut rng)?;
            let split = format!("{:.0}/{:.0}", config.train_fraction * 100.0, (1.0 - config.train_fraction) * 100.0);
            records.push(record("nc", split.clone(), "macro_f1", r.macro_f1, None));
            records.push(record("nc", split, "micro_f1", r.micro_f1, None));
            s.push_str(&table(&[
                vec!["Macro-f1".into(), "Micro-f1".into()],
                vec![format!("{:.4}", r.macro_f1), format!("{:.4}", r.micro_f1)],
            ]));
        }
    }
    if let Some(path) = args.report.map(Path::to_path_buf).or_else(|| config.report.clone()) {
        write_records(&path, &records)?;
        let _ = writeln!(s, "report written to {}", path.display());
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    /// `id<TAB>type<TAB>v1 v2 ...` after a provenance comment.
    Tsv,
    /// A single JSON document.
    Json,
}

#[derive(Serialize)]
struct JsonExport<'a> {
    provenance: String,
    seed: u64,
    config_hash: String,
    backend: &'static str,
    dim: usize,
    nodes: Vec<JsonNode<'a>>,
}

#[derive(Serialize)]
struct JsonNode<'a> {
    id: &'a str,
    #[serde(rename = "type")]
    node_type: &'a str,
    vector: &'a [f64],
}

pub fn export(
    config: &RunConfig,
    index: Option<&Path>,
    embeddings: Option<&Path>,
    out: &Path,
    format: ExportFormat,
) -> Result<String> {
    let (_, graph) = open_index(index, config)?;
    let path = required(embeddings, &config.embeddings, "embeddings")?;
    let m = EmbeddingMatrix::load(&graph, &path).with_context(|| format!("loading {}", path.display()))?;
    let present: Vec<usize> = (0..graph.node_count()).filter(|&v| m.get(v).is_some()).collect();
    let text = match format {
        ExportFormat::Tsv => {
            let mut t = format!("# {}\n", config.provenance());
            for &v in &present {
                let node = graph.node(v);
                let coords: Vec<String> = m.row(v).iter().map(|c| format!("{c:.8e}")).collect();
                let _ = writeln!(t, "{}\t{}\t{}", node.id, graph.node_type_name(node.type_label), coords.join(" "));
            }
            t
        }
        ExportFormat::Json => {
            let doc = JsonExport {
                provenance: config.provenance(),
                seed: config.seed,
                config_hash: config.hash(),
                backend: m.backend().name(),
                dim: m.dim(),
                nodes: present
                    .iter()
                    .map(|&v| {
                        let node = graph.node(v);
                        JsonNode {
                            id: &node.id,
                            node_type: graph.node_type_name(node.type_label),
                            vector: m.row(v),
                        }
                    })
                    .collect(),
            };
            serde_json::to_string(&doc)? + "\n"
        }
    };
    std::fs::write(out, text)?;
    Ok(format!("{} rows exported to {}\n", present.len(), out.display()))
}
