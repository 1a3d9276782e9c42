//! Corpus files.
//!
//! The corpus itself is one walk per line, node ids separated by single
//! spaces. The `.times` sidecar carries what incremental updates need: a
//! `# epoch=N` line, then per walk `origin_id epoch<TAB>t1 t2 ...`.
//! Lines starting with `#` are comments in both files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Walk, WalkCorpus, WalkOrigin};
use crate::error::{Error, Result};
use crate::graph::TemporalHin;

pub fn times_path(corpus: &Path) -> PathBuf {
    let mut s = corpus.as_os_str().to_owned();
    s.push(".times");
    PathBuf::from(s)
}

/// Writes the corpus and its sidecar. `comment`, when given, becomes a
/// leading `# ...` line in both files.
pub fn write_corpus(corpus: &WalkCorpus, graph: &TemporalHin, path: &Path, comment: Option<&str>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut t = BufWriter::new(File::create(times_path(path))?);
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
        writeln!(t, "# {c}")?;
    }
    writeln!(t, "# epoch={}", corpus.epoch)?;
    for walk in &corpus.walks {
        let mut first = true;
        for &v in &walk.nodes {
            if !first {
                w.write_all(b" ")?;
            }
            w.write_all(graph.node(v).id.as_bytes())?;
            first = false;
        }
        w.write_all(b"\n")?;

        write!(t, "{} {}\t", graph.node(walk.origin.source).id, walk.origin.epoch)?;
        let times: Vec<String> = walk.times.iter().map(|x| x.to_string()).collect();
        writeln!(t, "{}", times.join(" "))?;
    }
    w.flush()?;
    t.flush()?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

/// Node-index sequences of a corpus file; no sidecar needed.
pub fn read_sequences(path: &Path, graph: &TemporalHin) -> Result<Vec<Vec<usize>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let walk = trimmed
            .split_whitespace()
            .map(|id| {
                graph
                    .index_of(id)
                    .ok_or_else(|| parse_err(path, i + 1, format!("unknown node id {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(walk);
    }
    Ok(out)
}

/// Full corpus including hop times and provenance from the sidecar.
pub fn read_corpus(path: &Path, graph: &TemporalHin) -> Result<WalkCorpus> {
    let sequences = read_sequences(path, graph)?;
    let tpath = times_path(path);
    let reader = BufReader::new(File::open(&tpath)?);
    let mut epoch = 0;
    let mut walks = Vec::with_capacity(sequences.len());
    let mut seqs = sequences.into_iter();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(e) = rest.trim().strip_prefix("epoch=") {
                epoch = e.parse().map_err(|_| parse_err(&tpath, i + 1, "bad epoch"))?;
            }
            continue;
        }
        let (origin, times) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(&tpath, i + 1, "missing tab"))?;
        let mut parts = origin.split_whitespace();
        let (Some(src), Some(ep), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(&tpath, i + 1, "origin must be `node_id epoch`"));
        };
        let source = graph
            .index_of(src)
            .ok_or_else(|| parse_err(&tpath, i + 1, format!("unknown node id {src:?}")))?;
        let origin_epoch = ep.parse().map_err(|_| parse_err(&tpath, i + 1, "bad epoch"))?;
        let times = times
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(&tpath, i + 1, "bad timestamp")))
            .collect::<Result<Vec<i64>>>()?;
        let nodes = seqs
            .next()
            .ok_or_else(|| parse_err(&tpath, i + 1, "more time rows than walks"))?;
        if times.len() + 1 != nodes.len() {
            return Err(parse_err(&tpath, i + 1, "hop count does not match walk length"));
        }
        walks.push(Walk {
            nodes,
            times,
            origin: WalkOrigin {
                source,
                epoch: origin_epoch,
            },
        });
    }
    if seqs.next().is_some() {
        return Err(parse_err(&tpath, 0, "fewer time rows than walks"));
    }
    Ok(WalkCorpus { walks, epoch })
}
