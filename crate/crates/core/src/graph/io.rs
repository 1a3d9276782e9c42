use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use super::{TemporalHin, Timestamp};
use crate::error::{Error, Result};

/// Field separator of an edge file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeDialect {
    /// Any run of whitespace separates fields.
    #[default]
    Whitespace,
    /// Fields separated by single tabs; ids may contain spaces.
    Tab,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub dialect: EdgeDialect,
    /// Multiplier applied to fractional timestamps before rounding. Without
    /// one, fractional timestamps are a parse error.
    pub time_scale: Option<f64>,
    pub directed: bool,
}

/// One parsed line: `src_id dst_id src_type dst_type timestamp [edge_type]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRecord {
    pub src_id: String,
    pub dst_id: String,
    pub src_type: String,
    pub dst_type: String,
    pub timestamp: Timestamp,
    pub edge_type: Option<String>,
}

fn parse_timestamp(field: &str, scale: Option<f64>) -> std::result::Result<Timestamp, String> {
    if let Ok(t) = field.parse::<i64>() {
        return Ok(t);
    }
    let value: f64 = field
        .parse()
        .map_err(|_| format!("timestamp {field:?} is not a number"))?;
    let Some(scale) = scale else {
        return Err(format!(
            "fractional timestamp {field:?} needs a configured time scale"
        ));
    };
    let scaled = (value * scale).round();
    if !scaled.is_finite() || scaled.abs() > i64::MAX as f64 {
        return Err(format!("timestamp {field:?} overflows after scaling"));
    }
    Ok(scaled as i64)
}

fn parse_line(line: &str, opts: &LoadOptions) -> std::result::Result<EdgeRecord, String> {
    let fields: Vec<&str> = match opts.dialect {
        EdgeDialect::Whitespace => line.split_whitespace().collect(),
        EdgeDialect::Tab => line.trim_end_matches(['\r', '\n']).split('\t').map(str::trim).collect(),
    };
    if fields.len() != 5 && fields.len() != 6 {
        return Err(format!("expected 5 or 6 fields, found {}", fields.len()));
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err("empty field".to_owned());
    }
    Ok(EdgeRecord {
        src_id: fields[0].to_owned(),
        dst_id: fields[1].to_owned(),
        src_type: fields[2].to_owned(),
        dst_type: fields[3].to_owned(),
        timestamp: parse_timestamp(fields[4], opts.time_scale)?,
        edge_type: fields.get(5).map(|s| (*s).to_owned()),
    })
}

/// Parses every edge line from `reader`; `source` names the input in
/// diagnostics.
pub fn parse_records<R: BufRead>(reader: R, source: &Path, opts: &LoadOptions) -> Result<Vec<EdgeRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record = parse_line(&line, opts).map_err(|msg| Error::Parse {
            path: source.to_owned(),
            line: i + 1,
            msg,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_edge_records(path: &Path, opts: &LoadOptions) -> Result<Vec<EdgeRecord>> {
    let file = File::open(path)?;
    parse_records(BufReader::new(file), path, opts)
}

/// Builds an indexed graph from an edge stream.
pub fn parse_edge_stream<R: BufRead>(reader: R, source: &Path, opts: &LoadOptions) -> Result<TemporalHin> {
    let records = parse_records(reader, source, opts)?;
    if records.is_empty() {
        return Err(Error::EmptyGraph(source.display().to_string()));
    }
    let mut graph = TemporalHin::new(opts.directed);
    let mut edges = Vec::with_capacity(records.len());
    for (record, line) in records.iter().zip(1..) {
        let edge = graph.resolve_record(record).map_err(|e| match e {
            Error::ConflictingNodeType { id, expected, found } => Error::Parse {
                path: PathBuf::from(source),
                line,
                msg: format!("node {id:?} redeclared with type {found:?} (previously {expected:?})"),
            },
            other => other,
        })?;
        edges.push(edge);
    }
    graph.extend_edges(edges)?;
    log::info!(
        "loaded {}: {} nodes, {} edges",
        source.display(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok(graph)
}

pub fn load_edge_stream(path: &Path, opts: &LoadOptions) -> Result<TemporalHin> {
    let file = File::open(path)?;
    parse_edge_stream(BufReader::new(file), path, opts)
}
