//! Node embedding matrix and its text format.
//!
//! The file starts with a `|V| d backend` header line, optionally followed by
//! `#` comment lines, then one `node_id<TAB>v1 v2 ... vd` line per node with
//! nine significant digits per coordinate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{sq_norm, Backend};
use crate::graph::TemporalHin;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
    backend: Backend,
    /// Rows that were absent from a loaded file.
    missing: Option<Vec<bool>>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize, backend: Backend) -> Self {
        EmbeddingMatrix {
            data: vec![0.0; rows * dim],
            rows,
            dim,
            backend,
            missing: None,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, backend: Backend) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(EmbeddingMatrix {
            data,
            rows: rows.len(),
            dim,
            backend,
            missing: None,
        })
    }

    /// Hyperbolic rows are uniform in the ball of radius `radius`;
    /// Euclidean rows are `N(0, 0.1²)` per coordinate.
    pub fn random<R: Rng + ?Sized>(rows: usize, dim: usize, backend: Backend, radius: f64, rng: &mut R) -> Self {
        let mut m = EmbeddingMatrix::zeros(rows, dim, backend);
        match backend {
            Backend::Hyperbolic => {
                for row in m.data.chunks_mut(dim.max(1)) {
                    for c in row.iter_mut() {
                        *c = StandardNormal.sample(rng);
                    }
                    let norm = sq_norm(row).sqrt();
                    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
                    let s = if norm > 0.0 { r / norm } else { 0.0 };
                    row.iter_mut().for_each(|c| *c *= s);
                }
            }
            Backend::Euclidean => {
                let normal = Normal::new(0.0, 0.1).unwrap();
                m.data.iter_mut().for_each(|c| *c = normal.sample(rng));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `None` when `i` is out of range or was absent from a loaded file.
    pub fn get(&self, i: usize) -> Option<&[f64]> {
        if i >= self.rows || self.missing.as_ref().is_some_and(|m| m[i]) {
            return None;
        }
        Some(self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.is_finite())
    }

    /// Largest row norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.rows).map(|i| sq_norm(self.row(i)).sqrt()).fold(0.0, f64::max)
    }

    /// Writes the matrix with row labels taken from `graph`.
    pub fn save(&self, graph: &TemporalHin, path: &Path, comment: Option<&str>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{} {} {}", self.rows, self.dim, self.backend.name())?;
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        for i in 0..self.rows {
            w.write_all(graph.node(i).id.as_bytes())?;
            w.write_all(b"\t")?;
            for (j, c) in self.row(i).iter().enumerate() {
                if j > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{c:.8e}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`save`](Self::save), placing each row at its
    /// node's index in `graph`. Graph nodes without a row are marked missing;
    /// rows for unknown ids are ignored.
    pub fn load(graph: &TemporalHin, path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines().enumerate();
        let perr = |line: usize, msg: &str| Error::Parse {
            path: path.to_owned(),
            line,
            msg: msg.to_owned(),
        };
        let (_, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [_, dim, backend] = fields[..] else {
            return Err(perr(1, "header must be `rows dim backend`"));
        };
        let dim: usize = dim.parse().map_err(|_| perr(1, "bad dimension"))?;
        let backend = Backend::parse(backend).ok_or_else(|| perr(1, "unknown backend"))?;

        let mut m = EmbeddingMatrix::zeros(graph.node_count(), dim, backend);
        let mut missing = vec![true; graph.node_count()];
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, coords) = line.split_once('\t').ok_or_else(|| perr(i + 1, "missing tab"))?;
            let values = coords
                .split_whitespace()
                .map(|c| c.parse::<f64>().map_err(|_| perr(i + 1, "bad coordinate")))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: values.len(),
                });
            }
            if let Some(idx) = graph.index_of(id) {
                m.row_mut(idx).copy_from_slice(&values);
                missing[idx] = false;
            }
        }
        if missing.iter().any(|&b| b) {
            m.missing = Some(missing);
        }
        Ok(m)
    }
}
