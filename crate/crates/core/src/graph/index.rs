//! On-disk graph cache.
//!
//! `<prefix>.idx` is a little-endian binary dump of a free-form note, the
//! node table and the edge list in insertion order; `<prefix>.nodes.tsv`
//! holds the `node_id<TAB>index<TAB>type` mapping for external tools, after
//! the note as a `#` line. Adjacency is
//! rebuilt on load with a stable sort, which reproduces the original order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{TemporalEdge, TemporalHin};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CHXHIN01";
const NO_EDGE_TYPE: u32 = u32::MAX;

pub fn binary_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, ".idx")
}

pub fn mapping_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, ".nodes.tsv")
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::CorruptIndex(format!("truncated: {e}")))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::CorruptIndex(format!("truncated: {e}")))?;
        String::from_utf8(buf).map_err(|_| Error::CorruptIndex("invalid UTF-8".into()))
    }
}

pub fn save_index(graph: &TemporalHin, prefix: &Path, note: Option<&str>) -> Result<()> {
    let mut w = BufWriter::new(File::create(binary_path(prefix))?);
    w.write_all(MAGIC)?;
    w.write_all(&[graph.is_directed() as u8])?;
    write_str(&mut w, note.unwrap_or(""))?;
    w.write_all(&(graph.node_types.len() as u32).to_le_bytes())?;
    for name in &graph.node_types {
        write_str(&mut w, name)?;
    }
    w.write_all(&(graph.edge_types.len() as u32).to_le_bytes())?;
    for name in &graph.edge_types {
        write_str(&mut w, name)?;
    }
    w.write_all(&(graph.nodes.len() as u64).to_le_bytes())?;
    for node in &graph.nodes {
        write_str(&mut w, &node.id)?;
        w.write_all(&node.type_label.0.to_le_bytes())?;
    }
    w.write_all(&(graph.edges.len() as u64).to_le_bytes())?;
    for e in &graph.edges {
        w.write_all(&(e.src as u64).to_le_bytes())?;
        w.write_all(&(e.dst as u64).to_le_bytes())?;
        w.write_all(&e.timestamp.to_le_bytes())?;
        w.write_all(&e.edge_type.unwrap_or(NO_EDGE_TYPE).to_le_bytes())?;
    }
    w.flush()?;

    let mut m = BufWriter::new(File::create(mapping_path(prefix))?);
    if let Some(note) = note {
        writeln!(m, "# {note}")?;
    }
    for node in &graph.nodes {
        writeln!(m, "{}\t{}\t{}", node.id, node.index, graph.node_type_name(node.type_label))?;
    }
    m.flush()?;
    Ok(())
}

pub fn load_index(prefix: &Path) -> Result<TemporalHin> {
    Ok(load_index_with_note(prefix)?.0)
}

/// Loads the graph together with the note it was saved with.
pub fn load_index_with_note(prefix: &Path) -> Result<(TemporalHin, String)> {
    let mut r = Reader {
        inner: BufReader::new(File::open(binary_path(prefix))?),
    };
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::CorruptIndex("bad magic".into()));
    }
    let directed = r.bytes::<1>()?[0] != 0;
    let note = r.string()?;
    let mut graph = TemporalHin::new(directed);

    let mut type_names = Vec::new();
    for _ in 0..r.u32()? {
        type_names.push(r.string()?);
    }
    for _ in 0..r.u32()? {
        let name = r.string()?;
        graph.intern_edge_type(&name);
    }
    let node_count = r.u64()?;
    for _ in 0..node_count {
        let id = r.string()?;
        let ty = r.u32()? as usize;
        let name = type_names
            .get(ty)
            .ok_or_else(|| Error::CorruptIndex(format!("node type {ty} out of range")))?;
        graph.ensure_node(&id, name)?;
    }
    // Types that no node uses still count toward the type set.
    for name in &type_names {
        graph.intern_node_type(name);
    }
    let edge_count = r.u64()?;
    let mut edges = Vec::with_capacity(edge_count as usize);
    for _ in 0..edge_count {
        let src = r.u64()? as usize;
        let dst = r.u64()? as usize;
        let timestamp = r.i64()?;
        let ty = r.u32()?;
        edges.push(TemporalEdge {
            src,
            dst,
            timestamp,
            edge_type: (ty != NO_EDGE_TYPE).then_some(ty),
        });
    }
    graph.extend_edges(edges)?;
    Ok((graph, note))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_edge_stream, LoadOptions};

    #[test]
    fn round_trip() {
        let text = "a b X Y 3 e1\nb c Y X 1\nc a X X 3\na b X Y 2 e2\n";
        let g = parse_edge_stream(text.as_bytes(), Path::new("t"), &LoadOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("g");
        save_index(&g, &prefix, Some("seed=3")).unwrap();
        let (h, note) = load_index_with_note(&prefix).unwrap();
        assert_eq!(note, "seed=3");
        assert_eq!(h.node_count(), g.node_count());
        assert_eq!(h.edge_count(), g.edge_count());
        assert_eq!(h.nodes(), g.nodes());
        assert_eq!(h.edges(), g.edges());
        for v in 0..g.node_count() {
            assert_eq!(h.neighbors(v), g.neighbors(v));
        }
        let mapping = std::fs::read_to_string(mapping_path(&prefix)).unwrap();
        assert_eq!(mapping.lines().take(2).collect::<Vec<_>>(), vec!["# seed=3", "a\t0\tX"]);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("bad");
        std::fs::write(binary_path(&prefix), b"nonsense").unwrap();
        assert!(matches!(load_index(&prefix), Err(Error::CorruptIndex(_))));
    }
}
