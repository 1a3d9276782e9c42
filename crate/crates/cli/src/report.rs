use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

/// One metric value, written as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub task: &'static str,
    pub split: String,
    pub metric: &'static str,
    pub value: f64,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Left-aligned columns separated by two spaces.
pub fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let t = table(&[
            vec!["Timestamp".into(), "10".into(), "Avg.".into()],
            vec!["AUC".into(), "0.9148".into(), "0.9148".into()],
        ]);
        assert_eq!(t, "Timestamp  10      Avg.\nAUC        0.9148  0.9148\n");
    }

    #[test]
    fn record_is_one_json_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let r = Record {
            task: "lp",
            split: "avg".into(),
            metric: "auc",
            value: 0.5,
            seed: 1,
            config_hash: "abc".into(),
            note: None,
        };
        write_records(&path, &[r.clone(), r]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"task":"lp","split":"avg","metric":"auc","value":0.5,"seed":1,"config_hash":"abc"}"#
        );
    }
}
