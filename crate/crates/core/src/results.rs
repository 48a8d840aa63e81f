//! Result emission: one CSV per study with a stable column order, plus a
//! JSON summary with the fitted statistics. Both carry the config hash and
//! seed list; timestamps belong in a sidecar log, never here, so identical
//! runs produce identical bytes.

use std::io::Write;
use std::path::Path;

use crate::error::{CoreError, Result};

#[derive(Clone, Debug)]
pub struct Provenance {
    pub config_hash: String,
    pub seeds: Vec<u64>,
}

impl Provenance {
    fn comment_line(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        format!("# config_hash={} seeds={}", self.config_hash, seeds.join(";"))
    }
}

/// A rectangular result table with one row per experiment cell.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CoreError::Dimension {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self, provenance: &Provenance) -> String {
        let mut out = String::new();
        out.push_str(&provenance.comment_line());
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CoreError {
    CoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_csv(path: &Path, table: &Table, provenance: &Provenance) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(table.to_csv(provenance).as_bytes())
        .map_err(|e| io_err(path, e))
}

/// JSON summary with provenance merged in; keys are emitted in sorted
/// order (serde_json maps are ordered by insertion; we sort explicitly).
pub fn write_json_summary(
    path: &Path,
    summary: serde_json::Value,
    provenance: &Provenance,
) -> Result<()> {
    let mut root = serde_json::Map::new();
    root.insert(
        "config_hash".into(),
        serde_json::Value::String(provenance.config_hash.clone()),
    );
    root.insert(
        "seeds".into(),
        serde_json::Value::Array(
            provenance
                .seeds
                .iter()
                .map(|&s| serde_json::Value::from(s))
                .collect(),
        ),
    );
    match summary {
        serde_json::Value::Object(map) => {
            let mut entries: Vec<(String, serde_json::Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            for (k, v) in entries {
                root.insert(k, v);
            }
        }
        other => {
            root.insert("summary".into(), other);
        }
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root))
        .map_err(|e| CoreError::Config(format!("summary serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Render a float with full round-trip precision (deterministic).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_hash: "00ff".into(),
            seeds: vec![1, 2],
        }
    }

    #[test]
    fn empty_study_gives_header_only_csv() {
        let t = Table::new(&["tau", "error"]);
        let csv = t.to_csv(&prov());
        assert_eq!(csv, "# config_hash=00ff seeds=1;2\ntau,error\n");
    }

    #[test]
    fn determinism() {
        let mut t = Table::new(&["a", "b"]);
        t.push_row(vec![fmt_f64(0.5), fmt_f64(1.0 / 3.0)]).unwrap();
        let c1 = t.to_csv(&prov());
        let c2 = t.to_csv(&prov());
        assert_eq!(c1, c2);
        assert!(t.push_row(vec!["only-one".into()]).is_err());
    }

    #[test]
    fn json_summary_written_sorted() {
        let dir = std::env::temp_dir().join(format!("hlri-results-{}", std::process::id()));
        let path = dir.join("summary.json");
        let summary = serde_json::json!({"zeta": 1.0, "alpha": {"slope": 2.0}});
        write_json_summary(&path, summary, &prov()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("config_hash"));
        let alpha_pos = text.find("alpha").unwrap();
        let zeta_pos = text.find("zeta").unwrap();
        assert!(alpha_pos < zeta_pos);
        let again = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, again);
        std::fs::remove_dir_all(&dir).ok();
    }
}
