//! CSV reports with a hashed provenance header.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Values are written with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// Extra `# key=value` lines placed before the column header.
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Report {
    pub fn new(command: &str, config_hash: String, seed: u64, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            seed,
            version: VERSION.to_string(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.notes.push(format!("{key}={value}"));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# config={} seed={}\n", self.config_hash, self.seed);
        let _ = writeln!(out, "# command={} version={}", self.command, self.version);
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Parsed form of a rendered report.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ParsedReport {
    pub fn parse(text: &str) -> Option<Self> {
        let mut comments = Vec::new();
        let mut lines = text.lines();
        let header = loop {
            let line = lines.next()?;
            match line.strip_prefix("# ") {
                Some(c) => comments.push(c.to_string()),
                None => break line,
            }
        };
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let rows = lines
            .map(|l| l.split(',').map(|c| c.parse::<f64>().ok()).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()?;
        Some(Self { comments, columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Value of a `key=value` comment entry.
    pub fn note(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .flat_map(|c| c.split(' '))
            .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let mut r = Report::new("demo", config_hash("x"), 42, &["a", "b"]);
        r.note("alpha", 0.5);
        r.push(vec![1.0, f64::NAN]);
        r.push(vec![0.1, -2.5e-300]);
        let text = r.render();
        assert!(text.starts_with(&format!("# config={} seed=42\n", config_hash("x"))));
        let p = ParsedReport::parse(&text).unwrap();
        assert_eq!(p.columns, ["a", "b"]);
        assert_eq!(p.column("a").unwrap(), [1.0, 0.1]);
        assert!(p.rows[0][1].is_nan());
        assert_eq!(p.rows[1][1], -2.5e-300);
        assert_eq!(p.note("alpha"), Some("0.5"));
        assert_eq!(p.note("seed"), Some("42"));
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(
            config_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn values_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-308] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
    }
}
