//! CSV artifacts with a `#`-prefixed metadata header.
//!
//! ```text
//! # noma-sec 0.1.0 intercept-vs-snr
//! # generated-unix: 1760000000
//! # meta excluded: 12
//! # config:
//! # seed = 1
//! # ...
//! snr_db,eta,...
//! ```
//!
//! Everything except the `generated-unix` line is a function of the scenario,
//! so two runs of the same scenario differ only on that line.

use std::fmt::Write as _;

use crate::RunError;

pub const HEADER_TAG: &str = "# noma-sec ";
const TIMESTAMP_KEY: &str = "# generated-unix: ";
const META_KEY: &str = "# meta ";
const CONFIG_KEY: &str = "# config:";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // shortest round-trip form
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key: value` lines for the header.
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(command: &str, columns: &[&'static str]) -> Self {
        Self {
            command: command.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Values of a numeric column; missing cells are `None`.
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let j = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    /// Header plus body. `timestamp` is seconds since the Unix epoch.
    pub fn render(&self, config_toml: &str, timestamp: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER_TAG}{} {}", env!("CARGO_PKG_VERSION"), self.command);
        let _ = writeln!(out, "{TIMESTAMP_KEY}{timestamp}");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{META_KEY}{k}: {v}");
        }
        let _ = writeln!(out, "{CONFIG_KEY}");
        for line in config_toml.lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                let _ = writeln!(out, "# {line}");
            }
        }
        out.push_str(&self.body());
        out
    }

    /// Column names and rows, without the metadata header.
    pub fn body(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    /// The body with the named columns blanked, for comparisons that must
    /// ignore wall-clock measurements.
    pub fn body_without(&self, masked: &[&str]) -> String {
        let mut t = self.clone();
        for name in masked {
            if let Some(j) = t.column(name) {
                for r in &mut t.rows {
                    r[j] = Cell::Missing;
                }
            }
        }
        t.body()
    }
}

/// The parsed `#` header of a CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvHeader {
    pub version: String,
    pub command: String,
    pub timestamp: u64,
    pub meta: Vec<(String, String)>,
    pub config: String,
    pub columns: Vec<String>,
}

fn header_err(line: usize, reason: impl Into<String>) -> RunError {
    RunError::Validation(format!("csv header line {line}: {}", reason.into()))
}

impl CsvHeader {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (n, first) = lines.next().ok_or_else(|| header_err(1, "empty file"))?;
        let rest = first
            .strip_prefix(HEADER_TAG)
            .ok_or_else(|| header_err(n, "missing tool tag"))?;
        let mut parts = rest.split(' ');
        let (version, command) = match (parts.next(), parts.next(), parts.next()) {
            (Some(v), Some(c), None) if !v.is_empty() && !c.is_empty() => (v.to_string(), c.to_string()),
            _ => return Err(header_err(n, "expected `<version> <command>`")),
        };
        let (n, ts) = lines.next().ok_or_else(|| header_err(n + 1, "missing timestamp"))?;
        let timestamp = ts
            .strip_prefix(TIMESTAMP_KEY)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| header_err(n, "malformed timestamp"))?;
        let mut meta = Vec::new();
        let mut config = String::new();
        let mut in_config = false;
        let mut columns = None;
        for (n, line) in lines {
            if in_config {
                if let Some(c) = line.strip_prefix("# ") {
                    config.push_str(c);
                    config.push('\n');
                    continue;
                }
                if line == "#" {
                    config.push('\n');
                    continue;
                }
                columns = Some(parse_columns(n, line)?);
                break;
            }
            if line == CONFIG_KEY {
                in_config = true;
            } else if let Some(kv) = line.strip_prefix(META_KEY) {
                let (k, v) = kv.split_once(": ").ok_or_else(|| header_err(n, "meta line needs `key: value`"))?;
                meta.push((k.to_string(), v.to_string()));
            } else {
                return Err(header_err(n, "unexpected line before config block"));
            }
        }
        if !in_config {
            return Err(header_err(0, "missing config block"));
        }
        Ok(Self {
            version,
            command,
            timestamp,
            meta,
            config,
            columns: columns.unwrap_or_default(),
        })
    }
}

fn parse_columns(n: usize, line: &str) -> Result<Vec<String>, RunError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes());
    match r.records().next() {
        Some(Ok(rec)) => Ok(rec.iter().map(str::to_string).collect()),
        Some(Err(e)) => Err(header_err(n, format!("bad column row: {e}"))),
        None => Err(header_err(n, "empty column row")),
    }
}

/// Seconds since the Unix epoch.
pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new("demo", &["x", "y", "note"]);
        t.push(vec![0.1.into(), Cell::Missing, "ok".into()]);
        t.push(vec![1e-300.into(), 3usize.into(), "a,b".into()]);
        t.meta.push(("excluded".into(), "4".into()));
        t
    }

    #[test]
    fn header_roundtrip() {
        let cfg = "seed = 3\n\n[params]\neta = 0.7\n";
        let text = table().render(cfg, 42);
        let h = CsvHeader::parse(&text).unwrap();
        assert_eq!(h.command, "demo");
        assert_eq!(h.timestamp, 42);
        assert_eq!(h.config, cfg);
        assert_eq!(h.meta, vec![("excluded".to_string(), "4".to_string())]);
        assert_eq!(h.columns, vec!["x", "y", "note"]);
    }

    #[test]
    fn only_timestamp_differs() {
        let a = table().render("seed = 1\n", 1);
        let b = table().render("seed = 1\n", 2);
        let diff: Vec<_> = a.lines().zip(b.lines()).filter(|(x, y)| x != y).collect();
        assert_eq!(diff.len(), 1);
        assert!(diff[0].0.starts_with(TIMESTAMP_KEY));
    }

    #[test]
    fn body_quotes_and_blanks() {
        let body = table().body();
        assert_eq!(body, "x,y,note\n0.1,,ok\n1e-300,3,\"a,b\"\n");
        assert_eq!(table().body_without(&["x"]), "x,y,note\n,,ok\n,3,\"a,b\"\n");
    }

    #[test]
    fn rejects_malformed_headers() {
        for bad in ["", "x,y\n", "# noma-sec 0.1.0\n", "# noma-sec 0.1.0 c\n# generated-unix: z\n", "# noma-sec 0.1.0 c\n# generated-unix: 1\nx,y\n"] {
            assert!(CsvHeader::parse(bad).is_err(), "{bad:?}");
        }
    }
}
