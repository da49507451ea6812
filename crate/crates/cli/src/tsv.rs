//! Tab-separated input and output. Lines starting with `#` are comments, so
//! files written here can be read back with their provenance headers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{invalid, io_error, CliResult, Failure};

/// Run description written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self {
            tool: "rkcca",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
        }
    }

    pub fn header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# seed: {}\n# config: {}\n",
            self.tool, self.version, self.command, self.seed, self.config
        )
    }
}

/// Formats a float so that it parses back to the same value, switching to
/// exponent notation for very small or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    std::fs::write(path, text).map_err(io_error(path))
}

pub fn render_tsv(prov: &Provenance, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = prov.header();
    out.push_str(&columns.join("\t"));
    out.push('\n');
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        let _ = writeln!(out, "{}", r.join("\t"));
    }
    out
}

pub fn write_tsv(path: &Path, prov: &Provenance, columns: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    write_text(path, &render_tsv(prov, columns, rows))
}

#[derive(Serialize)]
struct Document<'a, T> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

/// Writes `body` as a JSON object whose first key is `provenance`.
pub fn write_json<T: Serialize>(path: &Path, prov: &Provenance, body: &T) -> CliResult<()> {
    let doc = Document {
        provenance: prov,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// A data line with its 1-based line number in the file.
#[derive(Debug, Clone)]
pub struct Record {
    pub line: usize,
    pub fields: Vec<String>,
}

/// A parsed TSV file: the first non-comment line is the header.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Record>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(name: &str, text: &str) -> CliResult<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let Some((_, head)) = lines.next() else {
            return Err(invalid(format!("{name}: no header line")));
        };
        let header: Vec<String> = head.split('\t').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (line, l) in lines {
            let fields: Vec<String> = l.split('\t').map(|s| s.trim().to_string()).collect();
            if fields.len() != header.len() {
                return Err(invalid(format!(
                    "{name}:{line}: expected {} fields, found {}",
                    header.len(),
                    fields.len()
                )));
            }
            rows.push(Record { line, fields });
        }
        Ok(Self {
            name: name.to_string(),
            header,
            rows,
        })
    }

    pub fn error(&self, line: usize, msg: impl std::fmt::Display) -> Failure {
        invalid(format!("{}:{line}: {msg}", self.name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, -2.5, 0.1, 1e-300, 3.3e-5, 1e20, f64::MIN_POSITIVE, 0.04550026389635842] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(1e-300), "1e-300");
    }

    #[test]
    fn comments_and_line_numbers() {
        let t = Table::parse("f", "# c\nid\tx\n\na\t1\n# c\nb\t2\n").unwrap();
        assert_eq!(t.header, ["id", "x"]);
        assert_eq!(t.rows[1].line, 6);
        let err = Table::parse("f", "id\tx\na\n").unwrap_err();
        assert!(err.to_string().contains("f:2:"));
    }
}
