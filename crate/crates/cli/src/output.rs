//! CSV emission with `#` metadata headers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// One CSV cell.
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(&'static str),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

fn fmt_cell(c: &Cell, out: &mut String) {
    let _ = match c {
        Cell::Int(i) => write!(out, "{i}"),
        Cell::Num(x) if x.is_nan() => write!(out, "nan"),
        Cell::Num(x) => write!(out, "{x:.16e}"),
        Cell::Text(t) => write!(out, "{t}"),
    };
}

/// A table with its schema and metadata, rendered in one pass.
pub struct Table {
    pub name: &'static str,
    pub columns: &'static [&'static str],
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &'static [&'static str]) -> Self {
        Self { name, columns, meta: Vec::new(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        let json = cfg.to_json();
        let mut s = String::new();
        let _ = writeln!(s, "# hexdos {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# config_hash: sha256:{}", sha256_hex(json.as_bytes()));
        let _ = writeln!(s, "# config: {json}");
        let _ = writeln!(s, "# schema: {}({})", self.name, self.columns.join(","));
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                fmt_cell(c, &mut s);
            }
            s.push('\n');
        }
        s
    }

    /// Writes `<out_dir>/<name>.csv`, or stdout without an output directory.
    pub fn emit(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let text = self.render(cfg);
        match &cfg.out_dir {
            Some(dir) => write_file(&dir.join(format!("{}.csv", self.name)), &text),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_number_format() {
        let mut t = Table::new("bands", &["index", "alpha"]);
        t.meta("band", 1);
        t.push(vec![1usize.into(), std::f64::consts::PI.into()]);
        let text = t.render(&RunConfig::default());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# hexdos "));
        assert!(lines[1].starts_with("# config_hash: sha256:"));
        assert_eq!(lines[3], "# schema: bands(index,alpha)");
        assert_eq!(lines[5], "index,alpha");
        assert_eq!(lines[6], "1,3.1415926535897931e0");
    }
}
