//! CSV and JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

/// `%.12g`: 12 significant digits, trailing zeros removed, exponent form
/// outside `[1e-5, 1e12)`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mant),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Comma-separated table with a header line and LF line endings.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell {
    Num(f64),
    Text(String),
    Int(u64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_g(x),
                    Cell::Text(s) => s,
                    Cell::Int(i) => i.to_string(),
                })
                .collect(),
        );
    }

    pub fn write_to(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Where the table and summary go.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: &str, summary: &str) -> Self {
        let out = (!out.is_empty()).then(|| PathBuf::from(out));
        let summary = if !summary.is_empty() {
            Some(PathBuf::from(summary))
        } else {
            out.as_ref().map(|p| p.with_extension("json"))
        };
        Self { out, summary }
    }

    pub fn write_table(&self, t: &Table) -> io::Result<()> {
        match &self.out {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                t.write_to(&mut w)?;
                w.flush()
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                t.write_to(&mut lock)
            }
        }
    }

    pub fn write_summary(&self, v: &Value) -> io::Result<()> {
        let text = serde_json::to_string_pretty(v).map_err(io::Error::other)?;
        match &self.summary {
            Some(p) => write_file(p, &(text + "\n")),
            None => {
                eprintln!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(p: &Path, s: &str) -> io::Result<()> {
    let mut f = File::create(p)?;
    f.write_all(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(0.375), "0.375");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g(2e15), "2e+15");
        assert_eq!(fmt_g(0.99999999999999), "1");
        assert_eq!(fmt_g(1e-5), "0.00001");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::from(1.0), Cell::from("x")]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,x\n");
    }
}
