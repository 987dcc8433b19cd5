//! CSV output shared by every artifact: a `#` provenance comment, a header
//! row, then rows of round-trip-safe numbers.

use std::io::Write;

use sha2::{Digest, Sha256};

use crate::error::Result;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `# config_sha256=<hex> seed=<u64> version=<crate version>`.
pub fn provenance_line(config: &[u8], seed: u64) -> String {
    let digest = hex::encode(Sha256::digest(config));
    format!("# config_sha256={digest} seed={seed} version={}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: CsvTable) {
        self.rows.extend(other.rows);
    }

    pub fn write<W: Write>(&self, mut w: W, provenance: Option<&str>) -> Result<()> {
        if let Some(line) = provenance {
            writeln!(w, "{line}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_string_with(&self, provenance: Option<&str>) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf, provenance)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Values of one column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}
