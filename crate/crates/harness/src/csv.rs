//! Plain CSV output with a provenance header.
//!
//! Every file starts with `# config_hash=<hex>` and optional `# key=value`
//! lines, then the column names. Reals are written with 17 significant
//! digits so that they round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub enum Field {
    Real(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Real(x)
    }
}

impl From<usize> for Field {
    fn from(x: usize) -> Self {
        Field::Int(x as i64)
    }
}

impl From<u64> for Field {
    fn from(x: u64) -> Self {
        Field::Int(x as i64)
    }
}

impl From<bool> for Field {
    fn from(x: bool) -> Self {
        Field::Text(x.to_string())
    }
}

impl From<&str> for Field {
    fn from(x: &str) -> Self {
        Field::Text(x.to_string())
    }
}

impl From<String> for Field {
    fn from(x: String) -> Self {
        Field::Text(x)
    }
}

pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(
        path: &Path,
        config_hash: &str,
        meta: &[(&str, String)],
        columns: &[&str],
    ) -> std::io::Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# config_hash={config_hash}")?;
        for (k, v) in meta {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self {
            out,
            columns: columns.len(),
        })
    }

    pub fn row(&mut self, fields: Vec<Field>) -> std::io::Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        let line: Vec<String> = fields
            .into_iter()
            .map(|f| match f {
                Field::Real(x) => format_real(x),
                Field::Int(i) => i.to_string(),
                Field::Text(s) => s,
            })
            .collect();
        writeln!(self.out, "{}", line.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

#[macro_export]
macro_rules! fields {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::csv::Field::from($x)),*]
    };
}
