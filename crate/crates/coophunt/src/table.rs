use std::io::Write;

use serde::Serialize;

use crate::error::CliError;
use crate::manifest::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Row-oriented view of a data section. Column order is part of the schema.
pub trait Table {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// 17 significant digits, which round-trips any `f64`.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write, T: Table>(out: W, table: &T) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.header())?;
    for row in table.rows() {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Bytes of a document in `format`. CSV carries the data section only.
pub fn render<T: Serialize + Table>(
    doc: &Document<T>,
    format: Format,
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(&mut buf, &doc.data)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, doc)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}
