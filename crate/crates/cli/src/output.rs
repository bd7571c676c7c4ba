//! Number formatting and CSV/JSON table IO.

use std::io::{self, BufRead, Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest representation of `round12(x)`, as written into tables.
pub fn format_number(x: f64) -> String {
    let x = round12(x);
    if !x.is_finite() {
        return x.to_string();
    }
    ryu::Buffer::new().format_finite(x).to_owned()
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

/// Writes `records` under `headers`. CSV output starts with one
/// `# key=value` line per comment; JSON is a bare array of objects.
pub fn write_table<W: Write, T: Serialize>(
    mut out: W,
    format: Format,
    headers: &[&str],
    comments: &[(&str, String)],
    records: &[T],
) -> io::Result<()> {
    match format {
        Format::Csv => {
            for (k, v) in comments {
                writeln!(out, "# {k}={v}")?;
            }
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut out);
            w.write_record(headers).map_err(csv_err)?;
            for rec in records {
                w.serialize(rec).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)?;
        }
    }
    out.flush()
}

/// Parses a CSV table written by [`write_table`], skipping comment lines.
pub fn read_csv<R: Read, T: DeserializeOwned>(input: R) -> io::Result<Vec<T>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

/// Leading `# key=value` lines of a CSV table.
pub fn read_comments<R: BufRead>(input: R) -> io::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        let Some(body) = line.strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = body.trim().split_once('=') {
            out.push((k.trim().to_owned(), v.trim().to_owned()));
        }
    }
    Ok(out)
}
