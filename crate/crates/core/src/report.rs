//! Report emission: JSON with fixed 17-significant-digit floats, CSV, and an
//! aligned text table.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

use crate::error::{Error, Result};
use crate::ltcheck::LtReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Human,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "human" => Ok(Self::Human),
            other => Err(Error::InvalidArgument(format!("unknown output format {other:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Human => "human",
        })
    }
}

/// Compact JSON that writes every float as `d.dddddddddddddddde±x`.
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Deterministic JSON for any serializable value. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser)?;
    let text = String::from_utf8(buf).expect("serde_json writes UTF-8");
    // `{:.16e}` renders non-finite values as bare words; keep the output valid JSON.
    Ok(if text.contains("inf") || text.contains("NaN") { plain_json(value)? } else { text })
}

fn plain_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    value.serialize(&mut Serializer::with_formatter(&mut buf, CompactFormatter))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// JSON array with one element per line.
pub fn to_json_array<T: Serialize>(items: &[T]) -> Result<String> {
    let rows = items.iter().map(to_json).collect::<Result<Vec<_>>>()?;
    Ok(if rows.is_empty() { "[]\n".to_string() } else { format!("[\n{}\n]\n", rows.join(",\n")) })
}

pub const CSV_HEADER: [&str; 8] = ["spec", "d", "gamma", "lhs", "rhs", "constant", "ratio", "pass"];

fn spec_column(r: &LtReport) -> Result<String> {
    Ok(match &r.spec2 {
        None => r.spec.to_json_string(),
        Some(s2) => format!("[{},{}]", r.spec.to_json_string(), s2.to_json_string()),
    })
}

pub fn to_csv(reports: &[LtReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            spec_column(r)?,
            r.d.to_string(),
            format!("{:.16e}", r.gamma),
            format!("{:.16e}", r.lhs),
            format!("{:.16e}", r.rhs_integral),
            format!("{:.16e}", r.constant),
            format!("{:.16e}", r.ratio),
            r.pass.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

fn spec_label(r: &LtReport) -> String {
    match &r.spec2 {
        None => r.spec.family().to_string(),
        Some(s2) => format!("{}+{}", r.spec.family(), s2.family()),
    }
}

pub fn to_human(reports: &[LtReport]) -> String {
    let mut rows = vec![CSV_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for r in reports {
        rows.push(vec![
            spec_label(r),
            r.d.to_string(),
            format!("{}", r.gamma),
            format!("{:.8}", r.lhs),
            format!("{:.8}", r.rhs_integral),
            format!("{:.7}", r.constant),
            format!("{:.7}", r.ratio),
            if r.pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..CSV_HEADER.len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn emit_report(reports: &[LtReport], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json_array(reports),
        OutputFormat::Csv => to_csv(reports),
        OutputFormat::Human => Ok(to_human(reports)),
    }
}
