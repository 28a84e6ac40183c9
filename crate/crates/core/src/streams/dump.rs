//! Stream dumps: CSV rows `t,x1..xd,y` plus a JSON sidecar with the metadata.

use std::fs;
use std::path::{Path, PathBuf};

use super::{LabeledPoint, Stream, StreamMeta};
use crate::error::{Error, Result};

pub const DUMP_VERSION: u32 = 1;

/// `stream.csv` -> `stream.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the rows and the sidecar. Values use Rust's shortest round-trip
/// formatting, so reading the dump back is bit-exact.
pub fn write_dump(stream: &Stream, csv_path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push('t');
    for i in 1..=stream.input_dim() {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",y\n");
    for p in &stream.points {
        out.push_str(&p.t.to_string());
        for v in &p.x {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push_str(&format!(",{}\n", p.y));
    }
    fs::write(csv_path, out).map_err(|e| Error::io(csv_path, e))?;
    let side = sidecar_path(csv_path);
    let meta = serde_json::to_string_pretty(&stream.meta)?;
    fs::write(&side, meta).map_err(|e| Error::io(&side, e))
}

fn parse_row(line: &str, dim: usize, expected_t: usize) -> Option<LabeledPoint> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != dim + 2 {
        return None;
    }
    let t: usize = fields[0].parse().ok()?;
    if t != expected_t {
        return None;
    }
    let x = fields[1..=dim]
        .iter()
        .map(|f| f.parse::<f64>().ok())
        .collect::<Option<Vec<_>>>()?;
    let y: u8 = fields[dim + 1].parse().ok().filter(|&y| y <= 1)?;
    Some(LabeledPoint { t, x, y })
}

/// Reads a dump written by [`write_dump`].
///
/// A missing or malformed row before the length recorded in the sidecar is
/// reported as a truncated dump naming the last good row.
pub fn read_dump(csv_path: &Path) -> Result<Stream> {
    let side = sidecar_path(csv_path);
    let meta_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let probe: serde_json::Value = serde_json::from_str(&meta_text)?;
    let found = probe
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .unwrap_or(0) as u32;
    if found != DUMP_VERSION {
        return Err(Error::VersionMismatch {
            found,
            expected: DUMP_VERSION,
        });
    }
    let meta: StreamMeta = serde_json::from_value(probe)?;
    let expected = meta.concepts.last().map_or(0, |c| c.end());

    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut lines = text.split('\n');
    lines.next();
    // only newline-terminated rows count as complete
    let complete_rows = text.matches('\n').count().saturating_sub(1);
    let mut points = Vec::with_capacity(expected);
    for (i, line) in lines.take(expected).enumerate() {
        let row = if i < complete_rows {
            parse_row(line, meta.input_dim, i)
        } else {
            None
        };
        match row {
            Some(p) => points.push(p),
            None => break,
        }
    }
    if points.len() < expected {
        return Err(Error::TruncatedDump {
            last_good_row: points.len(),
            expected,
        });
    }
    Ok(Stream { meta, points })
}
