//! CSV and binary dumps of paths and fields.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! "PSSI" | version: u8 | kind: u8 (0 path, 1 field) | spec_len: u32 | spec JSON
//!        | dim: u32 | extent: u64 (path: horizon, field: box side)
//!        | count: u64 | count × f64
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::tree::{SampleField, SamplePath, TreeSpec};

pub const MAGIC: &[u8; 4] = b"PSSI";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Dump {
    Path(SamplePath),
    Field(SampleField),
}

pub fn write_path_csv<W: Write>(path: &SamplePath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value"])?;
    for (n, v) in path.values.iter().enumerate() {
        w.write_record([n.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_csv<W: Write>(field: &SampleField, out: W) -> Result<()> {
    let d = field.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..d).map(|i| format!("n{i}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    let side = field.side + 1;
    for (flat, v) in field.values.iter().enumerate() {
        let mut rec = vec![String::new(); d + 1];
        let mut rest = flat as u64;
        for c in rec[..d].iter_mut().rev() {
            *c = (rest % side).to_string();
            rest /= side;
        }
        rec[d] = v.to_string();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sequence from CSV. The `value` column is used when present,
/// otherwise the last column; an `index` column, if present, must count 0, 1, 2, …
pub fn read_series_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Format("CSV has no columns".into()));
    }
    let value_col = headers.iter().position(|h| h.trim() == "value").unwrap_or(headers.len() - 1);
    let index_col = headers.iter().position(|h| h.trim() == "index");
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if let Some(ic) = index_col {
            let idx: usize = rec
                .get(ic)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("row {row}: bad index")))?;
            if idx != row {
                return Err(Error::Format(format!("row {row}: index {idx} out of sequence")));
            }
        }
        let v: f64 = rec
            .get(value_col)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("row {row}: bad value")))?;
        out.push(v);
    }
    Ok(out)
}

fn write_header<W: Write>(out: &mut W, kind: u8, spec: &TreeSpec, extent: u64, values: &[f64]) -> Result<()> {
    let spec_json = serde_json::to_vec(spec)?;
    out.write_all(MAGIC)?;
    out.write_all(&[FORMAT_VERSION, kind])?;
    out.write_all(&(spec_json.len() as u32).to_le_bytes())?;
    out.write_all(&spec_json)?;
    out.write_all(&(spec.dim as u32).to_le_bytes())?;
    out.write_all(&extent.to_le_bytes())?;
    out.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(dump: &Dump, mut out: W) -> Result<()> {
    match dump {
        Dump::Path(p) => write_header(&mut out, 0, &p.spec, p.values.len() as u64, &p.values),
        Dump::Field(f) => write_header(&mut out, 1, &f.spec, f.side, &f.values),
    }
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Dump> {
    if &read_array::<4, _>(&mut input)? != MAGIC {
        return Err(Error::Format("missing PSSI magic".into()));
    }
    let [version, kind] = read_array::<2, _>(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let spec_len = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let mut spec_json = vec![0u8; spec_len];
    input.read_exact(&mut spec_json)?;
    let spec: TreeSpec = serde_json::from_slice(&spec_json)?;
    let dim = u32::from_le_bytes(read_array(&mut input)?) as usize;
    if dim != spec.dim {
        return Err(Error::Format(format!("dimension {dim} disagrees with spec ({})", spec.dim)));
    }
    let extent = u64::from_le_bytes(read_array(&mut input)?);
    let count = u64::from_le_bytes(read_array(&mut input)?);
    let mut values = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        values.push(f64::from_le_bytes(read_array(&mut input)?));
    }
    match kind {
        0 => {
            if extent != count {
                return Err(Error::Format("path horizon disagrees with value count".into()));
            }
            Ok(Dump::Path(SamplePath { spec, values }))
        }
        1 => {
            let expected = (extent as u128 + 1).checked_pow(dim as u32);
            if expected != Some(count as u128) {
                return Err(Error::Format("field side disagrees with value count".into()));
            }
            Ok(Dump::Field(SampleField { spec, side: extent, values }))
        }
        other => Err(Error::Format(format!("unknown dump kind {other}"))),
    }
}
