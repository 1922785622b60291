//! Field snapshot format: magic `CHNL`, version u32 = 1, dim u32,
//! per-axis cells u32, per-axis lengths f64, bc u8 (0 = no-flux,
//! 1 = periodic), time f64, then the values as little-endian f64
//! row-major. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chnl_core::grid::Field;
use chnl_core::stepper::checkpoint;

const MAGIC: &[u8; 4] = b"CHNL";
const VERSION: u32 = 1;

#[derive(Debug)]
pub struct FormatError(pub String);

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "snapshot format error: {}", self.0)
    }
}

impl std::error::Error for FormatError {}

pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> Result<(), FormatError> {
    let io = |e: std::io::Error| FormatError(e.to_string());
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    checkpoint::write_domain_descriptor(&mut w, field.domain()).map_err(io)?;
    w.write_all(&t.to_le_bytes()).map_err(io)?;
    checkpoint::write_values(&mut w, field.values()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_snapshot(path: &Path) -> Result<(Field, f64), FormatError> {
    let file = File::open(path).map_err(|e| FormatError(e.to_string()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| FormatError("truncated file".into()))?;
    if &magic != MAGIC {
        return Err(FormatError("bad magic: not a snapshot file".into()));
    }
    let as_fmt = |e: chnl_core::stepper::StepError| FormatError(e.to_string());
    let version = checkpoint::read_u32(&mut r).map_err(as_fmt)?;
    if version != VERSION {
        return Err(FormatError(format!(
            "unsupported snapshot version {version} (supported: {VERSION})"
        )));
    }
    let dom = checkpoint::read_domain_descriptor(&mut r).map_err(as_fmt)?;
    let t = checkpoint::read_f64(&mut r).map_err(as_fmt)?;
    let values = checkpoint::read_values(&mut r, dom.len()).map_err(as_fmt)?;
    let field =
        Field::from_values(&dom, values).map_err(|e| FormatError(format!("values: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| FormatError(e.to_string()))? != 0 {
        return Err(FormatError("trailing bytes after snapshot payload".into()));
    }
    Ok((field, t))
}
