//! Binary checkpoint format: magic `CHKP`, version, domain descriptor,
//! time, resume step size, then the `u` and `w` fields as little-endian
//! f64, row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::grid::{Bc, Domain, Field};
use crate::model::SimState;
use crate::stepper::StepError;

const MAGIC: &[u8; 4] = b"CHKP";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> StepError {
    StepError::Checkpoint(e.to_string())
}

fn format_err(msg: &str) -> StepError {
    StepError::Checkpoint(msg.into())
}

/// Domain descriptor shared with the snapshot format:
/// dim u32, cells u32 per axis, lengths f64 per axis, bc u8.
pub fn write_domain_descriptor<W: Write>(w: &mut W, dom: &Domain) -> std::io::Result<()> {
    w.write_all(&(dom.dim() as u32).to_le_bytes())?;
    for &c in dom.cells() {
        w.write_all(&(c as u32).to_le_bytes())?;
    }
    for &l in dom.lengths() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&[match dom.bc() {
        Bc::NoFlux => 0u8,
        Bc::Periodic => 1u8,
    }])?;
    Ok(())
}

pub fn read_domain_descriptor<R: Read>(r: &mut R) -> Result<Arc<Domain>, StepError> {
    let dim = read_u32(r)? as usize;
    if !(1..=3).contains(&dim) {
        return Err(format_err("domain descriptor: dim must be 1..=3"));
    }
    let mut cells = Vec::with_capacity(dim);
    for _ in 0..dim {
        cells.push(read_u32(r)? as usize);
    }
    let mut lengths = Vec::with_capacity(dim);
    for _ in 0..dim {
        lengths.push(read_f64(r)?);
    }
    let bc = match read_u8(r)? {
        0 => Bc::NoFlux,
        1 => Bc::Periodic,
        other => return Err(format_err(&format!("domain descriptor: unknown bc tag {other}"))),
    };
    Domain::new(&cells, &lengths, bc)
        .map_err(|e| format_err(&format!("domain descriptor invalid: {e}")))
}

pub fn read_u32<R: Read>(r: &mut R) -> Result<u32, StepError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| format_err("truncated file"))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_f64<R: Read>(r: &mut R) -> Result<f64, StepError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| format_err("truncated file"))?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_u8<R: Read>(r: &mut R) -> Result<u8, StepError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(|_| format_err("truncated file"))?;
    Ok(b[0])
}

pub fn write_values<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_values<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, StepError> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

/// Persist `(state, resume tau)` to `path`.
pub fn write_checkpoint(path: &Path, state: &SimState, tau: f64) -> Result<(), StepError> {
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    write_domain_descriptor(&mut w, state.u.domain()).map_err(io_err)?;
    w.write_all(&state.t.to_le_bytes()).map_err(io_err)?;
    w.write_all(&tau.to_le_bytes()).map_err(io_err)?;
    write_values(&mut w, state.u.values()).map_err(io_err)?;
    write_values(&mut w, state.w.values()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Load a checkpoint; returns the state and the step size to resume with.
pub fn read_checkpoint(path: &Path) -> Result<(SimState, f64), StepError> {
    let file = File::open(path).map_err(io_err)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| format_err("truncated file"))?;
    if &magic != MAGIC {
        return Err(format_err("bad magic: not a checkpoint file"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(format_err(&format!(
            "unsupported checkpoint version {version} (supported: {VERSION})"
        )));
    }
    let dom = read_domain_descriptor(&mut r)?;
    let t = read_f64(&mut r)?;
    let tau = read_f64(&mut r)?;
    let n = dom.len();
    let u = Field::from_values(&dom, read_values(&mut r, n)?)
        .map_err(|e| format_err(&format!("u field: {e}")))?;
    let w = Field::from_values(&dom, read_values(&mut r, n)?)
        .map_err(|e| format_err(&format!("w field: {e}")))?;
    // trailing bytes indicate corruption
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(io_err)? != 0 {
        return Err(format_err("trailing bytes after checkpoint payload"));
    }
    Ok((SimState::new(t, u, w), tau))
}
