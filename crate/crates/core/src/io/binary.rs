//! Raw little-endian state files: binary snapshots and checkpoints.
//!
//! Layout: 8-byte magic, `u32` version, `u32 n1`, `u32 n2`, `u64` step, `f64` time, then
//! `rho, u1, u2, theta` as `n1 n2` doubles each. Checkpoints append a length-prefixed JSON
//! trailer with the resolved config and the run summary so far.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use super::archive::RunSummary;
use crate::operators::{CellField, VectorField};
use crate::scheme::State;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RBNSFSNP";
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RBNSFCKP";
pub const FORMAT_VERSION: u32 = 1;

const HEADER: usize = 8 + 4 + 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub n1: usize,
    pub n2: usize,
    pub step: u64,
    pub t: f64,
}

fn encode(magic: &[u8; 8], n1: usize, n2: usize, step: u64, s: &State) -> Vec<u8> {
    let n = n1 * n2;
    let mut out = Vec::with_capacity(HEADER + 32 * n);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n1 as u32).to_le_bytes());
    out.extend_from_slice(&(n2 as u32).to_le_bytes());
    out.extend_from_slice(&step.to_le_bytes());
    out.extend_from_slice(&s.t.to_le_bytes());
    for f in [&s.rho[..], &s.u.c[0][..], &s.u.c[1][..], &s.theta[..]] {
        for v in f {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.fail(format!("truncated: need {n} more bytes, {} left", self.bytes.len() - self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn doubles(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

fn decode<'a>(path: &'a Path, bytes: &'a [u8], magic: &[u8; 8]) -> Result<(BinaryHeader, State, Cursor<'a>)> {
    let mut c = Cursor { path, bytes, pos: 0 };
    if c.take(8)? != magic {
        c.pos = 0;
        return Err(c.fail(format!("bad magic, expected {}", String::from_utf8_lossy(magic))));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(c.fail(format!("unsupported format version {version}")));
    }
    let n1 = c.u32()? as usize;
    let n2 = c.u32()? as usize;
    if n1 == 0 || n2 == 0 || n1.checked_mul(n2).is_none_or(|n| n > (1 << 28)) {
        return Err(c.fail(format!("implausible grid {n1}x{n2}")));
    }
    let step = c.u64()?;
    let t = c.f64()?;
    let n = n1 * n2;
    let rho = c.doubles(n)?;
    let u1 = c.doubles(n)?;
    let u2 = c.doubles(n)?;
    let theta = c.doubles(n)?;
    let state = State {
        rho: CellField::from_vec(rho),
        u: VectorField {
            c: [CellField::from_vec(u1), CellField::from_vec(u2)],
        },
        theta: CellField::from_vec(theta),
        t,
    };
    Ok((BinaryHeader { n1, n2, step, t }, state, c))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file so a crash never leaves a torn file behind.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_snapshot_bin(path: &Path, n1: usize, n2: usize, step: u64, s: &State) -> Result<()> {
    write_atomic(path, &encode(SNAPSHOT_MAGIC, n1, n2, step, s))
}

pub fn read_snapshot_bin(path: &Path) -> Result<(BinaryHeader, State)> {
    let bytes = read(path)?;
    let (h, s, c) = decode(path, &bytes, SNAPSHOT_MAGIC)?;
    if c.pos != bytes.len() {
        return Err(c.fail("trailing bytes after snapshot"));
    }
    Ok((h, s))
}

/// Header only, for listing archives.
pub fn read_snapshot_header(path: &Path) -> Result<BinaryHeader> {
    use std::io::Read;
    let mut buf = [0u8; HEADER];
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    f.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        path,
        bytes: &buf,
        pos: 0,
    };
    if c.take(8)? != SNAPSHOT_MAGIC {
        c.pos = 0;
        return Err(c.fail("bad magic"));
    }
    let _version = c.u32()?;
    let n1 = c.u32()? as usize;
    let n2 = c.u32()? as usize;
    let step = c.u64()?;
    let t = c.f64()?;
    Ok(BinaryHeader { n1, n2, step, t })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTrailer {
    /// resolved run config
    pub config: serde_json::Value,
    /// aggregates over all steps up to the checkpoint
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: BinaryHeader,
    pub state: State,
    pub trailer: CheckpointTrailer,
}

pub fn write_checkpoint(path: &Path, n1: usize, n2: usize, step: u64, s: &State, trailer: &CheckpointTrailer) -> Result<()> {
    let mut bytes = encode(CHECKPOINT_MAGIC, n1, n2, step, s);
    let json = serde_json::to_vec(trailer).map_err(|e| Error::config(format!("cannot encode checkpoint: {e}")))?;
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    write_atomic(path, &bytes)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = read(path)?;
    let (header, state, mut c) = decode(path, &bytes, CHECKPOINT_MAGIC)?;
    let len = c.u64()? as usize;
    let start = c.pos;
    let raw = c.take(len)?;
    let trailer = serde_json::from_slice(raw).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        offset: start + e.column(),
        msg: format!("checkpoint trailer: {e}"),
    })?;
    if c.pos != bytes.len() {
        return Err(c.fail("trailing bytes after checkpoint"));
    }
    Ok(Checkpoint { header, state, trailer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid;

    fn sample() -> (Grid, State) {
        let grid = Grid::new(2.0, 1.0, 6, 3).unwrap();
        let mut s = State::uniform(&grid, 1.2, [0.0, 0.0], 1.3);
        for k in 0..grid.n_cells() {
            s.rho[k] += (k as f64 * 0.37).sin() * 1e-3;
            s.u.c[0][k] = (k as f64).sqrt() / 7.0;
            s.u.c[1][k] = -1.0 / (k as f64 + 3.0);
            s.theta[k] = 1.0 + f64::EPSILON * k as f64;
        }
        s.t = 0.1 + 0.2;
        (grid, s)
    }

    fn bits(s: &State) -> Vec<u64> {
        s.pack().iter().map(|v| v.to_bits()).chain([s.t.to_bits()]).collect()
    }

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, s) = sample();
        let p = dir.path().join("s.bin");
        write_snapshot_bin(&p, grid.n1(), grid.n2(), 17, &s).unwrap();
        let (h, back) = read_snapshot_bin(&p).unwrap();
        assert_eq!((h.n1, h.n2, h.step), (6, 3, 17));
        assert_eq!(bits(&back), bits(&s));
        assert_eq!(read_snapshot_header(&p).unwrap(), h);
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, s) = sample();
        let p = dir.path().join("c.bin");
        let trailer = CheckpointTrailer {
            config: serde_json::json!({"n2": 3}),
            summary: serde_json::from_value(serde_json::json!({
                "step": 40, "t": 0.3, "initial_mass": 9.6,
                "range": {"rho_min": 1.0, "rho_max": 1.2, "theta_min": 1.0, "theta_max": 1.3,
                          "speed_max": 0.4, "violation": false, "samples": 41},
                "max_relative_mass_drift": 0.0, "max_budget_residual": 1e-12,
                "min_entropy_production": 0.1, "max_density_decay_ratio": -0.5,
                "halved_steps": 0, "newton_iterations": 80, "linear_iterations": 900,
                "violation_count": 0, "violations": [], "failure": null
            }))
            .unwrap(),
        };
        write_checkpoint(&p, grid.n1(), grid.n2(), 40, &s, &trailer).unwrap();
        let c = read_checkpoint(&p).unwrap();
        assert_eq!(bits(&c.state), bits(&s));
        assert_eq!(c.trailer, trailer);
        assert_eq!(c.header.step, 40);
    }

    #[test]
    fn corruption_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, s) = sample();
        let p = dir.path().join("s.bin");
        write_snapshot_bin(&p, grid.n1(), grid.n2(), 1, &s).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        match read_snapshot_bin(&p) {
            Err(Error::Parse { offset, .. }) => assert!(offset > HEADER),
            other => panic!("{other:?}"),
        }
        fs::write(&p, b"NOTMAGICxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(read_snapshot_bin(&p), Err(Error::Parse { offset: 0, .. })));
        // a snapshot is not a checkpoint
        write_snapshot_bin(&p, grid.n1(), grid.n2(), 1, &s).unwrap();
        assert!(read_checkpoint(&p).is_err());
    }
}
