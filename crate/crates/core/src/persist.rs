//! Binary model snapshots.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "IDSX"            magic, 4 bytes
//! u16               format version (1)
//! u32               plane count N
//! f64 f64 u32       pulse: v0, t0, steps
//! f64 × 5           readout: v_in, v_dd, r_res, r_x, delta_threshold
//! f64               epsilon_weight
//! N × plane block   see `Plane::write_snapshot`
//! u32               CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! Loading verifies the checksum before decoding anything, so a damaged
//! file never yields a partially populated model.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::alm::Model;
use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::readout::ReadoutConfig;
use crate::spreading::PulseSpec;

pub const MAGIC: &[u8; 4] = b"IDSX";
pub const VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 4;

pub fn encode(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    // Writes into a Vec cannot fail.
    out.write_u16::<LittleEndian>(VERSION).unwrap();
    out.write_u32::<LittleEndian>(model.planes().len() as u32).unwrap();
    let p = &model.pulse;
    out.write_f64::<LittleEndian>(p.v0).unwrap();
    out.write_f64::<LittleEndian>(p.t0).unwrap();
    out.write_u32::<LittleEndian>(p.steps as u32).unwrap();
    let r = &model.readout;
    for v in [r.v_in, r.v_dd, r.r_res, r.r_x, r.delta_threshold, model.epsilon_weight] {
        out.write_f64::<LittleEndian>(v).unwrap();
    }
    for plane in model.planes() {
        plane.write_snapshot(&mut out).unwrap();
    }
    let crc = crc32fast::hash(&out);
    out.write_u32::<LittleEndian>(crc).unwrap();
    out
}

pub fn decode(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::CorruptState(format!(
            "file is {} bytes, too short for a header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptState("bad magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::CorruptState(format!(
            "checksum mismatch: stored {stored:08x}, computed {actual:08x}"
        )));
    }

    let mut cur = Cursor::new(&body[4..]);
    let trunc = |e: std::io::Error| Error::CorruptState(format!("truncated: {e}"));
    let version = cur.read_u16::<LittleEndian>().map_err(trunc)?;
    if version != VERSION {
        return Err(Error::CorruptState(format!(
            "unsupported version {version} (expected {VERSION})"
        )));
    }
    let n = cur.read_u32::<LittleEndian>().map_err(trunc)? as usize;
    let v0 = cur.read_f64::<LittleEndian>().map_err(trunc)?;
    let t0 = cur.read_f64::<LittleEndian>().map_err(trunc)?;
    let steps = cur.read_u32::<LittleEndian>().map_err(trunc)? as usize;
    let mut f = [0.0; 6];
    for v in f.iter_mut() {
        *v = cur.read_f64::<LittleEndian>().map_err(trunc)?;
    }
    let readout = ReadoutConfig {
        v_in: f[0],
        v_dd: f[1],
        r_res: f[2],
        r_x: f[3],
        delta_threshold: f[4],
    };
    let mut planes = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        planes.push(Plane::read_snapshot(&mut cur)?);
    }
    let mut rest = Vec::new();
    cur.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::CorruptState(format!(
            "{} unexpected trailing bytes",
            rest.len()
        )));
    }
    let pulse = PulseSpec { v0, t0, steps };
    Model::new(planes, readout, pulse, f[5]).map_err(|e| Error::CorruptState(e.to_string()))
}

/// Writes through a temporary sibling file so readers never see a torn file.
pub fn save(model: &Model, path: &Path) -> Result<()> {
    let bytes = encode(model);
    let tmp = path.with_extension("idsx.tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    decode(&fs::read(path)?)
}
