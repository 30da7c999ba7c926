//! Tile point files.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "FSEGTILE"
//! 8       4     version (u32 LE)
//! 12      4     reserved, zero
//! 16      8     point count (u64 LE)
//! 24      24*n  points, each x, y, z as f64 LE
//! ```

use std::fs;
use std::path::Path;

use super::Point3D;
use crate::error::{Error, Result};

pub const TILE_MAGIC: &[u8; 8] = b"FSEGTILE";
pub const TILE_VERSION: u32 = 1;
pub const TILE_HEADER_LEN: usize = 16;
const POINT_LEN: usize = 24;

pub fn encoded_points_len(count: usize) -> usize {
    TILE_HEADER_LEN + 8 + count * POINT_LEN
}

/// Appends a complete tile record (header, count and points) to `out`.
pub fn encode_points(points: &[Point3D], out: &mut Vec<u8>) {
    out.reserve(encoded_points_len(points.len()));
    out.extend_from_slice(TILE_MAGIC);
    out.extend_from_slice(&TILE_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(points.len() as u64).to_le_bytes());
    for p in points {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
        out.extend_from_slice(&p.z.to_le_bytes());
    }
}

/// Decodes one tile record from the front of `buf`. `base` is the absolute
/// offset of `buf[0]`, used in error messages. Returns the points and the
/// number of bytes consumed.
pub fn decode_points(buf: &[u8], base: u64) -> Result<(Vec<Point3D>, usize)> {
    if buf.len() < TILE_HEADER_LEN || &buf[..8] != TILE_MAGIC {
        return Err(Error::Format(format!("missing tile header at byte {base}")));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    if version != TILE_VERSION {
        return Err(Error::Format(format!("unsupported tile version {version}")));
    }
    let mut off = TILE_HEADER_LEN;
    let count_bytes = buf.get(off..off + 8).ok_or_else(|| Error::Parse {
        offset: base + off as u64,
        message: "truncated point count".into(),
    })?;
    let count = u64::from_le_bytes(count_bytes.try_into().unwrap());
    off += 8;
    let remaining = (buf.len() - off) as u64;
    if count > remaining / POINT_LEN as u64 {
        let complete = remaining / POINT_LEN as u64;
        return Err(Error::Parse {
            offset: base + off as u64 + complete * POINT_LEN as u64,
            message: format!("truncated point data: header declares {count} points, {complete} present"),
        });
    }
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let p = Point3D::new(f(off), f(off + 8), f(off + 16));
        if !p.is_finite() {
            return Err(Error::Parse { offset: base + off as u64, message: "non-finite coordinate".into() });
        }
        points.push(p);
        off += POINT_LEN;
    }
    Ok((points, off))
}

pub fn write_tile_points(path: &Path, points: &[Point3D]) -> Result<()> {
    let mut buf = Vec::new();
    encode_points(points, &mut buf);
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_tile_points(path: &Path) -> Result<Vec<Point3D>> {
    let buf = fs::read(path)?;
    let (points, used) = decode_points(&buf, 0)?;
    if used != buf.len() {
        return Err(Error::Parse { offset: used as u64, message: "trailing bytes after point data".into() });
    }
    Ok(points)
}
