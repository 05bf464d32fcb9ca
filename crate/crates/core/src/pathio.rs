//! Compact binary encoding of lattice paths for replay across implementations.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"LRWP"`                         |
//! | 4      | 2    | format version (`1`)                    |
//! | 6      | 2    | flags; bit 0 set for loop-erased paths  |
//! | 8      | 8    | mesh `m` as IEEE-754 `f64`              |
//! | 16     | 24   | start point `x, y, z` as `i64`          |
//! | 40     | 8    | number of steps `n` as `u64`            |
//! | 48     | ⌈3n/8⌉ | packed step codes                     |
//!
//! Each step is a 3-bit code, bits 0-1 the axis (0 = x, 1 = y, 2 = z) and
//! bit 2 the sign (1 = negative). Code `k` occupies bits `3k .. 3k + 3` of
//! the body read as a little-endian bit stream (LSB of byte 0 first).

use crate::error::{Error, Result};
use crate::geometry::LatticePoint;

pub const MAGIC: &[u8; 4] = b"LRWP";
pub const VERSION: u16 = 1;
pub const FLAG_LOOP_ERASED: u16 = 1;
const HEADER_LEN: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPath {
    pub points: Vec<LatticePoint>,
    pub mesh: f64,
    pub loop_erased: bool,
}

fn step_code(dir: usize) -> u8 {
    ((dir / 2) | ((dir % 2) << 2)) as u8
}

fn code_dir(code: u8) -> Option<usize> {
    let axis = (code & 0b11) as usize;
    let neg = ((code >> 2) & 1) as usize;
    (axis < 3).then_some(2 * axis + neg)
}

pub fn encode_path(points: &[LatticePoint], mesh: f64, loop_erased: bool) -> Result<Vec<u8>> {
    let start = *points.first().ok_or_else(|| Error::PathFormat("empty path".into()))?;
    let steps = points.len() - 1;
    let mut out = Vec::with_capacity(HEADER_LEN + (3 * steps).div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if loop_erased { FLAG_LOOP_ERASED } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&mesh.to_le_bytes());
    for c in start.as_array() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&(steps as u64).to_le_bytes());
    let mut body = vec![0u8; (3 * steps).div_ceil(8)];
    for (k, w) in points.windows(2).enumerate() {
        let dir = w[0]
            .direction_to(w[1])
            .ok_or_else(|| Error::PathFormat(format!("step {k} is not a unit step")))?;
        let code = step_code(dir) as u16;
        let bit = 3 * k;
        let (byte, shift) = (bit / 8, bit % 8);
        let spread = code << shift;
        body[byte] |= spread as u8;
        if shift > 5 {
            body[byte + 1] |= (spread >> 8) as u8;
        }
    }
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn decode_path(bytes: &[u8]) -> Result<EncodedPath> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::PathFormat("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::PathFormat("bad magic".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::PathFormat(format!("unsupported version {version}")));
    }
    let flags = u16_at(6);
    let mesh = f64::from_bits(u64_at(8));
    let start = LatticePoint::new(u64_at(16) as i64, u64_at(24) as i64, u64_at(32) as i64);
    let steps = u64_at(40) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != (3 * steps).div_ceil(8) {
        return Err(Error::PathFormat(format!(
            "body has {} bytes, expected {} for {steps} steps",
            body.len(),
            (3 * steps).div_ceil(8)
        )));
    }
    let mut points = Vec::with_capacity(steps + 1);
    let mut p = start;
    points.push(p);
    for k in 0..steps {
        let bit = 3 * k;
        let (byte, shift) = (bit / 8, bit % 8);
        let mut word = body[byte] as u16;
        if byte + 1 < body.len() {
            word |= (body[byte + 1] as u16) << 8;
        }
        let code = ((word >> shift) & 0b111) as u8;
        let dir = code_dir(code).ok_or_else(|| Error::PathFormat(format!("invalid step code {code} at {k}")))?;
        p = p.step(dir);
        points.push(p);
    }
    Ok(EncodedPath { points, mesh, loop_erased: flags & FLAG_LOOP_ERASED != 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BallDomain;
    use crate::loop_erasure::lerw_sample;
    use crate::rng::SeedSpec;
    use crate::walk::srw_until_exit;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let pts = vec![LatticePoint::new(1, -2, 3), LatticePoint::new(1, -2, 2)];
        let bytes = encode_path(&pts, 16.0, true).unwrap();
        assert_eq!(&bytes[0..4], b"LRWP");
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 1);
        assert_eq!(bytes.len(), 49);
        // -z: axis 2, negative
        assert_eq!(bytes[48], 0b110);
    }

    #[test]
    fn rejects_non_unit_steps() {
        let pts = vec![LatticePoint::ORIGIN, LatticePoint::new(2, 0, 0)];
        assert!(encode_path(&pts, 1.0, false).is_err());
    }

    #[test]
    fn sampled_paths_round_trip() {
        let d = BallDomain::new(12.0);
        let walk = srw_until_exit(&d, LatticePoint::ORIGIN, SeedSpec::new(5, 1)).unwrap();
        let dec = decode_path(&encode_path(&walk.points, 12.0, false).unwrap()).unwrap();
        assert_eq!(dec.points, walk.points);
        assert!(!dec.loop_erased);
        let sap = lerw_sample(&d, SeedSpec::new(5, 2));
        let dec = decode_path(&encode_path(&sap.points, sap.mesh, true).unwrap()).unwrap();
        assert_eq!(dec.points, sap.points);
        assert!(dec.loop_erased);
    }

    proptest! {
        #[test]
        fn arbitrary_step_sequences_round_trip(dirs in proptest::collection::vec(0usize..6, 0..200), sx in -50i64..50) {
            let mut p = LatticePoint::new(sx, 0, -sx);
            let mut pts = vec![p];
            for d in dirs {
                p = p.step(d);
                pts.push(p);
            }
            let dec = decode_path(&encode_path(&pts, 3.5, false).unwrap()).unwrap();
            prop_assert_eq!(dec.points, pts);
            prop_assert_eq!(dec.mesh, 3.5);
        }
    }
}
