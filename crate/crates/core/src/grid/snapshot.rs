//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                     |
//! |-------|-----------------------------|
//! | 4     | magic `PFMC`                |
//! | 4     | version (`u32`, currently 1) |
//! | 4     | dimension `d` (`u32`)       |
//! | 4     | cells per axis `n` (`u32`)  |
//! | 8     | `eps` (`f64`)               |
//! | 8     | `t` (`f64`)                 |
//! | 8 n^d | values (`f64`), row-major   |

use std::io::{Read, Write};
use std::path::Path;

use super::{ScalarField, TorusGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PFMC";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub eps: f64,
    pub t: f64,
    pub field: ScalarField,
}

pub fn write_snapshot(mut w: impl Write, field: &ScalarField, eps: f64, t: f64) -> Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * field.data.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&eps.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for v in &field.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<Snapshot> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head).map_err(|e| Error::Snapshot(format!("short header: {e}")))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let grid = TorusGrid::new(u32_at(8) as usize, u32_at(12) as usize)
        .map_err(|e| Error::Snapshot(e.to_string()))?;
    let (eps, t) = (f64_at(16), f64_at(24));
    let mut body = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut body).map_err(|e| Error::Snapshot(format!("short body: {e}")))?;
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Snapshot { eps, t, field: ScalarField::from_vec(grid, data)? })
}

pub fn save(path: &Path, field: &ScalarField, eps: f64, t: f64) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(file, field, eps, t)
}

pub fn load(path: &Path) -> Result<Snapshot> {
    read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = TorusGrid::new(2, 4).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0] + 10.0 * p[1]);
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &f, 0.04, 1.5).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 16);
        assert_eq!(&bytes[0..4], b"PFMC");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[4, 0, 0, 0]);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.04);
        // second value is cell (0, 1): x = (0, 0.25)
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), 2.5);
    }

    #[test]
    fn rejects_corrupt_input() {
        let g = TorusGrid::new(2, 4).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &ScalarField::zeros(g), 0.1, 0.0).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_snapshot(&bad[..]).is_err());
        assert!(read_snapshot(&bytes[..bytes.len() - 1]).is_err());
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(read_snapshot(&v2[..]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 64), eps in 1e-3f64..1.0, t in 0.0f64..10.0) {
            let g = TorusGrid::new(2, 8).unwrap();
            let f = ScalarField::from_vec(g, vals).unwrap();
            let mut bytes = Vec::new();
            write_snapshot(&mut bytes, &f, eps, t).unwrap();
            let s = read_snapshot(&bytes[..]).unwrap();
            proptest::prop_assert_eq!(s, Snapshot { eps, t, field: f });
        }
    }
}
