//! Little-endian binary container for stored states.
//!
//! ```text
//! offset  size  field
//!      0     4  magic: "OCMT" (dense tensor) or "OCMP" (product sum)
//!      4     4  u32 version (1)
//!      8     8  u64 M (grid points)
//!     16     8  u64 N (photons)
//!     24     1  u8 basis (0 position, 1 momentum)
//!     25     7  reserved, zero
//!     32     8  f64 dx
//!     40     8  f64 k0
//!     48        payload
//! ```
//!
//! Dense payload: `M^N` complex values as interleaved `f64` re/im, row-major
//! with the photon-1 index slowest. Product payload: `u64 R`, then per term
//! the coefficient followed by `N` factors of `M` complex values each.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::{Basis, Factor, Grid, ProductSum, Term, WaveTensor};
use crate::error::{Error, Result};

const TENSOR_MAGIC: &[u8; 4] = b"OCMT";
const PRODUCT_MAGIC: &[u8; 4] = b"OCMP";
const VERSION: u32 = 1;

/// Either kind of stored state.
#[derive(Debug, Clone, PartialEq)]
pub enum Stored {
    Tensor(WaveTensor),
    Product(ProductSum),
}

struct Header {
    magic: [u8; 4],
    grid: Grid,
    photons: usize,
    basis: Basis,
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], grid: &Grid, n: usize, basis: Basis) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.points() as u64).to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    let b: u8 = match basis {
        Basis::Position => 0,
        Basis::Momentum => 1,
    };
    w.write_all(&[b, 0, 0, 0, 0, 0, 0, 0])?;
    w.write_all(&grid.dx().to_le_bytes())?;
    w.write_all(&grid.k0().to_le_bytes())?;
    Ok(())
}

fn write_values<W: Write>(w: &mut W, values: &[C64]) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<R: Read, const K: usize>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Container("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_values<R: Read>(r: &mut R, count: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let magic = read_exact::<R, 4>(r)?;
    if &magic != TENSOR_MAGIC && &magic != PRODUCT_MAGIC {
        return Err(Error::Container(format!("unknown magic {magic:?}")));
    }
    let version = u32::from_le_bytes(read_exact::<R, 4>(r)?);
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let m = read_u64(r)? as usize;
    let n = read_u64(r)? as usize;
    let flags = read_exact::<R, 8>(r)?;
    let basis = match flags[0] {
        0 => Basis::Position,
        1 => Basis::Momentum,
        b => return Err(Error::Container(format!("unknown basis tag {b}"))),
    };
    let dx = read_f64(r)?;
    let k0 = read_f64(r)?;
    let grid = Grid::from_band_limit(m, dx, k0)?;
    Ok(Header { magic, grid, photons: n, basis })
}

pub fn write_tensor<W: Write>(w: &mut W, t: &WaveTensor) -> Result<()> {
    write_header(w, TENSOR_MAGIC, t.grid(), t.photons(), t.basis())?;
    write_values(w, t.amplitudes())
}

pub fn write_product<W: Write>(w: &mut W, p: &ProductSum) -> Result<()> {
    write_header(w, PRODUCT_MAGIC, p.grid(), p.photons(), p.basis())?;
    w.write_all(&(p.rank() as u64).to_le_bytes())?;
    for t in p.terms() {
        write_values(w, &[t.coef])?;
        for u in &t.factors {
            write_values(w, u)?;
        }
    }
    Ok(())
}

/// Reads either container kind. `cap` bounds the dense amplitude count.
pub fn read_state<R: Read>(r: &mut R, cap: usize) -> Result<Stored> {
    let h = read_header(r)?;
    let grid = h.grid.with_amplitude_cap(cap);
    let m = grid.points();
    if &h.magic == TENSOR_MAGIC {
        let len = grid.dense_len(h.photons)?;
        let amp = read_values(r, len)?;
        return Ok(Stored::Tensor(WaveTensor::from_amplitudes(grid, h.photons, h.basis, amp)?));
    }
    let rank = read_u64(r)? as usize;
    let mut seen: Vec<Factor> = Vec::new();
    let mut terms = Vec::with_capacity(rank);
    for _ in 0..rank {
        let coef = read_values(r, 1)?[0];
        let mut factors = Vec::with_capacity(h.photons);
        for _ in 0..h.photons {
            let v = read_values(r, m)?;
            // restore sharing of identical factors
            let f = match seen.iter().find(|s| bit_equal(s, &v)) {
                Some(s) => s.clone(),
                None => {
                    let f: Factor = Arc::from(v);
                    seen.push(f.clone());
                    f
                }
            };
            factors.push(f);
        }
        terms.push(Term::new(coef, factors));
    }
    Ok(Stored::Product(ProductSum::new(grid, h.photons, h.basis, terms)?))
}

fn bit_equal(a: &[C64], b: &[C64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}

pub fn save_tensor(path: impl AsRef<Path>, t: &WaveTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn save_product(path: impl AsRef<Path>, p: &ProductSum) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_product(&mut w, p)?;
    w.flush()?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>, cap: usize) -> Result<Stored> {
    let mut r = BufReader::new(File::open(path)?);
    read_state(&mut r, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_AMPLITUDE_CAP;

    fn bits(v: &[C64]) -> Vec<(u64, u64)> {
        v.iter().map(|a| (a.re.to_bits(), a.im.to_bits())).collect()
    }

    #[test]
    fn tensor_round_trip_is_bit_exact() {
        let grid = Grid::new(8, 0.3, 0.37).unwrap();
        let t = WaveTensor::from_fn(grid, 2, Basis::Momentum, |i| {
            C64::new((i[0] as f64 * 0.1).sin() / 3.0, -(i[1] as f64).sqrt() * 1e-300)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        assert_eq!(buf.len(), 48 + 64 * 16);
        assert_eq!(&buf[0..4], b"OCMT");
        match read_state(&mut buf.as_slice(), DEFAULT_AMPLITUDE_CAP).unwrap() {
            Stored::Tensor(back) => {
                assert_eq!(bits(back.amplitudes()), bits(t.amplitudes()));
                assert_eq!(back.grid().k0().to_bits(), t.grid().k0().to_bits());
                assert_eq!(back.basis(), Basis::Momentum);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn product_round_trip_is_bit_exact() {
        let grid = Grid::new(8, 0.3, 0.37).unwrap();
        let a: Factor = Arc::from((0..8).map(|j| C64::new(j as f64 / 7.0, 0.1)).collect::<Vec<_>>());
        let b: Factor = Arc::from((0..8).map(|j| C64::new(0.0, -(j as f64))).collect::<Vec<_>>());
        let p = ProductSum::new(
            grid,
            3,
            Basis::Position,
            vec![
                Term::repeated(C64::new(0.6, 0.0), a.clone(), 3),
                Term::new(C64::new(0.0, 0.8), vec![b.clone(), a, b]),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_product(&mut buf, &p).unwrap();
        match read_state(&mut buf.as_slice(), DEFAULT_AMPLITUDE_CAP).unwrap() {
            Stored::Product(back) => {
                assert_eq!(back, p);
                let f = &back.terms()[0].factors;
                assert!(Arc::ptr_eq(&f[0], &f[2]));
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let bad = b"NOPE\x01\x00\x00\x00".to_vec();
        assert!(matches!(read_state(&mut bad.as_slice(), 16), Err(Error::Container(_))));
        let grid = Grid::new(4, 0.3, 0.3).unwrap();
        let t = WaveTensor::zeros(grid, 1, Basis::Position).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_state(&mut buf.as_slice(), 16), Err(Error::Container(_))));
    }

    #[test]
    fn load_respects_cap() {
        let grid = Grid::new(8, 0.3, 0.3).unwrap();
        let t = WaveTensor::zeros(grid, 3, Basis::Position).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        assert!(matches!(read_state(&mut buf.as_slice(), 100), Err(Error::MemoryCap { .. })));
    }
}
