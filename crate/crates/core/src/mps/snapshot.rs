//! Versioned little-endian binary container for `SymmetricMps`.
//!
//! Layout: magic `DLMPS`, format version (u8), local space (u8 tag, two u32
//! parameters), site count (u64), then every bond as a sector list
//! (charge i32 x2, length u32, f64 values) and every site as a block list
//! (left charge i32 x2, occupation u32, right charge i32 x2, rows u32,
//! cols u32, row-major complex entries as f64 pairs).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use faer::Mat;

use super::charge::{Charge, LocalSpace, SpaceKind};
use super::state::{Bond, Sector, SiteTensor, SymmetricMps};
use crate::error::{Error, Result};
use crate::linalg::C64;

const MAGIC: &[u8; 5] = b"DLMPS";
pub const FORMAT_VERSION: u8 = 1;

fn put_u32(w: &mut impl Write, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_i32(w: &mut impl Write, x: i32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, x: f64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(get(r)?))
}

fn get_i32(r: &mut impl Read) -> Result<i32> {
    Ok(i32::from_le_bytes(get(r)?))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(get(r)?))
}

fn put_charge(w: &mut impl Write, c: Charge) -> Result<()> {
    put_i32(w, c.0[0])?;
    put_i32(w, c.0[1])
}

fn get_charge(r: &mut impl Read) -> Result<Charge> {
    Ok(Charge([get_i32(r)?, get_i32(r)?]))
}

fn corrupt(msg: &str) -> Error {
    Error::Io(format!("malformed snapshot: {msg}"))
}

pub fn write_snapshot(psi: &SymmetricMps, w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    let (tag, a, b) = match psi.space.kind() {
        SpaceKind::Bosons { n_max } => (0u8, n_max as u32, 0),
        SpaceKind::TwoSpecies { cap_a, cap_b } => (1, cap_a as u32, cap_b as u32),
        SpaceKind::HardCore => (2, 0, 0),
        SpaceKind::DefectRegister => (3, 0, 0),
    };
    w.write_all(&[tag])?;
    put_u32(w, a)?;
    put_u32(w, b)?;
    w.write_all(&(psi.len() as u64).to_le_bytes())?;
    for bond in &psi.bonds {
        put_u32(w, bond.sectors.len() as u32)?;
        for s in &bond.sectors {
            put_charge(w, s.charge)?;
            put_u32(w, s.lambda.len() as u32)?;
            for &x in &s.lambda {
                put_f64(w, x)?;
            }
        }
    }
    for site in &psi.sites {
        put_u32(w, site.blocks.len() as u32)?;
        for (&(ql, s), m) in &site.blocks {
            put_charge(w, ql)?;
            put_u32(w, s as u32)?;
            put_charge(w, ql + psi.space.charge(s))?;
            put_u32(w, m.nrows() as u32)?;
            put_u32(w, m.ncols() as u32)?;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    put_f64(w, m[(i, j)].re)?;
                    put_f64(w, m[(i, j)].im)?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read) -> Result<SymmetricMps> {
    let magic: [u8; 5] = get(r)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let [version] = get::<1>(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Io(format!("unsupported snapshot version {version}")));
    }
    let [tag] = get::<1>(r)?;
    let (a, b) = (get_u32(r)? as usize, get_u32(r)? as usize);
    let kind = match tag {
        0 => SpaceKind::Bosons { n_max: a },
        1 => SpaceKind::TwoSpecies { cap_a: a, cap_b: b },
        2 => SpaceKind::HardCore,
        3 => SpaceKind::DefectRegister,
        _ => return Err(corrupt("unknown local space")),
    };
    let space = LocalSpace::new(kind);
    let len = u64::from_le_bytes(get(r)?) as usize;
    if len == 0 || len > 1 << 24 {
        return Err(corrupt("implausible length"));
    }
    let mut bonds = Vec::with_capacity(len + 1);
    for _ in 0..=len {
        let n = get_u32(r)? as usize;
        let mut sectors = Vec::with_capacity(n);
        for _ in 0..n {
            let charge = get_charge(r)?;
            let k = get_u32(r)? as usize;
            let lambda = (0..k).map(|_| get_f64(r)).collect::<Result<Vec<_>>>()?;
            sectors.push(Sector { charge, lambda });
        }
        if !sectors.windows(2).all(|w| w[0].charge < w[1].charge) {
            return Err(corrupt("bond sectors not sorted"));
        }
        bonds.push(Bond { sectors });
    }
    let mut sites = Vec::with_capacity(len);
    for i in 0..len {
        let n = get_u32(r)? as usize;
        let mut blocks = BTreeMap::new();
        for _ in 0..n {
            let ql = get_charge(r)?;
            let s = get_u32(r)? as usize;
            let qr = get_charge(r)?;
            let (rows, cols) = (get_u32(r)? as usize, get_u32(r)? as usize);
            if s >= space.dim() || ql + space.charge(s) != qr {
                return Err(corrupt("block charges inconsistent with occupation"));
            }
            if bonds[i].sector_dim(ql) != rows || bonds[i + 1].sector_dim(qr) != cols {
                return Err(corrupt("block shape inconsistent with bond"));
            }
            let mut vals = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                vals.push(C64::new(get_f64(r)?, get_f64(r)?));
            }
            blocks.insert((ql, s), Mat::from_fn(rows, cols, |i, j| vals[i * cols + j]));
        }
        sites.push(SiteTensor { blocks });
    }
    Ok(SymmetricMps { space, sites, bonds })
}
