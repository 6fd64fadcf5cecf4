//! Binary snapshots of lattices and field states.
//!
//! A snapshot file is a sequence of records. Each record is
//!
//! ```text
//! magic  "DKG1"     4 bytes
//! n      u64 LE
//! h      f64 LE
//! L      f64 LE
//! t      f64 LE
//! case   u32 LE     (1..4, 0 for custom)
//! kind   u8         (0 psi, 1 phi, 2 phi_t, 3 Psi, 4 Psi_t)
//! mode   u8         (0 zero-pad, 1 periodic)
//! data   n^3 * w f64 LE, w = 8 for spinors (re/im interleaved), 1 for scalars
//! ```
//!
//! Node order is `index(i, j, k) = (i n + j) n + k`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dkg_solver::CaseId;
use crate::error::{Error, Result};
use crate::lattice::{AuxField, BoundaryMode, FieldState, FieldValue, GridSpec, Lattice};

pub const MAGIC: &[u8; 4] = b"DKG1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Psi = 0,
    Phi = 1,
    PhiT = 2,
    BigPsi = 3,
    BigPsiT = 4,
}

impl FieldKind {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => FieldKind::Psi,
            1 => FieldKind::Phi,
            2 => FieldKind::PhiT,
            3 => FieldKind::BigPsi,
            4 => FieldKind::BigPsiT,
            _ => return Err(Error::Snapshot(format!("unknown field kind {v}"))),
        })
    }

    fn words(self) -> usize {
        match self {
            FieldKind::Phi | FieldKind::PhiT => 1,
            _ => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordHeader {
    pub grid: GridSpec,
    pub t: f64,
    pub case: CaseId,
    pub kind: FieldKind,
}

pub fn write_record<T: FieldValue, W: Write>(out: &mut W, f: &Lattice<T>, t: f64, case: CaseId, kind: FieldKind) -> Result<()> {
    if kind.words() != T::WORDS {
        return Err(Error::Snapshot(format!("{kind:?} does not hold {}-word values", T::WORDS)));
    }
    let g = f.grid;
    out.write_all(MAGIC)?;
    out.write_all(&(g.n as u64).to_le_bytes())?;
    out.write_all(&g.h.to_le_bytes())?;
    out.write_all(&g.half_width.to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    out.write_all(&case.code().to_le_bytes())?;
    out.write_all(&[kind as u8, matches!(g.boundary, BoundaryMode::Periodic) as u8])?;
    let mut words = Vec::with_capacity(T::WORDS);
    for v in &f.data {
        words.clear();
        v.write_words(&mut words);
        for w in &words {
            out.write_all(&w.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

/// Reads the next record header, or `None` at end of file.
pub fn read_header<R: Read>(r: &mut R) -> Result<Option<RecordHeader>> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let n = u64::from_le_bytes(read_exact::<8, _>(r)?) as usize;
    let h = f64::from_le_bytes(read_exact::<8, _>(r)?);
    let l = f64::from_le_bytes(read_exact::<8, _>(r)?);
    let t = f64::from_le_bytes(read_exact::<8, _>(r)?);
    let case = CaseId::from_code(u32::from_le_bytes(read_exact::<4, _>(r)?))?;
    let [kind, mode] = read_exact::<2, _>(r)?;
    let boundary = if mode == 1 { BoundaryMode::Periodic } else { BoundaryMode::ZeroPad };
    let grid = GridSpec::new(n, l, boundary)?;
    if (grid.h - h).abs() > 1e-12 * h.abs().max(1.0) {
        return Err(Error::Snapshot(format!("spacing {h} inconsistent with n = {n}, L = {l}")));
    }
    Ok(Some(RecordHeader { grid, t, case, kind: FieldKind::from_u8(kind)? }))
}

pub fn read_payload<T: FieldValue, R: Read>(r: &mut R, header: &RecordHeader) -> Result<Lattice<T>> {
    if header.kind.words() != T::WORDS {
        return Err(Error::Snapshot(format!("{:?} read with wrong value type", header.kind)));
    }
    let len = header.grid.len();
    let mut bytes = vec![0u8; len * T::WORDS * 8];
    r.read_exact(&mut bytes)?;
    let words: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let data = words.chunks_exact(T::WORDS).map(T::read_words).collect();
    Lattice::from_vec(header.grid, data)
}

/// Writes every field of a state as consecutive records.
pub fn write_state(path: &Path, state: &FieldState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_record(&mut w, &state.psi, state.t, state.case, FieldKind::Psi)?;
    write_record(&mut w, &state.phi, state.t, state.case, FieldKind::Phi)?;
    write_record(&mut w, &state.phi_t, state.t, state.case, FieldKind::PhiT)?;
    if let Some(aux) = &state.aux {
        write_record(&mut w, &aux.big_psi, state.t, state.case, FieldKind::BigPsi)?;
        write_record(&mut w, &aux.big_psi_t, state.t, state.case, FieldKind::BigPsiT)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<FieldState> {
    let mut r = BufReader::new(File::open(path)?);
    let mut state: Option<FieldState> = None;
    let mut big: (Option<Lattice<_>>, Option<Lattice<_>>) = (None, None);
    while let Some(h) = read_header(&mut r)? {
        let s = state.get_or_insert_with(|| FieldState::zeros(h.grid, h.t, h.case));
        if !s.grid.same_as(&h.grid) || s.t != h.t {
            return Err(Error::Snapshot("records disagree on grid or time".into()));
        }
        match h.kind {
            FieldKind::Psi => s.psi = read_payload(&mut r, &h)?,
            FieldKind::Phi => s.phi = read_payload(&mut r, &h)?,
            FieldKind::PhiT => s.phi_t = read_payload(&mut r, &h)?,
            FieldKind::BigPsi => big.0 = Some(read_payload(&mut r, &h)?),
            FieldKind::BigPsiT => big.1 = Some(read_payload(&mut r, &h)?),
        }
    }
    let mut s = state.ok_or_else(|| Error::Snapshot("empty snapshot".into()))?;
    if let (Some(big_psi), Some(big_psi_t)) = big {
        s.aux = Some(AuxField { big_psi, big_psi_t });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{Spinor, C64};

    #[test]
    fn state_round_trip() {
        let g = GridSpec::zero_pad(17, 2.0).unwrap();
        let mut s = FieldState::zeros(g, 2.5, CaseId::III);
        s.psi = Lattice::from_fn(g, |x| Spinor::new([C64::new(x[0], x[1]), C64::new(x[2], 0.5), C64::new(-1.0, 0.0), C64::new(0.0, x[0] * x[1])]));
        s.phi = Lattice::from_fn(g, |x| x[0] + 2.0 * x[2]);
        s.phi_t = Lattice::from_fn(g, |x| x[1].sin());
        s.aux = Some(AuxField { big_psi: s.psi.scale(2.0), big_psi_t: s.psi.scale(-1.0) });
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        write_state(&p, &s).unwrap();
        let back = read_state(&p).unwrap();
        assert_eq!(back, s);
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        let rec = 4 + 8 * 4 + 4 + 2;
        assert_eq!(bytes.len(), 5 * rec + g.len() * 8 * (8 * 3 + 2));
    }

    #[test]
    fn rejects_bad_magic() {
        let mut data: &[u8] = b"XXXXrest";
        assert!(read_header(&mut data).is_err());
    }
}
