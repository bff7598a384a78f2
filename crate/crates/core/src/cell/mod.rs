//! 64-bit cell identifiers on the cube-face Hilbert curve.
//!
//! Layout: 3 face bits, then up to 60 bits of Hilbert position (2 per
//! level), then a single trailing 1 bit whose position encodes the level.

pub mod coords;
mod geom;
pub mod hilbert;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use coords::{MAX_LEVEL, MAX_SIZE};
pub use geom::{average_area_km2, CellGeom, EARTH_RADIUS_KM};

use crate::latlng::LatLng;
use crate::point::UnitVector;
use coords::*;
use hilbert::{tables, INVERT_MASK, LOOKUP_BITS, SWAP_MASK};

const POS_BITS: u32 = 2 * MAX_LEVEL as u32 + 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("invalid level {0}")]
    InvalidLevel(i64),
    #[error("requested level {requested} is finer than cell level {actual}")]
    LevelBelowCell { requested: u8, actual: u8 },
    #[error("leaf cell has no children")]
    Leaf,
    #[error("invalid cell id {0}")]
    InvalidId(u64),
    #[error("malformed cell token {0:?}")]
    MalformedToken(String),
    #[error("coordinate out of range: lat {lat}, lng {lng}")]
    LatLngOutOfRange { lat: f64, lng: f64 },
}

/// Leaf-level coordinates of a cell together with its Hilbert orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaceIJ {
    pub face: u8,
    pub i: u32,
    pub j: u32,
    pub orientation: u8,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CellId(u64);

fn lsb_for_level(level: u8) -> u64 {
    1u64 << (2 * (MAX_LEVEL - level) as u32)
}

fn check_level(level: u8) -> Result<(), CellError> {
    if level > MAX_LEVEL {
        Err(CellError::InvalidLevel(level as i64))
    } else {
        Ok(())
    }
}

impl CellId {
    /// Wraps a raw id, rejecting anything that is not a valid cell.
    pub fn new(raw: u64) -> Result<Self, CellError> {
        let c = CellId(raw);
        if c.is_valid() {
            Ok(c)
        } else {
            Err(CellError::InvalidId(raw))
        }
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn is_valid(self) -> bool {
        self.0 != 0 && (self.0 >> POS_BITS) < 6 && (self.lsb() & 0x1555_5555_5555_5555) != 0
    }

    pub fn from_face(face: u8) -> Self {
        CellId(((face as u64) << POS_BITS) + lsb_for_level(0))
    }

    pub fn face(self) -> u8 {
        (self.0 >> POS_BITS) as u8
    }

    pub fn lsb(self) -> u64 {
        self.0 & self.0.wrapping_neg()
    }

    pub fn level(self) -> u8 {
        MAX_LEVEL - (self.0.trailing_zeros() / 2) as u8
    }

    pub fn is_leaf(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn is_face(self) -> bool {
        self.0 & (lsb_for_level(0) - 1) == 0
    }

    pub fn range_min(self) -> CellId {
        CellId(self.0 - (self.lsb() - 1))
    }

    pub fn range_max(self) -> CellId {
        CellId(self.0 + (self.lsb() - 1))
    }

    /// True if `other` is `self` or one of its descendants.
    pub fn contains(self, other: CellId) -> bool {
        other >= self.range_min() && other <= self.range_max()
    }

    pub fn intersects(self, other: CellId) -> bool {
        other.range_min() <= self.range_max() && other.range_max() >= self.range_min()
    }

    pub fn parent(self, level: u8) -> Result<CellId, CellError> {
        check_level(level)?;
        if level > self.level() {
            return Err(CellError::LevelBelowCell {
                requested: level,
                actual: self.level(),
            });
        }
        Ok(self.parent_unchecked(level))
    }

    /// Ancestor at `level`; caller guarantees `level <= self.level()`.
    pub fn parent_unchecked(self, level: u8) -> CellId {
        let lsb = lsb_for_level(level);
        CellId((self.0 & lsb.wrapping_neg()) | lsb)
    }

    /// Immediate parent; caller guarantees `self` is not a face.
    pub fn immediate_parent(self) -> CellId {
        let lsb = self.lsb() << 2;
        CellId((self.0 & lsb.wrapping_neg()) | lsb)
    }

    pub fn children(self) -> Result<[CellId; 4], CellError> {
        if self.is_leaf() {
            return Err(CellError::Leaf);
        }
        let step = self.lsb() >> 2;
        let r = self.0;
        Ok([
            CellId(r - 3 * step),
            CellId(r - step),
            CellId(r + step),
            CellId(r + 3 * step),
        ])
    }

    /// First descendant at `level` in Hilbert order.
    pub fn child_begin(self, level: u8) -> CellId {
        CellId(self.0 - self.lsb() + lsb_for_level(level))
    }

    /// One past the last descendant at `level` (use with `next`).
    pub fn child_end(self, level: u8) -> CellId {
        CellId(self.0.wrapping_add(self.lsb()).wrapping_add(lsb_for_level(level)))
    }

    /// Next cell at the same level along the curve (may run off the last face).
    pub fn next(self) -> CellId {
        CellId(self.0.wrapping_add(self.lsb() << 1))
    }

    /// Leaf cell for face and leaf coordinates.
    pub fn from_face_ij(face: u8, i: i64, j: i64) -> CellId {
        let t = tables();
        let mut n = (face as u64) << (POS_BITS - 1);
        let mut bits = (face as u32) & SWAP_MASK;
        let mask = (1u32 << LOOKUP_BITS) - 1;
        let (i, j) = (i as u32, j as u32);
        for k in (0..8).rev() {
            bits += ((i >> (k * LOOKUP_BITS)) & mask) << (LOOKUP_BITS + 2);
            bits += ((j >> (k * LOOKUP_BITS)) & mask) << 2;
            bits = t.pos[bits as usize] as u32;
            n |= ((bits >> 2) as u64) << (k * 2 * LOOKUP_BITS);
            bits &= SWAP_MASK | INVERT_MASK;
        }
        CellId(n * 2 + 1)
    }

    /// Leaf coordinates of the cell's reference leaf plus orientation.
    pub fn to_face_ij(self) -> FaceIJ {
        let t = tables();
        let (mut i, mut j) = (0u32, 0u32);
        let face = self.face();
        let mut bits = (face as u32) & SWAP_MASK;
        for k in (0..8u32).rev() {
            let nbits = if k == 7 {
                MAX_LEVEL as u32 - 7 * LOOKUP_BITS
            } else {
                LOOKUP_BITS
            };
            bits += (((self.0 >> (k * 2 * LOOKUP_BITS + 1)) as u32) & ((1 << (2 * nbits)) - 1)) << 2;
            bits = t.ij[bits as usize] as u32;
            i += (bits >> (LOOKUP_BITS + 2)) << (k * LOOKUP_BITS);
            j += ((bits >> 2) & ((1 << LOOKUP_BITS) - 1)) << (k * LOOKUP_BITS);
            bits &= SWAP_MASK | INVERT_MASK;
        }
        if self.lsb() & 0x1111_1111_1111_1110 != 0 {
            bits ^= SWAP_MASK;
        }
        FaceIJ {
            face,
            i,
            j,
            orientation: bits as u8,
        }
    }

    pub fn from_face_ij_struct(f: FaceIJ) -> CellId {
        Self::from_face_ij(f.face, f.i as i64, f.j as i64)
    }

    pub fn from_point(p: UnitVector) -> CellId {
        let (face, u, v) = xyz_to_face_uv(p);
        Self::from_face_ij(face, st_to_ij(uv_to_st(u)), st_to_ij(uv_to_st(v)))
    }

    pub fn from_latlng(p: LatLng, level: u8) -> Result<CellId, CellError> {
        check_level(level)?;
        Ok(Self::from_point(p.to_point()).parent_unchecked(level))
    }

    /// Center in (si, ti) half-leaf units.
    fn center_siti(self) -> (u8, i64, i64) {
        let f = self.to_face_ij();
        let delta = if self.is_leaf() {
            1
        } else if ((f.i as i64) ^ ((self.0 as i64) >> 2)) & 1 != 0 {
            2
        } else {
            0
        };
        (f.face, 2 * f.i as i64 + delta, 2 * f.j as i64 + delta)
    }

    /// Unit vector at the cell's (s, t) center.
    pub fn center(self) -> UnitVector {
        let (face, si, ti) = self.center_siti();
        face_uv_to_xyz(face, st_to_uv(siti_to_st(si)), st_to_uv(siti_to_st(ti))).normalize()
    }

    pub fn center_latlng(self) -> LatLng {
        LatLng::from_point(self.center())
    }

    /// Leaf-coordinate bounds `[i0, i1) x [j0, j1)`.
    pub fn ij_bounds(self) -> (u8, i64, i64, i64, i64) {
        let f = self.to_face_ij();
        let size = 1i64 << (MAX_LEVEL - self.level());
        let i0 = f.i as i64 & -size;
        let j0 = f.j as i64 & -size;
        (f.face, i0, i0 + size, j0, j0 + size)
    }

    /// Bounds in (u, v): `(face, [u0, u1], [v0, v1])`.
    pub fn uv_bounds(self) -> (u8, [f64; 2], [f64; 2]) {
        let (face, i0, i1, j0, j1) = self.ij_bounds();
        (
            face,
            [st_to_uv(ij_to_st_min(i0)), st_to_uv(ij_to_st_min(i1))],
            [st_to_uv(ij_to_st_min(j0)), st_to_uv(ij_to_st_min(j1))],
        )
    }

    /// Same-level edge neighbors in the order down, right, up, left.
    pub fn edge_neighbors(self) -> [CellId; 4] {
        let level = self.level();
        let size = 1i64 << (MAX_LEVEL - level);
        let f = self.to_face_ij();
        let (face, i, j) = (f.face, f.i as i64, f.j as i64);
        let pick = |ii: i64, jj: i64, same: bool| {
            if same {
                Self::from_face_ij(face, ii, jj)
            } else {
                Self::from_face_ij_wrap(face, ii, jj)
            }
            .parent_unchecked(level)
        };
        [
            pick(i, j - size, j - size >= 0),
            pick(i + size, j, i + size < MAX_SIZE),
            pick(i, j + size, j + size < MAX_SIZE),
            pick(i - size, j, i - size >= 0),
        ]
    }

    /// Leaf just across a face edge from leaf coordinates that fall one step
    /// outside the face.
    fn from_face_ij_wrap(face: u8, i: i64, j: i64) -> CellId {
        let i = i.clamp(-1, MAX_SIZE);
        let j = j.clamp(-1, MAX_SIZE);
        let scale = 1.0 / MAX_SIZE as f64;
        let limit = 1.0 + f64::EPSILON;
        let u = (scale * (2 * (i - MAX_SIZE / 2) + 1) as f64).clamp(-limit, limit);
        let v = (scale * (2 * (j - MAX_SIZE / 2) + 1) as f64).clamp(-limit, limit);
        let (nf, nu, nv) = xyz_to_face_uv(face_uv_to_xyz(face, u, v));
        Self::from_face_ij(nf, st_to_ij(0.5 * (nu + 1.0)), st_to_ij(0.5 * (nv + 1.0)))
    }

    /// Lowercase hex with trailing zeros stripped.
    pub fn token(self) -> String {
        if self.0 == 0 {
            return "X".to_string();
        }
        let s = format!("{:016x}", self.0);
        s.trim_end_matches('0').to_string()
    }

    pub fn from_token(t: &str) -> Result<CellId, CellError> {
        let bad = || CellError::MalformedToken(t.to_string());
        if t.is_empty() || t.len() > 16 || !t.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let raw = u64::from_str_radix(t, 16).map_err(|_| bad())? << (4 * (16 - t.len()));
        let c = CellId(raw);
        if c.is_valid() {
            Ok(c)
        } else {
            Err(bad())
        }
    }

    /// Parses either a decimal id or a hex token. A string of decimal digits
    /// is read as an id only if it is longer than a token can be.
    pub fn parse_any(s: &str) -> Result<CellId, CellError> {
        let s = s.trim();
        if s.len() > 16 && s.bytes().all(|b| b.is_ascii_digit()) {
            let raw: u64 = s.parse().map_err(|_| CellError::MalformedToken(s.to_string()))?;
            return CellId::new(raw);
        }
        CellId::from_token(s)
    }
}

impl fmt::Debug for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CellId({})", self.token())
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for CellId {
    type Err = CellError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CellId::parse_any(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(t: &str) -> CellId {
        CellId::from_token(t).unwrap()
    }

    #[test]
    fn id_2_pow_53_times_1000_is_token_7d() {
        let c = CellId::new(9_007_199_254_740_992_000).unwrap();
        assert_eq!(9_007_199_254_740_992_000u64, 125u64 << 56);
        assert_eq!(c.token(), "7d");
        assert_eq!(c.face(), 3);
        assert_eq!(c.level(), 2);
    }

    #[test]
    fn token_9_is_face_4() {
        let c = tok("9");
        assert_eq!((c.face(), c.level()), (4, 0));
        assert!(c.is_face());
    }

    #[test]
    fn validity() {
        assert!(!CellId(0).is_valid());
        assert!(!CellId(7u64 << 61 | 1 << 60).is_valid());
        // lowest set bit at odd position
        assert!(!CellId(0x1000_0000_0000_0002).is_valid());
        assert!(CellId(1).is_valid());
        assert!(CellId::from_token("zz").is_err());
        assert!(CellId::from_token("").is_err());
        assert!(CellId::from_token("e").is_err());
    }

    #[test]
    fn florida_children() {
        let kids = tok("88c").children().unwrap().map(|c| c.token());
        assert_eq!(kids, ["889", "88b", "88d", "88f"]);
        assert_eq!(tok("889").parent(3).unwrap(), tok("88c"));
        assert!(tok("88c").parent(4).is_err());
        let leaf = CellId::from_face_ij(0, 5, 5);
        assert_eq!(leaf.children(), Err(CellError::Leaf));
    }

    #[test]
    fn child_range_walk() {
        let c = tok("88c");
        let mut n = 0;
        let mut x = c.child_begin(5);
        while x != c.child_end(5) {
            assert_eq!(x.level(), 5);
            assert!(c.contains(x));
            x = x.next();
            n += 1;
        }
        assert_eq!(n, 16);
    }

    #[test]
    fn face_ij_leaf_round_trip_corners() {
        for face in 0..6u8 {
            for &(i, j) in &[(0, 0), (MAX_SIZE - 1, 0), (0, MAX_SIZE - 1), (12345, 987654321)] {
                let c = CellId::from_face_ij(face, i, j);
                let f = c.to_face_ij();
                assert_eq!((f.face, f.i as i64, f.j as i64), (face, i, j));
            }
        }
    }

    #[test]
    fn interior_neighbors_offset_by_one() {
        let c = CellId::from_face_ij(1, 1 << 20, 1 << 21).parent_unchecked(10);
        let (_, i0, _, j0, _) = c.ij_bounds();
        let size = 1i64 << 20;
        let expect = [(i0, j0 - size), (i0 + size, j0), (i0, j0 + size), (i0 - size, j0)];
        for (n, (ei, ej)) in c.edge_neighbors().iter().zip(expect) {
            let (f, ni, _, nj, _) = n.ij_bounds();
            assert_eq!((f, ni, nj), (1, ei, ej));
        }
    }

    #[test]
    fn face_neighbors_cross_faces() {
        let n = CellId::from_face(0).edge_neighbors();
        let faces: Vec<u8> = n.iter().map(|c| c.face()).collect();
        assert_eq!(faces, vec![5, 1, 2, 4]);
    }

    #[test]
    fn parse_any_accepts_ids_and_tokens() {
        assert_eq!(CellId::parse_any("9007199254740992000").unwrap().token(), "7d");
        assert_eq!(CellId::parse_any("7d").unwrap().raw(), 9_007_199_254_740_992_000);
    }
}
