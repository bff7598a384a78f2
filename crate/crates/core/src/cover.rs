//! Approximating regions by unions of cells.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::str::FromStr;

use thiserror::Error;

use crate::cell::{CellId, MAX_LEVEL};
use crate::sphere::{CellRelation, Shape};

pub const DEFAULT_MAX_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoverMode {
    #[default]
    Ordinary,
    Homogeneous,
    Interior,
}

impl FromStr for CoverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ordinary" => Ok(Self::Ordinary),
            "homogeneous" => Ok(Self::Homogeneous),
            "interior" => Ok(Self::Interior),
            other => Err(format!("unknown covering mode {other:?} (ordinary|homogeneous|interior)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoveringParams {
    pub min_level: u8,
    pub max_level: u8,
    pub max_cells: usize,
    pub mode: CoverMode,
}

impl Default for CoveringParams {
    fn default() -> Self {
        Self {
            min_level: 0,
            max_level: MAX_LEVEL,
            max_cells: DEFAULT_MAX_CELLS,
            mode: CoverMode::Ordinary,
        }
    }
}

impl CoveringParams {
    pub fn homogeneous(level: u8) -> Self {
        Self {
            min_level: level,
            max_level: level,
            max_cells: usize::MAX,
            mode: CoverMode::Homogeneous,
        }
    }

    pub fn validate(&self) -> Result<(), CoverError> {
        if self.max_level > MAX_LEVEL || self.min_level > self.max_level {
            return Err(CoverError::InvalidParams(format!(
                "need min_level <= max_level <= 30, got {}..{}",
                self.min_level, self.max_level
            )));
        }
        if self.max_cells == 0 {
            return Err(CoverError::InvalidParams("max_cells must be positive".into()));
        }
        if self.mode == CoverMode::Homogeneous && self.min_level != self.max_level {
            return Err(CoverError::InvalidParams("homogeneous mode needs min_level = max_level".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error("region is empty")]
    EmptyRegion,
    #[error("invalid covering parameters: {0}")]
    InvalidParams(String),
}

/// Sorted, non-overlapping cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Covering {
    pub cells: Vec<CellId>,
    pub params: CoveringParams,
}

impl Covering {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// True if some covering cell contains `c` (or equals it).
    pub fn contains(&self, c: CellId) -> bool {
        let i = self.cells.partition_point(|x| x.range_max() < c.range_min());
        self.cells.get(i).is_some_and(|x| x.contains(c))
    }

    /// True if some covering cell overlaps `c`'s range.
    pub fn intersects(&self, c: CellId) -> bool {
        let i = self.cells.partition_point(|x| x.range_max() < c.range_min());
        self.cells.get(i).is_some_and(|x| x.intersects(c))
    }
}

fn check_region(region: &Shape) -> Result<(), CoverError> {
    let empty = match region {
        Shape::MultiPoint(p) => p.is_empty(),
        Shape::Lines(l) => l.chains().is_empty(),
        _ => false,
    };
    if empty {
        Err(CoverError::EmptyRegion)
    } else {
        Ok(())
    }
}

/// Whether a relation puts the cell in a covering. Boundary-only contact
/// counts for points and lines (their whole extent may sit on cell edges)
/// but not for polygons, whose boundary is covered by the overlapping
/// neighbours.
fn may_intersect(region: &Shape, rel: CellRelation) -> bool {
    match rel {
        CellRelation::Disjoint => false,
        CellRelation::Touches => !region.is_areal(),
        _ => true,
    }
}

/// Drops cells contained in earlier cells and merges complete sibling sets
/// whose parent is at or above `min_level`.
pub fn normalize(mut cells: Vec<CellId>, min_level: u8) -> Vec<CellId> {
    cells.sort_unstable();
    let mut out: Vec<CellId> = Vec::with_capacity(cells.len());
    for c in cells {
        if out.last().is_some_and(|l| l.contains(c)) {
            continue;
        }
        while out.last().is_some_and(|l| c.contains(*l)) {
            out.pop();
        }
        let mut c = c;
        // merge while the last three plus `c` are the four children of one parent
        while c.level() > min_level && out.len() >= 3 {
            let p = c.immediate_parent();
            let n = out.len();
            let sibs = [out[n - 3], out[n - 2], out[n - 1], c];
            if sibs.iter().zip(p.children().unwrap()).all(|(a, b)| *a == b) {
                out.truncate(n - 3);
                c = p;
            } else {
                break;
            }
        }
        out.push(c);
    }
    out
}

/// Replaces cells coarser than `min_level` by their descendants at it.
pub fn denormalize(cells: &[CellId], min_level: u8) -> Vec<CellId> {
    let mut out = Vec::with_capacity(cells.len());
    for &c in cells {
        if c.level() < min_level {
            let mut k = c.child_begin(min_level);
            let end = c.child_end(min_level);
            while k != end {
                out.push(k);
                k = k.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

struct Candidate {
    cell: CellId,
    terminal: bool,
    children: Vec<Candidate>,
}

const MAX_CHILDREN_SHIFT: u32 = 2;

struct Coverer<'a> {
    region: &'a Shape,
    params: CoveringParams,
    interior: bool,
    result: Vec<CellId>,
    queue: BinaryHeap<(i64, Reverse<u64>, usize)>,
    store: Vec<Option<Candidate>>,
    seq: u64,
}

impl<'a> Coverer<'a> {
    fn new_candidate(&self, cell: CellId) -> Option<Candidate> {
        let rel = self.region.relate_cell(cell);
        if !may_intersect(self.region, rel) {
            return None;
        }
        let mut terminal = false;
        if cell.level() >= self.params.min_level {
            if self.interior {
                if rel.contains_cell() {
                    terminal = true;
                } else if cell.level() >= self.params.max_level {
                    return None;
                }
            } else if cell.level() >= self.params.max_level || rel.contains_cell() {
                terminal = true;
            }
        }
        Some(Candidate {
            cell,
            terminal,
            children: Vec::new(),
        })
    }

    fn expand_children(&self, cand: &mut Candidate) -> usize {
        let mut terminals = 0;
        for child in cand.cell.children().expect("candidate below max level") {
            if let Some(c) = self.new_candidate(child) {
                if c.terminal {
                    terminals += 1;
                }
                cand.children.push(c);
            }
        }
        terminals
    }

    fn add_candidate(&mut self, mut cand: Candidate) {
        if cand.terminal {
            self.result.push(cand.cell);
            return;
        }
        let terminals = self.expand_children(&mut cand);
        let n = cand.children.len();
        if n == 0 {
            return;
        }
        if !self.interior && terminals == 4 && cand.cell.level() >= self.params.min_level {
            cand.terminal = true;
            self.add_candidate(cand);
            return;
        }
        let level = cand.cell.level() as i64;
        let priority = -((((level << MAX_CHILDREN_SHIFT) + n as i64) << MAX_CHILDREN_SHIFT) + terminals as i64);
        self.store.push(Some(cand));
        self.queue.push((priority, Reverse(self.seq), self.store.len() - 1));
        self.seq += 1;
    }

    fn run(mut self) -> Vec<CellId> {
        for f in 0..6 {
            if let Some(c) = self.new_candidate(CellId::from_face(f)) {
                self.add_candidate(c);
            }
        }
        let max_cells = self.params.max_cells;
        while let Some((_, _, idx)) = self.queue.pop() {
            if self.interior && self.result.len() >= max_cells {
                break;
            }
            let cand = self.store[idx].take().expect("queued candidate");
            let pending = if self.interior { 0 } else { self.queue.len() };
            if cand.cell.level() < self.params.min_level
                || cand.children.len() == 1
                || self.result.len() + pending + cand.children.len() <= max_cells
            {
                for child in cand.children {
                    if self.interior && self.result.len() >= max_cells {
                        break;
                    }
                    self.add_candidate(child);
                }
            } else if !self.interior {
                let mut cand = cand;
                cand.terminal = true;
                cand.children.clear();
                self.add_candidate(cand);
            }
        }
        let min = self.params.min_level;
        denormalize(&normalize(self.result, min), min)
    }
}

fn greedy(region: &Shape, params: CoveringParams, interior: bool) -> Result<Covering, CoverError> {
    params.validate()?;
    check_region(region)?;
    let c = Coverer {
        region,
        params,
        interior,
        result: Vec::new(),
        queue: BinaryHeap::new(),
        store: Vec::new(),
        seq: 0,
    };
    Ok(Covering {
        cells: c.run(),
        params,
    })
}

/// Covering in the mode named by `params`. Homogeneous coverings are
/// materialized here; use [`homogeneous`] to stream them.
pub fn covering(region: &Shape, params: CoveringParams) -> Result<Covering, CoverError> {
    match params.mode {
        CoverMode::Ordinary => greedy(region, params, false),
        CoverMode::Interior => greedy(region, params, true),
        CoverMode::Homogeneous => {
            let cells = homogeneous(region, params.max_level)?.map(|(c, _)| c).collect();
            Ok(Covering { cells, params })
        }
    }
}

/// Greedy interior covering: every cell is contained in the region.
pub fn interior_covering(region: &Shape, params: CoveringParams) -> Result<Covering, CoverError> {
    greedy(region, CoveringParams { mode: CoverMode::Interior, ..params }, true)
}

/// Level-`level` cells not contained in the region but not disjoint from it.
pub fn boundary_cells(region: &Shape, level: u8) -> Result<Covering, CoverError> {
    let cells = homogeneous(region, level)?
        .filter(|(_, r)| !r.contains_cell())
        .map(|(c, _)| c)
        .collect();
    Ok(Covering {
        cells,
        params: CoveringParams::homogeneous(level),
    })
}

/// Level-`level` cells contained in the region.
pub fn interior_at_level(region: &Shape, level: u8) -> Result<Covering, CoverError> {
    let cells = homogeneous(region, level)?
        .filter(|(_, r)| r.contains_cell())
        .map(|(c, _)| c)
        .collect();
    Ok(Covering {
        cells,
        params: CoveringParams::homogeneous(level),
    })
}

enum Frame {
    Test(CellId),
    /// Contained subtree: remaining level-L descendants `next..end`.
    Range { next: CellId, end: CellId },
}

/// Streams level-`level` cells intersecting the region, in id order, with
/// their relation.
pub struct Homogeneous<'a> {
    region: &'a Shape,
    level: u8,
    keep_touches: bool,
    stack: Vec<Frame>,
}

/// Cells that intersect the region; for polygons, touch-only cells are
/// left out.
pub fn homogeneous(region: &Shape, level: u8) -> Result<Homogeneous<'_>, CoverError> {
    homogeneous_with(region, level, !region.is_areal())
}

/// Every cell whose relation is not disjoint, touch-only cells included.
pub fn homogeneous_touching(region: &Shape, level: u8) -> Result<Homogeneous<'_>, CoverError> {
    homogeneous_with(region, level, true)
}

fn homogeneous_with(region: &Shape, level: u8, keep_touches: bool) -> Result<Homogeneous<'_>, CoverError> {
    CoveringParams::homogeneous(level).validate()?;
    check_region(region)?;
    Ok(Homogeneous {
        region,
        level,
        keep_touches,
        stack: (0..6).rev().map(|f| Frame::Test(CellId::from_face(f))).collect(),
    })
}

impl Iterator for Homogeneous<'_> {
    type Item = (CellId, CellRelation);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(frame) = self.stack.pop() {
            match frame {
                Frame::Range { next, end } => {
                    let after = next.next();
                    if after != end {
                        self.stack.push(Frame::Range { next: after, end });
                    }
                    return Some((next, CellRelation::ContainsCell));
                }
                Frame::Test(c) => {
                    let rel = self.region.relate_cell(c);
                    if rel == CellRelation::Disjoint || (rel == CellRelation::Touches && !self.keep_touches) {
                        continue;
                    }
                    if c.level() == self.level {
                        return Some((c, rel));
                    }
                    if rel.contains_cell() {
                        self.stack.push(Frame::Range {
                            next: c.child_begin(self.level),
                            end: c.child_end(self.level),
                        });
                    } else {
                        for k in c.children().expect("above target level").into_iter().rev() {
                            self.stack.push(Frame::Test(k));
                        }
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latlng::LatLng;

    #[test]
    fn normalize_merges_siblings_and_drops_descendants() {
        let p = CellId::from_token("89c").unwrap();
        let mut cells: Vec<CellId> = p.children().unwrap().to_vec();
        cells.push(cells[0].children().unwrap()[2]);
        assert_eq!(normalize(cells.clone(), 0), vec![p]);
        assert_eq!(normalize(cells, p.level() + 1).len(), 4);
    }

    #[test]
    fn denormalize_expands() {
        let p = CellId::from_token("89c").unwrap();
        let d = denormalize(&[p], p.level() + 2);
        assert_eq!(d.len(), 16);
        assert!(d.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn point_covering_is_its_cell() {
        let ll = LatLng::new(34.42, -119.70).unwrap();
        let s = Shape::Point(ll.to_point());
        let c = covering(&s, CoveringParams::homogeneous(13)).unwrap();
        assert_eq!(c.cells, vec![CellId::from_latlng(ll, 13).unwrap()]);
    }

    #[test]
    fn params_validation() {
        let bad = CoveringParams {
            min_level: 5,
            max_level: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(CoveringParams { max_cells: 0, ..Default::default() }.validate().is_err());
        assert_eq!("interior".parse::<CoverMode>(), Ok(CoverMode::Interior));
    }
}
