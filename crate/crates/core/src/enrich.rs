//! Topological enrichment: relation records between features and
//! reference-grid cells, classic (single level) and compressed (multi-level).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::cell::CellId;
use crate::cover::{homogeneous_touching, CoverError, Covering};
use crate::sphere::{CellRelation, Shape};
use crate::wkt::{WktError, WktGeometry};

pub const DEFAULT_LEVEL: u8 = 13;

/// The topological vocabulary. `Equals` and `Disjoint` exist so callers can
/// name them, but enrichment never emits them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialRelation {
    Within,
    Contains,
    Touches,
    Overlaps,
    Crosses,
    Intersects,
    Equals,
    Disjoint,
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; 8] = [
        Self::Within,
        Self::Contains,
        Self::Touches,
        Self::Overlaps,
        Self::Crosses,
        Self::Intersects,
        Self::Equals,
        Self::Disjoint,
    ];

    pub fn local_name(self) -> &'static str {
        match self {
            Self::Within => "sfWithin",
            Self::Contains => "sfContains",
            Self::Touches => "sfTouches",
            Self::Overlaps => "sfOverlaps",
            Self::Crosses => "sfCrosses",
            Self::Intersects => "sfIntersects",
            Self::Equals => "sfEquals",
            Self::Disjoint => "sfDisjoint",
        }
    }

    /// Counterpart asserted alongside a record, if the relation has one.
    pub fn counterpart(self) -> Option<SpatialRelation> {
        match self {
            Self::Within => Some(Self::Contains),
            Self::Contains => Some(Self::Within),
            Self::Touches | Self::Overlaps => Some(self),
            _ => None,
        }
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.local_name())
    }
}

impl FromStr for SpatialRelation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.local_name() == s)
            .ok_or_else(|| format!("unknown relation {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Cell(CellId),
    Feature(String),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Cell(c) => write!(f, "s2:{}", c.token()),
            Entity::Feature(id) => f.write_str(id),
        }
    }
}

impl FromStr for Entity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("s2:") {
            Some(t) => CellId::from_token(t).map(Entity::Cell).map_err(|e| format!("{s:?}: {e}")),
            None if is_iri_safe(s) => Ok(Entity::Feature(s.to_string())),
            None => Err(format!("{s:?} is not an IRI-safe feature id")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Precomputed,
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationRecord {
    pub subject: Entity,
    pub relation: SpatialRelation,
    pub object: Entity,
    pub provenance: Provenance,
}

impl RelationRecord {
    pub fn new(subject: Entity, relation: SpatialRelation, object: Entity) -> Self {
        Self {
            subject,
            relation,
            object,
            provenance: Provenance::Precomputed,
        }
    }

    /// `subject<TAB>relation<TAB>object`
    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}", self.subject, self.relation, self.object)
    }

    /// Inverse of [`RelationRecord::to_tsv`]; an optional fourth column
    /// `inferred` marks inferred provenance.
    pub fn from_tsv(line: &str) -> Result<Self, String> {
        let cols: Vec<&str> = line.split('\t').collect();
        let (s, r, o) = match cols.as_slice() {
            [s, r, o] | [s, r, o, _] => (*s, *r, *o),
            _ => return Err(format!("expected 3 tab-separated columns, got {}", cols.len())),
        };
        let provenance = match cols.get(3) {
            None | Some(&"precomputed") => Provenance::Precomputed,
            Some(&"inferred") => Provenance::Inferred,
            Some(other) => return Err(format!("unknown provenance {other:?}")),
        };
        Ok(Self {
            subject: s.parse()?,
            relation: r.parse()?,
            object: o.parse()?,
            provenance,
        })
    }
}

/// Reads record lines, skipping blanks and `#` comments. Errors carry the
/// 1-based line number.
pub fn parse_record_lines(text: &str) -> Result<Vec<RelationRecord>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| RelationRecord::from_tsv(l).map_err(|e| (i + 1, e)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Point,
    Line,
    Area,
}

/// Usable verbatim as an IRI path segment.
pub fn is_iri_safe(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_control() || "<>\"{}|^`\\".contains(c))
}

#[derive(Debug, Clone)]
pub struct Feature {
    pub id: String,
    pub geometry: WktGeometry,
    pub shape: Shape,
}

impl Feature {
    pub fn new(id: impl Into<String>, geometry: WktGeometry, max_step: f64) -> Result<Self, EnrichError> {
        let id = id.into();
        if !is_iri_safe(&id) || id.starts_with("s2:") {
            return Err(EnrichError::InvalidId(id));
        }
        let shape = geometry.to_shape(max_step)?;
        Ok(Self { id, geometry, shape })
    }

    pub fn kind(&self) -> GeometryKind {
        match self.shape {
            Shape::Point(_) | Shape::MultiPoint(_) => GeometryKind::Point,
            Shape::Lines(_) => GeometryKind::Line,
            Shape::Polygon(_) => GeometryKind::Area,
        }
    }

    fn entity(&self) -> Entity {
        Entity::Feature(self.id.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnrichError {
    #[error("feature id {0:?} is not IRI-safe")]
    InvalidId(String),
    #[error(transparent)]
    Wkt(#[from] WktError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("compressed enrichment needs an areal feature, got {0:?}")]
    NotAreal(GeometryKind),
    #[error("invalid levels: {0}")]
    Levels(String),
}

fn pair(out: &mut Vec<RelationRecord>, a: &Entity, rel: SpatialRelation, b: &Entity) {
    out.push(RelationRecord::new(a.clone(), rel, b.clone()));
    if let Some(inv) = rel.counterpart() {
        out.push(RelationRecord::new(b.clone(), inv, a.clone()));
    }
}

fn finish(mut v: Vec<RelationRecord>) -> Vec<RelationRecord> {
    v.sort();
    v.dedup();
    v
}

/// Records for one cell given its relation to the feature.
fn cell_records(out: &mut Vec<RelationRecord>, f: &Entity, kind: GeometryKind, cell: CellId, rel: CellRelation) {
    use SpatialRelation as R;
    let c = Entity::Cell(cell);
    match rel {
        CellRelation::Disjoint => {}
        CellRelation::Touches => pair(out, f, R::Touches, &c),
        CellRelation::Overlaps => pair(out, f, R::Overlaps, &c),
        CellRelation::Crosses => out.push(RelationRecord::new(f.clone(), R::Crosses, c)),
        CellRelation::WithinCell => pair(out, f, R::Within, &c),
        CellRelation::ContainsCell => pair(out, f, R::Contains, &c),
        CellRelation::Equals => {
            pair(out, f, R::Within, &c);
            pair(out, f, R::Contains, &c);
        }
    }
    debug_assert!(kind == GeometryKind::Area || rel != CellRelation::ContainsCell);
}

/// Classic enrichment against the level-`level` reference grid.
pub fn enrich_feature(f: &Feature, level: u8) -> Result<Vec<RelationRecord>, EnrichError> {
    let fe = f.entity();
    let mut out = Vec::new();
    match &f.shape {
        Shape::Point(p) => pair(&mut out, &fe, SpatialRelation::Within, &Entity::Cell(point_cell(*p, level)?)),
        Shape::MultiPoint(ps) => {
            for p in ps {
                pair(&mut out, &fe, SpatialRelation::Within, &Entity::Cell(point_cell(*p, level)?));
            }
        }
        shape => {
            for (cell, rel) in homogeneous_touching(shape, level)? {
                cell_records(&mut out, &fe, f.kind(), cell, rel);
            }
        }
    }
    Ok(finish(out))
}

fn point_cell(p: crate::point::UnitVector, level: u8) -> Result<CellId, EnrichError> {
    CellId::from_point(p)
        .parent(level)
        .map_err(|e| EnrichError::Levels(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressedParams {
    pub min_level: u8,
    pub max_level: u8,
    /// Finest level at which overlap and touch records are emitted.
    pub boundary_level: u8,
}

impl CompressedParams {
    pub fn new(min_level: u8, max_level: u8) -> Self {
        Self {
            min_level,
            max_level,
            boundary_level: max_level,
        }
    }

    fn validate(&self) -> Result<(), EnrichError> {
        if self.min_level >= self.max_level || self.max_level > 30 {
            return Err(EnrichError::Levels(format!(
                "need min_level < max_level <= 30, got {}..{}",
                self.min_level, self.max_level
            )));
        }
        if !(self.min_level..=self.max_level).contains(&self.boundary_level) {
            return Err(EnrichError::Levels(format!(
                "boundary level {} outside {}..={}",
                self.boundary_level, self.min_level, self.max_level
            )));
        }
        Ok(())
    }
}

/// Multi-level enrichment of an areal feature. Interior cells are linked at
/// the coarsest level (at or above `min_level`) where they fit; a feature
/// inside one cell is linked to the deepest such cell; partially covered
/// cells get overlap records at every level down to `boundary_level`. The
/// level-`max_level` containment set follows from these records plus the
/// cell hierarchy by transitivity of within.
pub fn enrich_compressed(f: &Feature, params: CompressedParams) -> Result<Vec<RelationRecord>, EnrichError> {
    params.validate()?;
    if f.kind() != GeometryKind::Area {
        return Err(EnrichError::NotAreal(f.kind()));
    }
    let fe = f.entity();
    let mut out = Vec::new();
    let mut deepest_within: Option<CellId> = None;
    let mut stack: Vec<CellId> = (0..6).rev().map(CellId::from_face).collect();
    while let Some(c) = stack.pop() {
        let rel = f.shape.relate_cell(c);
        let level = c.level();
        let active = level >= params.min_level;
        match rel {
            CellRelation::Disjoint => continue,
            CellRelation::Touches => {
                if active && level <= params.boundary_level {
                    pair(&mut out, &fe, SpatialRelation::Touches, &Entity::Cell(c));
                }
                continue;
            }
            CellRelation::ContainsCell | CellRelation::Equals if active => {
                cell_records(&mut out, &fe, GeometryKind::Area, c, rel);
                continue;
            }
            CellRelation::WithinCell if active => deepest_within = Some(c),
            CellRelation::Overlaps if active && level <= params.boundary_level => {
                pair(&mut out, &fe, SpatialRelation::Overlaps, &Entity::Cell(c));
            }
            _ => {}
        }
        if level < params.max_level {
            stack.extend(c.children().expect("below max level").into_iter().rev());
        }
    }
    if let Some(c) = deepest_within {
        pair(&mut out, &fe, SpatialRelation::Within, &Entity::Cell(c));
    }
    Ok(finish(out))
}

/// One-level hierarchy records for the level-`level_hi` cells of `region`
/// (coarser cells are expanded, finer ones lifted): parent contains child,
/// child within parent, and edge-neighbour touches at both levels.
pub fn cell_hierarchy_records(level_hi: u8, level_lo: u8, region: &Covering) -> Result<Vec<RelationRecord>, EnrichError> {
    if level_lo != level_hi + 1 || level_lo > 30 {
        return Err(EnrichError::Levels(format!(
            "level_lo must be level_hi + 1 <= 30, got {level_hi}/{level_lo}"
        )));
    }
    let mut parents = BTreeSet::new();
    for &c in &region.cells {
        if c.level() >= level_hi {
            parents.insert(c.parent_unchecked(level_hi));
        } else {
            let mut k = c.child_begin(level_hi);
            while k != c.child_end(level_hi) {
                parents.insert(k);
                k = k.next();
            }
        }
    }
    let parents: Vec<CellId> = parents.into_iter().collect();
    let chunks: Vec<Vec<RelationRecord>> = parents
        .par_chunks(1024)
        .map(|chunk| {
            let mut out = Vec::new();
            for &p in chunk {
                let pe = Entity::Cell(p);
                for n in p.edge_neighbors() {
                    pair(&mut out, &pe, SpatialRelation::Touches, &Entity::Cell(n));
                }
                for k in p.children().expect("level_hi < 30") {
                    let ke = Entity::Cell(k);
                    pair(&mut out, &pe, SpatialRelation::Contains, &ke);
                    for n in k.edge_neighbors() {
                        pair(&mut out, &ke, SpatialRelation::Touches, &Entity::Cell(n));
                    }
                }
            }
            out
        })
        .collect();
    Ok(finish(chunks.into_iter().flatten().collect()))
}

/// Within/contains records linking every cell in `cells` to each ancestor
/// down to `min_level`, one level at a time.
pub fn ancestor_chain_records(cells: &[CellId], min_level: u8) -> Vec<RelationRecord> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &c in cells {
        let mut k = c;
        while k.level() > min_level && seen.insert(k) {
            let p = k.immediate_parent();
            pair(&mut out, &Entity::Cell(k), SpatialRelation::Within, &Entity::Cell(p));
            k = p;
        }
    }
    finish(out)
}

/// Enriches features in parallel; output order follows input order.
pub fn enrich_all<F>(features: &[Feature], f: F) -> Vec<Result<Vec<RelationRecord>, EnrichError>>
where
    F: Fn(&Feature) -> Result<Vec<RelationRecord>, EnrichError> + Sync,
{
    features.par_iter().map(&f).collect()
}
