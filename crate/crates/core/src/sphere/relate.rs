//! Topological relation between a shape and a cell, and polygon∩cell area.

use super::area::triangle_area;
use super::edge::{crossing_sign, distance_to_edge, intersection, midpoint, plane_crossing};
use super::polygon::{EdgeCap, GeodesicChain, SphericalPolygon};
use super::{Location, BOUNDARY_EPS};
use crate::cell::{CellGeom, CellId};
use crate::point::UnitVector;

/// Relation of a shape to a cell, read as "shape R cell".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellRelation {
    Disjoint,
    /// Boundaries meet, interiors do not.
    Touches,
    /// Areal interiors intersect and each has parts outside the other.
    Overlaps,
    /// A line or point set passes through the cell interior and also lies outside it.
    Crosses,
    /// The shape contains the whole cell.
    ContainsCell,
    /// The shape lies within the closed cell and meets its interior.
    WithinCell,
    /// The shape is the cell.
    Equals,
}

impl CellRelation {
    pub fn intersects(self) -> bool {
        self != CellRelation::Disjoint
    }

    pub fn contains_cell(self) -> bool {
        matches!(self, CellRelation::ContainsCell | CellRelation::Equals)
    }
}

/// Overlap areas below this (in steradians) count as contact only.
pub const TOUCH_AREA_FLOOR: f64 = 1e-12;

/// Floor used for a given cell: the fixed floor, but never more than a
/// ten-thousandth of the cell so fine cells keep their overlaps.
pub fn touch_floor(cell_area: f64) -> f64 {
    TOUCH_AREA_FLOOR.min(1e-4 * cell_area)
}

/// Arcs shorter than this are treated as points.
const TINY_ARC: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct Lines {
    chains: Vec<GeodesicChain>,
    caps: Vec<EdgeCap>,
    bound: (UnitVector, f64),
}

impl Lines {
    pub fn new(chains: Vec<GeodesicChain>) -> Self {
        let caps: Vec<EdgeCap> = chains
            .iter()
            .flat_map(|c| c.edges().map(|(a, b)| EdgeCap::new(a, b)))
            .collect();
        let pts: Vec<UnitVector> = chains.iter().flat_map(|c| c.vertices.iter().copied()).collect();
        let bound = cap_of(&pts, &caps);
        Self { chains, caps, bound }
    }

    pub fn chains(&self) -> &[GeodesicChain] {
        &self.chains
    }
}

fn cap_of(points: &[UnitVector], caps: &[EdgeCap]) -> (UnitVector, f64) {
    let sum = points.iter().fold(UnitVector::default(), |a, &p| a + p);
    if sum.norm2() == 0.0 {
        return (UnitVector::new(0.0, 0.0, 1.0), std::f64::consts::PI);
    }
    let c = sum.normalize();
    let r = points
        .iter()
        .map(|&p| c.angle(p))
        .chain(caps.iter().map(|e| c.angle(e.center) + e.radius))
        .fold(0.0, f64::max);
    (c, r * (1.0 + 1e-12) + 1e-15)
}

/// A region that can be related to cells.
#[derive(Debug, Clone)]
pub enum Shape {
    Point(UnitVector),
    MultiPoint(Vec<UnitVector>),
    Lines(Lines),
    Polygon(SphericalPolygon),
}

/// Results of intersecting a polygon with a cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AreaOverlap {
    /// Area of polygon ∩ cell in steradians.
    pub area: f64,
    /// Some part of the polygon boundary lies in the open cell.
    pub poly_boundary_in_cell: bool,
    /// Some part of the cell boundary lies in the open polygon.
    pub cell_boundary_in_poly: bool,
    /// The two boundaries have at least one point in common.
    pub boundaries_meet: bool,
}

fn caps_overlap(c1: UnitVector, r1: f64, c2: UnitVector, r2: f64) -> bool {
    r1 + r2 >= std::f64::consts::PI || c1.angle(c2) <= r1 + r2 + 2.0 * BOUNDARY_EPS
}

/// Part of arc `ab` inside the closed cell, if any.
pub fn clip_to_cell(a: UnitVector, b: UnitVector, g: &CellGeom) -> Option<(UnitVector, UnitVector)> {
    let (mut p, mut q) = (a, b);
    for n in &g.normals {
        let (sp, sq) = (n.dot(p), n.dot(q));
        let (pin, qin) = (sp >= -BOUNDARY_EPS, sq >= -BOUNDARY_EPS);
        match (pin, qin) {
            (false, false) => return None,
            (true, true) => {}
            (false, true) => p = plane_crossing(p, q, *n),
            (true, false) => q = plane_crossing(p, q, *n),
        }
    }
    // Both endpoints must be on the cell's side of the sphere.
    if p.dot(g.center) <= 0.0 || q.dot(g.center) <= 0.0 {
        return None;
    }
    Some((p, q))
}

/// Index of the cell edge nearest to a boundary point.
fn nearest_edge(g: &CellGeom, m: UnitVector) -> usize {
    (0..4)
        .min_by(|&i, &j| g.normals[i].dot(m).abs().total_cmp(&g.normals[j].dot(m).abs()))
        .unwrap()
}

/// Intersects `poly` with the cell by integrating over the boundary of the
/// intersection: polygon arcs clipped to the cell plus cell-edge pieces that
/// lie inside the polygon, each as a signed triangle from the cell center.
pub fn polygon_cell_overlap(poly: &SphericalPolygon, g: &CellGeom) -> AreaOverlap {
    let (pc, pr) = poly.bound();
    if !caps_overlap(pc, pr, g.center, g.radius) {
        return AreaOverlap::default();
    }
    let near: Vec<&EdgeCap> = poly
        .edge_caps()
        .filter(|e| caps_overlap(e.center, e.radius, g.center, g.radius))
        .collect();
    let cell_area = g.exact_area();
    if near.is_empty() {
        return if poly.contains_raw(g.center) {
            AreaOverlap {
                area: cell_area,
                poly_boundary_in_cell: false,
                cell_boundary_in_poly: true,
                boundaries_meet: false,
            }
        } else {
            AreaOverlap::default()
        };
    }

    let mut out = AreaOverlap::default();
    let mut sum = 0.0;
    let o = g.center;

    for e in &near {
        let Some((p, q)) = clip_to_cell(e.a, e.b, g) else {
            continue;
        };
        out.boundaries_meet = true;
        if p.angle(q) < TINY_ARC {
            continue;
        }
        let m = midpoint(p, q);
        match g.locate(m) {
            Location::Inside => {
                out.poly_boundary_in_cell = true;
                sum += triangle_area(o, p, q);
            }
            Location::Boundary => {
                let k = nearest_edge(g, m);
                let along = g.normals[k].cross(m);
                if (q - p).dot(along) > 0.0 {
                    sum += triangle_area(o, p, q);
                }
            }
            Location::Outside => {}
        }
    }

    for k in 0..4 {
        let a = g.vertices[k];
        let b = g.vertices[(k + 1) % 4];
        let ecap = EdgeCap::new(a, b);
        let mut splits = vec![a, b];
        for e in &near {
            if !caps_overlap(e.center, e.radius, ecap.center, ecap.radius) {
                continue;
            }
            if crossing_sign(a, b, e.a, e.b) > 0 {
                splits.push(intersection(a, b, e.a, e.b));
            }
            for v in [e.a, e.b] {
                if distance_to_edge(v, a, b) <= BOUNDARY_EPS {
                    splits.push(v);
                }
            }
        }
        splits.sort_by(|x, y| a.angle(*x).total_cmp(&a.angle(*y)));
        splits.dedup();
        for w in splits.windows(2) {
            let (s, t) = (w[0], w[1]);
            if s.angle(t) < TINY_ARC {
                continue;
            }
            match poly.classify(midpoint(s, t)) {
                Location::Inside => {
                    out.cell_boundary_in_poly = true;
                    sum += triangle_area(o, s, t);
                }
                Location::Boundary => out.boundaries_meet = true,
                Location::Outside => {}
            }
        }
    }
    out.area = sum.clamp(0.0, cell_area);
    out
}

/// Fraction of the cell's area covered by `poly`, in `[0, 1]`.
pub fn overlap_fraction(poly: &SphericalPolygon, cell: CellId) -> f64 {
    let g = cell.geom();
    (polygon_cell_overlap(poly, &g).area / g.exact_area()).clamp(0.0, 1.0)
}

fn all_vertices_in(poly: &SphericalPolygon, g: &CellGeom) -> bool {
    poly.loops()
        .iter()
        .all(|l| l.vertices().iter().all(|&v| g.locate(v) != Location::Outside))
}

fn relate_polygon(poly: &SphericalPolygon, g: &CellGeom) -> CellRelation {
    let ov = polygon_cell_overlap(poly, g);
    let cell_area = g.exact_area();
    match (ov.poly_boundary_in_cell, ov.cell_boundary_in_poly) {
        (false, false) => {
            if poly.contains_raw(g.center) {
                if (poly.area() - cell_area).abs() <= 1e-9 * cell_area && all_vertices_in(poly, g) {
                    CellRelation::Equals
                } else {
                    CellRelation::ContainsCell
                }
            } else if ov.boundaries_meet {
                CellRelation::Touches
            } else {
                CellRelation::Disjoint
            }
        }
        (true, false) => {
            if all_vertices_in(poly, g) {
                CellRelation::WithinCell
            } else {
                CellRelation::Overlaps
            }
        }
        (false, true) => CellRelation::ContainsCell,
        (true, true) => {
            if ov.area < touch_floor(cell_area) {
                CellRelation::Touches
            } else {
                CellRelation::Overlaps
            }
        }
    }
}

fn relate_lines(lines: &Lines, g: &CellGeom) -> CellRelation {
    if !caps_overlap(lines.bound.0, lines.bound.1, g.center, g.radius) {
        return CellRelation::Disjoint;
    }
    let (mut interior, mut contact) = (false, false);
    for e in &lines.caps {
        if !caps_overlap(e.center, e.radius, g.center, g.radius) {
            continue;
        }
        if let Some((p, q)) = clip_to_cell(e.a, e.b, g) {
            contact = true;
            let inside = if p.angle(q) < TINY_ARC {
                g.locate(p) == Location::Inside
            } else {
                g.locate(midpoint(p, q)) == Location::Inside
                    || g.locate(p) == Location::Inside
                    || g.locate(q) == Location::Inside
            };
            if inside {
                interior = true;
                break;
            }
        }
    }
    if interior {
        let all_in = lines
            .chains
            .iter()
            .all(|c| c.vertices.iter().all(|&v| g.locate(v) != Location::Outside));
        if all_in {
            CellRelation::WithinCell
        } else {
            CellRelation::Crosses
        }
    } else if contact {
        CellRelation::Touches
    } else {
        CellRelation::Disjoint
    }
}

fn relate_points(points: &[UnitVector], g: &CellGeom) -> CellRelation {
    let locs: Vec<Location> = points.iter().map(|&p| g.locate(p)).collect();
    let inside = locs.contains(&Location::Inside);
    let outside = locs.contains(&Location::Outside);
    if inside {
        if outside {
            CellRelation::Crosses
        } else {
            CellRelation::WithinCell
        }
    } else if locs.contains(&Location::Boundary) {
        CellRelation::Touches
    } else {
        CellRelation::Disjoint
    }
}

impl Shape {
    pub fn is_areal(&self) -> bool {
        matches!(self, Shape::Polygon(_))
    }

    pub fn relate_cell(&self, cell: CellId) -> CellRelation {
        self.relate_geom(&cell.geom())
    }

    pub fn relate_geom(&self, g: &CellGeom) -> CellRelation {
        match self {
            Shape::Point(p) => relate_points(std::slice::from_ref(p), g),
            Shape::MultiPoint(ps) => relate_points(ps, g),
            Shape::Lines(l) => relate_lines(l, g),
            Shape::Polygon(p) => relate_polygon(p, g),
        }
    }

    /// Covered fraction of the cell (zero for points and lines).
    pub fn overlap_fraction(&self, cell: CellId) -> f64 {
        match self {
            Shape::Polygon(p) => overlap_fraction(p, cell),
            _ => 0.0,
        }
    }

    /// Bounding cap `(center, angular radius)`.
    pub fn bound(&self) -> (UnitVector, f64) {
        match self {
            Shape::Point(p) => (*p, 0.0),
            Shape::MultiPoint(ps) => cap_of(ps, &[]),
            Shape::Lines(l) => l.bound,
            Shape::Polygon(p) => p.bound(),
        }
    }

    /// Sample points guaranteed to lie in the shape (vertices, or for
    /// polygons, points inside), useful for seeding searches.
    pub fn vertices(&self) -> Vec<UnitVector> {
        match self {
            Shape::Point(p) => vec![*p],
            Shape::MultiPoint(ps) => ps.clone(),
            Shape::Lines(l) => l.chains.iter().flat_map(|c| c.vertices.clone()).collect(),
            Shape::Polygon(p) => p.loops().iter().flat_map(|l| l.vertices().to_vec()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latlng::LatLng;

    fn ll(lat: f64, lng: f64) -> UnitVector {
        LatLng::new(lat, lng).unwrap().to_point()
    }

    fn rect(lat0: f64, lng0: f64, lat1: f64, lng1: f64) -> SphericalPolygon {
        SphericalPolygon::new(vec![(
            vec![ll(lat0, lng0), ll(lat0, lng1), ll(lat1, lng1), ll(lat1, lng0)],
            false,
        )])
        .unwrap()
    }

    fn cell_at(lat: f64, lng: f64, level: u8) -> CellId {
        CellId::from_latlng(LatLng::new(lat, lng).unwrap(), level).unwrap()
    }

    #[test]
    fn large_polygon_contains_small_cell() {
        let p = Shape::Polygon(rect(10.0, 10.0, 20.0, 20.0));
        let c = cell_at(15.0, 15.0, 10);
        assert_eq!(p.relate_cell(c), CellRelation::ContainsCell);
        assert!((p.overlap_fraction(c) - 1.0).abs() < 1e-12);
        assert_eq!(p.relate_cell(cell_at(-15.0, 15.0, 10)), CellRelation::Disjoint);
        assert_eq!(p.overlap_fraction(cell_at(-15.0, 15.0, 10)), 0.0);
    }

    #[test]
    fn small_polygon_within_cell() {
        let p = Shape::Polygon(rect(15.0, 15.0, 15.001, 15.001));
        let c = cell_at(15.0005, 15.0005, 8);
        assert_eq!(p.relate_cell(c), CellRelation::WithinCell);
    }

    #[test]
    fn cell_polygon_equals_cell() {
        let c = cell_at(33.0, -111.0, 13);
        let s = Shape::Polygon(c.polygon());
        assert_eq!(s.relate_cell(c), CellRelation::Equals);
        for n in c.edge_neighbors() {
            assert_eq!(s.relate_cell(n), CellRelation::Touches);
        }
        for k in c.children().unwrap() {
            assert_eq!(s.relate_cell(k), CellRelation::ContainsCell);
        }
        assert_eq!(s.relate_cell(c.immediate_parent()), CellRelation::WithinCell);
    }

    #[test]
    fn point_relations() {
        let c = cell_at(33.0, -111.0, 13);
        assert_eq!(Shape::Point(c.center()).relate_cell(c), CellRelation::WithinCell);
        assert_eq!(Shape::Point(c.vertices()[0]).relate_cell(c), CellRelation::Touches);
        assert_eq!(Shape::Point(ll(0.0, 0.0)).relate_cell(c), CellRelation::Disjoint);
    }

    #[test]
    fn line_through_cell_crosses() {
        let c = cell_at(33.0, -111.0, 10);
        let ctr = LatLng::from_point(c.center());
        let line = GeodesicChain::new(vec![
            ll(ctr.lat(), ctr.lng() - 1.0),
            ll(ctr.lat(), ctr.lng() + 1.0),
        ]);
        let s = Shape::Lines(Lines::new(vec![line]));
        assert_eq!(s.relate_cell(c), CellRelation::Crosses);
    }

    #[test]
    fn line_along_edge_touches() {
        let c = cell_at(33.0, -111.0, 10);
        let v = c.vertices();
        let s = Shape::Lines(Lines::new(vec![GeodesicChain::new(vec![v[0], v[1]])]));
        assert_eq!(s.relate_cell(c), CellRelation::Touches);
    }

    #[test]
    fn fraction_of_child_cell() {
        let c = cell_at(33.0, -111.0, 12);
        let k = c.children().unwrap();
        let total: f64 = k.iter().map(|x| x.exact_area_sr()).sum();
        assert!((total / c.exact_area_sr() - 1.0).abs() < 1e-12);
        let sub = Shape::Polygon(k[0].polygon());
        let f = sub.overlap_fraction(c);
        assert!((f - k[0].exact_area_sr() / c.exact_area_sr()).abs() < 1e-9);
    }

    #[test]
    fn partial_overlap() {
        let c = cell_at(33.0, -111.0, 10);
        let ctr = LatLng::from_point(c.center());
        let p = rect(ctr.lat(), ctr.lng(), ctr.lat() + 1.0, ctr.lng() + 1.0);
        let s = Shape::Polygon(p);
        assert_eq!(s.relate_cell(c), CellRelation::Overlaps);
        let f = s.overlap_fraction(c);
        assert!(f > 0.15 && f < 0.35, "{f}");
    }
}
