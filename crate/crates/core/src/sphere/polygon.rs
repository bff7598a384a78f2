//! Geodesic chains and polygons built from them.

use super::area::loop_area;
use super::edge::{crossing_sign, distance_to_edge, edge_or_vertex_crossing, midpoint};
use super::predicates::ordered_ccw;
use super::{GeomError, Location, BOUNDARY_EPS};
use crate::point::UnitVector;

/// Reference point for crossing-parity tests. Chosen to be unlikely to lie
/// on any edge a real dataset produces.
#[allow(clippy::excessive_precision)]
pub fn origin() -> UnitVector {
    UnitVector::new(
        -0.009_999_466_435_025_019_7,
        0.002_592_454_260_932_412_1,
        0.999_946_643_502_501_95,
    )
}

/// Ordered vertices joined by geodesic arcs. For loops the closing edge is
/// implicit (the last vertex is not repeated).
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicChain {
    pub vertices: Vec<UnitVector>,
}

impl GeodesicChain {
    pub fn new(vertices: Vec<UnitVector>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges of an open chain.
    pub fn edges(&self) -> impl Iterator<Item = (UnitVector, UnitVector)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Edges including the closing one.
    pub fn loop_edges(&self) -> impl Iterator<Item = (UnitVector, UnitVector)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Bounding cap of an edge, for cheap rejection.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeCap {
    pub a: UnitVector,
    pub b: UnitVector,
    pub center: UnitVector,
    pub radius: f64,
}

impl EdgeCap {
    pub fn new(a: UnitVector, b: UnitVector) -> Self {
        let center = midpoint(a, b);
        let radius = 0.5 * a.angle(b) * (1.0 + 1e-12) + 1e-15;
        Self {
            a,
            b,
            center,
            radius,
        }
    }

    /// Could `p` be within `slack` radians of this edge?
    pub fn near(&self, p: UnitVector, slack: f64) -> bool {
        let r = self.radius + slack;
        if r >= std::f64::consts::PI {
            return true;
        }
        // chord lengths stay precise for tiny angles, unlike cosines
        let chord = 2.0 * (0.5 * r).sin();
        (p - self.center).norm2() <= chord * chord * (1.0 + 1e-9) + 1e-30
    }
}

#[derive(Debug, Clone)]
pub struct Loop {
    chain: GeodesicChain,
    hole: bool,
    caps: Vec<EdgeCap>,
}

impl Loop {
    pub fn vertices(&self) -> &[UnitVector] {
        &self.chain.vertices
    }

    pub fn chain(&self) -> &GeodesicChain {
        &self.chain
    }

    pub fn is_hole(&self) -> bool {
        self.hole
    }

    /// Area of the region this loop bounds (the hole itself for holes).
    pub fn enclosed_area(&self) -> f64 {
        if self.hole {
            let rev: Vec<_> = self.chain.vertices.iter().rev().copied().collect();
            loop_area(&rev)
        } else {
            loop_area(&self.chain.vertices)
        }
    }

    /// Does the region to the left of this loop contain `origin()`?
    fn left_contains_origin(&self) -> bool {
        let v = &self.chain.vertices;
        let v1_inside = ordered_ccw(v[1].ortho(), v[0], v[2], v[1]);
        v1_inside != crossing_parity(&self.chain.vertices, v[1])
    }
}

/// Parity of crossings between `origin() → p` and the loop's edges.
fn crossing_parity(v: &[UnitVector], p: UnitVector) -> bool {
    let o = origin();
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        inside ^= edge_or_vertex_crossing(o, p, v[i], v[(i + 1) % n]);
    }
    inside
}

/// Union of shells minus holes. Shells run counterclockwise, holes clockwise.
#[derive(Debug, Clone)]
pub struct SphericalPolygon {
    loops: Vec<Loop>,
    origin_inside: bool,
    bound_center: UnitVector,
    bound_radius: f64,
}

fn clean(mut v: Vec<UnitVector>) -> Vec<UnitVector> {
    v.dedup();
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    v
}

impl SphericalPolygon {
    /// Builds from loops tagged as shell (`false`) or hole (`true`). Loop
    /// orientation must already follow the shell/hole convention.
    pub fn new(loops: Vec<(Vec<UnitVector>, bool)>) -> Result<Self, GeomError> {
        let mut built = Vec::with_capacity(loops.len());
        for (v, hole) in loops {
            let v = clean(v);
            if v.len() < 3 {
                return Err(GeomError::Degenerate("loop needs at least 3 distinct vertices"));
            }
            let chain = GeodesicChain::new(v);
            let caps = chain.loop_edges().map(|(a, b)| EdgeCap::new(a, b)).collect();
            built.push(Loop { chain, hole, caps });
        }
        if built.is_empty() {
            return Err(GeomError::Degenerate("polygon has no loops"));
        }
        let origin_inside = built
            .iter()
            .fold(false, |acc, l| acc ^ (l.left_contains_origin() ^ l.hole));
        let sum = built
            .iter()
            .flat_map(|l| l.vertices().iter())
            .fold(UnitVector::default(), |acc, &p| acc + p);
        let (bound_center, bound_radius) = if sum.norm2() > 0.0 {
            let c = sum.normalize();
            let r = built
                .iter()
                .flat_map(|l| l.caps.iter())
                .map(|e| c.angle(e.center) + e.radius)
                .fold(0.0, f64::max);
            (c, r)
        } else {
            (UnitVector::new(0.0, 0.0, 1.0), std::f64::consts::PI)
        };
        let p = Self {
            loops: built,
            origin_inside,
            bound_center,
            bound_radius,
        };
        // A cap test is only valid if the polygon lies inside it.
        let mut p = p;
        if p.bound_radius < std::f64::consts::PI && p.contains_raw(-p.bound_center) {
            p.bound_radius = std::f64::consts::PI;
        }
        let a = p.area();
        if !(a > 0.0) || a >= 4.0 * std::f64::consts::PI {
            return Err(GeomError::Degenerate("polygon area must be in (0, 4π)"));
        }
        Ok(p)
    }

    /// Builds from loops given in the shell/hole orientation convention,
    /// treating any loop whose left side exceeds a hemisphere as a hole.
    pub fn from_loops(loops: Vec<Vec<UnitVector>>) -> Result<Self, GeomError> {
        let tagged = loops
            .into_iter()
            .map(|v| {
                let v = clean(v);
                let hole = loop_area(&v) > 2.0 * std::f64::consts::PI;
                (v, hole)
            })
            .collect();
        Self::new(tagged)
    }

    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn num_edges(&self) -> usize {
        self.loops.iter().map(|l| l.chain.len()).sum()
    }

    pub(crate) fn edge_caps(&self) -> impl Iterator<Item = &EdgeCap> {
        self.loops.iter().flat_map(|l| l.caps.iter())
    }

    /// Bounding cap `(center, angular radius)`.
    pub fn bound(&self) -> (UnitVector, f64) {
        (self.bound_center, self.bound_radius)
    }

    /// Shell areas minus hole areas, in steradians.
    pub fn area(&self) -> f64 {
        self.loops
            .iter()
            .map(|l| {
                let a = l.enclosed_area();
                if l.hole {
                    -a
                } else {
                    a
                }
            })
            .sum()
    }

    /// Crossing-parity containment with no boundary tolerance.
    pub fn contains_raw(&self, p: UnitVector) -> bool {
        let o = origin();
        let mut inside = self.origin_inside;
        for l in &self.loops {
            let v = l.vertices();
            let n = v.len();
            for i in 0..n {
                inside ^= edge_or_vertex_crossing(o, p, v[i], v[(i + 1) % n]);
            }
        }
        inside
    }

    /// Angular distance from `p` to the nearest edge, or `None` if every
    /// edge is farther than `limit`.
    pub fn boundary_distance(&self, p: UnitVector, limit: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for e in self.edge_caps() {
            if !e.near(p, limit) {
                continue;
            }
            let d = distance_to_edge(p, e.a, e.b);
            if d <= limit && best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
        best
    }

    /// Inside, on the boundary (within `BOUNDARY_EPS`), or outside.
    pub fn classify(&self, p: UnitVector) -> Location {
        if self.bound_radius < std::f64::consts::PI
            && p.angle(self.bound_center) > self.bound_radius + BOUNDARY_EPS
        {
            return Location::Outside;
        }
        if self.boundary_distance(p, BOUNDARY_EPS).is_some() {
            return Location::Boundary;
        }
        if self.contains_raw(p) {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// Boundary points count as contained.
    pub fn contains_point(&self, p: UnitVector) -> bool {
        self.classify(p) != Location::Outside
    }

    /// True if any edge of `self` properly crosses edge `cd`.
    pub fn crosses_edge(&self, c: UnitVector, d: UnitVector) -> bool {
        let cap = EdgeCap::new(c, d);
        self.edge_caps().any(|e| {
            e.center.angle(cap.center) <= e.radius + cap.radius && crossing_sign(e.a, e.b, c, d) > 0
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latlng::LatLng;
    use std::f64::consts::PI;

    fn ll(lat: f64, lng: f64) -> UnitVector {
        LatLng::new(lat, lng).unwrap().to_point()
    }

    fn square(lat0: f64, lng0: f64, d: f64) -> Vec<UnitVector> {
        vec![
            ll(lat0, lng0),
            ll(lat0, lng0 + d),
            ll(lat0 + d, lng0 + d),
            ll(lat0 + d, lng0),
        ]
    }

    #[test]
    fn shell_with_hole() {
        let shell = square(0.0, 0.0, 10.0);
        let mut hole = square(4.0, 4.0, 2.0);
        hole.reverse();
        let p = SphericalPolygon::new(vec![(shell.clone(), false), (hole.clone(), true)]).unwrap();
        let s = SphericalPolygon::new(vec![(shell, false)]).unwrap();
        let mut h = hole;
        h.reverse();
        let h = SphericalPolygon::new(vec![(h, false)]).unwrap();
        assert!((p.area() - (s.area() - h.area())).abs() < 1e-12);
        assert!(p.contains_point(ll(1.0, 1.0)));
        assert!(!p.contains_point(ll(5.0, 5.0)));
        assert!(!p.contains_point(ll(-1.0, 5.0)));
        assert_eq!(p.classify(ll(4.0, 6.0)), Location::Boundary);
    }

    #[test]
    fn octant_and_hemisphere() {
        let oct = SphericalPolygon::from_loops(vec![vec![
            UnitVector::new(1.0, 0.0, 0.0),
            UnitVector::new(0.0, 1.0, 0.0),
            UnitVector::new(0.0, 0.0, 1.0),
        ]])
        .unwrap();
        assert!((oct.area() - PI / 2.0).abs() < 1e-14);
        assert!(oct.contains_point(UnitVector::normalized(1.0, 1.0, 1.0)));
        let hemi = SphericalPolygon::new(vec![(
            (0..4).map(|k| ll(0.0, -179.0 + 90.0 * k as f64)).collect(),
            false,
        )])
        .unwrap();
        assert!((hemi.area() - 2.0 * PI).abs() < 1e-13);
        assert!(hemi.contains_point(ll(45.0, 12.0)));
        assert!(!hemi.contains_point(ll(-45.0, 12.0)));
    }

    #[test]
    fn rejects_degenerate() {
        assert!(SphericalPolygon::new(vec![(vec![ll(0.0, 0.0), ll(0.0, 1.0)], false)]).is_err());
    }

    #[test]
    fn loop_vertices_are_on_the_boundary() {
        let p = SphericalPolygon::new(vec![(square(10.0, 10.0, 1.0), false)]).unwrap();
        for v in p.loops()[0].vertices() {
            assert_eq!(p.classify(*v), Location::Boundary);
        }
    }
}
