//! Geodesic edge operations: crossing tests, distances, intersections.

use super::predicates::{ordered_ccw, sign};
use crate::point::UnitVector;

/// +1 if edges `ab` and `cd` cross at a point interior to both, 0 if they
/// share a vertex, -1 otherwise.
pub fn crossing_sign(a: UnitVector, b: UnitVector, c: UnitVector, d: UnitVector) -> i32 {
    if a == c || a == d || b == c || b == d {
        return 0;
    }
    if a == b || c == d {
        return -1;
    }
    let acb = -sign(a, b, c);
    if sign(a, b, d) != acb {
        return -1;
    }
    if -sign(c, d, b) != acb {
        return -1;
    }
    if sign(c, d, a) != acb {
        return -1;
    }
    1
}

/// Crossing rule for edges that share a vertex, chosen so that a point
/// moving along `ab` crosses a closed loop through that vertex an odd
/// number of times exactly when it changes side.
pub fn vertex_crossing(a: UnitVector, b: UnitVector, c: UnitVector, d: UnitVector) -> bool {
    if a == b || c == d {
        return false;
    }
    if a == c {
        return b == d || ordered_ccw(a.ortho(), d, b, a);
    }
    if b == d {
        return ordered_ccw(b.ortho(), c, a, b);
    }
    if a == d {
        return b == c || ordered_ccw(a.ortho(), c, b, a);
    }
    if b == c {
        return ordered_ccw(b.ortho(), d, a, b);
    }
    false
}

pub fn edge_or_vertex_crossing(a: UnitVector, b: UnitVector, c: UnitVector, d: UnitVector) -> bool {
    match crossing_sign(a, b, c, d) {
        s if s < 0 => false,
        s if s > 0 => true,
        _ => vertex_crossing(a, b, c, d),
    }
}

/// Angular distance from `x` to the geodesic arc `ab`.
pub fn distance_to_edge(x: UnitVector, a: UnitVector, b: UnitVector) -> f64 {
    let n = a.cross(b);
    if n.norm2() > 0.0 && n.cross(a).dot(x) >= 0.0 && b.cross(n).dot(x) >= 0.0 {
        let nn = n.normalize();
        let h = x.dot(nn);
        let proj = (x - nn * h).norm();
        return h.abs().atan2(proj);
    }
    x.angle(a).min(x.angle(b))
}

/// Point where crossing arcs `ab` and `cd` meet.
pub fn intersection(a: UnitVector, b: UnitVector, c: UnitVector, d: UnitVector) -> UnitVector {
    let x = a.cross(b).cross(c.cross(d)).normalize();
    if x.dot(a + b + c + d) < 0.0 {
        -x
    } else {
        x
    }
}

/// Point at fraction `t` of the angle along arc `ab`.
pub fn interpolate(a: UnitVector, b: UnitVector, t: f64) -> UnitVector {
    let theta = a.angle(b);
    if theta < 1e-15 {
        return a;
    }
    let n = a.cross(b).normalize();
    let tangent = n.cross(a);
    (a * (t * theta).cos() + tangent * (t * theta).sin()).normalize()
}

/// Midpoint of arc `ab` (arc shorter than π).
pub fn midpoint(a: UnitVector, b: UnitVector) -> UnitVector {
    (a + b).normalize()
}

/// Where arc `ab` meets the plane with normal `n`, given that `a` and `b`
/// are on opposite sides of it.
pub fn plane_crossing(a: UnitVector, b: UnitVector, n: UnitVector) -> UnitVector {
    let x = a.cross(b).cross(n).normalize();
    if x.dot(a + b) < 0.0 {
        -x
    } else {
        x
    }
}
