//! Spherical areas in steradians.

use std::f64::consts::PI;

use crate::point::UnitVector;

/// Signed area of the geodesic triangle `abc`, positive when counterclockwise.
pub fn triangle_area(a: UnitVector, b: UnitVector, c: UnitVector) -> f64 {
    let det = a.dot((b - a).cross(c - a));
    let denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * det.atan2(denom)
}

/// Signed exterior angle at `b` on the path `a → b → c`; left turns are positive.
pub fn turn_angle(a: UnitVector, b: UnitVector, c: UnitVector) -> f64 {
    let n1 = a.cross(b);
    let n2 = b.cross(c);
    n1.cross(n2).dot(b).atan2(n1.dot(n2) * b.norm())
}

/// Area to the left of a closed loop, in `[0, 4π)`.
///
/// Small loops are summed as a fan of triangles from the vertex centroid,
/// which is accurate to a few ulps of the result; the Gauss-Bonnet angle
/// sum only picks the multiple of 4π to add.
pub fn loop_area(v: &[UnitVector]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let turning: f64 = (0..n)
        .map(|i| turn_angle(v[(i + n - 1) % n], v[i], v[(i + 1) % n]))
        .sum();
    let coarse = 2.0 * PI - turning;
    let sum = v.iter().fold(UnitVector::default(), |acc, &p| acc + p);
    if sum.norm() < 0.5 * n as f64 {
        return coarse.clamp(0.0, 4.0 * PI);
    }
    let o = sum.normalize();
    let fan: f64 = (0..n).map(|i| triangle_area(o, v[i], v[(i + 1) % n])).sum();
    let k = ((coarse - fan) / (4.0 * PI)).round();
    (fan + 4.0 * PI * k).clamp(0.0, 4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latlng::LatLng;

    fn ll(lat: f64, lng: f64) -> UnitVector {
        LatLng::new(lat, lng).unwrap().to_point()
    }

    #[test]
    fn octant() {
        let v = [
            UnitVector::new(1.0, 0.0, 0.0),
            UnitVector::new(0.0, 1.0, 0.0),
            UnitVector::new(0.0, 0.0, 1.0),
        ];
        assert!((triangle_area(v[0], v[1], v[2]) - PI / 2.0).abs() < 1e-15);
        assert!((loop_area(&v) - PI / 2.0).abs() < 1e-14);
        let rev = [v[2], v[1], v[0]];
        assert!((loop_area(&rev) - 3.5 * PI).abs() < 1e-13);
    }

    #[test]
    fn hemisphere() {
        let v: Vec<_> = (0..4).map(|k| ll(0.0, -180.0 + 90.0 * k as f64 + 1.0)).collect();
        assert!((loop_area(&v) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn tiny_square_is_accurate() {
        let d = 1e-6;
        let v = [ll(0.0, 0.0), ll(0.0, d), ll(d, d), ll(d, 0.0)];
        let expect = (d.to_radians()).powi(2);
        assert!((loop_area(&v) / expect - 1.0).abs() < 1e-6);
    }
}
