//! Cube-face coordinate systems: (face, u, v) on the cube, (s, t) in the
//! unit square after the quadratic area-equalizing transform, and integer
//! leaf coordinates (i, j).

use crate::point::UnitVector;

pub const MAX_LEVEL: u8 = 30;
/// Leaf cells along one face edge.
pub const MAX_SIZE: i64 = 1 << MAX_LEVEL;

pub fn st_to_uv(s: f64) -> f64 {
    if s >= 0.5 {
        (1.0 / 3.0) * (4.0 * s * s - 1.0)
    } else {
        (1.0 / 3.0) * (1.0 - 4.0 * (1.0 - s) * (1.0 - s))
    }
}

pub fn uv_to_st(u: f64) -> f64 {
    if u >= 0.0 {
        0.5 * (1.0 + 3.0 * u).sqrt()
    } else {
        1.0 - 0.5 * (1.0 - 3.0 * u).sqrt()
    }
}

/// Floor rule: a coordinate exactly on a leaf boundary goes to the upper leaf,
/// except at the far face edge where it is clamped into the last leaf.
pub fn st_to_ij(s: f64) -> i64 {
    ((MAX_SIZE as f64 * s).floor() as i64).clamp(0, MAX_SIZE - 1)
}

pub fn ij_to_st_min(i: i64) -> f64 {
    i as f64 / MAX_SIZE as f64
}

/// `si` is in units of half-leaves, range `0..=2^31`.
pub fn siti_to_st(si: i64) -> f64 {
    si as f64 / (2 * MAX_SIZE) as f64
}

/// Unnormalized cube-surface point for face coordinates.
pub fn face_uv_to_xyz(face: u8, u: f64, v: f64) -> UnitVector {
    match face {
        0 => UnitVector::new(1.0, u, v),
        1 => UnitVector::new(-u, 1.0, v),
        2 => UnitVector::new(-u, -v, 1.0),
        3 => UnitVector::new(-1.0, -v, -u),
        4 => UnitVector::new(v, -1.0, -u),
        _ => UnitVector::new(v, u, -1.0),
    }
}

/// Face whose axis is closest to `p`.
pub fn xyz_to_face(p: UnitVector) -> u8 {
    let axis = p.largest_abs_component();
    if p.get(axis) < 0.0 {
        axis as u8 + 3
    } else {
        axis as u8
    }
}

/// (u, v) of `p` projected on `face`; `p` must be in that face's hemisphere.
pub fn valid_face_xyz_to_uv(face: u8, p: UnitVector) -> (f64, f64) {
    match face {
        0 => (p.y / p.x, p.z / p.x),
        1 => (-p.x / p.y, p.z / p.y),
        2 => (-p.x / p.z, -p.y / p.z),
        3 => (p.z / p.x, p.y / p.x),
        4 => (p.z / p.y, -p.x / p.y),
        _ => (-p.y / p.z, -p.x / p.z),
    }
}

pub fn xyz_to_face_uv(p: UnitVector) -> (u8, f64, f64) {
    let face = xyz_to_face(p);
    let (u, v) = valid_face_xyz_to_uv(face, p);
    (face, u, v)
}

/// Normal of the plane `u = const` on `face`; right-handed for an edge
/// running toward +v, so it points toward decreasing u.
pub fn u_norm(face: u8, u: f64) -> UnitVector {
    match face {
        0 => UnitVector::new(u, -1.0, 0.0),
        1 => UnitVector::new(1.0, u, 0.0),
        2 => UnitVector::new(1.0, 0.0, u),
        3 => UnitVector::new(-u, 0.0, 1.0),
        4 => UnitVector::new(0.0, -u, 1.0),
        _ => UnitVector::new(0.0, -1.0, -u),
    }
}

/// Normal of the plane `v = const` on `face`, pointing toward increasing v.
pub fn v_norm(face: u8, v: f64) -> UnitVector {
    match face {
        0 => UnitVector::new(-v, 0.0, 1.0),
        1 => UnitVector::new(0.0, -v, 1.0),
        2 => UnitVector::new(0.0, -1.0, -v),
        3 => UnitVector::new(v, -1.0, 0.0),
        4 => UnitVector::new(1.0, v, 0.0),
        _ => UnitVector::new(1.0, 0.0, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn st_uv_inverse() {
        for k in 0..=1000 {
            let s = k as f64 / 1000.0;
            assert!((uv_to_st(st_to_uv(s)) - s).abs() < 1e-15);
        }
        assert_eq!(st_to_uv(0.0), -1.0);
        assert_eq!(st_to_uv(0.5), 0.0);
        assert_eq!(st_to_uv(1.0), 1.0);
    }

    #[test]
    fn face_uv_round_trip() {
        for face in 0..6u8 {
            for &(u, v) in &[(0.0, 0.0), (0.3, -0.7), (-0.99, 0.99)] {
                let p = face_uv_to_xyz(face, u, v);
                let (f, uu, vv) = xyz_to_face_uv(p);
                assert_eq!(f, face);
                assert!((uu - u).abs() < 1e-15 && (vv - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn norms_are_perpendicular_to_their_lines() {
        for face in 0..6u8 {
            let (u, v) = (0.25, -0.4);
            for t in [-0.9, 0.0, 0.6] {
                assert!(u_norm(face, u).dot(face_uv_to_xyz(face, u, t)).abs() < 1e-15);
                assert!(v_norm(face, v).dot(face_uv_to_xyz(face, t, v)).abs() < 1e-15);
            }
            assert!(u_norm(face, u).dot(face_uv_to_xyz(face, u + 0.1, v)) < 0.0);
            assert!(v_norm(face, v).dot(face_uv_to_xyz(face, u, v + 0.1)) > 0.0);
        }
    }
}
