//! Points on the unit sphere.

use std::ops::{Add, Mul, Neg, Sub};

/// A 3-vector. Constructors that produce points on the sphere normalize;
/// intermediate arithmetic (cross products, edge normals) may leave the
/// vector unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Normalizes `(x, y, z)`. Returns the zero vector unchanged.
    pub fn normalized(x: f64, y: f64, z: f64) -> Self {
        Self::new(x, y, z).normalize()
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }

    pub fn abs(self) -> Self {
        Self::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn get(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    /// Index of the component with the largest absolute value.
    pub fn largest_abs_component(self) -> usize {
        let a = self.abs();
        if a.x > a.y {
            if a.x > a.z {
                0
            } else {
                2
            }
        } else if a.y > a.z {
            1
        } else {
            2
        }
    }

    /// Angle between two vectors in radians, stable for tiny and near-π angles.
    pub fn angle(self, o: Self) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }

    /// Lexicographic comparison on (x, y, z).
    pub fn lex_cmp(self, o: Self) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then(self.y.total_cmp(&o.y))
            .then(self.z.total_cmp(&o.z))
    }

    /// A unit vector orthogonal to `self`, deterministic for a given input.
    pub fn ortho(self) -> Self {
        let k = (self.largest_abs_component() + 2) % 3;
        let mut temp = [0.012, 0.0053, 0.00457];
        temp[k] = 1.0;
        self.cross(Self::new(temp[0], temp[1], temp[2])).normalize()
    }
}

impl Add for UnitVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for UnitVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for UnitVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for UnitVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ortho_is_orthogonal_and_unit() {
        for v in [
            UnitVector::new(1.0, 0.0, 0.0),
            UnitVector::normalized(0.3, -0.4, 0.86),
            UnitVector::new(0.0, 0.0, -1.0),
        ] {
            let o = v.ortho();
            assert!(o.dot(v).abs() < 1e-15);
            assert!((o.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn angle_matches_acos_for_moderate_angles() {
        let a = UnitVector::new(1.0, 0.0, 0.0);
        let b = UnitVector::normalized(1.0, 1.0, 0.0);
        assert!((a.angle(b) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
