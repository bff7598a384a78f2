//! Orientation predicates that never give an inconsistent answer.
//!
//! `sign` first tries a plain floating-point determinant with an error
//! bound, then recomputes it exactly, and finally breaks exact ties with a
//! symbolic perturbation so that only coincident points yield zero.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::point::UnitVector;

/// Error bound of the f64 determinant for unit-length inputs, with margin.
const MAX_DET_ERROR: f64 = 4.0 * 1.8274 * f64::EPSILON;

/// `mantissa · 2^exp`, exact.
#[derive(Clone, Debug)]
struct Dyadic {
    m: BigInt,
    e: i32,
}

impl Dyadic {
    fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            return Self {
                m: BigInt::zero(),
                e: 0,
            };
        }
        let bits = x.to_bits();
        let neg = bits >> 63 != 0;
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(mant);
        Self {
            m: if neg { -m } else { m },
            e,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        Self {
            m: &self.m * &o.m,
            e: self.e + o.e,
        }
    }

    fn add(&self, o: &Self) -> Self {
        if self.m.is_zero() {
            return o.clone();
        }
        if o.m.is_zero() {
            return self.clone();
        }
        let (lo, hi) = if self.e <= o.e { (self, o) } else { (o, self) };
        let shifted = &hi.m << ((hi.e - lo.e) as usize);
        Self {
            m: &lo.m + shifted,
            e: lo.e,
        }
    }

    fn neg(&self) -> Self {
        Self {
            m: -&self.m,
            e: self.e,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    fn sgn(&self) -> i32 {
        if self.m.is_zero() {
            0
        } else if self.m.is_positive() {
            1
        } else {
            -1
        }
    }
}

type V3 = [Dyadic; 3];

fn exact(p: UnitVector) -> V3 {
    [
        Dyadic::from_f64(p.x),
        Dyadic::from_f64(p.y),
        Dyadic::from_f64(p.z),
    ]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [
        a[1].mul(&b[2]).sub(&a[2].mul(&b[1])),
        a[2].mul(&b[0]).sub(&a[0].mul(&b[2])),
        a[0].mul(&b[1]).sub(&a[1].mul(&b[0])),
    ]
}

fn dot(a: &V3, b: &V3) -> Dyadic {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1])).add(&a[2].mul(&b[2]))
}

/// Sign of `(a × b) · c` from the f64 determinant, or 0 when uncertain.
pub fn triage_sign(a: UnitVector, b: UnitVector, c: UnitVector) -> i32 {
    let det = a.cross(b).dot(c);
    if det > MAX_DET_ERROR {
        1
    } else if det < -MAX_DET_ERROR {
        -1
    } else {
        0
    }
}

/// Exact sign of the determinant, perturbed symbolically when it is zero.
/// Returns 0 only if two inputs are identical.
pub fn exact_sign(a: UnitVector, b: UnitVector, c: UnitVector) -> i32 {
    if a == b || b == c || c == a {
        return 0;
    }
    let mut pts = [a, b, c];
    let mut perm = 1;
    if pts[0].lex_cmp(pts[1]).is_gt() {
        pts.swap(0, 1);
        perm = -perm;
    }
    if pts[1].lex_cmp(pts[2]).is_gt() {
        pts.swap(1, 2);
        perm = -perm;
    }
    if pts[0].lex_cmp(pts[1]).is_gt() {
        pts.swap(0, 1);
        perm = -perm;
    }
    let (xa, xb, xc) = (exact(pts[0]), exact(pts[1]), exact(pts[2]));
    let bc = cross(&xb, &xc);
    let mut s = dot(&xa, &bc).sgn();
    if s == 0 {
        s = perturbed_sign(&xa, &xb, &xc, &bc);
    }
    perm * s
}

/// Sign of the determinant after perturbing each point by successively
/// smaller infinitesimals; inputs must be in increasing lexicographic order.
fn perturbed_sign(a: &V3, b: &V3, c: &V3, bc: &V3) -> i32 {
    let steps: [&dyn Fn() -> i32; 13] = [
        &|| bc[2].sgn(),
        &|| bc[1].sgn(),
        &|| bc[0].sgn(),
        &|| c[0].mul(&a[1]).sub(&c[1].mul(&a[0])).sgn(),
        &|| c[0].sgn(),
        &|| -c[1].sgn(),
        &|| c[2].mul(&a[0]).sub(&c[0].mul(&a[2])).sgn(),
        &|| c[2].sgn(),
        &|| a[0].mul(&b[1]).sub(&a[1].mul(&b[0])).sgn(),
        &|| -b[0].sgn(),
        &|| b[1].sgn(),
        &|| a[0].sgn(),
        &|| 1,
    ];
    steps.iter().map(|f| f()).find(|&s| s != 0).unwrap_or(1)
}

/// +1 if `a, b, c` turn counterclockwise, -1 if clockwise, 0 only if two of
/// them coincide. Consistent: `sign(a,b,c) = sign(b,c,a) = -sign(c,b,a)`.
pub fn sign(a: UnitVector, b: UnitVector, c: UnitVector) -> i32 {
    let s = triage_sign(a, b, c);
    if s != 0 {
        s
    } else {
        exact_sign(a, b, c)
    }
}

/// True if `a, b, c` are encountered in that order sweeping counterclockwise
/// around `o`; ties (`a == b` or `b == c`) count as ordered.
pub fn ordered_ccw(a: UnitVector, b: UnitVector, c: UnitVector, o: UnitVector) -> bool {
    let mut sum = 0;
    if sign(b, o, a) >= 0 {
        sum += 1;
    }
    if sign(c, o, b) >= 0 {
        sum += 1;
    }
    if sign(a, o, c) > 0 {
        sum += 1;
    }
    sum >= 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> UnitVector {
        UnitVector::normalized(x, y, z)
    }

    #[test]
    fn basic_orientation() {
        let (a, b, c) = (v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0));
        assert_eq!(sign(a, b, c), 1);
        assert_eq!(sign(c, b, a), -1);
        assert_eq!(sign(a, a, c), 0);
    }

    #[test]
    fn collinear_points_get_consistent_nonzero_sign() {
        // three points on the equator: exactly coplanar with the origin
        let a = UnitVector::new(1.0, 0.0, 0.0);
        let b = UnitVector::new(0.0, 1.0, 0.0);
        let c = UnitVector::new(-1.0, 0.0, 0.0);
        let s = sign(a, b, c);
        assert_ne!(s, 0);
        assert_eq!(sign(b, c, a), s);
        assert_eq!(sign(c, a, b), s);
        assert_eq!(sign(c, b, a), -s);
        assert_eq!(sign(a, c, b), -s);
    }

    #[test]
    fn exact_agrees_with_triage_when_certain() {
        let pts = [
            v(0.3, 0.2, 0.9),
            v(-0.5, 0.1, 0.2),
            v(0.1, -0.7, 0.3),
            v(0.0, 0.0, 1.0),
        ];
        for &a in &pts {
            for &b in &pts {
                for &c in &pts {
                    let t = triage_sign(a, b, c);
                    if t != 0 {
                        assert_eq!(t, exact_sign(a, b, c));
                    }
                }
            }
        }
    }

    #[test]
    fn near_degenerate_uses_exact_path() {
        let a = v(1.0, 1e-17, 0.0);
        let b = v(1.0, 2e-17, 0.0);
        let c = v(1.0, 3e-17, 1e-300);
        assert_eq!(triage_sign(a, b, c), 0);
        let s = sign(a, b, c);
        assert_eq!(s, -sign(b, a, c));
    }

    #[test]
    fn ordered_ccw_quadrants() {
        let o = UnitVector::new(0.0, 0.0, 1.0);
        let e = v(1.0, 0.0, 0.0);
        let n = v(0.0, 1.0, 0.0);
        let w = v(-1.0, 0.0, 0.0);
        assert!(ordered_ccw(e, n, w, o));
        assert!(!ordered_ccw(w, n, e, o));
        assert!(ordered_ccw(e, e, w, o));
    }
}
