//! Cutting lon/lat geometry at the antimeridian.
//!
//! Rings are unwrapped into a continuous longitude range, closed over the
//! pole when they wind around it, clipped into 360-degree strips bounded by
//! the lines `x = 180 + 360k`, and each strip is shifted back into
//! `[-180, 180]`.

use crate::sphere::densify::lng_delta;

/// Planar `(lng, lat)` pair; `lng` may lie outside `[-180, 180]` while
/// unwrapped.
pub type Xy = (f64, f64);

const POLE_WIND_TOLERANCE: f64 = 1e-6;
const MIN_PIECE_AREA: f64 = 1e-12;

/// Unwraps an open ring or line so consecutive longitudes differ by at
/// most 180 degrees.
pub fn unwrap(pts: &[Xy]) -> Vec<Xy> {
    let mut out: Vec<Xy> = Vec::with_capacity(pts.len());
    for &(x, y) in pts {
        let nx = match out.last() {
            Some(&(px, _)) => px + lng_delta(wrap(px), x),
            None => x,
        };
        out.push((nx, y));
    }
    out
}

fn wrap(x: f64) -> f64 {
    let r = (x + 180.0).rem_euclid(360.0) - 180.0;
    if r == -180.0 {
        180.0
    } else {
        r
    }
}

/// Twice the signed area of an open planar ring.
pub fn shoelace(r: &[Xy]) -> f64 {
    let n = r.len();
    (0..n)
        .map(|i| {
            let (a, b) = (r[i], r[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}

/// Net longitude travelled around an open ring (0 or ±360 for simple rings).
pub fn winding(open: &[Xy]) -> f64 {
    if open.is_empty() {
        return 0.0;
    }
    let u = unwrap(open);
    let last = u[u.len() - 1].0;
    last + lng_delta(wrap(last), open[0].0) - u[0].0
}

/// Keeps the part of `ring` on the side `keep(x)` of the vertical line
/// `x = cut`.
fn clip(ring: &[Xy], cut: f64, keep_above: bool) -> Vec<Xy> {
    let inside = |p: Xy| if keep_above { p.0 >= cut } else { p.0 <= cut };
    let mut out = Vec::new();
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let (ia, ib) = (inside(a), inside(b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let t = (cut - a.0) / (b.0 - a.0);
            let p = (cut, a.1 + t * (b.1 - a.1));
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
    }
    out.dedup();
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn cuts_within(lo: f64, hi: f64) -> Vec<f64> {
    let mut k = ((lo - 180.0) / 360.0).floor() as i64;
    let mut out = Vec::new();
    loop {
        let c = 180.0 + 360.0 * k as f64;
        if c >= hi {
            break;
        }
        if c > lo {
            out.push(c);
        }
        k += 1;
    }
    out
}

/// Shift that moves the strip holding `x` into `[-180, 180]`.
fn strip_shift(x: f64) -> f64 {
    -360.0 * ((x + 180.0) / 360.0).floor()
}

fn x_range(r: &[Xy]) -> (f64, f64) {
    r.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
}

/// Splits an unwrapped open planar ring into pieces inside `[-180, 180]`.
/// Each piece is returned with its strip index so holes can be matched.
pub fn split_planar_ring(ring: &[Xy]) -> Vec<(i64, Vec<Xy>)> {
    let (lo, hi) = x_range(ring);
    let cuts = cuts_within(lo, hi);
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(cuts.iter().copied());
    bounds.push(f64::INFINITY);
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let mut piece = ring.to_vec();
        if w[0].is_finite() {
            piece = clip(&piece, w[0], true);
        }
        if w[1].is_finite() {
            piece = clip(&piece, w[1], false);
        }
        if piece.len() < 3 || shoelace(&piece).abs() < MIN_PIECE_AREA {
            continue;
        }
        let mid = if w[0].is_finite() && w[1].is_finite() {
            0.5 * (w[0] + w[1])
        } else {
            let (a, b) = x_range(&piece);
            0.5 * (a + b)
        };
        let shift = strip_shift(mid);
        let strip = (-shift / 360.0).round() as i64;
        out.push((strip, piece.into_iter().map(|(x, y)| (x + shift, y)).collect()));
    }
    out
}

/// Unwraps an open lon/lat ring and, if it winds around a pole, closes it
/// over that pole so it becomes a simple planar ring.
pub fn planar_ring(open: &[Xy]) -> Vec<Xy> {
    let mut u = unwrap(open);
    let w = winding(open);
    if w.abs() > POLE_WIND_TOLERANCE {
        let pole = if w > 0.0 { 90.0 } else { -90.0 };
        let end = u[0].0 + w;
        u.push((end, open[0].1));
        u.push((end, pole));
        u.push((u[0].0, pole));
    }
    u
}

/// Splits an open lon/lat polyline at every antimeridian crossing.
pub fn split_line(line: &[Xy]) -> Vec<Vec<Xy>> {
    let u = unwrap(line);
    let mut pieces: Vec<Vec<Xy>> = Vec::new();
    let mut cur: Vec<Xy> = vec![u[0]];
    for w in u.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        let mut cs = cuts_within(lo, hi);
        if a.0 > b.0 {
            cs.reverse();
        }
        for c in cs {
            let t = (c - a.0) / (b.0 - a.0);
            let p = (c, a.1 + t * (b.1 - a.1));
            cur.push(p);
            pieces.push(std::mem::take(&mut cur));
            cur.push(p);
        }
        cur.push(b);
    }
    pieces.push(cur);
    pieces
        .into_iter()
        .filter(|p| p.len() >= 2 && p.windows(2).any(|w| w[0] != w[1]))
        .map(|p| {
            let (lo, hi) = x_range(&p);
            let shift = strip_shift(0.5 * (lo + hi));
            p.into_iter().map(|(x, y)| (x + shift, y)).collect()
        })
        .collect()
}

/// Even-odd planar point-in-ring test.
pub fn planar_contains(ring: &[Xy], p: Xy) -> bool {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_crosses_dateline() {
        let u = unwrap(&[(170.0, 0.0), (-170.0, 0.0), (-160.0, 1.0)]);
        assert_eq!(u, vec![(170.0, 0.0), (190.0, 0.0), (200.0, 1.0)]);
    }

    #[test]
    fn split_straddling_square() {
        let ring = unwrap(&[(170.0, 0.0), (-170.0, 0.0), (-170.0, 10.0), (170.0, 10.0)]);
        let pieces = split_planar_ring(&ring);
        assert_eq!(pieces.len(), 2);
        let areas: Vec<f64> = pieces.iter().map(|(_, p)| shoelace(p)).collect();
        assert!((areas[0] - 200.0).abs() < 1e-9 && (areas[1] - 200.0).abs() < 1e-9);
        assert!(pieces[0].1.iter().all(|p| (170.0..=180.0).contains(&p.0)));
        assert!(pieces[1].1.iter().all(|p| (-180.0..=-170.0).contains(&p.0)));
    }

    #[test]
    fn edge_on_antimeridian_yields_one_piece() {
        let ring = unwrap(&[(180.0, 45.0), (180.0, 22.6), (-157.4, 21.0), (-157.4, 42.7)]);
        let pieces = split_planar_ring(&ring);
        assert_eq!(pieces.len(), 1);
        assert!(pieces[0].1.iter().any(|p| p.0 == -180.0));
    }

    #[test]
    fn polar_ring_closes_over_pole() {
        let open = [(45.0, 35.0), (135.0, 35.0), (-135.0, 35.0), (-45.0, 35.0)];
        assert!((winding(&open) - 360.0).abs() < 1e-9);
        let r = planar_ring(&open);
        assert!(r.iter().any(|p| p.1 == 90.0));
        let pieces = split_planar_ring(&r);
        let total: f64 = pieces.iter().map(|(_, p)| shoelace(p)).sum();
        assert!((total - 2.0 * 360.0 * 55.0).abs() < 1e-6);
    }

    #[test]
    fn line_split() {
        let parts = split_line(&[(170.0, 0.0), (-170.0, 10.0)]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].last().unwrap(), &(180.0, 5.0));
        assert_eq!(parts[1][0], (-180.0, 5.0));
    }
}
