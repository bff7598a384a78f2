//! Turning planar lon/lat geometry into geodesic chains.

use super::polygon::GeodesicChain;
use super::GeomError;
use crate::latlng::LatLng;

/// Default densification step in degrees.
pub const DEFAULT_MAX_STEP: f64 = 0.05;

/// Longitudes of an edge's endpoints, choosing the sign of a ±180 endpoint
/// so the edge does not wrap the globe.
fn edge_lngs(a: LatLng, b: LatLng) -> (f64, f64) {
    let (mut la, mut lb) = (a.lng(), b.lng());
    if (lb - la).abs() > 180.0 {
        if la.abs() == 180.0 {
            la = -la;
        } else if lb.abs() == 180.0 {
            lb = -lb;
        }
    }
    (la, lb)
}

/// Points along the lon/lat-linear edge `a → b`, excluding `b`.
fn densify_edge(a: LatLng, b: LatLng, max_step: f64, out: &mut Vec<LatLng>) -> Result<(), GeomError> {
    let (la, lb) = edge_lngs(a, b);
    let dlng = lb - la;
    if dlng.abs() >= 180.0 {
        return Err(GeomError::AntimeridianEdge { from: a, to: b });
    }
    let dlat = b.lat() - a.lat();
    let n = ((dlat.hypot(dlng) / max_step).ceil() as usize).max(1);
    out.push(a);
    for k in 1..n {
        let t = k as f64 / n as f64;
        let mut lng = la + t * dlng;
        if lng > 180.0 {
            lng -= 360.0;
        } else if lng < -180.0 {
            lng += 360.0;
        }
        out.push(LatLng::new(a.lat() + t * dlat, lng).expect("interpolated coordinate in range"));
    }
    Ok(())
}

/// Longitude step from `a` to `b` folded into `(-180, 180]`.
pub fn lng_delta(a: f64, b: f64) -> f64 {
    let mut d = b - a;
    if d > 180.0 {
        d -= 360.0;
    } else if d <= -180.0 {
        d += 360.0;
    }
    d
}

/// Twice the signed planar area of a lon/lat ring (counterclockwise
/// positive), with longitudes unwrapped along the ring.
pub fn planar_signed_area(ring: &[LatLng]) -> f64 {
    let n = ring.len();
    if n == 0 {
        return 0.0;
    }
    let mut x = Vec::with_capacity(n);
    x.push(ring[0].lng());
    for i in 1..n {
        x.push(x[i - 1] + lng_delta(ring[i - 1].lng(), ring[i].lng()));
    }
    let mut s = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        s += x[i] * ring[j].lat() - x[j] * ring[i].lat();
    }
    s
}

fn distinct_count(v: &[LatLng]) -> usize {
    let mut seen: Vec<(u64, u64)> = v.iter().map(|p| (p.lat().to_bits(), p.lng().to_bits())).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Densifies a closed ring (first vertex repeated at the end). The result
/// omits the closing vertex.
pub fn densify_ring(ring: &[LatLng], max_step: f64) -> Result<GeodesicChain, GeomError> {
    if !(max_step > 0.0) {
        return Err(GeomError::InvalidStep(max_step));
    }
    if ring.len() < 2 || ring.first() != ring.last() {
        return Err(GeomError::UnclosedRing);
    }
    let open = &ring[..ring.len() - 1];
    if distinct_count(open) < 3 || planar_signed_area(open) == 0.0 {
        return Err(GeomError::Degenerate("ring has zero area"));
    }
    let mut out = Vec::new();
    for i in 0..open.len() {
        densify_edge(open[i], open[(i + 1) % open.len()], max_step, &mut out)?;
    }
    let mut v: Vec<_> = out.into_iter().map(LatLng::to_point).collect();
    v.dedup();
    Ok(GeodesicChain::new(v))
}

/// Densifies an open polyline.
pub fn densify_line(line: &[LatLng], max_step: f64) -> Result<GeodesicChain, GeomError> {
    if !(max_step > 0.0) {
        return Err(GeomError::InvalidStep(max_step));
    }
    if distinct_count(line) < 2 {
        return Err(GeomError::Degenerate("line needs two distinct vertices"));
    }
    let mut out = Vec::new();
    for w in line.windows(2) {
        densify_edge(w[0], w[1], max_step, &mut out)?;
    }
    out.push(*line.last().unwrap());
    let mut v: Vec<_> = out.into_iter().map(LatLng::to_point).collect();
    v.dedup();
    Ok(GeodesicChain::new(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::edge::distance_to_edge;

    fn ll(lat: f64, lng: f64) -> LatLng {
        LatLng::new(lat, lng).unwrap()
    }

    fn unit_square() -> Vec<LatLng> {
        vec![ll(0.0, 0.0), ll(0.0, 1.0), ll(1.0, 1.0), ll(1.0, 0.0), ll(0.0, 0.0)]
    }

    #[test]
    fn square_subdivision_count() {
        let c = densify_ring(&unit_square(), 0.25).unwrap();
        assert_eq!(c.len(), 16);
        for corner in &unit_square()[..4] {
            assert!(c.vertices.contains(&corner.to_point()));
        }
    }

    #[test]
    fn large_step_is_identity() {
        let c = densify_ring(&unit_square(), 5.0).unwrap();
        let expect: Vec<_> = unit_square()[..4].iter().map(|p| p.to_point()).collect();
        assert_eq!(c.vertices, expect);
    }

    #[test]
    fn coarse_chain_stays_near_fine_chain() {
        let line = [ll(45.0, 0.0), ll(45.0, 10.0)];
        let coarse = densify_line(&line, DEFAULT_MAX_STEP).unwrap();
        let fine = densify_line(&line, 0.01).unwrap();
        let worst = fine
            .vertices
            .iter()
            .map(|&p| {
                coarse
                    .edges()
                    .map(|(a, b)| distance_to_edge(p, a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn errors() {
        assert_eq!(
            densify_ring(&unit_square()[..4], 0.1),
            Err(GeomError::UnclosedRing)
        );
        let flat = [ll(0.0, 0.0), ll(0.0, 1.0), ll(0.0, 2.0), ll(0.0, 0.0)];
        assert!(matches!(densify_ring(&flat, 0.1), Err(GeomError::Degenerate(_))));
        let wide = [ll(0.0, -100.0), ll(0.0, 100.0), ll(5.0, 100.0), ll(0.0, -100.0)];
        assert!(matches!(densify_ring(&wide, 0.1), Err(GeomError::AntimeridianEdge { .. })));
        assert!(densify_ring(&unit_square(), 0.0).is_err());
    }

    #[test]
    fn antimeridian_vertex_sign_is_chosen_per_edge() {
        // a ring touching the antimeridian from the west
        let ring = [ll(0.0, 170.0), ll(0.0, 180.0), ll(5.0, 180.0), ll(5.0, 170.0), ll(0.0, 170.0)];
        assert!(densify_ring(&ring, 1.0).is_ok());
        let east = [ll(0.0, -180.0), ll(0.0, -170.0), ll(5.0, -170.0), ll(5.0, -180.0), ll(0.0, -180.0)];
        assert!(densify_ring(&east, 1.0).is_ok());
        assert!(planar_signed_area(&east[..4]) > 0.0);
    }
}
