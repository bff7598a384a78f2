use std::f64::consts::PI;

use geogrid_core::sphere::{densify_line, densify_ring, CellRelation, Lines, Location, Shape, SphericalPolygon, DEFAULT_MAX_STEP};
use geogrid_core::{CellId, LatLng, UnitVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ll(lat: f64, lng: f64) -> LatLng {
    LatLng::new(lat, lng).unwrap()
}

fn box_ring(lat0: f64, lng0: f64, lat1: f64, lng1: f64) -> Vec<LatLng> {
    vec![ll(lat0, lng0), ll(lat0, lng1), ll(lat1, lng1), ll(lat1, lng0), ll(lat0, lng0)]
}

fn polygon(ring: &[LatLng]) -> SphericalPolygon {
    SphericalPolygon::new(vec![(densify_ring(ring, DEFAULT_MAX_STEP).unwrap().vertices, false)]).unwrap()
}

/// Oracle: area of a lon/lat box bounded by parallels and meridians.
fn zone_area(lat0: f64, lng0: f64, lat1: f64, lng1: f64) -> f64 {
    (lng1 - lng0).to_radians() * (lat1.to_radians().sin() - lat0.to_radians().sin())
}

/// Oracle: winding number from summed subtended angles in the tangent plane
/// at `p`. Independent of crossing parity.
fn winding_contains(ring: &[UnitVector], p: UnitVector) -> bool {
    let e = p.ortho().normalize();
    let f = p.cross(e);
    let proj = |q: UnitVector| (q.dot(e), q.dot(f));
    let n = ring.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (proj(ring[i]), proj(ring[(i + 1) % n]));
        total += (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1);
    }
    total.abs() > PI
}

#[test]
fn degree_box_area_matches_zone_formula() {
    for &(lat, lng) in &[(0.0, 0.0), (45.0, -100.0), (-60.0, 30.0), (80.0, 170.0)] {
        // a degree box with short meridian edges stays within 0.01% of the
        // parallel-bounded zone once its parallels are densified
        let p = polygon(&box_ring(lat, lng, lat + 1.0, lng + 1.0));
        let z = zone_area(lat, lng, lat + 1.0, lng + 1.0);
        assert!((p.area() / z - 1.0).abs() < 1e-4, "{lat},{lng}: {} vs {z}", p.area());
    }
}

#[test]
fn equatorial_box_is_planar() {
    // near the equator a small box's area is its planar lon/lat area in radians²
    let p = polygon(&box_ring(-0.01, -0.01, 0.01, 0.01));
    let planar = (0.02f64.to_radians()).powi(2);
    assert!((p.area() / planar - 1.0).abs() < 1e-6);
}

#[test]
fn boundary_counts_as_contained() {
    let p = polygon(&box_ring(10.0, 10.0, 11.0, 11.0));
    assert!(p.contains_point(ll(10.0, 10.0).to_point()));
    assert_eq!(p.classify(ll(10.0, 10.5).to_point()), Location::Boundary);
    assert_eq!(p.classify(ll(10.5, 10.5).to_point()), Location::Inside);
    assert_eq!(p.classify(ll(12.0, 10.5).to_point()), Location::Outside);
}

#[test]
fn containment_agrees_with_winding_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        // random star-shaped polygon
        let (clat, clng) = (rng.gen_range(-70.0..70.0), rng.gen_range(-170.0..170.0));
        let k = rng.gen_range(5..12);
        let mut ring: Vec<LatLng> = (0..k)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / k as f64;
                let r = rng.gen_range(1.0..5.0);
                ll(clat + r * a.sin(), clng + r * a.cos())
            })
            .collect();
        ring.push(ring[0]);
        let chain = densify_ring(&ring, 0.5).unwrap();
        let p = SphericalPolygon::new(vec![(chain.vertices.clone(), false)]).unwrap();
        for _ in 0..200 {
            let q = ll(clat + rng.gen_range(-6.0..6.0), clng + rng.gen_range(-6.0..6.0)).to_point();
            if p.boundary_distance(q, 1e-9).is_some() {
                continue;
            }
            assert_eq!(p.contains_point(q), winding_contains(&chain.vertices, q));
        }
    }
}

#[test]
fn line_relations_agree_with_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut seen_cross = 0;
    for _ in 0..200 {
        let (lat, lng) = (rng.gen_range(-60.0..60.0), rng.gen_range(-170.0..170.0));
        let line = [ll(lat, lng), ll(lat + rng.gen_range(-0.5..0.5), lng + rng.gen_range(-0.5..0.5))];
        let chain = densify_line(&line, DEFAULT_MAX_STEP).unwrap();
        let cell = CellId::from_latlng(ll(lat + rng.gen_range(-0.3..0.3), lng + rng.gen_range(-0.3..0.3)), 9).unwrap();
        let g = cell.geom();
        // sample the geodesic chain densely
        let mut inside = false;
        for (a, b) in chain.edges() {
            for t in 0..=50 {
                let q = geogrid_core::sphere::edge::interpolate(a, b, t as f64 / 50.0);
                inside |= g.locate(q) == Location::Inside;
            }
        }
        let rel = Shape::Lines(Lines::new(vec![chain])).relate_cell(cell);
        if inside {
            assert!(matches!(rel, CellRelation::Crosses | CellRelation::WithinCell), "{rel:?}");
            seen_cross += 1;
        } else {
            // sampling can miss a clipped corner; only check it never claims containment
            assert_ne!(rel, CellRelation::WithinCell);
        }
    }
    assert!(seen_cross > 20);
}

fn random_polygon(rng: &mut impl Rng) -> Shape {
    let (lat, lng) = (rng.gen_range(-60.0..60.0), rng.gen_range(-170.0..170.0));
    let (w, h) = (rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0));
    let mid = ll(lat + h * rng.gen_range(0.2..0.8), lng + w * 1.3);
    let ring = vec![ll(lat, lng), ll(lat, lng + w), mid, ll(lat + h, lng + w), ll(lat + h, lng), ll(lat, lng)];
    Shape::Polygon(polygon(&ring))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_is_hierarchically_consistent(seed in any::<u64>(), level in 4u8..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_polygon(&mut rng);
        let v = s.vertices();
        let c = CellId::from_point(v[rng.gen_range(0..v.len())]).parent_unchecked(level);
        let parent = s.overlap_fraction(c) * c.exact_area_sr();
        let kids: f64 = c.children().unwrap().iter().map(|k| s.overlap_fraction(*k) * k.exact_area_sr()).sum();
        prop_assert!((parent - kids).abs() <= 1e-6 * c.exact_area_sr(), "{} vs {}", parent, kids);
    }

    #[test]
    fn fraction_is_a_fraction(seed in any::<u64>(), level in 2u8..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_polygon(&mut rng);
        let v = s.vertices();
        let c = CellId::from_point(v[0]).parent_unchecked(level);
        let f = s.overlap_fraction(c);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        let rel = s.relate_cell(c);
        match rel {
            CellRelation::ContainsCell | CellRelation::Equals => prop_assert!(f > 1.0 - 1e-9),
            CellRelation::Disjoint | CellRelation::Touches => prop_assert!(f < 1e-9),
            _ => {}
        }
    }

    #[test]
    fn relation_agrees_with_center_membership(seed in any::<u64>(), level in 6u8..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Shape::Polygon(p) = random_polygon(&mut rng) else { unreachable!() };
        let v = p.loops()[0].vertices()[0];
        let c = CellId::from_point(v).parent_unchecked(level);
        let s = Shape::Polygon(p.clone());
        let rel = s.relate_cell(c);
        if p.classify(c.center()) == Location::Inside {
            prop_assert!(rel.intersects());
        }
        if rel == CellRelation::Disjoint {
            prop_assert!(!p.contains_point(c.center()));
        }
    }
}
