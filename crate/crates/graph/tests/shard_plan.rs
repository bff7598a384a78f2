use std::collections::BTreeSet;

use geogrid_core::cover::{Covering, CoveringParams};
use geogrid_core::enrich::{cell_hierarchy_records, RelationRecord, SpatialRelation};
use geogrid_core::sphere::{Shape, DEFAULT_MAX_STEP};
use geogrid_core::wkt::parse_wkt;
use geogrid_core::{CellId, LatLng};
use geogrid_graph::emit::emit_relations;
use geogrid_graph::iri::{IriScheme, KWG_ONT};
use geogrid_graph::rdf::{Term, Triple};
use geogrid_graph::shard::{plan, route, split_triples, ShardMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rect(lng0: f64, lat0: f64, lng1: f64, lat1: f64) -> Shape {
    parse_wkt(&format!(
        "POLYGON(({lng0} {lat0}, {lng1} {lat0}, {lng1} {lat1}, {lng0} {lat1}, {lng0} {lat0}))"
    ))
    .unwrap()
    .to_shape(DEFAULT_MAX_STEP)
    .unwrap()
}

fn conus() -> Shape {
    rect(-124.77, 24.52, -66.95, 49.38)
}

fn tokens(cells: &[CellId]) -> BTreeSet<String> {
    cells.iter().map(|c| c.token()).collect()
}

fn cover(cells: Vec<CellId>) -> Covering {
    Covering {
        cells,
        params: CoveringParams::default(),
    }
}

#[test]
fn conus_at_level_2_is_eight_shards() {
    let m = plan(&conus(), 2).unwrap();
    assert_eq!(m.keys.len(), 8);
    let want: BTreeSet<String> = ["4b", "4d", "53", "55", "81", "87", "89", "8b"].iter().map(|s| s.to_string()).collect();
    assert_eq!(tokens(&m.keys), want);
}

#[test]
fn one_cell_region_is_one_shard() {
    let c = CellId::from_token("89").unwrap();
    assert_eq!(plan(&Shape::Polygon(c.polygon()), 2).unwrap().keys, vec![c]);
}

#[test]
fn key_count_grows_with_level() {
    let region = conus();
    let counts: Vec<usize> = (0..=5).map(|l| plan(&region, l).unwrap().keys.len()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    // every finer key refines some coarser key
    let (coarse, fine) = (plan(&region, 3).unwrap(), plan(&region, 4).unwrap());
    assert!(fine.keys.iter().all(|k| coarse.keys.contains(&k.parent_unchecked(3))));
}

fn random_cell(rng: &mut impl Rng, min_level: u8) -> CellId {
    let (lat, lng) = (rng.gen_range(20.0..52.0), rng.gen_range(-130.0..-60.0));
    let level = rng.gen_range(min_level..=20);
    CellId::from_point(LatLng::new(lat, lng).unwrap().to_point()).parent_unchecked(level)
}

#[test]
fn random_cells_route_to_their_ancestor() {
    let m = plan(&conus(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut routed, mut unroutable) = (0, 0);
    for _ in 0..1000 {
        let c = random_cell(&mut rng, 2);
        let r = route(&cover(vec![c]), &m);
        let a = c.parent_unchecked(2);
        if m.keys.contains(&a) {
            assert_eq!(r.shards, BTreeSet::from([a]));
            assert!(r.unroutable.is_empty());
            routed += 1;
        } else {
            assert!(r.shards.is_empty());
            assert_eq!(r.unroutable, vec![c]);
            unroutable += 1;
        }
    }
    assert!(routed > 500 && unroutable > 0, "{routed}/{unroutable}");
}

#[test]
fn whole_key_set_routes_everywhere() {
    let m = plan(&conus(), 2).unwrap();
    let r = route(&cover(m.keys.clone()), &m);
    assert_eq!(r.shards.len(), 8);
    // a face cell spans the keys below it
    let r = route(&cover(vec![CellId::from_face(4)]), &m);
    assert_eq!(r.shards.iter().copied().collect::<Vec<_>>(), m.keys_within(CellId::from_face(4)).to_vec());
}

#[test]
fn europe_is_unroutable() {
    let m = plan(&conus(), 2).unwrap();
    let paris = CellId::from_point(LatLng::new(48.85, 2.35).unwrap().to_point()).parent_unchecked(13);
    let boulder = CellId::from_point(LatLng::new(40.0, -105.27).unwrap().to_point()).parent_unchecked(13);
    let r = route(&cover(vec![paris, boulder]), &m);
    assert_eq!(r.unroutable, vec![paris]);
    assert_eq!(r.shards.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn route_distributes_over_union(seed in any::<u64>(), na in 0usize..20, nb in 0usize..20) {
        let m = ShardMap::new(2, ["4b", "4d", "53", "55", "81", "87", "89", "8b"].map(|t| CellId::from_token(t).unwrap())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<CellId> = (0..na).map(|_| random_cell(&mut rng, 0)).collect();
        let b: Vec<CellId> = (0..nb).map(|_| random_cell(&mut rng, 0)).collect();
        let both = route(&cover(a.iter().chain(&b).copied().collect()), &m);
        let (ra, rb) = (route(&cover(a), &m), route(&cover(b), &m));
        prop_assert_eq!(&both.shards, &ra.shards.union(&rb.shards).copied().collect());
        let mut un = ra.unroutable.clone();
        un.extend(&rb.unroutable);
        prop_assert_eq!(both.unroutable, un);
    }

    #[test]
    fn assignment_is_a_function(seed in any::<u64>()) {
        let m = plan(&conus(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let c = random_cell(&mut rng, 3);
            let owners: Vec<&CellId> = m.keys.iter().filter(|k| k.contains(c)).collect();
            prop_assert!(owners.len() <= 1);
            prop_assert_eq!(m.shard_of(c), owners.first().map(|k| **k));
        }
    }
}

fn touches() -> String {
    format!("{KWG_ONT}sfTouches")
}

#[test]
fn hierarchy_inside_one_shard_never_crosses() {
    let s = IriScheme::default();
    let m = plan(&conus(), 2).unwrap();
    let region = cover(vec![CellId::from_token("89c").unwrap()]);
    let records: Vec<RelationRecord> = cell_hierarchy_records(7, 8, &region)
        .unwrap()
        .into_iter()
        .filter(|r| matches!(r.relation, SpatialRelation::Within | SpatialRelation::Contains))
        .collect();
    assert!(records.len() > 1000);
    let split = split_triples(emit_relations(&records, &s).unwrap(), &m, &s).unwrap();
    assert_eq!(split.cross_shard, 0);
    assert_eq!(split.duplicates, 0);
    assert!(split.conserved());
}

#[test]
fn touch_across_a_boundary_is_duplicated() {
    let s = IriScheme::default();
    let m = plan(&conus(), 2).unwrap();
    // a level-10 cell on the edge of key 89 whose neighbour is in another key
    let key = CellId::from_token("89").unwrap();
    let (inner, outer) = {
        let mut k = key.child_begin(10);
        loop {
            if let Some(n) = k.edge_neighbors().into_iter().find(|n| !key.contains(*n) && m.shard_of(*n).is_some()) {
                break (k, n);
            }
            k = k.next();
        }
    };
    let t = Triple::new(s.cell(inner), touches(), Term::iri(s.cell(outer)));
    let inside = Triple::new(s.cell(inner), touches(), Term::iri(s.cell(inner.next())));
    let global = Triple::new("http://x.org/a", "http://x.org/p", Term::string("v"));
    let split = split_triples(vec![t.clone(), inside, global], &m, &s).unwrap();
    assert_eq!(split.cross_shard, 1);
    assert_eq!(split.duplicates, 1);
    assert!(split.shards[&key].contains(&t));
    assert!(split.shards[&m.shard_of(outer).unwrap()].contains(&t));
    assert_eq!(split.global.len(), 1);
    assert_eq!(split.output_count() - split.duplicates, split.input);
}

#[test]
fn malformed_cell_iri_is_an_error() {
    let s = IriScheme::default();
    let m = plan(&conus(), 2).unwrap();
    let bad = Triple::new(format!("{}s2.level13.notanumber", s.resource), touches(), Term::string("x"));
    assert!(split_triples(vec![bad], &m, &s).is_err());
}

#[test]
fn neighbour_touch_rate_is_small_over_conus() {
    let s = IriScheme::default();
    let m = plan(&conus(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let level = 13;
    let mut triples = Vec::new();
    for _ in 0..20_000 {
        let (lat, lng) = (rng.gen_range(24.52..49.38), rng.gen_range(-124.77..-66.95));
        let c = CellId::from_point(LatLng::new(lat, lng).unwrap().to_point()).parent_unchecked(level);
        for n in c.edge_neighbors() {
            triples.push(Triple::new(s.cell(c), touches(), Term::iri(s.cell(n))));
        }
    }
    let split = split_triples(triples, &m, &s).unwrap();
    assert!(split.conserved());
    let rate = split.cross_shard as f64 / split.input as f64;
    // perimeter/area bound: one edge in 2^(level - shard_level) crosses a key boundary
    let bound = 1.0 / f64::from(1u32 << (level - 2));
    println!("cross-shard touch rate {rate:.5} (bound {bound:.5})");
    assert!(rate < 0.05);
    assert!(rate <= 4.0 * bound, "{rate} vs {bound}");
}
