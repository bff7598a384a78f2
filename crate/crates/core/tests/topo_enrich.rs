use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use geogrid_core::cover::{covering, CoveringParams};
use geogrid_core::enrich::{
    ancestor_chain_records, cell_hierarchy_records, enrich_compressed, enrich_feature, CompressedParams, Entity,
    Feature, RelationRecord, SpatialRelation as R,
};
use geogrid_core::sphere::{CellRelation, DEFAULT_MAX_STEP};
use geogrid_core::wkt::parse_wkt;
use geogrid_core::CellId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn feature(id: &str, wkt: &str) -> Feature {
    Feature::new(id, parse_wkt(wkt).unwrap(), DEFAULT_MAX_STEP).unwrap()
}

fn rect_wkt(lng0: f64, lat0: f64, lng1: f64, lat1: f64) -> String {
    format!("POLYGON(({lng0} {lat0}, {lng1} {lat0}, {lng1} {lat1}, {lng0} {lat1}, {lng0} {lat0}))")
}

fn triples(r: &[RelationRecord]) -> BTreeSet<(String, R, String)> {
    r.iter().map(|x| (x.subject.to_string(), x.relation, x.object.to_string())).collect()
}

fn check_inverses(r: &[RelationRecord]) {
    let set: HashSet<(&Entity, R, &Entity)> = r.iter().map(|x| (&x.subject, x.relation, &x.object)).collect();
    for x in r {
        assert!(!matches!(x.relation, R::Equals | R::Disjoint | R::Intersects));
        let need = match x.relation {
            R::Contains => Some(R::Within),
            R::Within => Some(R::Contains),
            R::Touches | R::Overlaps => Some(x.relation),
            _ => None,
        };
        if let Some(n) = need {
            assert!(set.contains(&(&x.object, n, &x.subject)), "missing counterpart of {}", x.to_tsv());
        }
    }
}

/// Oracle: scan every level-`level` cell in a window around the feature and
/// map relate_cell outcomes to records by hand.
fn brute_force(f: &Feature, window: &[CellId], level: u8) -> BTreeSet<(String, R, String)> {
    let mut out = BTreeSet::new();
    let fid = f.id.clone();
    for w in window {
        let mut c = w.child_begin(level);
        while c != w.child_end(level) {
            let t = format!("s2:{}", c.token());
            let mut both = |a: R, b: R| {
                out.insert((fid.clone(), a, t.clone()));
                out.insert((t.clone(), b, fid.clone()));
            };
            match f.shape.relate_cell(c) {
                CellRelation::ContainsCell => both(R::Contains, R::Within),
                CellRelation::WithinCell => both(R::Within, R::Contains),
                CellRelation::Overlaps => both(R::Overlaps, R::Overlaps),
                CellRelation::Touches => both(R::Touches, R::Touches),
                CellRelation::Equals => {
                    both(R::Contains, R::Within);
                    both(R::Within, R::Contains);
                }
                CellRelation::Crosses => {
                    out.insert((fid.clone(), R::Crosses, t.clone()));
                }
                CellRelation::Disjoint => {}
            }
            c = c.next();
        }
    }
    out
}

/// Level-13 within/contains pairs implied by `records` under transitivity
/// of within (and contains as its inverse).
fn closure_at_level(records: &[RelationRecord], level: u8, feature: &str) -> BTreeSet<(String, R, String)> {
    let mut up: HashMap<&Entity, Vec<&Entity>> = HashMap::new();
    for r in records {
        match r.relation {
            R::Within => up.entry(&r.subject).or_default().push(&r.object),
            R::Contains => up.entry(&r.object).or_default().push(&r.subject),
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    let fe = Entity::Feature(feature.into());
    let starts: Vec<&Entity> = up.keys().copied().collect();
    for s in starts {
        let mut seen = HashSet::new();
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for &y in up.get(x).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        for y in seen {
            let level_ok = |e: &Entity| matches!(e, Entity::Cell(c) if c.level() == level);
            if (s == &fe && level_ok(y)) || (y == &fe && level_ok(s)) {
                out.insert((s.to_string(), R::Within, y.to_string()));
                out.insert((y.to_string(), R::Contains, s.to_string()));
            }
        }
    }
    out
}

fn containment_only(r: &[RelationRecord]) -> BTreeSet<(String, R, String)> {
    triples(r)
        .into_iter()
        .filter(|(_, rel, _)| matches!(rel, R::Within | R::Contains))
        .collect()
}

#[test]
fn ten_cell_square_matches_brute_force() {
    // roughly 10 x 10 level-13 cells
    let f = feature("sq", &rect_wkt(-100.05, 40.0, -99.93, 40.09));
    let records = enrich_feature(&f, 13).unwrap();
    check_inverses(&records);
    let window = covering(&f.shape, CoveringParams::homogeneous(9)).unwrap();
    let mut wide: BTreeSet<CellId> = BTreeSet::new();
    for c in &window.cells {
        wide.insert(*c);
        wide.extend(c.edge_neighbors());
    }
    let wide: Vec<CellId> = wide.into_iter().collect();
    assert_eq!(triples(&records), brute_force(&f, &wide, 13));
}

#[test]
fn lines_and_points() {
    let p = feature("pt", "POINT(-85.5 30.2)");
    let r = enrich_feature(&p, 13).unwrap();
    assert_eq!(r.len(), 2);
    check_inverses(&r);
    let l = feature("road", "LINESTRING(-100.0 40.0, -99.8 40.1, -99.7 40.3)");
    let r = enrich_feature(&l, 13).unwrap();
    check_inverses(&r);
    assert!(r.iter().filter(|x| x.relation == R::Crosses).count() > 20);
    assert!(r.iter().all(|x| matches!(x.relation, R::Crosses | R::Touches)));
}

#[test]
fn florida_compressed_links_88c_and_level4_overlaps() {
    let f = feature("florida", &rect_wkt(-87.63, 24.52, -80.03, 31.0));
    let r = enrich_compressed(&f, CompressedParams::new(3, 13)).unwrap();
    check_inverses(&r);
    let t = triples(&r);
    assert!(t.contains(&("florida".into(), R::Within, "s2:88c".into())));
    assert!(t.contains(&("s2:88c".into(), R::Contains, "florida".into())));
    let level4: BTreeSet<String> = r
        .iter()
        .filter_map(|x| match (&x.subject, x.relation, &x.object) {
            (Entity::Feature(_), R::Overlaps, Entity::Cell(c)) if c.level() == 4 => Some(c.token()),
            _ => None,
        })
        .collect();
    let expect: BTreeSet<String> = ["889", "88b", "88d", "88f"].iter().map(|s| s.to_string()).collect();
    assert_eq!(level4, expect);
}

#[test]
fn compressed_closure_reproduces_classic_containment() {
    // about 10^3 level-13 cells
    let f = feature("blk", &rect_wkt(10.0, 45.0, 10.45, 45.27));
    let classic = enrich_feature(&f, 13).unwrap();
    let n13 = classic.iter().filter(|x| x.relation == R::Contains).count();
    assert!((800..3000).contains(&n13), "{n13}");
    let compressed = enrich_compressed(&f, CompressedParams::new(3, 13)).unwrap();
    let interior: Vec<CellId> = compressed
        .iter()
        .filter_map(|x| match (&x.object, x.relation) {
            (Entity::Cell(c), R::Contains) => Some(*c),
            _ => None,
        })
        .collect();
    let mut leaves = Vec::new();
    for c in &interior {
        let mut k = c.child_begin(13);
        while k != c.child_end(13) {
            leaves.push(k);
            k = k.next();
        }
    }
    let mut all = compressed.clone();
    all.extend(ancestor_chain_records(&leaves, 3));
    assert_eq!(closure_at_level(&all, 13, "blk"), containment_only(&classic));
    assert!(compressed.len() < classic.len());
}

#[test]
fn compressed_is_ten_times_smaller_on_5x5_degrees() {
    let f = feature("big", &rect_wkt(-100.0, 35.0, -95.0, 40.0));
    let classic = enrich_feature(&f, 13).unwrap();
    let compressed = enrich_compressed(&f, CompressedParams::new(3, 13)).unwrap();
    assert!(
        classic.len() >= 10 * compressed.len(),
        "classic {} vs compressed {}",
        classic.len(),
        compressed.len()
    );
}

#[test]
fn compressed_rejects_non_areal_and_bad_levels() {
    let p = feature("pt", "POINT(1 1)");
    assert!(enrich_compressed(&p, CompressedParams::new(3, 13)).is_err());
    let a = feature("a", &rect_wkt(0.0, 0.0, 1.0, 1.0));
    assert!(enrich_compressed(&a, CompressedParams::new(13, 13)).is_err());
    let bad = CompressedParams {
        boundary_level: 20,
        ..CompressedParams::new(3, 13)
    };
    assert!(enrich_compressed(&a, bad).is_err());
}

#[test]
fn hierarchy_one_parent() {
    let p = CellId::from_token("89c25").unwrap();
    let region = geogrid_core::cover::Covering {
        cells: vec![p],
        params: CoveringParams::homogeneous(p.level()),
    };
    let r = cell_hierarchy_records(p.level(), p.level() + 1, &region).unwrap();
    check_inverses(&r);
    let count = |rel: R| {
        r.iter()
            .filter(|x| x.relation == rel && (x.subject == Entity::Cell(p) || x.object == Entity::Cell(p)))
            .count()
    };
    assert_eq!(count(R::Contains), 4);
    assert_eq!(count(R::Within), 4);
    // no grandparent or grandchild links
    assert!(r.iter().all(|x| match (&x.subject, &x.object) {
        (Entity::Cell(a), Entity::Cell(b)) => a.level().abs_diff(b.level()) <= 1,
        _ => false,
    }));
    // edge neighbours only
    let touches: BTreeMap<String, usize> = r
        .iter()
        .filter(|x| x.relation == R::Touches && x.subject == Entity::Cell(p))
        .fold(BTreeMap::new(), |mut m, x| {
            *m.entry(x.object.to_string()).or_default() += 1;
            m
        });
    assert_eq!(touches.len(), 4);
    assert!(cell_hierarchy_records(3, 5, &region).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn records_never_relate_disjoint_entities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lat, lng) = (rng.gen_range(-60.0..60.0), rng.gen_range(-170.0..170.0));
        let (w, h) = (rng.gen_range(0.01..0.08), rng.gen_range(0.01..0.08));
        let f = feature("f", &rect_wkt(lng, lat, lng + w, lat + h));
        let r = enrich_feature(&f, 13).unwrap();
        check_inverses(&r);
        for x in r.iter().step_by(100) {
            if let (Entity::Feature(_), Entity::Cell(c)) = (&x.subject, &x.object) {
                prop_assert_ne!(f.shape.relate_cell(*c), CellRelation::Disjoint);
            }
        }
        let classic = containment_only(&r);
        let compressed = enrich_compressed(&f, CompressedParams::new(5, 13)).unwrap();
        check_inverses(&compressed);
        let leaves: Vec<CellId> = r
            .iter()
            .filter_map(|x| match (&x.object, x.relation) {
                (Entity::Cell(c), R::Contains) | (Entity::Cell(c), R::Within) => Some(*c),
                _ => None,
            })
            .collect();
        let mut all = compressed;
        all.extend(ancestor_chain_records(&leaves, 5));
        prop_assert_eq!(closure_at_level(&all, 13, "f"), classic);
    }
}
