//! Synthetic comparison of retrieval through materialized cell links
//! against direct geometric evaluation.
//!
//! Q1 (point/area): points inside a region. The enriched form follows
//! `point sfWithin cell sfWithin region`, so points in boundary cells are
//! missed by design. Q3 (area/area): regions sharing an interior or
//! boundary cell with the query region; pairs that only share a boundary
//! cell are reported even when the polygons do not meet.

use std::collections::BTreeSet;
use std::time::Instant;

use geogrid_core::enrich::{enrich_feature, EnrichError, Feature};
use geogrid_core::sphere::{CellRelation, Shape, SphericalPolygon, DEFAULT_MAX_STEP};
use geogrid_core::wkt::WktGeometry;
use geogrid_core::{CellId, LatLng, UnitVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::emit::{emit_relations, EmitError};
use crate::iri::IriScheme;
use crate::query::{eval_path, PathQuery, PathStep};
use crate::rdf::Term;
use crate::store::{Id, TripleStore};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Enrich(#[from] EnrichError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("feature {0} is not {1}")]
    Kind(String, &'static str),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BenchSpec {
    pub points: usize,
    pub regions: usize,
    pub level: u8,
    pub seed: u64,
    pub runs: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            points: 50_000,
            regions: 100,
            level: 13,
            seed: 1,
            runs: 5,
        }
    }
}

/// Box the synthetic features are drawn from: (west, south, east, north).
pub const BENCH_BOX: (f64, f64, f64, f64) = (-100.0, 36.0, -94.0, 40.0);
const REGION_VERTICES: usize = 96;

/// A star-shaped polygon around a random centre with jittered radii, which
/// keeps it simple (no self-intersections).
fn random_region(rng: &mut impl Rng) -> String {
    let (w, s, e, n) = BENCH_BOX;
    let (lat, lng) = (rng.gen_range(s + 0.5..n - 0.5), rng.gen_range(w + 0.5..e - 0.5));
    let r0: f64 = rng.gen_range(0.12..0.3);
    let scale = 1.0 / lat.to_radians().cos();
    let mut pts: Vec<String> = (0..REGION_VERTICES)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / REGION_VERTICES as f64;
            let r = r0 * rng.gen_range(0.75..1.25);
            format!("{} {}", lng + r * a.cos() * scale, lat + r * a.sin())
        })
        .collect();
    pts.push(pts[0].clone());
    format!("POLYGON(({}))", pts.join(", "))
}

pub struct BenchDataset {
    pub level: u8,
    pub regions: Vec<Feature>,
    pub points: Vec<Feature>,
    pub store: TripleStore,
    region_polys: Vec<SphericalPolygon>,
    point_locs: Vec<UnitVector>,
    /// Term id to point index, and to region index.
    point_of: Vec<Option<usize>>,
    region_of: Vec<Option<usize>>,
    region_ids: Vec<Id>,
    within: PathStep,
    /// sfWithin, sfContains, sfOverlaps; `Id::MAX` when absent.
    pred_ids: [Id; 3],
}

impl BenchDataset {
    pub fn generate(spec: &BenchSpec) -> Result<Self, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut regions = Vec::with_capacity(spec.regions);
        for j in 0..spec.regions {
            let g = geogrid_core::wkt::parse_wkt(&random_region(&mut rng)).expect("generated WKT is valid");
            regions.push(Feature::new(format!("region{j}"), g, DEFAULT_MAX_STEP)?);
        }
        let (w, s, e, n) = BENCH_BOX;
        let mut points = Vec::with_capacity(spec.points);
        for i in 0..spec.points {
            let (lng, lat) = (rng.gen_range(w..e), rng.gen_range(s..n));
            let g = WktGeometry::Point(LatLng::new(lat, lng).expect("inside the box"));
            points.push(Feature::new(format!("pt{i}"), g, DEFAULT_MAX_STEP)?);
        }
        Self::from_features(regions, points, spec.level)
    }

    /// Enriches every feature at `level` (in parallel) and loads the
    /// resulting triples.
    pub fn from_features(regions: Vec<Feature>, points: Vec<Feature>, level: u8) -> Result<Self, BenchError> {
        let region_polys = regions
            .iter()
            .map(|f| match &f.shape {
                Shape::Polygon(p) => Ok(p.clone()),
                _ => Err(BenchError::Kind(f.id.clone(), "a polygon")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let point_locs = points
            .iter()
            .map(|f| match &f.shape {
                Shape::Point(p) => Ok(*p),
                _ => Err(BenchError::Kind(f.id.clone(), "a point")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scheme = IriScheme::default();
        let parts: Vec<Result<Vec<_>, BenchError>> = regions
            .par_iter()
            .chain(points.par_iter())
            .map(|f| Ok(emit_relations(&enrich_feature(f, level)?, &scheme)?))
            .collect();
        let mut triples = Vec::new();
        for p in parts {
            triples.extend(p?);
        }
        let store = TripleStore::from_triples(triples);
        let mut point_of = vec![None; store.dict().len()];
        let mut region_of = vec![None; store.dict().len()];
        let mut region_ids = Vec::with_capacity(regions.len());
        for (i, f) in points.iter().enumerate() {
            if let Some(id) = store.iri_id(&scheme.feature(&f.id).expect("valid id")) {
                point_of[id as usize] = Some(i);
            }
        }
        for (j, f) in regions.iter().enumerate() {
            let id = store.iri_id(&scheme.feature(&f.id).expect("valid id")).unwrap_or(Id::MAX);
            if id != Id::MAX {
                region_of[id as usize] = Some(j);
            }
            region_ids.push(id);
        }
        let pred_ids = ["sfWithin", "sfContains", "sfOverlaps"].map(|n| store.iri_id(&scheme.ont(n)).unwrap_or(Id::MAX));
        let within = PathStep::new(scheme.ont("sfWithin"));
        Ok(Self {
            level,
            regions,
            points,
            store,
            region_polys,
            point_locs,
            point_of,
            region_of,
            region_ids,
            within,
            pred_ids,
        })
    }

    fn region_term(&self, j: usize) -> Option<Term> {
        let id = self.region_ids[j];
        (id != Id::MAX).then(|| self.store.term(id).clone())
    }

    /// Points linked to region `j` through an interior cell.
    pub fn q1_enriched(&self, j: usize) -> BTreeSet<usize> {
        let Some(r) = self.region_term(j) else {
            return BTreeSet::new();
        };
        let q = PathQuery {
            steps: vec![self.within.clone(), self.within.clone()],
            start: None,
            end: Some(r),
        };
        eval_path(&self.store, &q)
            .expect("nonempty path")
            .into_iter()
            .filter_map(|(a, _)| self.point_of[a as usize])
            .collect()
    }

    /// Points whose location region `j` contains, boundary included.
    pub fn q1_geometric(&self, j: usize) -> BTreeSet<usize> {
        let poly = &self.region_polys[j];
        self.point_locs
            .iter()
            .enumerate()
            .filter(|(_, p)| poly.contains_point(**p))
            .map(|(i, _)| i)
            .collect()
    }

    /// Other regions sharing a cell with region `j`: the region's interior
    /// and boundary cells, then every feature each cell is within or
    /// overlaps.
    pub fn q3_enriched(&self, j: usize) -> BTreeSet<usize> {
        let r = self.region_ids[j];
        let mut out = BTreeSet::new();
        if r == Id::MAX {
            return out;
        }
        let [within, contains, overlaps] = self.pred_ids;
        let st = &self.store;
        for cell in st.objects(r, contains).chain(st.objects(r, overlaps)) {
            for f in st.objects(cell, within).chain(st.objects(cell, overlaps)) {
                if let Some(k) = self.region_of[f as usize] {
                    if k != j {
                        out.insert(k);
                    }
                }
            }
        }
        out
    }

    /// Other regions whose polygon meets region `j`.
    pub fn q3_geometric(&self, j: usize) -> BTreeSet<usize> {
        let a = &self.region_polys[j];
        (0..self.region_polys.len())
            .filter(|&k| k != j && polygons_intersect(a, &self.region_polys[k]))
            .collect()
    }

    /// A point the two strategies disagree on must lie within one cell
    /// diameter of the region boundary.
    fn point_near_boundary(&self, i: usize, j: usize) -> bool {
        let p = self.point_locs[i];
        let cell = CellId::from_point(p).parent_unchecked(self.level);
        let v = cell.vertices();
        let diam = v[0].angle(v[2]).max(v[1].angle(v[3]));
        self.region_polys[j].boundary_distance(p, diam).is_some()
    }

    /// A region pair the strategies disagree on must share a cell that is a
    /// boundary cell of at least one of them.
    fn regions_adjacent(&self, j: usize, k: usize) -> bool {
        let cells = |r: usize| -> BTreeSet<CellId> {
            geogrid_core::cover::homogeneous(&self.regions[r].shape, self.level)
                .map(|it| it.map(|(c, _)| c).collect())
                .unwrap_or_default()
        };
        let (a, b) = (cells(j), cells(k));
        a.intersection(&b).any(|&c| {
            self.regions[j].shape.relate_cell(c) != CellRelation::ContainsCell
                || self.regions[k].shape.relate_cell(c) != CellRelation::ContainsCell
        })
    }
}

/// Polygons meet when an edge of one crosses the other or a vertex of one
/// lies in the other.
pub fn polygons_intersect(a: &SphericalPolygon, b: &SphericalPolygon) -> bool {
    let ((ca, ra), (cb, rb)) = (a.bound(), b.bound());
    if ca.angle(cb) > ra + rb {
        return false;
    }
    let verts = |p: &SphericalPolygon| -> Vec<UnitVector> {
        p.loops().iter().flat_map(|l| l.vertices().iter().copied()).collect()
    };
    let (va, vb) = (verts(a), verts(b));
    if va.iter().any(|v| b.contains_point(*v)) || vb.iter().any(|v| a.contains_point(*v)) {
        return true;
    }
    a.loops()
        .iter()
        .any(|l| l.chain().loop_edges().any(|(c, d)| b.crosses_edge(c, d)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub query: String,
    pub entity: String,
    /// `missing` (geometric only) or `extra` (enriched only).
    pub side: &'static str,
    pub boundary_adjacent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub enriched_ms: f64,
    pub geometric_ms: f64,
    pub speedup: f64,
    pub enriched_results: usize,
    pub geometric_results: usize,
    pub mismatches: Vec<Mismatch>,
    pub mismatches_boundary_adjacent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub spec: BenchSpec,
    pub triples: usize,
    pub setup_ms: f64,
    pub q1_point_in_area: QueryReport,
    pub q3_area_overlaps_area: QueryReport,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Median wall time over `runs` of `f` answering every query in turn.
fn timed<T>(runs: usize, mut f: impl FnMut() -> T) -> (f64, T) {
    let mut times = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs.max(1) {
        let t0 = Instant::now();
        last = Some(std::hint::black_box(f()));
        times.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    (median(times), last.expect("at least one run"))
}

fn compare<E, G, A>(d: &BenchDataset, runs: usize, enriched: E, geometric: G, adjacent: A, name: impl Fn(usize) -> String) -> QueryReport
where
    E: Fn(&BenchDataset, usize) -> BTreeSet<usize>,
    G: Fn(&BenchDataset, usize) -> BTreeSet<usize>,
    A: Fn(&BenchDataset, usize, usize) -> bool,
{
    let n = d.regions.len();
    let (enriched_ms, er) = timed(runs, || (0..n).map(|j| enriched(d, j)).collect::<Vec<_>>());
    let (geometric_ms, gr) = timed(runs, || (0..n).map(|j| geometric(d, j)).collect::<Vec<_>>());
    let mut mismatches = Vec::new();
    for j in 0..n {
        for (side, set) in [("missing", gr[j].difference(&er[j])), ("extra", er[j].difference(&gr[j]))] {
            for &k in set {
                mismatches.push(Mismatch {
                    query: d.regions[j].id.clone(),
                    entity: name(k),
                    side,
                    boundary_adjacent: adjacent(d, k, j),
                });
            }
        }
    }
    QueryReport {
        enriched_ms,
        geometric_ms,
        speedup: geometric_ms / enriched_ms.max(1e-9),
        enriched_results: er.iter().map(BTreeSet::len).sum(),
        geometric_results: gr.iter().map(BTreeSet::len).sum(),
        mismatches_boundary_adjacent: mismatches.iter().all(|m| m.boundary_adjacent),
        mismatches,
    }
}

/// Single-threaded timings of both strategies for Q1 and Q3 over every
/// region of the dataset.
pub fn run_bench(d: &BenchDataset, spec: BenchSpec, setup_ms: f64) -> BenchReport {
    let q1 = compare(
        d,
        spec.runs,
        BenchDataset::q1_enriched,
        BenchDataset::q1_geometric,
        |d, i, j| d.point_near_boundary(i, j),
        |i| d.points[i].id.clone(),
    );
    let q3 = compare(
        d,
        spec.runs,
        BenchDataset::q3_enriched,
        BenchDataset::q3_geometric,
        |d, k, j| d.regions_adjacent(j, k),
        |k| d.regions[k].id.clone(),
    );
    BenchReport {
        spec,
        triples: d.store.len(),
        setup_ms,
        q1_point_in_area: q1,
        q3_area_overlaps_area: q3,
    }
}

pub fn bench_compare(spec: BenchSpec) -> Result<BenchReport, BenchError> {
    let t0 = Instant::now();
    let d = BenchDataset::generate(&spec)?;
    let setup_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(run_bench(&d, spec, setup_ms))
}
