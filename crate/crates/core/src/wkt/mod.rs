//! Well-known text: parsing, serialization of cells under an antimeridian
//! policy, crossing detection, and conversion to spherical shapes.

pub mod antimeridian;
mod parse;

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::cell::CellId;
use crate::latlng::LatLng;
use crate::point::UnitVector;
use crate::sphere::area::loop_area;
use crate::sphere::{densify_line, densify_ring, GeomError, Lines, Location, Shape, SphericalPolygon};
use antimeridian::Xy;

pub use parse::parse_wkt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WktError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("coordinate out of range at byte {offset}: lng {lng}, lat {lat}")]
    OutOfRange { offset: usize, lng: f64, lat: f64 },
    #[error("invalid ring at byte {offset}: {message}")]
    Ring { offset: usize, message: String },
    #[error("unsupported geometry type {kind:?} at byte {offset}")]
    UnsupportedKind { offset: usize, kind: String },
    #[error("cell {0} crosses the antimeridian")]
    AntimeridianCrossing(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

impl WktError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            WktError::Syntax { offset, .. }
            | WktError::OutOfRange { offset, .. }
            | WktError::Ring { offset, .. }
            | WktError::UnsupportedKind { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

/// Parsed geometry. Rings are closed (first position repeated).
#[derive(Debug, Clone, PartialEq)]
pub enum WktGeometry {
    Point(LatLng),
    LineString(Vec<LatLng>),
    Polygon(Vec<Vec<LatLng>>),
    MultiPoint(Vec<LatLng>),
    MultiLineString(Vec<Vec<LatLng>>),
    MultiPolygon(Vec<Vec<Vec<LatLng>>>),
}

/// What `cell_to_wkt` does with a cell whose lon/lat outline crosses the
/// antimeridian or encloses a pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AntimeridianPolicy {
    #[default]
    Split,
    Reject,
    PointAbstract,
}

impl FromStr for AntimeridianPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "split" => Ok(Self::Split),
            "reject" => Ok(Self::Reject),
            "point" => Ok(Self::PointAbstract),
            other => Err(format!("unknown antimeridian policy {other:?} (split|reject|point)")),
        }
    }
}

fn num(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn num6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn write_coords(out: &mut String, pts: impl Iterator<Item = Xy>, f: fn(f64) -> String) {
    out.push('(');
    for (i, (x, y)) in pts.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", f(x), f(y));
    }
    out.push(')');
}

fn xy(ll: &LatLng) -> Xy {
    (ll.lng(), ll.lat())
}

fn write_polygon(out: &mut String, rings: &[Vec<Xy>], f: fn(f64) -> String) {
    out.push('(');
    for (i, r) in rings.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_coords(out, r.iter().copied(), f);
    }
    out.push(')');
}

impl WktGeometry {
    pub fn kind(&self) -> &'static str {
        match self {
            WktGeometry::Point(_) => "POINT",
            WktGeometry::LineString(_) => "LINESTRING",
            WktGeometry::Polygon(_) => "POLYGON",
            WktGeometry::MultiPoint(_) => "MULTIPOINT",
            WktGeometry::MultiLineString(_) => "MULTILINESTRING",
            WktGeometry::MultiPolygon(_) => "MULTIPOLYGON",
        }
    }

    pub fn to_wkt(&self) -> String {
        let mut s = String::from(self.kind());
        let conv = |v: &Vec<LatLng>| v.iter().map(xy).collect::<Vec<_>>();
        match self {
            WktGeometry::Point(p) => write_coords(&mut s, std::iter::once(xy(p)), num),
            WktGeometry::LineString(l) => write_coords(&mut s, l.iter().map(xy), num),
            WktGeometry::MultiPoint(l) => write_coords(&mut s, l.iter().map(xy), num),
            WktGeometry::Polygon(rs) => write_polygon(&mut s, &rs.iter().map(conv).collect::<Vec<_>>(), num),
            WktGeometry::MultiLineString(ls) => {
                write_polygon(&mut s, &ls.iter().map(conv).collect::<Vec<_>>(), num)
            }
            WktGeometry::MultiPolygon(ps) => {
                s.push('(');
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    write_polygon(&mut s, &p.iter().map(conv).collect::<Vec<_>>(), num);
                }
                s.push(')');
            }
        }
        s
    }

    /// Rewrites polygons and lines so no edge spans more than 180 degrees
    /// of longitude, cutting at ±180 and closing pole-enclosing rings over
    /// the pole.
    pub fn split_antimeridian(&self) -> WktGeometry {
        match self {
            WktGeometry::Point(_) | WktGeometry::MultiPoint(_) => self.clone(),
            WktGeometry::LineString(l) => lines_from(split_lines(std::slice::from_ref(l))),
            WktGeometry::MultiLineString(ls) => lines_from(split_lines(ls)),
            WktGeometry::Polygon(rs) => polygons_from(split_polygon(rs)),
            WktGeometry::MultiPolygon(ps) => polygons_from(ps.iter().flat_map(|p| split_polygon(p)).collect()),
        }
    }

    /// Spherical shape after antimeridian splitting and densification of
    /// every edge to at most `max_step` degrees. Shells are oriented to
    /// enclose the smaller side; holes the opposite way.
    pub fn to_shape(&self, max_step: f64) -> Result<Shape, WktError> {
        match self.split_antimeridian() {
            WktGeometry::Point(p) => Ok(Shape::Point(p.to_point())),
            WktGeometry::MultiPoint(ps) => Ok(Shape::MultiPoint(ps.iter().map(|p| p.to_point()).collect())),
            WktGeometry::LineString(l) => Ok(Shape::Lines(Lines::new(vec![densify_line(&l, max_step)?]))),
            WktGeometry::MultiLineString(ls) => {
                let chains = ls.iter().map(|l| densify_line(l, max_step)).collect::<Result<_, _>>()?;
                Ok(Shape::Lines(Lines::new(chains)))
            }
            WktGeometry::Polygon(rs) => Ok(Shape::Polygon(polygon_loops(std::slice::from_ref(&rs), max_step)?)),
            WktGeometry::MultiPolygon(ps) => Ok(Shape::Polygon(polygon_loops(&ps, max_step)?)),
        }
    }
}

fn to_ll(p: Xy) -> LatLng {
    LatLng::new(p.1.clamp(-90.0, 90.0), p.0.clamp(-180.0, 180.0)).expect("clamped coordinate")
}

fn close(mut r: Vec<Xy>) -> Vec<Xy> {
    if let Some(&f) = r.first() {
        r.push(f);
    }
    r
}

fn lines_from(mut ls: Vec<Vec<LatLng>>) -> WktGeometry {
    if ls.len() == 1 {
        WktGeometry::LineString(ls.pop().unwrap())
    } else {
        WktGeometry::MultiLineString(ls)
    }
}

fn polygons_from(mut ps: Vec<Vec<Vec<LatLng>>>) -> WktGeometry {
    if ps.len() == 1 {
        WktGeometry::Polygon(ps.pop().unwrap())
    } else {
        WktGeometry::MultiPolygon(ps)
    }
}

fn split_lines(ls: &[Vec<LatLng>]) -> Vec<Vec<LatLng>> {
    ls.iter()
        .flat_map(|l| antimeridian::split_line(&l.iter().map(xy).collect::<Vec<_>>()))
        .map(|p| p.into_iter().map(to_ll).collect())
        .collect()
}

fn open_xy(ring: &[LatLng]) -> Vec<Xy> {
    let mut v: Vec<Xy> = ring.iter().map(xy).collect();
    if v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    v
}

/// Splits one polygon (shell plus holes) into pieces that each stay within
/// `[-180, 180]`. Holes go to the shell piece of the same strip that
/// contains them.
fn split_polygon(rings: &[Vec<LatLng>]) -> Vec<Vec<Vec<LatLng>>> {
    let shell_open = open_xy(&rings[0]);
    let shell = antimeridian::planar_ring(&shell_open);
    let mut pieces: Vec<(i64, Vec<Xy>, Vec<Vec<Xy>>)> = antimeridian::split_planar_ring(&shell)
        .into_iter()
        .map(|(s, r)| (s, r, Vec::new()))
        .collect();
    for hole in &rings[1..] {
        let open = open_xy(hole);
        let mut u = antimeridian::unwrap(&open);
        // align the hole's unwrapping with the shell's
        let off = shell[0].0 + crate::sphere::densify::lng_delta(shell_open[0].0, open[0].0) - u[0].0;
        for p in &mut u {
            p.0 += off;
        }
        for (strip, hp) in antimeridian::split_planar_ring(&u) {
            let probe = hp[0];
            let target = pieces
                .iter()
                .position(|(s, r, _)| *s == strip && antimeridian::planar_contains(r, probe))
                .or_else(|| pieces.iter().position(|(s, _, _)| *s == strip));
            if let Some(i) = target {
                pieces[i].2.push(hp);
            }
        }
    }
    pieces
        .into_iter()
        .map(|(_, shell, holes)| {
            std::iter::once(shell)
                .chain(holes)
                .map(|r| close(r).into_iter().map(to_ll).collect())
                .collect()
        })
        .collect()
}

fn oriented(mut v: Vec<UnitVector>, hole: bool) -> Vec<UnitVector> {
    v.dedup();
    let big = loop_area(&v) > 2.0 * std::f64::consts::PI;
    if big != hole {
        v.reverse();
    }
    v
}

fn polygon_loops(polys: &[Vec<Vec<LatLng>>], max_step: f64) -> Result<SphericalPolygon, WktError> {
    let mut loops = Vec::new();
    for rings in polys {
        for (i, r) in rings.iter().enumerate() {
            let chain = densify_ring(r, max_step)?;
            loops.push((oriented(chain.vertices, i > 0), i > 0));
        }
    }
    Ok(SphericalPolygon::new(loops)?)
}

/// True if the lon/lat ring has consecutive vertices 180 or more degrees of
/// longitude apart, or its smaller spherical side strictly contains a pole.
pub fn detect_crossing(ring: &[LatLng]) -> bool {
    if ring.windows(2).any(|w| (w[1].lng() - w[0].lng()).abs() >= 180.0) {
        return true;
    }
    let mut v: Vec<UnitVector> = ring.iter().map(|p| p.to_point()).collect();
    v.dedup();
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    if v.len() < 3 {
        return false;
    }
    match SphericalPolygon::new(vec![(oriented(v, false), false)]) {
        Ok(p) => [1.0, -1.0]
            .iter()
            .any(|&z| p.classify(UnitVector::new(0.0, 0.0, z)) == Location::Inside),
        Err(_) => false,
    }
}

const POLE_LAT: f64 = 90.0 - 1e-9;

/// The cell outline as a closed lon/lat ring: corners, plus geodesic
/// interpolation points every `densify` degrees when given. A corner at a
/// pole is replaced by two pole positions at its neighbours' longitudes.
pub fn cell_ring(cell: CellId, densify: Option<f64>) -> Vec<LatLng> {
    let v = cell.vertices();
    let mut pts: Vec<UnitVector> = Vec::new();
    for k in 0..4 {
        let (a, b) = (v[k], v[(k + 1) % 4]);
        pts.push(a);
        if let Some(step) = densify.filter(|s| *s > 0.0) {
            let n = (a.angle(b).to_degrees() / step).ceil() as usize;
            for i in 1..n {
                pts.push(crate::sphere::edge::interpolate(a, b, i as f64 / n as f64));
            }
        }
    }
    let lls: Vec<LatLng> = pts.into_iter().map(LatLng::from_point).collect();
    let n = lls.len();
    let mut ring = Vec::with_capacity(n + 2);
    for i in 0..n {
        let p = lls[i];
        if p.lat().abs() >= POLE_LAT {
            let lat = 90f64.copysign(p.lat());
            let prev = lls[(i + n - 1) % n].lng();
            let next = lls[(i + 1) % n].lng();
            ring.push(LatLng::new(lat, prev).unwrap());
            ring.push(LatLng::new(lat, next).unwrap());
        } else {
            ring.push(p);
        }
    }
    ring.push(ring[0]);
    ring
}

/// True if the cell's lon/lat outline needs the antimeridian policy.
pub fn cell_crosses(cell: CellId) -> bool {
    let g = cell.geom();
    [1.0, -1.0]
        .iter()
        .any(|&z| g.locate(UnitVector::new(0.0, 0.0, z)) == Location::Inside)
        || detect_crossing(&cell_ring(cell, None))
}

/// Serializes a cell with six decimals. Non-crossing cells become a closed
/// POLYGON; crossing cells follow `policy`.
pub fn cell_to_wkt(cell: CellId, policy: AntimeridianPolicy, densify: Option<f64>) -> Result<String, WktError> {
    let ring = cell_ring(cell, densify);
    if !cell_crosses(cell) {
        let mut s = String::from("POLYGON");
        write_polygon(&mut s, &[ring.iter().map(xy).collect()], num6);
        return Ok(s);
    }
    match policy {
        AntimeridianPolicy::Reject => Err(WktError::AntimeridianCrossing(cell.token())),
        AntimeridianPolicy::PointAbstract => {
            let c = cell.center_latlng();
            let mut s = String::from("POINT");
            write_coords(&mut s, std::iter::once(xy(&c)), num6);
            Ok(s)
        }
        AntimeridianPolicy::Split => {
            let planar = antimeridian::planar_ring(&open_xy(&ring));
            let mut s = String::from("MULTIPOLYGON(");
            for (i, (_, piece)) in antimeridian::split_planar_ring(&planar).into_iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_polygon(&mut s, &[close(piece)], num6);
            }
            s.push(')');
            Ok(s)
        }
    }
}

/// One `id<TAB>WKT` record per non-blank line; `#` starts a comment line.
/// Errors carry the 1-based line number.
pub fn parse_feature_lines(text: &str) -> Result<Vec<(String, WktGeometry)>, (usize, WktError)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((id, wkt)) = line.split_once('\t') else {
            return Err((
                i + 1,
                WktError::Syntax {
                    offset: 0,
                    message: "expected id<TAB>WKT".into(),
                },
            ));
        };
        out.push((id.to_string(), parse_wkt(wkt).map_err(|e| (i + 1, e))?));
    }
    Ok(out)
}
