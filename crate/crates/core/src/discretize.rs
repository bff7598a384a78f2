//! Discretizing vector and raster data onto reference cells as
//! observations, and rolling observations up the hierarchy.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::cell::CellId;
use crate::cover::{homogeneous, CoverError, Covering};
use crate::enrich::{Feature, GeometryKind};
use crate::latlng::LatLng;
use crate::sphere::{overlap_fraction, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuantityKind {
    /// Extensive quantities that add across disjoint parts (overlap areas).
    Mereotopological,
    /// Intensive quantities (indices, percentages, means) that do not.
    Arithmetic,
}

impl FromStr for QuantityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mereotopological" => Ok(Self::Mereotopological),
            "arithmetic" => Ok(Self::Arithmetic),
            other => Err(format!("unknown quantity kind {other:?} (mereotopological|arithmetic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub id: String,
    pub cell: CellId,
    pub property: String,
    pub value: f64,
    pub unit: String,
    pub time: String,
    pub kind: QuantityKind,
    /// Observation class local name, e.g. `CroplandS2OverlapObservation`.
    pub class: String,
}

pub const DEFAULT_OBSERVATION_CLASS: &str = "S2OverlapObservation";

impl Observation {
    pub fn new(cell: CellId, property: &str, value: f64, unit: &str, time: &str, kind: QuantityKind) -> Self {
        Self {
            id: observation_id(property, cell, time),
            cell,
            property: property.to_string(),
            value,
            unit: unit.to_string(),
            time: time.to_string(),
            kind,
            class: DEFAULT_OBSERVATION_CLASS.to_string(),
        }
    }
}

impl QuantityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mereotopological => "mereotopological",
            Self::Arithmetic => "arithmetic",
        }
    }
}

impl Observation {
    /// `cell token<TAB>property<TAB>value<TAB>unit<TAB>time<TAB>kind<TAB>class`
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.cell.token(),
            self.property,
            self.value,
            self.unit,
            self.time,
            self.kind.as_str(),
            self.class
        )
    }

    pub fn from_tsv(line: &str) -> Result<Self, String> {
        let cols: Vec<&str> = line.split('\t').collect();
        let [cell, property, value, unit, time, kind, class] = cols.as_slice() else {
            return Err(format!("expected 7 tab-separated columns, got {}", cols.len()));
        };
        let cell = CellId::from_token(cell).map_err(|e| e.to_string())?;
        let value: f64 = value.parse().map_err(|_| format!("bad value {value:?}"))?;
        validate_time(time).map_err(|e| e.to_string())?;
        let mut o = Observation::new(cell, property, value, unit, time, kind.parse()?);
        o.class = class.to_string();
        Ok(o)
    }
}

/// Reads observation lines, skipping blanks and `#` comments. Errors carry
/// the 1-based line number.
pub fn parse_observation_lines(text: &str) -> Result<Vec<Observation>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| Observation::from_tsv(l).map_err(|e| (i + 1, e)))
        .collect()
}

/// `{property}.{decimal cell id}.{time}`
pub fn observation_id(property: &str, cell: CellId, time: &str) -> String {
    format!("{property}.{}.{time}", cell.raw())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizeError {
    #[error("vector discretization needs an areal feature, got {0:?}")]
    NotAreal(GeometryKind),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("raster: {0}")]
    Raster(String),
    #[error("raster CRS {0:?} is not geographic lon/lat")]
    NonGeographicCrs(String),
    #[error("no valid pixels overlap the reference grid")]
    EmptyOverlap,
    #[error("property {0:?} is arithmetic and cannot be rolled up by summation")]
    ArithmeticRollUp(String),
    #[error("roll-up: {0}")]
    Levels(String),
    #[error("weights: {0}")]
    Weights(String),
    #[error("time {0:?} is not an ISO-8601 year or date")]
    Time(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

/// Accepts `YYYY`, `YYYY-MM` or `YYYY-MM-DD`.
pub fn validate_time(t: &str) -> Result<(), DiscretizeError> {
    let parts: Vec<&str> = t.split('-').collect();
    let digits = |s: &str, n: usize| s.len() == n && s.bytes().all(|b| b.is_ascii_digit());
    let ok = match parts.as_slice() {
        [y] => digits(y, 4),
        [y, m] => digits(y, 4) && digits(m, 2) && (1..=12).contains(&m.parse::<u32>().unwrap()),
        [y, m, d] => {
            digits(y, 4)
                && digits(m, 2)
                && digits(d, 2)
                && (1..=12).contains(&m.parse::<u32>().unwrap())
                && (1..=31).contains(&d.parse::<u32>().unwrap())
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(DiscretizeError::Time(t.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertySpec {
    pub kind: QuantityKind,
    pub unit: String,
    pub class: Option<String>,
}

/// `property<TAB>kind<TAB>unit[<TAB>observation class]` per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub properties: BTreeMap<String, PropertySpec>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, DiscretizeError> {
        let mut properties = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| DiscretizeError::Manifest { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(err(format!("expected 3 or 4 tab-separated columns, got {}", cols.len())));
            }
            let kind = cols[1].parse().map_err(err)?;
            properties.insert(
                cols[0].to_string(),
                PropertySpec {
                    kind,
                    unit: cols[2].to_string(),
                    class: cols.get(3).map(|s| s.to_string()),
                },
            );
        }
        Ok(Self { properties })
    }

    /// Exact match, else the entry for the base property of a derived
    /// per-category name `base_category`.
    pub fn get(&self, property: &str) -> Option<&PropertySpec> {
        self.properties.get(property).or_else(|| {
            property
                .rsplit_once('_')
                .and_then(|(base, _)| self.properties.get(base))
        })
    }
}

fn apply_spec(mut o: Observation, spec: Option<&PropertySpec>) -> Observation {
    if let Some(s) = spec {
        o.kind = s.kind;
        o.unit = s.unit.clone();
        if let Some(c) = &s.class {
            o.class = c.clone();
        }
    }
    o
}

/// One observation per reference cell the feature overlaps, valued at the
/// overlap area in km². Pieces of a multipolygon inside one cell are
/// summed into that cell's single observation.
pub fn discretize_vector(
    f: &Feature,
    level: u8,
    property: &str,
    time: &str,
    manifest: Option<&Manifest>,
) -> Result<Vec<Observation>, DiscretizeError> {
    validate_time(time)?;
    let Shape::Polygon(poly) = &f.shape else {
        return Err(DiscretizeError::NotAreal(f.kind()));
    };
    let cells: Vec<(CellId, bool)> = homogeneous(&f.shape, level)?
        .map(|(c, r)| (c, r.contains_cell()))
        .collect();
    let spec = manifest.and_then(|m| m.get(property));
    let out = cells
        .par_iter()
        .filter_map(|&(c, full)| {
            let frac = if full { 1.0 } else { overlap_fraction(poly, c) };
            let value = frac * c.area_km2();
            (value > 0.0).then(|| {
                let o = Observation::new(c, property, value, "km2", time, QuantityKind::Mereotopological);
                apply_spec(o, spec)
            })
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterStat {
    PercentByCategory,
    Mean,
    Sum,
}

impl FromStr for RasterStat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "percent" | "percent-by-category" => Ok(Self::PercentByCategory),
            "mean" => Ok(Self::Mean),
            "sum" => Ok(Self::Sum),
            other => Err(format!("unknown raster statistic {other:?} (percent|mean|sum)")),
        }
    }
}

/// Sidecar declaring the raster's CRS; only geographic lon/lat is accepted.
#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct RasterSidecar {
    pub crs: String,
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

const GEOGRAPHIC_CRS: [&str; 4] = ["EPSG:4326", "OGC:CRS84", "CRS84", "geographic"];

/// Lon/lat raster, rows stored north to south.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub ncols: usize,
    pub nrows: usize,
    /// Longitude of the west edge.
    pub west: f64,
    /// Latitude of the south edge.
    pub south: f64,
    pub cell_size: f64,
    pub nodata: Option<f64>,
    pub values: Vec<f64>,
    /// Category code to label, for percent-by-category property names.
    pub categories: BTreeMap<String, String>,
}

impl RasterGrid {
    /// Parses an ESRI ASCII grid.
    pub fn parse_ascii(text: &str) -> Result<Self, DiscretizeError> {
        let bad = |m: String| DiscretizeError::Raster(m);
        let mut header: HashMap<String, f64> = HashMap::new();
        let mut tokens = text.split_whitespace().peekable();
        while let Some(&t) = tokens.peek() {
            if t.parse::<f64>().is_ok() {
                break;
            }
            let key = t.to_ascii_lowercase();
            tokens.next();
            let v = tokens
                .next()
                .ok_or_else(|| bad(format!("header {key} has no value")))?
                .parse::<f64>()
                .map_err(|_| bad(format!("header {key} is not numeric")))?;
            header.insert(key, v);
        }
        let get = |k: &str| header.get(k).copied().ok_or_else(|| bad(format!("missing header {k}")));
        let ncols = get("ncols")? as usize;
        let nrows = get("nrows")? as usize;
        let cell_size = get("cellsize")?;
        if ncols == 0 || nrows == 0 || !(cell_size > 0.0) {
            return Err(bad("ncols, nrows and cellsize must be positive".into()));
        }
        let (west, south) = match (header.get("xllcorner"), header.get("yllcorner")) {
            (Some(&x), Some(&y)) => (x, y),
            _ => (get("xllcenter")? - cell_size / 2.0, get("yllcenter")? - cell_size / 2.0),
        };
        let values = tokens
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad value {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != ncols * nrows {
            return Err(bad(format!("expected {} values, found {}", ncols * nrows, values.len())));
        }
        let g = Self {
            ncols,
            nrows,
            west,
            south,
            cell_size,
            nodata: header.get("nodata_value").copied(),
            values,
            categories: BTreeMap::new(),
        };
        let (east, north) = (g.west + g.cell_size * ncols as f64, g.south + g.cell_size * nrows as f64);
        if g.west < -180.0 || east > 180.0 || g.south < -90.0 || north > 90.0 {
            return Err(bad("extent exceeds lon/lat bounds".into()));
        }
        Ok(g)
    }

    /// Reads `path` and its sidecar `path.json`, rejecting non-geographic
    /// CRS declarations.
    pub fn load(path: &Path) -> Result<Self, DiscretizeError> {
        let text = std::fs::read_to_string(path).map_err(|e| DiscretizeError::Raster(format!("{}: {e}", path.display())))?;
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        let side_text = std::fs::read_to_string(&side)
            .map_err(|e| DiscretizeError::Raster(format!("sidecar {}: {e}", Path::new(&side).display())))?;
        let sidecar: RasterSidecar =
            serde_json::from_str(&side_text).map_err(|e| DiscretizeError::Raster(format!("sidecar: {e}")))?;
        let mut g = Self::parse_ascii(&text)?;
        g.apply_sidecar(sidecar)?;
        Ok(g)
    }

    pub fn apply_sidecar(&mut self, s: RasterSidecar) -> Result<(), DiscretizeError> {
        if !GEOGRAPHIC_CRS.iter().any(|c| c.eq_ignore_ascii_case(&s.crs)) {
            return Err(DiscretizeError::NonGeographicCrs(s.crs));
        }
        self.categories = s.categories;
        Ok(())
    }

    fn is_valid(&self, v: f64) -> bool {
        v.is_finite() && self.nodata != Some(v)
    }

    fn pixel_center(&self, row: usize, col: usize) -> LatLng {
        let lng = self.west + (col as f64 + 0.5) * self.cell_size;
        let lat = self.south + (self.nrows as f64 - row as f64 - 0.5) * self.cell_size;
        LatLng::new(lat, lng).expect("pixel centre inside validated extent")
    }

    fn category_name(&self, v: f64) -> String {
        let code = if v.fract() == 0.0 { format!("{}", v as i64) } else { format!("{v}") };
        self.categories.get(&code).cloned().unwrap_or(code)
    }
}

#[derive(Default, Clone)]
struct Acc {
    count: u64,
    sum: f64,
    categories: BTreeMap<String, u64>,
}

const ROWS_PER_CHUNK: usize = 64;

/// Aggregates valid pixels into the reference cell containing each pixel
/// centre.
pub fn discretize_raster(
    r: &RasterGrid,
    level: u8,
    stat: RasterStat,
    property: &str,
    time: &str,
    manifest: Option<&Manifest>,
) -> Result<Vec<Observation>, DiscretizeError> {
    validate_time(time)?;
    if level > 30 {
        return Err(DiscretizeError::Levels(format!("level {level} > 30")));
    }
    // fixed row chunks merged in order keep float sums independent of worker count
    let rows: Vec<usize> = (0..r.nrows).collect();
    let parts: Vec<BTreeMap<CellId, Acc>> = rows
        .par_chunks(ROWS_PER_CHUNK)
        .map(|chunk| {
            let mut m: BTreeMap<CellId, Acc> = BTreeMap::new();
            for &row in chunk {
                for col in 0..r.ncols {
                    let v = r.values[row * r.ncols + col];
                    if !r.is_valid(v) {
                        continue;
                    }
                    let cell = CellId::from_latlng(r.pixel_center(row, col), level).expect("level checked");
                    let a = m.entry(cell).or_default();
                    a.count += 1;
                    a.sum += v;
                    if stat == RasterStat::PercentByCategory {
                        *a.categories.entry(r.category_name(v)).or_default() += 1;
                    }
                }
            }
            m
        })
        .collect();
    let mut cells: BTreeMap<CellId, Acc> = BTreeMap::new();
    for part in parts {
        for (c, a) in part {
            let e = cells.entry(c).or_default();
            e.count += a.count;
            e.sum += a.sum;
            for (k, n) in a.categories {
                *e.categories.entry(k).or_default() += n;
            }
        }
    }
    if cells.is_empty() {
        return Err(DiscretizeError::EmptyOverlap);
    }
    let mut out = Vec::new();
    for (cell, a) in cells {
        match stat {
            RasterStat::PercentByCategory => {
                for (cat, n) in &a.categories {
                    let prop = format!("{property}_{cat}");
                    let pct = 100.0 * *n as f64 / a.count as f64;
                    let o = Observation::new(cell, &prop, pct, "percent", time, QuantityKind::Arithmetic);
                    let mut o = apply_spec(o, manifest.and_then(|m| m.get(&prop)));
                    o.unit = "percent".into();
                    out.push(o);
                }
            }
            RasterStat::Mean => {
                let o = Observation::new(cell, property, a.sum / a.count as f64, "", time, QuantityKind::Arithmetic);
                out.push(apply_spec(o, manifest.and_then(|m| m.get(property))));
            }
            RasterStat::Sum => {
                let o = Observation::new(cell, property, a.sum, "", time, QuantityKind::Mereotopological);
                out.push(apply_spec(o, manifest.and_then(|m| m.get(property))));
            }
        }
    }
    Ok(out)
}

/// Sums observations into their ancestors at `to_level`, grouped by
/// property, time and unit. Only mereotopological quantities are accepted.
pub fn roll_up(obs: &[Observation], to_level: u8) -> Result<Vec<Observation>, DiscretizeError> {
    if let Some(o) = obs.iter().find(|o| o.kind == QuantityKind::Arithmetic) {
        return Err(DiscretizeError::ArithmeticRollUp(o.property.clone()));
    }
    let Some(first) = obs.first() else {
        return Ok(Vec::new());
    };
    let level = first.cell.level();
    if obs.iter().any(|o| o.cell.level() != level) {
        return Err(DiscretizeError::Levels("observations are at mixed levels".into()));
    }
    if to_level >= level {
        return Err(DiscretizeError::Levels(format!("target level {to_level} is not coarser than {level}")));
    }
    let mut groups: BTreeMap<(CellId, &str, &str, &str), (f64, &Observation)> = BTreeMap::new();
    for o in obs {
        let key = (o.cell.parent_unchecked(to_level), o.property.as_str(), o.time.as_str(), o.unit.as_str());
        groups.entry(key).or_insert((0.0, o)).0 += o.value;
    }
    Ok(groups
        .into_iter()
        .map(|((cell, property, time, unit), (value, proto))| {
            let mut o = Observation::new(cell, property, value, unit, time, proto.kind);
            o.class = proto.class.clone();
            o
        })
        .collect())
}

/// Σ wᵢvᵢ / Σ wᵢ over observations whose cell lies in `region`.
pub fn weighted_aggregate(
    obs: &[Observation],
    region: &Covering,
    weight: impl Fn(CellId) -> f64,
) -> Result<f64, DiscretizeError> {
    let (mut num, mut den, mut any) = (0.0, 0.0, false);
    for o in obs.iter().filter(|o| region.contains(o.cell)) {
        let w = weight(o.cell);
        if !(w >= 0.0) || !w.is_finite() {
            return Err(DiscretizeError::Weights(format!("weight {w} for cell {} is not a nonnegative number", o.cell)));
        }
        num += w * o.value;
        den += w;
        any = true;
    }
    if !any {
        return Err(DiscretizeError::Weights("no observation falls inside the region".into()));
    }
    if den == 0.0 {
        return Err(DiscretizeError::Weights("all weights in the region are zero".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_tsv_round_trip() {
        let c = CellId::from_token("89c25").unwrap();
        let mut o = Observation::new(c, "crop_corn", 12.345678901234567, "percent", "2023", QuantityKind::Arithmetic);
        o.class = "CroplandS2OverlapObservation".into();
        assert_eq!(Observation::from_tsv(&o.to_tsv()).unwrap(), o);
        assert!(Observation::from_tsv("89c25\tx\t1").is_err());
    }

    #[test]
    fn time_formats() {
        for ok in ["2023", "2023-07", "2023-07-04"] {
            assert!(validate_time(ok).is_ok(), "{ok}");
        }
        for bad in ["23", "2023-13", "2023-07-4", "July 2023", ""] {
            assert!(validate_time(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn manifest_parsing() {
        let m = Manifest::parse("# p\tkind\tunit\nsoilArea\tmereotopological\tkm2\ncrop\tarithmetic\tpercent\tCroplandS2OverlapObservation\n").unwrap();
        assert_eq!(m.get("soilArea").unwrap().kind, QuantityKind::Mereotopological);
        assert_eq!(m.get("crop_corn").unwrap().class.as_deref(), Some("CroplandS2OverlapObservation"));
        assert!(Manifest::parse("a\tweird\tkm2\n").is_err());
        assert!(Manifest::parse("a\tarithmetic\n").is_err());
    }

    #[test]
    fn ascii_header_variants() {
        let g = RasterGrid::parse_ascii("ncols 2\nnrows 1\nxllcenter 0.5\nyllcenter 0.5\ncellsize 1\n1 2\n").unwrap();
        assert_eq!((g.west, g.south), (0.0, 0.0));
        assert!(g.nodata.is_none());
        assert!(RasterGrid::parse_ascii("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1\n").is_err());
        assert!(RasterGrid::parse_ascii("ncols 2\nnrows 1\nxllcorner 179.5\nyllcorner 0\ncellsize 1\n1 2\n").is_err());
    }

    #[test]
    fn non_geographic_sidecar_is_rejected() {
        let mut g = RasterGrid::parse_ascii("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1\n").unwrap();
        let s: RasterSidecar = serde_json::from_str(r#"{"crs": "EPSG:5070"}"#).unwrap();
        assert!(matches!(g.apply_sidecar(s), Err(DiscretizeError::NonGeographicCrs(_))));
    }
}
