//! Materializing cells, relation records and observations as triples, and
//! forward-chaining the transitive containment relation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use geogrid_core::discretize::{validate_time, Manifest, Observation, QuantityKind};
use geogrid_core::enrich::{RelationRecord, SpatialRelation};
use geogrid_core::wkt::{cell_to_wkt, AntimeridianPolicy, WktError};
use geogrid_core::CellId;
use rayon::prelude::*;
use thiserror::Error;

use crate::iri::{xsd, IriError, IriScheme, GEO, OWL, RDFS, RDF_TYPE, SOSA, TIME};
use crate::rdf::{Term, Triple};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error(transparent)]
    Iri(#[from] IriError),
    #[error(transparent)]
    Wkt(#[from] WktError),
    #[error("{0} is never materialized")]
    UnsupportedRelation(SpatialRelation),
    #[error("containment cycle through {0}")]
    Cycle(String),
    #[error("observation {id}: {message}")]
    Observation { id: String, message: String },
}

/// How a cell's geometry is materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellGeometry {
    Wkt(AntimeridianPolicy),
    Omit,
}

impl Default for CellGeometry {
    fn default() -> Self {
        CellGeometry::Wkt(AntimeridianPolicy::Split)
    }
}

impl FromStr for CellGeometry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(CellGeometry::Omit),
            other => other.parse().map(CellGeometry::Wkt),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmitConfig {
    pub scheme: IriScheme,
    pub geometry: CellGeometry,
    /// Maximum edge length in degrees for densified cell outlines.
    pub densify: Option<f64>,
}

/// Shortest decimal lexical form; `{}` on f64 never uses an exponent.
fn decimal(v: f64) -> Option<Term> {
    v.is_finite().then(|| Term::typed(v.to_string(), &xsd("decimal")))
}

/// Class hierarchy and property characteristics the triples rely on.
pub fn ontology_triples(scheme: &IriScheme) -> Vec<Triple> {
    let sub = format!("{RDFS}subClassOf");
    let ty = |c: &str| Term::iri(format!("{OWL}{c}"));
    let mut out = vec![
        Triple::new(scheme.ont("S2Cell"), &sub, Term::iri(format!("{GEO}Feature"))),
        Triple::new(scheme.ont("S2Cell"), &sub, Term::iri(scheme.ont("Cell"))),
    ];
    for l in 0..=30 {
        out.push(Triple::new(scheme.ont(&format!("S2Cell_Level{l}")), &sub, Term::iri(scheme.ont("S2Cell"))));
    }
    let (within, contains) = (scheme.ont("sfWithin"), scheme.ont("sfContains"));
    out.push(Triple::new(&within, RDF_TYPE, ty("TransitiveProperty")));
    out.push(Triple::new(&contains, RDF_TYPE, ty("TransitiveProperty")));
    out.push(Triple::new(&within, format!("{OWL}inverseOf"), Term::iri(&contains)));
    for r in ["sfTouches", "sfOverlaps", "sfIntersects"] {
        out.push(Triple::new(scheme.ont(r), RDF_TYPE, ty("SymmetricProperty")));
    }
    for r in SpatialRelation::ALL {
        out.push(Triple::new(
            scheme.ont(r.local_name()),
            format!("{RDFS}subPropertyOf"),
            Term::iri(scheme.ont("spatialRelation")),
        ));
    }
    out
}

pub fn emit_cell(c: CellId, cfg: &EmitConfig) -> Result<Vec<Triple>, EmitError> {
    let s = cfg.scheme.cell(c);
    let mut out = vec![
        Triple::new(&s, RDF_TYPE, Term::iri(cfg.scheme.ont(&format!("S2Cell_Level{}", c.level())))),
        Triple::new(&s, cfg.scheme.ont("hasID"), Term::string(c.raw().to_string())),
        Triple::new(&s, cfg.scheme.ont("hasM2Area"), decimal(c.area_km2() * 1e6).expect("finite area")),
    ];
    if let CellGeometry::Wkt(policy) = cfg.geometry {
        let wkt = cell_to_wkt(c, policy, cfg.densify)?;
        let g = cfg.scheme.cell_geometry(c);
        out.push(Triple::new(&s, format!("{GEO}hasGeometry"), Term::iri(&g)));
        out.push(Triple::new(&g, RDF_TYPE, Term::iri(format!("{GEO}Geometry"))));
        out.push(Triple::new(&g, format!("{GEO}asWKT"), Term::typed(wkt, &format!("{GEO}wktLiteral"))));
    }
    Ok(out)
}

/// Order-preserving parallel emission over many cells.
pub fn emit_cells(cells: &[CellId], cfg: &EmitConfig) -> Result<Vec<Triple>, EmitError> {
    let parts: Vec<Result<Vec<Triple>, EmitError>> = cells.par_iter().map(|&c| emit_cell(c, cfg)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn dedup(triples: impl IntoIterator<Item = Triple>) -> Vec<Triple> {
    let mut seen = HashSet::new();
    triples.into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// One triple per record, duplicates removed, first occurrence order kept.
pub fn emit_relations(records: &[RelationRecord], scheme: &IriScheme) -> Result<Vec<Triple>, EmitError> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if matches!(r.relation, SpatialRelation::Equals | SpatialRelation::Disjoint) {
            return Err(EmitError::UnsupportedRelation(r.relation));
        }
        out.push(Triple::new(
            scheme.entity(&r.subject)?,
            scheme.ont(r.relation.local_name()),
            Term::iri(scheme.entity(&r.object)?),
        ));
    }
    Ok(dedup(out))
}

/// Which containment edges take part in forward chaining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosureScope {
    /// Edges with at least one cell endpoint; feature-to-feature chains are
    /// left alone.
    #[default]
    CellEdges,
    All,
}

/// Adds every sfWithin edge implied by transitivity, each paired with its
/// sfContains inverse. Contains edges in the input count as reversed
/// within edges. The input is returned first, deduplicated.
pub fn materialize_transitive(
    triples: &[Triple],
    scheme: &IriScheme,
    scope: ClosureScope,
) -> Result<Vec<Triple>, EmitError> {
    let (within, contains) = (scheme.ont("sfWithin"), scheme.ont("sfContains"));
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut names: Vec<&str> = Vec::new();
    let mut up: Vec<Vec<usize>> = Vec::new();
    let mut edges: Vec<(&str, &str)> = Vec::new();
    for t in triples {
        let (Term::Iri(s), Term::Iri(o)) = (&t.subject, &t.object) else {
            continue;
        };
        let e = if t.predicate == within {
            (s.as_str(), o.as_str())
        } else if t.predicate == contains {
            (o.as_str(), s.as_str())
        } else {
            continue;
        };
        if scope == ClosureScope::CellEdges && scheme.parse_cell(e.0)?.is_none() && scheme.parse_cell(e.1)?.is_none() {
            continue;
        }
        edges.push(e);
    }
    for &(a, b) in &edges {
        for x in [a, b] {
            if !ids.contains_key(x) {
                ids.insert(x, names.len());
                names.push(x);
                up.push(Vec::new());
            }
        }
        up[ids[a]].push(ids[b]);
    }
    for u in &mut up {
        u.sort_unstable();
        u.dedup();
    }

    // iterative DFS; reach[n] is every node strictly above n
    let n = names.len();
    let mut state = vec![0u8; n];
    let mut reach: Vec<Vec<usize>> = vec![Vec::new(); n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < up[v].len() {
                let w = up[v][*i];
                *i += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => return Err(EmitError::Cycle(names[w].to_string())),
                    _ => {}
                }
            } else {
                let mut r: Vec<usize> = Vec::new();
                for &w in &up[v] {
                    r.push(w);
                    r.extend_from_slice(&reach[w]);
                }
                r.sort_unstable();
                r.dedup();
                reach[v] = r;
                state[v] = 2;
                stack.pop();
            }
        }
    }

    let mut out = dedup(triples.iter().cloned());
    // pairs asserted in only one direction still need their counterpart
    let mut have: HashSet<(&str, bool, &str)> = HashSet::new();
    for t in triples {
        if let (Term::Iri(s), Term::Iri(o)) = (&t.subject, &t.object) {
            if t.predicate == within {
                have.insert((s, true, o));
            } else if t.predicate == contains {
                have.insert((o, false, s));
            }
        }
    }
    for (v, r) in reach.iter().enumerate() {
        for &w in r {
            let (a, b) = (names[v], names[w]);
            if !have.contains(&(a, true, b)) {
                out.push(Triple::new(a, &within, Term::iri(b)));
            }
            if !have.contains(&(a, false, b)) {
                out.push(Triple::new(b, &contains, Term::iri(a)));
            }
        }
    }
    Ok(out)
}

pub fn property_iri(scheme: &IriScheme, property: &str) -> Result<String, EmitError> {
    if geogrid_core::enrich::is_iri_safe(property) && !property.contains(['/', '#', ':']) {
        Ok(scheme.ont(property))
    } else {
        Err(IriError::Unsafe(property.to_string()).into())
    }
}

/// Type, feature of interest, observed property, simple result and
/// phenomenon time. The time node itself comes from
/// [`emit_time_instant`].
pub fn emit_observation(o: &Observation, scheme: &IriScheme) -> Result<Vec<Triple>, EmitError> {
    let err = |message: String| EmitError::Observation { id: o.id.clone(), message };
    validate_time(&o.time).map_err(|e| err(e.to_string()))?;
    let result = decimal(o.value).ok_or_else(|| err(format!("value {} is not finite", o.value)))?;
    let s = scheme.observation(&o.id)?;
    Ok(vec![
        Triple::new(&s, RDF_TYPE, Term::iri(property_iri(scheme, &o.class)?)),
        Triple::new(&s, format!("{SOSA}hasFeatureOfInterest"), Term::iri(scheme.cell(o.cell))),
        Triple::new(&s, format!("{SOSA}observedProperty"), Term::iri(property_iri(scheme, &o.property)?)),
        Triple::new(&s, format!("{SOSA}hasSimpleResult"), result),
        Triple::new(&s, format!("{SOSA}phenomenonTime"), Term::iri(scheme.time_instant(&o.time))),
    ])
}

/// `time:Instant` description: a date gets `time:inXSDDate`, a year-month
/// gets `time:year` and `time:month`, a year gets `time:year`.
pub fn emit_time_instant(t: &str, scheme: &IriScheme) -> Result<Vec<Triple>, EmitError> {
    validate_time(t).map_err(|e| EmitError::Observation {
        id: t.to_string(),
        message: e.to_string(),
    })?;
    let s = scheme.time_instant(t);
    let mut out = vec![Triple::new(&s, RDF_TYPE, Term::iri(format!("{TIME}Instant")))];
    let parts: Vec<&str> = t.split('-').collect();
    match parts.as_slice() {
        [_, _, _] => out.push(Triple::new(&s, format!("{TIME}inXSDDate"), Term::typed(t, &xsd("date")))),
        [y, m] => {
            out.push(Triple::new(&s, format!("{TIME}year"), Term::typed(*y, &xsd("gYear"))));
            out.push(Triple::new(&s, format!("{TIME}month"), Term::typed(format!("--{m}"), &xsd("gMonth"))));
        }
        [y] => out.push(Triple::new(&s, format!("{TIME}year"), Term::typed(*y, &xsd("gYear")))),
        _ => unreachable!("validated"),
    }
    Ok(out)
}

/// Observations plus one time-instant description per distinct time.
pub fn emit_observations(obs: &[Observation], scheme: &IriScheme) -> Result<Vec<Triple>, EmitError> {
    let mut out = Vec::with_capacity(obs.len() * 5);
    let mut times = std::collections::BTreeSet::new();
    for o in obs {
        out.extend(emit_observation(o, scheme)?);
        times.insert(o.time.as_str());
    }
    for t in times {
        out.extend(emit_time_instant(t, scheme)?);
    }
    Ok(out)
}

/// Rebuilds observations from their five triples. Unit and quantity kind
/// are not part of the graph pattern; they come from the manifest entry of
/// the property, else default to mereotopological with an empty unit.
pub fn observations_from_triples(
    triples: &[Triple],
    scheme: &IriScheme,
    manifest: Option<&Manifest>,
) -> Result<Vec<Observation>, EmitError> {
    let obs_prefix = format!("{}observation/", scheme.resource);
    let mut by_subject: BTreeMap<&str, HashMap<&str, &Term>> = BTreeMap::new();
    for t in triples {
        if let Term::Iri(s) = &t.subject {
            if s.starts_with(&obs_prefix) {
                by_subject.entry(s).or_default().insert(&t.predicate, &t.object);
            }
        }
    }
    let (ty, foi, prop, result, time) = (
        RDF_TYPE.to_string(),
        format!("{SOSA}hasFeatureOfInterest"),
        format!("{SOSA}observedProperty"),
        format!("{SOSA}hasSimpleResult"),
        format!("{SOSA}phenomenonTime"),
    );
    let mut out = Vec::new();
    for (s, m) in by_subject {
        let err = |message: &str| EmitError::Observation {
            id: s.to_string(),
            message: message.to_string(),
        };
        let get = |p: &str| m.get(p).copied().ok_or_else(|| err(&format!("missing {p}")));
        let local = |t: &Term| {
            t.as_iri()
                .and_then(|i| i.strip_prefix(&scheme.ontology))
                .map(str::to_string)
                .ok_or_else(|| err("term outside the ontology namespace"))
        };
        let class = local(get(&ty)?)?;
        let property = local(get(&prop)?)?;
        let cell = scheme
            .parse_cell(get(&foi)?.as_iri().ok_or_else(|| err("feature of interest is not an IRI"))?)?
            .ok_or_else(|| err("feature of interest is not a cell"))?;
        let value: f64 = get(&result)?
            .literal_value()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err("result is not a decimal literal"))?;
        let t = get(&time)?
            .as_iri()
            .and_then(|i| scheme.time_of_instant(i))
            .ok_or_else(|| err("phenomenon time is not a time instant"))?;
        let (kind, unit) = match manifest.and_then(|mf| mf.get(&property)) {
            Some(spec) => (spec.kind, spec.unit.clone()),
            None => (QuantityKind::Mereotopological, String::new()),
        };
        let mut o = Observation::new(cell, &property, value, &unit, t, kind);
        o.class = class;
        if scheme.observation(&o.id)? != s {
            return Err(err("IRI does not match property, cell and time"));
        }
        out.push(o);
    }
    Ok(out)
}
