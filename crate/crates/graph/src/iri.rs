//! Namespaces and IRI templates for cells, features, observations and
//! time instants.

use geogrid_core::enrich::{is_iri_safe, Entity};
use geogrid_core::CellId;
use thiserror::Error;

pub const KWG_ONT: &str = "http://stko-kwg.geog.ucsb.edu/lod/ontology/";
pub const KWG_RES: &str = "http://stko-kwg.geog.ucsb.edu/lod/resource/";
pub const SOSA: &str = "http://www.w3.org/ns/sosa/";
pub const TIME: &str = "http://www.w3.org/2006/time#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const GEO: &str = "http://www.opengis.net/ont/geosparql#";
pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// Prefixes understood by path and pattern syntax.
pub const PREFIXES: [(&str, &str); 9] = [
    ("kwg-ont", KWG_ONT),
    ("kwgr", KWG_RES),
    ("sosa", SOSA),
    ("time", TIME),
    ("xsd", XSD),
    ("geo", GEO),
    ("rdf", RDF),
    ("rdfs", RDFS),
    ("owl", OWL),
];

pub fn xsd(local: &str) -> String {
    format!("{XSD}{local}")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IriError {
    #[error("{0:?} is not an absolute IRI base ending in '/' or '#'")]
    BadBase(String),
    #[error("malformed cell IRI {0:?}")]
    MalformedCell(String),
    #[error("{0:?} cannot be used inside an IRI")]
    Unsafe(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IriScheme {
    pub resource: String,
    pub ontology: String,
}

impl Default for IriScheme {
    fn default() -> Self {
        Self {
            resource: KWG_RES.to_string(),
            ontology: KWG_ONT.to_string(),
        }
    }
}

fn check_base(b: &str) -> Result<(), IriError> {
    let scheme_ok = b
        .split_once(':')
        .is_some_and(|(s, rest)| {
            !s.is_empty()
                && s.starts_with(|c: char| c.is_ascii_alphabetic())
                && s.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
                && !rest.is_empty()
        });
    if scheme_ok && is_iri_safe(b) && (b.ends_with('/') || b.ends_with('#')) {
        Ok(())
    } else {
        Err(IriError::BadBase(b.to_string()))
    }
}

impl IriScheme {
    pub fn new(resource: &str, ontology: &str) -> Result<Self, IriError> {
        check_base(resource)?;
        check_base(ontology)?;
        Ok(Self {
            resource: resource.to_string(),
            ontology: ontology.to_string(),
        })
    }

    pub fn ont(&self, local: &str) -> String {
        format!("{}{local}", self.ontology)
    }

    /// `{resource}s2.level{L}.{decimal id}`
    pub fn cell(&self, c: CellId) -> String {
        format!("{}s2.level{}.{}", self.resource, c.level(), c.raw())
    }

    pub fn cell_geometry(&self, c: CellId) -> String {
        format!("{}geometry.s2.level{}.{}", self.resource, c.level(), c.raw())
    }

    pub fn feature(&self, id: &str) -> Result<String, IriError> {
        if is_iri_safe(id) {
            Ok(format!("{}{id}", self.resource))
        } else {
            Err(IriError::Unsafe(id.to_string()))
        }
    }

    pub fn entity(&self, e: &Entity) -> Result<String, IriError> {
        match e {
            Entity::Cell(c) => Ok(self.cell(*c)),
            Entity::Feature(id) => self.feature(id),
        }
    }

    /// `{resource}observation/{observation id}`
    pub fn observation(&self, id: &str) -> Result<String, IriError> {
        if is_iri_safe(id) {
            Ok(format!("{}observation/{id}", self.resource))
        } else {
            Err(IriError::Unsafe(id.to_string()))
        }
    }

    /// `{resource}time.{iso time}`
    pub fn time_instant(&self, t: &str) -> String {
        format!("{}time.{t}", self.resource)
    }

    pub fn time_of_instant<'a>(&self, iri: &'a str) -> Option<&'a str> {
        iri.strip_prefix(&self.resource)?.strip_prefix("time.")
    }

    /// `Ok(None)` for IRIs outside the cell namespace; an error for IRIs
    /// inside it that do not decode to a valid cell of the stated level.
    pub fn parse_cell(&self, iri: &str) -> Result<Option<CellId>, IriError> {
        let Some(rest) = iri.strip_prefix(&self.resource).and_then(|r| r.strip_prefix("s2.")) else {
            return Ok(None);
        };
        let bad = || IriError::MalformedCell(iri.to_string());
        let (level, id) = rest.strip_prefix("level").and_then(|r| r.split_once('.')).ok_or_else(bad)?;
        let level: u8 = level.parse().map_err(|_| bad())?;
        let raw: u64 = id.parse().map_err(|_| bad())?;
        let c = CellId::new(raw).map_err(|_| bad())?;
        if c.level() != level || id != raw.to_string() {
            return Err(bad());
        }
        Ok(Some(c))
    }

    /// Expands `prefix:local` (built-in prefixes, `kwg-ont` and `kwgr`
    /// following this scheme) and `<iri>`; `a` is `rdf:type`.
    pub fn expand(&self, name: &str) -> Option<String> {
        if name == "a" {
            return Some(RDF_TYPE.to_string());
        }
        if let Some(inner) = name.strip_prefix('<').and_then(|n| n.strip_suffix('>')) {
            return Some(inner.to_string());
        }
        let (prefix, local) = name.split_once(':')?;
        let base = match prefix {
            "kwg-ont" => self.ontology.as_str(),
            "kwgr" => self.resource.as_str(),
            _ => PREFIXES.iter().find(|(p, _)| *p == prefix)?.1,
        };
        Some(format!("{base}{local}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_iri_round_trip() {
        let s = IriScheme::default();
        let c = CellId::from_token("7d").unwrap();
        let iri = s.cell(c);
        assert_eq!(iri, "http://stko-kwg.geog.ucsb.edu/lod/resource/s2.level2.9007199254740992000");
        assert_eq!(s.parse_cell(&iri), Ok(Some(c)));
        assert_eq!(s.parse_cell("http://example.org/x"), Ok(None));
        for bad in ["s2.level3.9007199254740992000", "s2.level2.12", "s2.level2.x", "s2.lvl2.1", "s2.level2.09007199254740992000"] {
            let iri = format!("{KWG_RES}{bad}");
            assert!(s.parse_cell(&iri).is_err(), "{bad}");
        }
    }

    #[test]
    fn bases_are_validated() {
        assert!(IriScheme::new("http://ex.org/r/", "http://ex.org/o#").is_ok());
        for bad in ["ex.org/", "http://ex.org/r", "http://ex org/", ":x/"] {
            assert!(IriScheme::new(bad, KWG_ONT).is_err(), "{bad}");
        }
    }

    #[test]
    fn expansion() {
        let s = IriScheme::default();
        assert_eq!(s.expand("kwg-ont:sfWithin").unwrap(), format!("{KWG_ONT}sfWithin"));
        assert_eq!(s.expand("a").unwrap(), RDF_TYPE);
        assert_eq!(s.expand("<http://x/y>").unwrap(), "http://x/y");
        assert!(s.expand("nope:x").is_none());
    }
}
