//! Location-based sharding keyed by ancestor cells at a shard level.

use std::collections::{BTreeMap, BTreeSet};

use geogrid_core::cover::{covering, CoverError, Covering, CoveringParams};
use geogrid_core::sphere::Shape;
use geogrid_core::CellId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{IriError, IriScheme};
use crate::rdf::{Term, Triple};

#[derive(Debug, Error)]
pub enum ShardError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Iri(#[from] IriError),
    #[error("shard map: {0}")]
    Map(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardMap {
    pub shard_level: u8,
    /// Sorted, pairwise disjoint, all at `shard_level`.
    pub keys: Vec<CellId>,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    shard_level: u8,
    keys: Vec<String>,
}

/// Shard keys are the homogeneous covering of the region at `shard_level`.
pub fn plan(region: &Shape, shard_level: u8) -> Result<ShardMap, ShardError> {
    let c = covering(region, CoveringParams::homogeneous(shard_level))?;
    Ok(ShardMap {
        shard_level,
        keys: c.cells,
    })
}

impl ShardMap {
    pub fn new(shard_level: u8, keys: impl IntoIterator<Item = CellId>) -> Result<Self, ShardError> {
        let mut keys: Vec<CellId> = keys.into_iter().collect();
        keys.sort();
        keys.dedup();
        if shard_level > 30 {
            return Err(ShardError::Map(format!("shard level {shard_level} > 30")));
        }
        if let Some(k) = keys.iter().find(|k| k.level() != shard_level) {
            return Err(ShardError::Map(format!("key {} is not at level {shard_level}", k.token())));
        }
        Ok(Self { shard_level, keys })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MapJson {
            shard_level: self.shard_level,
            keys: self.keys.iter().map(|k| k.token()).collect(),
        })
        .expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ShardError> {
        let m: MapJson = serde_json::from_str(text).map_err(|e| ShardError::Map(e.to_string()))?;
        let keys = m
            .keys
            .iter()
            .map(|t| CellId::from_token(t).map_err(|e| ShardError::Map(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(m.shard_level, keys)
    }

    /// The shard holding a cell at or below the shard level.
    pub fn shard_of(&self, c: CellId) -> Option<CellId> {
        if c.level() < self.shard_level {
            return None;
        }
        let k = c.parent_unchecked(self.shard_level);
        self.keys.binary_search(&k).is_ok().then_some(k)
    }

    /// Keys inside a cell coarser than the shard level.
    pub fn keys_within(&self, c: CellId) -> &[CellId] {
        let lo = self.keys.partition_point(|k| *k < c.range_min());
        let hi = self.keys.partition_point(|k| *k <= c.range_max());
        &self.keys[lo..hi]
    }

    /// Shards a cell of any level belongs to: its ancestor key, or every key
    /// inside it when it is coarser than the shard level.
    pub fn shards_for(&self, c: CellId) -> Vec<CellId> {
        if c.level() >= self.shard_level {
            self.shard_of(c).into_iter().collect()
        } else {
            self.keys_within(c).to_vec()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Route {
    pub shards: BTreeSet<CellId>,
    /// Query cells that fall in no shard.
    pub unroutable: Vec<CellId>,
}

pub fn route(q: &Covering, map: &ShardMap) -> Route {
    let mut r = Route::default();
    for &c in &q.cells {
        let s = map.shards_for(c);
        if s.is_empty() {
            r.unroutable.push(c);
        }
        r.shards.extend(s);
    }
    r
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub shards: BTreeMap<CellId, Vec<Triple>>,
    /// Triples naming no cell, plus those whose cells lie in no shard.
    pub global: Vec<Triple>,
    pub input: usize,
    /// Triples written to more than one shard.
    pub cross_shard: usize,
    /// Extra copies beyond the first, summed over cross-shard triples.
    pub duplicates: usize,
    /// Triples naming cells that no shard holds.
    pub outside: usize,
}

impl Split {
    pub fn output_count(&self) -> usize {
        self.global.len() + self.shards.values().map(Vec::len).sum::<usize>()
    }

    /// Every input triple is accounted for exactly once after discounting
    /// duplicates.
    pub fn conserved(&self) -> bool {
        self.output_count() - self.duplicates == self.input
    }
}

fn cells_in(t: &Triple, scheme: &IriScheme) -> Result<Vec<CellId>, IriError> {
    let mut out = Vec::new();
    for term in [&t.subject, &t.object] {
        if let Term::Iri(i) = term {
            out.extend(scheme.parse_cell(i)?);
        }
    }
    Ok(out)
}

/// Routes each triple to the shards of the cells it names; triples
/// spanning shards are copied to each of them.
pub fn split_triples(
    triples: impl IntoIterator<Item = Triple>,
    map: &ShardMap,
    scheme: &IriScheme,
) -> Result<Split, ShardError> {
    let mut out = Split::default();
    for k in &map.keys {
        out.shards.insert(*k, Vec::new());
    }
    for t in triples {
        out.input += 1;
        let cells = cells_in(&t, scheme)?;
        if cells.is_empty() {
            out.global.push(t);
            continue;
        }
        let targets: BTreeSet<CellId> = cells.iter().flat_map(|&c| map.shards_for(c)).collect();
        if targets.is_empty() {
            out.outside += 1;
            out.global.push(t);
            continue;
        }
        if targets.len() > 1 {
            out.cross_shard += 1;
            out.duplicates += targets.len() - 1;
        }
        for k in targets {
            out.shards.get_mut(&k).expect("target is a key").push(t.clone());
        }
    }
    Ok(out)
}
