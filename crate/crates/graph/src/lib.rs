//! RDF materialization, an in-memory triple index with path queries, the
//! enriched-versus-geometric benchmark, and shard planning.

pub mod bench;
pub mod emit;
pub mod iri;
pub mod query;
pub mod rdf;
pub mod shard;
pub mod store;
