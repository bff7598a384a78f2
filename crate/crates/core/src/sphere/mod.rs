//! Spherical geometry: robust predicates, geodesic chains and polygons,
//! densification of planar input, and relations to cells.

pub mod area;
pub mod densify;
pub mod edge;
pub mod polygon;
pub mod predicates;
pub mod relate;

use thiserror::Error;

use crate::latlng::LatLng;

pub use densify::{densify_line, densify_ring, DEFAULT_MAX_STEP};
pub use polygon::{GeodesicChain, SphericalPolygon};
pub use relate::{overlap_fraction, polygon_cell_overlap, AreaOverlap, CellRelation, Lines, Shape};

/// Points within this angle (radians) of a boundary are on it.
pub const BOUNDARY_EPS: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("ring is not closed")]
    UnclosedRing,
    #[error("densification step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("edge {from} -> {to} spans 180 degrees of longitude; split at the antimeridian first")]
    AntimeridianEdge { from: LatLng, to: LatLng },
}
