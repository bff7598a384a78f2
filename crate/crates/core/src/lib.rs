//! Discrete-global-grid quantization: S2 cells, spherical geometry, WKT,
//! coverings, topological enrichment and discretization.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cell;
pub mod cover;
pub mod discretize;
pub mod enrich;
pub mod latlng;
pub mod point;
pub mod sphere;
pub mod wkt;

pub use cell::{CellError, CellId, FaceIJ};
pub use latlng::LatLng;
pub use point::UnitVector;
