//! Three-level edge model of a design drawing and its fusion into one
//! structural condition image.
//!
//! * double lines: opening of the ink channel, keeps emphasized strokes
//! * single lines: boundary of the eroded foreground mask
//! * soft edges: sparse Haar detail responses of a first-pass generation

pub mod fusion;
pub mod haar;
pub mod mask;
pub mod morphology;
pub mod soft_edges;

pub use fusion::{fuse, FusionWeights, GeometryCondition, Provenance};
pub use haar::{haar_decompose, max_levels, DetailBands, HaarPyramid};
pub use mask::{double_lines, extract_mask, single_lines, SingleLines};
pub use morphology::{dilate, erode, Footprint, Morphology, Shape, StructuringElement};
pub use soft_edges::{detail_magnitude, soft_edges, SoftEdgeMap, SoftEdgePoint};
