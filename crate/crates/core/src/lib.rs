//! Geodesic offsetting of curves on analytic parametric surfaces.
//!
//! The pipeline meshes the parameter domain with an intrinsic triangulation whose edge
//! lengths come from the surface metric, samples the source curve into point sites,
//! computes exact polyhedral geodesic distances by edge-flip shortening, builds a
//! geodesic Voronoi labelling of the mesh and finally extracts the level set at the
//! offset distance.

pub mod curve;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod mesh;
pub mod morphology;
pub mod metrics;
pub mod offset;
pub mod pipeline;
pub mod surface;
pub mod voronoi;

pub use error::{Error, Result};
pub use surface::{Domain, FundamentalForm, ParamPoint, SurfaceKind, SurfacePoint, SurfaceSpec};
pub use mesh::{EdgeId, FaceId, IntrinsicMesh, SiteId, UnfoldedTriangle, VertexId};
