//! Geometric meshes: 1D meshes for the extended variable, and
//! boundary-layer adapted quadrilateral meshes of axis-aligned polygons.

mod builder;
mod domain;
pub mod io;
mod mesh1d;
mod mesh2d;
mod pattern;

pub use builder::{
    build_geometric_bl_mesh, build_minimal_mesh, default_kappa0, macro_cell_width, MacroPatch, MinimalMeshParams,
};
pub use domain::{BuiltinDomain, Point, PolygonDomain};
pub use mesh1d::{build_1d_geo_mesh, linear_degree_vector, DegreeVector, Mesh1D};
pub use mesh2d::{check_conformity, ConformityReport, ConformityViolation, Element, Mesh2D, MeshEdge, Provenance, LOCAL_EDGES};
pub use pattern::{refine_pattern, Pattern, RefQuad};
