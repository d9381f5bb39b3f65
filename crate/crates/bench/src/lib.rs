//! Inputs shared by the benchmarks in `benches/`.

use std::sync::Arc;

use fracdiff::hpcore::{Degrees, HpSpace};
use fracdiff::meshgen::build_geometric_bl_mesh;
use fracdiff::PolygonDomain;

/// Degree-`p` space on the geometric mesh with `L = n = p`.
pub fn steering_space(domain: &PolygonDomain, p: usize) -> Arc<HpSpace> {
    let mesh = Arc::new(build_geometric_bl_mesh(domain, p, p, 0.25).expect("builtin domains mesh"));
    Arc::new(HpSpace::new(mesh, Degrees::Uniform(p)).expect("valid degree"))
}
