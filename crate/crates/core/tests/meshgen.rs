mod common;

use std::sync::Arc;

use fracdiff::hpcore::{Degrees, HpSpace};
use fracdiff::meshgen::io::{read_mesh, write_mesh};
use fracdiff::meshgen::*;

const BUILTINS: [BuiltinDomain; 3] = [BuiltinDomain::Square, BuiltinDomain::Lshape, BuiltinDomain::Slit];

fn assert_valid(mesh: &Mesh2D, what: &str) {
    let report = check_conformity(mesh);
    assert!(report.passed(), "{what}: {:?}", report.violations.first());
    let area = mesh.domain().area();
    assert!((mesh.area() - area).abs() < 1e-10 * area, "{what}: area {}", mesh.area());
    for e in 0..mesh.num_elements() {
        assert!(mesh.element_area(e) > 0.0, "{what}: element {e} is inverted");
    }
}

#[test]
fn geometric_meshes_conform() {
    for b in BUILTINS {
        let d = PolygonDomain::builtin(b);
        for levels in 0..=6 {
            for layers in 0..=levels {
                for sigma in [0.25, 0.5] {
                    let m = build_geometric_bl_mesh(&d, layers, levels, sigma).unwrap();
                    assert_valid(&m, &format!("{b} L={layers} n={levels} σ={sigma}"));
                }
            }
        }
    }
}

#[test]
fn minimal_meshes_conform() {
    for b in BUILTINS {
        let d = PolygonDomain::builtin(b);
        for levels in 0..=6 {
            for eps in [0.1, 1e-2, 1e-4, 1e-7] {
                for q in [1, 4] {
                    let params =
                        MinimalMeshParams { levels, degree: q, lambda: 1.0, eps, kappa0: default_kappa0(&d), sigma: 0.25 };
                    let what = format!("{b} n={levels} ε={eps} q={q}");
                    match build_minimal_mesh(&d, &params) {
                        Ok(m) => assert_valid(&m, &what),
                        // only strips below the resolution floor are refused
                        Err(e) => assert!(params.strip_width() * 0.25f64.powi(levels as i32) < 1e-9 * d.diameter(), "{what}: {e}"),
                    }
                }
            }
        }
    }
}

#[test]
fn pattern_counts_match_enumeration() {
    for sigma in [0.25, 0.5] {
        assert_eq!(refine_pattern(Pattern::Trivial, sigma).unwrap().len(), 1);
        for l in 0..=6 {
            let bl = Pattern::BoundaryLayer { layers: l };
            assert_eq!(refine_pattern(bl, sigma).unwrap().len(), l + 1);
            assert_eq!(bl.element_count(), l + 1);
        }
        for n in 0..=6 {
            let c = Pattern::Corner { levels: n };
            // two trapezoids per ring plus the innermost square
            assert_eq!(refine_pattern(c, sigma).unwrap().len(), 2 * n + 1);
            assert_eq!(c.element_count(), 2 * n + 1);
            for l in 0..=n {
                let want = (l + 1) * (l + 1) - 1 + 2 * (n - l) + 1;
                for p in [Pattern::Tensor { layers: l, levels: n }, Pattern::Mixed { layers: l, levels: n }] {
                    assert_eq!(refine_pattern(p, sigma).unwrap().len(), want, "{p}");
                    assert_eq!(p.element_count(), want);
                }
            }
        }
    }
    assert!(refine_pattern(Pattern::Tensor { layers: 3, levels: 2 }, 0.5).is_err());
    assert!(refine_pattern(Pattern::Trivial, 1.0).is_err());
}

#[test]
fn patterns_tile_the_reference_square() {
    for p in [Pattern::BoundaryLayer { layers: 3 }, Pattern::Corner { levels: 4 }, Pattern::Tensor { layers: 2, levels: 5 }] {
        let area: f64 = refine_pattern(p, 0.3)
            .unwrap()
            .iter()
            .map(|q| {
                (0..4).map(|k| q[k][0] * q[(k + 1) % 4][1] - q[(k + 1) % 4][0] * q[k][1]).sum::<f64>() / 2.0
            })
            .sum();
        assert!((area - 1.0).abs() < 1e-14, "{p}: {area}");
    }
}

#[test]
fn square_macro_layout() {
    let m = build_geometric_bl_mesh(&PolygonDomain::square(), 1, 1, 0.5).unwrap();
    // four Tensor(1,1) corners, four BL(1) edges, one trivial centre
    assert_eq!(m.num_elements(), 4 * 4 + 4 * 2 + 1);
    assert_eq!(m.patches().len(), 9);
    let trivial = build_geometric_bl_mesh(&PolygonDomain::square(), 0, 0, 0.5).unwrap();
    assert_eq!(trivial.num_elements(), 9);
}

#[test]
fn element_count_grows_quadratically_in_layers() {
    let d = PolygonDomain::lshape();
    let counts: Vec<f64> =
        (1..=6).map(|l| build_geometric_bl_mesh(&d, l, l, 0.25).unwrap().num_elements() as f64).collect();
    let x: Vec<f64> = (1..=6).map(|l| (l as f64).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let (slope, _) = common::linear_fit(&x[2..], &y[2..]);
    assert!(slope > 1.0 && slope < 2.2, "{slope}");
}

#[test]
fn dof_growth_exponent() {
    let d = PolygonDomain::square();
    let (x, y): (Vec<f64>, Vec<f64>) = (2..=6)
        .map(|p| {
            let mesh = Arc::new(build_geometric_bl_mesh(&d, p, p, 0.25).unwrap());
            let n = HpSpace::new(mesh, Degrees::Uniform(p)).unwrap().num_free();
            ((p as f64).ln(), (n as f64).ln())
        })
        .unzip();
    let (slope, r2) = common::linear_fit(&x, &y);
    assert!((3.5..=4.5).contains(&slope), "{slope}");
    assert!(r2 > 0.99);
}

#[test]
fn minimal_mesh_dofs_grow_linearly_in_levels() {
    let d = PolygonDomain::square();
    let counts: Vec<usize> = (1..=4)
        .map(|levels| {
            let params = MinimalMeshParams { levels, degree: 1, lambda: 0.1, eps: 0.1, kappa0: 0.25, sigma: 0.25 };
            let mesh = Arc::new(build_minimal_mesh(&d, &params).unwrap());
            HpSpace::new(mesh, Degrees::Uniform(1)).unwrap().num_free()
        })
        .collect();
    let steps: Vec<usize> = counts.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|&s| s > 0 && s == steps[0]), "{counts:?}");
}

#[test]
fn one_dimensional_meshes() {
    assert_eq!(build_1d_geo_mesh(1.0, 3, 0.25).unwrap().breakpoints(), &[0.0, 1.0 / 16.0, 0.25, 1.0]);
    assert_eq!(build_1d_geo_mesh(2.0, 2, 0.25).unwrap().breakpoints(), &[0.0, 0.5, 2.0]);
    assert!(build_1d_geo_mesh(1.0, 0, 0.25).is_err());
    assert!(build_1d_geo_mesh(1.0, 2, 1.0).is_err());
    assert!(build_1d_geo_mesh(-1.0, 2, 0.5).is_err());
    assert_eq!(linear_degree_vector(4, 1.0).unwrap().0, vec![1, 2, 3, 4]);
    assert_eq!(linear_degree_vector(3, 0.5).unwrap().0, vec![1, 2, 2]);
    assert_eq!(linear_degree_vector(1, 7.0).unwrap().0, vec![1]);
    assert!(linear_degree_vector(3, 0.0).is_err());
}

#[test]
fn mesh_text_round_trip() {
    let m = build_geometric_bl_mesh(&PolygonDomain::slit(), 2, 3, 0.25).unwrap();
    let text = write_mesh(&m);
    let back = read_mesh(&text).unwrap();
    assert_eq!(back.num_elements(), m.num_elements());
    assert_eq!(write_mesh(&back), text);
    assert!(read_mesh("garbage").is_err());
}

#[test]
fn invalid_geometry_is_rejected() {
    assert!(build_geometric_bl_mesh(&PolygonDomain::square(), 3, 2, 0.25).is_err());
    let tilted = PolygonDomain::from_polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.5, 1.0], [0.0, 1.0]]).unwrap();
    assert!(build_geometric_bl_mesh(&tilted, 1, 1, 0.25).is_err());
    let d = PolygonDomain::square();
    let wide = MinimalMeshParams { levels: 1, degree: 1, lambda: 1.0, eps: 0.1, kappa0: 0.9, sigma: 0.25 };
    assert!(build_minimal_mesh(&d, &wide).is_err());
}
