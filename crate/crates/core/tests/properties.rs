use fracdiff::extension::{diagonalize, YExtensionSetup};
use fracdiff::hpcore::{gauss_jacobi, gauss_legendre};
use fracdiff::meshgen::{build_1d_geo_mesh, linear_degree_vector, BuiltinDomain};
use fracdiff::sincbk::{build_sinc_rule, SincVariant};
use fracdiff::special::KahanSum;
use fracdiff::{Case, Method};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_breakpoints(y in 0.1f64..20.0, m in 1usize..30, sigma in 0.05f64..0.95) {
        let mesh = build_1d_geo_mesh(y, m, sigma).unwrap();
        let b = mesh.breakpoints();
        prop_assert_eq!(b.len(), m + 1);
        prop_assert_eq!(b[0], 0.0);
        prop_assert!((b[m] - y).abs() <= 1e-14 * y);
        prop_assert!(b.windows(2).all(|w| w[1] > w[0]));
        for i in 1..m {
            prop_assert!((b[i] / b[i + 1] - sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_degrees_are_nondecreasing(m in 1usize..40, slope in 0.01f64..3.0) {
        let d = linear_degree_vector(m, slope).unwrap().0;
        prop_assert_eq!(d[0], 1);
        prop_assert!(d.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= slope.ceil() as usize));
    }

    #[test]
    fn legendre_is_exact_for_polynomials(n in 1usize..25, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rule = gauss_legendre(n).unwrap();
        let got = rule.integrate(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c));
        let want: f64 = coeffs.iter().enumerate().filter(|(k, _)| k % 2 == 0).map(|(k, c)| 2.0 * c / (k as f64 + 1.0)).sum();
        prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn jacobi_integrates_monomials(n in 1usize..15, alpha in -0.95f64..0.95, k in 0usize..8) {
        let k = k.min(2 * n - 1);
        let rule = gauss_jacobi(n, alpha).unwrap();
        let got = rule.integrate(|t| t.powi(k as i32));
        // ∫_0^1 t^α t^k dt
        prop_assert!((got - 1.0 / (alpha + k as f64 + 1.0)).abs() < 1e-11);
    }

    #[test]
    fn sinc_inverse_power_is_monotone(s in 0.05f64..0.95, k in 0.3f64..1.5, a in 1e-3f64..1e3, f in 1.01f64..10.0) {
        let rule = build_sinc_rule(s, k, SincVariant::Practical).unwrap();
        let lo = rule.scalar_apply(a);
        let hi = rule.scalar_apply(a * f);
        prop_assert!(lo > 0.0 && hi > 0.0 && hi < lo);
    }

    #[test]
    fn kahan_sum_matches_exact_integers(xs in proptest::collection::vec(-1_000_000i64..1_000_000, 0..200)) {
        let mut s = KahanSum::new();
        for &x in &xs {
            s.add(x as f64);
        }
        prop_assert_eq!(s.value(), xs.iter().sum::<i64>() as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenvalues_are_positive_and_sorted(s in 0.1f64..0.9, m in 1usize..12, r in 1usize..5, y in 0.5f64..6.0) {
        let mesh = build_1d_geo_mesh(y, m, 0.25).unwrap();
        let setup = YExtensionSetup::new(s, mesh, fracdiff::meshgen::DegreeVector::uniform(m, r).unwrap()).unwrap();
        let d = diagonalize(&setup).unwrap();
        prop_assert_eq!(d.len(), setup.num_dofs());
        prop_assert!(d.mu().iter().all(|&mu| mu > 0.0));
        prop_assert!(d.mu().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.trace().iter().all(|&t| t >= 0.0));
    }
}

#[test]
fn names_round_trip() {
    for c in [Case::A, Case::B] {
        assert_eq!(c.to_string().parse::<Case>().unwrap(), c);
    }
    for m in [Method::Extension, Method::Sinc] {
        assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
    }
    for b in [BuiltinDomain::Square, BuiltinDomain::Lshape, BuiltinDomain::Slit] {
        assert_eq!(b.to_string().parse::<BuiltinDomain>().unwrap(), b);
    }
}
