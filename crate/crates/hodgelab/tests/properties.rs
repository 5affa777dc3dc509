//! Property tests for the structural invariants.

use hodgelab::analysis::fit_exponent;
use hodgelab::complex::generate_flat_torus;
use hodgelab::dec::{hodge_star, StarScheme};
use hodgelab::oracle::circle_heat_kernel;
use hodgelab::sparse::CooBuilder;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boundary_composition_zero_on_random_tori(
        dim in 1usize..=3,
        res in 3usize..=6,
        period in 0.5f64..10.0,
    ) {
        let c = generate_flat_torus(dim, res, period).unwrap();
        for p in 2..=dim {
            let prod = c.boundary_int(p - 1).unwrap().matmul(&c.boundary_int(p).unwrap());
            prop_assert!(prod.is_zero());
        }
    }

    #[test]
    fn barycentric_stars_strictly_positive(
        dim in 1usize..=3,
        res in 3usize..=6,
    ) {
        let c = generate_flat_torus(dim, res, std::f64::consts::TAU).unwrap();
        for p in 0..=dim {
            let star = hodge_star(&c, p, StarScheme::Barycentric).unwrap();
            prop_assert!(star.values.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn fit_recovers_exact_power_laws(
        slope in -3.0f64..3.0,
        prefactor in 0.1f64..10.0,
        n in 8usize..40,
    ) {
        let xs: Vec<f64> = (1..=n).map(|i| 1.5f64.powi(i as i32 % 17) * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| prefactor * x.powf(slope)).collect();
        let fit = fit_exponent(&xs, &ys, (0, n - 1)).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9, "slope {} vs {slope}", fit.slope);
        prop_assert!((fit.intercept - prefactor.ln()).abs() < 1e-8);
    }

    #[test]
    fn wrapped_gaussian_matches_spectral_form(
        x in 0.0f64..std::f64::consts::TAU,
        y in 0.0f64..std::f64::consts::TAU,
        t in 0.05f64..5.0,
    ) {
        let period = std::f64::consts::TAU;
        let wrapped = circle_heat_kernel(x, y, t, period).unwrap();
        let mut spectral = 1.0 / period;
        for m in 1..400 {
            let m = m as f64;
            spectral += (2.0 / period) * (-m * m * t).exp() * (m * (x - y)).cos();
        }
        prop_assert!((wrapped - spectral).abs() < 1e-11);
    }

    #[test]
    fn sparse_transpose_involution(entries in proptest::collection::vec(
        (0usize..12, 0usize..9, -5.0f64..5.0), 0..40)
    ) {
        let mut b = CooBuilder::new(12, 9);
        for &(r, c, v) in &entries {
            b.push(r, c, v);
        }
        let a = b.build();
        prop_assert_eq!(a.transpose().transpose(), a);
    }
}
