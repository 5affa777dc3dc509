//! Cross-module checks that need the mesh generators, the eigensolver and
//! the recovery machinery together.

use hodgelab::analysis::{build_mode_data, spectral_function};
use hodgelab::complex::{generate_flat_torus, generate_icosphere};
use hodgelab::dec::{coboundary, hodge_laplacian, pointwise_value_norm, StarScheme};
use hodgelab::eigen::{
    kernel_dimension, solve_all_dense, solve_lowest, KernelStrategy, SolverConfig,
};
use nalgebra::DVector;
use std::f64::consts::TAU;

#[test]
fn coboundary_kernel_is_constants() {
    // rank d_0 = #vertices - 1 on a connected mesh: the unweighted graph
    // Laplacian d_0^T d_0 has a single zero eigenvalue
    let c = generate_flat_torus(2, 8, TAU).unwrap();
    let d0 = coboundary(&c, 0).unwrap();
    let gram = d0.matrix.transpose().matmul(&d0.matrix).to_dense();
    let eig = nalgebra::SymmetricEigen::new(gram);
    let zeros = eig.eigenvalues.iter().filter(|&&v| v.abs() < 1e-9).count();
    assert_eq!(zeros, 1);
}

#[test]
fn whitney_norm_of_exact_form_converges() {
    // |d(cos x)| = |sin x|: the recovered Whitney norm error shrinks under
    // refinement
    let mut errors = Vec::new();
    for res in [16usize, 32] {
        let c = generate_flat_torus(2, res, TAU).unwrap();
        let d0 = coboundary(&c, 0).unwrap();
        let f = DVector::from_fn(c.vertex_count(), |i, _| c.vertex(i).x.cos());
        let omega = d0.apply(&f);
        let cochain: Vec<f64> = omega.iter().copied().collect();
        let norms = pointwise_value_norm(&c, 1, &cochain).unwrap();
        let mut worst = 0.0f64;
        for i in 0..c.vertex_count() {
            let expect = c.vertex(i).x.sin().abs();
            worst = worst.max((norms[i] - expect).abs());
        }
        errors.push(worst);
    }
    assert!(errors[1] < 0.6 * errors[0], "no convergence: {errors:?}");
    assert!(errors[1] < 0.1, "res 32 error too large: {}", errors[1]);
}

#[test]
fn harmonic_one_form_has_constant_norm() {
    // kernel vectors of the 1-form Laplacian on the flat torus are the
    // translation-invariant forms; their pointwise norm is constant
    let c = generate_flat_torus(2, 32, TAU).unwrap();
    let pair = hodge_laplacian(&c, 1, StarScheme::Barycentric).unwrap();
    let d = solve_lowest(&pair, &SolverConfig::new(6).with_tol(1e-9)).unwrap();
    let betti = kernel_dimension(&d, KernelStrategy::Gap).unwrap();
    assert_eq!(betti, 2);
    for k in 0..betti {
        let cochain: Vec<f64> = d.eigencochain(k).iter().copied().collect();
        let norms = pointwise_value_norm(&c, 1, &cochain).unwrap();
        let mean: f64 = norms.iter().sum::<f64>() / norms.len() as f64;
        let worst = norms
            .iter()
            .map(|v| (v - mean).abs() / mean)
            .fold(0.0f64, f64::max);
        assert!(worst <= 0.05, "harmonic norm varies by {worst}");
    }
}

#[test]
fn sphere_low_multiplets_level4() {
    // icosphere level 4, first two nonzero levels near 2 (x3) and 6 (x5)
    let c = generate_icosphere(4).unwrap();
    let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
    let d = solve_lowest(&pair, &SolverConfig::new(10).with_tol(1e-8)).unwrap();
    for (idx, expect) in [(1usize, 2.0f64), (2, 2.0), (3, 2.0), (4, 6.0), (8, 6.0)] {
        let rel = (d.eigenvalues[idx] - expect).abs() / expect;
        assert!(
            rel <= 0.02,
            "lambda[{idx}] = {} vs {expect}",
            d.eigenvalues[idx]
        );
    }
}

#[test]
fn dense_oracle_matches_iterative_one_forms() {
    // oracle equivalence on a mesh small enough for the dense path
    let c = generate_flat_torus(2, 8, TAU).unwrap();
    let pair = hodge_laplacian(&c, 1, StarScheme::Barycentric).unwrap();
    let dense = solve_all_dense(&pair).unwrap();
    let it = solve_lowest(&pair, &SolverConfig::new(12).with_tol(1e-9)).unwrap();
    for i in 0..12 {
        let a = it.eigenvalues[i];
        let b = dense.eigenvalues[i];
        assert!((a - b).abs() <= 1e-8 * (1.0 + b), "pair {i}: {a} vs {b}");
    }
}

#[test]
fn gradient_gram_trace_identity() {
    // mass-weighted mean of trace(G(x)) equals sum(lambda)/V and the
    // extremal eigenvalue dominates trace/n pointwise
    let res = 64;
    let k = 21;
    let c = generate_flat_torus(2, res, TAU).unwrap();
    let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
    let d = solve_lowest(&pair, &SolverConfig::new(k).with_tol(1e-9)).unwrap();
    let modes = build_mode_data(&d, &c, k).unwrap();
    let volume = c.metadata().volume;
    let mut mean_trace = 0.0;
    for v in 0..c.vertex_count() {
        let trace: f64 = (0..k).map(|j| modes.gradient(v, j).norm_squared()).sum();
        mean_trace += pair.mass[v] * trace;
    }
    mean_trace /= volume;
    let expect: f64 = d.eigenvalues[..k].iter().sum::<f64>() / volume;
    assert!(
        (mean_trace - expect).abs() <= 0.02 * expect,
        "{mean_trace} vs {expect}"
    );

    // Q_0 dominates trace/n at each vertex and is itself below the trace
    let field = spectral_function(&d, &c, k, 0.0).unwrap();
    for v in (0..c.vertex_count()).step_by(97) {
        let trace: f64 = (0..k).map(|j| modes.gradient(v, j).norm_squared()).sum();
        assert!(field.values[v] >= trace / 2.0 - 1e-9);
        assert!(field.values[v] <= trace + 1e-9);
    }
}

#[test]
fn mode_sum_envelope_on_torus() {
    // V max_x sum phi_i(x)^2 stays within the Fourier sanity window [k, 2k]
    // up to discretization slack
    let c = generate_flat_torus(2, 64, TAU).unwrap();
    let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
    let k = 20;
    let d = solve_lowest(&pair, &SolverConfig::new(k).with_tol(1e-9)).unwrap();
    let field = spectral_function(&d, &c, k, 0.0).unwrap();
    let modes = build_mode_data(&d, &c, k).unwrap();
    let mut sup = 0.0f64;
    for v in 0..c.vertex_count() {
        let s: f64 = (0..k).map(|j| modes.phi[(v, j)].powi(2)).sum();
        sup = sup.max(s);
    }
    let volume = c.metadata().volume;
    assert!(
        sup * volume >= 0.9 * k as f64 && sup * volume <= 2.2 * k as f64,
        "V sup = {}",
        sup * volume
    );
    drop(field);
}
