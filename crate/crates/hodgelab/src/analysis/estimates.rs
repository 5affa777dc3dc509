//! Exponent verification for the eigenvalue lower bound, the sup-norm
//! envelopes, the sharpness of the extremizer growth, and the pointwise
//! gradient inequality for combinations of eigenfunctions.

use super::fit::{default_fit_range, fit_exponent, ExponentFit};
use super::modes::{
    build_mode_data, extremal_coefficients, gradfree_max_series, q_max_series, ModeData,
};
use super::AnalysisError;
use crate::complex::SimplicialComplex;
use crate::eigen::{kernel_dimension, KernelStrategy, SpectralDecomposition};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Eigenvalue growth fit `lambda_k ~ (k - b_p)^{2/n}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    pub claim: String,
    pub dim: usize,
    pub betti: usize,
    pub expected_slope: f64,
    pub slope_tol: f64,
    /// smallest `lambda_k / (k - b_p)^{2/n}` over the fit range
    pub c_inv_empirical: f64,
    pub fit: ExponentFit,
    pub pass: bool,
}

/// Fit the eigenvalue growth law above the kernel. `range` indexes the
/// shifted series `j = k - betti` (0-based, inclusive); None picks the
/// default upper-two-thirds window.
pub fn verify_weyl(
    decomposition: &SpectralDecomposition,
    dim: usize,
    betti: usize,
    range: Option<(usize, usize)>,
    slope_tol: f64,
) -> Result<WeylReport, AnalysisError> {
    let nonzero = &decomposition.eigenvalues[betti..];
    let xs: Vec<f64> = (1..=nonzero.len()).map(|j| j as f64).collect();
    let range = range.unwrap_or_else(|| default_fit_range(nonzero.len()));
    let fit = fit_exponent(&xs, nonzero, range)?;
    let expected = 2.0 / dim as f64;
    let c_inv = fit
        .points
        .iter()
        .map(|&(j, l)| l / j.powf(expected))
        .fold(f64::INFINITY, f64::min);
    let pass = (fit.slope - expected).abs() <= slope_tol && c_inv > 0.0;
    Ok(WeylReport {
        claim: if decomposition.degree == 0 {
            "th1.2-weyl".into()
        } else {
            "th4.2-weyl-forms".into()
        },
        dim,
        betti,
        expected_slope: expected,
        slope_tol,
        c_inv_empirical: c_inv,
        fit,
        pass,
    })
}

/// Upper-envelope fits of `max_x |phi_k|` and `max_x |grad phi_k|` versus
/// `lambda_k`.
#[derive(Clone, Debug, Serialize)]
pub struct SupnormReport {
    pub claim: String,
    pub dim: usize,
    pub value_fit: ExponentFit,
    pub gradient_fit: ExponentFit,
    /// bound n/4 + 0.1 on the value envelope slope
    pub value_bound: f64,
    /// bound (n+2)/4 + 0.1 on the gradient envelope slope
    pub gradient_bound: f64,
    pub pass: bool,
}

fn zero_mode_count(decomposition: &SpectralDecomposition) -> usize {
    kernel_dimension(decomposition, KernelStrategy::Gap).unwrap_or_else(|_| {
        let lam_max = decomposition.eigenvalues.last().copied().unwrap_or(0.0);
        decomposition
            .eigenvalues
            .iter()
            .filter(|&&v| v < 1e-8 * lam_max)
            .count()
    })
}

/// Envelope (running-maximum) fits for eigenfunction sup norms and their
/// gradients; these are upper bounds, so pass means slope at most the bound.
pub fn verify_supnorm(
    decomposition: &SpectralDecomposition,
    complex: &SimplicialComplex,
) -> Result<SupnormReport, AnalysisError> {
    let n = complex.dim();
    let betti = zero_mode_count(decomposition);
    let count = decomposition.count();
    let modes = build_mode_data(decomposition, complex, count)?;
    let mut lambdas = Vec::new();
    let mut value_env = Vec::new();
    let mut grad_env = Vec::new();
    let mut run_value = 0.0f64;
    let mut run_grad = 0.0f64;
    for j in betti..count {
        let sup_value = (0..modes.vertex_count())
            .map(|v| modes.phi[(v, j)].abs())
            .fold(0.0f64, f64::max);
        let sup_grad = (0..modes.vertex_count())
            .map(|v| modes.gradient(v, j).norm())
            .fold(0.0f64, f64::max);
        run_value = run_value.max(sup_value);
        run_grad = run_grad.max(sup_grad);
        lambdas.push(modes.lambda[j]);
        value_env.push(run_value);
        grad_env.push(run_grad);
    }
    let range = default_fit_range(lambdas.len());
    let value_fit = fit_exponent(&lambdas, &value_env, range)?;
    let gradient_fit = fit_exponent(&lambdas, &grad_env, range)?;
    let value_bound = n as f64 / 4.0 + 0.1;
    let gradient_bound = (n as f64 + 2.0) / 4.0 + 0.1;
    let pass = value_fit.slope <= value_bound && gradient_fit.slope <= gradient_bound;
    Ok(SupnormReport {
        claim: "th1.1-supnorm".into(),
        dim: n,
        value_fit,
        gradient_fit,
        value_bound,
        gradient_bound,
        pass,
    })
}

/// Growth fits of the extremizer maxima: the full field against exponent
/// n/2 + 1 and the gradient-free field against n/2.
#[derive(Clone, Debug, Serialize)]
pub struct SharpnessReport {
    pub claim: String,
    pub dim: usize,
    pub full_fit: ExponentFit,
    pub gradient_free_fit: ExponentFit,
    pub expected_full: f64,
    pub expected_gradient_free: f64,
    pub slope_tol: f64,
    pub pass: bool,
}

/// For each cutoff k, evaluate `max_x Q_{lambda_k + 1}(x)` and the
/// gradient-free analog, and fit both against `lambda_k + 1`.
pub fn verify_sharpness(
    decomposition: &SpectralDecomposition,
    complex: &SimplicialComplex,
    cutoffs: &[usize],
    slope_tol: f64,
) -> Result<SharpnessReport, AnalysisError> {
    let count = decomposition.count();
    let kmax = cutoffs.iter().copied().max().unwrap_or(0);
    if kmax == 0 || kmax > count {
        return Err(AnalysisError::CutoffOutOfRange(kmax, count));
    }
    let modes = build_mode_data(decomposition, complex, kmax)?;
    let lambda = modes.lambda.clone();
    let a_of = move |k: usize| lambda[k - 1] + 1.0;
    let full = q_max_series(&modes, cutoffs, &a_of);
    let gradfree = gradfree_max_series(&modes, cutoffs);
    let xs: Vec<f64> = cutoffs.iter().map(|&k| modes.lambda[k - 1] + 1.0).collect();
    let range = (0, cutoffs.len() - 1);
    let full_fit = fit_exponent(&xs, &full, range)?;
    let gradient_free_fit = fit_exponent(&xs, &gradfree, range)?;
    let n = complex.dim() as f64;
    let expected_full = n / 2.0 + 1.0;
    let expected_gradient_free = n / 2.0;
    let pass = (full_fit.slope - expected_full).abs() <= slope_tol
        && (gradient_free_fit.slope - expected_gradient_free).abs() <= slope_tol;
    Ok(SharpnessReport {
        claim: "th1-sharpness".into(),
        dim: complex.dim(),
        full_fit,
        gradient_free_fit,
        expected_full,
        expected_gradient_free,
        slope_tol,
        pass,
    })
}

/// Pointwise gradient inequality check for combinations of eigenfunctions.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub claim: String,
    pub k: usize,
    /// A = lambda_k + (n-1) K
    pub a: f64,
    pub trials: usize,
    pub max_rho_random: f64,
    pub max_rho_extremal: f64,
    pub max_rho: f64,
    pub tol_disc: f64,
    pub pass: bool,
}

/// Evaluate `rho = max_x (|grad u|^2 + A u^2) / (A max_x u^2)` over seeded
/// random unit coefficient vectors and the per-vertex extremizers; the
/// smooth statement guarantees rho <= 1, discretization gets `tol_disc`.
pub fn verify_gradient_lemma(
    decomposition: &SpectralDecomposition,
    complex: &SimplicialComplex,
    k: usize,
    trials: usize,
    seed: u64,
    tol_disc: f64,
) -> Result<LemmaReport, AnalysisError> {
    if k == 0 || k > decomposition.count() {
        return Err(AnalysisError::CutoffOutOfRange(k, decomposition.count()));
    }
    let lambda_k = decomposition.eigenvalues[k - 1];
    let n = complex.dim() as f64;
    let curvature = complex.metadata().curvature_bound;
    let a = lambda_k + (n - 1.0) * curvature;
    let scale = decomposition
        .eigenvalues
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(1.0);
    if a <= 1e-10 * scale {
        return Err(AnalysisError::DegenerateCutoff);
    }
    let modes = build_mode_data(decomposition, complex, k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_b = DMatrix::zeros(k, trials);
    for t in 0..trials {
        loop {
            let mut norm2 = 0.0;
            for j in 0..k {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                random_b[(j, t)] = v;
                norm2 += v * v;
            }
            if norm2 > 1e-12 {
                let norm = norm2.sqrt();
                for j in 0..k {
                    random_b[(j, t)] /= norm;
                }
                break;
            }
        }
    }
    let max_rho_random = rho_for_coefficients(&modes, &random_b, a);
    let extremal = extremal_coefficients(&modes, k, a);
    let max_rho_extremal = rho_for_coefficients(&modes, &extremal, a);
    let max_rho = max_rho_random.max(max_rho_extremal);
    Ok(LemmaReport {
        claim: "le1-gradient-lemma".into(),
        k,
        a,
        trials,
        max_rho_random,
        max_rho_extremal,
        max_rho,
        tol_disc,
        pass: max_rho <= 1.0 + tol_disc,
    })
}

/// Worst ratio over the coefficient columns, evaluated in vertex chunks to
/// bound memory.
fn rho_for_coefficients(modes: &ModeData, coeffs: &DMatrix<f64>, a: f64) -> f64 {
    let cols = coeffs.ncols();
    let mut worst = 0.0f64;
    let chunk = 256usize;
    let mut start = 0usize;
    let mut num = vec![0.0f64; cols];
    let mut den = vec![0.0f64; cols];
    while start < cols {
        let width = chunk.min(cols - start);
        let b = coeffs.columns(start, width);
        let u = &modes.phi * b;
        let ux = &modes.gx * b;
        let uy = &modes.gy * b;
        let uz = &modes.gz * b;
        for c in 0..width {
            let mut max_q = 0.0f64;
            let mut max_u2 = 0.0f64;
            for v in 0..modes.vertex_count() {
                let g2 =
                    ux[(v, c)] * ux[(v, c)] + uy[(v, c)] * uy[(v, c)] + uz[(v, c)] * uz[(v, c)];
                let u2 = u[(v, c)] * u[(v, c)];
                max_q = max_q.max(g2 + a * u2);
                max_u2 = max_u2.max(u2);
            }
            num[start + c] = max_q;
            den[start + c] = a * max_u2;
        }
        start += width;
    }
    for c in 0..cols {
        if den[c] > 0.0 {
            worst = worst.max(num[c] / den[c]);
        }
    }
    worst
}
