//! Sobolev inequality checks with mass-weighted discrete norms: zero-mean
//! functions against the Dirichlet energy, and 1-forms against
//! `|d w|^2 + |delta w|^2` after harmonic projection.

use super::AnalysisError;
use crate::complex::SimplicialComplex;
use crate::dec::{hodge_star, pointwise_value_norm, LaplacePair, StarScheme};
use crate::eigen::{kernel_dimension, KernelStrategy, SpectralDecomposition};
use crate::sparse::CsrMatrix;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const MIN_TRIALS: usize = 100;
/// modes used for band-limited test fields
const BAND_LIMIT: usize = 50;

/// Estimated Sobolev constant over randomized trials.
#[derive(Clone, Debug, Serialize)]
pub struct SobolevReport {
    pub claim: String,
    pub dim: usize,
    pub degree: usize,
    /// the critical exponent 2n/(n-2)
    pub exponent: f64,
    pub trials: usize,
    pub trials_used: usize,
    /// max over trials of the ratio; every trial satisfies the inequality
    /// with this constant by construction
    pub c_s: f64,
    pub min_ratio: f64,
    pub pass: bool,
}

fn check_dimension(n: usize) -> Result<f64, AnalysisError> {
    if n < 3 {
        return Err(AnalysisError::UnsupportedDimension(n));
    }
    Ok(2.0 * n as f64 / (n as f64 - 2.0))
}

/// Mass-weighted vertex L^q norm: `(sum_x M(x) |f(x)|^q)^{1/q}`.
fn lq_norm(values: &[f64], mass: &[f64], q: f64) -> f64 {
    values
        .iter()
        .zip(mass)
        .map(|(&v, &m)| m * v.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Diagonally preconditioned conjugate gradients to a relative residual.
fn cg_solve(a: &CsrMatrix, b: &DVector<f64>, tol: f64, max_iter: usize) -> DVector<f64> {
    let n = a.rows();
    let diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { d } else { 1.0 })
        .collect();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let b_norm = b.norm().max(1e-300);
    let mut z = DVector::from_fn(n, |i, _| r[i] / diag[i]);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        if r.norm() <= tol * b_norm {
            break;
        }
        let ap = a.mul_vec(&p);
        let alpha = rz / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    x
}

/// The smoothing filter `f -> M (M + h K)^{-1} f` used to put raw noise
/// into the discrete analog of H^1.
fn smooth(pair: &LaplacePair, h: f64, raw: &DVector<f64>) -> DVector<f64> {
    let shifted = {
        let m = CsrMatrix::from_diagonal(&pair.mass);
        let hk = {
            let mut k = pair.stiffness.clone();
            k = k.scale_rows(&vec![h; k.rows()]);
            k
        };
        m.add(&hk)
    };
    let u = cg_solve(&shifted, raw, 1e-12, 2000);
    DVector::from_fn(raw.len(), |i, _| pair.mass[i] * u[i])
}

fn mean_edge_length(complex: &SimplicialComplex) -> f64 {
    let vols = complex.volumes(1);
    vols.iter().sum::<f64>() / vols.len() as f64
}

/// Sobolev check for zero-mean functions: `|f|^2_{L^{2n/(n-2)}} <= C_s
/// f^T K_0 f`. Trials mix band-limited eigenfunction combinations with
/// smoothed raw cochains.
pub fn verify_sobolev_functions(
    complex: &SimplicialComplex,
    pair: &LaplacePair,
    decomposition: &SpectralDecomposition,
    trials: usize,
    seed: u64,
) -> Result<SobolevReport, AnalysisError> {
    let n = complex.dim();
    let q = check_dimension(n)?;
    if trials < MIN_TRIALS {
        return Err(AnalysisError::TooFewTrials {
            needed: MIN_TRIALS,
            got: trials,
        });
    }
    let dim = pair.dim();
    let volume: f64 = pair.mass.iter().sum();
    let h = mean_edge_length(complex);
    let nb = BAND_LIMIT.min(decomposition.count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_s = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut used = 0usize;
    for trial in 0..trials {
        let mut f = if trial % 2 == 0 {
            let mut f = DVector::zeros(dim);
            for j in 0..nb {
                let c = rng.random::<f64>() * 2.0 - 1.0;
                f.axpy(c, &decomposition.eigencochains.column(j).clone_owned(), 1.0);
            }
            f
        } else {
            let raw = DVector::from_fn(dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            smooth(pair, h, &raw)
        };
        // zero mean with respect to the mass inner product
        let mean: f64 = f.iter().zip(&pair.mass).map(|(&v, &m)| v * m).sum::<f64>() / volume;
        f.add_scalar_mut(-mean);
        let energy = f.dot(&pair.stiffness.mul_vec(&f));
        let norm_m: f64 = f.iter().zip(&pair.mass).map(|(&v, &m)| v * v * m).sum();
        if energy <= 1e-28 * volume || norm_m <= 1e-28 * volume {
            continue; // null test function, skipped per the degenerate rule
        }
        let values: Vec<f64> = f.iter().copied().collect();
        let num = lq_norm(&values, &pair.mass, q).powi(2);
        let ratio = num / energy;
        if !ratio.is_finite() {
            continue;
        }
        c_s = c_s.max(ratio);
        min_ratio = min_ratio.min(ratio);
        used += 1;
    }
    Ok(SobolevReport {
        claim: "th1.4-sobolev".into(),
        dim: n,
        degree: 0,
        exponent: q,
        trials,
        trials_used: used,
        c_s,
        min_ratio,
        pass: used > 0 && c_s.is_finite() && c_s > 0.0,
    })
}

/// Sobolev check for 1-forms: `|w - P(w)|^2_{L^{2n/(n-2)}} <= C_s w^T K_1 w`
/// with the harmonic projector assembled from the decomposition's kernel
/// eigencochains and pointwise norms recovered at vertices.
pub fn verify_sobolev_forms(
    complex: &SimplicialComplex,
    pair: &LaplacePair,
    decomposition: &SpectralDecomposition,
    trials: usize,
    seed: u64,
) -> Result<SobolevReport, AnalysisError> {
    let n = complex.dim();
    let q = check_dimension(n)?;
    if trials < MIN_TRIALS {
        return Err(AnalysisError::TooFewTrials {
            needed: MIN_TRIALS,
            got: trials,
        });
    }
    let dim = pair.dim();
    let betti = kernel_dimension(decomposition, KernelStrategy::Gap).unwrap_or_else(|_| {
        let lam_max = decomposition.eigenvalues.last().copied().unwrap_or(0.0);
        decomposition
            .eigenvalues
            .iter()
            .filter(|&&v| v < 1e-8 * lam_max)
            .count()
    });
    let vertex_mass = hodge_star(complex, 0, StarScheme::Barycentric)?.values;
    let volume: f64 = vertex_mass.iter().sum();
    let h = mean_edge_length(complex);
    let nb = BAND_LIMIT.min(decomposition.count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_s = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut used = 0usize;
    for trial in 0..trials {
        let mut w = if trial % 2 == 0 {
            let mut w = DVector::zeros(dim);
            for j in 0..nb {
                let c = rng.random::<f64>() * 2.0 - 1.0;
                w.axpy(c, &decomposition.eigencochains.column(j).clone_owned(), 1.0);
            }
            w
        } else {
            let raw = DVector::from_fn(dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            smooth(pair, h, &raw)
        };
        // subtract the harmonic projection
        for k in 0..betti {
            let phi = decomposition.eigencochains.column(k);
            let coeff: f64 = (0..dim).map(|i| phi[i] * pair.mass[i] * w[i]).sum();
            w.axpy(-coeff, &phi.clone_owned(), 1.0);
        }
        let energy = w.dot(&pair.stiffness.mul_vec(&w));
        let norm_m: f64 = w.iter().zip(&pair.mass).map(|(&v, &m)| v * v * m).sum();
        if energy <= 1e-28 * volume || norm_m <= 1e-28 * volume {
            continue;
        }
        let cochain: Vec<f64> = w.iter().copied().collect();
        let field = pointwise_value_norm(complex, 1, &cochain)?;
        let num = lq_norm(&field, &vertex_mass, q).powi(2);
        let ratio = num / energy;
        if !ratio.is_finite() {
            continue;
        }
        c_s = c_s.max(ratio);
        min_ratio = min_ratio.min(ratio);
        used += 1;
    }
    Ok(SobolevReport {
        claim: "th4.4-sobolev-forms".into(),
        dim: n,
        degree: 1,
        exponent: q,
        trials,
        trials_used: used,
        c_s,
        min_ratio,
        pass: used > 0 && c_s.is_finite() && c_s > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::generate_flat_torus;
    use crate::dec::hodge_laplacian;
    use crate::eigen::{solve_lowest, SolverConfig};
    use std::f64::consts::TAU;

    #[test]
    fn rejects_low_dimension() {
        let c = generate_flat_torus(2, 8, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(6)).unwrap();
        assert!(matches!(
            verify_sobolev_functions(&c, &pair, &d, 200, 0),
            Err(AnalysisError::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn rejects_few_trials() {
        let c = generate_flat_torus(3, 4, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(6)).unwrap();
        assert!(matches!(
            verify_sobolev_functions(&c, &pair, &d, 10, 0),
            Err(AnalysisError::TooFewTrials { .. })
        ));
    }

    #[test]
    fn functions_constant_bounded_on_t3() {
        let c = generate_flat_torus(3, 5, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(20).with_tol(1e-8)).unwrap();
        let report = verify_sobolev_functions(&c, &pair, &d, 120, 1).unwrap();
        assert!(report.pass);
        assert!(report.trials_used > 100);
        // a single eigenfunction gives ratio |phi|_{L6}^2 / lambda <= C_s
        let phi = d.eigencochains.column(1).clone_owned();
        let vals: Vec<f64> = phi.iter().copied().collect();
        let num = lq_norm(&vals, &pair.mass, 6.0).powi(2);
        let ratio = num / d.eigenvalues[1];
        assert!(ratio <= report.c_s * 1.5, "{ratio} vs {}", report.c_s);
    }

    #[test]
    fn forms_bounded_on_t3() {
        let c = generate_flat_torus(3, 4, TAU).unwrap();
        let pair = hodge_laplacian(&c, 1, StarScheme::Barycentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(12).with_tol(1e-8)).unwrap();
        let report = verify_sobolev_forms(&c, &pair, &d, 110, 2).unwrap();
        assert!(report.pass, "c_s {}", report.c_s);
        assert!(report.c_s.is_finite() && report.c_s > 0.0);
    }
}
