//! Spectral heat kernel: truncated eigenfunction sums with a tail bound
//! from the fitted growth envelopes, the decay law, and the exact
//! semigroup identity on full spectra.

use super::fit::{fit_exponent, ExponentFit};
use super::AnalysisError;
use crate::complex::SimplicialComplex;
use crate::dec::{pointwise_value_norm, LaplacePair};
use crate::eigen::SpectralDecomposition;
use nalgebra::DMatrix;
use serde::Serialize;

/// Truncated spectral sum for the heat kernel at one form degree, with a
/// computable bound on the dropped tail.
///
/// The tail combines two empirical envelopes extracted from the same
/// decomposition: a lower eigenvalue envelope `lambda_j >= c_w j^{2/n}`
/// and the fitted sup-norm envelope `sup |phi_j| <= c_sup lambda_j^s`
/// (running-maximum fit, with measured headroom). Both are measured, not
/// proven, so the bound is self-contained but not formally rigorous.
pub struct HeatKernelEvaluator<'a> {
    decomposition: &'a SpectralDecomposition,
    pub betti: usize,
    pub dim: usize,
    pub volume: f64,
    /// fitted sup-norm envelope: `sup |phi| <= sup_prefactor lambda^{sup_slope}`
    pub sup_slope: f64,
    pub sup_prefactor: f64,
    /// eigenvalue lower envelope constant: `lambda_j >= c_weyl (j - b)^{2/n}`
    pub c_weyl: f64,
}

impl<'a> HeatKernelEvaluator<'a> {
    /// Build the evaluator; `betti` is the number of harmonic modes kept
    /// outside the exponential sum.
    pub fn new(
        decomposition: &'a SpectralDecomposition,
        complex: &SimplicialComplex,
        betti: usize,
    ) -> Result<Self, AnalysisError> {
        let n = complex.dim();
        let count = decomposition.count();
        let mut mode_sups = Vec::with_capacity(count);
        match decomposition.degree {
            0 => {
                for j in 0..count {
                    let sup = decomposition
                        .eigencochains
                        .column(j)
                        .iter()
                        .fold(0.0f64, |m, v| m.max(v.abs()));
                    mode_sups.push(sup);
                }
            }
            _ => {
                for j in 0..count {
                    let col: Vec<f64> = decomposition
                        .eigencochains
                        .column(j)
                        .iter()
                        .copied()
                        .collect();
                    let norms = pointwise_value_norm(complex, decomposition.degree, &col)?;
                    mode_sups.push(norms.iter().fold(0.0f64, |m, &v| m.max(v)));
                }
            }
        }
        let mut lambdas = Vec::new();
        let mut envelope = Vec::new();
        let mut running = 0.0f64;
        for j in betti..count {
            let lam = decomposition.eigenvalues[j];
            if lam <= 0.0 {
                return Err(AnalysisError::DegenerateCutoff);
            }
            running = running.max(mode_sups[j]);
            lambdas.push(lam);
            envelope.push(running);
        }
        // lower eigenvalue envelope over the same window the growth fit
        // uses; the preasymptotic dip at small indices would otherwise
        // drag the extrapolation constant down
        let (w_lo, w_hi) = if lambdas.len() >= super::fit::MIN_FIT_POINTS {
            super::fit::default_fit_range(lambdas.len())
        } else {
            (0, lambdas.len().saturating_sub(1))
        };
        let mut c_weyl = f64::INFINITY;
        for (idx, lam) in lambdas.iter().enumerate().take(w_hi + 1).skip(w_lo) {
            c_weyl = c_weyl.min(lam / ((idx + 1) as f64).powf(2.0 / n as f64));
        }
        // fitted sup envelope, extrapolated upward only; fall back to the
        // flat measured sup when there are too few modes to fit
        let (mut sup_slope, mut sup_prefactor) = (0.0, running.max(f64::MIN_POSITIVE));
        if lambdas.len() >= super::fit::MIN_FIT_POINTS {
            let fit = super::fit::fit_exponent(&lambdas, &envelope, (0, lambdas.len() - 1))?;
            let slope = fit.slope.max(0.0);
            // measured headroom keeps the fitted line above every sample
            let mut headroom = 1.0f64;
            for (l, e) in lambdas.iter().zip(&envelope) {
                headroom = headroom.max(e / (fit.intercept.exp() * l.powf(slope)));
            }
            sup_slope = slope;
            sup_prefactor = fit.intercept.exp() * headroom;
        }
        Ok(Self {
            decomposition,
            betti,
            dim: n,
            volume: complex.metadata().volume,
            sup_slope,
            sup_prefactor,
            c_weyl,
        })
    }

    pub fn count(&self) -> usize {
        self.decomposition.count()
    }

    /// Bound on the dropped remainder `sum_{j > count} e^{-lambda_j t} sup
    /// phi_j(x) phi_j(y)` from the measured envelopes.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let n = self.dim as f64;
        let mut sum = 0.0f64;
        let start = self.count() - self.betti + 1;
        let mut j = start;
        loop {
            let lam = self.c_weyl * (j as f64).powf(2.0 / n);
            let sup = self.sup_prefactor * lam.powf(self.sup_slope);
            let term = sup * sup * (-lam * t).exp();
            sum += term;
            if (j > start + 8 && term < 1e-18 * sum.max(1e-300)) || j > start + 100_000_000 {
                break;
            }
            j += 1;
        }
        sum
    }

    /// Harmonic part `sum_{k <= b} phi_k(x) phi_k(y)`; for degree 0 on a
    /// connected mesh this equals 1/V.
    pub fn harmonic(&self, x: usize, y: usize) -> f64 {
        let d = self.decomposition;
        (0..self.betti)
            .map(|k| d.eigencochains[(x, k)] * d.eigencochains[(y, k)])
            .sum()
    }

    /// Truncated kernel entry `harmonic + sum_{k > b} e^{-lambda_k t}
    /// phi_k(x) phi_k(y)` in cochain coordinates.
    pub fn kernel(&self, x: usize, y: usize, t: f64) -> f64 {
        self.harmonic(x, y) + self.deviation(x, y, t)
    }

    /// Kernel entry with the preconditions enforced: positive time and a
    /// tail bound within the requested accuracy.
    pub fn kernel_checked(
        &self,
        x: usize,
        y: usize,
        t: f64,
        accuracy: f64,
    ) -> Result<f64, AnalysisError> {
        if t <= 0.0 {
            return Err(AnalysisError::NonpositiveTime(t));
        }
        let tail = self.tail_bound(t);
        if tail > accuracy {
            return Err(AnalysisError::TailAboveAccuracy { t, tail, accuracy });
        }
        Ok(self.kernel(x, y, t))
    }

    /// Deviation from the harmonic projector.
    pub fn deviation(&self, x: usize, y: usize, t: f64) -> f64 {
        let d = self.decomposition;
        let mut sum = 0.0;
        for k in self.betti..d.count() {
            let w = (-d.eigenvalues[k] * t).exp();
            if w == 0.0 {
                break;
            }
            sum += w * d.eigencochains[(x, k)] * d.eigencochains[(y, k)];
        }
        sum
    }

    /// Diagonal deviation per vertex (degree 0 only).
    pub fn diag_deviation(&self, t: f64) -> Result<Vec<f64>, AnalysisError> {
        if self.decomposition.degree != 0 {
            return Err(AnalysisError::UnsupportedHeatDegree(
                self.decomposition.degree,
            ));
        }
        let d = self.decomposition;
        let n = d.dim();
        let mut out = vec![0.0f64; n];
        for k in self.betti..d.count() {
            let w = (-d.eigenvalues[k] * t).exp();
            if w == 0.0 {
                break;
            }
            for (x, o) in out.iter_mut().enumerate() {
                *o += w * d.eigencochains[(x, k)] * d.eigencochains[(x, k)];
            }
        }
        Ok(out)
    }

    /// `max_x (H(x,x,t) - harmonic(x,x))`.
    pub fn diag_deviation_sup(&self, t: f64) -> Result<f64, AnalysisError> {
        Ok(self.diag_deviation(t)?.into_iter().fold(0.0f64, f64::max))
    }
}

/// Log-log decay fit of the diagonal heat deviation.
#[derive(Clone, Debug, Serialize)]
pub struct HeatDecayReport {
    pub claim: String,
    pub dim: usize,
    pub expected_slope: f64,
    pub slope_tol: f64,
    /// worst tail_bound(t) / deviation(t) over the grid
    pub max_tail_fraction: f64,
    pub fit: ExponentFit,
    pub pass: bool,
}

/// Fit `log max_x |H(x,x,t) - harmonic|` against `log t`; every grid point
/// must have its truncation tail at or below 1% of the deviation.
pub fn verify_heat_decay(
    evaluator: &HeatKernelEvaluator<'_>,
    ts: &[f64],
    slope_tol: f64,
) -> Result<HeatDecayReport, AnalysisError> {
    let mut devs = Vec::with_capacity(ts.len());
    let mut max_tail_fraction = 0.0f64;
    for &t in ts {
        if t <= 0.0 {
            return Err(AnalysisError::NonpositiveTime(t));
        }
        let dev = evaluator.diag_deviation_sup(t)?;
        let tail = evaluator.tail_bound(t);
        if tail > 0.01 * dev {
            return Err(AnalysisError::TailTooLarge {
                t,
                tail,
                deviation: dev,
            });
        }
        max_tail_fraction = max_tail_fraction.max(tail / dev);
        devs.push(dev);
    }
    let fit = fit_exponent(ts, &devs, (0, ts.len() - 1))?;
    let expected = -(evaluator.dim as f64) / 2.0;
    let pass = (fit.slope - expected).abs() <= slope_tol;
    Ok(HeatDecayReport {
        claim: "th1.3-heat-decay".into(),
        dim: evaluator.dim,
        expected_slope: expected,
        slope_tol,
        max_tail_fraction,
        fit,
        pass,
    })
}

/// Max-abs error of the semigroup identity on a full spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub claim: String,
    pub t: f64,
    pub s: f64,
    pub max_error: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `max |H(t+s) - H(t) M H(s)|` for the full spectral sum; exact up to
/// roundoff because the sum is a matrix exponential.
pub fn verify_semigroup(
    decomposition: &SpectralDecomposition,
    pair: &LaplacePair,
    t: f64,
    s: f64,
    tol: f64,
) -> Result<SemigroupReport, AnalysisError> {
    let n = decomposition.dim();
    if decomposition.count() != n {
        return Err(AnalysisError::PartialSpectrum {
            got: decomposition.count(),
            dim: n,
        });
    }
    if t < 0.0 || s < 0.0 {
        return Err(AnalysisError::NonpositiveTime(t.min(s)));
    }
    let kernel = |tau: f64| -> DMatrix<f64> {
        let phi = &decomposition.eigencochains;
        let mut scaled = phi.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= (-decomposition.eigenvalues[k] * tau).exp();
        }
        &scaled * phi.transpose()
    };
    let h_t = kernel(t);
    let h_s = kernel(s);
    let h_ts = kernel(t + s);
    let mut m_h_s = h_s.clone();
    for i in 0..n {
        for j in 0..n {
            m_h_s[(i, j)] *= pair.mass[i];
        }
    }
    let composed = &h_t * &m_h_s;
    let max_error = (&h_ts - &composed).abs().max();
    Ok(SemigroupReport {
        claim: "heat-semigroup".into(),
        t,
        s,
        max_error,
        tol,
        pass: max_error <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::generate_flat_torus;
    use crate::dec::{hodge_laplacian, StarScheme};
    use crate::eigen::{solve_all_dense, solve_lowest, SolverConfig};
    use std::f64::consts::TAU;

    #[test]
    fn kernel_symmetric_and_decays() {
        let c = generate_flat_torus(2, 8, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(20).with_tol(1e-9)).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        assert_eq!(ev.kernel(3, 17, 0.4), ev.kernel(17, 3, 0.4));
        // large time: kernel settles to 1/V
        let v = c.metadata().volume;
        let h = ev.kernel(5, 9, 50.0);
        assert!((h - 1.0 / v).abs() < 1e-10, "{h} vs {}", 1.0 / v);
    }

    #[test]
    fn diagonal_dominates_equilibrium_minus_tail() {
        // H(x,x,t) >= 1/V - tail(t): the diagonal deviation is a sum of
        // squares, so the kernel can only sit above the equilibrium
        let c = generate_flat_torus(2, 10, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(30).with_tol(1e-9)).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        let v = c.metadata().volume;
        for &t in &[0.05, 0.3, 2.0] {
            let floor = 1.0 / v - ev.tail_bound(t);
            for x in [0usize, 31, 77] {
                assert!(ev.kernel(x, x, t) >= floor);
            }
        }
    }

    #[test]
    fn harmonic_part_is_inverse_volume() {
        let c = generate_flat_torus(1, 32, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        let v = c.metadata().volume;
        for x in [0usize, 7, 19] {
            assert!((ev.harmonic(x, x) - 1.0 / v).abs() < 1e-10);
        }
    }

    #[test]
    fn stochastic_completeness_full_spectrum() {
        // sum_y H(x,y,t) M(y) = 1 on the dense evaluator
        let c = generate_flat_torus(1, 48, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        for &t in &[0.1, 1.0] {
            for &x in &[0usize, 11] {
                let mass: f64 = (0..d.dim())
                    .map(|y| ev.kernel(x, y, t) * pair.mass[y])
                    .sum();
                assert!((mass - 1.0).abs() < 1e-10, "t={t} x={x}: {mass}");
            }
        }
    }

    #[test]
    fn cauchy_schwarz_diagonal_domination() {
        let c = generate_flat_torus(2, 8, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        for &t in &[0.2, 0.8] {
            for &(x, y) in &[(0usize, 5usize), (3, 40), (10, 63)] {
                let off = ev.deviation(x, y, t).abs();
                let diag = (ev.deviation(x, x, t) * ev.deviation(y, y, t)).sqrt();
                assert!(off <= diag + 1e-12, "t={t} ({x},{y}): {off} vs {diag}");
            }
        }
    }

    #[test]
    fn parseval_full_spectrum() {
        let c = generate_flat_torus(1, 40, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let f: Vec<f64> = (0..d.dim())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let fm: f64 = f.iter().zip(&pair.mass).map(|(x, m)| x * x * m).sum();
        let mut partial = 0.0;
        for k in 0..d.count() {
            let coeff: f64 = (0..d.dim())
                .map(|i| d.eigencochains[(i, k)] * pair.mass[i] * f[i])
                .sum();
            partial += coeff * coeff;
            assert!(partial <= fm * (1.0 + 1e-10), "k={k}");
        }
        assert!((partial - fm).abs() <= 1e-10 * fm);
    }

    #[test]
    fn semigroup_identity_ring() {
        let c = generate_flat_torus(1, 64, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let report = verify_semigroup(&d, &pair, 0.3, 0.3, 1e-10).unwrap();
        assert!(report.pass, "error {}", report.max_error);
        // t = 0 composes to the identity kernel
        let report0 = verify_semigroup(&d, &pair, 0.5, 0.0, 1e-10).unwrap();
        assert!(report0.pass, "error {}", report0.max_error);
    }

    #[test]
    fn semigroup_requires_full_spectrum() {
        let c = generate_flat_torus(1, 32, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(6)).unwrap();
        assert!(matches!(
            verify_semigroup(&d, &pair, 0.1, 0.1, 1e-10),
            Err(AnalysisError::PartialSpectrum { .. })
        ));
    }

    #[test]
    fn decay_slope_on_circle() {
        let c = generate_flat_torus(1, 128, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        let ts: Vec<f64> = (0..12)
            .map(|i| 0.005 * (0.05f64 / 0.005).powf(i as f64 / 11.0))
            .collect();
        let report = verify_heat_decay(&ev, &ts, 0.1).unwrap();
        assert!(
            report.pass,
            "slope {} expected {}",
            report.fit.slope, report.expected_slope
        );
    }

    #[test]
    fn rejects_nonpositive_time() {
        let c = generate_flat_torus(1, 16, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Barycentric).unwrap();
        let d = solve_all_dense(&pair).unwrap();
        let ev = HeatKernelEvaluator::new(&d, &c, 1).unwrap();
        assert!(matches!(
            ev.kernel_checked(0, 0, 0.0, 1e-3),
            Err(AnalysisError::NonpositiveTime(_))
        ));
    }
}
