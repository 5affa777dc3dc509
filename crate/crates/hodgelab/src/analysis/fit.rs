//! Least-squares exponent fits in log-log coordinates.

use super::AnalysisError;
use serde::Serialize;

pub const MIN_FIT_POINTS: usize = 8;

/// Slope/intercept/r-squared of an ordinary least-squares fit of
/// `log y` against `log x` over a stated index range.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// inclusive index range of the input series that was used
    pub range: (usize, usize),
    /// the (x, y) pairs the fit actually saw
    pub points: Vec<(f64, f64)>,
}

/// Fit `log ys` against `log xs` over the inclusive index range.
pub fn fit_exponent(
    xs: &[f64],
    ys: &[f64],
    range: (usize, usize),
) -> Result<ExponentFit, AnalysisError> {
    let (lo, hi) = range;
    if lo > hi || hi >= xs.len() || xs.len() != ys.len() {
        return Err(AnalysisError::BadRange(lo, hi, xs.len()));
    }
    let m = hi - lo + 1;
    if m < MIN_FIT_POINTS {
        return Err(AnalysisError::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: m,
        });
    }
    let mut points = Vec::with_capacity(m);
    for i in lo..=hi {
        if !(xs[i] > 0.0 && ys[i] > 0.0) {
            return Err(AnalysisError::NonpositiveData(i));
        }
        points.push((xs[i], ys[i]));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = m as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot <= 1e-300 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        range,
        points,
    })
}

/// Default range over a series of length `n`: the upper two-thirds of the
/// spectrum with the top tenth (worst discretization error) excluded.
pub fn default_fit_range(n: usize) -> (usize, usize) {
    let hi = n.saturating_sub(n / 10 + 1);
    let lo = (n / 3).min(hi.saturating_sub(MIN_FIT_POINTS.saturating_sub(1)));
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_slope() {
        let xs: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let fit = fit_exponent(&xs, &xs, (0, 11)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_with_prefactor() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 5.0 * x * x).collect();
        let fit = fit_exponent(&xs, &ys, (0, 19)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn torus_counting_slope() {
        // lattice eigenvalue growth on the flat 2-torus: lambda_k ~ k
        let spec = crate::oracle::torus_spectrum(2, std::f64::consts::TAU, 220, 0).unwrap();
        let flat = spec.flatten();
        let ks: Vec<f64> = (1..flat.len()).map(|k| k as f64).collect();
        let lambdas: Vec<f64> = flat[1..].to_vec();
        let fit = fit_exponent(&ks, &lambdas, (19, 199)).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn rejects_bad_input() {
        let xs = [1.0, 2.0, 3.0];
        assert!(matches!(
            fit_exponent(&xs, &xs, (0, 2)),
            Err(AnalysisError::TooFewPoints { .. })
        ));
        let xs: Vec<f64> = (0..10).map(|i| i as f64 - 3.0).collect();
        assert!(matches!(
            fit_exponent(&xs, &xs, (0, 9)),
            Err(AnalysisError::NonpositiveData(_))
        ));
    }

    #[test]
    fn default_range_has_enough_points() {
        for n in [10usize, 40, 300] {
            let (lo, hi) = default_fit_range(n);
            assert!(
                hi < n && hi - lo + 1 >= MIN_FIT_POINTS,
                "n={n}: ({lo},{hi})"
            );
        }
    }
}
