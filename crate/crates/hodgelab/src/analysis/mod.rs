//! Numerical verification of the spectral estimates: linear-combination
//! extremizers, Weyl and sup-norm exponent fits, the spectral heat kernel
//! with its decay law, and the Sobolev inequality.

mod estimates;
mod fit;
mod heat;
mod modes;
mod sobolev;

pub use estimates::{
    verify_gradient_lemma, verify_sharpness, verify_supnorm, verify_weyl, LemmaReport,
    SharpnessReport, SupnormReport, WeylReport,
};
pub use fit::{default_fit_range, fit_exponent, ExponentFit};
pub use heat::{
    verify_heat_decay, verify_semigroup, HeatDecayReport, HeatKernelEvaluator, SemigroupReport,
};
pub use modes::{build_mode_data, spectral_function, ModeData, SpectralFunctionField};
pub use sobolev::{verify_sobolev_forms, verify_sobolev_functions, SobolevReport};

use crate::dec::DecError;
use crate::eigen::EigenError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("cutoff k={0} out of range: decomposition has {1} pairs")]
    CutoffOutOfRange(usize, usize),
    #[error("top eigenvalue of the cutoff is zero; pick k past the kernel")]
    DegenerateCutoff,
    #[error("expected a degree-{expected} decomposition, got degree {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("need at least {needed} fit points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("fit data must be strictly positive (offending point {0})")]
    NonpositiveData(usize),
    #[error("fit range ({0}, {1}) out of bounds for {2} points")]
    BadRange(usize, usize, usize),
    #[error("sobolev exponent 2n/(n-2) diverges for dimension {0}; need n >= 3")]
    UnsupportedDimension(usize),
    #[error("need at least {needed} trials, got {got}")]
    TooFewTrials { needed: usize, got: usize },
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("tail bound {tail:e} exceeds 1% of the deviation {deviation:e} at t={t}; request more eigenpairs or larger t")]
    TailTooLarge { t: f64, tail: f64, deviation: f64 },
    #[error("tail bound {tail:e} exceeds requested accuracy {accuracy:e} at t={t}; request more eigenpairs or larger t")]
    TailAboveAccuracy { t: f64, tail: f64, accuracy: f64 },
    #[error("full spectrum required: decomposition has {got} of {dim} pairs")]
    PartialSpectrum { got: usize, dim: usize },
    #[error("diagonal heat decay implemented for degree 0, got {0}")]
    UnsupportedHeatDegree(usize),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Dec(#[from] DecError),
}

/// CSV block for external plotting: a comment header naming the claim and
/// the expected exponent, then `x,y` pairs.
pub fn fit_csv(claim: &str, expected_slope: f64, fit: &ExponentFit) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "# claim={claim} expected_slope={expected_slope}");
    let _ = writeln!(
        s,
        "# fitted_slope={} intercept={} r_squared={}",
        fit.slope, fit.intercept, fit.r_squared
    );
    s.push_str("x,y\n");
    for &(x, y) in &fit.points {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}
