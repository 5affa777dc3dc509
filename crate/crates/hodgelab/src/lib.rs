//! Spectral geometry on triangulated model manifolds via discrete exterior
//! calculus: Hodge Laplacian eigenproblems, heat kernels, and numerical
//! checks of eigenform gradient and growth estimates.
//!
//! The pipeline runs mesh -> operators -> spectrum -> verification:
//!
//! - [`complex`] generates and validates oriented simplicial meshes of the
//!   model manifolds (flat tori, icospheres);
//! - [`dec`] assembles coboundaries, diagonal Hodge stars and the weak-form
//!   Hodge Laplacian `K_p x = lambda M_p x`, plus pointwise recovery;
//! - [`eigen`] solves the sparse symmetric generalized eigenproblem for the
//!   low spectrum, with a dense oracle and Betti-number extraction;
//! - [`analysis`] verifies the spectral estimates: Weyl growth, sup-norm
//!   envelopes, the extremizer sharpness, the gradient lemma, heat kernels
//!   and their decay, and Sobolev constants;
//! - [`oracle`] supplies the analytic ground truth for the model manifolds.

pub mod analysis;
pub mod complex;
pub mod dec;
pub mod eigen;
pub mod oracle;
pub mod sparse;
