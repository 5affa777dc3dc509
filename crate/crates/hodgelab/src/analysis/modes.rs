//! Per-vertex eigenfunction data and the linear-combination extremizer
//! field `Q_A(x) = max_{|b|=1} (|grad w_b|^2 + A |w_b|^2)(x)`.

use super::AnalysisError;
use crate::complex::{simplex_volume_from_points, SimplicialComplex};
use crate::dec::hat_gradients;
use crate::eigen::SpectralDecomposition;
use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector3, Vector4};
use rayon::prelude::*;
use serde::Serialize;

/// Vertex values and recovered gradients of the first k eigenfunctions.
pub struct ModeData {
    pub lambda: Vec<f64>,
    /// n_v x k vertex values
    pub phi: DMatrix<f64>,
    /// n_v x k gradient components
    pub gx: DMatrix<f64>,
    pub gy: DMatrix<f64>,
    pub gz: DMatrix<f64>,
}

impl ModeData {
    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.phi.nrows()
    }

    /// Recovered gradient vector of mode `j` at vertex `v`.
    pub fn gradient(&self, v: usize, j: usize) -> Vector3<f64> {
        Vector3::new(self.gx[(v, j)], self.gy[(v, j)], self.gz[(v, j)])
    }
}

/// Vertex values plus volume-averaged P1 gradients for the first `k`
/// eigenfunctions of a degree-0 decomposition.
pub fn build_mode_data(
    decomposition: &SpectralDecomposition,
    complex: &SimplicialComplex,
    k: usize,
) -> Result<ModeData, AnalysisError> {
    if decomposition.degree != 0 {
        return Err(AnalysisError::DegreeMismatch {
            expected: 0,
            got: decomposition.degree,
        });
    }
    if k == 0 || k > decomposition.count() {
        return Err(AnalysisError::CutoffOutOfRange(k, decomposition.count()));
    }
    let n_v = complex.vertex_count();
    let dim = complex.dim();
    let phi = decomposition.eigencochains.columns(0, k).clone_owned();
    let mut gx = DMatrix::zeros(n_v, k);
    let mut gy = DMatrix::zeros(n_v, k);
    let mut gz = DMatrix::zeros(n_v, k);
    let mut weight = vec![0.0f64; n_v];
    for t in 0..complex.simplex_count(dim) {
        let tuple = complex.simplex(dim, t);
        let pts = complex.local_positions(dim, t);
        let grads = hat_gradients(&pts);
        let vol = simplex_volume_from_points(&pts);
        for j in 0..k {
            let mut g = Vector3::zeros();
            for (slot, &v) in tuple.iter().enumerate() {
                g += phi[(v, j)] * grads[slot];
            }
            for &v in tuple {
                gx[(v, j)] += vol * g.x;
                gy[(v, j)] += vol * g.y;
                gz[(v, j)] += vol * g.z;
            }
        }
        for &v in tuple {
            weight[v] += vol;
        }
    }
    for j in 0..k {
        for v in 0..n_v {
            gx[(v, j)] /= weight[v];
            gy[(v, j)] /= weight[v];
            gz[(v, j)] /= weight[v];
        }
    }
    Ok(ModeData {
        lambda: decomposition.eigenvalues[..k].to_vec(),
        phi,
        gx,
        gy,
        gz,
    })
}

/// Accumulated 4x4 Gram pieces at one vertex: the rank-reduced form of the
/// k x k extremizer matrix `g(x) + A p(x)`.
#[derive(Clone, Copy, Default)]
struct GramAccumulator {
    gg: [[f64; 3]; 3],
    gphi: [f64; 3],
    phi2: f64,
}

impl GramAccumulator {
    fn push(&mut self, g: [f64; 3], phi: f64) {
        for r in 0..3 {
            for c in 0..3 {
                self.gg[r][c] += g[r] * g[c];
            }
            self.gphi[r] += phi * g[r];
        }
        self.phi2 += phi * phi;
    }

    fn q_value(&self, a: f64) -> f64 {
        let sa = a.sqrt();
        let m = Matrix4::new(
            self.gg[0][0],
            self.gg[0][1],
            self.gg[0][2],
            sa * self.gphi[0],
            self.gg[1][0],
            self.gg[1][1],
            self.gg[1][2],
            sa * self.gphi[1],
            self.gg[2][0],
            self.gg[2][1],
            self.gg[2][2],
            sa * self.gphi[2],
            sa * self.gphi[0],
            sa * self.gphi[1],
            sa * self.gphi[2],
            a * self.phi2,
        );
        let eig = SymmetricEigen::new(m);
        eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v))
    }

    /// Top eigenvector of the 4x4 block, for extremal coefficient recovery.
    fn top_vector(&self, a: f64) -> (f64, Vector4<f64>) {
        let sa = a.sqrt();
        let m = Matrix4::new(
            self.gg[0][0],
            self.gg[0][1],
            self.gg[0][2],
            sa * self.gphi[0],
            self.gg[1][0],
            self.gg[1][1],
            self.gg[1][2],
            sa * self.gphi[1],
            self.gg[2][0],
            self.gg[2][1],
            self.gg[2][2],
            sa * self.gphi[2],
            sa * self.gphi[0],
            sa * self.gphi[1],
            sa * self.gphi[2],
            a * self.phi2,
        );
        let eig = SymmetricEigen::new(m);
        let mut best = 0;
        for i in 1..4 {
            if eig.eigenvalues[i] > eig.eigenvalues[best] {
                best = i;
            }
        }
        (
            eig.eigenvalues[best],
            eig.eigenvectors.column(best).clone_owned(),
        )
    }
}

/// Extremizer field over unit coefficient vectors, with cutoff k and zeroth
/// order weight A.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralFunctionField {
    pub k: usize,
    pub a: f64,
    /// per-vertex maximum of `|grad w_b|^2 + A |w_b|^2` over unit b
    pub values: Vec<f64>,
}

/// Per-vertex extremal value of `|grad w|^2 + A |w|^2` over unit-norm
/// combinations of the first k eigenfunctions, via the largest squared
/// singular value of the k x 4 mode matrix at each vertex.
pub fn spectral_function(
    decomposition: &SpectralDecomposition,
    complex: &SimplicialComplex,
    k: usize,
    a: f64,
) -> Result<SpectralFunctionField, AnalysisError> {
    let modes = build_mode_data(decomposition, complex, k)?;
    Ok(SpectralFunctionField {
        k,
        a,
        values: q_field(&modes, k, a),
    })
}

/// Q_A values at every vertex for a fixed cutoff.
pub(crate) fn q_field(modes: &ModeData, k: usize, a: f64) -> Vec<f64> {
    (0..modes.vertex_count())
        .into_par_iter()
        .map(|v| {
            let mut acc = GramAccumulator::default();
            for j in 0..k {
                acc.push(
                    [modes.gx[(v, j)], modes.gy[(v, j)], modes.gz[(v, j)]],
                    modes.phi[(v, j)],
                );
            }
            acc.q_value(a)
        })
        .collect()
}

/// `max_x Q_{A(k)}(x)` for a list of ascending cutoffs, one accumulator
/// sweep per vertex.
pub(crate) fn q_max_series(
    modes: &ModeData,
    cutoffs: &[usize],
    a_of: &(dyn Fn(usize) -> f64 + Sync),
) -> Vec<f64> {
    debug_assert!(cutoffs.windows(2).all(|w| w[0] < w[1]));
    let per_vertex: Vec<Vec<f64>> = (0..modes.vertex_count())
        .into_par_iter()
        .map(|v| {
            let mut acc = GramAccumulator::default();
            let mut out = Vec::with_capacity(cutoffs.len());
            let mut j = 0usize;
            for &cut in cutoffs {
                while j < cut {
                    acc.push(
                        [modes.gx[(v, j)], modes.gy[(v, j)], modes.gz[(v, j)]],
                        modes.phi[(v, j)],
                    );
                    j += 1;
                }
                out.push(acc.q_value(a_of(cut)));
            }
            out
        })
        .collect();
    let mut maxima = vec![0.0f64; cutoffs.len()];
    for row in &per_vertex {
        for (m, &v) in maxima.iter_mut().zip(row) {
            *m = m.max(v);
        }
    }
    maxima
}

/// `max_x sum_{i<=k} phi_i(x)^2` per cutoff: the gradient-free extremizer
/// (the k x k coefficient matrix is rank one).
pub(crate) fn gradfree_max_series(modes: &ModeData, cutoffs: &[usize]) -> Vec<f64> {
    let per_vertex: Vec<Vec<f64>> = (0..modes.vertex_count())
        .into_par_iter()
        .map(|v| {
            let mut sum = 0.0f64;
            let mut out = Vec::with_capacity(cutoffs.len());
            let mut j = 0usize;
            for &cut in cutoffs {
                while j < cut {
                    sum += modes.phi[(v, j)] * modes.phi[(v, j)];
                    j += 1;
                }
                out.push(sum);
            }
            out
        })
        .collect();
    let mut maxima = vec![0.0f64; cutoffs.len()];
    for row in &per_vertex {
        for (m, &v) in maxima.iter_mut().zip(row) {
            *m = m.max(v);
        }
    }
    maxima
}

/// Extremal unit coefficient vectors per vertex: the top left singular
/// vector of the k x 4 mode matrix, recovered as `b = W u / |W u|`.
pub(crate) fn extremal_coefficients(modes: &ModeData, k: usize, a: f64) -> DMatrix<f64> {
    let n_v = modes.vertex_count();
    let sa = a.sqrt();
    let cols: Vec<Vec<f64>> = (0..n_v)
        .into_par_iter()
        .map(|v| {
            let mut acc = GramAccumulator::default();
            for j in 0..k {
                acc.push(
                    [modes.gx[(v, j)], modes.gy[(v, j)], modes.gz[(v, j)]],
                    modes.phi[(v, j)],
                );
            }
            let (_, u) = acc.top_vector(a);
            let mut b = vec![0.0f64; k];
            let mut norm2 = 0.0;
            for (j, bj) in b.iter_mut().enumerate() {
                *bj = modes.gx[(v, j)] * u[0]
                    + modes.gy[(v, j)] * u[1]
                    + modes.gz[(v, j)] * u[2]
                    + sa * modes.phi[(v, j)] * u[3];
                norm2 += *bj * *bj;
            }
            let norm = norm2.sqrt();
            if norm > 0.0 {
                for bj in &mut b {
                    *bj /= norm;
                }
            } else {
                b[0] = 1.0;
            }
            b
        })
        .collect();
    let mut out = DMatrix::zeros(k, n_v);
    for (v, col) in cols.iter().enumerate() {
        for (j, &b) in col.iter().enumerate() {
            out[(j, v)] = b;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::generate_flat_torus;
    use crate::dec::{hodge_laplacian, StarScheme};
    use crate::eigen::{solve_lowest, SolverConfig};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn torus_modes(res: usize, count: usize) -> (crate::complex::SimplicialComplex, ModeData) {
        let c = generate_flat_torus(2, res, TAU).unwrap();
        let pair = hodge_laplacian(&c, 0, StarScheme::Circumcentric).unwrap();
        let d = solve_lowest(&pair, &SolverConfig::new(count).with_tol(1e-9)).unwrap();
        let modes = build_mode_data(&d, &c, count).unwrap();
        (c, modes)
    }

    #[test]
    fn single_member_field_matches_direct() {
        // k = 1: Q_A(x) = |grad phi_1|^2 + A phi_1^2 exactly
        let (_, modes) = torus_modes(8, 3);
        let a = 2.5;
        let q = q_field(&modes, 1, a);
        for v in 0..modes.vertex_count() {
            let g = modes.gradient(v, 0).norm_squared();
            let expect = g + a * modes.phi[(v, 0)] * modes.phi[(v, 0)];
            assert!(
                (q[v] - expect).abs() <= 1e-12 * (1.0 + expect),
                "vertex {v}"
            );
        }
    }

    #[test]
    fn gradient_free_is_mode_sum() {
        let (_, modes) = torus_modes(8, 6);
        let series = gradfree_max_series(&modes, &[6]);
        let mut expect = 0.0f64;
        for v in 0..modes.vertex_count() {
            let s: f64 = (0..6).map(|j| modes.phi[(v, j)].powi(2)).sum();
            expect = expect.max(s);
        }
        assert!((series[0] - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn rank_reduction_matches_full_gram() {
        // the 4x4 route equals the explicit k x k matrix's largest eigenvalue
        let (_, modes) = torus_modes(8, 9);
        let k = 9;
        let a = 3.0;
        let q = q_field(&modes, k, a);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..12 {
            let v = rng.random_range(0..modes.vertex_count());
            let mut gram = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let gi = modes.gradient(v, i);
                    let gj = modes.gradient(v, j);
                    gram[(i, j)] = gi.dot(&gj) + a * modes.phi[(v, i)] * modes.phi[(v, j)];
                }
            }
            let top = nalgebra::SymmetricEigen::new(gram)
                .eigenvalues
                .iter()
                .fold(0.0f64, |acc, &x| acc.max(x));
            assert!(
                (q[v] - top).abs() <= 1e-10 * (1.0 + top),
                "vertex {v}: {} vs {top}",
                q[v]
            );
        }
    }

    #[test]
    fn domination_over_members() {
        // Q_A(x) >= |grad phi_i|^2 + A phi_i^2 for every member
        let (_, modes) = torus_modes(8, 7);
        let a = 1.5;
        let q = q_field(&modes, 7, a);
        for v in 0..modes.vertex_count() {
            for j in 0..7 {
                let member =
                    modes.gradient(v, j).norm_squared() + a * modes.phi[(v, j)] * modes.phi[(v, j)];
                assert!(q[v] >= member - 1e-10, "vertex {v} member {j}");
            }
        }
    }

    #[test]
    fn extremal_coefficients_achieve_maximum() {
        let (_, modes) = torus_modes(8, 6);
        let a = 2.0;
        let k = 6;
        let q = q_field(&modes, k, a);
        let b = extremal_coefficients(&modes, k, a);
        for v in (0..modes.vertex_count()).step_by(7) {
            // evaluate |grad u|^2 + A u^2 at v for u = sum b_j phi_j
            let mut g = Vector3::zeros();
            let mut u = 0.0;
            for j in 0..k {
                g += b[(j, v)] * modes.gradient(v, j);
                u += b[(j, v)] * modes.phi[(v, j)];
            }
            let val = g.norm_squared() + a * u * u;
            assert!(
                (val - q[v]).abs() <= 1e-8 * (1.0 + q[v]),
                "vertex {v}: {val} vs {}",
                q[v]
            );
        }
    }
}
