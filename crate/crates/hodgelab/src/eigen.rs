//! Sparse symmetric generalized eigensolver for the lowest part of the
//! spectrum of `K x = lambda M x`, with a dense fallback oracle and kernel
//! dimension (Betti number) extraction.
//!
//! The iterative path is a blocked, M-inner-product preconditioned subspace
//! iteration (LOBPCG) with hard deflation of converged pairs; the
//! preconditioner runs a few diagonally preconditioned CG steps on the
//! shifted system `K - shift M`.

use crate::dec::LaplacePair;
use crate::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("requested {count} pairs but the operator has dimension {dim}")]
    CountTooLarge { count: usize, dim: usize },
    #[error("tolerance {0:e} outside (0, 1e-4]")]
    BadTolerance(f64),
    #[error("mass entry {0} is not strictly positive")]
    MassNotPositive(usize),
    #[error("dense path capped at dimension {cap}, got {dim}")]
    DenseDimensionCap { dim: usize, cap: usize },
    #[error("stiffness appears indefinite: eigenvalue {0:e}")]
    Indefinite(f64),
    #[error(
        "no convergence after {iterations} iterations; worst relative residual {worst_residual:e}"
    )]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
        partial: Box<SpectralDecomposition>,
    },
    #[error("kernel gap undecidable: best ratio {ratio:e} < 1e3; request more eigenpairs or a tighter tolerance")]
    NoKernelGap { ratio: f64 },
    #[error("kernel detection needs at least {needed} pairs, decomposition has {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("full spectrum required, decomposition has {got} of {dim} pairs")]
    PartialSpectrum { got: usize, dim: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("decomposition file malformed: {0}")]
    Malformed(String),
}

/// Eigensolver knobs. All randomness flows from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// number of requested eigenpairs, smallest first
    pub count: usize,
    /// relative residual target per pair
    pub tol: f64,
    /// iteration cap per deflation sweep
    pub max_iter: usize,
    /// working block size; 0 picks a default
    pub block_size: usize,
    /// spectral shift of the preconditioner system `K - shift M`;
    /// 0 picks a small negative fraction of the spectral scale
    pub shift: f64,
    /// RNG seed for the starting block
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            tol: 1e-8,
            max_iter: 600,
            block_size: 0,
            shift: 0.0,
            seed: 0,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Sorted eigenvalues with M-orthonormal eigencochains for one form degree.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub degree: usize,
    /// ascending, clamped to be nonnegative
    pub eigenvalues: Vec<f64>,
    /// dim x count, column i pairs with eigenvalues[i]
    pub eigencochains: DMatrix<f64>,
    /// per-pair residuals `|K x - lambda M x|_{M^-1} / |x|_M`
    pub residuals: Vec<f64>,
    pub config: SolverConfig,
}

impl SpectralDecomposition {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.eigencochains.nrows()
    }

    pub fn eigencochain(&self, i: usize) -> DVector<f64> {
        self.eigencochains.column(i).clone_owned()
    }
}

fn scale_rows_dm(x: &DMatrix<f64>, m: &[f64]) -> DMatrix<f64> {
    let mut y = x.clone_owned();
    let n = y.nrows();
    for j in 0..y.ncols() {
        let col = &mut y.as_mut_slice()[j * n..(j + 1) * n];
        for (v, w) in col.iter_mut().zip(m) {
            *v *= w;
        }
    }
    y
}

/// M-orthogonal projection of x's columns against an M-orthonormal basis.
fn project_out(x: &mut DMatrix<f64>, basis: &DMatrix<f64>, m: &[f64]) {
    if basis.ncols() == 0 || x.ncols() == 0 {
        return;
    }
    let mx = scale_rows_dm(x, m);
    let coeff = basis.transpose() * mx;
    x.gemm(-1.0, basis, &coeff, 1.0);
}

/// Symmetric eigendecomposition with ascending eigenvalues.
fn sym_eig_ascending(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let sym = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sym.eigenvalues[i].partial_cmp(&sym.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &sym.eigenvectors.column(src));
    }
    (values, vectors)
}

/// M-orthonormalize by whitening; drops directions with Gram eigenvalue
/// below `drop_tol` relative to the largest. Columns are normalized first
/// so the drop criterion measures angles, not magnitudes. Two passes.
fn whiten(x: DMatrix<f64>, m: &[f64], drop_tol: f64) -> DMatrix<f64> {
    let mut cur = x;
    let nrows = cur.nrows();
    let mut kept_cols: Vec<usize> = Vec::new();
    for j in 0..cur.ncols() {
        let norm2: f64 = cur.as_slice()[j * nrows..(j + 1) * nrows]
            .iter()
            .zip(m)
            .map(|(v, w)| v * v * w)
            .sum();
        if norm2 > 1e-280 {
            kept_cols.push(j);
        }
    }
    if kept_cols.len() < cur.ncols() {
        let mut packed = DMatrix::zeros(nrows, kept_cols.len());
        for (dst, &src) in kept_cols.iter().enumerate() {
            packed.set_column(dst, &cur.column(src));
        }
        cur = packed;
    }
    for j in 0..cur.ncols() {
        let col = &mut cur.as_mut_slice()[j * nrows..(j + 1) * nrows];
        let norm2: f64 = col.iter().zip(m).map(|(v, w)| v * v * w).sum();
        let inv = 1.0 / norm2.sqrt();
        for v in col {
            *v *= inv;
        }
    }
    for _ in 0..2 {
        if cur.ncols() == 0 {
            return cur;
        }
        let g = cur.transpose() * scale_rows_dm(&cur, m);
        let g = (&g + g.transpose()) * 0.5;
        let (vals, vecs) = sym_eig_ascending(g);
        let max = vals.last().copied().unwrap_or(0.0).max(0.0);
        if max <= 0.0 {
            return DMatrix::zeros(cur.nrows(), 0);
        }
        let keep: Vec<usize> = (0..vals.len())
            .filter(|&i| vals[i] > drop_tol * max)
            .collect();
        let mut t = DMatrix::zeros(cur.ncols(), keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            let s = 1.0 / vals[src].sqrt();
            t.set_column(dst, &(vecs.column(src) * s));
        }
        cur = &cur * t;
    }
    cur
}

fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, total);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (n, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Gershgorin upper bound for the pencil (K, M); the residual scale.
fn spectral_scale(k: &CsrMatrix, m: &[f64]) -> f64 {
    let mut bound = 0.0f64;
    for i in 0..k.rows() {
        let (_, vals) = k.row(i);
        let s: f64 = vals.iter().map(|v| v.abs()).sum();
        bound = bound.max(s / m[i]);
    }
    bound.max(f64::MIN_POSITIVE)
}

/// Fixed-step diagonally preconditioned CG on `A z = r`, applied per column.
fn cg_block(a: &CsrMatrix, diag: &[f64], r: &DMatrix<f64>, steps: usize) -> DMatrix<f64> {
    let n = a.rows();
    let mut z = DMatrix::zeros(n, r.ncols());
    let rs = r.as_slice();
    z.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, zcol)| {
            let rcol = &rs[j * n..(j + 1) * n];
            let mut x = DVector::zeros(n);
            let mut res = DVector::from_column_slice(rcol);
            let mut p = DVector::from_fn(n, |i, _| res[i] / diag[i]);
            let mut zv = p.clone();
            let mut rz = res.dot(&zv);
            for _ in 0..steps {
                if rz.abs() < 1e-300 {
                    break;
                }
                let ap = a.mul_vec(&p);
                let pap = p.dot(&ap);
                if pap <= 0.0 {
                    break;
                }
                let alpha = rz / pap;
                x.axpy(alpha, &p, 1.0);
                res.axpy(-alpha, &ap, 1.0);
                for i in 0..n {
                    zv[i] = res[i] / diag[i];
                }
                let rz_new = res.dot(&zv);
                let beta = rz_new / rz;
                rz = rz_new;
                p = &zv + &p * beta;
            }
            zcol.copy_from_slice(x.as_slice());
        });
    z
}

struct SweepOutcome {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

#[allow(clippy::too_many_arguments)]
fn lobpcg_sweep(
    k: &CsrMatrix,
    m: &[f64],
    locked: &DMatrix<f64>,
    block: usize,
    want: usize,
    tol: f64,
    max_iter: usize,
    precond: &dyn Fn(&DMatrix<f64>) -> DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<SweepOutcome, (usize, f64, SweepOutcome)> {
    let n = k.rows();
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    project_out(&mut x, locked, m);
    x = whiten(x, m, 1e-12);
    let mut enrich = DMatrix::<f64>::zeros(n, 0);

    let mut last: Option<SweepOutcome> = None;
    let mut worst = f64::INFINITY;
    for iter in 0..max_iter {
        let s_raw = if enrich.ncols() == 0 {
            x.clone()
        } else {
            hstack(&[&x, &enrich])
        };
        // Rayleigh-Ritz with the measured Gram, whitened every iteration so
        // basis drift cannot accumulate
        let ks_raw = k.mul_dense(&s_raw);
        let b = {
            let b = s_raw.transpose() * &ks_raw;
            (&b + b.transpose()) * 0.5
        };
        let g = {
            let g = s_raw.transpose() * scale_rows_dm(&s_raw, m);
            (&g + g.transpose()) * 0.5
        };
        let (gvals, gvecs) = sym_eig_ascending(g);
        let gmax = gvals.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let keep: Vec<usize> = (0..gvals.len())
            .filter(|&i| gvals[i] > 1e-13 * gmax)
            .collect();
        let mut t = DMatrix::zeros(s_raw.ncols(), keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            t.set_column(dst, &(gvecs.column(src) / gvals[src].sqrt()));
        }
        let a = {
            let a = t.transpose() * &b * &t;
            (&a + a.transpose()) * 0.5
        };
        let (theta_all, z) = sym_eig_ascending(a);
        let bs = block.min(theta_all.len());
        let coeff = &t * z.columns(0, bs);
        let x_new = &s_raw * &coeff;
        let kx_new = &ks_raw * &coeff;
        let theta = &theta_all[..bs];

        // residuals in the M^{-1} norm; columns are M-orthonormal so this
        // is the spec's |K x - theta M x|_{M^-1} / |x|_M, in eigenvalue units
        let mx = scale_rows_dm(&x_new, m);
        let mut rel = Vec::with_capacity(bs);
        let mut resid = kx_new.clone();
        for j in 0..bs {
            let mut col = resid.column_mut(j);
            col.axpy(-theta[j], &mx.column(j), 1.0);
            let norm2: f64 = col.iter().zip(m).map(|(r, w)| r * r / w).sum();
            rel.push(norm2.sqrt());
        }
        let want_now = want.min(bs);
        worst = rel[..want_now].iter().cloned().fold(0.0, f64::max);
        if std::env::var_os("HODGELAB_TRACE_SOLVER").is_some() {
            eprintln!(
                "iter {iter}: worst {worst:.3e} theta[0] {:.6e} theta[{}] {:.6e} basis {}",
                theta[0],
                want_now - 1,
                theta[want_now - 1],
                s_raw.ncols()
            );
        }
        let outcome = SweepOutcome {
            values: theta[..want_now].to_vec(),
            vectors: x_new.columns(0, want_now).clone_owned(),
        };
        if worst <= tol {
            return Ok(outcome);
        }
        last = Some(outcome);
        if iter + 1 == max_iter {
            break;
        }

        // next search directions: preconditioned unconverged residuals
        // plus the enrichment components of the current Ritz step
        let unconverged: Vec<usize> = (0..bs).filter(|&j| rel[j] > 0.2 * tol).collect();
        let mut rsel = DMatrix::zeros(n, unconverged.len());
        for (dst, &src) in unconverged.iter().enumerate() {
            rsel.set_column(dst, &resid.column(src));
        }
        let w = precond(&rsel);
        let mut cp = coeff.clone();
        cp.rows_mut(0, x.ncols().min(cp.nrows())).fill(0.0);
        let p_raw = &s_raw * cp;
        let mut e = hstack(&[&w, &p_raw]);
        project_out(&mut e, locked, m);
        x = x_new;
        project_out(&mut e, &x, m);
        e = whiten(e, m, 1e-10);
        enrich = e;
    }
    let outcome = last.expect("at least one iteration ran");
    Err((max_iter, worst, outcome))
}

/// Lowest `config.count` eigenpairs of the pencil `(K, M)`, M-orthonormal,
/// deterministic for a fixed config (including seed).
pub fn solve_lowest(
    pair: &LaplacePair,
    config: &SolverConfig,
) -> Result<SpectralDecomposition, EigenError> {
    let n = pair.dim();
    let k = &pair.stiffness;
    let m = &pair.mass;
    if config.count == 0 || config.count >= n {
        return Err(EigenError::CountTooLarge {
            count: config.count,
            dim: n,
        });
    }
    if !(config.tol > 0.0 && config.tol <= 1e-4) {
        return Err(EigenError::BadTolerance(config.tol));
    }
    if let Some(bad) = m.iter().position(|&v| v <= 0.0) {
        return Err(EigenError::MassNotPositive(bad));
    }

    let scale = spectral_scale(k, m);
    // The shift multiplies M, so it is an eigenvalue-unit quantity. Placing
    // it a few percent up the spectrum keeps the inner system definite near
    // the kernel and easy for the diagonally preconditioned CG.
    let shift = if config.shift != 0.0 {
        config.shift
    } else {
        -0.003 * scale
    };
    let shifted = {
        let neg = CsrMatrix::from_diagonal(&m.iter().map(|&v| -shift * v).collect::<Vec<_>>());
        k.add(&neg)
    };
    let inner_diag: Vec<f64> = shifted
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { d } else { 1.0 })
        .collect();
    let precond = move |r: &DMatrix<f64>| cg_block(&shifted, &inner_diag, r, 14);

    // guard columns shield the wanted range from multiplets that straddle
    // the block boundary (spherical levels are up to ~2 sqrt(count) wide)
    let guard = 16usize;
    let block_default = (config.count + guard).clamp(12, 72);
    let block_cfg = if config.block_size == 0 {
        block_default
    } else {
        config.block_size.max(4)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked = DMatrix::<f64>::zeros(n, 0);
    while locked_vals.len() < config.count {
        let remaining = config.count - locked_vals.len();
        let mut block = block_cfg.min(n - locked.ncols());
        if block == 0 {
            break;
        }
        let want = remaining.min(block.saturating_sub(guard).max(1)).min(block);
        if block > remaining + guard {
            block = remaining + guard;
        }
        // converge sweeps below the target so the final joint polish stays
        // within the requested tolerance
        match lobpcg_sweep(
            k,
            m,
            &locked,
            block,
            want,
            0.4 * config.tol,
            config.max_iter,
            &precond,
            &mut rng,
        ) {
            Ok(out) => {
                locked_vals.extend_from_slice(&out.values);
                locked = hstack(&[&locked, &out.vectors]);
            }
            Err((iterations, worst_residual, out)) => {
                let all = hstack(&[&locked, &out.vectors]);
                let partial = finalize(pair, all, config)?;
                return Err(EigenError::NonConvergence {
                    iterations,
                    worst_residual,
                    partial: Box::new(partial),
                });
            }
        }
    }

    let mut decomp = finalize(pair, locked, config)?;
    decomp.eigenvalues.truncate(config.count);
    decomp.residuals.truncate(config.count);
    decomp.eigencochains = decomp.eigencochains.columns(0, config.count).clone_owned();
    Ok(decomp)
}

/// Joint Rayleigh-Ritz polish over a converged basis: restores exact
/// M-orthonormality, sorts ascending, recomputes residuals.
fn finalize(
    pair: &LaplacePair,
    basis: DMatrix<f64>,
    config: &SolverConfig,
) -> Result<SpectralDecomposition, EigenError> {
    let k = &pair.stiffness;
    let m = &pair.mass;
    let b = whiten(basis, m, 1e-13);
    let kb = k.mul_dense(&b);
    let a = b.transpose() * &kb;
    let a = (&a + a.transpose()) * 0.5;
    let (vals, z) = sym_eig_ascending(a);
    let vectors = &b * &z;
    let kx = &kb * &z;
    let mx = scale_rows_dm(&vectors, m);
    let mut eigenvalues = Vec::with_capacity(vals.len());
    let mut residuals = Vec::with_capacity(vals.len());
    let scale = spectral_scale(k, m);
    for (j, &v) in vals.iter().enumerate() {
        if v < -1e-8 * scale {
            return Err(EigenError::Indefinite(v));
        }
        eigenvalues.push(v.max(0.0));
        let mut r = kx.column(j).clone_owned();
        r.axpy(-v, &mx.column(j).clone_owned(), 1.0);
        let norm2: f64 = r.iter().zip(m).map(|(x, w)| x * x / w).sum();
        residuals.push(norm2.sqrt());
    }
    Ok(SpectralDecomposition {
        degree: pair.degree,
        eigenvalues,
        eigencochains: vectors,
        residuals,
        config: config.clone(),
    })
}

const DENSE_DIM_CAP: usize = 2000;

/// Full spectrum via dense symmetric reduction by `M^{-1/2}`; the oracle
/// for the iterative path on small systems.
pub fn solve_all_dense(pair: &LaplacePair) -> Result<SpectralDecomposition, EigenError> {
    let n = pair.dim();
    if n > DENSE_DIM_CAP {
        return Err(EigenError::DenseDimensionCap {
            dim: n,
            cap: DENSE_DIM_CAP,
        });
    }
    if let Some(bad) = pair.mass.iter().position(|&v| v <= 0.0) {
        return Err(EigenError::MassNotPositive(bad));
    }
    let inv_sqrt: Vec<f64> = pair.mass.iter().map(|&v| 1.0 / v.sqrt()).collect();
    let mut dense = pair.stiffness.to_dense();
    for i in 0..n {
        for j in 0..n {
            dense[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let dense = (&dense + dense.transpose()) * 0.5;
    let (vals, z) = sym_eig_ascending(dense);
    let mut vectors = z;
    for j in 0..n {
        let mut col = vectors.column_mut(j);
        for i in 0..n {
            col[i] *= inv_sqrt[i];
        }
    }
    let scale = spectral_scale(&pair.stiffness, &pair.mass);
    let kx = pair.stiffness.mul_dense(&vectors);
    let mx = scale_rows_dm(&vectors, &pair.mass);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (j, &v) in vals.iter().enumerate() {
        if v < -1e-8 * scale {
            return Err(EigenError::Indefinite(v));
        }
        eigenvalues.push(v.max(0.0));
        let mut r = kx.column(j).clone_owned();
        r.axpy(-v, &mx.column(j).clone_owned(), 1.0);
        let norm2: f64 = r.iter().zip(&pair.mass).map(|(x, w)| x * x / w).sum();
        residuals.push(norm2.sqrt());
    }
    let mut config = SolverConfig::new(n);
    let worst = residuals.iter().cloned().fold(0.0f64, f64::max);
    config.tol = (2.0 * worst).clamp(1e-10, 1e-4);
    Ok(SpectralDecomposition {
        degree: pair.degree,
        eigenvalues,
        eigencochains: vectors,
        residuals,
        config,
    })
}

/// How to split the spectrum into zero and nonzero modes.
#[derive(Clone, Copy, Debug)]
pub enum KernelStrategy {
    /// largest relative gap among eigenvalues below `1e-3 lambda_max`
    Gap,
    /// everything below the threshold counts as zero
    Absolute(f64),
}

/// Number of eigenvalues classified as zero; equals the Betti number of the
/// decomposition's degree when enough pairs were computed.
pub fn kernel_dimension(
    decomposition: &SpectralDecomposition,
    strategy: KernelStrategy,
) -> Result<usize, EigenError> {
    let vals = &decomposition.eigenvalues;
    match strategy {
        KernelStrategy::Absolute(threshold) => Ok(vals.iter().filter(|&&v| v < threshold).count()),
        KernelStrategy::Gap => {
            let count = vals.len();
            let lam_max = vals.last().copied().unwrap_or(0.0);
            if lam_max <= 0.0 {
                return Err(EigenError::NoKernelGap { ratio: 0.0 });
            }
            let candidates = vals.iter().filter(|&&v| v < 1e-3 * lam_max).count();
            if candidates == 0 {
                return Ok(0);
            }
            let floor = lam_max * 1e-16;
            let mut best_ratio = 0.0;
            let mut best = 0usize;
            for j in 1..=candidates {
                let ratio = vals[j] / vals[j - 1].max(floor);
                if ratio > best_ratio {
                    best_ratio = ratio;
                    best = j;
                }
            }
            if best_ratio < 1e3 {
                return Err(EigenError::NoKernelGap { ratio: best_ratio });
            }
            if count < best + 3 {
                return Err(EigenError::TooFewPairs {
                    needed: best + 3,
                    got: count,
                });
            }
            Ok(best)
        }
    }
}

/// Provenance recorded alongside a decomposition so downstream commands can
/// rebuild the operators it came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMeta {
    pub mesh_file: Option<String>,
    pub manifold_dim: Option<usize>,
    pub star_scheme: Option<String>,
}

/// JSON header of a decomposition file; eigencochains live in a sibling
/// binary file as little-endian f64, column-major, dim x count.
#[derive(Serialize, Deserialize)]
struct DecompositionHeader {
    degree: usize,
    dim: usize,
    count: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    config: SolverConfig,
    vectors_file: String,
    #[serde(default)]
    meta: DecompositionMeta,
}

pub fn save_decomposition(
    decomposition: &SpectralDecomposition,
    json_path: &Path,
    meta: Option<DecompositionMeta>,
) -> Result<(), EigenError> {
    let stem = json_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("decomposition");
    let vectors_file = format!("{stem}.vecs");
    let header = DecompositionHeader {
        degree: decomposition.degree,
        dim: decomposition.dim(),
        count: decomposition.count(),
        eigenvalues: decomposition.eigenvalues.clone(),
        residuals: decomposition.residuals.clone(),
        config: decomposition.config.clone(),
        vectors_file: vectors_file.clone(),
        meta: meta.unwrap_or_default(),
    };
    std::fs::write(json_path, serde_json::to_string_pretty(&header)?)?;
    let bin_path = json_path.with_file_name(vectors_file);
    let mut out = std::io::BufWriter::new(std::fs::File::create(bin_path)?);
    for v in decomposition.eigencochains.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_decomposition(
    json_path: &Path,
) -> Result<(SpectralDecomposition, DecompositionMeta), EigenError> {
    let header: DecompositionHeader = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    let bin_path = json_path.with_file_name(&header.vectors_file);
    let mut bytes = Vec::new();
    std::fs::File::open(bin_path)?.read_to_end(&mut bytes)?;
    let expected = header.dim * header.count * 8;
    if bytes.len() != expected {
        return Err(EigenError::Malformed(format!(
            "vectors file has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((
        SpectralDecomposition {
            degree: header.degree,
            eigenvalues: header.eigenvalues,
            eigencochains: DMatrix::from_column_slice(header.dim, header.count, &values),
            residuals: header.residuals,
            config: header.config,
        },
        header.meta,
    ))
}
