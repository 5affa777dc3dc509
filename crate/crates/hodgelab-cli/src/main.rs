//! Batch driver: mesh generation, spectrum computation, claim verification
//! and heat-kernel evaluation as subcommands over the toolkit file formats.
//!
//! Exit status contract: 0 = requested claim verified, 1 = computed but
//! failed or insufficient, 2 = usage error.

use clap::{Args, Parser, Subcommand};
use hodgelab::analysis::{
    fit_csv, verify_gradient_lemma, verify_heat_decay, verify_semigroup, verify_sharpness,
    verify_sobolev_forms, verify_sobolev_functions, verify_supnorm, verify_weyl,
    HeatKernelEvaluator,
};
use hodgelab::complex::{generate_flat_torus, generate_icosphere, validate, SimplicialComplex};
use hodgelab::dec::{hodge_laplacian, LaplacePair, StarScheme};
use hodgelab::eigen::{
    kernel_dimension, load_decomposition, save_decomposition, solve_all_dense, solve_lowest,
    DecompositionMeta, KernelStrategy, SolverConfig, SpectralDecomposition,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "hodgelab", version, about = "spectral geometry toolkit driver")]
struct Cli {
    /// worker threads for internal parallelism (falls back to
    /// HODGELAB_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// optional flat key=value config file; flags win over config entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model-manifold mesh and its validation report
    Mesh {
        #[command(subcommand)]
        shape: MeshShape,
    },
    /// Solve the Hodge Laplacian eigenproblem on a mesh
    Spectrum(SpectrumArgs),
    /// Verify a spectral claim against a decomposition
    Verify {
        #[command(subcommand)]
        claim: VerifyClaim,
    },
    /// Evaluate the spectral heat kernel on a time grid
    Heat(HeatArgs),
}

#[derive(Subcommand)]
enum MeshShape {
    /// Flat torus (R/period Z)^dim
    Torus {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        res: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        period: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unit icosphere
    Sphere {
        #[arg(long)]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 0)]
    degree: usize,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// full dense spectrum instead of the iterative solver (dimension cap applies)
    #[arg(long)]
    dense: bool,
    #[arg(long)]
    star: Option<StarScheme>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SpecInput {
    /// decomposition file written by `spectrum`
    #[arg(long)]
    spec: PathBuf,
    /// mesh file; defaults to the one recorded in the decomposition
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// report file prefix; writes PREFIX.json (and PREFIX.csv for fits)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyClaim {
    /// Eigenvalue growth law: slope of lambda_k vs (k - betti)
    Weyl {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long)]
        betti: usize,
        /// inclusive 0-based index range LO:HI over the shifted series
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        slope_tol: f64,
        /// manifold dimension override when the spec file lacks it
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Extremizer growth: full and gradient-free slopes
    Sharpness {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long, default_value_t = 10)]
        cutoff_min: usize,
        #[arg(long)]
        cutoff_max: usize,
        #[arg(long, default_value_t = 1)]
        cutoff_step: usize,
        #[arg(long, default_value_t = 0.15)]
        slope_tol: f64,
    },
    /// Pointwise gradient inequality for combinations of eigenfunctions
    Lemma {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.05)]
        tol_disc: f64,
    },
    /// Sup-norm envelopes of eigenfunctions and gradients
    Supnorm {
        #[command(flatten)]
        input: SpecInput,
    },
    /// Diagonal heat-kernel decay slope
    Heat {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long)]
        t_min: f64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 20)]
        t_count: usize,
        #[arg(long, default_value_t = 0.15)]
        slope_tol: f64,
        #[arg(long)]
        betti: Option<usize>,
    },
    /// Semigroup identity on a full (dense) spectrum
    Semigroup {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Sobolev inequality over randomized trials (needs dimension >= 3)
    Sobolev {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Betti number via the kernel dimension of the decomposition
    Betti {
        #[command(flatten)]
        input: SpecInput,
        #[arg(long)]
        expected: Option<usize>,
    },
}

#[derive(Args)]
struct HeatArgs {
    #[command(flatten)]
    input: SpecInput,
    #[arg(long)]
    t_min: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 20)]
    t_count: usize,
    /// pointwise query indices; prints H(x,y,t) rows when given
    #[arg(long)]
    x: Option<usize>,
    #[arg(long)]
    y: Option<usize>,
    /// fail (exit 1) when the tail bound exceeds this accuracy
    #[arg(long)]
    accuracy: Option<f64>,
    #[arg(long)]
    betti: Option<usize>,
}

/// Flat key=value config file entries.
struct ConfigFile(BTreeMap<String, String>);

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| format!("config line not key=value: `{line}`"))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.0.get(key).and_then(|v| v.parse().ok())
    }
}

#[derive(Serialize)]
struct Timing {
    started_unix_ms: u128,
    duration_ms: u128,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    version: String,
    parameters: BTreeMap<String, String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    timestamp: Timing,
}

#[derive(Serialize)]
struct ReportFile<'a, T: Serialize> {
    manifest: &'a RunManifest,
    report: &'a T,
}

struct Run {
    subcommand: String,
    parameters: BTreeMap<String, String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
    started_unix_ms: u128,
}

impl Run {
    fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    fn manifest(&self) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: self.parameters.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            timestamp: Timing {
                started_unix_ms: self.started_unix_ms,
                duration_ms: self.started.elapsed().as_millis(),
            },
        }
    }
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| format!("write {}: {e}", tmp.display()))?;
    std::fs::rename(&tmp, path).map_err(|e| format!("rename to {}: {e}", path.display()))?;
    Ok(())
}

fn write_report<T: Serialize>(
    run: &mut Run,
    out: Option<&Path>,
    report: &T,
    csv: Option<&str>,
) -> Result<(), String> {
    if let Some(prefix) = out {
        // extensions are appended, never substituted, so dotted prefixes
        // like `t2.validation` stay intact
        let json_path = PathBuf::from(format!("{}.json", prefix.display()));
        let csv_path = PathBuf::from(format!("{}.csv", prefix.display()));
        run.outputs.push(json_path.display().to_string());
        if csv.is_some() {
            run.outputs.push(csv_path.display().to_string());
        }
        let manifest = run.manifest();
        let body = ReportFile {
            manifest: &manifest,
            report,
        };
        let text = serde_json::to_string_pretty(&body).map_err(|e| e.to_string())?;
        write_atomic(&json_path, text.as_bytes())?;
        if let Some(csv) = csv {
            write_atomic(&csv_path, csv.as_bytes())?;
        }
    }
    Ok(())
}

fn usage_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn fail_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_FAIL)
}

fn main() -> ExitCode {
    // die quietly on closed pipes instead of panicking mid-print
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let config = match ConfigFile::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return usage_err(e),
    };
    let threads = cli.threads.or_else(|| config.get("threads")).or_else(|| {
        std::env::var("HODGELAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Mesh { shape } => cmd_mesh(shape),
        Command::Spectrum(args) => cmd_spectrum(args, &config),
        Command::Verify { claim } => cmd_verify(claim, &config),
        Command::Heat(args) => cmd_heat(args),
    }
}

fn cmd_mesh(shape: MeshShape) -> ExitCode {
    let mut run = Run::new("mesh");
    let (complex, out) = match shape {
        MeshShape::Torus {
            dim,
            res,
            period,
            out,
        } => {
            run.param("shape", "torus");
            run.param("dim", dim);
            run.param("res", res);
            run.param("period", period);
            if period <= 0.0 {
                return usage_err("period must be positive");
            }
            match generate_flat_torus(dim, res, period) {
                Ok(c) => (c, out),
                Err(e) => return usage_err(e),
            }
        }
        MeshShape::Sphere { level, out } => {
            run.param("shape", "sphere");
            run.param("level", level);
            match generate_icosphere(level) {
                Ok(c) => (c, out),
                Err(e) => return usage_err(e),
            }
        }
    };
    let report = validate(&complex);
    if let Err(e) = complex.save_json(&out) {
        return fail_err(e);
    }
    run.outputs.push(out.display().to_string());
    let validation_prefix =
        PathBuf::from(format!("{}.validation", out.with_extension("").display()));
    if let Err(e) = write_report(&mut run, Some(&validation_prefix), &report, None) {
        return fail_err(e);
    }
    println!(
        "mesh {} -> {} ({} vertices, chi = {})",
        complex.metadata().name,
        out.display(),
        complex.vertex_count(),
        report.euler_characteristic
    );
    if report.pass {
        println!("validation: pass");
        ExitCode::SUCCESS
    } else {
        println!("validation: FAIL");
        for v in &report.violations {
            println!("  violation: {v}");
        }
        ExitCode::from(EXIT_FAIL)
    }
}

fn load_mesh(path: &Path) -> Result<SimplicialComplex, String> {
    SimplicialComplex::load_json(path).map_err(|e| format!("mesh {}: {e}", path.display()))
}

fn cmd_spectrum(args: SpectrumArgs, config: &ConfigFile) -> ExitCode {
    let mut run = Run::new("spectrum");
    let count = args.count.or_else(|| config.get("count")).unwrap_or(10);
    let tol = args.tol.or_else(|| config.get("tol")).unwrap_or(1e-8);
    let seed = args.seed.or_else(|| config.get("seed")).unwrap_or(0);
    let star = args
        .star
        .or_else(|| config.get("star"))
        .unwrap_or(StarScheme::Barycentric);
    let complex = match load_mesh(&args.mesh) {
        Ok(c) => c,
        Err(e) => return usage_err(e),
    };
    if args.degree > complex.dim() {
        return usage_err(format!(
            "degree {} exceeds manifold dimension {}",
            args.degree,
            complex.dim()
        ));
    }
    run.inputs.push(args.mesh.display().to_string());
    run.param("degree", args.degree);
    run.param("count", count);
    run.param("tol", tol);
    run.param("seed", seed);
    run.param("star", star);
    run.param("dense", args.dense);
    let pair = match hodge_laplacian(&complex, args.degree, star) {
        Ok(p) => p,
        Err(e) => return fail_err(e),
    };
    let decomposition = if args.dense {
        match solve_all_dense(&pair) {
            Ok(d) => d,
            Err(e) => return fail_err(e),
        }
    } else {
        let mut solver = SolverConfig::new(count).with_tol(tol).with_seed(seed);
        if let Some(m) = args.max_iter.or_else(|| config.get("max_iter")) {
            solver.max_iter = m;
        }
        if let Some(b) = args.block.or_else(|| config.get("block")) {
            solver.block_size = b;
        }
        if let Some(s) = args.shift {
            solver.shift = s;
        }
        match solve_lowest(&pair, &solver) {
            Ok(d) => d,
            Err(e) => return fail_err(e),
        }
    };
    let meta = DecompositionMeta {
        mesh_file: Some(args.mesh.display().to_string()),
        manifold_dim: Some(complex.dim()),
        star_scheme: Some(star.to_string()),
    };
    if let Err(e) = save_decomposition(&decomposition, &args.out, Some(meta)) {
        return fail_err(e);
    }
    run.outputs.push(args.out.display().to_string());
    println!("# k lambda residual");
    for (i, (l, r)) in decomposition
        .eigenvalues
        .iter()
        .zip(&decomposition.residuals)
        .enumerate()
    {
        println!("{} {l:.12e} {r:.3e}", i + 1);
    }
    ExitCode::SUCCESS
}

/// Resolve the mesh for a spec input: explicit flag, else the path recorded
/// in the decomposition file (tried as given, then next to the spec file).
fn resolve_inputs(
    input: &SpecInput,
) -> Result<(SpectralDecomposition, DecompositionMeta, SimplicialComplex), String> {
    let (decomposition, meta) = load_decomposition(&input.spec)
        .map_err(|e| format!("spec {}: {e}", input.spec.display()))?;
    let mesh_path = match &input.mesh {
        Some(p) => p.clone(),
        None => {
            let recorded = meta
                .mesh_file
                .clone()
                .ok_or("no --mesh given and the spec file records none")?;
            let candidate = PathBuf::from(&recorded);
            if candidate.exists() {
                candidate
            } else {
                input
                    .spec
                    .parent()
                    .unwrap_or(Path::new("."))
                    .join(candidate.file_name().unwrap_or(candidate.as_os_str()))
            }
        }
    };
    let complex = load_mesh(&mesh_path)?;
    Ok((decomposition, meta, complex))
}

fn star_of(meta: &DecompositionMeta) -> StarScheme {
    meta.star_scheme
        .as_deref()
        .and_then(|s| s.parse().ok())
        .unwrap_or(StarScheme::Barycentric)
}

fn rebuild_pair(
    complex: &SimplicialComplex,
    degree: usize,
    meta: &DecompositionMeta,
) -> Result<LaplacePair, String> {
    hodge_laplacian(complex, degree, star_of(meta)).map_err(|e| e.to_string())
}

fn parse_range(text: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("range must be LO:HI, got `{text}`"))?;
    Ok((
        lo.parse().map_err(|_| "bad range low".to_string())?,
        hi.parse().map_err(|_| "bad range high".to_string())?,
    ))
}

fn log_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![t_min];
    }
    (0..count)
        .map(|i| t_min * (t_max / t_min).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn finish<T: Serialize>(
    run: &mut Run,
    out: Option<&Path>,
    report: &T,
    csv: Option<&str>,
    pass: bool,
    line: String,
) -> ExitCode {
    if let Err(e) = write_report(run, out, report, csv) {
        return fail_err(e);
    }
    println!("{line}");
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn cmd_verify(claim: VerifyClaim, config: &ConfigFile) -> ExitCode {
    match claim {
        VerifyClaim::Weyl {
            input,
            betti,
            range,
            slope_tol,
            dim,
        } => {
            let mut run = Run::new("verify weyl");
            run.inputs.push(input.spec.display().to_string());
            let (decomposition, meta) = match load_decomposition(&input.spec) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            let Some(dim) = dim.or(meta.manifold_dim) else {
                return usage_err("manifold dimension unknown; pass --dim");
            };
            let range = match range.as_deref().map(parse_range).transpose() {
                Ok(r) => r,
                Err(e) => return usage_err(e),
            };
            run.param("betti", betti);
            run.param("dim", dim);
            run.param("slope_tol", slope_tol);
            let report = match verify_weyl(&decomposition, dim, betti, range, slope_tol) {
                Ok(r) => r,
                Err(e) => return fail_err(e),
            };
            let csv = fit_csv(&report.claim, report.expected_slope, &report.fit);
            let line = format!(
                "{}: slope {:.4} (expected {:.4} +- {slope_tol}), c_inv {:.4e} -> {}",
                report.claim,
                report.fit.slope,
                report.expected_slope,
                report.c_inv_empirical,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(
                &mut run,
                input.out.as_deref(),
                &report,
                Some(&csv),
                pass,
                line,
            )
        }
        VerifyClaim::Sharpness {
            input,
            cutoff_min,
            cutoff_max,
            cutoff_step,
            slope_tol,
        } => {
            let mut run = Run::new("verify sharpness");
            run.inputs.push(input.spec.display().to_string());
            let (decomposition, _meta, complex) = match resolve_inputs(&input) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            if cutoff_step == 0 || cutoff_min == 0 || cutoff_max < cutoff_min {
                return usage_err("cutoffs must satisfy 0 < min <= max with step >= 1");
            }
            let cutoffs: Vec<usize> = (cutoff_min..=cutoff_max).step_by(cutoff_step).collect();
            run.param("cutoff_min", cutoff_min);
            run.param("cutoff_max", cutoff_max);
            run.param("cutoff_step", cutoff_step);
            run.param("slope_tol", slope_tol);
            let report = match verify_sharpness(&decomposition, &complex, &cutoffs, slope_tol) {
                Ok(r) => r,
                Err(e) => return fail_err(e),
            };
            let csv = fit_csv(&report.claim, report.expected_full, &report.full_fit);
            let line = format!(
                "{}: full slope {:.4} (expected {:.4}), gradient-free {:.4} (expected {:.4}) -> {}",
                report.claim,
                report.full_fit.slope,
                report.expected_full,
                report.gradient_free_fit.slope,
                report.expected_gradient_free,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(
                &mut run,
                input.out.as_deref(),
                &report,
                Some(&csv),
                pass,
                line,
            )
        }
        VerifyClaim::Lemma {
            input,
            k,
            trials,
            seed,
            tol_disc,
        } => {
            let mut run = Run::new("verify lemma");
            run.inputs.push(input.spec.display().to_string());
            let trials = trials.or_else(|| config.get("trials")).unwrap_or(100);
            let seed = seed.or_else(|| config.get("seed")).unwrap_or(0);
            let (decomposition, _meta, complex) = match resolve_inputs(&input) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            run.param("k", k);
            run.param("trials", trials);
            run.param("seed", seed);
            run.param("tol_disc", tol_disc);
            let report =
                match verify_gradient_lemma(&decomposition, &complex, k, trials, seed, tol_disc) {
                    Ok(r) => r,
                    Err(e) => return fail_err(e),
                };
            let line = format!(
                "{}: max rho {:.6} (random {:.6}, extremal {:.6}), budget 1+{} -> {}",
                report.claim,
                report.max_rho,
                report.max_rho_random,
                report.max_rho_extremal,
                tol_disc,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(&mut run, input.out.as_deref(), &report, None, pass, line)
        }
        VerifyClaim::Supnorm { input } => {
            let mut run = Run::new("verify supnorm");
            run.inputs.push(input.spec.display().to_string());
            let (decomposition, _meta, complex) = match resolve_inputs(&input) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            let report = match verify_supnorm(&decomposition, &complex) {
                Ok(r) => r,
                Err(e) => return fail_err(e),
            };
            let csv = fit_csv(&report.claim, report.value_bound, &report.value_fit);
            let line = format!(
                "{}: |phi| slope {:.4} <= {:.4}, |grad phi| slope {:.4} <= {:.4} -> {}",
                report.claim,
                report.value_fit.slope,
                report.value_bound,
                report.gradient_fit.slope,
                report.gradient_bound,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(
                &mut run,
                input.out.as_deref(),
                &report,
                Some(&csv),
                pass,
                line,
            )
        }
        VerifyClaim::Heat {
            input,
            t_min,
            t_max,
            t_count,
            slope_tol,
            betti,
        } => {
            let mut run = Run::new("verify heat");
            run.inputs.push(input.spec.display().to_string());
            if t_min <= 0.0 || t_max < t_min || t_count < 8 {
                return usage_err("need 0 < t_min <= t_max and at least 8 grid points");
            }
            let (decomposition, _meta, complex) = match resolve_inputs(&input) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            let betti = match betti {
                Some(b) => b,
                None => match kernel_dimension(&decomposition, KernelStrategy::Gap) {
                    Ok(b) => b,
                    Err(e) => return fail_err(e),
                },
            };
            run.param("t_min", t_min);
            run.param("t_max", t_max);
            run.param("t_count", t_count);
            run.param("betti", betti);
            run.param("slope_tol", slope_tol);
            let evaluator = match HeatKernelEvaluator::new(&decomposition, &complex, betti) {
                Ok(e) => e,
                Err(e) => return fail_err(e),
            };
            let ts = log_grid(t_min, t_max, t_count);
            let report = match verify_heat_decay(&evaluator, &ts, slope_tol) {
                Ok(r) => r,
                Err(e) => return fail_err(e),
            };
            let csv = fit_csv(&report.claim, report.expected_slope, &report.fit);
            let line = format!(
                "{}: slope {:.4} (expected {:.4} +- {slope_tol}), worst tail fraction {:.3e} -> {}",
                report.claim,
                report.fit.slope,
                report.expected_slope,
                report.max_tail_fraction,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(
                &mut run,
                input.out.as_deref(),
                &report,
                Some(&csv),
                pass,
                line,
            )
        }
        VerifyClaim::Semigroup { input, t, s, tol } => {
            let mut run = Run::new("verify semigroup");
            run.inputs.push(input.spec.display().to_string());
            if t < 0.0 || s < 0.0 {
                return usage_err("times must be nonnegative");
            }
            let (decomposition, meta, complex) = match resolve_inputs(&input) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            let pair = match rebuild_pair(&complex, decomposition.degree, &meta) {
                Ok(p) => p,
                Err(e) => return fail_err(e),
            };
            run.param("t", t);
            run.param("s", s);
            run.param("tol", tol);
            let report = match verify_semigroup(&decomposition, &pair, t, s, tol) {
                Ok(r) => r,
                Err(e) => return fail_err(e),
            };
            let line = format!(
                "{}: max |H(t+s) - H(t) M H(s)| = {:.3e} (tol {:.1e}) -> {}",
                report.claim,
                report.max_error,
                tol,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(&mut run, input.out.as_deref(), &report, None, pass, line)
        }
        VerifyClaim::Sobolev {
            input,
            trials,
            seed,
        } => {
            let mut run = Run::new("verify sobolev");
            run.inputs.push(input.spec.display().to_string());
            let trials = trials.or_else(|| config.get("trials")).unwrap_or(1000);
            let seed = seed.or_else(|| config.get("seed")).unwrap_or(0);
            let (decomposition, meta, complex) = match resolve_inputs(&input) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            let pair = match rebuild_pair(&complex, decomposition.degree, &meta) {
                Ok(p) => p,
                Err(e) => return fail_err(e),
            };
            run.param("trials", trials);
            run.param("seed", seed);
            run.param("degree", decomposition.degree);
            let result = match decomposition.degree {
                0 => verify_sobolev_functions(&complex, &pair, &decomposition, trials, seed),
                1 => verify_sobolev_forms(&complex, &pair, &decomposition, trials, seed),
                d => return usage_err(format!("sobolev check supports degrees 0 and 1, got {d}")),
            };
            let report = match result {
                Ok(r) => r,
                Err(e) => return fail_err(e),
            };
            let line = format!(
                "{}: C_s = {:.6e} over {} trials (exponent {}) -> {}",
                report.claim,
                report.c_s,
                report.trials_used,
                report.exponent,
                if report.pass { "pass" } else { "FAIL" }
            );
            let pass = report.pass;
            finish(&mut run, input.out.as_deref(), &report, None, pass, line)
        }
        VerifyClaim::Betti { input, expected } => {
            let mut run = Run::new("verify betti");
            run.inputs.push(input.spec.display().to_string());
            let (decomposition, _meta) = match load_decomposition(&input.spec) {
                Ok(x) => x,
                Err(e) => return usage_err(e),
            };
            let betti = match kernel_dimension(&decomposition, KernelStrategy::Gap) {
                Ok(b) => b,
                Err(e) => return fail_err(e),
            };
            run.param("degree", decomposition.degree);
            if let Some(e) = expected {
                run.param("expected", e);
            }
            #[derive(Serialize)]
            struct BettiReport {
                claim: String,
                degree: usize,
                betti: usize,
                expected: Option<usize>,
                pass: bool,
            }
            let pass = expected.is_none_or(|e| e == betti);
            let report = BettiReport {
                claim: "betti-harmonic".into(),
                degree: decomposition.degree,
                betti,
                expected,
                pass,
            };
            let line = format!("{betti}");
            finish(&mut run, input.out.as_deref(), &report, None, pass, line)
        }
    }
}

fn cmd_heat(args: HeatArgs) -> ExitCode {
    let mut run = Run::new("heat");
    run.inputs.push(args.input.spec.display().to_string());
    if args.t_min <= 0.0 || args.t_max < args.t_min || args.t_count == 0 {
        return usage_err("need 0 < t_min <= t_max and a nonempty grid (t must be positive)");
    }
    let (decomposition, _meta, complex) = match resolve_inputs(&args.input) {
        Ok(x) => x,
        Err(e) => return usage_err(e),
    };
    let betti = match args.betti {
        Some(b) => b,
        None => match kernel_dimension(&decomposition, KernelStrategy::Gap) {
            Ok(b) => b,
            Err(e) => return fail_err(e),
        },
    };
    run.param("t_min", args.t_min);
    run.param("t_max", args.t_max);
    run.param("t_count", args.t_count);
    run.param("betti", betti);
    let evaluator = match HeatKernelEvaluator::new(&decomposition, &complex, betti) {
        Ok(e) => e,
        Err(e) => return fail_err(e),
    };
    let ts = log_grid(args.t_min, args.t_max, args.t_count);
    let mut csv = String::from("t,max_diag_deviation,tail_bound\n");
    let mut worst_tail = 0.0f64;
    for &t in &ts {
        let dev = match evaluator.diag_deviation_sup(t) {
            Ok(d) => d,
            Err(e) => return fail_err(e),
        };
        let tail = evaluator.tail_bound(t);
        worst_tail = worst_tail.max(tail);
        csv.push_str(&format!("{t},{dev},{tail}\n"));
    }
    if let (Some(x), Some(y)) = (args.x, args.y) {
        if x >= decomposition.dim() || y >= decomposition.dim() {
            return usage_err("pointwise indices out of range");
        }
        println!("# t H(x,y,t)");
        for &t in &ts {
            match evaluator.kernel_checked(x, y, t, args.accuracy.unwrap_or(f64::INFINITY)) {
                Ok(h) => println!("{t} {h:.12e}"),
                Err(e) => return fail_err(e),
            }
        }
    }
    if let Some(out) = args.input.out.as_deref() {
        run.outputs.push(out.display().to_string());
        if let Err(e) = write_atomic(out, csv.as_bytes()) {
            return fail_err(e);
        }
    } else {
        print!("{csv}");
    }
    if let Some(accuracy) = args.accuracy {
        if worst_tail > accuracy {
            eprintln!(
                "error: tail bound {worst_tail:e} exceeds requested accuracy {accuracy:e}; request more eigenpairs or larger t"
            );
            return ExitCode::from(EXIT_FAIL);
        }
    }
    ExitCode::SUCCESS
}
