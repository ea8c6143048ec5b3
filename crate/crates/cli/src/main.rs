//! `eqtorus`: command-line access to the τ-solver, functional values,
//! eigenvalue counts, scans, minimal tori, stability diagnostics and meshes.
//!
//! Exit codes: 0 success, 2 rejected input (infeasible parameters, bad flags
//! or config), 1 numerical or I/O failure.

mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eqtorus::functional::{functional_value_with, moduli_scan_with, scan_monotonicity, write_scan_csv};
use eqtorus::map_builder::{build_profiles, mesh, write_mesh_jsonl, ProfileSet};
use eqtorus::otsuki::{conformality_residual, solve_otsuki};
use eqtorus::spectral::{assemble_n2_with, construct_strict_instance};
use eqtorus::stability::{
    hersch_second_variation, index_nullity_estimate, jacobi_block, special_phi0_kernel, FrameField, GalerkinCount,
};
use eqtorus::tau_solver::solve_tau_with;
use eqtorus::{Error, Execution, MapParams, ModuliPoint, TauTriple};
use num_complex::Complex64;
use serde_json::{json, Value};

use config::{ConfigError, Format, RunConfig, TOL_OVERRIDE_VAR};
use report::{document, num, nums};

#[derive(Parser, Debug)]
#[command(name = "eqtorus", version, about = "S¹-equivariant harmonic tori in S³ and their induced metrics")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans (1 runs sequentially).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// key=value file with tolerances, scan grid and format.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Lattice `Z(1,0) + Z(a,b)` and integers `(p, q, r)`.
#[derive(Args, Debug, Clone)]
struct MapArgs {
    /// Shear, rational (`1/4`) or decimal (`0.25`).
    #[arg(long, allow_hyphen_values = true)]
    a: String,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    p: u32,
    #[arg(long)]
    q: u32,
    #[arg(long, allow_hyphen_values = true)]
    r: i32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for (τ₁, τ₂, τ₃) and report the period residuals.
    SolveTau(MapArgs),
    /// Normalized eigenvalue of the induced metric against 4π²/b and 8π.
    Value {
        #[command(flatten)]
        map: MapArgs,
        /// Also count eigenvalues below 2.
        #[arg(long)]
        n2: bool,
    },
    /// Eigenvalue counts below 2 per Fourier mode.
    Spectral {
        #[arg(long, allow_hyphen_values = true, required_unless_present = "strict_instance")]
        a: Option<String>,
        #[arg(long, required_unless_present = "strict_instance")]
        b: Option<f64>,
        #[arg(long, required_unless_present = "strict_instance")]
        p: Option<u32>,
        #[arg(long, required_unless_present = "strict_instance")]
        q: Option<u32>,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "strict_instance")]
        r: Option<i32>,
        /// Construct parameters whose count exceeds the lower bound instead.
        #[arg(long, conflicts_with_all = ["a", "b", "p", "q", "r"])]
        strict_instance: bool,
    },
    /// Evaluate a grid of moduli for fixed (p, q, r).
    Scan {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, allow_hyphen_values = true)]
        r: i32,
        /// a_min,a_max,a_steps,b_min,b_max,b_steps
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        n2: bool,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Minimal torus with Ω(m) = πp̃/q̃.
    Otsuki {
        #[arg(long)]
        pt: u32,
        #[arg(long)]
        qt: u32,
        /// Covering number.
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        rt: i32,
        /// Also write a JSON-lines mesh here.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long, default_value_t = 64)]
        ny: usize,
    },
    /// Jacobi operator diagnostics.
    Stability {
        #[command(subcommand)]
        command: StabilityCommand,
    },
    /// Sample the map on a grid and write JSON lines.
    Mesh {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long, default_value_t = 64)]
        ny: usize,
    },
}

#[derive(Subcommand, Debug)]
enum StabilityCommand {
    /// Kernel of the blocks J^{±q,0} at the special φ₀ of a circle-family map.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// Defaults to the circle family, b = √(p² - (r + a)²).
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, allow_hyphen_values = true)]
        r: i32,
    },
    /// One block J^{k,l} of a circle-family map.
    Block {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p: u32,
        #[arg(long, allow_hyphen_values = true)]
        r: i32,
        #[arg(long)]
        phi0: f64,
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
        #[arg(long, allow_hyphen_values = true)]
        l: i64,
    },
    /// Second variation in the Hersch direction on the rhombic class.
    Hersch {
        #[arg(long, default_value_t = 1.0)]
        b0: f64,
    },
    /// Galerkin estimate of the energy index and nullity of u^{1,1,0}.
    Index {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        b: f64,
    },
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) | Error::Domain(_) | Error::Parse(_) => 2,
            Error::NoConvergence(_) | Error::NotBracketed { .. } => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, message: format!("i/o error: {e}") }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::input(format!("config: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    config: RunConfig,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

impl Ctx {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn emit(&self, doc: Value) -> CmdResult {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Parallel for scans unless `--jobs 1`; the pool size is fixed once.
    fn scan_execution(&self) -> Result<Execution, Failure> {
        match self.jobs {
            Some(0) => Err(Failure::input("--jobs must be at least 1")),
            Some(1) => Ok(Execution::Sequential),
            Some(n) => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Failure { code: 1, message: format!("thread pool: {e}") })?;
                Ok(Execution::Parallel)
            }
            None => Ok(Execution::Parallel),
        }
    }
}

fn point_of(a: &str, b: f64) -> Result<ModuliPoint, Failure> {
    Ok(ModuliPoint::parse(a, b)?)
}

fn solve(ctx: &Ctx, m: &MapArgs) -> Result<(ModuliPoint, MapParams, TauTriple), Failure> {
    let point = point_of(&m.a, m.b)?;
    let params = MapParams::classify(&point, m.p, m.q, m.r)?;
    let tau = solve_tau_with(&point, &params, &ctx.config.tolerances)?;
    Ok((point, params, tau))
}

fn cmd_solve_tau(ctx: &Ctx, m: &MapArgs) -> CmdResult {
    let (point, params, tau) = solve(ctx, m)?;
    let res = tau.residuals_with(&point, &params, ctx.config.tolerances.quadrature)?;
    ctx.emit(document(
        "solve-tau",
        json!({
            "input": report::map_input(&point, &params),
            "tau": report::tau(&tau),
            "residuals": nums(&res),
            "max_residual": num(res.iter().fold(0.0f64, |acc, r| acc.max(r.abs()))),
            "tolerances": report::tolerances(&ctx.config.tolerances),
        }),
    ))
}

fn cmd_value(ctx: &Ctx, m: &MapArgs, n2: bool) -> CmdResult {
    let (point, params, tau) = solve(ctx, m)?;
    let v = functional_value_with(&tau, &params, &point, n2, &ctx.config.tolerances, Execution::Sequential)?;
    ctx.emit(document(
        "value",
        json!({
            "input": report::map_input(&point, &params),
            "tau": report::tau(&tau),
            "value": report::functional(&v),
            "tolerances": report::tolerances(&ctx.config.tolerances),
        }),
    ))
}

fn cmd_spectral(ctx: &Ctx, m: &MapArgs) -> CmdResult {
    let (point, params, tau) = solve(ctx, m)?;
    let profiles = build_profiles(&tau, &params, &point)?;
    let r = assemble_n2_with(&profiles, &ctx.config.tolerances, Execution::Sequential)?;
    ctx.emit(document(
        "spectral",
        json!({
            "input": report::map_input(&point, &params),
            "tau": report::tau(&tau),
            "spectrum": report::spectrum(&r),
            "tolerances": report::tolerances(&ctx.config.tolerances),
        }),
    ))
}

fn cmd_strict_instance(ctx: &Ctx) -> CmdResult {
    let s = construct_strict_instance(Execution::Sequential)?;
    let tau = solve_tau_with(&s.point, &s.params, &ctx.config.tolerances)?;
    let profiles = build_profiles(&tau, &s.params, &s.point)?;
    let r = assemble_n2_with(&profiles, &ctx.config.tolerances, Execution::Sequential)?;
    ctx.emit(document(
        "spectral",
        json!({
            "input": report::map_input(&s.point, &s.params),
            "strict_instance": {
                "m": num(s.m),
                "n0": num(s.n0),
                "n1": num(s.n1),
                "t0": num(s.t0),
                "p0": s.p0,
                "q0": s.q0,
                "k": s.k,
                "rayleigh_bound": num(s.rayleigh_bound),
                "lambda0_l2": s.lambda0_l2.map(num),
                "certified": s.certified,
            },
            "tau": report::tau(&tau),
            "spectrum": report::spectrum(&r),
            "tolerances": report::tolerances(&ctx.config.tolerances),
        }),
    ))
}

fn cmd_scan(ctx: &Ctx, p: u32, q: u32, r: i32, n2: bool) -> CmdResult {
    let exec = ctx.scan_execution()?;
    let rows = moduli_scan_with(&ctx.config.grid, p, q, r, n2, &ctx.config.tolerances, exec);
    let failed: Vec<_> = rows.iter().filter_map(|row| row.outcome.as_ref().err().map(|e| (row, e))).collect();
    for (row, e) in &failed {
        eprintln!("row {} (a = {}, b = {}): {e}", row.index, row.a, row.b);
    }
    let mono = scan_monotonicity(&rows);
    match ctx.config.format {
        Format::Csv => {
            let mut w = ctx.writer()?;
            write_scan_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Format::Json => ctx.emit(document(
            "scan",
            json!({
                "p": p,
                "q": q,
                "r": r,
                "grid": {
                    "a_min": num(ctx.config.grid.a_min),
                    "a_max": num(ctx.config.grid.a_max),
                    "a_steps": ctx.config.grid.a_steps,
                    "b_min": num(ctx.config.grid.b_min),
                    "b_max": num(ctx.config.grid.b_max),
                    "b_steps": ctx.config.grid.b_steps,
                },
                "rows": rows.iter().map(report::scan_row).collect::<Vec<_>>(),
                "failed_rows": failed.len(),
                "monotonicity": { "decreasing_in_b": mono.decreasing_in_b, "increasing_in_a": mono.increasing_in_a },
                "tolerances": report::tolerances(&ctx.config.tolerances),
            }),
        ))?,
    }
    eprintln!(
        "scan: {} of {} rows ok; lambda_bar decreasing in b: {}, increasing in a: {}",
        rows.len() - failed.len(),
        rows.len(),
        mono.decreasing_in_b,
        mono.increasing_in_a
    );
    if !rows.is_empty() && failed.len() == rows.len() {
        let all_input = failed.iter().all(|(_, e)| matches!(e, Error::Infeasible(_) | Error::Domain(_)));
        return Err(Failure { code: if all_input { 2 } else { 1 }, message: "every scan row failed".into() });
    }
    Ok(())
}

fn write_mesh_file(path: &Path, profiles: &ProfileSet, nx: usize, ny: usize) -> io::Result<usize> {
    let vertices = mesh(profiles, nx, ny);
    let mut w = BufWriter::new(File::create(path)?);
    write_mesh_jsonl(&mut w, &vertices)?;
    w.flush()?;
    Ok(vertices.len())
}

#[allow(clippy::too_many_arguments)]
fn cmd_otsuki(ctx: &Ctx, pt: u32, qt: u32, k: u32, rt: i32, mesh_path: Option<&Path>, nx: usize, ny: usize) -> CmdResult {
    let o = solve_otsuki(pt, qt)?;
    let (point, params) = o.map_params(k, rt)?;
    let tau = solve_tau_with(&point, &params, &ctx.config.tolerances)?;
    let profiles = build_profiles(&tau, &params, &point)?;
    let conf = conformality_residual(&profiles);
    let mesh_info = match mesh_path {
        Some(path) => {
            let n = write_mesh_file(path, &profiles, nx, ny)?;
            json!({ "path": path.display().to_string(), "vertices": n })
        }
        None => Value::Null,
    };
    ctx.emit(document(
        "otsuki",
        json!({
            "p_t": o.p_t,
            "q_t": o.q_t,
            "m_star": num(o.m_star),
            "b_t": num(o.b_t),
            "tau_closed_form": nums(&o.tau()),
            "k": k,
            "r_t": rt,
            "input": report::map_input(&point, &params),
            "tau": report::tau(&tau),
            "conformality": { "diag": num(conf.diag), "offdiag": num(conf.offdiag), "max": num(conf.max()) },
            "mesh": mesh_info,
        }),
    ))
}

/// The lattice of a circle-family map; `b` defaults to `√(p² - (r + a)²)`.
fn circle_point(a: &str, b: Option<f64>, p: u32, r: i32) -> Result<ModuliPoint, Failure> {
    let shear = point_of(a, 1.0)?;
    let b = match b {
        Some(b) => b,
        None => {
            let ra = r as f64 + shear.a;
            let b2 = (p * p) as f64 - ra * ra;
            if !(b2 > 0.0) {
                return Err(Failure::input(format!("no circle-family lattice: p² - (r + a)² = {b2} <= 0")));
            }
            b2.sqrt()
        }
    };
    Ok(shear.with_b(b)?)
}

fn complex_vec(cs: &[Complex64]) -> Value {
    Value::Array(cs.iter().map(|z| json!([num(z.re), num(z.im)])).collect())
}

fn frame_field(f: &FrameField) -> Value {
    json!({ "k": f.k, "l": f.l, "coeffs": complex_vec(&f.coeffs) })
}

fn galerkin(g: &GalerkinCount) -> Value {
    json!({ "kmax": g.kmax, "index": g.index, "nullity": g.nullity, "low_eigenvalues": nums(&g.low_eigenvalues) })
}

fn cmd_stability(ctx: &Ctx, cmd: &StabilityCommand) -> CmdResult {
    let doc = match cmd {
        StabilityCommand::Kernel { a, b, p, q, r } => {
            let point = circle_point(a, *b, *p, *r)?;
            let k = special_phi0_kernel(&point, *p, *r, *q)?;
            json!({
                "mode": "kernel",
                "input": { "lattice": report::point(&point), "p": p, "q": q, "r": r },
                "phi0": num(k.phi0),
                "det": nums(&k.det),
                "rank": k.rank,
                "block_residual": num(k.block_residual),
                "ambient_residual": num(k.ambient_residual),
                "cross_inner": num(k.cross_inner),
                "v1": frame_field(&k.v1),
                "v2": frame_field(&k.v2),
                "nonintegrable": k.nonintegrable.nonintegrable(),
                "q_eq_2p": k.nonintegrable.q_eq_2p,
                "q_eq_2ra": k.nonintegrable.q_eq_2ra,
            })
        }
        StabilityCommand::Block { a, b, p, r, phi0, k, l } => {
            let point = circle_point(a, *b, *p, *r)?;
            let blk = jacobi_block(&point, *p, *r, *phi0, *k, *l);
            let rows: Vec<Value> =
                (0..3).map(|i| Value::Array((0..3).map(|j| json!([num(blk.matrix[(i, j)].re), num(blk.matrix[(i, j)].im)])).collect())).collect();
            json!({
                "mode": "block",
                "input": { "lattice": report::point(&point), "p": p, "r": r, "phi0": num(*phi0), "k": k, "l": l },
                "matrix": rows,
                "det": [num(blk.det.re), num(blk.det.im)],
                "det_closed": num(blk.det_closed),
                "det_gap": num(blk.det_gap()),
                "hermitian": blk.is_hermitian(1e-12 * blk.matrix.norm().max(1.0)),
                "rank": blk.rank(1e-12),
            })
        }
        StabilityCommand::Hersch { b0 } => {
            let h = hersch_second_variation(*b0)?;
            json!({
                "mode": "hersch",
                "b0": num(h.b0),
                "quadrature": num(h.quadrature),
                "closed_form": num(h.closed_form),
                "gap": num(h.gap()),
            })
        }
        StabilityCommand::Index { a, b } => {
            let point = point_of(a, *b)?;
            let est = index_nullity_estimate(&point, Execution::Sequential)?;
            json!({
                "mode": "index",
                "input": report::point(&point),
                "index": est.index,
                "nullity": est.nullity,
                "converged": est.converged,
                "coarse": galerkin(&est.coarse),
                "fine": galerkin(&est.fine),
                "warnings": est.warnings,
            })
        }
    };
    ctx.emit(document("stability", doc))
}

fn cmd_mesh(ctx: &Ctx, m: &MapArgs, nx: usize, ny: usize) -> CmdResult {
    if nx == 0 || ny == 0 {
        return Err(Failure::input("--nx and --ny must be positive"));
    }
    let (point, params, tau) = solve(ctx, m)?;
    let profiles = build_profiles(&tau, &params, &point)?;
    let mut w = ctx.writer()?;
    write_mesh_jsonl(&mut w, &mesh(&profiles, nx, ny))?;
    w.flush()?;
    Ok(())
}

fn load_config(cli: &Cli, grid: Option<&str>, format: Option<Format>) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    if let Some(g) = grid {
        config.set_grid(g)?;
    }
    if let Some(f) = format {
        config.format = f;
    }
    config.apply_override(std::env::var(TOL_OVERRIDE_VAR).ok().as_deref())?;
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> CmdResult {
    let (grid, format) = match &cli.command {
        Command::Scan { grid, format, .. } => (grid.as_deref(), *format),
        _ => (None, None),
    };
    let config = load_config(&cli, grid, format)?;
    let ctx = Ctx { config, out: cli.out.clone(), jobs: cli.jobs };
    match &cli.command {
        Command::SolveTau(m) => cmd_solve_tau(&ctx, m),
        Command::Value { map, n2 } => cmd_value(&ctx, map, *n2),
        Command::Spectral { strict_instance: true, .. } => cmd_strict_instance(&ctx),
        Command::Spectral { a, b, p, q, r, .. } => {
            let m = MapArgs {
                a: a.clone().expect("required by clap"),
                b: b.expect("required by clap"),
                p: p.expect("required by clap"),
                q: q.expect("required by clap"),
                r: r.expect("required by clap"),
            };
            cmd_spectral(&ctx, &m)
        }
        Command::Scan { p, q, r, n2, .. } => cmd_scan(&ctx, *p, *q, *r, *n2),
        Command::Otsuki { pt, qt, k, rt, mesh, nx, ny } => cmd_otsuki(&ctx, *pt, *qt, *k, *rt, mesh.as_deref(), *nx, *ny),
        Command::Stability { command } => cmd_stability(&ctx, command),
        Command::Mesh { map, nx, ny } => cmd_mesh(&ctx, map, *nx, *ny),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
