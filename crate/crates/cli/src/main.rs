mod io;
mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gtstokes::am::{gamma_am, phase_theta};
use gtstokes::caterpillar::{extract_stokes, rh_caterpillar, stokes_subdiag};
use gtstokes::gt::gt_coordinates;
use gtstokes::iso::{iso_flow, verify_mainthm, DeformationPoint, FlowOptions, FlowState};
use gtstokes::linalg::HermitianMatrix;
use gtstokes::oracle::{run_oracle, LinearSystem, OracleConfig};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use io::{matrix_json, parse_list, read_hermitian, sibling, write_csv, write_json, CliError, CliResult};
use suites::{decay_rows, schedule_for, RunConfig, Suite};

#[derive(Parser)]
#[command(
    name = "gtstokes",
    version,
    about = "Stokes matrices, Gelfand-Tsetlin coordinates and their checks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Matrix JSON file; `-` or absent reads stdin.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output JSON file; CSV reports are written next to it. Absent writes JSON to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for suite checks; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_unitary: f64,
    /// Closed-form identities (Riemann-Hilbert, GT, equivariance).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_rh: f64,
    #[arg(long, global = true, default_value_t = 1e-5)]
    tol_oracle: f64,
    /// Stokes drift along a flow and `S_-` vs `S_+^dagger`.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol_iso: f64,
    /// Spectrum and diagonal drift along a flow.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_conserve: f64,
    /// Minimum gap between consecutive entries of `u`.
    #[arg(long, global = true, default_value_t = 0.0)]
    gap_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, global = true, default_value_t = 1e-13)]
    atol: f64,
    /// Matching radius at infinity; default `40 / min gap`.
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Radius where the series at zero is evaluated.
    #[arg(long, global = true, default_value_t = 1e-3)]
    r0: f64,
    /// Radius of the comparison circle; default `min(1, 1 / max gap)`.
    #[arg(long, global = true)]
    inner_radius: Option<f64>,
    /// Skip the second match at `2R`.
    #[arg(long, global = true)]
    no_doubling: bool,
}

impl Global {
    fn oracle(&self) -> OracleConfig {
        OracleConfig {
            radius: self.radius,
            r0: self.r0,
            inner_radius: self.inner_radius,
            rtol: self.rtol,
            atol: self.atol,
            doubling_check: !self.no_doubling,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Gelfand-Tsetlin actions, angles and moduli.
    GtCoords,
    /// The Alekseev-Meinrenken map with its unitary factors.
    AmMap,
    /// `nu(u_cat, A)`, connection matrix and Stokes matrices at the caterpillar point.
    RhCat,
    /// Closed-form Stokes sub-diagonals at the caterpillar point.
    StokesCat,
    /// Stokes and connection matrices of `dF/dz = (iu - A/(2 pi i z)) F` by numerical integration.
    Oracle {
        /// Comma-separated increasing reals.
        #[arg(long)]
        u: String,
    },
    /// Integrates the isomonodromy equation along a straight segment.
    IsoFlow {
        #[arg(long)]
        u: String,
        #[arg(long)]
        to: String,
    },
    /// Runs a verification suite on seeded random samples.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Error decay of `Gamma_AM(psi(u, A))` against the oracle for one matrix.
    VerifyMainthm {
        #[command(flatten)]
        decay: DecayArgs,
    },
}

#[derive(Args, Clone)]
struct DecayArgs {
    /// Values of `s`: `u = (0, s)` for n = 2, `(0, 1, s)` for n = 3, gaps `1, s-1, (s-1)^2, ...` beyond.
    #[arg(long, default_value = "10,20,40,80")]
    ratios: String,
    /// Pass when every slope is at most this.
    #[arg(long, default_value_t = -0.8, allow_hyphen_values = true)]
    max_slope: f64,
    /// Pass when every slope is at least this.
    #[arg(long, default_value_t = -1.3, allow_hyphen_values = true)]
    min_slope: f64,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Number of random samples; each suite has its own default.
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    decay: DecayArgs,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn input_matrix(g: &Global) -> CliResult<HermitianMatrix> {
    read_hermitian(g.input.as_deref())
}

fn deformation(flag: &str, s: &str, gap_tol: f64) -> CliResult<DeformationPoint> {
    Ok(DeformationPoint::new(parse_list(flag, s)?, gap_tol)?)
}

fn emit<T: Serialize>(g: &Global, value: &T) -> CliResult<()> {
    write_json(value, g.output.as_deref())
}

fn cmd_gt_coords(g: &Global) -> CliResult<bool> {
    let a = input_matrix(g)?;
    emit(g, &gt_coordinates(&a)?)?;
    Ok(true)
}

fn cmd_am_map(g: &Global) -> CliResult<bool> {
    let a = input_matrix(g)?;
    let f = gamma_am(&a)?;
    let theta = if a.dim() >= 2 { Some(phase_theta(&a)?) } else { None };
    emit(
        g,
        &json!({
            "gamma": matrix_json(f.gamma.matrix()),
            "psi": matrix_json(f.psi.matrix()),
            "psi_factors": f.psi_factors.iter().map(|p| matrix_json(p.matrix())).collect::<Vec<_>>(),
            "theta": theta,
        }),
    )?;
    Ok(true)
}

fn cmd_rh_cat(g: &Global) -> CliResult<bool> {
    let a = input_matrix(g)?;
    let r = rh_caterpillar(&a)?;
    emit(
        g,
        &json!({
            "nu": matrix_json(r.nu.matrix()),
            "c_tilde": matrix_json(r.c_tilde.matrix()),
            "connection": matrix_json(&r.connection),
            "s_plus": matrix_json(&r.stokes.s_plus),
            "s_minus": matrix_json(&r.stokes.s_minus),
            "diagnostics": r.diagnostics,
        }),
    )?;
    Ok(true)
}

fn cmd_stokes_cat(g: &Global) -> CliResult<bool> {
    let a = input_matrix(g)?;
    let sub = stokes_subdiag(&a)?;
    let (cholesky, dev) = extract_stokes(&rh_caterpillar(&a)?.nu, &a.diagonal())?;
    let rows: Vec<_> = sub
        .iter()
        .enumerate()
        .map(|(k, (p, m))| {
            json!({
                "k": k + 1,
                "s_plus": pair(*p),
                "s_minus": pair(*m),
                "cholesky_error": (cholesky.s_plus[(k, k + 1)] - p).norm().max((cholesky.s_minus[(k + 1, k)] - m).norm()),
            })
        })
        .collect();
    emit(
        g,
        &json!({
            "subdiagonal": rows,
            "s_plus": matrix_json(&cholesky.s_plus),
            "s_minus": matrix_json(&cholesky.s_minus),
            "diagonal_deviation": dev,
        }),
    )?;
    Ok(true)
}

fn cmd_oracle(g: &Global, u: &str) -> CliResult<bool> {
    let a = input_matrix(g)?;
    let u = parse_list("u", u)?;
    let sys = LinearSystem::new(u.clone(), a, g.gap_tol)?;
    let rep = run_oracle(&sys, &g.oracle())?;
    let r = rep.residuals;
    let pass = r.unitarity <= g.tol_oracle && r.monodromy <= g.tol_oracle && r.triangularity <= g.tol_oracle;
    emit(
        g,
        &json!({
            "u": u,
            "radius": rep.radius,
            "inner_radius": rep.inner_radius,
            "s_plus": matrix_json(rep.s_plus()),
            "s_minus": matrix_json(&rep.stokes.s_minus),
            "connection": matrix_json(&rep.connection),
            "nu": matrix_json(rep.nu().matrix()),
            "residuals": r,
            "tolerance": g.tol_oracle,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn cmd_iso_flow(g: &Global, from: &str, to: &str) -> CliResult<bool> {
    let a = input_matrix(g)?;
    let u0 = deformation("u", from, g.gap_tol)?;
    let u1 = deformation("to", to, g.gap_tol)?;
    let opts = FlowOptions {
        rtol: g.rtol.min(1e-12),
        atol: g.atol.min(1e-14),
    };
    let rep = iso_flow(&FlowState { u: u0, phi: a }, &u1, &opts)?;
    let pass = rep.spectrum_drift <= g.tol_conserve && rep.diagonal_drift <= g.tol_conserve;
    emit(
        g,
        &json!({
            "u": rep.state.u,
            "phi": matrix_json(rep.state.phi.matrix()),
            "spectrum_drift": rep.spectrum_drift,
            "diagonal_drift": rep.diagonal_drift,
            "max_step_drift": rep.max_step_drift,
            "steps": rep.stats,
            "tolerance": g.tol_conserve,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn run_config(g: &Global, run: &RunArgs) -> CliResult<RunConfig> {
    let cfg = RunConfig {
        seed: g.seed,
        n: run.n,
        samples: run.samples,
        tol_unitary: g.tol_unitary,
        tol_rh: g.tol_rh,
        tol_oracle: g.tol_oracle,
        tol_iso: g.tol_iso,
        tol_conserve: g.tol_conserve,
        max_slope: run.decay.max_slope,
        min_slope: run.decay.min_slope,
        oracle: g.oracle(),
        ratios: parse_list("ratios", &run.decay.ratios)?,
    };
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

fn cmd_verify(g: &Global, suite: Suite, run: &RunArgs) -> CliResult<bool> {
    let cfg = run_config(g, run)?;
    let out = suites::run(suite, &cfg);
    eprint!("{}", out.report.summary());
    match g.output.as_deref() {
        Some(p) if p != Path::new("-") => {
            write_json(&out.report, Some(p))?;
            write_csv(&out.report.checks, &sibling(p, "csv"))?;
            if let Some(rows) = &out.decay {
                write_csv(rows, &sibling(p, "decay.csv"))?;
            }
        }
        _ => match &out.decay {
            Some(rows) => write_json(&json!({"report": out.report, "decay": rows}), None)?,
            None => write_json(&out.report, None)?,
        },
    }
    Ok(out.report.pass)
}

fn cmd_verify_mainthm(g: &Global, d: &DecayArgs) -> CliResult<bool> {
    let a = input_matrix(g)?;
    let schedule = schedule_for(a.dim(), &parse_list("ratios", &d.ratios)?)?;
    let rep = verify_mainthm(&a, &schedule, &g.oracle())?;
    let pass = if a.dim() == 2 {
        // exact for n = 2, so only the size of the error is meaningful
        rep.points.iter().all(|p| p.error <= g.tol_oracle)
    } else {
        rep.slope <= d.max_slope && rep.slope >= d.min_slope
    };
    let rows = decay_rows(0, &rep);
    let value = json!({
        "points": rep.points,
        "slope": rep.slope,
        "max_slope": d.max_slope,
        "min_slope": d.min_slope,
        "pass": pass,
    });
    emit(g, &value)?;
    if let Some(p) = g.output.as_deref().filter(|p| *p != Path::new("-")) {
        write_csv(&rows, &sibling(p, "csv"))?;
    }
    eprintln!(
        "slope {:.3} (need within [{}, {}])",
        rep.slope, d.min_slope, d.max_slope
    );
    Ok(pass)
}

fn dispatch(cli: &Cli) -> CliResult<bool> {
    let g = &cli.global;
    match &cli.cmd {
        Command::GtCoords => cmd_gt_coords(g),
        Command::AmMap => cmd_am_map(g),
        Command::RhCat => cmd_rh_cat(g),
        Command::StokesCat => cmd_stokes_cat(g),
        Command::Oracle { u } => cmd_oracle(g, u),
        Command::IsoFlow { u, to } => cmd_iso_flow(g, u, to),
        Command::Verify { suite, run } => cmd_verify(g, *suite, run),
        Command::VerifyMainthm { decay } => cmd_verify_mainthm(g, decay),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
