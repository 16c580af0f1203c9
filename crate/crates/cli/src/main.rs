//! `grushin` command line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use grushin::estimates::{lp_sweep, run_suite, SweepConfig, SUITES};
use grushin::flow::{
    decoupling_moment_check, integrability_sweep, non_smoothing_report, rough_potential,
    EnsembleConfig, IntegrabilityConfig, RoughPotential, GAUSSIAN_SECOND_MOMENT,
};
use grushin::grid::{Dealias, GridSpec};
use grushin::hermite::hermite_eval;
use grushin::io::{read_snapshot, report_csv, table_csv, to_json, write_snapshot};
use grushin::report::SweepReport;
use grushin::solver::{band_datum, Mode, Nonlinearity, Solver, SolverConfig};
use grushin::spectral::{Grid, SpectralField};
use grushin::{Error, VERSION};

mod config;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "grushin",
    version,
    about = "Fourier-Hermite toolkit for the Grushin-Schrodinger equation"
)]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file; flags given on the command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Hermite functions h_m(x) on a uniform x grid (CSV: m, x, value)
    HermiteTable(HermiteTableArgs),
    /// ||h_m||_{L^p} and its decay-normalized value (CSV: m, p, norm, scaled)
    LpSweep(LpSweepArgs),
    /// Run an estimate suite
    Verify(VerifyArgs),
    /// Randomization checks: non-smoothing surrogate or decoupling moments
    Randomize(RandomizeArgs),
    /// Integrability gain of the randomized free flow
    IntegrabilitySweep(IntegrabilityArgs),
    /// Solve the Grushin-Schrodinger equation by Picard iteration
    Evolve(EvolveArgs),
    /// Summarize report files and their verdicts
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
struct OutArgs {
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when absent
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutArgs {
    fn format(&self, default: Format) -> Format {
        self.format
            .unwrap_or_else(|| match self.out.as_ref().and_then(|p| p.extension()) {
                Some(e) if e == "csv" => Format::Csv,
                Some(e) if e == "json" => Format::Json,
                _ => default,
            })
    }
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// Lattice spacing of the y-frequency
    #[arg(long, default_value_t = 0.5)]
    eta_step: f64,
    /// Number of positive y-frequencies
    #[arg(long, default_value_t = 8)]
    eta_count: usize,
    /// Largest Hermite index
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    /// Padding of the physical grid
    #[arg(long, value_enum, default_value_t = DealiasArg::Two)]
    dealias: DealiasArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum DealiasArg {
    #[value(name = "3/2")]
    ThreeHalves,
    #[value(name = "2")]
    Two,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        let d = match self.dealias {
            DealiasArg::ThreeHalves => Dealias::THREE_HALVES,
            DealiasArg::Two => Dealias::TWO,
        };
        GridSpec::new(self.eta_step, self.eta_count, self.m_max, d)
    }
}

#[derive(Args, Debug, Serialize)]
struct HermiteTableArgs {
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    /// Half width of the x grid
    #[arg(long, default_value_t = 6.0)]
    x_max: f64,
    #[arg(long, default_value_t = 121)]
    x_count: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct LpSweepArgs {
    /// Hermite indices
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128, 256])]
    ms: Vec<usize>,
    /// Lebesgue exponents; `inf` for the sup norm
    #[arg(long, value_delimiter = ',', default_values_t = [2.0f64, 3.0, 4.0, 6.0, 8.0, f64::INFINITY])]
    ps: Vec<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suite: String,
    #[arg(long, default_value_t = 256)]
    m_max: usize,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RandomizeCheck {
    NonSmoothing,
    Decoupling,
}

#[derive(Args, Debug, Serialize)]
struct RandomizeArgs {
    #[arg(long, value_enum, default_value_t = RandomizeCheck::NonSmoothing)]
    check: RandomizeCheck,
    /// Regularity of the rough potential
    #[arg(long, default_value_t = 1.2)]
    k: f64,
    /// Anisotropic weight of the rough potential
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Excess regularity probed by the non-smoothing check
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Length of the decoupling coefficient family
    #[arg(long, default_value_t = 16)]
    terms: usize,
    /// Ensemble size (default: 100 for non-smoothing, 10000 for decoupling)
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct IntegrabilityArgs {
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value_t = 33)]
    nt: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Initial datum as a GRSF1 snapshot (default: rough potential with rho = 1)
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Det,
    Rand,
}

#[derive(Args, Debug, Serialize)]
struct EvolveArgs {
    #[arg(long, default_value_t = 1.5)]
    k: f64,
    #[arg(long, default_value_t = 1.75)]
    ell: f64,
    /// Final time
    #[arg(long = "T", default_value_t = 0.01)]
    t_final: f64,
    /// Choose T from the measured contraction constant
    #[arg(long)]
    auto_t: bool,
    /// Event parameter
    #[arg(long = "R", default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 33)]
    nt: usize,
    /// Picard tolerance on sup_t ||v_{j+1} - v_j||_{H^ell}
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 80)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Det)]
    mode: ModeArg,
    #[arg(long)]
    defocusing: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write every n-th state as a GRSF1 snapshot next to --out (0: none)
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    /// Also run the split-step integrator and report the discrepancy
    #[arg(long)]
    cross_check: bool,
    /// Initial datum as a GRSF1 snapshot (default: --amplitude on block (1, 1))
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    amplitude: f64,
    #[command(flatten)]
    grid: GridArgs,
    /// Trace file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// Report files written by verify, randomize, integrability-sweep or evolve
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

/// Everything a report needs to be reproduced.
#[derive(Serialize)]
struct Envelope<'a, P: Serialize> {
    version: &'a str,
    seed: Option<u64>,
    config: &'a Command,
    #[serde(flatten)]
    payload: P,
}

#[derive(Serialize)]
struct Reports<'a> {
    reports: &'a [SweepReport],
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> grushin::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// CSV body preceded by `#` lines carrying version, seed and configuration.
fn csv_with_header(cmd: &Command, seed: Option<u64>, body: &str) -> grushin::Result<String> {
    let mut s = format!("# {VERSION}\n");
    if let Some(seed) = seed {
        s.push_str(&format!("# seed={seed}\n"));
    }
    s.push_str(&format!("# config={}\n", serde_json::to_string(cmd)?));
    s.push_str(body);
    Ok(s)
}

fn write_reports(
    cmd: &Command,
    seed: Option<u64>,
    out: &OutArgs,
    reports: &[SweepReport],
) -> grushin::Result<Outcome> {
    let text = match out.format(Format::Json) {
        Format::Json => to_json(&Envelope {
            version: VERSION,
            seed,
            config: cmd,
            payload: Reports { reports },
        })?,
        Format::Csv => csv_with_header(cmd, seed, &report_csv(reports)?)?,
    };
    emit(out.out.as_deref(), &text)?;
    for r in reports {
        eprintln!("{}: {:?}", r.name, r.summary.verdict);
    }
    Ok(if reports.iter().all(|r| r.passed()) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn load_field(
    path: &Path,
    grid: &std::sync::Arc<Grid<f64>>,
) -> grushin::Result<SpectralField<f64>> {
    let mut f = std::fs::File::open(path)?;
    read_snapshot(&mut f)?.into_field(grid)
}

fn run(cmd: &Command) -> grushin::Result<Outcome> {
    match cmd {
        Command::HermiteTable(a) => {
            if a.x_count < 2 {
                return Err(Error::Config("--x-count must be at least 2".into()));
            }
            let h = 2.0 * a.x_max / (a.x_count - 1) as f64;
            let mut rows = Vec::new();
            for m in 0..=a.m_max {
                for j in 0..a.x_count {
                    let x = -a.x_max + j as f64 * h;
                    rows.push(vec![m as f64, x, hermite_eval(m, x)]);
                }
            }
            let body = table_csv(&["m", "x", "value"], &rows)?;
            let text = match a.out.format(Format::Csv) {
                Format::Csv => csv_with_header(cmd, None, &body)?,
                Format::Json => to_json(&Envelope {
                    version: VERSION,
                    seed: None,
                    config: cmd,
                    payload: Table { rows: &rows },
                })?,
            };
            emit(a.out.out.as_deref(), &text)?;
            Ok(Outcome::Pass)
        }
        Command::LpSweep(a) => {
            let rep = lp_sweep(&a.ms, &a.ps)?;
            match a.out.format(Format::Csv) {
                Format::Csv => {
                    let rows: Vec<Vec<f64>> = rep
                        .rows
                        .iter()
                        .map(|r| vec![r.params["m"], r.params["p"], r.params["norm"], r.lhs])
                        .collect();
                    let body = table_csv(&["m", "p", "norm", "scaled"], &rows)?;
                    emit(a.out.out.as_deref(), &csv_with_header(cmd, None, &body)?)?;
                    eprintln!("{}: {:?}", rep.name, rep.summary.verdict);
                    Ok(if rep.passed() {
                        Outcome::Pass
                    } else {
                        Outcome::Fail
                    })
                }
                Format::Json => write_reports(cmd, None, &a.out, std::slice::from_ref(&rep)),
            }
        }
        Command::Verify(a) => {
            let cfg = SweepConfig {
                m_max: a.m_max,
                samples: a.samples,
                seed: a.seed,
            };
            let reps = run_suite(&a.suite, &cfg)?;
            write_reports(cmd, Some(a.seed), &a.out, &reps)
        }
        Command::Randomize(a) => {
            let n = a.samples.unwrap_or(match a.check {
                RandomizeCheck::NonSmoothing => 100,
                RandomizeCheck::Decoupling => 10_000,
            });
            let ens = EnsembleConfig::new(a.seed, n);
            let rep = match a.check {
                RandomizeCheck::NonSmoothing => {
                    non_smoothing_report(&RoughPotential::new(a.k, a.rho), a.eps, &ens)?
                }
                RandomizeCheck::Decoupling => {
                    let psi: Vec<_> = (1..=a.terms)
                        .map(|n| grushin::Complex::new((n as f64).powf(-0.5), 0.0))
                        .collect();
                    decoupling_moment_check(&psi, &ens)?
                }
            };
            let mut rep = rep;
            rep.constant("E|X|^2", GAUSSIAN_SECOND_MOMENT);
            write_reports(cmd, Some(a.seed), &a.out, std::slice::from_ref(&rep))
        }
        Command::IntegrabilitySweep(a) => {
            let grid = Grid::<f64>::new(a.grid.spec())?;
            let u0 = match &a.input {
                Some(p) => load_field(p, &grid)?,
                None => rough_potential(a.k, 1.0, &grid),
            };
            let ic = IntegrabilityConfig {
                k: a.k,
                p: a.p,
                q: a.q,
                t_final: a.t_final,
                n_t: a.nt,
            };
            let ens = EnsembleConfig::new(a.seed, a.samples);
            let rep = integrability_sweep(&u0, &ic, &ens)?;
            write_reports(cmd, Some(a.seed), &a.out, std::slice::from_ref(&rep))
        }
        Command::Evolve(a) => evolve(cmd, a),
        Command::Report(a) => {
            let mut all_pass = true;
            for f in &a.files {
                let text = std::fs::read_to_string(f)?;
                let v: serde_json::Value = serde_json::from_str(&text)?;
                if let Some(acc) = v.get("accepted").and_then(|a| a.as_bool()) {
                    all_pass &= acc;
                    let verdict = if acc { "PASS" } else { "FAIL" };
                    println!(
                        "{}\tevolve\t{}\tv_sup_h_ell={}\tx_norm={}",
                        f.display(),
                        verdict,
                        v["v_sup_h_ell"],
                        v["x_norm"]
                    );
                    continue;
                }
                let reps = v
                    .get("reports")
                    .and_then(|r| r.as_array())
                    .ok_or_else(|| Error::Format(format!("{}: no reports array", f.display())))?;
                for r in reps {
                    let name = r.get("name").and_then(|n| n.as_str()).unwrap_or("?");
                    let s = &r["summary"];
                    let verdict = s.get("verdict").and_then(|n| n.as_str()).unwrap_or("?");
                    all_pass &= verdict == "PASS";
                    println!(
                        "{}\t{}\t{}\tmax_ratio={}\tgrowth={}",
                        f.display(),
                        name,
                        verdict,
                        s.get("max_ratio").unwrap_or(&serde_json::Value::Null),
                        s.get("growth").unwrap_or(&serde_json::Value::Null)
                    );
                }
            }
            Ok(if all_pass {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
    }
}

#[derive(Serialize)]
struct Table<'a> {
    rows: &'a [Vec<f64>],
}

#[derive(Serialize)]
struct EvolveOutput {
    t_final: f64,
    auto_time: Option<grushin::solver::AutoTime>,
    x_norm: f64,
    accepted: bool,
    final_contraction: f64,
    v_sup_h_ell: f64,
    splitstep_discrepancy: Option<f64>,
    splitstep_warnings: Vec<String>,
    events: Option<grushin::solver::EventStats>,
    snapshots: Vec<String>,
    trace: grushin::solver::SolverTrace,
}

fn evolve(cmd: &Command, a: &EvolveArgs) -> grushin::Result<Outcome> {
    let grid = Grid::<f64>::new(a.grid.spec())?;
    let u0 = match &a.input {
        Some(p) => load_field(p, &grid)?,
        None => band_datum(&grid, 0, 1, a.amplitude),
    };
    let mut cfg = SolverConfig {
        k: a.k,
        ell: a.ell,
        t_final: a.t_final,
        n_t: a.nt,
        picard_tol: a.tol,
        picard_max_iter: a.max_iter,
        r: a.r,
        mode: match a.mode {
            ModeArg::Det => Mode::Deterministic,
            ModeArg::Rand => Mode::Randomized,
        },
        nonlinearity: if a.defocusing {
            Nonlinearity::Defocusing
        } else {
            Nonlinearity::Focusing
        },
        seed: a.seed,
        ..SolverConfig::default()
    };
    let draw = match cfg.mode {
        Mode::Randomized => Some(grushin::flow::Draw::sample(
            &EnsembleConfig::new(a.seed, 1),
            0,
            &u0.blocks(),
        )),
        Mode::Deterministic => None,
    };
    let mut auto = None;
    if a.auto_t {
        let at = Solver::new(grid.clone(), cfg.clone())?.auto_time(&u0, draw.as_ref())?;
        cfg.t_final = at.t_auto;
        auto = Some(at);
    }
    let solver = Solver::new(grid.clone(), cfg.clone())?;
    let (traj, mut trace) = solver.picard_solve(&u0, draw.as_ref())?;
    solver.diagnostics(&traj, &mut trace)?;
    let x_norm = u0.x_norm(a.k, 1.0);
    let v_sup = trace.v_norm.iter().copied().fold(0.0, f64::max);
    let converged = trace
        .picard_residuals
        .last()
        .is_some_and(|r| *r <= cfg.picard_tol);
    let in_ball = cfg.mode == Mode::Deterministic || v_sup <= cfg.r * x_norm;
    let (disc, warnings) = if a.cross_check {
        let (ss, w) = solver.splitstep_evolve(&u0)?;
        let den = traj.last().l2_norm();
        let d = traj.last().sub(ss.last())?.l2_norm();
        (Some(if den > 0.0 { d / den } else { d }), w)
    } else {
        (None, Vec::new())
    };
    let events = match &draw {
        Some(d) => {
            let probe = u0.scale_re(1.0 / u0.sobolev_norm(a.ell).max(f64::MIN_POSITIVE));
            Some(solver.event_statistics(&u0, d, &probe)?)
        }
        None => None,
    };
    let mut snapshots = Vec::new();
    if a.snapshot_every > 0 {
        let base = a
            .out
            .clone()
            .ok_or_else(|| Error::Config("--snapshot-every needs --out".into()))?;
        for (i, u) in traj.states.iter().enumerate().step_by(a.snapshot_every) {
            let p = base.with_extension(format!("{i:04}.grsf"));
            let mut f = std::fs::File::create(&p)?;
            write_snapshot(&mut f, u)?;
            snapshots.push(
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            );
        }
    }
    let out = EvolveOutput {
        t_final: cfg.t_final,
        auto_time: auto,
        x_norm,
        accepted: converged && in_ball,
        final_contraction: trace.final_contraction(),
        v_sup_h_ell: v_sup,
        splitstep_discrepancy: disc,
        splitstep_warnings: warnings,
        events,
        snapshots,
        trace,
    };
    let accepted = out.accepted;
    let text = to_json(&Envelope {
        version: VERSION,
        seed: Some(a.seed),
        config: cmd,
        payload: out,
    })?;
    emit(a.out.as_deref(), &text)?;
    Ok(if accepted {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
