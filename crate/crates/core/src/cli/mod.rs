//! The `ghzctl` command line.
//!
//! Exit codes: 0 success, 1 a reproduction check failed, 2 invalid input
//! (arguments, config, sizes), 3 numerical failure.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod reproduce;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::robustness::{Method, SweepKind};
use crate::symmetry::DecompositionParams;
use config::{
    AdiabaticSection, ExperimentConfig, ExperimentMethod, LyapunovSection, OptimizeSection, ScanSection, ScheduleKind,
};
use experiments::SweepRequest;
use output::Artifacts;
use reproduce::{Figure, ReproduceOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ghzctl", version, about = "GHZ-state preparation in Ising chains with a single global field")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random starts and disorder samples.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Also render SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Print the resolved plan without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Chain length.
    #[arg(long)]
    pub n: usize,
    /// Coupling J.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub j: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Linear,
    Exp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant-subspace blocks of the chain.
    Decompose {
        #[command(flatten)]
        chain: ChainArgs,
        /// Field sign selecting the initial state and GHZ target.
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        f0: f64,
        #[arg(long, default_value_t = DecompositionParams::default().alpha)]
        alpha: f64,
        #[arg(long, default_value_t = DecompositionParams::default().beta)]
        beta: f64,
        #[arg(long, default_value_t = DecompositionParams::default().delta)]
        delta: f64,
    },
    /// Ground energy and gap of the GHZ block over a field range.
    Spectrum {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        fmin: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        fmax: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Adiabatic passage from the ground state at f0.
    Adiabatic {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value = "exp")]
        schedule: ScheduleArg,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        f0: f64,
        /// Decay rate of the exponential schedule.
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        /// Ramp time of the linear schedule.
        #[arg(long, default_value_t = 100.0)]
        tf: f64,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
    },
    /// Lyapunov feedback control.
    Lyapunov {
        #[command(flatten)]
        chain: ChainArgs,
        /// Feedback gain (default depends on N).
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 20.0)]
        tf: f64,
        #[arg(long, default_value_t = crate::lyapunov::DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        f0: f64,
    },
    /// Piecewise-constant pulse optimization.
    Optimize {
        #[command(flatten)]
        chain: ChainArgs,
        /// Final time (default 0.65 N).
        #[arg(long)]
        tf: Option<f64>,
        /// Number of slices (default 3 N).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = crate::optimizer::DEFAULT_STARTS)]
        starts: usize,
        /// Stop once this fidelity is reached.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Smallest grid time reaching the fidelity target, per N.
    ScanMinTime {
        #[arg(long, default_value_t = 2)]
        nmin: usize,
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        j: f64,
        #[arg(long, default_value_t = 0.99)]
        target: f64,
    },
    /// Robustness sweep of a method's pulse.
    Robustness {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        j: f64,
        #[arg(long)]
        method: String,
        #[arg(long)]
        kind: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = crate::robustness::DEFAULT_SAMPLES)]
        samples: usize,
        /// Field of the thermal state or reference ground state.
        #[arg(long, default_value_t = crate::robustness::DESIGN_F0)]
        f0: f64,
        /// Lindblad step.
        #[arg(long, default_value_t = crate::propagation::DEFAULT_LINDBLAD_DT)]
        dt: f64,
    },
    /// Run an experiment config file.
    Run { config: PathBuf },
    /// Reproduce a published figure and check it.
    Reproduce {
        /// fig1..fig7, fig9, fig10, fig11 or init-bound.
        figure: String,
        /// Largest N of the minimum-time scan.
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long, default_value_t = crate::robustness::DEFAULT_SAMPLES)]
        samples: usize,
    },
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let g = &cli.global;
    if g.jobs == Some(0) {
        return Err(Error::Invalid("--jobs must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = g.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let (plan, dir) = describe(cli)?;
    if g.dry_run {
        for line in plan {
            writeln!(stdout, "{line}")?;
        }
        writeln!(stdout, "output: {}", dir.display())?;
        return Ok(EXIT_OK);
    }
    let (artifacts, plot) = pool.install(|| compute(cli))?;
    artifacts.write(&dir, plot, stdout)?;
    Ok(if artifacts.all_pass() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn default_out(name: &str) -> PathBuf {
    Path::new("out").join(name)
}

fn seed(g: &GlobalArgs) -> u64 {
    g.seed.unwrap_or(0)
}

/// Validates the request up front and describes what would run.
fn describe(cli: &Cli) -> Result<(Vec<String>, PathBuf)> {
    let g = &cli.global;
    let out = |name: &str| g.out.clone().unwrap_or_else(|| default_out(name));
    Ok(match &cli.command {
        Command::Decompose { chain, .. } => {
            experiments::chain(chain.n, chain.j)?;
            (vec![format!("decompose N={} J={}", chain.n, chain.j)], out("decompose"))
        }
        Command::Spectrum { chain, fmin, fmax, points } => {
            experiments::chain(chain.n, chain.j)?;
            (vec![format!("spectrum N={} J={} f in [{fmin}, {fmax}], {points} points", chain.n, chain.j)], out("spectrum"))
        }
        Command::Adiabatic { chain, schedule, f0, mu, tf, horizon, threshold } => {
            experiments::chain(chain.n, chain.j)?;
            adiabatic_section(*schedule, *f0, *mu, *tf, *horizon, *threshold).schedule()?;
            (vec![format!("adiabatic N={} J={} {schedule:?} f0={f0} horizon={horizon}", chain.n, chain.j)], out("adiabatic"))
        }
        Command::Lyapunov { chain, kappa, tf, dt, f0 } => {
            experiments::chain(chain.n, chain.j)?;
            let k = kappa.unwrap_or_else(|| crate::lyapunov::default_kappa(chain.n));
            (vec![format!("lyapunov N={} J={} kappa={k} t_f={tf} dt={dt} f0={f0}", chain.n, chain.j)], out("lyapunov"))
        }
        Command::Optimize { chain, tf, k, starts, target } => {
            experiments::chain(chain.n, chain.j)?;
            let s = optimize_section(*tf, *k, *starts, *target);
            (
                vec![format!(
                    "optimize N={} J={} t_f={} K={} starts={starts} seed={}",
                    chain.n,
                    chain.j,
                    s.t_f(chain.n),
                    s.slices(chain.n),
                    seed(g)
                )],
                out("optimize"),
            )
        }
        Command::ScanMinTime { nmin, nmax, j, target } => {
            if nmin > nmax || *nmin < 2 {
                return Err(Error::Invalid(format!("need 2 <= nmin <= nmax, got {nmin}..{nmax}")));
            }
            experiments::chain(*nmax, *j)?;
            (vec![format!("scan-min-time N={nmin}..{nmax} J={j} target={target} seed={}", seed(g))], out("scan-min-time"))
        }
        Command::Robustness { n, j, method, kind, values, samples, .. } => {
            experiments::chain(*n, *j)?;
            let m: Method = method.parse()?;
            let k: SweepKind = kind.parse()?;
            (
                vec![format!("robustness N={n} J={j} method={} kind={} values={values:?} samples={samples} seed={}", m.name(), k.name(), seed(g))],
                out("robustness"),
            )
        }
        Command::Run { config } => {
            let c = ExperimentConfig::load(config)?;
            for &n in &c.chain.sites {
                experiments::chain(n, c.chain.coupling)?;
            }
            let dir = g.out.clone().or_else(|| c.experiment.out.clone()).unwrap_or_else(|| default_out(&c.experiment.name));
            let s = g.seed.or(c.experiment.seed).unwrap_or(0);
            (
                vec![format!(
                    "run {}: method {:?}, N = {:?}, J = {}, seed {s}",
                    c.experiment.name, c.experiment.method, c.chain.sites, c.chain.coupling
                )],
                dir,
            )
        }
        Command::Reproduce { figure, nmax, samples } => {
            let f: Figure = figure.parse()?;
            if f == Figure::Fig5 {
                experiments::chain(*nmax, reproduce::COUPLING)?;
            }
            (vec![format!("reproduce {}: {} (nmax {nmax}, samples {samples}, seed {})", f.id(), f.description(), seed(g))], out(f.id()))
        }
    })
}

fn adiabatic_section(schedule: ScheduleArg, f0: f64, mu: f64, tf: f64, horizon: f64, threshold: f64) -> AdiabaticSection {
    AdiabaticSection {
        schedule: match schedule {
            ScheduleArg::Linear => ScheduleKind::Linear,
            ScheduleArg::Exp => ScheduleKind::Exp,
        },
        f0,
        mu,
        t_f: tf,
        horizon,
        threshold,
        ..Default::default()
    }
}

fn optimize_section(tf: Option<f64>, k: Option<usize>, starts: usize, target: Option<f64>) -> OptimizeSection {
    OptimizeSection { t_f: tf, slices: k, starts, fidelity_target: target, ..Default::default() }
}

fn compute(cli: &Cli) -> Result<(Artifacts, bool)> {
    let g = &cli.global;
    let s = seed(g);
    let a = match &cli.command {
        Command::Decompose { chain, f0, alpha, beta, delta } => {
            let spec = experiments::chain(chain.n, chain.j)?;
            experiments::decompose(&spec, *f0, DecompositionParams { alpha: *alpha, beta: *beta, delta: *delta })?
        }
        Command::Spectrum { chain, fmin, fmax, points } => {
            experiments::spectrum(&experiments::chain(chain.n, chain.j)?, *fmin, *fmax, *points)?.0
        }
        Command::Adiabatic { chain, schedule, f0, mu, tf, horizon, threshold } => {
            let spec = experiments::chain(chain.n, chain.j)?;
            let (mut a, r) = experiments::adiabatic_runs(&[spec], &adiabatic_section(*schedule, *f0, *mu, *tf, *horizon, *threshold))?;
            a.summary = vec![
                "t_threshold,asymptotic_F".into(),
                format!("{},{}", crate::format::g12_opt(r[0].t_threshold), crate::format::g12(r[0].asymptotic_f)),
            ];
            a
        }
        Command::Lyapunov { chain, kappa, tf, dt, f0 } => {
            let spec = experiments::chain(chain.n, chain.j)?;
            let section = LyapunovSection { kappa: *kappa, t_f: *tf, dt: *dt, f0: *f0, ..Default::default() };
            let (mut a, r) = experiments::lyapunov_runs(&[spec], &section)?;
            a.summary = vec![
                "final_F,final_V".into(),
                format!("{},{}", crate::format::g12(r[0].trajectory.final_fidelity()), crate::format::g12(r[0].final_v)),
            ];
            a
        }
        Command::Optimize { chain, tf, k, starts, target } => {
            let spec = experiments::chain(chain.n, chain.j)?;
            let (mut a, r) = experiments::optimize_runs(&[spec], &optimize_section(*tf, *k, *starts, *target), s)?;
            a.summary = vec![
                "F,iters,grad_norm".into(),
                format!("{},{},{}", crate::format::g12(r[0].fidelity), r[0].iterations, crate::format::g12(r[0].gradient_norm)),
            ];
            a
        }
        Command::ScanMinTime { nmin, nmax, j, target } => {
            let section = ScanSection { fidelity_target: *target, ..Default::default() };
            let ns: Vec<usize> = (*nmin..=*nmax).collect();
            let (mut a, _) = experiments::scan_min_time(&ns, *j, experiments::scan_options(&section, s))?;
            a.summary.push(a.file("scan_min_time.csv").unwrap_or_default().trim_end().to_string());
            a
        }
        Command::Robustness { n, j, method, kind, values, samples, f0, dt } => {
            let spec = experiments::chain(*n, *j)?;
            let req = SweepRequest {
                method: method.parse()?,
                kind: kind.parse()?,
                values,
                samples: *samples,
                seed: s,
                f0: *f0,
                lindblad_dt: *dt,
            };
            experiments::robustness_run(&spec, &req)?.0
        }
        Command::Run { config } => {
            let c = ExperimentConfig::load(config)?;
            let plot = g.plot || c.experiment.plot.unwrap_or(false);
            return Ok((run_config(&c, g.seed.or(c.experiment.seed).unwrap_or(0))?, plot));
        }
        Command::Reproduce { figure, nmax, samples } => {
            let opts = ReproduceOptions { seed: s, nmax: *nmax, samples: *samples };
            reproduce::reproduce(figure.parse()?, &opts)?
        }
    };
    Ok((a, g.plot))
}

/// Runs a parsed config.
pub fn run_config(c: &ExperimentConfig, seed: u64) -> Result<Artifacts> {
    let specs: Vec<_> = c.chain.sites.iter().map(|&n| experiments::chain(n, c.chain.coupling)).collect::<Result<_>>()?;
    Ok(match c.experiment.method {
        ExperimentMethod::Decompose => {
            let mut a = Artifacts::default();
            for s in &specs {
                a.extend(experiments::decompose(s, experiments::signed_f0(s, 10.0), DecompositionParams::default())?);
            }
            a
        }
        ExperimentMethod::Spectrum => {
            let sp = c.spectrum();
            let mut a = Artifacts::default();
            for s in &specs {
                a.extend(experiments::spectrum(s, sp.f_min, sp.f_max, sp.points)?.0);
            }
            a
        }
        ExperimentMethod::Adiabatic => experiments::adiabatic_runs(&specs, &c.adiabatic())?.0,
        ExperimentMethod::Lyapunov => experiments::lyapunov_runs(&specs, &c.lyapunov())?.0,
        ExperimentMethod::Optimize => experiments::optimize_runs(&specs, &c.optimize(), seed)?.0,
        ExperimentMethod::ScanMinTime => {
            experiments::scan_min_time(&c.chain.sites, c.chain.coupling, experiments::scan_options(&c.scan(), seed))?.0
        }
        ExperimentMethod::Robustness => {
            let r = c.robustness.as_ref().expect("validated on load");
            let mut a = Artifacts::default();
            for s in &specs {
                let req = SweepRequest {
                    method: r.method()?,
                    kind: r.kind()?,
                    values: &r.values,
                    samples: r.samples,
                    seed,
                    f0: r.f0,
                    lindblad_dt: r.dt,
                };
                a.extend(experiments::robustness_run(s, &req)?.0);
            }
            a
        }
    })
}
