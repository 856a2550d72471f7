//! The `gotlab` command line.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or input
//! error, 3 the instance is too large or misses a precondition.

mod csv;
mod grid;
mod selfcheck;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use csv::SWEEP_HEADER;
pub use grid::GridSpec;
pub use selfcheck::SUITES;

use crate::certify::{
    check_convex_smooth, implied_convexity_constants, max_quadratic_lambda, solve_potentials, ResidualFunction,
};
use crate::error::Error;
use crate::exact_ot::{solve_w2, Pairing};
use crate::measures::{presets, DiscreteMeasure};
use crate::rng::split_seed;
use crate::robustness::{g_profile, robustness_report, ReportOptions};
use crate::smoothing::{gap_curve, Allocation, GapCurve, MonteCarlo};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAPABILITY: u8 = 3;

/// Threads for the parallel pool; defaults to the machine's parallelism.
pub const THREADS_ENV: &str = "GOTLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gotlab", version, about = "Exact and Gaussian-smoothed W2 between discrete measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact W2², optimal plan and uniqueness.
    Solve(InputArgs),
    /// Largest quadratic margin and certifying potentials.
    Certify(CertifyArgs),
    /// Robustness lower bounds, radius estimate and G profile.
    Robustness(RobustnessArgs),
    /// Gap between exact and Gaussian-smoothed W2 over a grid of σ.
    Sweep(SweepArgs),
    /// Reduced-scale property suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Source measure as JSON `{"points": [...], "weights": [...]}`.
    #[arg(long, value_name = "FILE")]
    pub mu: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub nu: Option<PathBuf>,
    /// Built-in pair: cross, mu0 … mu9 (against the cross target), split, translation.
    #[arg(long, value_name = "NAME", conflicts_with_all = ["mu", "nu"])]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConvexArgs {
    /// Strong convexity of the interpolating potential.
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    /// Smoothness of the interpolating potential.
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
}

impl ConvexArgs {
    fn pair(&self) -> Option<(f64, f64)> {
        self.alpha.zip(self.beta)
    }
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub convex: ConvexArgs,
    /// Report instead of failing when the optimum is not a perfect matching.
    #[arg(long)]
    pub allow_degenerate: bool,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub convex: ConvexArgs,
    /// Estimate the robustness radius by bisection (at most 8 pairs).
    #[arg(long)]
    pub estimate_r: bool,
    /// Radii for the G profile, as START:STOP:COUNT[:log].
    #[arg(long, value_name = "SPEC")]
    pub g_grid: Option<GridSpec>,
    /// Report CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// G profile CSV; printed after the report when absent.
    #[arg(long, value_name = "FILE")]
    pub g_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Sampling {
    /// Atom counts proportional to weights.
    Proportional,
    /// Atom of each sample drawn independently.
    Multinomial,
}

impl From<Sampling> for Allocation {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::Proportional => Allocation::Proportional,
            Sampling::Multinomial => Allocation::Multinomial,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// START:STOP:COUNT[:log].
    #[arg(long, value_name = "SPEC")]
    pub sigma_grid: Option<GridSpec>,
    /// Samples per cloud.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV, or the output directory with --paper-fig2. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Sampling::Proportional)]
    pub sampling: Sampling,
    /// The two-point study: μ_k against the cross target for k = 1…4 on a
    /// log grid 0.05…1.0 of 20 points, one CSV per k.
    #[arg(long, conflicts_with_all = ["mu", "nu", "preset"])]
    pub paper_fig2: bool,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Run only this suite.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::TooLarge { .. } | Error::Precondition(_) => EXIT_CAPABILITY,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

/// Entry point of the binary: configures the thread pool and runs.
pub fn main_from_env() -> u8 {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got '{v}'");
                return EXIT_USAGE;
            }
        }
    }
    let stdout = io::stdout();
    run(std::env::args_os(), &mut stdout.lock())
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out` and errors to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Robustness(a) => cmd_robustness(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Selfcheck(a) => selfcheck::cmd_selfcheck(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Measure pair of a preset name.
pub fn preset_pair(name: &str) -> Result<(DiscreteMeasure, DiscreteMeasure), Failure> {
    let target = presets::cross_target;
    Ok(match name {
        "cross" => (presets::cross_source(), target()),
        "split" => presets::split(),
        "translation" => presets::translation(),
        _ => match name.strip_prefix("mu").and_then(|k| k.parse::<u32>().ok()) {
            Some(k) if k <= 9 => (presets::mu_k(k), target()),
            _ => return Err(Failure::usage(format!("unknown preset '{name}'"))),
        },
    })
}

fn load_file(path: &Path) -> Result<DiscreteMeasure, Failure> {
    let f = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    DiscreteMeasure::load(io::BufReader::new(f)).map_err(|e| e.context(path.display().to_string()).into())
}

impl InputArgs {
    fn load(&self) -> Result<(DiscreteMeasure, DiscreteMeasure), Failure> {
        match (&self.preset, &self.mu, &self.nu) {
            (Some(name), _, _) => preset_pair(name),
            (None, Some(mu), Some(nu)) => Ok((load_file(mu)?, load_file(nu)?)),
            _ => Err(Failure::usage("give --mu and --nu, or --preset")),
        }
    }

    fn describe(&self) -> String {
        match (&self.preset, &self.mu, &self.nu) {
            (Some(name), _, _) => format!("preset={name}"),
            (None, Some(mu), Some(nu)) => format!("mu={} nu={}", mu.display(), nu.display()),
            _ => String::new(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_solve(a: &InputArgs, out: &mut dyn Write) -> CmdResult {
    let (mu, nu) = a.load()?;
    let sol = solve_w2(&mu, &nu)?;
    writeln!(out, "w2_squared={:?} unique={}", sol.w2_squared, sol.unique.unwrap_or(false))?;
    writeln!(out, "perfect_matching={}", sol.is_perfect_matching)?;
    writeln!(out, "support:")?;
    for &(i, j, m) in &sol.plan.entries {
        writeln!(out, "  {i} -> {j} mass={m:?}")?;
    }
    Ok(EXIT_OK)
}

/// Pairing of the optimal perfect matching, or a precondition error.
fn optimal_pairing(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Option<(Pairing, bool)>, Failure> {
    let sol = solve_w2(mu, nu)?;
    match &sol.matching {
        Some(m) => Ok(Some((Pairing::new(mu.points(), nu.points(), m)?, sol.unique == Some(true)))),
        None => Ok(None),
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn cmd_certify(a: &CertifyArgs, out: &mut dyn Write) -> CmdResult {
    let (mu, nu) = a.input.load()?;
    if let Some((alpha, beta)) = a.convex.pair() {
        ResidualFunction::convex_smooth(alpha, beta)?;
    }
    let Some((p, unique)) = optimal_pairing(&mu, &nu)? else {
        if a.allow_degenerate {
            writeln!(out, "perfect_matching=false")?;
            writeln!(out, "lambda_star=0.0")?;
            writeln!(out, "note=optimal plan splits mass; no matching to certify")?;
            return Ok(EXIT_OK);
        }
        return Err(Error::Precondition("optimal plan is not a perfect matching (use --allow-degenerate)".into()).into());
    };
    let lambda = max_quadratic_lambda(&p)?;
    writeln!(out, "perfect_matching=true unique={unique}")?;
    writeln!(out, "lambda_star={lambda:?}")?;
    let residual = if lambda > 0.0 { ResidualFunction::quadratic_y(lambda / 2.0)? } else { ResidualFunction::Zero };
    let cert = solve_potentials(&p, &residual)?;
    writeln!(out, "certificate residual={residual:?} valid={}", cert.valid)?;
    writeln!(out, "phi={}", fmt_vec(&cert.phi))?;
    if cert.valid {
        writeln!(out, "min_slack={:?}", cert.min_slack(&p))?;
    }
    if let Some((alpha, beta)) = a.convex.pair() {
        let cs = check_convex_smooth(&p, alpha, beta)?;
        writeln!(out, "convex_smooth alpha={alpha:?} beta={beta:?} valid={}", cs.valid)?;
        let (lxx, lxy, lyy) = (1.0 / (beta - alpha), alpha / (beta - alpha), alpha * beta / (beta - alpha));
        let (ia, ib) = implied_convexity_constants(lxx, lxy, lyy)?;
        writeln!(out, "lambda_xx={lxx:?} lambda_xy={lxy:?} lambda_yy={lyy:?}")?;
        writeln!(out, "implied alpha={ia:?} beta={ib:?}")?;
        if cs.valid {
            writeln!(out, "convex_smooth_phi={}", fmt_vec(&cs.phi))?;
        } else if let Some(c) = &cs.negative_cycle {
            writeln!(out, "convex_smooth_violating_cycle={c:?}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_robustness(a: &RobustnessArgs, out: &mut dyn Write) -> CmdResult {
    let (mu, nu) = a.input.load()?;
    let Some((p, unique)) = optimal_pairing(&mu, &nu)? else {
        return Err(Error::Precondition("optimal plan is not a perfect matching".into()).into());
    };
    let rep = robustness_report(&p, ReportOptions { alpha_beta: a.convex.pair(), estimate_r: a.estimate_r })?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_else(|| "none".into());
    writeln!(out, "pairs={} unique={unique}", p.len())?;
    writeln!(out, "lambda_star={:?}", rep.lambda_star)?;
    writeln!(out, "lb_general={:?}", rep.lb_general)?;
    match rep.alpha_beta {
        Some((al, be)) => writeln!(out, "alpha={al:?} beta={be:?}")?,
        None => writeln!(out, "alpha=none beta=none")?,
    }
    writeln!(out, "lb_convex={}", opt(rep.lb_convex))?;
    writeln!(out, "lb_simplified={}", opt(rep.lb_simplified))?;
    writeln!(out, "r_hat={}", opt(rep.r_hat))?;
    writeln!(out, "notes: {}", rep.method_notes)?;
    let comment = a.input.describe();
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        csv::write_report(&mut w, &comment, &rep)?;
        w.flush()?;
    }
    if let Some(spec) = &a.g_grid {
        let prof = g_profile(&p, &spec.values())?;
        writeln!(
            out,
            "g_nondecreasing={} g_concave={} g_cycles_concave={} g_spread={:?}",
            prof.nondecreasing,
            prof.concave(),
            prof.cycles_concave(),
            prof.spread
        )?;
        let comment = format!("{comment} grid={spec}");
        match &a.g_out {
            Some(path) => {
                let mut w = create(path)?;
                csv::write_profile(&mut w, &comment, &prof)?;
                w.flush()?;
            }
            None => csv::write_profile(out, &comment, &prof)?,
        }
    }
    Ok(EXIT_OK)
}

/// Whether a curve shows both regimes: some `σ < r_hat` with
/// `|gap| ≤ 3·stderr` and some `σ ≥ 2·r_hat` with `gap ≥ 5·stderr`.
pub fn shows_both_regimes(curve: &GapCurve) -> (bool, bool) {
    let Some(r) = curve.r_hat else { return (false, false) };
    let flat = curve.records.iter().any(|x| x.sigma < r && x.gap.abs() <= 3.0 * x.got.stderr);
    let linear = curve.records.iter().any(|x| x.sigma >= 2.0 * r && x.gap >= 5.0 * x.got.stderr);
    (flat, linear)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    let mc = MonteCarlo::new(a.n, a.trials, a.seed).with_allocation(a.sampling.into());
    let sampling = format!("{:?}", a.sampling).to_lowercase();
    if a.paper_fig2 {
        let spec = a.sigma_grid.unwrap_or(GridSpec { start: 0.05, stop: 1.0, count: 20, log: true });
        let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
        let mut ok = true;
        for k in 1..=4u32 {
            let (mu, nu) = (presets::mu_k(k), presets::cross_target());
            let run = MonteCarlo { seed: split_seed(a.seed, k as u64), ..mc };
            let curve = gap_curve(&mu, &nu, &spec.values(), &run)?;
            let path = dir.join(format!("fig2_k{k}.csv"));
            let comment = format!(
                "preset=mu{k} grid={spec} n={} trials={} seed={} sampling={sampling}",
                a.n, a.trials, a.seed
            );
            let mut w = create(&path)?;
            csv::write_sweep(&mut w, &comment, &curve)?;
            w.flush()?;
            let (flat, linear) = shows_both_regimes(&curve);
            ok &= flat && linear;
            writeln!(
                out,
                "k={k} r_hat={} flat_below_r_hat={flat} linear_above_2r_hat={linear} file={}",
                curve.r_hat.map(|r| format!("{r:?}")).unwrap_or_default(),
                path.display()
            )?;
        }
        return Ok(if ok { EXIT_OK } else { EXIT_PROPERTY });
    }
    let spec = a.sigma_grid.ok_or_else(|| Failure::usage("--sigma-grid is required"))?;
    if !(spec.start > 0.0) {
        return Err(Failure::usage("sigma grid must be positive"));
    }
    let (mu, nu) = a.input.load()?;
    let curve = gap_curve(&mu, &nu, &spec.values(), &mc)?;
    let comment = format!(
        "{} grid={spec} n={} trials={} seed={} sampling={sampling}",
        a.input.describe(),
        a.n,
        a.trials,
        a.seed
    );
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            csv::write_sweep(&mut w, &comment, &curve)?;
            w.flush()?;
        }
        None => csv::write_sweep(out, &comment, &curve)?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (u8, String) {
        let mut buf = Vec::new();
        let code = run(std::iter::once("gotlab").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn solve_cross_preset() {
        let (code, out) = run_capture(&["solve", "--preset", "cross"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("w2_squared=4.0 unique=false"), "{out}");
    }

    #[test]
    fn presets_resolve() {
        for name in ["cross", "mu0", "mu4", "split", "translation"] {
            assert!(preset_pair(name).is_ok());
        }
        for name in ["mu10", "nope", "mu"] {
            assert_eq!(preset_pair(name).unwrap_err().code, EXIT_USAGE);
        }
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_capture(&["solve"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["certify", "--preset", "mu1", "--alpha", "2", "--beta", "1"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["certify", "--preset", "mu1", "--alpha", "2"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["sweep", "--preset", "mu1"]).0, EXIT_USAGE);
    }

    #[test]
    fn certify_split_needs_flag() {
        assert_eq!(run_capture(&["certify", "--preset", "split"]).0, EXIT_CAPABILITY);
        let (code, out) = run_capture(&["certify", "--preset", "split", "--allow-degenerate"]);
        assert_eq!(code, 0);
        assert!(out.contains("perfect_matching=false"));
    }

    #[test]
    fn failure_codes() {
        assert_eq!(Failure::from(Error::Precondition("x".into())).code, EXIT_CAPABILITY);
        assert_eq!(Failure::from(Error::TooLarge { what: "pairs", size: 9, limit: 8 }).code, EXIT_CAPABILITY);
        assert_eq!(Failure::from(Error::Invalid("x".into()).context("f")).code, EXIT_USAGE);
    }
}
