//! Command-line front end.
//!
//! Exit codes: `0` success, `1` runtime failure (I/O, integration blowup),
//! `2` invalid arguments or scenario, `3` non-convergence under `--strict`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};
use tbopt::{
    basic_reproduction_number, compare_strategies, load_scenario, solve, summary_csv,
    trajectory_csv, Error, InitialCase, ModelParams, Scenario, SolveReport, StrategyMask,
    SummaryLine, TimeGrid,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "tbopt",
    version,
    about = "Optimal TB treatment control by forward-backward sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario and write its trajectory and a one-row summary.
    Solve(ScenarioArgs),
    /// Solve strategies 1-3 and the uncontrolled baseline side by side.
    Compare(ScenarioArgs),
    /// Print the basic reproduction number.
    R0(ScenarioArgs),
    /// Vary one model parameter over a range and summarize each value.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Initial-value preset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    case: Option<u8>,
    /// 0 = uncontrolled, 1 = u1 only, 2 = u2 only, 3 = both.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    strategy: Option<u8>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    relaxation: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    w1: Option<f64>,
    #[arg(long)]
    w2: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Exit with status 3 if any solve fails to converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Model parameter to vary (e.g. `beta`, `w1`, `tau2`).
    #[arg(long)]
    param: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    /// Number of evenly spaced values, endpoints included.
    #[arg(long, default_value_t = 5)]
    count: usize,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl ScenarioArgs {
    fn build(&self) -> Result<Scenario, Failure> {
        let mut s = match &self.scenario {
            Some(path) => load_scenario(path)?,
            None => Scenario::default(),
        };
        if let Some(case) = self.case {
            let case = InitialCase::from_number(case).expect("range checked by clap");
            s.initial = case.initial(s.params.n_total);
            s.case_label = case.label().to_string();
        }
        if let Some(k) = self.strategy {
            s.strategy = StrategyMask::from_index(k).expect("range checked by clap");
        }
        if let Some(v) = self.beta {
            s.params.beta = v;
        }
        if let Some(v) = self.w1 {
            s.params.w1 = v;
        }
        if let Some(v) = self.w2 {
            s.params.w2 = v;
        }
        if let Some(n) = self.n_steps {
            s.solver.grid = TimeGrid::new(0.0, s.params.horizon, n)?;
        }
        if let Some(v) = self.tol {
            s.solver.tol = v;
        }
        if let Some(v) = self.relaxation {
            s.solver.relaxation = v;
        }
        if let Some(v) = self.max_iters {
            s.solver.max_iters = v;
        }
        s.validate()?;
        Ok(s)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn describe(report: &SolveReport) -> String {
    format!(
        "{:<13} J = {:>10.1}  I(T)+L2(T) = {:>8.1}  iterations = {:>3}  converged = {}",
        report.mask.label(),
        report.objective,
        report.terminal_infected_plus_latent,
        report.iterations,
        report.converged
    )
}

fn warn_diagnostics(report: &SolveReport, err: &mut impl Write) {
    let d = report.diagnostics;
    if d.min_state < 0.0 {
        let _ = writeln!(
            err,
            "warning: {}: negative compartment value {} (refine the grid)",
            report.mask.label(),
            d.min_state
        );
    }
    if d.conservation_drift > 1e-6 {
        let _ = writeln!(
            err,
            "warning: {}: population drift {:.3e} of N",
            report.mask.label(),
            d.conservation_drift
        );
    }
}

fn cmd_solve(
    args: &ScenarioArgs,
    out: &mut impl Write,
    err: &mut impl Write,
) -> Result<i32, Failure> {
    let s = args.build()?;
    let report = solve(s.initial, &s.params, s.strategy, &s.solver)?;
    warn_diagnostics(&report, err);
    ensure_dir(&args.out)?;
    let label = format!("{}_{}", s.case_label, s.strategy.label());
    let traj_path = args.out.join(format!("trajectory_{label}.csv"));
    write_file(&traj_path, &trajectory_csv(&report, &s.params)?)?;
    let summary = summary_csv([SummaryLine {
        label: s.strategy.label(),
        report: Some(&report),
    }]);
    write_file(&args.out.join("summary.csv"), &summary)?;
    let _ = writeln!(out, "{}", describe(&report));
    let _ = writeln!(out, "wrote {}", traj_path.display());
    Ok(if args.strict && !report.converged {
        let _ = writeln!(
            err,
            "error: {} did not converge in {} iterations",
            s.strategy.label(),
            report.iterations
        );
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

fn cmd_compare(
    args: &ScenarioArgs,
    out: &mut impl Write,
    err: &mut impl Write,
) -> Result<i32, Failure> {
    let s = args.build()?;
    let rows = compare_strategies(s.initial, &s.params, &s.solver);
    ensure_dir(&args.out)?;
    let mut failed = false;
    let mut unconverged = false;
    for row in &rows {
        match &row.outcome {
            Ok(report) => {
                warn_diagnostics(report, err);
                unconverged |= !report.converged;
                let path =
                    args.out
                        .join(format!("trajectory_{}_{}.csv", s.case_label, row.label()));
                write_file(&path, &trajectory_csv(report, &s.params)?)?;
                let _ = writeln!(out, "{}", describe(report));
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(err, "error: {}: {e}", row.label());
                let _ = writeln!(out, "{:<13} failed", row.label());
            }
        }
    }
    let summary_path = args.out.join("summary.csv");
    write_file(
        &summary_path,
        &summary_csv(rows.iter().map(SummaryLine::from)),
    )?;
    let _ = writeln!(out, "wrote {}", summary_path.display());
    Ok(if failed {
        EXIT_FAILURE
    } else if args.strict && unconverged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

fn cmd_r0(args: &ScenarioArgs, out: &mut impl Write) -> Result<i32, Failure> {
    let s = args.build()?;
    let r0 = basic_reproduction_number(&s.params)?;
    let _ = writeln!(out, "{r0:.2}");
    Ok(EXIT_OK)
}

fn sweep_values(from: f64, to: f64, count: usize) -> Result<Vec<f64>, Failure> {
    if count == 0 || !from.is_finite() || !to.is_finite() {
        return Err(Failure::Invalid(
            "sweep needs finite --from/--to and --count >= 1".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![from]);
    }
    let step = (to - from) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k == count - 1 {
                to
            } else {
                from + k as f64 * step
            }
        })
        .collect())
}

fn cmd_sweep(args: &SweepArgs, out: &mut impl Write, err: &mut impl Write) -> Result<i32, Failure> {
    let base = args.scenario.build()?;
    if ModelParams::default().field_mut(&args.param).is_none() {
        let names: Vec<_> = ModelParams::default()
            .fields()
            .iter()
            .map(|(n, _)| *n)
            .collect();
        return Err(Failure::Invalid(format!(
            "unknown parameter `{}`; expected one of {}",
            args.param,
            names.join(", ")
        )));
    }
    let mut scenarios = Vec::new();
    for value in sweep_values(args.from, args.to, args.count)? {
        let mut s = base.clone();
        *s.params.field_mut(&args.param).expect("checked above") = value;
        if args.param == "horizon" {
            s.solver.grid = TimeGrid::new(0.0, value, s.solver.grid.n_steps)?;
        }
        if args.param == "n_total" {
            let fractions = base.initial.fractions(base.params.n_total);
            s.initial = tbopt::StateVec::from_array(fractions.map(|f| f * value));
        }
        s.validate()
            .map_err(|e| Failure::Invalid(format!("{} = {value}: {e}", args.param)))?;
        scenarios.push((value, s));
    }

    let results: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|(_, s)| scope.spawn(move || solve(s.initial, &s.params, s.strategy, &s.solver)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Domain("solver thread panicked".into())))
            })
            .collect()
    });

    let mut text = format!("{},{}\n", args.param, tbopt::SUMMARY_HEADER);
    let mut failed = false;
    let mut unconverged = false;
    for ((value, s), result) in scenarios.iter().zip(&results) {
        let line = SummaryLine {
            label: s.strategy.label(),
            report: result.as_ref().ok(),
        };
        let row = summary_csv([line]);
        let row = row.lines().nth(1).expect("one data row");
        text.push_str(&format!("{value},{row}\n"));
        match result {
            Ok(r) => {
                unconverged |= !r.converged;
                let _ = writeln!(out, "{} = {value:<10} {}", args.param, describe(r));
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(err, "error: {} = {value}: {e}", args.param);
            }
        }
    }
    ensure_dir(&args.scenario.out)?;
    let path = args.scenario.out.join(format!("sweep_{}.csv", args.param));
    write_file(&path, &text)?;
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(if failed {
        EXIT_FAILURE
    } else if args.scenario.strict && unconverged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Compare(a) => cmd_compare(a, out, err),
        Command::R0(a) => cmd_r0(a, out),
        Command::Sweep(a) => cmd_sweep(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}
