//! Command-line front end: `run`, `converge`, `compare`, `verify`.
//!
//! Exit codes: 0 success, 1 bad scenario or i/o failure, 2 numerical
//! failure (non-convergence, singular field), 3 a `verify` check failed,
//! 64 usage error.

pub mod csv;
pub mod svg;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{compare_methods, convergence_study, run_scenario, RunOutput, Scenario};
use crate::integrators::MethodId;
use crate::observables::ObservableSample;
use svg::Series;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "cpdyn",
    version,
    about = "Structure-preserving integrators for charged-particle dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one scenario and write the observable series.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Global-error convergence study against an RK4 reference.
    Converge {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Comma-separated stepsizes.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
        h_list: Vec<f64>,
        /// Integration interval for the study.
        #[arg(long, default_value_t = 10.0)]
        t_short: f64,
        /// Methods to study (defaults to the scenario's method).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<MethodId>,
    },
    /// Run several methods on the same scenario.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, value_delimiter = ',', default_value = "tsm1,tsm2,boris,varm")]
        methods: Vec<MethodId>,
    },
    /// Fast internal consistency checks.
    Verify,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long, env = "CPDYN_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

/// Scenario overrides. Each flag maps onto one scenario-file key and is
/// applied after the file, in the order listed here. Enumerated and scalar
/// flags are checked by the parser, so malformed values are usage errors.
#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_parser = ["experiment", "constant-b", "quadratic", "free"])]
    field: Option<String>,
    /// Constant field vector, `b1,b2,b3`.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Symmetric 3x3 matrix, 9 comma-separated entries row by row.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q_lin: Option<String>,
    #[arg(long)]
    axis_floor: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    method: Option<MethodId>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<String>,
    #[arg(long, value_parser = ["default", "tsm1", "reference"])]
    starter: Option<String>,
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    solver_max_iter: Option<usize>,
    #[arg(long)]
    solver_damping: Option<f64>,
    /// `auto` or a positive integer.
    #[arg(long)]
    sample_every: Option<String>,
    #[arg(long, value_parser = ["midpoint", "endpoint"])]
    observe: Option<String>,
    #[arg(long)]
    avf_order: Option<usize>,
    /// `auto` (meaning 1/eps) or a number.
    #[arg(long, allow_hyphen_values = true)]
    momentum_scale: Option<String>,
}

impl ScenarioArgs {
    fn build(&self) -> Result<Scenario> {
        let mut sc = match &self.scenario {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Scenario::from_kv_str(&text)?
            }
            None => Scenario::default(),
        };
        let num = |v: Option<f64>| v.map(|v| format!("{v:?}"));
        let int = |v: Option<usize>| v.map(|v| v.to_string());
        let overrides = [
            ("field", self.field.clone()),
            ("field.b", self.b.clone()),
            ("field.q", self.q.clone()),
            ("field.q_lin", self.q_lin.clone()),
            ("field.axis_floor", num(self.axis_floor)),
            ("eps", num(self.eps)),
            ("method", self.method.map(|m| m.name().to_string())),
            ("h", num(self.h)),
            ("t_end", num(self.t_end)),
            ("x0", self.x0.clone()),
            ("v0", self.v0.clone()),
            ("starter", self.starter.clone()),
            ("solver.tol", num(self.solver_tol)),
            ("solver.max_iter", int(self.solver_max_iter)),
            ("solver.damping", num(self.solver_damping)),
            ("sample_every", self.sample_every.clone()),
            ("observe", self.observe.clone()),
            ("avf_order", int(self.avf_order)),
            ("momentum_scale", self.momentum_scale.clone()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                sc.set(key, &v)?;
            }
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run { scenario, output } => {
            let sc = scenario.build()?;
            let run = run_scenario(&sc)?;
            let dir = prepare(&output.out)?;
            csv::emit_csv(&run, &dir.join("series.csv"))?;
            csv::write_text(&dir.join("drift.csv"), &csv::drift_to_string(&[&run]))?;
            if output.svg {
                write_run_plots(&[&run], &dir)?;
            }
            summarize(out, &run)?;
            writeln!(out, "wrote {}", dir.display())?;
            Ok(EXIT_OK)
        }
        Command::Converge {
            scenario,
            output,
            h_list,
            t_short,
            methods,
        } => {
            let sc = scenario.build()?;
            let methods = if methods.is_empty() { vec![sc.method] } else { methods };
            let tables = methods
                .iter()
                .map(|&m| convergence_study(&sc.clone().with_method(m), &h_list, t_short))
                .collect::<Result<Vec<_>>>()?;
            let dir = prepare(&output.out)?;
            csv::write_text(&dir.join("convergence.csv"), &csv::convergence_to_string(&tables))?;
            if output.svg {
                let series: Vec<Series> = tables
                    .iter()
                    .map(|t| Series {
                        label: format!("{} (slope {:.2})", t.method, t.slope),
                        points: t
                            .rows
                            .iter()
                            .filter(|r| r.global_error > 0.0)
                            .map(|r| (r.h.log10(), r.global_error.log10()))
                            .collect(),
                    })
                    .collect();
                svg::emit_svg(
                    &series,
                    &dir.join("convergence.svg"),
                    "global error",
                    "log10 h",
                    "log10 error",
                )?;
            }
            for t in &tables {
                writeln!(out, "{}: slope {:.4}", t.method, t.slope)?;
                for r in &t.rows {
                    writeln!(out, "  h = {:<10} error = {:.6e}", r.h, r.global_error)?;
                }
            }
            writeln!(out, "wrote {}", dir.display())?;
            Ok(EXIT_OK)
        }
        Command::Compare {
            scenario,
            output,
            methods,
        } => {
            let sc = scenario.build()?;
            if methods.is_empty() {
                return Err(Error::InvalidScenario("no methods to compare".into()));
            }
            let scs: Vec<Scenario> = methods.iter().map(|&m| sc.clone().with_method(m)).collect();
            let cmp = compare_methods(&scs)?;
            let dir = prepare(&output.out)?;
            let runs: Vec<&RunOutput> = cmp.runs.iter().collect();
            csv::write_text(&dir.join("compare.csv"), &csv::drift_to_string(&runs))?;
            for run in &runs {
                csv::emit_csv(run, &dir.join(format!("series_{}.csv", run.scenario.method)))?;
                summarize(out, run)?;
            }
            if output.svg {
                write_run_plots(&runs, &dir)?;
            }
            writeln!(out, "wrote {}", dir.display())?;
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let rep = verify::run_verification();
            for c in &rep.checks {
                writeln!(
                    out,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
            }
            Ok(if rep.passed() { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

fn prepare(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn summarize(out: &mut dyn Write, run: &RunOutput) -> Result<()> {
    let sc = &run.scenario;
    let b0 = sc.model()?.magnetic_field(sc.x0).norm();
    writeln!(
        out,
        "{}: {} steps, h = {}, h|B(x0)|/eps = {:.4}, {} samples, {:.2?}",
        sc.method,
        run.steps,
        sc.h,
        sc.h * b0 / sc.eps,
        run.samples.len(),
        run.wall_time
    )?;
    for (name, d) in run.drift.entries() {
        writeln!(
            out,
            "  {name:<3} max|dev| = {:.3e}  final = {:+.3e}",
            d.max_abs_dev, d.final_dev
        )?;
    }
    let st = &run.solver_stats;
    if st.solves > 0 {
        writeln!(
            out,
            "  solver: mean {:.2} iterations, max {}, max residual {:.1e}",
            st.mean_iterations(),
            st.max_iterations,
            st.max_residual
        )?;
    }
    Ok(())
}

fn deviation_series(
    runs: &[&RunOutput],
    pick: fn(&ObservableSample) -> Option<f64>,
    label: impl Fn(&RunOutput, &str) -> String,
    tag: &str,
) -> Vec<Series> {
    runs.iter()
        .filter_map(|run| {
            let q0 = run.samples.first().and_then(pick)?;
            Some(Series {
                label: label(run, tag),
                points: run
                    .samples
                    .iter()
                    .filter_map(|s| pick(s).map(|q| (s.t, q - q0)))
                    .collect(),
            })
        })
        .collect()
}

/// `energy.svg`, `momentum.svg` and `moment.svg`, skipping quantities that
/// are undefined for every run.
fn write_run_plots(runs: &[&RunOutput], dir: &Path) -> Result<()> {
    let label = |run: &RunOutput, tag: &str| {
        if runs.len() == 1 {
            tag.to_string()
        } else {
            format!("{} {tag}", run.scenario.method)
        }
    };
    let mut energy = deviation_series(runs, |s| Some(s.energy), label, "E");
    if runs.len() == 1 {
        energy.extend(deviation_series(runs, |s| s.modified_energy, label, "Hh"));
    }
    let momentum = deviation_series(runs, |s| s.momentum, label, "M");
    let mut moment = deviation_series(runs, |s| s.moment, label, "I");
    if runs.len() == 1 {
        moment.extend(deviation_series(runs, |s| s.modified_moment, label, "Ih"));
    }
    for (name, series, y) in [
        ("energy", energy, "Q(t) - Q(0)"),
        ("momentum", momentum, "M(t) - M(0)"),
        ("moment", moment, "Q(t) - Q(0)"),
    ] {
        if !series.is_empty() {
            svg::emit_svg(&series, &dir.join(format!("{name}.svg")), name, "t", y)?;
        }
    }
    Ok(())
}
