//! Command-line driver.
//!
//! Subcommands `eval`, `field`, `paths` and `optimize` share one set of
//! flags ([`RunConfig`]); `--config file.json` supplies the same fields and
//! explicit flags take precedence. Everything is computed in memory before
//! any output file is written.
//!
//! Exit codes: 0 success, 2 usage, 3 budget exhausted, 4 numeric failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::adjoint::gradient;
use crate::error::Error;
use crate::kernel::{KernelKind, Sharpness};
use crate::optimize::{discrete_objective, run_optimization, sweep, Method, OptimizerConfig};
use crate::programs::{Corpus, Program};
use crate::tracer::{trace, TraceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "smoothad",
    version,
    about = "Smoothed evaluation, gradients and optimization of branching programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smoothed value, total contribution and path count at one input
    Eval(RunConfig),
    /// Value and gradient over a 2-D grid, as CSV
    Field(RunConfig),
    /// One JSON line per evaluated path
    Paths(RunConfig),
    /// Optimize the smoothed program, or sweep over sharpness and step counts
    Optimize(RunConfig),
}

/// Flags shared by all subcommands. Every field may also come from the JSON
/// file given by `--config`.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with defaults for any of these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Program name
    #[arg(long)]
    pub program: Option<String>,
    /// Comma-separated input vector
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub input: Option<Vec<f64>>,

    /// Sharpness: a positive number or `inf`
    #[arg(long)]
    pub h: Option<Sharpness>,
    /// Pruning threshold
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// logistic | gauss
    #[arg(long)]
    pub kernel: Option<KernelKind>,
    #[arg(long)]
    pub max_paths: Option<usize>,
    #[arg(long)]
    pub max_conditions: Option<usize>,

    #[arg(long, allow_hyphen_values = true)]
    pub x1_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x1_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x2_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x2_max: Option<f64>,
    /// Grid points per axis
    #[arg(long)]
    pub resolution: Option<usize>,

    /// Output file; standard output when absent
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// gd | adam
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Comma-separated start point
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    /// Sharpness values of a sweep
    #[arg(long, value_delimiter = ',')]
    pub sweep_h: Option<Vec<Sharpness>>,
    /// Step counts of a sweep
    #[arg(long, value_delimiter = ',')]
    pub sweep_steps: Option<Vec<usize>>,
    /// Directory for per-run trajectory CSVs
    #[arg(long)]
    pub trajectory_dir: Option<PathBuf>,
    /// Also report the unsmoothed objective at the final iterate
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub discrete_objective: Option<bool>,
}

macro_rules! prefer_flags {
    ($flags:expr, $file:expr, $($f:ident),+) => {
        RunConfig { $($f: $flags.$f.or($file.$f),)+ }
    };
}

impl RunConfig {
    /// Flags override the file.
    fn over(self, file: RunConfig) -> RunConfig {
        prefer_flags!(
            self,
            file,
            config,
            program,
            input,
            h,
            eps,
            kernel,
            max_paths,
            max_conditions,
            x1_min,
            x1_max,
            x2_min,
            x2_max,
            resolution,
            output,
            method,
            lr,
            steps,
            beta1,
            beta2,
            delta,
            start,
            sweep_h,
            sweep_steps,
            trajectory_dir,
            discrete_objective
        )
    }

    fn program(&self) -> Result<Corpus, CliError> {
        let name = self
            .program
            .as_deref()
            .ok_or_else(|| CliError::Usage("--program is required".into()))?;
        Ok(Corpus::from_name(name)?)
    }

    fn trace_config(&self) -> Result<TraceConfig, CliError> {
        let mut c = TraceConfig::default();
        if let Some(h) = self.h {
            c.h = h;
        }
        if let Some(k) = self.kernel {
            c.kernel = k;
        }
        if let Some(e) = self.eps {
            c.epsilon = e;
        }
        if let Some(n) = self.max_paths {
            c.max_paths = n;
        }
        if let Some(n) = self.max_conditions {
            c.max_conditions_per_path = n;
        }
        c.validate()?;
        Ok(c)
    }

    fn input_for(&self, program: &Corpus) -> Result<Vec<f64>, CliError> {
        let x = self
            .input
            .clone()
            .ok_or_else(|| CliError::Usage("--input is required".into()))?;
        if x.len() != program.arity() {
            return Err(CliError::Usage(format!(
                "{} takes {} inputs, got {}",
                program.name(),
                program.arity(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Usage("input must be finite".into()));
        }
        Ok(x)
    }

    fn grid(&self) -> Result<Grid, CliError> {
        let g = Grid {
            x1: (self.x1_min.unwrap_or(-2.0), self.x1_max.unwrap_or(2.0)),
            x2: (self.x2_min.unwrap_or(-2.0), self.x2_max.unwrap_or(2.0)),
            resolution: self.resolution.unwrap_or(41),
        };
        if g.resolution < 2 {
            return Err(CliError::Usage("resolution must be at least 2".into()));
        }
        for (lo, hi) in [g.x1, g.x2] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::Usage(format!("grid range [{lo}, {hi}] is not ordered")));
            }
        }
        Ok(g)
    }

    fn optimizer_config(&self, program: &Corpus) -> Result<OptimizerConfig, CliError> {
        let start = match (&self.start, program.recommended_start()) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => s,
            (None, None) => return Err(CliError::Usage("--start is required".into())),
        };
        if start.len() != program.arity() {
            return Err(CliError::Usage(format!(
                "{} takes {} inputs, start has {}",
                program.name(),
                program.arity(),
                start.len()
            )));
        }
        let mut c = OptimizerConfig::adam(start, self.steps.unwrap_or(200));
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(v) = self.lr {
            c.learning_rate = v;
        }
        if let Some(v) = self.beta1 {
            c.beta1 = v;
        }
        if let Some(v) = self.beta2 {
            c.beta2 = v;
        }
        if let Some(v) = self.delta {
            c.delta = v;
        }
        c.validate()?;
        Ok(c)
    }
}

struct Grid {
    x1: (f64, f64),
    x2: (f64, f64),
    resolution: usize,
}

impl Grid {
    fn axis(range: (f64, f64), n: usize, i: usize) -> f64 {
        if i == n - 1 {
            range.1
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    /// Row-major points, `x2` varying fastest.
    fn points(&self) -> Vec<[f64; 2]> {
        let n = self.resolution;
        (0..n * n)
            .map(|k| [Self::axis(self.x1, n, k / n), Self::axis(self.x2, n, k % n)])
            .collect()
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(..) => EXIT_USAGE,
            CliError::Run(e) if e.is_budget() => EXIT_BUDGET,
            CliError::Run(e) => match e.root() {
                Error::InvalidConfig(_) | Error::InvalidSharpness(_) | Error::InputArity { .. } => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Io(p, e) => format!("{}: {e}", p.display()),
            CliError::Run(e) => e.to_string(),
        }
    }
}

/// Where a subcommand's main result goes.
struct Sink<'a> {
    path: Option<&'a Path>,
    stdout: &'a mut dyn Write,
}

impl Sink<'_> {
    fn emit(&mut self, contents: &str) -> Result<(), CliError> {
        match self.path {
            Some(p) => std::fs::write(p, contents).map_err(|e| CliError::Io(p.to_path_buf(), e)),
            None => self
                .stdout
                .write_all(contents.as_bytes())
                .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

fn load(flags: RunConfig) -> Result<RunConfig, CliError> {
    let Some(path) = flags.config.clone() else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
    let file: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(flags.over(file))
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Eval(c) => cmd_eval(load(c)?, stdout),
        Command::Field(c) => cmd_field(load(c)?, stdout),
        Command::Paths(c) => cmd_paths(load(c)?, stdout, stderr),
        Command::Optimize(c) => cmd_optimize(load(c)?, stdout, stderr),
    }
}

fn cmd_eval(cfg: RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let program = cfg.program()?;
    let tc = cfg.trace_config()?;
    let x = cfg.input_for(&program)?;
    let r = trace(&program, &x, &tc)?;
    let line = json!({
        "value": r.value,
        "total_kappa": r.total_kappa,
        "paths_evaluated": r.paths_evaluated,
    });
    Sink {
        path: cfg.output.as_deref(),
        stdout,
    }
    .emit(&format!("{line}\n"))
}

fn cmd_field(cfg: RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let program = cfg.program()?;
    if program.arity() != 2 {
        return Err(CliError::Usage(format!(
            "{} is not a function of two inputs",
            program.name()
        )));
    }
    let tc = cfg.trace_config()?;
    let grid = cfg.grid()?;
    let rows = grid
        .points()
        .par_iter()
        .map(|x| gradient(&program, x, &tc).map(|g| (*x, g)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = String::from("x1,x2,value,dv_dx1,dv_dx2,paths\n");
    for (x, g) in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            x[0], x[1], g.value, g.gradient[0], g.gradient[1], g.paths_evaluated
        )
        .unwrap();
    }
    Sink {
        path: cfg.output.as_deref(),
        stdout,
    }
    .emit(&s)
}

fn cmd_paths(cfg: RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let program = cfg.program()?;
    let tc = cfg.trace_config()?.recording();
    let x = cfg.input_for(&program)?;
    let r = trace(&program, &x, &tc)?;
    let mut s = String::new();
    for rec in r.path_records.iter().flatten() {
        s.push_str(&serde_json::to_string(rec).expect("path records serialize"));
        s.push('\n');
    }
    Sink {
        path: cfg.output.as_deref(),
        stdout,
    }
    .emit(&s)?;
    let summary = json!({ "paths_evaluated": r.paths_evaluated, "total_kappa": r.total_kappa });
    let _ = writeln!(stderr, "{summary}");
    Ok(())
}

fn write_files(files: &[(PathBuf, String)]) -> Result<(), CliError> {
    for (p, contents) in files {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
        }
        std::fs::write(p, contents).map_err(|e| CliError::Io(p.clone(), e))?;
    }
    Ok(())
}

/// `table.csv` becomes `table.discrete.csv`.
fn discrete_sibling(p: &Path) -> PathBuf {
    let stem = p
        .file_stem()
        .map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
    p.with_file_name(format!("{stem}.discrete.csv"))
}

fn cmd_optimize(cfg: RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let program = cfg.program()?;
    let tc = cfg.trace_config()?;
    let opt = cfg.optimizer_config(&program)?;
    let want_discrete = cfg.discrete_objective.unwrap_or(false);

    let Some(hs) = cfg.sweep_h.clone() else {
        if cfg.sweep_steps.is_some() {
            return Err(CliError::Usage("--sweep-steps requires --sweep-h".into()));
        }
        let t = run_optimization(&program, &opt, &tc)?;
        let last = t.last();
        let mut summary = json!({
            "final_iterate": last.iterate,
            "final_objective": last.objective,
        });
        if want_discrete {
            summary["discrete_objective"] = json!(discrete_objective(&program, &last.iterate)?);
        }
        let mut files = Vec::new();
        if let Some(dir) = &cfg.trajectory_dir {
            files.push((dir.join(format!("h{}_steps{}.csv", tc.h, opt.steps)), t.to_csv()));
        }
        Sink {
            path: cfg.output.as_deref(),
            stdout,
        }
        .emit(&t.to_csv())?;
        write_files(&files)?;
        let _ = writeln!(stderr, "{summary}");
        return Ok(());
    };

    let steps = cfg.sweep_steps.clone().unwrap_or_else(|| vec![opt.steps]);
    if hs.is_empty() || steps.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one sharpness and one step count".into(),
        ));
    }
    let result = sweep(&program, &opt, &tc, &hs, &steps)?;
    let discrete = if want_discrete {
        Some(result.with_discrete_objectives(&program)?)
    } else {
        None
    };

    let mut files = Vec::new();
    if let Some(dir) = &cfg.trajectory_dir {
        for (h, t) in result.sharpness.iter().zip(&result.trajectories) {
            for &n in &result.steps {
                files.push((dir.join(format!("h{h}_steps{n}.csv")), t.truncated(n).to_csv()));
            }
        }
    }
    match (&cfg.output, &discrete) {
        (Some(p), Some(d)) => files.push((discrete_sibling(p), d.to_csv())),
        (None, Some(d)) => {
            let _ = write!(stderr, "discrete objective\n{}", d.to_csv());
        }
        _ => {}
    }
    Sink {
        path: cfg.output.as_deref(),
        stdout,
    }
    .emit(&result.to_csv())?;
    write_files(&files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("smoothad").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn value(stdout: &str) -> f64 {
        let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
        v["value"][0].as_f64().unwrap()
    }

    #[test]
    fn eval_examples() {
        let (code, out, _) = call(&[
            "eval",
            "--program",
            "listing1_f",
            "--input",
            "0,0",
            "--h",
            "1",
            "--eps",
            "1e-12",
        ]);
        assert_eq!(code, 0);
        assert!((value(&out) - 0.619203).abs() < 1e-6);
        let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["paths_evaluated"], 4);

        let (_, out, _) = call(&["eval", "--program", "step", "--input", "0", "--h", "1"]);
        assert!((value(&out) - 0.5).abs() < 1e-15);

        let (_, out, _) = call(&["eval", "--program", "crescent", "--input", "0,1", "--h", "inf"]);
        assert_eq!(value(&out), 2.0);
    }

    #[test]
    fn negative_inputs_parse() {
        let (code, out, _) = call(&["eval", "--program", "crescent", "--input", "-1.5,2", "--h", "inf"]);
        assert_eq!(code, 0);
        assert!(value(&out) > 0.0);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["eval", "--program", "nope", "--input", "0"]).0, EXIT_USAGE);
        assert_eq!(call(&["eval", "--program", "step", "--input", "0,1"]).0, EXIT_USAGE);
        assert_eq!(
            call(&["eval", "--program", "step", "--input", "0", "--h", "0"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            call(&["eval", "--program", "step", "--input", "0", "--eps", "0.7"]).0,
            EXIT_USAGE
        );
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(
            call(&["field", "--program", "crescent", "--resolution", "1"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            call(&["field", "--program", "crescent", "--x1-min", "1", "--x1-max", "0"]).0,
            EXIT_USAGE
        );
        assert_eq!(call(&["field", "--program", "step"]).0, EXIT_USAGE);
    }

    #[test]
    fn budget_error_code() {
        let (code, _, err) = call(&[
            "eval",
            "--program",
            "listing1_f",
            "--input",
            "0,0",
            "--eps",
            "1e-12",
            "--max-paths",
            "2",
        ]);
        assert_eq!(code, EXIT_BUDGET);
        assert!(err.contains("budget"));
    }

    #[test]
    fn help_is_not_an_error() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("optimize"));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        std::fs::write(&p, r#"{"program": "step", "input": [0.0], "h": "inf"}"#).unwrap();
        let cfg = p.to_str().unwrap();
        let (_, out, _) = call(&["eval", "--config", cfg]);
        assert_eq!(value(&out), 1.0);
        let (_, out, _) = call(&["eval", "--config", cfg, "--h", "1"]);
        assert!((value(&out) - 0.5).abs() < 1e-15);

        std::fs::write(&p, r#"{"program": "step", "bogus": 1}"#).unwrap();
        assert_eq!(call(&["eval", "--config", cfg]).0, EXIT_USAGE);
    }

    #[test]
    fn grid_covers_both_ends() {
        let g = Grid {
            x1: (-1.0, 1.0),
            x2: (0.0, 0.3),
            resolution: 4,
        };
        let pts = g.points();
        assert_eq!(pts.len(), 16);
        assert_eq!(pts[0], [-1.0, 0.0]);
        assert_eq!(pts[15], [1.0, 0.3]);
        assert_eq!(pts[1][0], -1.0);
    }
}
