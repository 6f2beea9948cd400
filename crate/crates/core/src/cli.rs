//! Command-line front end: `solve`, `reference`, `sweep` and `quadrature`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::mesh::{Mesh, MeshError};
use crate::mop::{build_quadrature, MopError, QuadratureSet};
use crate::problem::{registry, FdeProblem, ProblemError};
use crate::solver::{mescd, IterationMode, SolveFailure, Solver, SolverConfig, SolverError, Trajectory};

const MESH_HELP: &str = "\
Mesh parameters:
  --N    total number of steps
  --M    uniform divisor, h = T/M (so N = M + mu - rho); give exactly one of --N, --M
  --mu   number of geometrically graded steps at t = 0
  --rho  the graded prefix covers rho*h, with ratio r = max(2,rho)/(max(2,rho)-1)
  mu = rho = 1 gives a uniform mesh, mu = N a purely graded one.

Exit codes: 0 ok, 1 i/o error, 2 usage, 3 solver failure, 4 quadrature failure.";

#[derive(Debug, Parser)]
#[command(name = "fhbvm", version, about = "Multi-order fractional ODE solver", after_help = MESH_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a built-in problem and report accuracy.
    Solve(SolveArgs),
    /// Build a reference by repeated mesh doubling.
    Reference(ReferenceArgs),
    /// Work-precision table over several step counts.
    Sweep(SweepArgs),
    /// Print shared-abscissae quadrature nodes and weights.
    Quadrature(QuadratureArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// p1, p2, p3, p4, p5a, p5b or p6.
    #[arg(long)]
    pub problem: String,
    /// Final time (defaults to the problem's own).
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub mu: usize,
    #[arg(long, default_value_t = 1)]
    pub rho: usize,
    #[arg(long, default_value_t = 22)]
    pub s: usize,
    /// auto, fp, blended or newton.
    #[arg(long, default_value = "auto")]
    pub mode: IterationMode,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long = "N", conflicts_with = "divisor", required_unless_present = "divisor")]
    pub n_total: Option<usize>,
    #[arg(long = "M")]
    pub divisor: Option<usize>,
    /// Trajectory CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-step diagnostics CSV.
    #[arg(long)]
    pub diag: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReferenceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long = "N", conflicts_with = "divisor", required_unless_present = "divisor")]
    pub n_total: Option<usize>,
    #[arg(long = "M")]
    pub divisor: Option<usize>,
    /// Number of mesh doublings after the base run.
    #[arg(long, default_value_t = 2)]
    pub doublings: u32,
    /// Finest solution restricted to the base mesh points.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated total step counts.
    #[arg(long = "N", value_delimiter = ',', conflicts_with = "divisor")]
    pub n_total: Vec<usize>,
    /// Comma-separated uniform divisors.
    #[arg(long = "M", value_delimiter = ',')]
    pub divisor: Vec<usize>,
    /// Work-precision CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QuadratureArgs {
    /// Comma-separated fractional orders in (0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 22)]
    pub s: usize,
    /// Nodes and weights CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("quadrature failure: {0}")]
    Quadrature(MopError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Quadrature(_) => 4,
        }
    }
}

impl From<MopError> for CliError {
    fn from(e: MopError) -> Self {
        match e {
            MopError::Invalid(msg) => CliError::Usage(msg),
            other => CliError::Quadrature(other),
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Quadrature(q) => q.into(),
            SolverError::Config(_) | SolverError::Mesh(_) => CliError::Usage(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

/// How the step count of a run is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepCount {
    Total(usize),
    Divisor(usize),
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: String,
    pub t_final: Option<f64>,
    pub steps: StepCount,
    pub mu: usize,
    pub rho: usize,
    pub s: usize,
    pub mode: IterationMode,
}

impl RunSpec {
    fn from_args(p: &ProblemArgs, steps: StepCount) -> Self {
        Self {
            problem: p.problem.clone(),
            t_final: p.t_final,
            steps,
            mu: p.mu,
            rho: p.rho,
            s: p.s,
            mode: p.mode,
        }
    }

    pub fn load_problem(&self) -> Result<FdeProblem, CliError> {
        let p = registry(&self.problem)?;
        Ok(match self.t_final {
            Some(t) => p.with_t_final(t)?,
            None => p,
        })
    }

    /// Uniform divisor `M`.
    pub fn divisor(&self) -> Result<usize, CliError> {
        match self.steps {
            StepCount::Divisor(m) => Ok(m),
            StepCount::Total(n) => (n + self.rho)
                .checked_sub(self.mu)
                .filter(|&m| m > 0)
                .ok_or_else(|| CliError::Usage(format!("N={n} must exceed mu - rho"))),
        }
    }

    pub fn mesh(&self, t_final: f64) -> Result<Mesh, CliError> {
        Ok(match self.steps {
            StepCount::Total(n) => Mesh::new(t_final, n, self.mu, self.rho)?,
            StepCount::Divisor(m) => Mesh::from_divisor(t_final, m, self.mu, self.rho)?,
        })
    }

    pub fn config(&self) -> SolverConfig {
        SolverConfig::default().with_s(self.s).with_mode(self.mode)
    }

    /// Same run with the uniform step halved `times` times and `mu` kept.
    pub fn doubled(&self, times: u32) -> Result<Self, CliError> {
        let m = self.divisor()? << times;
        Ok(Self {
            steps: StepCount::Divisor(m),
            ..self.clone()
        })
    }

    /// `M=..;mu=..;rho=..;s=..;mode=..` label.
    pub fn label(&self) -> String {
        let steps = match self.steps {
            StepCount::Total(n) => format!("N={n}"),
            StepCount::Divisor(m) => format!("M={m}"),
        };
        format!(
            "{steps};mu={};rho={};s={};mode={}",
            self.mu,
            self.rho,
            self.s,
            mode_name(self.mode)
        )
    }
}

fn mode_name(mode: IterationMode) -> &'static str {
    match mode {
        IterationMode::Auto => "auto",
        IterationMode::FixedPoint => "fp",
        IterationMode::Blended => "blended",
        IterationMode::Newton => "newton",
    }
}

/// Outcome of a single run.
#[derive(Debug)]
pub struct RunOutcome {
    pub seconds: f64,
    pub result: Result<Trajectory, SolveFailure>,
}

/// Runs `spec`. Parameter and quadrature errors are returned directly; step
/// failures are reported inside the outcome.
pub fn run(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let problem = spec.load_problem()?;
    let mesh = spec.mesh(problem.t_final())?;
    let solver = Solver::new(problem, spec.config())?;
    let clock = Instant::now();
    let result = solver.advance(&mesh);
    Ok(RunOutcome {
        seconds: clock.elapsed().as_secs_f64(),
        result,
    })
}

/// mescd against the exact solution at the mesh points, or against the known
/// endpoint reference; `None` when the problem has neither.
pub fn built_in_accuracy(traj: &Trajectory) -> Option<f64> {
    let p = &traj.problem;
    if p.has_exact() {
        let exact: Vec<Vec<f64>> = traj.times().iter().map(|&t| p.exact(t).expect("exact")).collect();
        return Some(mescd(&traj.values, &exact));
    }
    let reference = p.reference_endpoint()?;
    if traj.steps_completed() < traj.mesh.n_steps {
        return None;
    }
    Some(mescd(&[traj.endpoint().to_vec()], &[reference.to_vec()]))
}

/// mescd of `coarse` against `fine` on the mesh points of `coarse`.
pub fn self_accuracy(coarse: &Trajectory, fine: &Trajectory) -> Result<f64, CliError> {
    let reference = fine.sample(coarse.times())?;
    Ok(mescd(&coarse.values, &reference))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_rows<W: Write>(w: &mut W, dim: usize, times: &[f64], values: &[Vec<f64>]) -> io::Result<()> {
    let mut header = String::from("t");
    for i in 1..=dim {
        write!(header, ",y{i}").expect("string write");
    }
    writeln!(w, "{header}")?;
    for (t, y) in times.iter().zip(values) {
        write!(w, "{t:?}")?;
        for v in y {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub steps: usize,
    pub seconds: f64,
    pub fixed_point_iterations: usize,
    pub fallback_iterations: usize,
    pub endpoint: Vec<f64>,
    pub mescd: Option<f64>,
}

fn summary_line(name: &str, s: &SolveSummary) -> String {
    let mut line = format!(
        "problem={name} steps={} seconds={:.3} fp_iterations={} fallback_iterations={}",
        s.steps, s.seconds, s.fixed_point_iterations, s.fallback_iterations
    );
    if let Some(m) = s.mescd {
        write!(line, " mescd={m:.2}").expect("string write");
    }
    let end: Vec<String> = s.endpoint.iter().map(|v| format!("{v:?}")).collect();
    write!(line, " endpoint={}", end.join(",")).expect("string write");
    line
}

/// `solve`: writes the trajectory and diagnostics (partial ones on failure)
/// and prints a summary line.
pub fn cmd_solve(
    spec: &RunSpec,
    out: Option<&Path>,
    diag: Option<&Path>,
    log: &mut dyn Write,
) -> Result<SolveSummary, CliError> {
    let outcome = run(spec)?;
    let (traj, failure) = match outcome.result {
        Ok(t) => (Some(t), None),
        Err(f) => (f.partial.map(|b| *b), Some(f.error)),
    };
    if let Some(t) = &traj {
        if let Some(path) = out {
            let mut w = create(path)?;
            t.write_csv(&mut w)?;
            w.flush()?;
        }
        if let Some(path) = diag {
            let mut w = create(path)?;
            t.write_diagnostics_csv(&mut w)?;
            w.flush()?;
        }
    }
    if let Some(err) = failure {
        let done = traj.as_ref().map_or(0, |t| t.steps_completed());
        return Err(CliError::Solver(format!("{err} ({done} steps completed)")));
    }
    let traj = traj.expect("successful run has a trajectory");
    let summary = SolveSummary {
        steps: traj.steps_completed(),
        seconds: outcome.seconds,
        fixed_point_iterations: traj.fixed_point_iterations(),
        fallback_iterations: traj.fallback_iterations(),
        endpoint: traj.endpoint().to_vec(),
        mescd: built_in_accuracy(&traj),
    };
    writeln!(log, "{}", summary_line(&spec.problem, &summary))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub label: String,
    pub steps: usize,
    pub seconds: f64,
    /// Against the next finer run; absent for the finest.
    pub mescd: Option<f64>,
}

/// `reference`: runs the base mesh and `doublings` successively doubled
/// ones, prints the consecutive-run accuracy table and writes the finest
/// solution sampled at the base mesh points.
pub fn cmd_reference(
    spec: &RunSpec,
    doublings: u32,
    out: Option<&Path>,
    log: &mut dyn Write,
) -> Result<Vec<ReferenceRow>, CliError> {
    let mut runs = Vec::with_capacity(doublings as usize + 1);
    let mut rows = Vec::with_capacity(doublings as usize + 1);
    for l in 0..=doublings {
        let s = if l == 0 { spec.clone() } else { spec.doubled(l)? };
        let outcome = run(&s)?;
        let traj = outcome.result.map_err(|f| CliError::Solver(f.to_string()))?;
        rows.push(ReferenceRow {
            label: s.label(),
            steps: traj.steps_completed(),
            seconds: outcome.seconds,
            mescd: None,
        });
        runs.push(traj);
    }
    for l in 0..runs.len() - 1 {
        rows[l].mescd = Some(self_accuracy(&runs[l], &runs[l + 1])?);
    }
    if let Some(path) = out {
        let base = &runs[0];
        let finest = runs.last().expect("at least one run");
        let values = finest.sample(base.times())?;
        let mut w = create(path)?;
        write_rows(&mut w, base.problem.dim(), base.times(), &values)?;
        w.flush()?;
    }
    if doublings > 0 {
        writeln!(log, "config,steps,seconds,estimated_mescd")?;
        for r in &rows {
            let m = r.mescd.map_or(String::new(), |m| format!("{m:.2}"));
            writeln!(log, "{},{},{:.3},{m}", r.label, r.steps, r.seconds)?;
        }
    } else {
        let r = &rows[0];
        writeln!(log, "{} steps={} seconds={:.3}", r.label, r.steps, r.seconds)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: String,
    pub mescd: Option<f64>,
    pub seconds: f64,
    pub status: String,
}

/// Accuracy of one sweep entry: exact solution or endpoint reference when the
/// problem has one, otherwise the run on the doubled mesh.
fn sweep_row(spec: &RunSpec) -> Result<SweepRow, CliError> {
    let outcome = run(spec)?;
    let mut row = SweepRow {
        config: spec.label(),
        mescd: None,
        seconds: outcome.seconds,
        status: "ok".into(),
    };
    match outcome.result {
        Ok(traj) => match built_in_accuracy(&traj) {
            Some(m) => row.mescd = Some(m),
            None => match run(&spec.doubled(1)?)?.result {
                Ok(fine) => row.mescd = Some(self_accuracy(&traj, &fine)?),
                Err(f) => row.status = format!("reference failed: {}", f.error),
            },
        },
        Err(f) => row.status = format!("failed: {}", f.error),
    }
    Ok(row)
}

/// `sweep`: one work-precision row per spec, in order.
pub fn cmd_sweep<W: Write>(specs: &[RunSpec], mut out: W) -> Result<Vec<SweepRow>, CliError> {
    writeln!(out, "config,mescd,seconds,status")?;
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let row = match sweep_row(spec) {
            Ok(r) => r,
            Err(CliError::Io(e)) => return Err(CliError::Io(e)),
            Err(e) => SweepRow {
                config: spec.label(),
                mescd: None,
                seconds: 0.0,
                status: format!("failed: {e}"),
            },
        };
        let m = row.mescd.map_or(String::new(), |m| format!("{m:.4}"));
        let status = row.status.replace([',', '\n'], ";");
        writeln!(out, "{},{m},{:.6},{status}", row.config, row.seconds)?;
        rows.push(row);
    }
    out.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct QuadratureReport {
    pub quad: QuadratureSet,
    /// Per weight function, the worst moment residual up to degree `k+q−1`.
    pub residuals: Vec<f64>,
}

/// `quadrature`: CSV `rho,c,b1..bnu` plus the `(q, k, φ)` triple and the
/// moment residuals.
pub fn cmd_quadrature<W: Write>(alphas: &[f64], s: usize, mut out: W, log: &mut dyn Write) -> Result<QuadratureReport, CliError> {
    let quad = build_quadrature(alphas, s)?;
    let residuals = quad.max_moment_residual(quad.k + quad.q - 1);
    let mut header = String::from("rho,c");
    for i in 1..=quad.nu() {
        write!(header, ",b{i}").expect("string write");
    }
    writeln!(out, "{header}")?;
    for (r, c) in quad.abscissae.iter().enumerate() {
        write!(out, "{},{c:?}", r + 1)?;
        for w in &quad.weights {
            write!(out, ",{:?}", w[r])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    writeln!(
        log,
        "q={} k={} phi={} max_moment_residual={worst:e} (degrees 0..{})",
        quad.q,
        quad.k,
        quad.phi,
        quad.k + quad.q - 1
    )?;
    Ok(QuadratureReport { quad, residuals })
}

fn steps_of(n_total: Option<usize>, divisor: Option<usize>) -> StepCount {
    match (n_total, divisor) {
        (_, Some(m)) => StepCount::Divisor(m),
        (Some(n), None) => StepCount::Total(n),
        (None, None) => unreachable!("clap requires one of --N, --M"),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut log = stdout.lock();
    match cli.command {
        Command::Solve(a) => {
            let spec = RunSpec::from_args(&a.problem, steps_of(a.n_total, a.divisor));
            cmd_solve(&spec, a.out.as_deref(), a.diag.as_deref(), &mut log)?;
        }
        Command::Reference(a) => {
            let spec = RunSpec::from_args(&a.problem, steps_of(a.n_total, a.divisor));
            cmd_reference(&spec, a.doublings, a.out.as_deref(), &mut log)?;
        }
        Command::Sweep(a) => {
            let steps: Vec<StepCount> = if a.divisor.is_empty() {
                a.n_total.iter().map(|&n| StepCount::Total(n)).collect()
            } else {
                a.divisor.iter().map(|&m| StepCount::Divisor(m)).collect()
            };
            let specs: Vec<RunSpec> = steps.into_iter().map(|st| RunSpec::from_args(&a.problem, st)).collect();
            match &a.out {
                Some(path) => cmd_sweep(&specs, create(path)?)?,
                None => cmd_sweep(&specs, &mut log)?,
            };
        }
        Command::Quadrature(a) => {
            let mut err = io::stderr();
            match &a.out {
                Some(path) => cmd_quadrature(&a.alphas, a.s, create(path)?, &mut log)?,
                None => cmd_quadrature(&a.alphas, a.s, &mut log, &mut err)?,
            };
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fhbvm: {e}");
            e.exit_code()
        }
    }
}
