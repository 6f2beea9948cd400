//! FHBVM time stepping over a mesh.

mod iteration;
mod memory;
mod trajectory;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::mesh::{Mesh, MeshError};
use crate::mop::{build_quadrature, MopError, QuadratureSet};
use crate::ortho_poly::OrthoError;
use crate::problem::FdeProblem;

pub use iteration::{min_modulus_eigenvalue, FixedPointOutcome, IterationTables, LocalProblem};
pub use memory::{StepHistory, StepRecord};
pub use trajectory::{mescd, StepDiagnostics, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Quadrature(#[from] MopError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("non-finite field value at step {step}, node {node} (t = {t})")]
    Field { step: usize, node: usize, t: f64 },
    #[error("kernel argument {x} below 1: inconsistent history")]
    KernelArgument { x: f64 },
    #[error("singular iteration matrix at step {step}; refine the mesh")]
    SingularMatrix { step: usize },
    #[error("{kind} iteration did not converge at step {step} after {iterations} iterations (last increment {increment:e})")]
    NoConvergence {
        step: usize,
        kind: IterKind,
        iterations: usize,
        increment: f64,
    },
    #[error("fixed-point iteration diverged at step {step}")]
    FixedPointDiverged { step: usize },
    #[error("time {0} outside the computed range")]
    OutOfRange(f64),
}

/// Which nonlinear solver policy to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationMode {
    /// Fixed-point first, then blended (one order) or Newton.
    #[default]
    Auto,
    FixedPoint,
    Blended,
    Newton,
}

impl FromStr for IterationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "fp" | "fixed-point" => Ok(Self::FixedPoint),
            "blended" => Ok(Self::Blended),
            "newton" => Ok(Self::Newton),
            other => Err(format!("unknown mode '{other}' (auto, fp, blended, newton)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterKind {
    FixedPoint,
    Blended,
    Newton,
}

impl fmt::Display for IterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IterKind::FixedPoint => "fixed-point",
            IterKind::Blended => "blended",
            IterKind::Newton => "newton",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub s: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub fp_max: usize,
    pub rho11: Option<f64>,
    pub mode: IterationMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            s: 22,
            tol_abs: 1e-15,
            tol_rel: 1e-14,
            max_iter: 100,
            fp_max: 12,
            rho11: None,
            mode: IterationMode::Auto,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(mut self, mode: IterationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_s(mut self, s: usize) -> Self {
        self.s = s;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.s == 0 {
            return Err(SolverError::Config("s must be at least 1".into()));
        }
        if !(self.tol_abs > 0.0 && self.tol_rel > 0.0) {
            return Err(SolverError::Config("tolerances must be positive".into()));
        }
        if self.max_iter == 0 || self.fp_max == 0 {
            return Err(SolverError::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// `tol_a + tol_r ‖γ‖_∞`.
    pub fn tolerance(&self, gamma: &[f64]) -> f64 {
        self.tol_abs + self.tol_rel * gamma.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A problem bound to its quadrature and iteration tables.
#[derive(Debug, Clone)]
pub struct Solver {
    pub problem: FdeProblem,
    pub quad: Arc<QuadratureSet>,
    pub tables: Arc<IterationTables>,
    pub config: SolverConfig,
}

/// A failed solve: the error plus everything computed before it.
#[derive(Debug, Clone)]
pub struct SolveFailure {
    pub error: SolverError,
    /// Absent when the failure happened before the first step.
    pub partial: Option<Box<Trajectory>>,
}

impl fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let done = self.partial.as_ref().map_or(0, |t| t.steps_completed());
        write!(f, "{} ({done} steps completed)", self.error)
    }
}

impl std::error::Error for SolveFailure {}

impl Solver {
    pub fn new(problem: FdeProblem, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        if config.mode == IterationMode::Blended && problem.nu() != 1 {
            return Err(SolverError::Config(
                "blended iteration needs a single fractional order".into(),
            ));
        }
        let quad = Arc::new(build_quadrature(problem.alphas(), config.s)?);
        Self::with_quadrature(problem, quad, config)
    }

    pub fn with_quadrature(
        problem: FdeProblem,
        quad: Arc<QuadratureSet>,
        config: SolverConfig,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if quad.alphas != problem.alphas() || quad.s != config.s {
            return Err(SolverError::Config("quadrature does not match the problem".into()));
        }
        let tables = Arc::new(IterationTables::new(&quad, config.rho11)?);
        Ok(Self {
            problem,
            quad,
            tables,
            config,
        })
    }

    /// `φ^n` at the nodes (`k × m`), at `c = 0` and at `c = 1`, internal order.
    pub fn memory_term(
        &self,
        history: &StepHistory,
        mesh: &Mesh,
        n: usize,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), SolverError> {
        let m = self.problem.dim();
        let (t0, h) = step_span(mesh, n);
        let upto = n - 1;
        let mut nodes = vec![0.0; self.quad.k * m];
        for (r, c) in self.quad.abscissae.iter().enumerate() {
            let v = history.memory(&self.problem, t0 + c * h, upto)?;
            nodes[r * m..(r + 1) * m].copy_from_slice(&v);
        }
        let start = history.memory(&self.problem, t0, upto)?;
        let end = history.memory(&self.problem, mesh.points[n], upto)?;
        Ok((nodes, start, end))
    }

    /// Integrates over `mesh`.
    pub fn advance(&self, mesh: &Mesh) -> Result<Trajectory, SolveFailure> {
        let mut traj = Trajectory::start(&self.problem, Arc::clone(&self.quad), mesh.clone());
        let mut gamma = vec![0.0; self.config.s * self.problem.dim()];
        // Step size at which fixed-point iteration last failed; larger steps skip it.
        let mut fp_failed_at = f64::INFINITY;
        for n in 1..=mesh.n_steps {
            match self.step(&traj.history, mesh, n, &mut gamma, &mut fp_failed_at) {
                Ok((y, diag)) => {
                    let (t0, h) = step_span(mesh, n);
                    traj.history.push(t0, h, gamma.clone());
                    traj.values.push(self.problem.to_user(&y));
                    traj.diagnostics.push(diag);
                }
                Err(error) => {
                    return Err(SolveFailure {
                        error,
                        partial: Some(Box::new(traj)),
                    })
                }
            }
        }
        Ok(traj)
    }

    fn step(
        &self,
        history: &StepHistory,
        mesh: &Mesh,
        n: usize,
        gamma: &mut [f64],
        fp_failed_at: &mut f64,
    ) -> Result<(Vec<f64>, StepDiagnostics), SolverError> {
        let (t0, h) = step_span(mesh, n);
        let (nodes, start, end) = self.memory_term(history, mesh, n)?;
        let mut local = LocalProblem::new(&self.problem, &self.quad, &self.tables, n, t0, h, nodes, start);
        let cfg = &self.config;
        let mut fp_iterations = 0;
        let mut fallback_iterations = 0;
        let kind = match cfg.mode {
            IterationMode::FixedPoint => match local.fixed_point_solve(gamma, cfg)? {
                FixedPointOutcome::Converged { iterations } => {
                    fp_iterations = iterations;
                    IterKind::FixedPoint
                }
                FixedPointOutcome::Diverged { .. } => return Err(SolverError::FixedPointDiverged { step: n }),
            },
            IterationMode::Blended => {
                fallback_iterations = local.blended_solve(gamma, cfg)?;
                IterKind::Blended
            }
            IterationMode::Newton => {
                fallback_iterations = local.newton_solve(gamma, cfg)?;
                IterKind::Newton
            }
            IterationMode::Auto => {
                let mut done = None;
                if h < *fp_failed_at {
                    match local.fixed_point_solve(gamma, cfg)? {
                        FixedPointOutcome::Converged { iterations } => {
                            fp_iterations = iterations;
                            done = Some(IterKind::FixedPoint);
                        }
                        FixedPointOutcome::Diverged { iterations } => {
                            fp_iterations = iterations;
                            *fp_failed_at = h;
                        }
                    }
                }
                match done {
                    Some(kind) => kind,
                    None if self.problem.nu() == 1 => {
                        fallback_iterations = local.blended_solve(gamma, cfg)?;
                        IterKind::Blended
                    }
                    None => {
                        fallback_iterations = local.newton_solve(gamma, cfg)?;
                        IterKind::Newton
                    }
                }
            }
        };
        let mut res = vec![0.0; gamma.len()];
        local.residual(gamma, &mut res)?;
        let residual_norm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let y = local.endpoint(gamma, &end);
        Ok((
            y,
            StepDiagnostics {
                step: n,
                t: mesh.points[n],
                h,
                kind,
                fp_iterations,
                fallback_iterations,
                residual_norm,
                tolerance: cfg.tolerance(gamma),
            },
        ))
    }
}

/// `(t_{n−1}, h_n)` with `h_n` taken from the mesh points so that kernel
/// arguments at step boundaries are exactly 1.
fn step_span(mesh: &Mesh, n: usize) -> (f64, f64) {
    let t0 = mesh.points[n - 1];
    (t0, mesh.points[n] - t0)
}

/// Builds the solver and integrates `problem` over `mesh`.
pub fn solve(problem: &FdeProblem, mesh: &Mesh, config: &SolverConfig) -> Result<Trajectory, SolveFailure> {
    let solver = Solver::new(problem.clone(), config.clone()).map_err(|error| SolveFailure {
        error,
        partial: None,
    })?;
    solver.advance(mesh)
}
