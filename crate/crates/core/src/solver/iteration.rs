//! The per-step discrete problem `G(γ) = γ − P_sᵀΩ f(σ(γ)) = 0` and its solvers.

use crate::linalg::{general_eigenvalues, lu_factor, DenseMatrix, LuFactors};
use crate::mop::QuadratureSet;
use crate::problem::FdeProblem;

use super::{IterKind, SolverConfig, SolverError};

/// Step-independent tables derived from a quadrature set.
#[derive(Debug, Clone)]
pub struct IterationTables {
    pub s: usize,
    pub k: usize,
    /// Per block, `s × k` row-major `b_ρ^i P_j^i(c_ρ)`.
    pub weighted_basis: Vec<Vec<f64>>,
    /// Per block, `k × s` row-major `I^{α_i} P_j^i(c_ρ)`.
    pub fracint: Vec<Vec<f64>>,
    /// `ρ_11` and `X_11^{−1}` (row-major) for single-order problems.
    pub blended: Option<(f64, Vec<f64>)>,
}

impl IterationTables {
    pub fn new(quad: &QuadratureSet, rho11: Option<f64>) -> Result<Self, SolverError> {
        let (s, k) = (quad.s, quad.k);
        let mut weighted_basis = Vec::with_capacity(quad.nu());
        let mut fracint = Vec::with_capacity(quad.nu());
        for i in 0..quad.nu() {
            let p = &quad.basis_at_nodes[i];
            let mut wb = vec![0.0; s * k];
            for j in 0..s {
                for r in 0..k {
                    wb[j * k + r] = quad.weights[i][r] * p[(j, r)];
                }
            }
            weighted_basis.push(wb);
            fracint.push(quad.fracint_at_nodes[i].as_slice().to_vec());
        }
        let blended = if quad.nu() == 1 {
            let x = &quad.x_blocks[0][0];
            let rho = match rho11 {
                Some(r) => r,
                None => min_modulus_eigenvalue(x)?,
            };
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(SolverError::Config(format!("blended parameter {rho} must be positive")));
            }
            let lu = lu_factor(x)?;
            let mut inv = vec![0.0; s * s];
            let mut col = vec![0.0; s];
            for c in 0..s {
                col.iter_mut().for_each(|v| *v = 0.0);
                col[c] = 1.0;
                lu.solve_in_place(&mut col)?;
                for r in 0..s {
                    inv[r * s + c] = col[r];
                }
            }
            Some((rho, inv))
        } else {
            None
        };
        Ok(Self {
            s,
            k,
            weighted_basis,
            fracint,
            blended,
        })
    }
}

/// Default blended parameter: the smallest eigenvalue modulus of `X_11`.
pub fn min_modulus_eigenvalue(x: &DenseMatrix) -> Result<f64, SolverError> {
    let eig = general_eigenvalues(x)?;
    Ok(eig
        .iter()
        .map(|&(re, im)| re.hypot(im))
        .fold(f64::INFINITY, f64::min))
}

/// Outcome of a fixed-point attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointOutcome {
    Converged { iterations: usize },
    Diverged { iterations: usize },
}

/// The discrete problem of one step.
pub struct LocalProblem<'a> {
    pub problem: &'a FdeProblem,
    pub quad: &'a QuadratureSet,
    pub tables: &'a IterationTables,
    pub step: usize,
    pub t0: f64,
    pub h: f64,
    /// `h^{α_i}` per block.
    pub h_alpha: Vec<f64>,
    /// `k × m` memory term at the nodes (internal order).
    pub phi_nodes: Vec<f64>,
    /// Memory term at `c = 0`, the Jacobian base point.
    pub phi_start: Vec<f64>,
    offsets: Vec<usize>,
    stage: Vec<f64>,
    fvals: Vec<f64>,
}

impl<'a> LocalProblem<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &'a FdeProblem,
        quad: &'a QuadratureSet,
        tables: &'a IterationTables,
        step: usize,
        t0: f64,
        h: f64,
        phi_nodes: Vec<f64>,
        phi_start: Vec<f64>,
    ) -> Self {
        let m = problem.dim();
        let mut offsets = vec![0];
        for &b in problem.block_sizes() {
            offsets.push(offsets.last().unwrap() + b);
        }
        let h_alpha = problem.alphas().iter().map(|a| h.powf(*a)).collect();
        Self {
            problem,
            quad,
            tables,
            step,
            t0,
            h,
            h_alpha,
            phi_nodes,
            phi_start,
            offsets,
            stage: vec![0.0; quad.k * m],
            fvals: vec![0.0; quad.k * m],
        }
    }

    pub fn dim(&self) -> usize {
        self.tables.s * self.problem.dim()
    }

    fn block_gamma<'g>(&self, gamma: &'g [f64], i: usize) -> &'g [f64] {
        let s = self.tables.s;
        &gamma[s * self.offsets[i]..s * self.offsets[i + 1]]
    }

    /// `σ^n(c_ρ h)` for all nodes, `k × m` row-major (internal order).
    pub fn stage_values(&self, gamma: &[f64], out: &mut [f64]) {
        let (s, k) = (self.tables.s, self.tables.k);
        let m = self.problem.dim();
        out.copy_from_slice(&self.phi_nodes);
        for i in 0..self.problem.nu() {
            let mi = self.offsets[i + 1] - self.offsets[i];
            let g = self.block_gamma(gamma, i);
            let ip = &self.tables.fracint[i];
            let ha = self.h_alpha[i];
            for r in 0..k {
                let dst = &mut out[r * m + self.offsets[i]..r * m + self.offsets[i + 1]];
                for j in 0..s {
                    let w = ha * ip[r * s + j];
                    for (d, gj) in dst.iter_mut().zip(&g[j * mi..(j + 1) * mi]) {
                        *d += w * gj;
                    }
                }
            }
        }
    }

    /// `P_sᵀΩ f(σ(γ))`.
    pub fn apply_map(&mut self, gamma: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        let (s, k) = (self.tables.s, self.tables.k);
        let m = self.problem.dim();
        let mut stage = std::mem::take(&mut self.stage);
        self.stage_values(gamma, &mut stage);
        for r in 0..k {
            let t = self.t0 + self.quad.abscissae[r] * self.h;
            let f = &mut self.fvals[r * m..(r + 1) * m];
            self.problem.eval_internal(t, &stage[r * m..(r + 1) * m], f);
            if f.iter().any(|v| !v.is_finite()) {
                self.stage = stage;
                return Err(SolverError::Field {
                    step: self.step,
                    node: r,
                    t,
                });
            }
        }
        self.stage = stage;
        for i in 0..self.problem.nu() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            let mi = hi - lo;
            let wb = &self.tables.weighted_basis[i];
            let dst = &mut out[s * lo..s * hi];
            dst.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..s {
                let row = &mut dst[j * mi..(j + 1) * mi];
                for r in 0..k {
                    let w = wb[j * k + r];
                    for (d, f) in row.iter_mut().zip(&self.fvals[r * m + lo..r * m + hi]) {
                        *d += w * f;
                    }
                }
            }
        }
        Ok(())
    }

    /// `G(γ) = γ − P_sᵀΩ f(σ(γ))`.
    pub fn residual(&mut self, gamma: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        self.apply_map(gamma, out)?;
        for (o, g) in out.iter_mut().zip(gamma) {
            *o = g - *o;
        }
        Ok(())
    }

    /// Jacobian of `f` at `(t_{n−1}, φ^n(0))`, internal order.
    fn base_jacobian(&self) -> Vec<f64> {
        let m = self.problem.dim();
        let mut jac = vec![0.0; m * m];
        self.problem.jacobian_internal(self.t0, &self.phi_start, &mut jac);
        jac
    }

    /// Fixed-point iteration from `γ = 0`. Gives up when the increments stop
    /// shrinking for three iterations in a row, when the observed contraction
    /// rate predicts that `fp_max` iterations will not suffice, or at `fp_max`.
    pub fn fixed_point_solve(
        &mut self,
        gamma: &mut [f64],
        config: &SolverConfig,
    ) -> Result<FixedPointOutcome, SolverError> {
        gamma.iter_mut().for_each(|v| *v = 0.0);
        let mut next = vec![0.0; gamma.len()];
        let mut prev_inc = f64::INFINITY;
        let mut growth = 0;
        for it in 1..=config.fp_max {
            match self.apply_map(gamma, &mut next) {
                Ok(()) => {}
                Err(SolverError::Field { .. }) => return Ok(FixedPointOutcome::Diverged { iterations: it }),
                Err(e) => return Err(e),
            }
            let inc = max_diff(&next, gamma);
            gamma.copy_from_slice(&next);
            let tol = config.tolerance(gamma);
            if inc <= tol {
                return Ok(FixedPointOutcome::Converged { iterations: it });
            }
            if !inc.is_finite() {
                return Ok(FixedPointOutcome::Diverged { iterations: it });
            }
            if inc >= prev_inc {
                growth += 1;
                if growth >= 3 {
                    return Ok(FixedPointOutcome::Diverged { iterations: it });
                }
            } else {
                growth = 0;
                if prev_inc.is_finite() && it >= 2 {
                    let rate = inc / prev_inc;
                    let needed = (tol / inc).ln() / rate.ln();
                    if it as f64 + needed > config.fp_max as f64 {
                        return Ok(FixedPointOutcome::Diverged { iterations: it });
                    }
                }
            }
            prev_inc = inc;
        }
        Ok(FixedPointOutcome::Diverged {
            iterations: config.fp_max,
        })
    }

    /// Blended iteration for a single order, from `γ = 0`.
    pub fn blended_solve(&mut self, gamma: &mut [f64], config: &SolverConfig) -> Result<usize, SolverError> {
        let (rho, xinv) = self
            .tables
            .blended
            .clone()
            .ok_or_else(|| SolverError::Config("blended iteration needs a single fractional order".into()))?;
        let s = self.tables.s;
        let m = self.problem.dim();
        let jac = self.base_jacobian();
        let scale = rho * self.h_alpha[0];
        let mut theta = DenseMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                theta[(a, b)] = f64::from(a == b) - scale * jac[a * m + b];
            }
        }
        let theta = lu_factor(&theta).map_err(|_| SolverError::SingularMatrix { step: self.step })?;
        let apply_theta = |lu: &LuFactors, v: &mut [f64]| -> Result<(), SolverError> {
            for j in 0..s {
                lu.solve_in_place(&mut v[j * m..(j + 1) * m])?;
            }
            Ok(())
        };

        gamma.iter_mut().for_each(|v| *v = 0.0);
        let n = gamma.len();
        let mut eta = vec![0.0; n];
        let mut eta_hat = vec![0.0; n];
        let mut monitor = IncrementMonitor::new();
        for it in 1..=config.max_iter {
            self.residual(gamma, &mut eta)?;
            eta.iter_mut().for_each(|v| *v = -*v);
            for j in 0..s {
                for a in 0..m {
                    let mut acc = 0.0;
                    for c in 0..s {
                        acc += xinv[j * s + c] * eta[c * m + a];
                    }
                    eta_hat[j * m + a] = rho * acc;
                }
            }
            // δ = θ[η̂ + θ(η − η̂)]
            let mut delta: Vec<f64> = eta.iter().zip(&eta_hat).map(|(e, eh)| e - eh).collect();
            apply_theta(&theta, &mut delta)?;
            for (d, eh) in delta.iter_mut().zip(&eta_hat) {
                *d += eh;
            }
            apply_theta(&theta, &mut delta)?;
            let inc = delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (g, d) in gamma.iter_mut().zip(&delta) {
                *g += d;
            }
            match monitor.check(inc, it, config, gamma) {
                Some(Verdict::Converged | Verdict::Floor) => return Ok(it),
                Some(Verdict::Failed) => {
                    return Err(SolverError::NoConvergence {
                        step: self.step,
                        kind: IterKind::Blended,
                        iterations: it,
                        increment: inc,
                    })
                }
                None => {}
            }
        }
        Err(SolverError::NoConvergence {
            step: self.step,
            kind: IterKind::Blended,
            iterations: config.max_iter,
            increment: monitor.last,
        })
    }

    /// Simplified Newton iteration from `γ = 0` with the matrix
    /// `I − [h^{α_j} X_ij ⊗ f_ij]` factored once.
    pub fn newton_solve(&mut self, gamma: &mut [f64], config: &SolverConfig) -> Result<usize, SolverError> {
        let s = self.tables.s;
        let m = self.problem.dim();
        let nu = self.problem.nu();
        let jac = self.base_jacobian();
        let n = self.dim();
        let mut mat = DenseMatrix::identity(n);
        for i in 0..nu {
            let (li, hi_i) = (self.offsets[i], self.offsets[i + 1]);
            let mi = hi_i - li;
            for l in 0..nu {
                let (ll, hi_l) = (self.offsets[l], self.offsets[l + 1]);
                let ml = hi_l - ll;
                let x = &self.quad.x_blocks[i][l];
                let ha = self.h_alpha[l];
                for jp in 0..s {
                    for j in 0..s {
                        let xv = ha * x[(jp, j)];
                        if xv == 0.0 {
                            continue;
                        }
                        for a in 0..mi {
                            let row = s * li + jp * mi + a;
                            for b in 0..ml {
                                let col = s * ll + j * ml + b;
                                mat[(row, col)] -= xv * jac[(li + a) * m + ll + b];
                            }
                        }
                    }
                }
            }
        }
        let lu = lu_factor(&mat).map_err(|_| SolverError::SingularMatrix { step: self.step })?;
        gamma.iter_mut().for_each(|v| *v = 0.0);
        let mut delta = vec![0.0; n];
        let mut monitor = IncrementMonitor::new();
        for it in 1..=config.max_iter {
            self.residual(gamma, &mut delta)?;
            delta.iter_mut().for_each(|v| *v = -*v);
            lu.solve_in_place(&mut delta)?;
            let inc = delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (g, d) in gamma.iter_mut().zip(&delta) {
                *g += d;
            }
            match monitor.check(inc, it, config, gamma) {
                Some(Verdict::Converged | Verdict::Floor) => return Ok(it),
                Some(Verdict::Failed) => {
                    return Err(SolverError::NoConvergence {
                        step: self.step,
                        kind: IterKind::Newton,
                        iterations: it,
                        increment: inc,
                    })
                }
                None => {}
            }
        }
        Err(SolverError::NoConvergence {
            step: self.step,
            kind: IterKind::Newton,
            iterations: config.max_iter,
            increment: monitor.last,
        })
    }

    /// `y_i(t_n) = φ_i^n(h) + h^{α_i} γ_{i0}/Γ(α_i+1)` given `φ^n(h)`.
    pub fn endpoint(&self, gamma: &[f64], phi_end: &[f64]) -> Vec<f64> {
        let mut y = phi_end.to_vec();
        for i in 0..self.problem.nu() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            let c = self.h_alpha[i] / self.quad.bases[i].gamma_alpha1();
            let g0 = &self.block_gamma(gamma, i)[..hi - lo];
            for (v, g) in y[lo..hi].iter_mut().zip(g0) {
                *v += c * g;
            }
        }
        y
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Stopping test shared by the Newton-type iterations: `Some(Ok)` on
/// convergence, `Some(Err)` on blow-up, `None` to continue. A non-decreasing
/// increment already within `STALL_FACTOR` of the tolerance is accepted as a
/// round-off plateau.
/// Convergence test on the increments of a Newton-type iteration.
///
/// Converged when the increment is within tolerance. A round-off floor is
/// accepted once the best increment has not halved for `PLATEAU` iterations
/// and lies within `FLOOR_FACTOR` of the tolerance.
#[derive(Debug)]
struct IncrementMonitor {
    best: f64,
    best_at: usize,
    last: f64,
}

enum Verdict {
    Converged,
    Floor,
    Failed,
}

impl IncrementMonitor {
    const PLATEAU: usize = 10;
    const FLOOR_FACTOR: f64 = 1e2;

    fn new() -> Self {
        Self {
            best: f64::INFINITY,
            best_at: 0,
            last: f64::INFINITY,
        }
    }

    fn check(&mut self, inc: f64, it: usize, config: &SolverConfig, gamma: &[f64]) -> Option<Verdict> {
        self.last = inc;
        if !inc.is_finite() || gamma.iter().any(|v| !v.is_finite()) {
            return Some(Verdict::Failed);
        }
        let tol = config.tolerance(gamma);
        if inc <= tol {
            return Some(Verdict::Converged);
        }
        if inc < 0.5 * self.best {
            self.best = inc;
            self.best_at = it;
        } else if it - self.best_at >= Self::PLATEAU && self.best <= Self::FLOOR_FACTOR * tol {
            return Some(Verdict::Floor);
        }
        None
    }
}
