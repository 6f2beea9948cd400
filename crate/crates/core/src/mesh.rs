//! Graded, uniform and mixed meshes over `[0, T]`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid mesh parameters: {0}")]
    Parameter(String),
    #[error("graded prefix too fine: first step {0:e} underflows")]
    GradingOverflow(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub t_final: f64,
    /// Total number of steps `N`.
    pub n_steps: usize,
    /// Number of graded steps `μ`.
    pub mu: usize,
    /// Coarsening integer `ρ`.
    pub rho: usize,
    /// Grading ratio `r = max{2,ρ}/(max{2,ρ}−1)`.
    pub ratio: f64,
    /// `h = T/M`, `M = N − μ + ρ`.
    pub h_uniform: f64,
    pub points: Vec<f64>,
    pub steps: Vec<f64>,
}

impl Mesh {
    /// Mesh with `n_steps` steps in total, the first `mu` of them graded.
    pub fn new(t_final: f64, n_steps: usize, mu: usize, rho: usize) -> Result<Self, MeshError> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(MeshError::Parameter(format!("T must be positive, got {t_final}")));
        }
        if mu == 0 || mu > n_steps {
            return Err(MeshError::Parameter(format!(
                "need 1 <= mu <= N, got mu={mu}, N={n_steps}"
            )));
        }
        if rho == 0 {
            return Err(MeshError::Parameter("rho must be at least 1".into()));
        }
        let big = rho.max(2) as f64;
        let ratio = big / (big - 1.0);
        let m = n_steps - mu + rho;
        let h = t_final / m as f64;
        let growth = ratio.powi(mu as i32);
        let h1 = rho as f64 * h * (ratio - 1.0) / (growth - 1.0);
        if !(h1 >= 1e-300) || !growth.is_finite() {
            return Err(MeshError::GradingOverflow(h1));
        }

        let mut steps = Vec::with_capacity(n_steps);
        let mut hn = h1;
        for _ in 0..mu {
            steps.push(hn);
            hn *= ratio;
        }
        steps.resize(n_steps, h);

        let mut points = Vec::with_capacity(n_steps + 1);
        points.push(0.0);
        let mut t = 0.0;
        for &hn in &steps {
            t += hn;
            points.push(t);
        }
        points[n_steps] = t_final;
        steps[n_steps - 1] = t_final - points[n_steps - 1];
        Ok(Self {
            t_final,
            n_steps,
            mu,
            rho,
            ratio,
            h_uniform: h,
            points,
            steps,
        })
    }

    /// Mesh described by the uniform divisor `M` (so `h = T/M`) instead of the
    /// total step count; `N = M + μ − ρ`.
    pub fn from_divisor(t_final: f64, divisor: usize, mu: usize, rho: usize) -> Result<Self, MeshError> {
        if divisor + mu < rho + 1 {
            return Err(MeshError::Parameter(format!(
                "M={divisor}, mu={mu}, rho={rho} leave no steps"
            )));
        }
        Self::new(t_final, divisor + mu - rho, mu, rho)
    }

    pub fn uniform(t_final: f64, n_steps: usize) -> Result<Self, MeshError> {
        Self::new(t_final, n_steps, 1, 1)
    }

    pub fn len(&self) -> usize {
        self.n_steps
    }

    pub fn is_empty(&self) -> bool {
        self.n_steps == 0
    }

    /// Index `n` (1-based) of the step with `t_{n−1} ≤ t ≤ t_n`.
    pub fn locate(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0 && t <= self.t_final) {
            return None;
        }
        let idx = self.points.partition_point(|&p| p < t);
        Some(idx.clamp(1, self.n_steps))
    }
}

pub fn build_mesh(t_final: f64, n_steps: usize, mu: usize, rho: usize) -> Result<Mesh, MeshError> {
    Mesh::new(t_final, n_steps, mu, rho)
}
