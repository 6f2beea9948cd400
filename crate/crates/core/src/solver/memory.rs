//! Step history and the memory term `φ^n`.

use std::sync::Arc;

use crate::mop::QuadratureSet;
use crate::ortho_poly::{kernel_regime, KernelRegime};
use crate::problem::FdeProblem;

use super::SolverError;

/// Smallest kernel argument accepted before it is treated as an error; values
/// in `[1 − KERNEL_SLACK, 1)` come from round-off and are clamped to 1.
const KERNEL_SLACK: f64 = 1e-12;

/// Number of series terms needed at argument `x` for a truncation below
/// round-off, capped by the table size.
fn series_terms(x: f64, available: usize) -> usize {
    let need = (39.2 / x.ln()).ceil() as usize + 2;
    need.min(available)
}

/// One completed step: `t_{μ−1}`, `h_μ` and the coefficients `γ(σ^μ)`.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t_start: f64,
    pub h: f64,
    /// Block `i` occupies `s·off_i .. s·off_{i+1}`, row `j` of it the `m_i`
    /// components of `γ_ij`.
    pub gamma: Vec<f64>,
    h_alpha: Vec<f64>,
    /// Per block, `K × m_i` row-major `v_k = Σ_j S_kj γ_ij`.
    series: Vec<Vec<f64>>,
}

/// Per-step Fourier coefficient blocks feeding the memory term.
#[derive(Debug, Clone)]
pub struct StepHistory {
    quad: Arc<QuadratureSet>,
    block_sizes: Vec<usize>,
    offsets: Vec<usize>,
    records: Vec<StepRecord>,
}

impl StepHistory {
    pub fn new(problem: &FdeProblem, quad: Arc<QuadratureSet>) -> Self {
        let block_sizes = problem.block_sizes().to_vec();
        let mut offsets = vec![0];
        for &b in &block_sizes {
            offsets.push(offsets.last().unwrap() + b);
        }
        Self {
            quad,
            block_sizes,
            offsets,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn quadrature(&self) -> &QuadratureSet {
        &self.quad
    }

    pub fn truncate(&mut self, len: usize) {
        self.records.truncate(len);
    }

    pub fn push(&mut self, t_start: f64, h: f64, gamma: Vec<f64>) {
        let s = self.quad.s;
        let mut h_alpha = Vec::with_capacity(self.block_sizes.len());
        let mut series = Vec::with_capacity(self.block_sizes.len());
        for (i, &mi) in self.block_sizes.iter().enumerate() {
            let basis = &self.quad.bases[i];
            h_alpha.push(h.powf(basis.alpha()));
            let (table, terms) = basis.series_table();
            let g = &gamma[s * self.offsets[i]..s * self.offsets[i + 1]];
            let mut v = vec![0.0; terms * mi];
            for k in 0..terms {
                let row = &table[k * s..(k + 1) * s];
                let out = &mut v[k * mi..(k + 1) * mi];
                for (j, &sk) in row.iter().enumerate() {
                    for (o, gj) in out.iter_mut().zip(&g[j * mi..(j + 1) * mi]) {
                        *o += sk * gj;
                    }
                }
            }
            series.push(v);
        }
        self.records.push(StepRecord {
            t_start,
            h,
            gamma,
            h_alpha,
            series,
        });
    }

    /// Adds `Σ_{μ<upto} h_μ^{α_i} Σ_j J_j^i((t − t_{μ−1})/h_μ) γ_ij(σ^μ)` to `out`
    /// (internal order).
    pub fn add_memory(&self, t: f64, upto: usize, out: &mut [f64]) -> Result<(), SolverError> {
        let s = self.quad.s;
        for rec in &self.records[..upto] {
            let mut x = (t - rec.t_start) / rec.h;
            if x < 1.0 {
                if x < 1.0 - KERNEL_SLACK {
                    return Err(SolverError::KernelArgument { x });
                }
                x = 1.0;
            }
            let regime = kernel_regime(x);
            let lnx = x.ln();
            for (i, &mi) in self.block_sizes.iter().enumerate() {
                let basis = &self.quad.bases[i];
                let dst = &mut out[self.offsets[i]..self.offsets[i + 1]];
                let g = &rec.gamma[s * self.offsets[i]..s * self.offsets[i + 1]];
                if regime == KernelRegime::Series {
                    let v = &rec.series[i];
                    let terms = series_terms(x, v.len() / mi);
                    let inv = 1.0 / x;
                    let scale = rec.h_alpha[i] * ((basis.alpha() - 1.0) * lnx).exp();
                    for (a, d) in dst.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for k in (0..terms).rev() {
                            acc = acc * inv + v[k * mi + a];
                        }
                        *d += scale * acc;
                    }
                } else {
                    let kern = basis.tail(x).map_err(SolverError::Ortho)?;
                    for (j, kj) in kern.iter().enumerate() {
                        let w = rec.h_alpha[i] * kj;
                        for (d, gj) in dst.iter_mut().zip(&g[j * mi..(j + 1) * mi]) {
                            *d += w * gj;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `φ^n(t)` for a point `t ≥ t_{n−1}` of step `n = upto + 1`: Taylor term
    /// plus the contribution of the first `upto` steps (internal order).
    pub fn memory(&self, problem: &FdeProblem, t: f64, upto: usize) -> Result<Vec<f64>, SolverError> {
        let mut out = vec![0.0; problem.dim()];
        problem.taylor_internal(t, &mut out);
        self.add_memory(t, upto, &mut out)?;
        Ok(out)
    }
}
