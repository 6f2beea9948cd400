//! Orthonormal Jacobi families for the weights `ω_α(c) = α(1−c)^{α−1}` on
//! `[0,1]`, their Gauss rules, fractional integrals `I^α P_j` and the tail
//! kernels `J_j(x)` that drive the memory term.

use thiserror::Error;

use crate::linalg::{symtri_eigen, LinalgError};
use crate::special::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrthoError {
    #[error("invalid fractional order {0}: must be positive and finite")]
    InvalidOrder(f64),
    #[error("a basis must hold at least one polynomial")]
    EmptyBasis,
    #[error("a Gauss rule needs at least one node")]
    NoNodes,
    #[error("argument {0} outside the admissible domain {1}")]
    Domain(f64, &'static str),
    #[error("Gauss rule construction failed: {0}")]
    Numerical(#[from] LinalgError),
}

/// Weight attached to a Gauss rule on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `α(1−c)^{α−1}`, unit mass.
    RightSingular,
    /// `c^{α−1}`, mass `1/α`.
    LeftSingular,
    /// Constant weight 1 (Gauss–Legendre).
    Smooth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_kind: WeightKind,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Monic recurrence `p_{n+1} = (c − a_n) p_n − b_n p_{n−1}` for the weight
/// `(1−c)^ea c^eb` on `[0,1]`; returns `a_0..a_{n−1}` and `b_1..b_{n−1}`.
fn shifted_jacobi_recurrence(ea: f64, eb: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ab = ea + eb;
    let mut diag = Vec::with_capacity(n);
    let mut sub = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let a = if k == 0 {
            (eb - ea) / (ab + 2.0)
        } else {
            (eb - ea) * (eb + ea) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        diag.push(0.5 * (1.0 + a));
        if k >= 1 {
            let b = if k == 1 {
                4.0 * (1.0 + ea) * (1.0 + eb) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let t = 2.0 * kf + ab;
                4.0 * kf * (kf + ea) * (kf + eb) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
            };
            sub.push(0.25 * b);
        }
    }
    (diag, sub)
}

fn check_alpha(alpha: f64) -> Result<(), OrthoError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(OrthoError::InvalidOrder(alpha));
    }
    Ok(())
}

/// Gauss rule with `n` nodes for the requested weight, by Golub–Welsch.
pub fn gauss_rule(alpha: f64, n: usize, weight_kind: WeightKind) -> Result<GaussRule, OrthoError> {
    if n == 0 {
        return Err(OrthoError::NoNodes);
    }
    let (ea, eb, mass) = match weight_kind {
        WeightKind::RightSingular => {
            check_alpha(alpha)?;
            (alpha - 1.0, 0.0, 1.0)
        }
        WeightKind::LeftSingular => {
            check_alpha(alpha)?;
            (0.0, alpha - 1.0, 1.0 / alpha)
        }
        WeightKind::Smooth => (0.0, 0.0, 1.0),
    };
    let (diag, sub) = shifted_jacobi_recurrence(ea, eb, n);
    let off: Vec<f64> = sub.iter().map(|b| b.sqrt()).collect();
    let eig = symtri_eigen(&diag, &off)?;
    let weights = eig.first_components.iter().map(|z| mass * z * z).collect();
    Ok(GaussRule {
        nodes: eig.values,
        weights,
        weight_kind,
    })
}

pub fn gauss_legendre(n: usize) -> Result<GaussRule, OrthoError> {
    gauss_rule(1.0, n, WeightKind::Smooth)
}

/// Which evaluation scheme `tail_kernels` uses at a given argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRegime {
    Endpoint,
    Near,
    Smooth,
    Series,
}

const NEAR_LIMIT: f64 = 2.0;
const SERIES_LIMIT: f64 = 4.0;
const SMOOTH_NODES: usize = 30;
const NEAR_NODES: usize = 30;
const SERIES_EXTRA_TERMS: usize = 32;
/// Below this distance from the singularity the near regime switches to
/// the scaled left-singular rule.
const TINY_OFFSET: f64 = 1e-6;

pub fn kernel_regime(x: f64) -> KernelRegime {
    if x == 1.0 {
        KernelRegime::Endpoint
    } else if x < NEAR_LIMIT {
        KernelRegime::Near
    } else if x < SERIES_LIMIT {
        KernelRegime::Smooth
    } else {
        KernelRegime::Series
    }
}

/// Orthonormal polynomials `P_0..P_{s_max−1}` for `ω_α`, with the cached
/// rules needed by the fractional-integral and kernel evaluators.
#[derive(Debug, Clone)]
pub struct JacobiBasis {
    alpha: f64,
    s_max: usize,
    /// Diagonal recurrence coefficients `a_0..a_{s_max−1}`.
    rec_a: Vec<f64>,
    /// `sqrt(b_n)`, `n = 1..s_max`.
    rec_sqrt_b: Vec<f64>,
    /// `‖p_n‖` of the monic polynomials under `ω_α`.
    norm_constants: Vec<f64>,
    gamma_alpha: f64,
    gamma_alpha1: f64,
    frac_rule: GaussRule,
    left_rule: GaussRule,
    near_rule: GaussRule,
    smooth_rule: GaussRule,
    /// Row-major `series_terms × s_max` table of `C_k M_{jk} / Γ(α)`.
    series: Vec<f64>,
    series_terms: usize,
}

impl JacobiBasis {
    pub fn new(alpha: f64, s_max: usize) -> Result<Self, OrthoError> {
        check_alpha(alpha)?;
        if s_max == 0 {
            return Err(OrthoError::EmptyBasis);
        }
        let (rec_a, sub) = shifted_jacobi_recurrence(alpha - 1.0, 0.0, s_max + 1);
        let rec_sqrt_b: Vec<f64> = sub.iter().map(|b| b.sqrt()).collect();
        let mut norm_constants = Vec::with_capacity(s_max);
        let mut acc = 1.0;
        norm_constants.push(acc);
        for sb in rec_sqrt_b.iter().take(s_max - 1) {
            acc *= sb;
            norm_constants.push(acc);
        }
        let half = s_max.div_ceil(2);
        let frac_rule = gauss_rule(alpha, half, WeightKind::RightSingular)?;
        let left_rule = gauss_rule(alpha, half + 1, WeightKind::LeftSingular)?;
        let near_rule = gauss_legendre(NEAR_NODES)?;
        let smooth_rule = gauss_legendre(SMOOTH_NODES)?;

        let mut basis = JacobiBasis {
            alpha,
            s_max,
            rec_a: rec_a[..s_max].to_vec(),
            rec_sqrt_b: rec_sqrt_b[..s_max].to_vec(),
            norm_constants,
            gamma_alpha: gamma(alpha),
            gamma_alpha1: gamma(alpha + 1.0),
            frac_rule,
            left_rule,
            near_rule,
            smooth_rule,
            series: vec![],
            series_terms: s_max + SERIES_EXTRA_TERMS,
        };
        basis.series = basis.build_series()?;
        Ok(basis)
    }

    fn build_series(&self) -> Result<Vec<f64>, OrthoError> {
        let kt = self.series_terms;
        let s = self.s_max;
        // M_{jk} = ∫_0^1 τ^k P_j(τ) dτ, exact with a Legendre rule of degree ≥ k + j.
        let rule = gauss_legendre((kt + s).div_ceil(2) + 1)?;
        let mut table = vec![0.0; kt * s];
        let mut p = vec![0.0; s];
        for (&tau, &w) in rule.nodes.iter().zip(&rule.weights) {
            self.eval_into(tau, &mut p);
            let mut pow = w;
            for k in 0..kt {
                let row = &mut table[k * s..(k + 1) * s];
                for (t, pj) in row.iter_mut().zip(&p) {
                    *t += pow * pj;
                }
                pow *= tau;
            }
        }
        let mut ck = 1.0 / self.gamma_alpha;
        for k in 0..kt {
            if k > 0 {
                ck *= (k as f64 - self.alpha) / k as f64;
            }
            for v in &mut table[k * s..(k + 1) * s] {
                *v *= ck;
            }
        }
        Ok(table)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// Diagonal coefficients and off-diagonal `sqrt(b_n)` of the orthonormal recurrence.
    pub fn recurrence(&self) -> (&[f64], &[f64]) {
        (&self.rec_a, &self.rec_sqrt_b)
    }

    pub fn norm_constants(&self) -> &[f64] {
        &self.norm_constants
    }

    pub fn gamma_alpha1(&self) -> f64 {
        self.gamma_alpha1
    }

    pub fn gamma_alpha(&self) -> f64 {
        self.gamma_alpha
    }

    /// Writes `P_0(c)..P_{s_max−1}(c)` into `out` (length `s_max`).
    pub fn eval_into(&self, c: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.s_max);
        out[0] = 1.0;
        if self.s_max == 1 {
            return;
        }
        out[1] = (c - self.rec_a[0]) / self.rec_sqrt_b[0];
        for n in 1..self.s_max - 1 {
            out[n + 1] =
                ((c - self.rec_a[n]) * out[n] - self.rec_sqrt_b[n - 1] * out[n - 1]) / self.rec_sqrt_b[n];
        }
    }

    pub fn eval(&self, c: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.s_max];
        self.eval_into(c, &mut out);
        out
    }

    /// `I^α P_j(c)` for `j < s_max`, `0 ≤ c ≤ 1`.
    pub fn frac_int(&self, c: f64) -> Result<Vec<f64>, OrthoError> {
        if !(0.0..=1.0).contains(&c) {
            return Err(OrthoError::Domain(c, "[0, 1]"));
        }
        let mut out = vec![0.0; self.s_max];
        if c == 0.0 {
            return Ok(out);
        }
        if c == 1.0 {
            out[0] = 1.0 / self.gamma_alpha1;
            return Ok(out);
        }
        let mut p = vec![0.0; self.s_max];
        for (&u, &w) in self.frac_rule.nodes.iter().zip(&self.frac_rule.weights) {
            self.eval_into(c * u, &mut p);
            for (o, pj) in out.iter_mut().zip(&p) {
                *o += w * pj;
            }
        }
        let scale = c.powf(self.alpha) / self.gamma_alpha1;
        for o in &mut out {
            *o *= scale;
        }
        Ok(out)
    }

    /// `J_j(x) = (1/Γ(α)) ∫_0^1 (x−τ)^{α−1} P_j(τ) dτ` for `j < s_max`, `x ≥ 1`.
    pub fn tail(&self, x: f64) -> Result<Vec<f64>, OrthoError> {
        if !(x >= 1.0 && x.is_finite()) {
            return Err(OrthoError::Domain(x, "[1, inf)"));
        }
        let mut out = vec![0.0; self.s_max];
        match kernel_regime(x) {
            KernelRegime::Endpoint => out[0] = 1.0 / self.gamma_alpha1,
            KernelRegime::Near => self.tail_near(x, &mut out),
            KernelRegime::Smooth => {
                let mut p = vec![0.0; self.s_max];
                for (&tau, &w) in self.smooth_rule.nodes.iter().zip(&self.smooth_rule.weights) {
                    self.eval_into(tau, &mut p);
                    let k = w * (x - tau).powf(self.alpha - 1.0);
                    for (o, pj) in out.iter_mut().zip(&p) {
                        *o += k * pj;
                    }
                }
                for o in &mut out {
                    *o /= self.gamma_alpha;
                }
            }
            KernelRegime::Series => {
                let inv = 1.0 / x;
                let s = self.s_max;
                for k in (0..self.series_terms).rev() {
                    let row = &self.series[k * s..(k + 1) * s];
                    for (o, v) in out.iter_mut().zip(row) {
                        *o = *o * inv + v;
                    }
                }
                let lead = x.powf(self.alpha - 1.0);
                for o in &mut out {
                    *o *= lead;
                }
            }
        }
        Ok(out)
    }

    /// Near regime: integrate in `w = x − τ ∈ [x−1, x]` on intervals that
    /// double in length away from the singularity at `w = 0`.
    fn tail_near(&self, x: f64, out: &mut [f64]) {
        let d = x - 1.0;
        let am1 = self.alpha - 1.0;
        let mut p = vec![0.0; self.s_max];
        let mut start = d;
        if d < TINY_OFFSET {
            // ∫_d^L w^{α−1} P_j(x−w) dw = F(L) − F(d), F exact via the c^{α−1} rule.
            let top = TINY_OFFSET.min(x);
            for (len, sign) in [(top, 1.0), (d, -1.0)] {
                if len == 0.0 {
                    continue;
                }
                let scale = sign * len.powf(self.alpha);
                for (&v, &w) in self.left_rule.nodes.iter().zip(&self.left_rule.weights) {
                    self.eval_into(x - len * v, &mut p);
                    for (o, pj) in out.iter_mut().zip(&p) {
                        *o += scale * w * pj;
                    }
                }
            }
            start = top;
        }
        while start < x {
            let end = (2.0 * start).min(x);
            let len = end - start;
            for (&u, &w) in self.near_rule.nodes.iter().zip(&self.near_rule.weights) {
                let wv = start + len * u;
                self.eval_into(x - wv, &mut p);
                let k = len * w * wv.powf(am1);
                for (o, pj) in out.iter_mut().zip(&p) {
                    *o += k * pj;
                }
            }
            start = end;
        }
        for o in out.iter_mut() {
            *o /= self.gamma_alpha;
        }
    }

    /// Nodes and weights of the fixed Legendre rule used for `2 ≤ x < 4`.
    pub fn smooth_rule(&self) -> &GaussRule {
        &self.smooth_rule
    }

    /// Series table `C_k M_{jk}/Γ(α)` (row-major, `series_terms × s_max`) used for `x ≥ 4`.
    pub fn series_table(&self) -> (&[f64], usize) {
        (&self.series, self.series_terms)
    }
}

pub fn make_basis(alpha: f64, s_max: usize) -> Result<JacobiBasis, OrthoError> {
    JacobiBasis::new(alpha, s_max)
}

pub fn eval_basis(basis: &JacobiBasis, c: f64) -> Vec<f64> {
    basis.eval(c)
}

pub fn frac_int_basis(basis: &JacobiBasis, c: f64) -> Result<Vec<f64>, OrthoError> {
    basis.frac_int(c)
}

pub fn tail_kernels(basis: &JacobiBasis, x: f64) -> Result<Vec<f64>, OrthoError> {
    basis.tail(x)
}
