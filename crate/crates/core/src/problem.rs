//! Multi-order Caputo initial-value problems and the built-in test set.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::special::{gamma, mittag_leffler_half_neg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("unsupported problem: {0}")]
    Unsupported(String),
    #[error("unknown problem '{0}' (expected one of p1, p2, p3, p4, p5a, p5b, p6)")]
    Unknown(String),
}

/// Right-hand side `f(t, y)` of the system, in the caller's component order.
///
/// Implementations must be reentrant: the solver may call them from several
/// threads on independent solves.
pub trait VectorField: Send + Sync {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// Row-major `∂f/∂y`. Returns false when no analytic Jacobian exists.
    fn jacobian(&self, _t: f64, _y: &[f64], _jac: &mut [f64]) -> bool {
        false
    }
}

/// Closure-backed field, optionally with a Jacobian closure.
pub struct FnField<F, J = fn(f64, &[f64], &mut [f64])> {
    f: F,
    jac: Option<J>,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f, jac: None }
    }
}

impl<F, J> FnField<F, J>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn with_jacobian(f: F, jac: J) -> Self {
        Self { f, jac: Some(jac) }
    }
}

impl<F, J> VectorField for FnField<F, J>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    J: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.f)(t, y, out)
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut [f64]) -> bool {
        match &self.jac {
            Some(j) => {
                j(t, y, jac);
                true
            }
            None => false,
        }
    }
}

pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A normalized multi-order problem.
///
/// Internally the equations are grouped into blocks of equal order (in order
/// of first appearance); `perm[internal] = user index`. Everything public that
/// takes or returns full state vectors uses the caller's ordering unless the
/// name says `internal`.
#[derive(Clone)]
pub struct FdeProblem {
    name: String,
    alphas: Vec<f64>,
    block_sizes: Vec<usize>,
    offsets: Vec<usize>,
    ell: usize,
    /// `taylor[ι]` holds `y^{(ι)}(0)` in internal order.
    taylor: Vec<Vec<f64>>,
    t_final: f64,
    field: Arc<dyn VectorField>,
    perm: Vec<usize>,
    identity: bool,
    user_orders: Vec<f64>,
    exact: Option<ExactSolution>,
    reference_endpoint: Option<Vec<f64>>,
}

impl fmt::Debug for FdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdeProblem")
            .field("name", &self.name)
            .field("alphas", &self.alphas)
            .field("block_sizes", &self.block_sizes)
            .field("ell", &self.ell)
            .field("t_final", &self.t_final)
            .field("perm", &self.perm)
            .finish_non_exhaustive()
    }
}

impl FdeProblem {
    /// `orders[e]` is the order of equation `e`; `initial[ι][e] = y_e^{(ι)}(0)`
    /// for `ι < ℓ = ⌈α⌉`.
    pub fn new(
        name: impl Into<String>,
        orders: &[f64],
        initial: Vec<Vec<f64>>,
        t_final: f64,
        field: Arc<dyn VectorField>,
    ) -> Result<Self, ProblemError> {
        let m = orders.len();
        if m == 0 {
            return Err(ProblemError::Invalid("no equations".into()));
        }
        if let Some(a) = orders.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(ProblemError::Invalid(format!("order {a} is not positive")));
        }
        let ell = orders[0].ceil();
        if orders.iter().any(|a| a.ceil() != ell) {
            return Err(ProblemError::Unsupported(format!(
                "orders {orders:?} do not share a common integer ceiling"
            )));
        }
        let ell = ell as usize;
        if initial.len() != ell {
            return Err(ProblemError::Invalid(format!(
                "expected {ell} rows of initial data, got {}",
                initial.len()
            )));
        }
        if let Some(row) = initial.iter().find(|r| r.len() != m) {
            return Err(ProblemError::Invalid(format!(
                "initial data row of length {} for {m} equations",
                row.len()
            )));
        }
        if initial.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ProblemError::Invalid("non-finite initial data".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(ProblemError::Invalid(format!("final time {t_final} must be positive")));
        }

        let mut alphas: Vec<f64> = Vec::new();
        for &a in orders {
            if !alphas.contains(&a) {
                alphas.push(a);
            }
        }
        let mut perm = Vec::with_capacity(m);
        let mut block_sizes = Vec::with_capacity(alphas.len());
        for &a in &alphas {
            let before = perm.len();
            perm.extend((0..m).filter(|&e| orders[e] == a));
            block_sizes.push(perm.len() - before);
        }
        let mut offsets = vec![0];
        for &b in &block_sizes {
            offsets.push(offsets.last().unwrap() + b);
        }
        let identity = perm.iter().enumerate().all(|(i, &p)| i == p);
        let taylor = initial
            .iter()
            .map(|row| perm.iter().map(|&p| row[p]).collect())
            .collect();

        let problem = Self {
            name: name.into(),
            alphas,
            block_sizes,
            offsets,
            ell,
            taylor,
            t_final,
            field,
            perm,
            identity,
            user_orders: orders.to_vec(),
            exact: None,
            reference_endpoint: None,
        };
        let mut f0 = vec![0.0; m];
        problem.field.eval(0.0, &initial[0], &mut f0);
        if f0.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::Invalid("field is not finite at the initial data".into()));
        }
        Ok(problem)
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_reference_endpoint(mut self, y: Vec<f64>) -> Self {
        self.reference_endpoint = Some(y);
        self
    }

    pub fn with_t_final(mut self, t_final: f64) -> Result<Self, ProblemError> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(ProblemError::Invalid(format!("final time {t_final} must be positive")));
        }
        if t_final != self.t_final {
            self.reference_endpoint = None;
        }
        self.t_final = t_final;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nu(&self) -> usize {
        self.alphas.len()
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Distinct orders, one per block.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn user_orders(&self) -> &[f64] {
        &self.user_orders
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Internal index range of block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|f| f(t))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn reference_endpoint(&self) -> Option<&[f64]> {
        self.reference_endpoint.as_deref()
    }

    /// Initial values `y(0)` in user order.
    pub fn initial_values(&self) -> Vec<f64> {
        self.to_user(&self.taylor[0])
    }

    /// `T_iℓ(t) = Σ_{ι<ℓ} y_{i0}^ι t^ι/ι!` for block `i`.
    pub fn taylor_term(&self, i: usize, t: f64) -> Vec<f64> {
        let range = self.block_range(i);
        let mut out = vec![0.0; range.len()];
        let mut coef = 1.0;
        for (iota, row) in self.taylor.iter().enumerate() {
            if iota > 0 {
                coef *= t / iota as f64;
            }
            for (o, v) in out.iter_mut().zip(&row[range.clone()]) {
                *o += coef * v;
            }
        }
        out
    }

    /// All blocks of the Taylor term, internal order.
    pub fn taylor_internal(&self, t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.taylor[0]);
        let mut coef = 1.0;
        for (iota, row) in self.taylor.iter().enumerate().skip(1) {
            coef *= t / iota as f64;
            for (o, v) in out.iter_mut().zip(row) {
                *o += coef * v;
            }
        }
    }

    pub fn to_user(&self, internal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; internal.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = internal[i];
        }
        out
    }

    pub fn to_internal(&self, user: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&p| user[p]).collect()
    }

    /// `f(t, y)` with `y` and the result in internal order.
    pub fn eval_internal(&self, t: f64, y: &[f64], out: &mut [f64]) {
        if self.identity {
            self.field.eval(t, y, out);
            return;
        }
        let yu = self.to_user(y);
        let mut fu = vec![0.0; y.len()];
        self.field.eval(t, &yu, &mut fu);
        for (o, &p) in out.iter_mut().zip(&self.perm) {
            *o = fu[p];
        }
    }

    /// `f(t, y)` in user order.
    pub fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self.field.eval(t, y, out);
    }

    /// Row-major `∂f/∂y` in user order; central differences with step
    /// `(1+|y_j|)·ε^{1/3}` when the field has no analytic Jacobian.
    pub fn jacobian(&self, t: f64, y: &[f64], jac: &mut [f64]) {
        if self.field.jacobian(t, y, jac) {
            return;
        }
        let m = y.len();
        let mut yp = y.to_vec();
        let mut fp = vec![0.0; m];
        let mut fm = vec![0.0; m];
        let base = f64::EPSILON.cbrt();
        for j in 0..m {
            let h = (1.0 + y[j].abs()) * base;
            yp[j] = y[j] + h;
            self.field.eval(t, &yp, &mut fp);
            yp[j] = y[j] - h;
            self.field.eval(t, &yp, &mut fm);
            yp[j] = y[j];
            for i in 0..m {
                jac[i * m + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
    }

    /// Jacobian in internal order (rows and columns permuted).
    pub fn jacobian_internal(&self, t: f64, y: &[f64], jac: &mut [f64]) {
        let m = y.len();
        if self.identity {
            self.jacobian(t, y, jac);
            return;
        }
        let yu = self.to_user(y);
        let mut ju = vec![0.0; m * m];
        self.jacobian(t, &yu, &mut ju);
        for (a, &pa) in self.perm.iter().enumerate() {
            for (b, &pb) in self.perm.iter().enumerate() {
                jac[a * m + b] = ju[pa * m + pb];
            }
        }
    }
}

pub fn taylor_term(problem: &FdeProblem, i: usize, t: f64) -> Vec<f64> {
    problem.taylor_term(i, t)
}

/// Groups equations by order; see [`FdeProblem::new`].
pub fn normalize(
    name: &str,
    orders: &[f64],
    initial: Vec<Vec<f64>>,
    t_final: f64,
    field: Arc<dyn VectorField>,
) -> Result<FdeProblem, ProblemError> {
    FdeProblem::new(name, orders, initial, t_final, field)
}

/// `y' = A y + b` with `A` row-major.
#[derive(Debug, Clone)]
pub struct LinearField {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl VectorField for LinearField {
    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        let m = y.len();
        for i in 0..m {
            let row = &self.a[i * m..(i + 1) * m];
            out[i] = self.b[i] + row.iter().zip(y).map(|(a, v)| a * v).sum::<f64>();
        }
    }

    fn jacobian(&self, _t: f64, _y: &[f64], jac: &mut [f64]) -> bool {
        jac.copy_from_slice(&self.a);
        true
    }
}

/// `s(t, α, β) = (1−t²)² + 4t^α + (2 − 3t^{0.2}) t^{α+β}`.
pub fn p3_solution(t: f64, alpha: f64, beta: f64) -> f64 {
    let u = 1.0 - t * t;
    u * u + 4.0 * t.powf(alpha) + (2.0 - 3.0 * t.powf(0.2)) * t.powf(alpha + beta)
}

/// Caputo derivative of order `α` of `s(·, α, β)`.
pub fn p3_forcing(t: f64, alpha: f64, beta: f64) -> f64 {
    24.0 * t.powf(4.0 - alpha) / gamma(5.0 - alpha) - 4.0 * t.powf(2.0 - alpha) / gamma(3.0 - alpha)
        - 3.0 * t.powf(0.2 + beta) * gamma(1.2 + alpha + beta) / gamma(1.2 + beta)
        + 2.0 * t.powf(beta) * gamma(1.0 + alpha + beta) / gamma(1.0 + beta)
        + 4.0 * gamma(1.0 + alpha)
}

/// `(s(t, α, β), g(t, α, β))`.
pub fn exact_p3(t: f64, alpha: f64, beta: f64) -> (f64, f64) {
    (p3_solution(t, alpha, beta), p3_forcing(t, alpha, beta))
}

#[derive(Debug, Clone)]
pub struct P3Field {
    pub alphas: [f64; 2],
    pub beta: f64,
}

impl VectorField for P3Field {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        let [a1, a2] = self.alphas;
        let b = self.beta;
        let s1 = p3_solution(t, a1, b);
        let s2 = p3_solution(t, a2, b);
        out[0] = s2 * s2 - y[1] * y[1] + p3_forcing(t, a1, b);
        out[1] = -s1 * s1 + y[0] * y[0] + p3_forcing(t, a2, b);
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut [f64]) -> bool {
        jac.copy_from_slice(&[0.0, -2.0 * y[1], 2.0 * y[0], 0.0]);
        true
    }
}

#[derive(Debug, Clone)]
pub struct BrusselatorField {
    pub a: f64,
    pub b: f64,
}

impl VectorField for BrusselatorField {
    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        let q = y[0] * y[0] * y[1];
        out[0] = self.a - (self.b + 1.0) * y[0] + q;
        out[1] = self.b * y[0] - q;
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut [f64]) -> bool {
        let xy = 2.0 * y[0] * y[1];
        let xx = y[0] * y[0];
        jac.copy_from_slice(&[xy - (self.b + 1.0), xx, self.b - xy, -xx]);
        true
    }
}

/// Three-species food chain with intra-species competition.
#[derive(Debug, Clone)]
pub struct PredatorPreyField {
    pub r: [f64; 3],
    pub a: [[f64; 3]; 3],
    pub beta: f64,
}

impl VectorField for PredatorPreyField {
    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        let (r, a) = (&self.r, &self.a);
        let sat = 1.0 / (1.0 + self.beta * y[1]);
        out[0] = r[0] * y[0] - a[0][0] * y[0] * y[0] - a[0][1] * y[0] * y[1] - a[0][2] * y[0] * y[2];
        out[1] = a[1][0] * y[0] * y[1] - a[1][1] * y[1] * y[1] - a[1][2] * y[1] * y[2] * sat - r[1] * y[1];
        out[2] = a[2][0] * y[0] * y[2] + a[2][1] * y[1] * y[2] * sat - a[2][2] * y[2] * y[2] - r[2] * y[2];
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut [f64]) -> bool {
        let (r, a) = (&self.r, &self.a);
        let sat = 1.0 / (1.0 + self.beta * y[1]);
        let dsat = sat * sat;
        jac[0] = r[0] - 2.0 * a[0][0] * y[0] - a[0][1] * y[1] - a[0][2] * y[2];
        jac[1] = -a[0][1] * y[0];
        jac[2] = -a[0][2] * y[0];
        jac[3] = a[1][0] * y[1];
        jac[4] = a[1][0] * y[0] - 2.0 * a[1][1] * y[1] - a[1][2] * y[2] * dsat - r[1];
        jac[5] = -a[1][2] * y[1] * sat;
        jac[6] = a[2][0] * y[2];
        jac[7] = a[2][1] * y[2] * dsat;
        jac[8] = a[2][0] * y[0] + a[2][1] * y[1] * sat - 2.0 * a[2][2] * y[2] - r[2];
        true
    }
}

pub const REGISTRY_NAMES: [&str; 7] = ["p1", "p2", "p3", "p4", "p5a", "p5b", "p6"];

pub const P4_REFERENCE: [f64; 2] = [1.706502172199, 1.940414058005];

/// Exact solution of the stiff linear test problem. `A` has eigenpairs
/// `(−1, (1,−1))` and `(−30, (3,2))`, the equilibrium is `(2, −5/2)`, and
/// `E_{1/2}(−z) = erfcx(z)`.
pub fn exact_p1(t: f64) -> Vec<f64> {
    let rt = t.sqrt();
    let e1 = mittag_leffler_half_neg(-rt);
    let e2 = mittag_leffler_half_neg(-30.0 * rt);
    let (c1, c2) = (-6.3, 3.1);
    vec![2.0 + c1 * e1 + 3.0 * c2 * e2, -2.5 - c1 * e1 + 2.0 * c2 * e2]
}

fn brusselator(name: &str, orders: [f64; 2]) -> Result<FdeProblem, ProblemError> {
    FdeProblem::new(
        name,
        &orders,
        vec![vec![1.2, 2.8]],
        100.0,
        Arc::new(BrusselatorField { a: 1.0, b: 3.0 }),
    )
}

/// Built-in test problems.
pub fn registry(name: &str) -> Result<FdeProblem, ProblemError> {
    match name {
        "p1" => {
            let a = [-92.0, -87.0, -58.0, -63.0].iter().map(|v| v / 5.0).collect();
            let b = vec![-6.7, -8.3];
            let p = FdeProblem::new(
                "p1",
                &[0.5, 0.5],
                vec![vec![5.0, 10.0]],
                100.0,
                Arc::new(LinearField { a, b }),
            )?;
            Ok(p.with_exact(Arc::new(exact_p1)))
        }
        "p2" => {
            #[rustfmt::skip]
            let a = [
                41.0, 41.0, -38.0, 40.0, -2.0,
                -79.0, 81.0, 2.0, 0.0, -2.0,
                20.0, -60.0, 20.0, -20.0, -8.0,
                -22.0, 58.0, -24.0, 20.0, -4.0,
                1.0, 1.0, -2.0, -4.0, -2.0,
            ];
            let a = a.iter().map(|v| v / 8.0).collect();
            FdeProblem::new(
                "p2",
                &[0.5; 5],
                vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]],
                20.0,
                Arc::new(LinearField { a, b: vec![0.0; 5] }),
            )
        }
        "p3" => {
            let (a1, a2, beta) = (0.2, 0.4, 0.1);
            let p = FdeProblem::new(
                "p3",
                &[a1, a2],
                vec![vec![1.0, 1.0]],
                2.0,
                Arc::new(P3Field { alphas: [a1, a2], beta }),
            )?;
            Ok(p.with_exact(Arc::new(move |t| {
                vec![p3_solution(t, a1, beta), p3_solution(t, a2, beta)]
            })))
        }
        "p4" => Ok(brusselator("p4", [0.8, 0.7])?.with_reference_endpoint(P4_REFERENCE.to_vec())),
        "p5a" => brusselator("p5a", [0.7, 0.7]),
        "p5b" => brusselator("p5b", [0.7, 0.7 + 1e-4]),
        "p6" => FdeProblem::new(
            "p6",
            &[0.99, 0.8, 0.8],
            vec![vec![0.7, 0.2, 0.1]],
            500.0,
            Arc::new(PredatorPreyField {
                r: [5.0, 1.0, 0.1],
                a: [[0.01, 1.0, 35.0], [1.0, 0.2, 1.0], [0.1, 1.0, 0.3]],
                beta: 0.01,
            }),
        ),
        other => Err(ProblemError::Unknown(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping() {
        let p = registry("p4").unwrap();
        assert_eq!(p.nu(), 2);
        assert_eq!(p.block_sizes(), &[1, 1]);
        let p = registry("p6").unwrap();
        assert_eq!(p.alphas(), &[0.99, 0.8]);
        assert_eq!(p.block_sizes(), &[1, 2]);
        let p = registry("p5a").unwrap();
        assert_eq!(p.nu(), 1);
        assert_eq!(p.block_sizes(), &[2]);
    }

    #[test]
    fn permutation_round_trip() {
        let field = Arc::new(FnField::new(|_t: f64, y: &[f64], out: &mut [f64]| {
            for (o, v) in out.iter_mut().zip(y) {
                *o = -v;
            }
        }));
        let p = FdeProblem::new("x", &[0.3, 0.6, 0.3, 0.6], vec![vec![1.0, 2.0, 3.0, 4.0]], 1.0, field).unwrap();
        assert_eq!(p.permutation(), &[0, 2, 1, 3]);
        let u = vec![10.0, 20.0, 30.0, 40.0];
        assert_eq!(p.to_user(&p.to_internal(&u)), u);
        assert_eq!(p.taylor_term(0, 0.5), vec![1.0, 3.0]);
        let mut out = vec![0.0; 4];
        p.eval_internal(0.0, &p.to_internal(&u), &mut out);
        assert_eq!(p.to_user(&out), vec![-10.0, -20.0, -30.0, -40.0]);
    }

    #[test]
    fn mixed_ceilings_are_unsupported() {
        let field = Arc::new(FnField::new(|_t: f64, _y: &[f64], _o: &mut [f64]| {}));
        let err = FdeProblem::new("x", &[0.5, 1.5], vec![vec![0.0, 0.0]; 2], 1.0, field).unwrap_err();
        assert!(matches!(err, ProblemError::Unsupported(_)));
    }

    #[test]
    fn second_order_taylor() {
        let field = Arc::new(FnField::new(|_t: f64, _y: &[f64], o: &mut [f64]| o[0] = 0.0));
        let p = FdeProblem::new("x", &[1.5], vec![vec![1.0], vec![2.0]], 1.0, field).unwrap();
        assert_eq!(p.ell(), 2);
        assert_eq!(p.taylor_term(0, 0.5), vec![2.0]);
        assert_eq!(p.taylor_term(0, 0.0), vec![1.0]);
    }

    #[test]
    fn p3_values() {
        for &a in &[0.2, 0.4] {
            assert_eq!(p3_solution(0.0, a, 0.1), 1.0);
            assert!((p3_solution(1.0, a, 0.1) - 3.0).abs() < 1e-15);
            let g0 = p3_forcing(0.0, a, 0.1);
            assert!((g0 - 4.0 * gamma(1.0 + a)).abs() < 1e-14);
        }
    }

    #[test]
    fn p1_exact_start() {
        let y = exact_p1(0.0);
        assert!((y[0] - 5.0).abs() < 1e-14 && (y[1] - 10.0).abs() < 1e-14);
        // Long-time limit is the equilibrium.
        let y = exact_p1(1e12);
        assert!((y[0] - 2.0).abs() < 1e-4 && (y[1] + 2.5).abs() < 1e-4);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(registry("p7"), Err(ProblemError::Unknown(_))));
    }
}
