//! Jacobi–Piñeiro multiple orthogonal polynomials and the shared-abscissae
//! quadratures built from them.

use thiserror::Error;

use crate::linalg::{hessenberg_eigenvalues, lu_factor, DenseMatrix, LinalgError};
use crate::ortho_poly::{JacobiBasis, OrthoError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MopError {
    #[error("invalid quadrature request: {0}")]
    Invalid(String),
    #[error("degenerate weight system: zero denominator for a[{j}][{i}]")]
    ZeroDenominator { j: usize, i: usize },
    #[error("balancing failed: non-positive product on row {row}")]
    Balance { row: usize },
    #[error("abscissae failure: {0}")]
    Abscissae(String),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `q = ⌈2s/(ν+1)⌉` and `k = νq`.
pub fn select_qk(nu: usize, s: usize) -> (usize, usize) {
    let q = (2 * s).div_ceil(nu + 1);
    (q, nu * q)
}

/// `φ = ⌈(ν+1)q/2 − 1/2⌉`, i.e. `⌊(ν+1)q/2⌋`.
pub fn phi_nodes(nu: usize, s: usize) -> usize {
    let (q, _) = select_qk(nu, s);
    (nu + 1) * q / 2
}

/// Index of the weight that the `i`-th orthogonality condition uses (1-based).
fn xi(i: usize, nu: usize) -> usize {
    match i % nu {
        0 => nu,
        r => r,
    }
}

#[derive(Debug, Clone)]
pub struct MopRecurrence {
    pub alphas: Vec<f64>,
    pub q: usize,
    pub k: usize,
    /// `coeffs[j−1][i−lo(j)]` holds `a_{ji}` for `lo(j) = max(1, j−ν) ≤ i ≤ j`.
    pub coeffs: Vec<Vec<f64>>,
    pub phi_nodes: usize,
}

impl MopRecurrence {
    pub fn nu(&self) -> usize {
        self.alphas.len()
    }

    pub fn band_start(&self, j: usize) -> usize {
        j.saturating_sub(self.nu()).max(1)
    }

    /// `a_{ji}`, zero outside the band.
    pub fn coeff(&self, j: usize, i: usize) -> f64 {
        let lo = self.band_start(j);
        if j == 0 || i < lo || i > j {
            0.0
        } else {
            self.coeffs[j - 1][i - lo]
        }
    }

    /// Values `π_0(c)..π_k(c)` by the recurrence.
    pub fn eval_monic(&self, c: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.k + 1);
        p.push(1.0);
        for j in 1..=self.k {
            let lo = self.band_start(j);
            let mut v = c * p[j - 1];
            for i in lo..=j {
                v -= self.coeff(j, i) * p[i - 1];
            }
            p.push(v);
        }
        p
    }

    /// `π_k(c)` and `π_k'(c)` by the recurrence and its derivative.
    pub fn eval_top_with_derivative(&self, c: f64) -> (f64, f64) {
        let mut p = Vec::with_capacity(self.k + 1);
        let mut dp = Vec::with_capacity(self.k + 1);
        p.push(1.0);
        dp.push(0.0);
        for j in 1..=self.k {
            let mut v = c * p[j - 1];
            let mut dv = p[j - 1] + c * dp[j - 1];
            for i in self.band_start(j)..=j {
                let a = self.coeff(j, i);
                v -= a * p[i - 1];
                dv -= a * dp[i - 1];
            }
            p.push(v);
            dp.push(dv);
        }
        (p[self.k], dp[self.k])
    }

    /// Newton refinement of an eigenvalue estimate as a zero of `π_k`.
    /// Returns the estimate unchanged when the iteration misbehaves.
    pub fn polish_zero(&self, c0: f64, lower: f64, upper: f64) -> f64 {
        let mut c = c0;
        for _ in 0..6 {
            let (v, dv) = self.eval_top_with_derivative(c);
            if v == 0.0 {
                break;
            }
            if !(dv.is_finite() && dv != 0.0) {
                return c0;
            }
            let step = v / dv;
            let next = c - step;
            if !(next > lower && next < upper) {
                return c0;
            }
            c = next;
            if step.abs() <= 4.0 * f64::EPSILON * c.abs() {
                break;
            }
        }
        c
    }
}

fn validate_alphas(alphas: &[f64]) -> Result<(), MopError> {
    if alphas.is_empty() {
        return Err(MopError::Invalid("at least one order is required".into()));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(MopError::Invalid(format!("orders must be positive: {alphas:?}")));
    }
    Ok(())
}

/// Number of orthogonality conditions `π_n` satisfies against weight `w` (0-based).
fn condition_count(n: usize, nu: usize, w: usize) -> usize {
    n / nu + usize::from(w < n % nu)
}

/// `∫_0^1 π_n(c) (1−c)^{m} (1−c)^{α_w−1} dc` in closed form.
///
/// With `x = 1−c` the polynomial `π_n` is orthogonal to `x^{m'} x^{e_l}`
/// (`e_l = α_l − 1`) for its conditions `(l, m')`, which pins down the
/// partial-fraction form of `z ↦ ∫ π_n x^{z} dx`; evaluating it at
/// `z = e_w + m` gives a pure product with no cancellation.
fn closed_moment(n: usize, w: usize, m: usize, expo: &[f64]) -> f64 {
    let nu = expo.len();
    let z = expo[w] + m as f64;
    let mut v = 1.0 / (z + 1.0);
    if n % 2 == 1 {
        v = -v;
    }
    for k in 1..=n {
        v *= k as f64 / (z + k as f64 + 1.0);
    }
    for (l, &el) in expo.iter().enumerate() {
        let dl = expo[w] - el;
        for mp in 0..condition_count(n, nu, l) {
            let diff = dl + (m as f64 - mp as f64);
            if diff == 0.0 {
                return 0.0;
            }
            v *= diff / (n as f64 + 1.0 + el + mp as f64);
        }
    }
    v
}

/// Recurrence coefficients `a_ji` for the Jacobi–Piñeiro weights `(1−c)^{α_i−1}`.
///
/// Each `a_ji` is fixed, in the order `i = max(1, j−ν)..j`, by the
/// orthogonality condition of index `i` (weight `ξ(i)`, degree `⌊(i−1)/ν⌋`).
/// The inner products entering those conditions are evaluated in closed
/// form; see [`closed_moment`].
pub fn mop_recurrence(alphas: &[f64], s: usize) -> Result<MopRecurrence, MopError> {
    validate_alphas(alphas)?;
    if s == 0 {
        return Err(MopError::Invalid("s must be at least 1".into()));
    }
    let nu = alphas.len();
    let (q, k) = select_qk(nu, s);
    let phi = phi_nodes(nu, s);
    let expo: Vec<f64> = alphas.iter().map(|a| a - 1.0).collect();

    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 1..=k {
        let lo = j.saturating_sub(nu).max(1);
        let mut row: Vec<f64> = Vec::with_capacity(j - lo + 1);
        for i in lo..=j {
            let w = xi(i, nu) - 1;
            let m = (i - 1) / nu;
            let mut rhs = closed_moment(j - 1, w, m, &expo) - closed_moment(j - 1, w, m + 1, &expo);
            for (io, a) in (lo..i).zip(&row) {
                rhs -= a * closed_moment(io - 1, w, m, &expo);
            }
            let den = closed_moment(i - 1, w, m, &expo);
            if den == 0.0 || !den.is_finite() {
                return Err(MopError::ZeroDenominator { j, i });
            }
            let a = rhs / den;
            if !a.is_finite() {
                return Err(MopError::ZeroDenominator { j, i });
            }
            row.push(a);
        }
        coeffs.push(row);
    }
    Ok(MopRecurrence {
        alphas: alphas.to_vec(),
        q,
        k,
        coeffs,
        phi_nodes: phi,
    })
}

/// Lower Hessenberg `H_k` with unit superdiagonal and `H[j−1][i−1] = a_{ji}`.
pub fn build_hessenberg(rec: &MopRecurrence) -> DenseMatrix {
    let k = rec.k;
    let mut h = DenseMatrix::zeros(k, k);
    for j in 1..=k {
        for i in rec.band_start(j)..=j {
            h[(j - 1, i - 1)] = rec.coeff(j, i);
        }
        if j < k {
            h[(j - 1, j)] = 1.0;
        }
    }
    h
}

/// Diagonal similarity `H' = D H D^{−1}` symmetrizing the tridiagonal part.
/// Returns the diagonal of `D` and `H'`.
pub fn balance(h: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix), MopError> {
    let n = h.rows();
    let mut d = vec![1.0; n];
    for j in 1..n {
        let prod = h[(j, j - 1)] * h[(j - 1, j)];
        if !(prod > 0.0) {
            if prod == 0.0 && h[(j, j - 1)] == 0.0 && h[(j - 1, j)] == 0.0 {
                d[j] = d[j - 1];
                continue;
            }
            return Err(MopError::Balance { row: j });
        }
        // d_{j−1}/d_j H_{j−1,j} = d_j/d_{j−1} H_{j,j−1}
        d[j] = d[j - 1] * (h[(j - 1, j)] / h[(j, j - 1)]).sqrt();
    }
    let mut out = h.clone();
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = d[a] * h[(a, b)] / d[b];
        }
    }
    Ok((d, out))
}

/// Shared abscissae, per-order weights and the precomputed node tables.
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    pub alphas: Vec<f64>,
    pub s: usize,
    pub q: usize,
    pub k: usize,
    pub phi: usize,
    pub abscissae: Vec<f64>,
    /// `weights[i][ρ] = b_ρ^i`.
    pub weights: Vec<Vec<f64>>,
    /// `s × k` tables `P_j^i(c_ρ)`.
    pub basis_at_nodes: Vec<DenseMatrix>,
    /// `k × s` tables `I^{α_i} P_j^i(c_ρ)`.
    pub fracint_at_nodes: Vec<DenseMatrix>,
    /// `x_blocks[i][j] = X_ij` (`s × s`).
    pub x_blocks: Vec<Vec<DenseMatrix>>,
    /// `I^{α_i} P_j^i(1)`.
    pub endpoint_fracint: Vec<Vec<f64>>,
    pub bases: Vec<JacobiBasis>,
    /// False when balancing failed and the raw matrix was used.
    pub balanced: bool,
}

impl QuadratureSet {
    pub fn nu(&self) -> usize {
        self.alphas.len()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &w| m.min(w))
    }

    /// `Σ_ρ b_ρ^i c_ρ^d` minus the exact moment `Γ(d+1)Γ(α+1)/Γ(d+α+1)`, maximized over `d ≤ max_degree`.
    pub fn max_moment_residual(&self, max_degree: usize) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.weights)
            .map(|(&alpha, w)| {
                let mut worst = 0.0f64;
                let mut exact = 1.0;
                let mut pows = vec![1.0; self.k];
                for d in 0..=max_degree {
                    if d > 0 {
                        exact *= d as f64 / (d as f64 + alpha);
                        for (p, c) in pows.iter_mut().zip(&self.abscissae) {
                            *p *= c;
                        }
                    }
                    let approx: f64 = w.iter().zip(&pows).map(|(b, p)| b * p).sum();
                    worst = worst.max((approx - exact).abs());
                }
                worst
            })
            .collect()
    }
}

/// Eigenvector of `mat` (or of its transpose) for the eigenvalue estimate `c`,
/// by inverse iteration, scaled to unit max norm.
fn inverse_iteration(mat: &DenseMatrix, c: f64, transpose: bool) -> Result<Vec<f64>, MopError> {
    let n = mat.rows();
    let base = if transpose { mat.transpose() } else { mat.clone() };
    let scale = base.max_abs().max(1.0);
    let mut shift = c;
    let mut factors = None;
    for _ in 0..4 {
        let mut a = base.clone();
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        match lu_factor(&a) {
            Ok(f) => {
                factors = Some(f);
                break;
            }
            Err(LinalgError::Singular { .. }) => shift += 8.0 * f64::EPSILON * scale,
            Err(e) => return Err(e.into()),
        }
    }
    let factors = factors.ok_or_else(|| MopError::Abscissae(format!("no eigenvector at {c}")))?;
    let mut y = vec![1.0; n];
    for _ in 0..3 {
        factors.solve_in_place(&mut y)?;
        let big = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(big.is_finite() && big > 0.0) {
            return Err(MopError::Abscissae(format!("inverse iteration broke down at {c}")));
        }
        for v in &mut y {
            *v /= big;
        }
    }
    Ok(y)
}

/// Weights from the eigenvectors of `H' = D H D^{−1}`.
///
/// The right eigenvector of `H` at `c_ρ` is `(π_0, …, π_{k−1})(c_ρ)`, so the
/// interpolatory weights solve `Σ_ρ b_ρ v_ρ = m` with `m_j = ∫ω π_j`. Only the
/// first `ν` entries of `m` are non-zero and they are known in closed form,
/// which gives `b_ρ = u_ρᵀ m / u_ρᵀ v_ρ` for the left eigenvector `u_ρ`.
/// Integrating Lagrange polynomials instead loses most digits when the
/// nodes crowd the right endpoint.
fn eigenvector_weights(
    mat: &DenseMatrix,
    d: &[f64],
    nodes: &[f64],
    alphas: &[f64],
) -> Result<Vec<Vec<f64>>, MopError> {
    let k = nodes.len();
    let expo: Vec<f64> = alphas.iter().map(|a| a - 1.0).collect();
    let moments: Vec<Vec<f64>> = alphas
        .iter()
        .enumerate()
        .map(|(w, &a)| {
            (0..k)
                .map(|j| a * d[j] * closed_moment(j, w, 0, &expo))
                .collect()
        })
        .collect();
    let mut weights = vec![vec![0.0; k]; alphas.len()];
    for (r, &c) in nodes.iter().enumerate() {
        let mut v = inverse_iteration(mat, c, false)?;
        let v0 = v[0];
        for x in &mut v {
            *x /= v0;
        }
        let u = inverse_iteration(mat, c, true)?;
        let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        for (b, m) in weights.iter_mut().zip(&moments) {
            let um: f64 = u.iter().zip(m).map(|(a, b)| a * b).sum();
            b[r] = um / uv;
        }
    }
    Ok(weights)
}

pub fn build_quadrature(alphas: &[f64], s: usize) -> Result<QuadratureSet, MopError> {
    validate_alphas(alphas)?;
    let ell = alphas[0].ceil();
    if alphas.iter().any(|a| a.ceil() != ell) {
        return Err(MopError::Invalid(format!(
            "orders {alphas:?} do not share a common integer ceiling"
        )));
    }
    let rec = mop_recurrence(alphas, s)?;
    let nu = alphas.len();
    let (q, k) = (rec.q, rec.k);
    let h = build_hessenberg(&rec);
    let (d, mat, balanced) = match balance(&h) {
        Ok((d, hb)) => (d, hb, true),
        Err(_) => (vec![1.0; k], h, false),
    };
    let mut nodes = hessenberg_eigenvalues(&mat)?;
    // Each estimate is refined inside the gap to its neighbours.
    let raw = nodes.clone();
    for r in 0..k {
        let lower = if r == 0 { 0.0 } else { 0.5 * (raw[r - 1] + raw[r]) };
        let upper = if r + 1 == k { 1.0 } else { 0.5 * (raw[r] + raw[r + 1]) };
        nodes[r] = rec.polish_zero(raw[r], lower, upper);
    }
    let tol = 1e-12;
    for c in &mut nodes {
        if *c < -tol || *c > 1.0 + tol {
            return Err(MopError::Abscissae(format!("abscissa {c} outside [0,1]")));
        }
        if *c <= 0.0 || *c >= 1.0 {
            return Err(MopError::Abscissae(format!("abscissa {c} on the boundary")));
        }
    }
    for pair in nodes.windows(2) {
        if pair[1] - pair[0] <= 1e-14 {
            return Err(MopError::Abscissae(format!(
                "abscissae {} and {} are not distinct",
                pair[0], pair[1]
            )));
        }
    }

    let weights = eigenvector_weights(&mat, &d, &nodes, alphas)?;
    if weights.iter().flatten().any(|w| !w.is_finite()) {
        return Err(MopError::Abscissae("non-finite quadrature weight".into()));
    }

    let bases = alphas
        .iter()
        .map(|&a| JacobiBasis::new(a, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut basis_at_nodes = Vec::with_capacity(nu);
    let mut fracint_at_nodes = Vec::with_capacity(nu);
    let mut endpoint_fracint = Vec::with_capacity(nu);
    for basis in &bases {
        let mut pm = DenseMatrix::zeros(s, k);
        let mut im = DenseMatrix::zeros(k, s);
        for (r, &c) in nodes.iter().enumerate() {
            let p = basis.eval(c);
            let fi = basis.frac_int(c)?;
            for j in 0..s {
                pm[(j, r)] = p[j];
                im[(r, j)] = fi[j];
            }
        }
        basis_at_nodes.push(pm);
        fracint_at_nodes.push(im);
        endpoint_fracint.push(basis.frac_int(1.0)?);
    }
    let mut x_blocks = Vec::with_capacity(nu);
    for i in 0..nu {
        let mut pb = basis_at_nodes[i].clone();
        for j in 0..s {
            for r in 0..k {
                pb[(j, r)] *= weights[i][r];
            }
        }
        let row = (0..nu)
            .map(|j| pb.matmul(&fracint_at_nodes[j]))
            .collect::<Result<Vec<_>, _>>()?;
        x_blocks.push(row);
    }

    Ok(QuadratureSet {
        alphas: alphas.to_vec(),
        s,
        q,
        k,
        phi: rec.phi_nodes,
        abscissae: nodes,
        weights,
        basis_at_nodes,
        fracint_at_nodes,
        x_blocks,
        endpoint_fracint,
        bases,
        balanced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let ks: Vec<usize> = (1..=5).map(|nu| select_qk(nu, 22).1).collect();
        assert_eq!(ks, vec![22, 30, 33, 36, 40]);
        let phis: Vec<usize> = (1..=5).map(|nu| phi_nodes(nu, 22)).collect();
        assert_eq!(phis, vec![22, 22, 22, 22, 24]);
        assert_eq!(select_qk(1, 1), (1, 1));
        assert_eq!(phi_nodes(1, 1), 1);
        assert_eq!(select_qk(2, 22), (15, 30));
        assert_eq!(select_qk(5, 22), (8, 40));
    }

    #[test]
    fn first_coefficient_is_first_moment() {
        for &a in &[0.2, 0.5, 0.9] {
            let rec = mop_recurrence(&[a, a + 0.05], 6).unwrap();
            assert!((rec.coeff(1, 1) - 1.0 / (a + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn two_node_legendre() {
        let qs = build_quadrature(&[1.0], 2).unwrap();
        let d = 0.5 / 3f64.sqrt();
        assert!((qs.abscissae[0] - (0.5 - d)).abs() < 1e-14);
        assert!((qs.abscissae[1] - (0.5 + d)).abs() < 1e-14);
        assert!(qs.weights[0].iter().all(|w| (w - 0.5).abs() < 1e-14));
    }

    #[test]
    fn hessenberg_structure() {
        let rec = mop_recurrence(&[0.3, 0.6, 0.9], 6).unwrap();
        let h = build_hessenberg(&rec);
        for j in 1..=rec.k {
            let band = (0..rec.k).filter(|&c| c < j && h[(j - 1, c)] != 0.0).count();
            assert_eq!(band, rec.nu().min(j - 1) + 1);
            for c in j + 1..rec.k {
                assert_eq!(h[(j - 1, c)], 0.0);
            }
            if j < rec.k {
                assert_eq!(h[(j - 1, j)], 1.0);
            }
        }
    }

    #[test]
    fn balance_of_symmetric_is_identity() {
        let h = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![2.0, 1.0, 3.0],
            vec![0.0, 3.0, 1.0],
        ])
        .unwrap();
        let (d, hb) = balance(&h).unwrap();
        assert!(d.iter().all(|&v| v == 1.0));
        assert_eq!(hb, h);
        let bad = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(matches!(balance(&bad), Err(MopError::Balance { row: 1 })));
    }

    #[test]
    fn weights_sum_to_one() {
        let qs = build_quadrature(&[0.2, 0.4], 10).unwrap();
        for w in &qs.weights {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(qs.balanced);
    }

    #[test]
    fn mixed_ceilings_rejected() {
        assert!(matches!(build_quadrature(&[0.5, 1.5], 4), Err(MopError::Invalid(_))));
    }
}
