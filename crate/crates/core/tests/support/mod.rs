//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use quadrature::double_exponential;

pub fn gamma(x: f64) -> f64 {
    fhbvm::special::gamma(x)
}

/// Tanh-sinh quadrature run to full refinement, so tiny integrals keep their
/// relative accuracy. The integrand must stay bounded near both ends.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let len = b - a;
    len * double_exponential::integrate(|u| f(a + len * u), 0.0, 1.0, 1e-300).integral
}

/// `(1/Γ(α)) ∫_a^b (t−τ)^{α−1} g(τ) dτ` for `b ≤ t` and smooth `g`. Near the
/// kernel singularity the substitution `v = (t−τ)^α` removes it.
pub fn rl_piece(alpha: f64, t: f64, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let v = if t - b >= b - a {
        integrate(|tau| (t - tau).powf(alpha - 1.0) * g(tau), a, b)
    } else {
        let p = 1.0 / alpha;
        integrate(|v| g(t - v.powf(p)), (t - b).powf(alpha), (t - a).powf(alpha)) / alpha
    };
    v / gamma(alpha)
}

/// `J(x) = (1/Γ(α)) ∫_0^1 (x−τ)^{α−1} g(τ) dτ` for `x ≥ 1`, together with
/// the same integral of `|g|` (the L1 scale of the integrand).
pub fn kernel_oracle(alpha: f64, x: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    (rl_piece(alpha, x, 0.0, 1.0, &g), rl_piece(alpha, x, 0.0, 1.0, |t| g(t).abs()))
}

/// `(x^α − (x−1)^α)/Γ(α+1)` without cancellation.
pub fn kernel_j0(alpha: f64, x: f64) -> f64 {
    if x < 2.0 {
        return (x.powf(alpha) - (x - 1.0).powf(alpha)) / gamma(alpha + 1.0);
    }
    -x.powf(alpha) * (alpha * (-1.0 / x).ln_1p()).exp_m1() / gamma(alpha + 1.0)
}

/// Inner product `∫_0^1 α(1−c)^{α−1} f(c) g(c) dc` via `c = 1 − u^{1/α}`.
pub fn omega_inner(alpha: f64, f: impl Fn(f64) -> f64) -> f64 {
    let p = 1.0 / alpha;
    integrate(|u| f(1.0 - u.powf(p)), 0.0, 1.0)
}

/// Orthonormal polynomials for `ω_α` at `c`, degrees `< n`, built from the
/// Cholesky factor of the Chebyshev Gram matrix.
pub fn gram_schmidt_values(alpha: f64, n: usize, c: f64) -> Vec<f64> {
    let cheb = |x: f64| -> Vec<f64> {
        let z = 2.0 * x - 1.0;
        let mut t = vec![1.0; n];
        if n > 1 {
            t[1] = z;
        }
        for j in 2..n {
            t[j] = 2.0 * z * t[j - 1] - t[j - 2];
        }
        t
    };
    let mut gram = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..=a {
            let v = omega_inner(alpha, |x| {
                let t = cheb(x);
                t[a] * t[b]
            });
            gram[a][b] = v;
            gram[b][a] = v;
        }
    }
    // Cholesky G = L Lᵀ; the orthonormal family is L^{−1} T.
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = gram[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let t = cheb(c);
    let mut p = vec![0.0; n];
    for i in 0..n {
        let mut s = t[i];
        for k in 0..i {
            s -= l[i][k] * p[k];
        }
        p[i] = s / l[i][i];
    }
    p
}

/// `∫_0^1 α(1−c)^{α−1} c^d dc = Γ(d+1)Γ(α+1)/Γ(d+α+1)` by its product form.
pub fn beta_moment(alpha: f64, d: usize) -> f64 {
    (1..=d).fold(1.0, |m, i| m * i as f64 / (i as f64 + alpha))
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
pub fn sturm_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let r = (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let u = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + l + u
        })
        .fold(0.0, f64::max);
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-r - 1.0, r + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sturm_count(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Sign of `det(A − xI)` by Gaussian elimination with partial pivoting.
pub fn det_sign(a: &[Vec<f64>], x: f64) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, v)| if i == j { v - x } else { *v }).collect())
        .collect();
    let mut sign = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            m.swap(p, col);
            sign = -sign;
        }
        let piv = m[col][col];
        if piv < 0.0 {
            sign = -sign;
        }
        for i in col + 1..n {
            let f = m[i][col] / piv;
            if f != 0.0 {
                for j in col..n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    sign
}

/// Refines a root of `det(A − xI)` bracketed by `[lo, hi]`, or `None`
/// when the bracket shows no sign change.
pub fn det_bisect(a: &[Vec<f64>], mut lo: f64, mut hi: f64) -> Option<f64> {
    let slo = det_sign(a, lo);
    if slo * det_sign(a, hi) >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if det_sign(a, mid) == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Caputo derivative `(1/Γ(1−α)) ∫_0^t (t−τ)^{−α} y'(τ) dτ`, `0 < α < 1`,
/// for `y'` with singularities no worse than `τ^{α−1}` at the origin.
pub fn caputo(alpha: f64, t: f64, dy: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * t;
    // τ = (t/2) u^q absorbs the τ^{α−1} behaviour of y'.
    let q = 1.0 / alpha;
    let left = integrate(
        |u| {
            let tau = half * u.powf(q);
            (t - tau).powf(-alpha) * dy(tau) * half * q * u.powf(q - 1.0)
        },
        0.0,
        1.0,
    );
    // t − τ = v^{1/(1−α)} absorbs the kernel.
    let p = 1.0 / (1.0 - alpha);
    let right = integrate(|v| dy(t - v.powf(p)), 0.0, half.powf(1.0 - alpha)) / (1.0 - alpha);
    (left + right) / gamma(1.0 - alpha)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `φ^n(t)` from the Taylor term plus the Riemann–Liouville integral of the
/// stored piecewise expansion of steps `1..n`, one quadrature per step and
/// component. Internal component order.
pub fn memory_oracle(solver: &fhbvm::solver::Solver, history: &fhbvm::solver::StepHistory, n: usize, t: f64) -> Vec<f64> {
    let p = &solver.problem;
    let s = solver.quad.s;
    let mut out = vec![0.0; p.dim()];
    p.taylor_internal(t, &mut out);
    for rec in &history.records()[..n - 1] {
        for i in 0..p.nu() {
            let range = p.block_range(i);
            let mi = range.len();
            let basis = &solver.quad.bases[i];
            let g = &rec.gamma[s * range.start..s * range.end];
            for a in 0..mi {
                let piece = |tau: f64| {
                    let pv = basis.eval((tau - rec.t_start) / rec.h);
                    (0..s).map(|j| pv[j] * g[j * mi + a]).sum::<f64>()
                };
                out[range.start + a] += rl_piece(basis.alpha(), t, rec.t_start, rec.t_start + rec.h, piece);
            }
        }
    }
    out
}
