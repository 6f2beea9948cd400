mod support;

use fhbvm::linalg::hessenberg_eigenvalues;
use fhbvm::mop::{balance, build_hessenberg, build_quadrature, mop_recurrence, phi_nodes, select_qk, MopError};
use fhbvm::ortho_poly::{gauss_rule, make_basis, WeightKind};
use proptest::prelude::*;
use support::{omega_inner, rl_piece};

fn subsets(pool: &[f64], size: usize) -> Vec<Vec<f64>> {
    if size == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &a) in pool.iter().enumerate() {
        for mut rest in subsets(&pool[i + 1..], size - 1) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

#[test]
fn moments_exact_up_to_k_plus_q_minus_one() {
    let pool = [0.2, 0.4, 0.7, 0.99];
    for nu in 1..=3usize {
        for alphas in subsets(&pool, nu) {
            for &s in &[4usize, 10, 22] {
                let qs = build_quadrature(&alphas, s).unwrap();
                let (q, k) = select_qk(nu, s);
                let res = qs.max_moment_residual(k + q - 1);
                assert!(res.iter().all(|&r| r <= 5e-8), "{alphas:?} s={s} {res:?}");
                for pair in qs.abscissae.windows(2) {
                    assert!(pair[0] > 0.0 && pair[0] < pair[1] && pair[1] < 1.0);
                }
            }
        }
    }
}

#[test]
fn three_orders_table_case() {
    let qs = build_quadrature(&[0.3, 0.6, 0.9], 22).unwrap();
    assert_eq!(qs.k, 33);
    for r in qs.max_moment_residual(43) {
        assert!(r <= 5e-8, "{r}");
    }
    for w in &qs.weights {
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn single_order_matches_gauss_rule() {
    for &a in &[0.3, 0.5, 0.9] {
        let qs = build_quadrature(&[a], 22).unwrap();
        let g = gauss_rule(a, 22, WeightKind::RightSingular).unwrap();
        for r in 0..22 {
            assert!((qs.abscissae[r] - g.nodes[r]).abs() <= 1e-10);
            assert!((qs.weights[0][r] - g.weights[r]).abs() <= 1e-10);
        }
    }
}

#[test]
fn order_and_node_tables() {
    let ks: Vec<usize> = (1..=5).map(|nu| select_qk(nu, 22).1).collect();
    assert_eq!(ks, vec![22, 30, 33, 36, 40]);
    let phis: Vec<usize> = (1..=5).map(|nu| phi_nodes(nu, 22)).collect();
    assert_eq!(phis, vec![22, 22, 22, 22, 24]);
    assert_eq!(select_qk(1, 22), (22, 22));
    assert_eq!(select_qk(2, 22), (15, 30));
    assert_eq!(select_qk(5, 22), (8, 40));
    assert_eq!(select_qk(1, 1), (1, 1));
    assert_eq!(phi_nodes(1, 1), 1);
}

#[test]
fn single_order_recurrence_is_three_term() {
    for &a in &[0.3, 0.5, 1.0] {
        let rec = mop_recurrence(&[a], 10).unwrap();
        assert!((rec.coeff(1, 1) - 1.0 / (a + 1.0)).abs() < 1e-15);
        let h = build_hessenberg(&rec);
        for i in 0..10usize {
            for j in 0..10 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(h[(i, j)], 0.0);
                }
                if j == i + 1 {
                    assert_eq!(h[(i, j)], 1.0);
                }
            }
        }
        // Balancing gives the symmetric Jacobi matrix behind the Gauss rule.
        let (_, hb) = balance(&h).unwrap();
        let basis = make_basis(a, 10).unwrap();
        let (diag, sub) = basis.recurrence();
        for i in 0..10 {
            assert!((hb[(i, i)] - diag[i]).abs() < 1e-14);
        }
        for i in 0..9 {
            let off = hb[(i + 1, i)];
            assert!((off - hb[(i, i + 1)]).abs() < 1e-15);
            assert!((off - sub[i]).abs() < 1e-14, "{i}: {off} vs {}", sub[i]);
        }
        let g = gauss_rule(a, 10, WeightKind::RightSingular).unwrap();
        let eig = hessenberg_eigenvalues(&hb).unwrap();
        for (x, y) in eig.iter().zip(&g.nodes) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

#[test]
fn first_coefficient_is_first_moment() {
    let rec = mop_recurrence(&[0.2, 0.4], 22).unwrap();
    assert!((rec.coeff(1, 1) - 1.0 / 1.2).abs() < 1e-15);
}

#[test]
fn two_node_legendre_hessenberg() {
    let rec = mop_recurrence(&[1.0], 1).unwrap();
    assert_eq!(rec.k, 1);
    let rec = mop_recurrence(&[1.0], 2).unwrap();
    let eig = hessenberg_eigenvalues(&build_hessenberg(&rec)).unwrap();
    let d = 0.5 / 3f64.sqrt();
    assert!((eig[0] - (0.5 - d)).abs() < 1e-15 && (eig[1] - (0.5 + d)).abs() < 1e-15);
}

#[test]
fn hessenberg_band_structure() {
    for nu in 1..=4usize {
        let alphas: Vec<f64> = (0..nu).map(|i| 0.2 + 0.2 * i as f64).collect();
        let rec = mop_recurrence(&alphas, 10).unwrap();
        let h = build_hessenberg(&rec);
        for j in 1..=rec.k {
            let row = h.row(j - 1);
            let band = (0..j).filter(|&c| row[c] != 0.0).count();
            assert_eq!(band, nu.min(j - 1) + 1, "nu={nu} row {j}");
            assert!(row[j..].iter().enumerate().all(|(o, v)| if o == 0 && j < rec.k { *v == 1.0 } else { *v == 0.0 }));
        }
    }
}

/// `max_{i, j<q} |(π_k, c^j)_i| / ‖π_k‖_i` from an independent tanh-sinh
/// evaluation of the inner products.
fn orthogonality_residual(alphas: &[f64], s: usize) -> f64 {
    let rec = mop_recurrence(alphas, s).unwrap();
    let k = rec.k;
    let mut worst = 0.0f64;
    for &a in alphas {
        let norm = omega_inner(a, |c| rec.eval_monic(c)[k].powi(2)).sqrt();
        for j in 0..rec.q {
            let ip = omega_inner(a, |c| rec.eval_monic(c)[k] * c.powi(j as i32));
            worst = worst.max(ip.abs() / norm);
        }
    }
    worst
}

#[test]
fn mop_orthogonality_against_independent_quadrature() {
    assert!(orthogonality_residual(&[0.2, 0.4], 22) <= 1e-10);
    assert!(orthogonality_residual(&[0.3, 0.6, 0.9], 22) <= 1e-10);
    assert!(orthogonality_residual(&[0.7], 22) <= 1e-10);
}

#[test]
fn weight_sums_and_gaps() {
    for alphas in [vec![0.5], vec![0.2, 0.4], vec![0.3, 0.6, 0.9], vec![0.99, 0.8]] {
        let qs = build_quadrature(&alphas, 22).unwrap();
        for w in &qs.weights {
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        assert!(qs.abscissae.windows(2).all(|p| p[1] - p[0] > 1e-14));
        assert!(qs.balanced);
    }
}

#[test]
fn x11_from_independent_tables() {
    let a = 0.5;
    let s = 22;
    let qs = build_quadrature(&[a], s).unwrap();
    let g = gauss_rule(a, s, WeightKind::RightSingular).unwrap();
    let basis = make_basis(a, s).unwrap();
    let x = &qs.x_blocks[0][0];
    let fi: Vec<Vec<f64>> = g
        .nodes
        .iter()
        .map(|&c| (0..s).map(|l| rl_piece(a, c, 0.0, c, |t| basis.eval(t)[l])).collect())
        .collect();
    for j in 0..s {
        for l in 0..s {
            let v: f64 = (0..s).map(|r| g.weights[r] * basis.eval(g.nodes[r])[j] * fi[r][l]).sum();
            assert!((x[(j, l)] - v).abs() <= 1e-12, "X({j},{l}) {} vs {v}", x[(j, l)]);
        }
    }
}

#[test]
fn invalid_requests() {
    assert!(matches!(build_quadrature(&[], 22), Err(MopError::Invalid(_))));
    assert!(matches!(build_quadrature(&[0.5], 0), Err(MopError::Invalid(_))));
    assert!(build_quadrature(&[-0.1], 4).is_err());
    assert!(build_quadrature(&[0.5, 1.5], 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn two_order_rules_are_exact(a1 in 0.1f64..1.0, gap in 0.05f64..0.5, s in 2usize..16) {
        let a2 = if a1 + gap < 1.0 { a1 + gap } else { a1 - gap };
        prop_assume!(a2 > 0.05);
        let qs = build_quadrature(&[a1, a2], s).unwrap();
        let (q, k) = select_qk(2, s);
        prop_assert_eq!(qs.k, k);
        prop_assert!(qs.abscissae.iter().all(|c| *c > 0.0 && *c < 1.0));
        for r in qs.max_moment_residual(k + q - 1) {
            prop_assert!(r <= 5e-8);
        }
    }
}
