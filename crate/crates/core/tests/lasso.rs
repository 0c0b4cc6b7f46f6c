use switchcode_core::lasso::{kkt_residual, lasso_encode, lasso_encode_traced, soft_threshold, LassoProblem};
use switchcode_core::linalg::inf_norm;
use switchcode_core::{Matrix, Rng};

fn random_problem(rng: &mut Rng, n: usize, k: usize) -> LassoProblem {
    let scale = 1.0 / (n as f64).sqrt();
    let d = Matrix::from_fn(n, k, |_, _| scale * rng.normal());
    let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let bound = inf_norm(&d.matvec_t(&x));
    let lambda = bound * rng.uniform_range(0.05, 0.8);
    let mut p = LassoProblem::new(d, x, lambda);
    p.tol = 1e-9;
    p.max_iter = 200_000;
    p
}

/// Normal equations solved by Gaussian elimination with partial pivoting.
fn least_squares(d: &Matrix, x: &[f64]) -> Vec<f64> {
    let k = d.cols();
    let mut a = d.transpose().matmul(d).unwrap();
    let mut rhs = d.matvec_t(x);
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs())).unwrap();
        for c in 0..k {
            let t = a[(col, c)];
            a[(col, c)] = a[(piv, c)];
            a[(piv, c)] = t;
        }
        rhs.swap(col, piv);
        for r in (col + 1)..k {
            let f = a[(r, col)] / a[(col, col)];
            for c in col..k {
                a[(r, c)] -= f * a[(col, c)];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut u = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = ((r + 1)..k).map(|c| a[(r, c)] * u[c]).sum();
        u[r] = (rhs[r] - s) / a[(r, r)];
    }
    u
}

#[test]
fn objective_never_increases() {
    let mut rng = Rng::from_seed(17);
    for _ in 0..100 {
        let p = random_problem(&mut rng, 8, 5);
        let mut prev = f64::INFINITY;
        lasso_encode_traced(&p, |_, u| {
            let f = p.objective_value(u);
            assert!(f <= prev + 1e-12 * prev.abs().max(1.0), "{f} > {prev}");
            prev = f;
        })
        .unwrap();
    }
}

#[test]
fn converged_solutions_certify() {
    let mut rng = Rng::from_seed(23);
    for _ in 0..100 {
        let p = random_problem(&mut rng, 10, 6);
        let sol = lasso_encode(&p).unwrap();
        assert!(sol.converged);
        let r = kkt_residual(&p, &sol.code).unwrap();
        assert!(r < 10.0 * p.tol, "kkt {r}");
    }
}

#[test]
fn unregularized_matches_normal_equations() {
    let mut rng = Rng::from_seed(31);
    for _ in 0..20 {
        let mut p = random_problem(&mut rng, 9, 4);
        p.lambda = 0.0;
        p.tol = 1e-13;
        let sol = lasso_encode(&p).unwrap();
        let ls = least_squares(&p.dictionary, &p.x);
        for (a, b) in sol.code.iter().zip(&ls) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn orthonormal_closed_form() {
    // Householder reflection: orthonormal and symmetric
    let v = [0.6, -0.48, 0.64];
    let nv: f64 = v.iter().map(|a| a * a).sum();
    let d = Matrix::from_fn(3, 3, |i, j| (if i == j { 1.0 } else { 0.0 }) - 2.0 * v[i] * v[j] / nv);
    let x = vec![0.9, -0.2, 0.4];
    let p = LassoProblem::new(d.clone(), x.clone(), 0.15);
    let sol = lasso_encode(&p).unwrap();
    let expect: Vec<f64> = d.matvec_t(&x).iter().map(|&c| soft_threshold(c, 0.15)).collect();
    for (a, b) in sol.code.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-8);
    }
    assert!(kkt_residual(&p, &expect).unwrap() < 1e-10);
}
