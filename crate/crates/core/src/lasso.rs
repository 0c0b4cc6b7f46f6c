//! Reference sparse coder: iterative soft-thresholding for
//! `½‖Du − x‖² + λ‖u‖₁`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, gram_spectral_norm_sq, inf_norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Proximal gradient with step `1/L`; the objective never increases.
    #[default]
    Ista,
    /// Nesterov-accelerated variant; faster but not monotone.
    Fista,
}

/// How the squared-error term is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// `½‖Du − x‖² + λ‖u‖₁`
    #[default]
    Halved,
    /// `‖Du − x‖² + λ‖u‖₁`, solved as the halved problem with `λ/2`.
    Unhalved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem {
    /// `n × k`
    pub dictionary: Matrix,
    pub x: Vec<f64>,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    pub objective: Objective,
}

impl LassoProblem {
    pub fn new(dictionary: Matrix, x: Vec<f64>, lambda: f64) -> Self {
        LassoProblem {
            dictionary,
            x,
            lambda,
            tol: 1e-10,
            max_iter: 10_000,
            method: Method::Ista,
            objective: Objective::Halved,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dictionary.rows() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dictionary.rows(),
                found: self.x.len(),
            });
        }
        if !self.dictionary.is_finite() || self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("lasso inputs must be finite".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Penalty weight of the equivalent halved problem.
    pub fn effective_lambda(&self) -> f64 {
        match self.objective {
            Objective::Halved => self.lambda,
            Objective::Unhalved => 0.5 * self.lambda,
        }
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = self.dictionary.matvec(u);
        r.iter_mut().zip(&self.x).for_each(|(a, b)| *a -= b);
        r
    }

    /// Objective value in the problem's own convention.
    pub fn objective_value(&self, u: &[f64]) -> f64 {
        let r = self.residual(u);
        let l1: f64 = u.iter().map(|v| libm::fabs(*v)).sum();
        let sq = dot(&r, &r);
        match self.objective {
            Objective::Halved => 0.5 * sq + self.lambda * l1,
            Objective::Unhalved => sq + self.lambda * l1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub code: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Lipschitz constant used for the step.
    pub lipschitz: f64,
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn lasso_encode(p: &LassoProblem) -> Result<LassoSolution> {
    lasso_encode_traced(p, |_, _| {})
}

/// As [`lasso_encode`], calling `observe(iteration, iterate)` for the start
/// point (iteration 0) and after every update.
pub fn lasso_encode_traced(
    p: &LassoProblem,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<LassoSolution> {
    p.validate()?;
    let k = p.dictionary.cols();
    let lambda = p.effective_lambda();
    let lipschitz = gram_spectral_norm_sq(&p.dictionary, 10_000, 1e-15);
    let mut u = vec![0.0; k];
    observe(0, &u);
    if lipschitz == 0.0 {
        // D = 0: every u has the same residual; the penalty picks 0
        return Ok(LassoSolution {
            code: u,
            converged: true,
            iterations: 0,
            lipschitz,
        });
    }
    let step = 1.0 / lipschitz;
    let threshold = lambda * step;
    let mut y = u.clone();
    let mut t = 1.0;
    for iter in 1..=p.max_iter {
        let point = match p.method {
            Method::Ista => &u,
            Method::Fista => &y,
        };
        let grad = p.dictionary.matvec_t(&p.residual(point));
        let next: Vec<f64> = point
            .iter()
            .zip(&grad)
            .map(|(v, g)| soft_threshold(v - step * g, threshold))
            .collect();
        let change = next
            .iter()
            .zip(&u)
            .fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
        if p.method == Method::Fista {
            let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
            let beta = (t - 1.0) / t_next;
            y = next
                .iter()
                .zip(&u)
                .map(|(a, b)| a + beta * (a - b))
                .collect();
            t = t_next;
        }
        u = next;
        observe(iter, &u);
        if change < p.tol {
            return Ok(LassoSolution {
                code: u,
                converged: true,
                iterations: iter,
                lipschitz,
            });
        }
    }
    Ok(LassoSolution {
        code: u,
        converged: false,
        iterations: p.max_iter,
        lipschitz,
    })
}

/// Largest violation of the subgradient optimality conditions at `u`.
pub fn kkt_residual(p: &LassoProblem, u: &[f64]) -> Result<f64> {
    if u.len() != p.dictionary.cols() {
        return Err(Error::DimensionMismatch {
            expected: p.dictionary.cols(),
            found: u.len(),
        });
    }
    if p.x.len() != p.dictionary.rows() {
        return Err(Error::DimensionMismatch {
            expected: p.dictionary.rows(),
            found: p.x.len(),
        });
    }
    let lambda = p.effective_lambda();
    let corr = p.dictionary.matvec_t(&p.residual(u));
    let violations: Vec<f64> = corr
        .iter()
        .zip(u)
        .map(|(&g, &uj)| {
            if uj != 0.0 {
                libm::fabs(g + lambda * uj.signum())
            } else {
                (libm::fabs(g) - lambda).max(0.0)
            }
        })
        .collect();
    Ok(inf_norm(&violations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_on_orthonormal() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let d = Matrix::from_rows(&[[s, -s], [s, s]]).unwrap();
        let x = vec![0.3, -1.2];
        let sol = lasso_encode(&LassoProblem::new(d.clone(), x.clone(), 0.0)).unwrap();
        let expect = d.matvec_t(&x);
        assert!(sol.converged);
        for (a, b) in sol.code.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_closed_form() {
        let p = LassoProblem::new(Matrix::identity(2), vec![1.0, 0.2], 0.5);
        let sol = lasso_encode(&p).unwrap();
        assert_eq!(sol.code, vec![0.5, 0.0]);
        assert!(kkt_residual(&p, &sol.code).unwrap() < 1e-10);
    }

    #[test]
    fn large_lambda_gives_zero() {
        let d = Matrix::from_rows(&[[1.0, 0.5], [0.2, -1.0], [0.3, 0.3]]).unwrap();
        let x = vec![0.4, -0.1, 0.9];
        let bound = inf_norm(&d.matvec_t(&x));
        let p = LassoProblem::new(d, x, bound);
        let sol = lasso_encode(&p).unwrap();
        assert_eq!(sol.code, vec![0.0, 0.0]);
        assert_eq!(kkt_residual(&p, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn non_optimal_point_has_positive_residual() {
        let p = LassoProblem::new(Matrix::identity(2), vec![1.0, 0.2], 0.5);
        assert!(kkt_residual(&p, &[0.6, 0.0]).unwrap() > 0.0);
        assert!(kkt_residual(&p, &[0.5, 0.1]).unwrap() > 0.0);
    }

    #[test]
    fn unhalved_uses_half_lambda() {
        let mut p = LassoProblem::new(Matrix::identity(1), vec![1.0], 0.5);
        p.objective = Objective::Unhalved;
        assert_eq!(lasso_encode(&p).unwrap().code, vec![0.75]);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let d = Matrix::from_rows(&[[1.0, 0.99], [0.0, 0.1]]).unwrap();
        let mut p = LassoProblem::new(d, vec![1.0, 1.0], 0.01);
        p.max_iter = 3;
        let sol = lasso_encode(&p).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn fista_reaches_same_optimum() {
        let d = Matrix::from_rows(&[[1.0, 0.4, -0.3], [0.2, 1.0, 0.5]]).unwrap();
        let mut p = LassoProblem::new(d, vec![0.7, -0.4], 0.05);
        p.tol = 1e-13;
        let a = lasso_encode(&p).unwrap();
        p.method = Method::Fista;
        let b = lasso_encode(&p).unwrap();
        assert!(b.converged);
        assert!((p.objective_value(&a.code) - p.objective_value(&b.code)).abs() < 1e-10);
    }
}
