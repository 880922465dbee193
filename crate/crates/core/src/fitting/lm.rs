//! Levenberg–Marquardt damped least squares with box constraints by
//! projection and central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Residual vector r(θ) whose squared norm is minimized.
pub trait LeastSquaresProblem: Sync {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    /// Inclusive bounds per parameter.
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.n_params()]
    }
    /// Magnitude used to scale parameter `j` when its value is near zero.
    fn typical_scale(&self, j: usize) -> f64 {
        let _ = j;
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    /// Damping above which the fit is declared diverged.
    pub damping_cap: f64,
    /// Relative decrease of the squared residual norm that ends the fit.
    pub ftol: f64,
    /// Scaled step norm that ends the fit.
    pub xtol: f64,
    /// Relative finite-difference step.
    pub relative_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            initial_damping: 1e-3,
            damping_cap: 1e12,
            ftol: 1e-10,
            xtol: 1e-12,
            relative_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Squared residual norm after every accepted iteration, starting with the initial point.
    pub history: Vec<f64>,
    /// Jacobian at the returned parameters.
    pub jacobian: DMatrix<f64>,
}

fn ssr_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Checks that `params` lie inside the bounds of `problem`.
pub fn check_bounds(problem: &dyn LeastSquaresProblem, params: &[f64], names: &[&str]) -> Result<()> {
    for (j, (&v, &(lo, hi))) in params.iter().zip(problem.bounds().iter()).enumerate() {
        if !(v >= lo && v <= hi) {
            return Err(Error::BoundsViolation {
                name: names.get(j).map(|s| s.to_string()).unwrap_or_else(|| format!("p{j}")),
                value: v,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(())
}

/// Finite-difference step for parameter `j` at value `v`.
fn fd_step(problem: &dyn LeastSquaresProblem, j: usize, v: f64, rel: f64) -> f64 {
    rel * v.abs().max(problem.typical_scale(j))
}

/// Central-difference Jacobian (one-sided at active bounds).
pub fn numerical_jacobian(problem: &dyn LeastSquaresProblem, params: &[f64], relative_step: f64) -> DMatrix<f64> {
    let m = problem.n_residuals();
    let p = problem.n_params();
    let bounds = problem.bounds();
    let mut jac = DMatrix::zeros(m, p);
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut x = params.to_vec();
    for j in 0..p {
        let h = fd_step(problem, j, params[j], relative_step);
        let (lo, hi) = bounds[j];
        let (xp, xm) = if params[j] - h < lo {
            (params[j] + h, params[j])
        } else if params[j] + h > hi {
            (params[j], params[j] - h)
        } else {
            (params[j] + h, params[j] - h)
        };
        x[j] = xp;
        problem.residuals(&x, &mut rp);
        x[j] = xm;
        problem.residuals(&x, &mut rm);
        x[j] = params[j];
        let inv = 1.0 / (xp - xm);
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) * inv;
        }
    }
    jac
}

/// Smallest eigenvalue of the column-normalized normal matrix, or an error
/// naming the offending parameter when a column vanishes.
pub fn normal_matrix_conditioning(jac: &DMatrix<f64>, names: &[&str]) -> Result<f64> {
    let a = jac.transpose() * jac;
    let p = a.nrows();
    let mut d = vec![0.0; p];
    for j in 0..p {
        if !(a[(j, j)] > 0.0) || !a[(j, j)].is_finite() {
            let name = names.get(j).copied().unwrap_or("?");
            return Err(Error::SingularNormalMatrix(format!("parameter {name} has no effect on the model")));
        }
        d[j] = 1.0 / a[(j, j)].sqrt();
    }
    let an = DMatrix::from_fn(p, p, |i, j| a[(i, j)] * d[i] * d[j]);
    let ev = an.symmetric_eigenvalues();
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Minimizes ‖r(θ)‖² starting from `initial`.
pub fn levenberg_marquardt(
    problem: &dyn LeastSquaresProblem,
    initial: &[f64],
    options: &LmOptions,
) -> Result<LmOutcome> {
    let p = problem.n_params();
    let m = problem.n_residuals();
    if initial.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: initial.len() });
    }
    let bounds = problem.bounds();
    let mut theta = initial.to_vec();
    project(&mut theta, &bounds);
    let scale: Vec<f64> = (0..p).map(|j| theta[j].abs().max(problem.typical_scale(j))).collect();

    let mut r = vec![0.0; m];
    problem.residuals(&theta, &mut r);
    let mut ssr = ssr_of(&r);
    if !ssr.is_finite() {
        return Err(Error::FitDiverged("non-finite residuals at the initial point".into()));
    }
    let mut history = vec![ssr];
    let mut lambda = options.initial_damping;
    let mut trial = vec![0.0; p];
    let mut r_trial = vec![0.0; m];
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = numerical_jacobian(problem, &theta, options.relative_step);

    'outer: while iterations < options.max_iterations {
        iterations += 1;
        let a = jac.transpose() * &jac;
        let mut g = jac.transpose() * DVector::from_column_slice(&r);
        // Parameters pinned at a bound by the gradient leave the system.
        let active: Vec<bool> = (0..p)
            .map(|j| (theta[j] <= bounds[j].0 && g[j] > 0.0) || (theta[j] >= bounds[j].1 && g[j] < 0.0))
            .collect();
        let mut a = a;
        for j in (0..p).filter(|&j| active[j]) {
            a.row_mut(j).fill(0.0);
            a.column_mut(j).fill(0.0);
            a[(j, j)] = 1.0;
            g[j] = 0.0;
        }
        loop {
            let mut mtx = a.clone();
            for j in 0..p {
                mtx[(j, j)] += lambda * a[(j, j)].max(1e-300);
            }
            let step = match mtx.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    if lambda > options.damping_cap {
                        return Err(Error::FitDiverged("damped normal matrix not positive definite".into()));
                    }
                    continue;
                }
            };
            for j in 0..p {
                trial[j] = theta[j] + step[j];
            }
            project(&mut trial, &bounds);
            let step_norm = (0..p).map(|j| ((trial[j] - theta[j]) / scale[j]).powi(2)).sum::<f64>().sqrt();
            problem.residuals(&trial, &mut r_trial);
            let ssr_trial = ssr_of(&r_trial);
            if ssr_trial.is_finite() && ssr_trial < ssr {
                let rel = (ssr - ssr_trial) / ssr.max(f64::MIN_POSITIVE);
                theta.copy_from_slice(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                ssr = ssr_trial;
                history.push(ssr);
                let was_lambda = lambda;
                lambda = (lambda / 10.0).max(1e-15);
                jac = numerical_jacobian(problem, &theta, options.relative_step);
                if (rel < options.ftol && was_lambda < 1.0) || step_norm < options.xtol || ssr == 0.0 {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if step_norm < options.xtol {
                converged = true;
                break 'outer;
            }
            lambda *= 10.0;
            if lambda > options.damping_cap {
                return Err(Error::FitDiverged(format!("damping exceeded {:e}", options.damping_cap)));
            }
        }
    }
    Ok(LmOutcome {
        params: theta,
        ssr,
        residual_norm: ssr.sqrt(),
        iterations,
        converged,
        history,
        jacobian: jac,
    })
}

/// Residual-variance-scaled covariance σ² (JᵀJ)⁻¹ with σ² = SSR / (m − p).
pub fn covariance(jac: &DMatrix<f64>, ssr: f64) -> Result<DMatrix<f64>> {
    let (m, p) = jac.shape();
    let dof = m.saturating_sub(p).max(1) as f64;
    let a = jac.transpose() * jac;
    let d: Vec<f64> = (0..p).map(|j| 1.0 / a[(j, j)].sqrt().max(f64::MIN_POSITIVE)).collect();
    let an = DMatrix::from_fn(p, p, |i, j| a[(i, j)] * d[i] * d[j]);
    let inv = an
        .try_inverse()
        .ok_or_else(|| Error::SingularNormalMatrix("normal matrix not invertible".into()))?;
    let s2 = ssr / dof;
    let mut cov = DMatrix::from_fn(p, p, |i, j| s2 * inv[(i, j)] * d[i] * d[j]);
    for i in 0..p {
        for j in i + 1..p {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exponential {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquaresProblem for Exponential {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            self.t.len()
        }
        fn residuals(&self, p: &[f64], out: &mut [f64]) {
            for i in 0..self.t.len() {
                out[i] = p[0] * (-p[1] * self.t[i]).exp() - self.y[i];
            }
        }
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|&t| 2.5 * (-1.3 * t).exp()).collect();
        let prob = Exponential { t, y };
        let out = levenberg_marquardt(&prob, &[1.0, 0.5], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 2.5).abs() < 1e-8);
        assert!((out.params[1] - 1.3).abs() < 1e-8);
        for w in out.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn rosenbrock_valley() {
        struct Rosen;
        impl LeastSquaresProblem for Rosen {
            fn n_params(&self) -> usize {
                2
            }
            fn n_residuals(&self) -> usize {
                2
            }
            fn residuals(&self, p: &[f64], out: &mut [f64]) {
                out[0] = 10.0 * (p[1] - p[0] * p[0]);
                out[1] = 1.0 - p[0];
            }
        }
        let out = levenberg_marquardt(&Rosen, &[-1.2, 1.0], &LmOptions::default()).unwrap();
        assert!((out.params[0] - 1.0).abs() < 1e-6);
        assert!((out.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_covariance_matches_closed_form() {
        // y = a + b x with known noise: covariance from (XᵀX)⁻¹ σ².
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let noise = [0.1, -0.2, 0.05, 0.0, 0.15, -0.1, 0.2, -0.05, 0.0, -0.1];
        let y: Vec<f64> = x.iter().zip(noise).map(|(&x, e)| 1.0 + 2.0 * x + e).collect();
        let jac = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let ssr: f64 = {
            let xm = 4.5;
            let ym: f64 = y.iter().sum::<f64>() / 10.0;
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
            let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
            let b = sxy / sxx;
            let a = ym - b * xm;
            x.iter().zip(&y).map(|(&xi, &yi)| (yi - a - b * xi).powi(2)).sum()
        };
        let cov = covariance(&jac, ssr).unwrap();
        let s2 = ssr / 8.0;
        let sxx = 82.5;
        assert!((cov[(1, 1)] - s2 / sxx).abs() < 1e-12);
        assert!((cov[(0, 0)] - s2 * (1.0 / 10.0 + 4.5 * 4.5 / sxx)).abs() < 1e-12);
    }
}
