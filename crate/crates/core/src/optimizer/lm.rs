use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonlinear least-squares problem min ½‖R(θ)‖².
pub trait LeastSquares {
    fn residuals(&self, theta: &[f64]) -> Result<Vec<f64>>;
    /// Residuals together with R'(θ) (rows: residuals, columns: parameters).
    fn residuals_and_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Array2<f64>)>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NuRule {
    /// ν = ‖R‖²
    ResidualNormSquared,
    /// ν = μ‖R‖²
    Scaled { mu: f64 },
}

impl NuRule {
    pub fn nu(self, res_norm: f64) -> f64 {
        let mu = match self {
            NuRule::ResidualNormSquared => 1.0,
            NuRule::Scaled { mu } => mu,
        };
        mu * res_norm * res_norm
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when ‖R'ᵀR‖∞ falls below this.
    pub tol_grad: f64,
    /// Stop when the proposed ‖δθ‖ falls below this.
    pub tol_step: f64,
    pub nu_rule: NuRule,
    pub max_halvings: usize,
    /// Compare a few Jacobian columns with finite differences before iterating.
    pub check_jacobian: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 100,
            tol_grad: 1e-10,
            tol_step: 1e-12,
            nu_rule: NuRule::ResidualNormSquared,
            max_halvings: 20,
            check_jacobian: true,
        }
    }
}

impl LmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0 && self.tol_step > 0.0) {
            return Err(Error::InvalidArgument("LM tolerances must be positive".into()));
        }
        if let NuRule::Scaled { mu } = self.nu_rule {
            if !(mu >= 0.0) {
                return Err(Error::InvalidArgument("nu scale must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    /// Backtracking exhausted without decreasing φ.
    Stagnated,
}

/// State after one iteration (iteration 0 is the starting point).
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub theta: Vec<f64>,
    pub phi: f64,
    pub res_norm: f64,
    /// Damping used for the step (NaN at iteration 0).
    pub nu: f64,
    /// Length of the last step tried.
    pub step_norm: f64,
    pub accepted: bool,
    pub rel_param_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmHistory {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl LmHistory {
    pub fn stagnated(&self) -> bool {
        self.termination == Termination::Stagnated
    }

    pub fn accepted_iterations(&self) -> usize {
        self.records.iter().skip(1).filter(|r| r.accepted).count()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("history starts with iteration 0")
    }

    /// Accepted iterations until the relative error first drops below `tol`.
    pub fn accepted_iterations_to(&self, tol: f64) -> Option<usize> {
        let mut count = 0;
        for r in &self.records {
            if r.iter > 0 && r.accepted {
                count += 1;
            }
            if r.rel_param_err.is_some_and(|e| e < tol) {
                return Some(count);
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub theta: Vec<f64>,
    pub history: LmHistory,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn phi_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>() / (2.0 * r.len().max(1) as f64)
}

/// Solves the SPD system `A x = b` by Cholesky.
pub fn cholesky_solve(a: &Array2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut s = a[[j, j]];
        for k in 0..j {
            s -= l[[j, k]] * l[[j, k]];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Indefinite(j));
        }
        let ljj = s.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    let mut y = b.to_owned();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    Ok(y)
}

/// δ solving (νI + R'ᵀR')δ = −R'ᵀR.
pub fn lm_step(r: &[f64], rp: &Array2<f64>, nu: f64) -> Result<Vec<f64>> {
    if rp.nrows() != r.len() {
        return Err(Error::DimensionMismatch { expected: rp.nrows(), found: r.len() });
    }
    if !(nu >= 0.0) {
        return Err(Error::InvalidArgument(format!("damping {nu} must be non-negative")));
    }
    let mut a = rp.t().dot(rp);
    for i in 0..a.nrows() {
        a[[i, i]] += nu;
    }
    let g = rp.t().dot(&ArrayView1::from(r));
    let x = cholesky_solve(&a, g.view())?;
    Ok(x.iter().map(|v| -v).collect())
}

fn check_jacobian<P: LeastSquares + ?Sized>(problem: &P, theta: &[f64], jac: &Array2<f64>) -> Result<()> {
    let n = theta.len();
    let mut cols = vec![0, n / 2, n.saturating_sub(1)];
    cols.dedup();
    for &c in &cols {
        let h = 1e-6 * theta[c].abs().max(1.0);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[c] += h;
        tm[c] -= h;
        let rp = problem.residuals(&tp)?;
        let rm = problem.residuals(&tm)?;
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let col = jac.column(c);
        let diff = fd.iter().zip(col.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale = norm2(&fd).max(norm2(col.as_slice().unwrap_or(&col.to_vec()))).max(1e-8);
        if diff > 1e-4 * scale {
            return Err(Error::InconsistentJacobian { column: c, error: diff / scale });
        }
    }
    Ok(())
}

/// Levenberg–Marquardt with ν_k = μ‖R(θ_k)‖² and step halving on rejection.
pub fn lm_run<P: LeastSquares + ?Sized>(
    problem: &P,
    theta0: &[f64],
    opts: &LmOptions,
    theta_true: Option<&[f64]>,
) -> Result<LmOutcome> {
    opts.validate()?;
    let rel_err = |theta: &[f64]| {
        theta_true.map(|t| {
            let num: f64 = theta.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            num / norm2(t)
        })
    };
    let mut theta = theta0.to_vec();
    let (mut r, mut jac) = problem.residuals_and_jacobian(&theta)?;
    if jac.ncols() != theta.len() || jac.nrows() != r.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), found: jac.ncols() });
    }
    if opts.check_jacobian {
        check_jacobian(problem, &theta, &jac)?;
    }
    let mut phi = phi_of(&r);
    let mut records = vec![IterationRecord {
        iter: 0,
        theta: theta.clone(),
        phi,
        res_norm: norm2(&r),
        nu: f64::NAN,
        step_norm: 0.0,
        accepted: true,
        rel_param_err: rel_err(&theta),
    }];
    let mut termination = Termination::MaxIterations;
    for it in 1..=opts.max_iter {
        let g = jac.t().dot(&ArrayView1::from(&r[..]));
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= opts.tol_grad {
            termination = Termination::GradientTolerance;
            break;
        }
        let nu = opts.nu_rule.nu(norm2(&r));
        let mut delta = lm_step(&r, &jac, nu)?;
        if norm2(&delta) <= opts.tol_step {
            termination = Termination::StepTolerance;
            break;
        }
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = theta.iter().zip(&delta).map(|(a, b)| a + b).collect();
            if let Ok(rt) = problem.residuals(&trial) {
                let pt = phi_of(&rt);
                if pt < phi {
                    accepted = Some(trial);
                    break;
                }
            }
            delta.iter_mut().for_each(|d| *d *= 0.5);
        }
        let step_norm = norm2(&delta);
        match accepted {
            Some(trial) => {
                theta = trial;
                (r, jac) = problem.residuals_and_jacobian(&theta)?;
                let new_phi = phi_of(&r);
                assert!(new_phi <= phi, "accepted step increased the objective");
                phi = new_phi;
                records.push(IterationRecord {
                    iter: it,
                    theta: theta.clone(),
                    phi,
                    res_norm: norm2(&r),
                    nu,
                    step_norm,
                    accepted: true,
                    rel_param_err: rel_err(&theta),
                });
            }
            None => {
                records.push(IterationRecord {
                    iter: it,
                    theta: theta.clone(),
                    phi,
                    res_norm: norm2(&r),
                    nu,
                    step_norm,
                    accepted: false,
                    rel_param_err: rel_err(&theta),
                });
                termination = Termination::Stagnated;
                break;
            }
        }
    }
    Ok(LmOutcome { theta, history: LmHistory { records, termination } })
}
