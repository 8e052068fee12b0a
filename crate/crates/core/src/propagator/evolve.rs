use ndarray::Array2;

use super::kraus::KrausMap;
use crate::error::{Error, Result};
use crate::model::LindbladOperators;
use crate::operators::{check_square, trace_product, CMatrix, DensityMatrix, Observable};

/// States recorded every `stride` steps, starting at step 0.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Re tr(Aρ) at every recorded time.
    pub fn expectations(&self, a: &Observable) -> Vec<f64> {
        self.states.iter().map(|s| a.trace_with(s.op()).re).collect()
    }
}

pub fn evolve_trajectory(k: &KrausMap, rho0: &DensityMatrix, steps: usize, stride: usize) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    check_square(rho0.op(), k.dim())?;
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut rho = rho0.op().clone();
    for m in 1..=steps {
        rho = k.step_op(&rho);
        if m % stride == 0 {
            times.push(m as f64 * k.dt());
            states.push(DensityMatrix::from_hermitian(rho.clone()));
        }
    }
    Ok(Trajectory { times, states })
}

/// tr(A_k ρ_m) for every observable at each of the increasing step indices `record`.
pub fn evolve_expectations_at(
    k: &KrausMap,
    rho0: &DensityMatrix,
    observables: &[Observable],
    record: &[usize],
) -> Result<Array2<f64>> {
    check_square(rho0.op(), k.dim())?;
    for a in observables {
        check_square(a.op(), k.dim())?;
    }
    if record.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("record steps must be strictly increasing".into()));
    }
    let mut out = Array2::zeros((observables.len(), record.len()));
    let mut rho = rho0.op().clone();
    let mut m = 0;
    for (n, &target) in record.iter().enumerate() {
        while m < target {
            rho = k.step_op(&rho);
            m += 1;
        }
        for (kk, a) in observables.iter().enumerate() {
            out[[kk, n]] = a.trace_with(&rho).re;
        }
    }
    Ok(out)
}

/// y_{k,n} = tr(A_k ρ_{nL}) for n = 1..=n_t.
pub fn evolve_expectations(
    k: &KrausMap,
    rho0: &DensityMatrix,
    observables: &[Observable],
    n_t: usize,
    l: usize,
) -> Result<Array2<f64>> {
    if n_t == 0 || l == 0 {
        return Err(Error::InvalidArgument("need at least one measurement and one step per interval".into()));
    }
    let record: Vec<usize> = (1..=n_t).map(|n| n * l).collect();
    evolve_expectations_at(k, rho0, observables, &record)
}

/// Largest deviation, over interior recorded times, between the centered difference of ⟨A⟩
/// and tr(L*(A) ρ_m).
pub fn ehrenfest_residual(ops: &LindbladOperators, traj: &Trajectory, a: &Observable) -> Result<f64> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::TooFewStates { needed: 3, found: n });
    }
    let h = traj.times[1] - traj.times[0];
    if traj.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::InvalidArgument("trajectory stride is not uniform".into()));
    }
    let rhs_op: CMatrix = ops.adjoint_lindbladian(a.op());
    let y = traj.expectations(a);
    let mut worst = 0.0f64;
    for m in 1..n - 1 {
        let lhs = (y[m + 1] - y[m - 1]) / (2.0 * h);
        let rhs = trace_product(&rhs_op, traj.states[m].op()).re;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
