//! Stochastic Schrödinger unraveling whose ensemble average reproduces the Kraus integrators.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LindbladOperators;
use crate::operators::{
    identity, lu_factor, outer, real, CMatrix, CVector, DensityMatrix, LuFactorization, Observable,
};

/// Noise increments for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw {
    /// One increment per jump operator.
    pub dw: Vec<f64>,
    /// Two-point auxiliary variables; only read by the second-order step.
    pub u: Array2<f64>,
}

impl NoiseDraw {
    pub fn zero(n_jumps: usize) -> Self {
        NoiseDraw { dw: vec![0.0; n_jumps], u: Array2::zeros((n_jumps, n_jumps)) }
    }

    /// Independent N(0, dt) increments.
    pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n_jumps: usize, dt: f64) -> Self {
        let s = dt.sqrt();
        NoiseDraw {
            dw: (0..n_jumps).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect(),
            u: Array2::zeros((n_jumps, n_jumps)),
        }
    }

    /// Three-point increments ±√(3dt) (probability 1/6 each) or 0, plus the two-point table
    /// U with U_jj = −dt, U_ab = ±dt for b < a and U_ba = −U_ab.
    pub fn three_point<R: Rng + ?Sized>(rng: &mut R, n_jumps: usize, dt: f64) -> Self {
        let h = (3.0 * dt).sqrt();
        let dw = (0..n_jumps)
            .map(|_| {
                let x: f64 = rng.random();
                if x < 1.0 / 6.0 {
                    -h
                } else if x < 1.0 / 3.0 {
                    h
                } else {
                    0.0
                }
            })
            .collect();
        let mut u = Array2::zeros((n_jumps, n_jumps));
        for a in 0..n_jumps {
            u[[a, a]] = -dt;
            for b in 0..a {
                let v = if rng.random::<bool>() { dt } else { -dt };
                u[[a, b]] = v;
                u[[b, a]] = -v;
            }
        }
        NoiseDraw { dw, u }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SseScheme {
    /// Semi-implicit Euler with Gaussian increments.
    First,
    /// Implicit weak second-order step with three-point and two-point noise.
    Second,
}

/// Prepared single-step update with the resolvent factorized once.
#[derive(Debug)]
pub struct SseStepper {
    scheme: SseScheme,
    dt: f64,
    lu: LuFactorization,
    drift: CMatrix,
    noise_ops: Vec<CMatrix>,
    /// V_b V_a at index a + N_V·b
    double: Vec<CMatrix>,
}

impl SseStepper {
    pub fn new(ops: &LindbladOperators, dt: f64, scheme: SseScheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        let d = ops.dim();
        let g = ops.generator();
        let eye = identity(d);
        let nv = ops.n_jumps();
        match scheme {
            SseScheme::First => Ok(SseStepper {
                scheme,
                dt,
                lu: lu_factor(&(&eye - &(g * real(dt))))?,
                drift: eye,
                noise_ops: ops.jumps().to_vec(),
                double: Vec::new(),
            }),
            SseScheme::Second => {
                let fwd = &eye + &(g * real(0.5 * dt));
                let noise_ops = ops.jumps().iter().map(|v| v.dot(&fwd)).collect();
                let mut double = Vec::with_capacity(nv * nv);
                for b in 0..nv {
                    for a in 0..nv {
                        double.push(ops.jumps()[b].dot(&ops.jumps()[a]));
                    }
                }
                Ok(SseStepper {
                    scheme,
                    dt,
                    lu: lu_factor(&(&eye - &(g * real(0.5 * dt))))?,
                    drift: fwd,
                    noise_ops,
                    double,
                })
            }
        }
    }

    pub fn scheme(&self) -> SseScheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_jumps(&self) -> usize {
        self.noise_ops.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseDraw {
        match self.scheme {
            SseScheme::First => NoiseDraw::gaussian(rng, self.n_jumps(), self.dt),
            SseScheme::Second => NoiseDraw::three_point(rng, self.n_jumps(), self.dt),
        }
    }

    pub fn step(&self, psi: &CVector, noise: &NoiseDraw) -> Result<CVector> {
        let nv = self.n_jumps();
        if noise.dw.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, found: noise.dw.len() });
        }
        let mut rhs = self.drift.dot(psi);
        for (op, &w) in self.noise_ops.iter().zip(&noise.dw) {
            if w != 0.0 {
                rhs.scaled_add(real(w), &op.dot(psi));
            }
        }
        if self.scheme == SseScheme::Second {
            if noise.u.dim() != (nv, nv) {
                return Err(Error::DimensionMismatch { expected: nv, found: noise.u.nrows() });
            }
            for b in 0..nv {
                for a in 0..nv {
                    let c = 0.5 * (noise.dw[a] * noise.dw[b] + noise.u[[a, b]]);
                    if c != 0.0 {
                        rhs.scaled_add(real(c), &self.double[a + nv * b].dot(psi));
                    }
                }
            }
        }
        self.lu.solve_vec(&rhs)
    }
}

/// (I − G dt)⁻¹[I + Σ V_j dW_j]ψ.
pub fn sse_step_first(psi: &CVector, ops: &LindbladOperators, dt: f64, noise: &NoiseDraw) -> Result<CVector> {
    SseStepper::new(ops, dt, SseScheme::First)?.step(psi, noise)
}

/// (I − ½G dt)⁻¹[(I + ½G dt)ψ + Σ V_j(I + ½G dt)ψ dŴ_j + ½Σ V_b V_a ψ (dŴ_a dŴ_b + U_ab)].
pub fn sse_step_second(psi: &CVector, ops: &LindbladOperators, dt: f64, noise: &NoiseDraw) -> Result<CVector> {
    SseStepper::new(ops, dt, SseScheme::Second)?.step(psi, noise)
}

/// Monte Carlo average of |ψ⟩⟨ψ| with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct DensityEstimate {
    pub rho: CMatrix,
    pub std_err_re: Array2<f64>,
    pub std_err_im: Array2<f64>,
    pub n_traj: usize,
}

fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Final states of `n_traj` independent trajectories. Trajectory i draws from stream i of the
/// seeded generator, so results do not depend on the thread count.
pub fn mc_final_states(
    psi0: &CVector,
    ops: &LindbladOperators,
    dt: f64,
    steps: usize,
    n_traj: usize,
    scheme: SseScheme,
    seed: u64,
) -> Result<Vec<CVector>> {
    if psi0.len() != ops.dim() {
        return Err(Error::DimensionMismatch { expected: ops.dim(), found: psi0.len() });
    }
    let stepper = SseStepper::new(ops, dt, scheme)?;
    (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let mut psi = psi0.clone();
            for _ in 0..steps {
                let noise = stepper.draw(&mut rng);
                psi = stepper.step(&psi, &noise)?;
            }
            Ok(psi)
        })
        .collect()
}

pub fn mc_density(
    psi0: &CVector,
    ops: &LindbladOperators,
    dt: f64,
    steps: usize,
    n_traj: usize,
    scheme: SseScheme,
    seed: u64,
) -> Result<DensityEstimate> {
    if n_traj < 2 {
        return Err(Error::InvalidArgument("need at least two trajectories".into()));
    }
    let states = mc_final_states(psi0, ops, dt, steps, n_traj, scheme, seed)?;
    let d = psi0.len();
    let mut sum = CMatrix::zeros((d, d));
    let mut sq_re = Array2::<f64>::zeros((d, d));
    let mut sq_im = Array2::<f64>::zeros((d, d));
    for psi in &states {
        let p = outer(psi);
        sum += &p;
        ndarray::Zip::from(&mut sq_re).and(&mut sq_im).and(&p).for_each(|r, i, z| {
            *r += z.re * z.re;
            *i += z.im * z.im;
        });
    }
    let n = n_traj as f64;
    let rho = sum.mapv(|z| z / n);
    let se = |sq: f64, mean: f64| ((sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt();
    let std_err_re = Array2::from_shape_fn((d, d), |(a, b)| se(sq_re[[a, b]], rho[[a, b]].re));
    let std_err_im = Array2::from_shape_fn((d, d), |(a, b)| se(sq_im[[a, b]], rho[[a, b]].im));
    Ok(DensityEstimate { rho, std_err_re, std_err_im, n_traj })
}

/// Sample mean and standard error of ⟨ψ|A|ψ⟩ over trajectories.
pub fn mc_expectation(states: &[CVector], a: &Observable) -> (f64, f64) {
    let vals: Vec<f64> =
        states.iter().map(|psi| psi.iter().zip(a.op().dot(psi).iter()).map(|(x, y)| (x.conj() * y).re).sum()).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Exact one-step expectation of |ψ₁⟩⟨ψ₁| over the finite noise support.
///
/// The second-order scheme enumerates its three-point and two-point laws. The first-order
/// scheme uses ±√dt two-point increments, which share the Gaussian's first two moments.
pub fn enumerate_one_step(
    psi0: &CVector,
    ops: &LindbladOperators,
    dt: f64,
    scheme: SseScheme,
) -> Result<DensityMatrix> {
    let nv = ops.n_jumps();
    if nv > 3 {
        return Err(Error::SupportTooLarge(nv));
    }
    let stepper = SseStepper::new(ops, dt, scheme)?;
    let d = psi0.len();
    let mut acc = CMatrix::zeros((d, d));
    let (levels, probs): (Vec<f64>, Vec<f64>) = match scheme {
        SseScheme::First => (vec![-dt.sqrt(), dt.sqrt()], vec![0.5, 0.5]),
        SseScheme::Second => {
            let h = (3.0 * dt).sqrt();
            (vec![-h, 0.0, h], vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])
        }
    };
    let pairs: Vec<(usize, usize)> = match scheme {
        SseScheme::First => Vec::new(),
        SseScheme::Second => (0..nv).flat_map(|a| (0..a).map(move |b| (a, b))).collect(),
    };
    let n_w = levels.len().pow(nv as u32);
    let n_u = 1usize << pairs.len();
    for iw in 0..n_w {
        let mut noise = NoiseDraw::zero(nv);
        let mut p_w = 1.0;
        let mut code = iw;
        for j in 0..nv {
            let l = code % levels.len();
            code /= levels.len();
            noise.dw[j] = levels[l];
            p_w *= probs[l];
        }
        for iu in 0..n_u {
            if scheme == SseScheme::Second {
                for j in 0..nv {
                    noise.u[[j, j]] = -dt;
                }
                for (bit, &(a, b)) in pairs.iter().enumerate() {
                    let v = if (iu >> bit) & 1 == 1 { dt } else { -dt };
                    noise.u[[a, b]] = v;
                    noise.u[[b, a]] = -v;
                }
            }
            let p = p_w / n_u as f64;
            let psi1 = stepper.step(psi0, &noise)?;
            acc.scaled_add(Complex64::new(p, 0.0), &outer(&psi1));
        }
    }
    DensityMatrix::new(acc)
}
