#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use oqlearn_core::learning::LearningProblem;
use oqlearn_core::learning::{MeasurementDataset, SimSettings};
use oqlearn_core::model::{LindbladOperators, ModelSpec, ParameterVector};
use oqlearn_core::operators::{dagger, CMatrix, CVector, DensityMatrix, Observable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, d: usize, scale: f64) -> CMatrix {
    CMatrix::from_shape_fn((d, d), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * scale
    })
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize, scale: f64) -> CMatrix {
    let m = random_matrix(rng, d, scale);
    (&m + &dagger(&m)) * Complex64::new(0.5, 0.0)
}

pub fn random_vector(rng: &mut impl Rng, d: usize) -> CVector {
    let v = CVector::from_shape_fn(d, |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / n)
}

/// Full-rank mixed state W W† / tr.
pub fn random_density(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let w = random_matrix(rng, d, 1.0);
    let p = w.dot(&dagger(&w));
    let tr: f64 = (0..d).map(|i| p[[i, i]].re).sum();
    DensityMatrix::new(p.mapv(|z| z / tr)).unwrap()
}

pub fn random_observable(rng: &mut impl Rng, d: usize) -> Observable {
    Observable::new(random_hermitian(rng, d, 1.0), "rand").unwrap()
}

/// Random H and `n_jumps` dense jump operators on dimension d.
pub fn random_ops(rng: &mut impl Rng, d: usize, n_jumps: usize) -> LindbladOperators {
    let h = random_hermitian(rng, d, 1.0);
    let jumps = (0..n_jumps).map(|_| random_matrix(rng, d, 0.5)).collect();
    LindbladOperators::new(h, jumps).unwrap()
}

pub fn perturb(theta: &ParameterVector, seed: u64, size: f64) -> ParameterVector {
    let mut r = rng(seed);
    let v = theta.values().iter().map(|x| x + size * r.sample::<f64, _>(StandardNormal)).collect();
    theta.with_values(v).unwrap()
}

/// Dataset whose values are the model's own predictions at `theta`.
pub fn exact_dataset(
    spec: ModelSpec,
    theta: &ParameterVector,
    observables: Vec<Observable>,
    rho0: DensityMatrix,
    delta_t: f64,
    n_times: usize,
    sim: SimSettings,
) -> MeasurementDataset {
    let n_o = observables.len();
    let mut ds = MeasurementDataset {
        observables,
        delta_t,
        n_times,
        t_offset: 0.0,
        values: Array2::zeros((n_o, n_times)),
        n_shots: 0,
        rho0,
        seed: None,
    };
    let problem = LearningProblem::new(spec, ds.clone(), sim).unwrap();
    ds.values = problem.predictions(theta.values()).unwrap();
    ds
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn cmax_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn cnorm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
