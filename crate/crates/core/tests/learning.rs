mod common;

use common::*;
use ndarray::Array2;
use oqlearn_core::learning::{
    gradient_backprop, kraus_parameter_derivative, objective, step_ratio, JacobianMethod, LearningProblem,
    MeasurementDataset, ResidualVector, SimSettings,
};
use oqlearn_core::model::{random_true_model, DissipationMode, LindbladModel, ModelSpec, ParameterVector};
use oqlearn_core::operators::{
    dagger, inner, observable_basis, pauli_string, BasisKind, CMatrix, DensityMatrix, PauliAxis,
};
use oqlearn_core::propagator::{apply_kraus_list, apply_kraus_list_adjoint, KrausMap, Scheme};
use oqlearn_core::Error;

const SCHEMES: [Scheme; 3] = [Scheme::First, Scheme::Second, Scheme::SecondSimplified];

fn families(n: usize) -> [ModelSpec; 2] {
    [ModelSpec::linear_dissipator(n), ModelSpec::pauli_jump(n)]
}

/// Problem with data from θ* and a perturbed evaluation point, so residuals are O(1e-1).
fn setup(spec: ModelSpec, scheme: Scheme, dt: f64, l: usize, n_t: usize) -> (LearningProblem, ParameterVector) {
    let truth = random_true_model(11, &spec);
    let sim = SimSettings { scheme, dt };
    let mut r = rng(5);
    let rho0 = random_density(&mut r, spec.dim());
    let obs = observable_basis(BasisKind::OneLocal, spec.n_qubits).unwrap();
    let ds = exact_dataset(spec, &truth, obs, rho0, l as f64 * dt, n_t, sim);
    let problem = LearningProblem::new(spec, ds, sim).unwrap();
    (problem, perturb(&truth, 3, 0.1))
}

#[test]
fn kraus_derivative_matches_central_differences() {
    let h = 1e-5;
    for spec in families(2) {
        let model = LindbladModel::new(spec).unwrap();
        let theta = random_true_model(2, &spec);
        for scheme in SCHEMES {
            let dt = 0.05;
            let build = |p: &ParameterVector| KrausMap::new(&model.operators(p).unwrap(), dt, scheme).unwrap();
            let k = build(&theta);
            for alpha in 0..spec.n_params() {
                let d = model.derivative(&theta, alpha).unwrap();
                let analytic = kraus_parameter_derivative(&k, &d).unwrap();
                let mut vp = theta.values().to_vec();
                let mut vm = vp.clone();
                vp[alpha] += h;
                vm[alpha] -= h;
                let kp = build(&theta.with_values(vp).unwrap());
                let km = build(&theta.with_values(vm).unwrap());
                assert_eq!(analytic.len(), k.operators().len());
                for (j, df) in analytic.iter().enumerate() {
                    let fd = (&kp.operators()[j] - &km.operators()[j]) * num_complex::Complex64::new(0.5 / h, 0.0);
                    let err = cmax_diff(df, &fd);
                    assert!(err < 1e-8, "{scheme:?} {alpha} F{j}: {err}");
                }
            }
        }
    }
}

#[test]
fn kraus_derivative_hamiltonian_parameter_single_qubit() {
    // H = 0.7σ^x + e_z σ^z with V = 0; derivative in e_z against a hand-built formula.
    let spec = ModelSpec::linear_dissipator(1);
    let model = LindbladModel::new(spec).unwrap();
    let theta = ParameterVector::new(spec, vec![0.7, 0.0, 0.3, 0.0, 0.0]).unwrap();
    let dt = 0.1;
    let k = KrausMap::new(&model.operators(&theta).unwrap(), dt, Scheme::Second).unwrap();
    let d = model.derivative(&theta, 2).unwrap();
    let df = kraus_parameter_derivative(&k, &d).unwrap();
    let i = num_complex::Complex64::i();
    let sz = PauliAxis::Z.matrix();
    let dg = sz.mapv(|z| -i * z);
    let eye = oqlearn_core::operators::identity(2);
    let r = k.resolvent();
    let expected = r.dot(&dg).dot(&(&k.operators()[0] + &eye)) * num_complex::Complex64::new(0.5 * dt, 0.0);
    assert!(cmax_diff(&df[0], &expected) < 1e-14);
    for f in &df[1..] {
        assert!(cnorm(f) == 0.0);
    }
}

#[test]
fn zero_operator_derivative_gives_zero_kraus_derivative() {
    let spec = ModelSpec::pauli_jump(1);
    let model = LindbladModel::new(spec).unwrap();
    let theta = random_true_model(4, &spec);
    let mut d = model.derivative(&theta, 0).unwrap();
    d.dg.fill(num_complex::Complex64::new(0.0, 0.0));
    d.dh.fill(num_complex::Complex64::new(0.0, 0.0));
    for v in &mut d.dv {
        v.fill(num_complex::Complex64::new(0.0, 0.0));
    }
    for scheme in SCHEMES {
        let k = KrausMap::new(&model.operators(&theta).unwrap(), 0.1, scheme).unwrap();
        for f in kraus_parameter_derivative(&k, &d).unwrap() {
            assert_eq!(cnorm(&f), 0.0);
        }
    }
}

/// ∂φ/∂θ_α = (1/N_O N_T) Σ_{k,n} r_{k,n} Σ_{l=1}^{nL} ⟨(K*)^{l−1}A_k, (∂_αK)ρ_{nL−l}⟩,
/// evaluated term by term with explicit Kraus lists.
fn literal_gradient(problem: &LearningProblem, theta: &ParameterVector) -> Vec<f64> {
    let k = problem.kraus_map(theta.values()).unwrap();
    let f = k.operators().to_vec();
    let ds = problem.dataset();
    let l = step_ratio(ds.delta_t, k.dt()).unwrap();
    let m_total = l * ds.n_times;
    let mut states = vec![ds.rho0.op().clone()];
    for m in 0..m_total {
        let next = apply_kraus_list(&f, &states[m]);
        states.push(next);
    }
    let res = problem.residuals(theta.values()).unwrap();
    let n_scale = (ds.n_observables() * ds.n_times) as f64;
    let model = problem.model();
    (0..theta.len())
        .map(|alpha| {
            let df = kraus_parameter_derivative(&k, &model.derivative(theta, alpha).unwrap()).unwrap();
            let dk = |rho: &CMatrix| -> CMatrix {
                let mut out = CMatrix::zeros(rho.raw_dim());
                for (fj, dfj) in f.iter().zip(&df) {
                    out = out + dfj.dot(rho).dot(&dagger(fj)) + fj.dot(rho).dot(&dagger(dfj));
                }
                out
            };
            let mut total = 0.0;
            for (kk, a) in ds.observables.iter().enumerate() {
                for n in 1..=ds.n_times {
                    let mut back = a.op().clone();
                    let mut sum = 0.0;
                    for ll in 1..=n * l {
                        sum += inner(&back, &dk(&states[n * l - ll]));
                        back = apply_kraus_list_adjoint(&f, &back);
                    }
                    total += res.get(kk, n - 1) * sum;
                }
            }
            total / n_scale
        })
        .collect()
}

#[test]
fn gradient_matches_literal_double_sum() {
    for spec in families(1) {
        for scheme in SCHEMES {
            let (problem, theta) = setup(spec, scheme, 0.05, 2, 2);
            assert_eq!(problem.n_steps(), 4);
            let g = problem.gradient(theta.values()).unwrap();
            let lit = literal_gradient(&problem, &theta);
            let err = max_abs_diff(&g, &lit);
            assert!(err <= 1e-12 * max_abs(&lit).max(1.0), "{spec:?} {scheme:?}: {err}");
        }
    }
}

#[test]
fn adjoint_and_forward_jacobians_agree() {
    for spec in families(2) {
        for scheme in SCHEMES {
            let (problem, theta) = setup(spec, scheme, 0.02, 3, 4);
            let (ra, ja) = problem.jacobian(theta.values(), JacobianMethod::Adjoint).unwrap();
            let (rf, jf) = problem.jacobian(theta.values(), JacobianMethod::Forward).unwrap();
            assert_eq!(ra, rf);
            let scale = ja.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = (&ja - &jf).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err <= 1e-12 * scale.max(1.0), "{spec:?} {scheme:?}: {err} (scale {scale})");
        }
    }
}

#[test]
fn gradient_equals_jacobian_transpose_residual() {
    for spec in families(2) {
        let (problem, theta) = setup(spec, Scheme::Second, 0.02, 3, 4);
        let (r, j) = problem.jacobian(theta.values(), JacobianMethod::Adjoint).unwrap();
        let g = problem.gradient(theta.values()).unwrap();
        let jtr: Vec<f64> =
            j.t().dot(&ndarray::ArrayView1::from(r.values())).iter().map(|v| v / r.values().len() as f64).collect();
        assert!(max_abs_diff(&g, &jtr) <= 1e-10 * max_abs(&jtr).max(1.0));
    }
}

#[test]
fn gradient_matches_finite_differences_for_each_order() {
    let h = 1e-5;
    for spec in families(2) {
        for scheme in SCHEMES {
            let (problem, theta) = setup(spec, scheme, 0.02, 3, 4);
            let g = problem.gradient(theta.values()).unwrap();
            let fd: Vec<f64> = (0..theta.len())
                .map(|a| {
                    let mut p = theta.values().to_vec();
                    let mut m = p.clone();
                    p[a] += h;
                    m[a] -= h;
                    (problem.objective(&p).unwrap() - problem.objective(&m).unwrap()) / (2.0 * h)
                })
                .collect();
            let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den <= 1e-6, "{spec:?} {scheme:?}: relative FD error {}", num / den);
        }
    }
}

#[test]
fn jacobian_matches_finite_differences_pauli_jump() {
    let h = 1e-5;
    let (problem, theta) = setup(ModelSpec::pauli_jump(2), Scheme::Second, 0.02, 3, 4);
    let (_, j) = problem.jacobian(theta.values(), JacobianMethod::Auto).unwrap();
    let mut fd = Array2::<f64>::zeros(j.raw_dim());
    for a in 0..theta.len() {
        let mut p = theta.values().to_vec();
        let mut m = p.clone();
        p[a] += h;
        m[a] -= h;
        let rp = problem.residuals(&p).unwrap();
        let rm = problem.residuals(&m).unwrap();
        for i in 0..rp.values().len() {
            fd[[i, a]] = (rp.values()[i] - rm.values()[i]) / (2.0 * h);
        }
    }
    let num = (&j - &fd).iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(num / den <= 1e-6, "{}", num / den);
}

#[test]
fn self_consistent_data_gives_zero_residual_and_gradient() {
    for spec in families(2) {
        let truth = random_true_model(11, &spec);
        let sim = SimSettings { scheme: Scheme::Second, dt: 0.01 };
        let obs = observable_basis(BasisKind::OneLocal, 2).unwrap();
        let ds = exact_dataset(spec, &truth, obs, DensityMatrix::all_up(2), 0.1, 5, sim);
        let problem = LearningProblem::new(spec, ds, sim).unwrap();
        let r = problem.residuals(truth.values()).unwrap();
        assert!(r.norm() <= 1e-12);
        let g = problem.gradient(truth.values()).unwrap();
        assert!(max_abs(&g) <= 1e-10);
        // identity row
        for n in 0..5 {
            assert!(r.get(0, n).abs() <= 1e-12);
        }
    }
}

#[test]
fn commuting_parameter_has_zero_jacobian_column() {
    // H = θσ^z, V = 0, A = σ^z: ⟨σ^z⟩ does not depend on θ.
    let spec = ModelSpec::linear_dissipator(1);
    let theta = ParameterVector::new(spec, vec![0.0, 0.0, 0.8, 0.0, 0.0]).unwrap();
    let sim = SimSettings { scheme: Scheme::Second, dt: 0.05 };
    let mut r = rng(9);
    let rho0 = random_density(&mut r, 2);
    let obs = vec![pauli_string(&[0], &[PauliAxis::Z], 1).unwrap()];
    let mut ds = exact_dataset(spec, &theta, obs, rho0, 0.1, 5, sim);
    ds.values.mapv_inplace(|v| v + 0.05);
    let problem = LearningProblem::new(spec, ds, sim).unwrap();
    for method in [JacobianMethod::Adjoint, JacobianMethod::Forward] {
        let (_, j) = problem.jacobian(theta.values(), method).unwrap();
        assert!(j.column(2).iter().all(|v| v.abs() <= 1e-14));
    }
}

#[test]
fn objective_arithmetic() {
    assert_eq!(ResidualVector::new(vec![2.0], 1, 1).unwrap().objective(), 2.0);
    assert_eq!(ResidualVector::new(vec![0.0; 6], 2, 3).unwrap().objective(), 0.0);
    assert!(ResidualVector::new(vec![0.0; 5], 2, 3).is_err());
}

#[test]
fn free_functions_agree_with_problem() {
    let (problem, theta) = setup(ModelSpec::linear_dissipator(2), Scheme::Second, 0.02, 3, 2);
    let sim = problem.sim();
    let g = gradient_backprop(&theta, problem.dataset(), sim).unwrap();
    assert_eq!(g, problem.gradient(theta.values()).unwrap());
    assert_eq!(objective(&theta, problem.dataset(), sim).unwrap(), problem.objective(theta.values()).unwrap());
}

#[test]
fn record_steps_require_integer_ratio() {
    assert_eq!(step_ratio(0.1, 0.01).unwrap(), 10);
    assert!(matches!(step_ratio(0.1, 0.03), Err(Error::NonIntegerRatio { .. })));
    let spec = ModelSpec::linear_dissipator(1);
    let ds = MeasurementDataset {
        observables: observable_basis(BasisKind::OneLocal, 1).unwrap(),
        delta_t: 0.1,
        n_times: 10,
        t_offset: 4.0,
        values: Array2::zeros((4, 10)),
        n_shots: 0,
        rho0: DensityMatrix::all_up(1),
        seed: None,
    };
    assert_eq!(ds.record_steps(0.01).unwrap()[0], 410);
    assert!(LearningProblem::new(spec, ds, SimSettings { scheme: Scheme::Second, dt: 0.03 }).is_err());
}

#[test]
fn strength_mode_derivative_at_zero_is_an_error() {
    let spec = ModelSpec::linear_dissipator(1).with_mode(DissipationMode::Strength);
    let theta = ParameterVector::new(spec, vec![0.1, 0.2, 0.3, 0.0, 0.5]).unwrap();
    let sim = SimSettings { scheme: Scheme::Second, dt: 0.05 };
    let ds = exact_dataset(
        spec,
        &theta,
        observable_basis(BasisKind::OneLocal, 1).unwrap(),
        DensityMatrix::all_up(1),
        0.1,
        2,
        sim,
    );
    let problem = LearningProblem::new(spec, ds, sim).unwrap();
    assert!(matches!(problem.gradient(theta.values()), Err(Error::SingularStrengthDerivative { .. })));
}

#[test]
fn auto_method_picks_cheaper_option() {
    let (problem, _) = setup(ModelSpec::linear_dissipator(2), Scheme::Second, 0.02, 3, 4);
    let (a, f) = problem.jacobian_costs();
    let expected = if a < f { JacobianMethod::Adjoint } else { JacobianMethod::Forward };
    assert_eq!(problem.resolve_method(JacobianMethod::Auto), expected);
    assert_eq!(problem.resolve_method(JacobianMethod::Forward), JacobianMethod::Forward);
}

fn standard_dataset(spec: ModelSpec, truth: &ParameterVector, basis: BasisKind) -> MeasurementDataset {
    let sim = SimSettings { scheme: Scheme::Second, dt: 0.01 };
    let obs = observable_basis(basis, spec.n_qubits).unwrap();
    exact_dataset(spec, truth, obs, DensityMatrix::all_up(spec.n_qubits), 0.1, 10, sim)
}

fn smallest_singular_value(j: &Array2<f64>) -> f64 {
    let m = nalgebra::DMatrix::from_fn(j.nrows(), j.ncols(), |r, c| j[[r, c]]);
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn levenberg_marquardt_recovers_two_qubit_model() {
    use oqlearn_core::optimizer::{lm_run, LmOptions};
    for spec in families(2) {
        let truth = random_true_model(21, &spec);
        let ds = standard_dataset(spec, &truth, BasisKind::OneLocal);
        let problem = LearningProblem::new(spec, ds, SimSettings { scheme: Scheme::Second, dt: 0.01 }).unwrap();
        let start = perturb(&truth, 4, 0.05);
        let out = lm_run(&problem, start.values(), &LmOptions::default(), Some(truth.values())).unwrap();
        let h = &out.history;
        let phis: Vec<f64> = h.records.iter().filter(|r| r.accepted).map(|r| r.phi).collect();
        assert!(phis.windows(2).all(|w| w[1] <= w[0]));
        let err = h.last().rel_param_err.unwrap();
        assert!(err < 1e-6, "{spec:?}: {err:e} after {} iterations ({:?})", h.records.len(), h.termination);
    }
}

#[test]
fn xy_observables_are_markedly_less_informative() {
    let spec = ModelSpec::pauli_jump(2);
    let truth = random_true_model(22, &spec);
    let sim = SimSettings { scheme: Scheme::Second, dt: 0.01 };
    let sigma = |basis| {
        let problem = LearningProblem::new(spec, standard_dataset(spec, &truth, basis), sim).unwrap();
        smallest_singular_value(&problem.jacobian(truth.values(), JacobianMethod::Forward).unwrap().1)
    };
    let full = sigma(BasisKind::OneLocal);
    let pairs = sigma(BasisKind::TwoLocal);
    let xy = sigma(BasisKind::XyOneLocal);
    assert!(full > 1e-6 && pairs >= full);
    assert!(xy < full);
}
