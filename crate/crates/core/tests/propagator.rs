mod common;

use common::*;
use num_complex::Complex64;
use oqlearn_core::model::{random_true_model, LindbladModel, LindbladOperators, ModelSpec};
use oqlearn_core::operators::{
    dagger, eigenvalues_hermitian, identity, inner, observable_basis, pauli_string, trace, BasisKind, CMatrix,
    DensityMatrix, Observable, PauliAxis,
};
use oqlearn_core::propagator::{
    apply_kraus_list, apply_kraus_list_adjoint, ehrenfest_residual, evolve_expectations, evolve_trajectory,
    kraus_first_order, kraus_second_order, KrausMap, Scheme,
};

const SCHEMES: [Scheme; 3] = [Scheme::First, Scheme::Second, Scheme::SecondSimplified];

fn chain_model(n: usize, seed: u64) -> LindbladOperators {
    let spec = ModelSpec::linear_dissipator(n);
    LindbladModel::new(spec).unwrap().operators(&random_true_model(seed, &spec)).unwrap()
}

fn dephasing(lambda: f64) -> LindbladOperators {
    let v = PauliAxis::Z.matrix().mapv(|z| z * lambda.sqrt());
    LindbladOperators::new(CMatrix::zeros((2, 2)), vec![v]).unwrap()
}

fn plus_state() -> DensityMatrix {
    DensityMatrix::new(CMatrix::from_elem((2, 2), Complex64::new(0.5, 0.0))).unwrap()
}

fn x_obs() -> Observable {
    Observable::new(PauliAxis::X.matrix(), "x").unwrap()
}

fn spectral_radius_bound(m: &CMatrix) -> f64 {
    // ‖M‖₂² = λ_max(M†M) bounds the spectral radius.
    let mm = dagger(m).dot(m);
    eigenvalues_hermitian(&mm).unwrap().last().unwrap().sqrt()
}

#[test]
fn structured_application_matches_explicit_kraus_list() {
    let mut r = rng(1);
    for n_jumps in [0, 1, 3] {
        let ops = random_ops(&mut r, 4, n_jumps);
        let x = random_density(&mut r, 4);
        let a = random_hermitian(&mut r, 4, 1.0);
        for scheme in SCHEMES {
            let k = KrausMap::new(&ops, 0.07, scheme).unwrap();
            let expected_len = 1 + n_jumps + if scheme.order() == 2 { n_jumps * n_jumps } else { 0 };
            assert_eq!(k.operators().len(), expected_len);
            assert!(cmax_diff(&k.apply_raw(x.op()), &apply_kraus_list(k.operators(), x.op())) < 1e-13);
            assert!(cmax_diff(&k.apply_adjoint_raw(&a), &apply_kraus_list_adjoint(k.operators(), &a)) < 1e-13);
        }
    }
}

#[test]
fn trace_preservation_defect_scales_with_order() {
    // defect(dt)/defect(dt/2) ≈ 2^{order+1}
    for (i, n) in [1usize, 2, 3].into_iter().enumerate() {
        let ops = chain_model(n, 20 + i as u64);
        for (scheme, target) in [(Scheme::First, 4.0), (Scheme::Second, 8.0), (Scheme::SecondSimplified, 8.0)] {
            let defect = |dt: f64| KrausMap::new(&ops, dt, scheme).unwrap().tp_defect().unwrap();
            let ratio = defect(0.02) / defect(0.01);
            assert!((0.7 * target..1.3 * target).contains(&ratio), "N={n} {scheme:?}: ratio {ratio}");
        }
    }
}

#[test]
fn tp_defect_agrees_with_explicit_sum() {
    let ops = chain_model(2, 3);
    for scheme in SCHEMES {
        let k = KrausMap::new(&ops, 0.05, scheme).unwrap();
        let mut s = CMatrix::zeros((4, 4));
        for f in k.operators() {
            s = s + dagger(f).dot(f);
        }
        s = s - identity(4);
        let ev = eigenvalues_hermitian(&oqlearn_core::operators::hermitian_part(&s)).unwrap();
        let norm = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((norm - k.tp_defect().unwrap()).abs() < 1e-13);
    }
}

#[test]
fn long_evolution_stays_positive_and_hermitian() {
    let ops = chain_model(2, 4);
    let mut r = rng(4);
    let rho0 = random_density(&mut r, 4);
    for scheme in SCHEMES {
        for dt in [0.01, 0.2] {
            let k = KrausMap::new(&ops, dt, scheme).unwrap();
            let mut rho = rho0.clone();
            for step in 0..1000 {
                rho = k.apply(&rho).unwrap();
                if step % 100 == 99 {
                    assert!(rho.min_eigenvalue().unwrap() >= -1e-10, "{scheme:?} dt={dt}");
                }
            }
            if dt > 0.05 {
                continue;
            }
            let raw = k.apply_raw(rho.op());
            let defect = oqlearn_core::operators::hermiticity_defect(&raw);
            assert!(defect <= 1e-12, "{scheme:?} dt={dt}: {defect:e}");
        }
    }
}

#[test]
fn random_state_after_one_step_of_six_spin_model() {
    // The trace error is bounded by the TP defect and shrinks like dt³.
    let ops = chain_model(6, 1);
    let mut r = rng(6);
    let rho = random_density(&mut r, 64);
    let trace_err = |dt: f64| {
        let k = KrausMap::new(&ops, dt, Scheme::Second).unwrap();
        let out = k.apply(&rho).unwrap();
        assert!(out.min_eigenvalue().unwrap() >= -1e-10);
        let e = (out.trace() - 1.0).abs();
        assert!(e <= k.tp_defect().unwrap(), "dt={dt}: {e:e}");
        e
    };
    let ratio = trace_err(0.01) / trace_err(0.005);
    assert!((5.6..10.4).contains(&ratio), "{ratio}");
}

#[test]
fn hundred_steps_keep_positivity() {
    let ops = chain_model(3, 2);
    let k = KrausMap::new(&ops, 0.01, Scheme::Second).unwrap();
    let mut rho = DensityMatrix::all_up(3);
    for _ in 0..100 {
        rho = k.apply(&rho).unwrap();
    }
    assert!(rho.min_eigenvalue().unwrap() >= -1e-10);
}

#[test]
fn trivial_model_gives_identity_channel() {
    let ops = LindbladOperators::new(CMatrix::zeros((4, 4)), vec![]).unwrap();
    let k = kraus_first_order(&ops, 0.1).unwrap();
    assert_eq!(k.operators().len(), 1);
    assert!(cmax_diff(&k.operators()[0], &identity(4)) == 0.0);
    let mut r = rng(7);
    let rho = random_density(&mut r, 4);
    for scheme in SCHEMES {
        let k = KrausMap::new(&ops, 0.1, scheme).unwrap();
        assert!(cmax_diff(k.apply(&rho).unwrap().op(), rho.op()) < 1e-15);
    }
    let obs = observable_basis(BasisKind::OneLocal, 2).unwrap();
    let y = evolve_expectations(&k, &rho, &obs, 5, 3).unwrap();
    for row in y.rows() {
        assert!(row.iter().all(|v| (v - row[0]).abs() < 1e-14));
    }
}

#[test]
fn unitary_channels() {
    let mut r = rng(8);
    let h = random_hermitian(&mut r, 4, 1.0);
    let ops = LindbladOperators::new(h.clone(), vec![]).unwrap();
    // Cayley transform is exactly unitary.
    let k2 = kraus_second_order(&ops, 0.1, false).unwrap();
    let f0 = &k2.operators()[0];
    assert!(cmax_diff(&dagger(f0).dot(f0), &identity(4)) < 1e-12);
    let mixed = DensityMatrix::maximally_mixed(4);
    assert!(cmax_diff(k2.apply(&mixed).unwrap().op(), mixed.op()) < 1e-15);

    // First order contracts for any H.
    for scale in [1.0, 1e2, 1e3] {
        let hs = random_hermitian(&mut r, 4, scale);
        let ops = LindbladOperators::new(hs, vec![]).unwrap();
        let k1 = kraus_first_order(&ops, 0.01).unwrap();
        assert!(spectral_radius_bound(&k1.operators()[0]) <= 1.0 + 1e-12);
    }
    let ops = LindbladOperators::new(h, vec![]).unwrap();
    let k1 = kraus_first_order(&ops, 0.01).unwrap();
    assert!(k1.tp_defect().unwrap() <= 10.0 * 0.01 * 0.01);

    // Heisenberg and Schrödinger pictures agree after several steps.
    let rho = random_density(&mut r, 4);
    let a = random_observable(&mut r, 4);
    let (mut rho_t, mut a_t) = (rho.clone(), a.clone());
    for _ in 0..5 {
        rho_t = k2.apply(&rho_t).unwrap();
        a_t = k2.apply_adjoint(&a_t).unwrap();
    }
    assert!((inner(a.op(), rho_t.op()) - inner(a_t.op(), rho.op())).abs() < 1e-12);
}

#[test]
fn adjoint_identity_on_random_inputs() {
    let mut r = rng(9);
    for _ in 0..5 {
        let ops = random_ops(&mut r, 8, 2);
        let rho = random_density(&mut r, 8);
        let a = random_observable(&mut r, 8);
        for scheme in SCHEMES {
            let k = KrausMap::new(&ops, 0.05, scheme).unwrap();
            let lhs = inner(k.apply_adjoint(&a).unwrap().op(), rho.op());
            let rhs = inner(a.op(), k.apply(&rho).unwrap().op());
            assert!((lhs - rhs).abs() <= 1e-12);
            let id = pauli_string(&[], &[], 3).unwrap();
            let kid = k.apply_adjoint(&id).unwrap();
            assert!(cmax_diff(kid.op(), &identity(8)) <= 2.0 * k.tp_defect().unwrap() + 1e-14);
        }
    }
}

#[test]
fn dephasing_matches_analytic_decay() {
    let lambda = 0.5;
    let exact = (-2.0 * lambda * 1.0f64).exp();
    let run = |scheme: Scheme, dt: f64| {
        let k = KrausMap::new(&dephasing(lambda), dt, scheme).unwrap();
        let steps = (1.0 / dt).round() as usize;
        let y = evolve_expectations(&k, &plus_state(), &[x_obs()], 1, steps).unwrap();
        (y[[0, 0]] - exact).abs() / exact
    };
    assert!(run(Scheme::First, 1e-3) <= 2e-3);
    let e2 = run(Scheme::Second, 1e-2);
    assert!(e2 <= 1e-3);
    assert!(run(Scheme::First, 1e-2) > 50.0 * e2);
}

#[test]
fn simplified_and_full_maps_differ_at_third_order() {
    let ops = chain_model(2, 5);
    let mut r = rng(10);
    let rho = random_density(&mut r, 4);
    let diff = |dt: f64| {
        let full = kraus_second_order(&ops, dt, false).unwrap().apply_raw(rho.op());
        let simp = kraus_second_order(&ops, dt, true).unwrap().apply_raw(rho.op());
        cnorm(&(&full - &simp))
    };
    let ratio = diff(1e-2) / diff(5e-3);
    assert!((6.0..10.0).contains(&ratio), "{ratio}");
}

#[test]
fn measurement_times_and_records() {
    let ops = chain_model(1, 1);
    let k = KrausMap::new(&ops, 0.01, Scheme::Second).unwrap();
    let traj = evolve_trajectory(&k, &DensityMatrix::all_up(1), 100, 10).unwrap();
    assert_eq!(traj.len(), 11);
    for (i, t) in traj.times.iter().enumerate() {
        assert!((t - 0.1 * i as f64).abs() < 1e-12);
    }
    let obs = observable_basis(BasisKind::OneLocal, 1).unwrap();
    let y = evolve_expectations(&k, &DensityMatrix::all_up(1), &obs, 10, 10).unwrap();
    for n in 0..10 {
        for (kk, a) in obs.iter().enumerate() {
            assert_eq!(y[[kk, n]], a.trace_with(traj.states[n + 1].op()).re);
        }
    }
    assert!(evolve_expectations(&k, &DensityMatrix::all_up(1), &obs, 0, 10).is_err());
    assert!(evolve_trajectory(&k, &DensityMatrix::all_up(2), 3, 1).is_err());
}

fn max_error_ratios(seed: u64, dts: &[f64], scheme: Scheme) -> Vec<f64> {
    // Max over one-local expectations at t = 0.04, 0.08, ..., 1.0 against a fine reference.
    let ops = chain_model(2, seed);
    let obs = observable_basis(BasisKind::OneLocal, 2).unwrap();
    let rho0 = DensityMatrix::all_up(2);
    let series = |scheme: Scheme, dt: f64| {
        let k = KrausMap::new(&ops, dt, scheme).unwrap();
        evolve_expectations(&k, &rho0, &obs, 25, (0.04 / dt).round() as usize).unwrap()
    };
    let reference = series(Scheme::Second, 1e-4);
    let e: Vec<f64> =
        dts.iter().map(|&dt| (&series(scheme, dt) - &reference).iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
    e.windows(2).map(|w| w[0] / w[1]).collect()
}

#[test]
fn second_order_global_convergence() {
    for seed in [1, 2, 3] {
        for ratio in max_error_ratios(seed, &[4e-2, 2e-2, 1e-2], Scheme::Second) {
            assert!((3.2..=4.8).contains(&ratio), "seed {seed}: {ratio}");
        }
    }
}

#[test]
fn first_order_rate_approaches_one() {
    let ratios = max_error_ratios(1, &[4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3], Scheme::First);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    for &ratio in &ratios[2..] {
        assert!((1.7..=2.4).contains(&ratio), "{ratios:?}");
    }
}

#[test]
fn ehrenfest_examples() {
    // Conserved quantity.
    let ops = LindbladOperators::new(PauliAxis::Z.matrix(), vec![]).unwrap();
    let k = KrausMap::new(&ops, 0.01, Scheme::Second).unwrap();
    let mut r = rng(11);
    let traj = evolve_trajectory(&k, &random_density(&mut r, 2), 50, 1).unwrap();
    let z = Observable::new(PauliAxis::Z.matrix(), "z").unwrap();
    assert!(ehrenfest_residual(&ops, &traj, &z).unwrap() <= 1e-8);

    let short = evolve_trajectory(&k, &DensityMatrix::all_up(1), 1, 1).unwrap();
    assert!(ehrenfest_residual(&ops, &short, &z).is_err());

    // Dephasing and the six-spin model both show O(dt²) residuals.
    let deph = dephasing(0.4);
    let res = |o: &LindbladOperators, rho0: &DensityMatrix, a: &Observable, dt: f64| {
        let k = KrausMap::new(o, dt, Scheme::Second).unwrap();
        let steps = (0.5 / dt).round() as usize;
        ehrenfest_residual(o, &evolve_trajectory(&k, rho0, steps, 1).unwrap(), a).unwrap()
    };
    let ratio = res(&deph, &plus_state(), &x_obs(), 2e-3) / res(&deph, &plus_state(), &x_obs(), 1e-3);
    assert!((3.0..5.0).contains(&ratio), "{ratio}");

    let six = chain_model(6, 1);
    let y2 = pauli_string(&[1], &[PauliAxis::Y], 6).unwrap();
    let up = DensityMatrix::all_up(6);
    let ratio = res(&six, &up, &y2, 2e-3) / res(&six, &up, &y2, 1e-3);
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
}

#[test]
fn trace_renormalization_is_opt_in() {
    let ops = chain_model(2, 8);
    let k = KrausMap::new(&ops, 0.2, Scheme::First).unwrap();
    let kn = KrausMap::new(&ops, 0.2, Scheme::First).unwrap().with_trace_renormalization(true);
    let mut r = rng(12);
    let rho = random_density(&mut r, 4);
    let plain = k.apply(&rho).unwrap();
    assert!((plain.trace() - 1.0).abs() > 1e-6);
    assert!((trace(kn.apply(&rho).unwrap().op()).re - 1.0).abs() < 1e-14);
}
