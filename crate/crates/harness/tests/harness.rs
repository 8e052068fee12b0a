use std::process::Command;

use ndarray::Array2;
use oqlearn::config::{derive_seed, ExperimentConfig, NoiseModel};
use oqlearn::data::{
    apply_shot_noise, check_range, generate_data, parse_dataset, parse_pauli_label, render_dataset, true_parameters,
};
use oqlearn::experiment::{history_csv, initial_guess, run_experiment, run_to_dir};
use oqlearn::figures::{base_config, figure_configs, Figure};
use oqlearn::HarnessError;
use oqlearn_core::model::{LindbladModel, ModelSpec};
use oqlearn_core::operators::{observable_basis, pauli_string, BasisKind, DensityMatrix, PauliAxis};
use oqlearn_core::propagator::{evolve_expectations, KrausMap, Scheme};

fn small_config() -> ExperimentConfig {
    let mut c = base_config(ModelSpec::linear_dissipator(2), BasisKind::OneLocal, 0.05, 7);
    c.data.n_times = 4;
    c
}

const MINIMAL: &str = r#"{
  "schema_version": 1,
  "model": {"family": "pauli_jump", "n_qubits": 2},
  "seed": 3,
  "data": {"dt": 0.01, "delta_t": 0.1, "n_times": 5, "observables": "two_local", "n_shots": 1000},
  "fit": {"dt": 0.02},
  "initial_guess": {"distance": 0.1}
}"#;

#[test]
fn minimal_config_fills_defaults() {
    let c = ExperimentConfig::from_json(MINIMAL).unwrap();
    assert_eq!(c.data.scheme, Scheme::Second);
    assert_eq!(c.fit.scheme, Scheme::Second);
    assert_eq!(c.data.noise, NoiseModel::Bernoulli);
    assert_eq!(c.data.t_offset, 0.0);
    assert_eq!(c.lm.max_iter, 100);
    assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn config_errors_map_to_exit_code_two() {
    let missing = MINIMAL.replace("\"schema_version\": 1,", "");
    let e = ExperimentConfig::from_json(&missing).unwrap_err();
    assert!(matches!(e, HarnessError::Config(_)), "{e}");
    assert_eq!(e.exit_code(), 2);

    let future = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
    let e = ExperimentConfig::from_json(&future).unwrap_err();
    assert!(matches!(e, HarnessError::SchemaVersion { found: 2, expected: 1 }));
    assert_eq!(e.exit_code(), 2);

    let cases = [
        MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"colour\": 1"),
        MINIMAL.replace("\"delta_t\": 0.1", "\"delta_t\": 0.105"),
        MINIMAL.replace("\"fit\": {\"dt\": 0.02}", "\"fit\": {\"dt\": 0.03}"),
        MINIMAL.replace("\"n_times\": 5", "\"n_times\": 0"),
        MINIMAL.replace("\"n_times\": 5", "\"n_times\": 5, \"t_offset\": 0.015"),
        MINIMAL.replace("\"distance\": 0.1", "\"distance\": -1"),
        MINIMAL.replace("\"n_qubits\": 2", "\"n_qubits\": 0"),
    ];
    for text in cases {
        let e = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(matches!(e, HarnessError::Config(_)), "{e}");
        assert_eq!(e.exit_code(), 2);
    }
    let e = ExperimentConfig::from_json("{ not json").unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn seeds_derive_from_master_unless_overridden() {
    let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
    let s = c.seeds();
    let all = [s.true_model, s.noise, s.initial_guess, s.sse];
    for (i, a) in all.iter().enumerate() {
        assert_eq!(*a, derive_seed(3, i as u64 + 1));
        for b in &all[i + 1..] {
            assert_ne!(a, b);
        }
    }
    c.data.noise_seed = Some(99);
    c.true_model_seed = Some(5);
    assert_eq!(c.seeds().noise, 99);
    assert_eq!(c.seeds().true_model, 5);
    assert_eq!(c.seeds().initial_guess, s.initial_guess);
}

#[test]
fn exact_data_equal_integrator_output() {
    let c = small_config();
    let data = generate_data(&c).unwrap();
    let truth = true_parameters(&c);
    let ops = LindbladModel::new(c.model).unwrap().operators(&truth).unwrap();
    let k = KrausMap::new(&ops, 0.01, Scheme::Second).unwrap();
    let obs = observable_basis(BasisKind::OneLocal, 2).unwrap();
    let y = evolve_expectations(&k, &DensityMatrix::all_up(2), &obs, 4, 10).unwrap();
    assert_eq!(data.dataset.values, y);
    assert_eq!(data.exact, y);
    assert_eq!(data.dataset.seed, None);
}

#[test]
fn eigenstate_gives_noiseless_bernoulli_estimate() {
    let obs = vec![pauli_string(&[0], &[PauliAxis::Z], 1).unwrap(), pauli_string(&[0], &[PauliAxis::X], 1).unwrap()];
    let exact = Array2::from_shape_vec((2, 3), vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0]).unwrap();
    for n_s in [1, 7, 1000] {
        assert_eq!(apply_shot_noise(&exact, &obs, n_s, NoiseModel::Bernoulli, 3), exact);
    }
}

#[test]
fn identity_rows_stay_exact_and_estimates_stay_in_range() {
    let obs = observable_basis(BasisKind::OneLocal, 1).unwrap();
    let exact = Array2::from_shape_vec((4, 2), vec![1.0, 1.0, 0.3, -0.2, 0.0, 0.9, -0.5, 0.1]).unwrap();
    let noisy = apply_shot_noise(&exact, &obs, 50, NoiseModel::Bernoulli, 4);
    assert_eq!(noisy.row(0), exact.row(0));
    for v in noisy.iter() {
        assert!(v.abs() <= 1.0);
        // Means of 50 outcomes ±1 are multiples of 1/25.
        assert!(((v * 25.0).round() - v * 25.0).abs() < 1e-9);
    }
    assert_eq!(noisy, apply_shot_noise(&exact, &obs, 50, NoiseModel::Bernoulli, 4));
    assert_ne!(noisy, apply_shot_noise(&exact, &obs, 50, NoiseModel::Bernoulli, 5));
}

#[test]
fn bernoulli_deviations_respect_hoeffding_tail() {
    // Outcomes lie in [-1, 1], so P(|ŷ − y| ≥ ε) ≤ 2 exp(−N_S ε² / 2).
    let obs = vec![pauli_string(&[0], &[PauliAxis::Z], 1).unwrap()];
    let y = 0.3;
    let exact = Array2::from_elem((1, 1), y);
    let n_s = 100u64;
    let draws: Vec<f64> =
        (0..1000).map(|s| apply_shot_noise(&exact, &obs, n_s, NoiseModel::Bernoulli, s)[[0, 0]]).collect();
    for eps in [0.1, 0.2, 0.3] {
        let freq = draws.iter().filter(|v| (*v - y).abs() >= eps).count() as f64 / 1000.0;
        let bound = 2.0 * (-(n_s as f64) * eps * eps / 2.0).exp();
        assert!(freq <= bound, "ε={eps}: {freq} > {bound}");
    }
    let mean = draws.iter().sum::<f64>() / 1000.0;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0;
    let expected = (1.0 - y * y) / n_s as f64;
    assert!((mean - y).abs() < 4.0 * (expected / 1000.0).sqrt());
    assert!((var / expected - 1.0).abs() < 0.15, "{var} vs {expected}");
}

#[test]
fn gaussian_noise_has_binomial_variance() {
    let obs = vec![pauli_string(&[0], &[PauliAxis::Z], 1).unwrap()];
    let y = -0.6;
    let exact = Array2::from_elem((1, 2000), y);
    let noisy = apply_shot_noise(&exact, &obs, 400, NoiseModel::Gaussian, 8);
    let var = noisy.iter().map(|v| (v - y).powi(2)).sum::<f64>() / 2000.0;
    let expected = (1.0 - y * y) / 400.0;
    assert!((var / expected - 1.0).abs() < 0.1, "{var} vs {expected}");
}

#[test]
fn range_check_uses_trace_normalized_values() {
    let obs = vec![pauli_string(&[0], &[PauliAxis::Z], 1).unwrap()];
    let ok = Array2::from_elem((1, 2), 1.00002);
    check_range(&ok, &obs, &[1.00002, 1.00003]).unwrap();
    let bad = Array2::from_elem((1, 2), 1.001);
    let e = check_range(&bad, &obs, &[1.0, 1.0]).unwrap_err();
    assert!(matches!(e, HarnessError::ExpectationOutOfRange { .. }));
    assert_eq!(e.exit_code(), 1);
    assert!(check_range(&Array2::from_elem((1, 1), f64::NAN), &obs, &[1.0]).is_err());
}

#[test]
fn dataset_file_round_trips_exactly() {
    let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
    c.data.t_offset = 0.3;
    let data = generate_data(&c).unwrap();
    assert_eq!(data.dataset.seed, Some(c.seeds().noise));
    let text = render_dataset(&c, &data.dataset).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("{\"format\":\"oqlearn-dataset\""));
    assert_eq!(lines.next(), Some("k,n,t,value"));
    assert!(lines.next().unwrap().starts_with("0,1,4e-1,"));
    let (header, ds) = parse_dataset(&text).unwrap();
    assert_eq!(header.config, c);
    assert_eq!(header.seeds, c.seeds());
    assert_eq!(ds.values, data.dataset.values);
    assert_eq!(ds.times(), data.dataset.times());
    for (a, b) in ds.observables.iter().zip(&data.dataset.observables) {
        assert_eq!(a.label(), b.label());
        assert_eq!(a.op(), b.op());
    }
    let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    assert!(matches!(parse_dataset(&truncated), Err(HarnessError::Dataset(_))));
    assert!(parse_dataset("").is_err());
}

#[test]
fn pauli_labels_parse() {
    assert_eq!(
        parse_pauli_label("x1z3", 3).unwrap().op(),
        pauli_string(&[0, 2], &[PauliAxis::X, PauliAxis::Z], 3).unwrap().op()
    );
    assert_eq!(parse_pauli_label("I", 2).unwrap().op(), pauli_string(&[], &[], 2).unwrap().op());
    assert_eq!(parse_pauli_label("y12", 12).unwrap().label(), "y12");
    for bad in ["", "x0", "x", "q1", "x1 ", "x4"] {
        assert!(parse_pauli_label(bad, 3).is_err(), "{bad:?}");
    }
}

#[test]
fn initial_guess_sits_at_requested_distance() {
    let truth = true_parameters(&small_config());
    let a = initial_guess(&truth, 0.3658, 12).unwrap();
    assert!((a.distance(&truth) - 0.3658).abs() < 1e-14);
    assert_eq!(a, initial_guess(&truth, 0.3658, 12).unwrap());
    assert_ne!(a, initial_guess(&truth, 0.3658, 13).unwrap());
    assert_eq!(initial_guess(&truth, 0.0, 1).unwrap(), truth);
}

#[test]
fn small_run_recovers_model_and_writes_reproducible_artifacts() {
    let c = small_config();
    let dir = tempfile::tempdir().unwrap();
    let o = run_to_dir(&c, None, &dir.path().join("a")).unwrap();
    assert!(o.final_rel_error() < 1e-8, "{}", o.final_rel_error());
    run_to_dir(&c, None, &dir.path().join("b")).unwrap();
    for f in ["dataset.csv", "history.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let history = std::fs::read_to_string(dir.path().join("a/history.csv")).unwrap();
    assert_eq!(history, history_csv(&o.history));
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("iter,phi,res_norm,nu,step_norm,accepted,rel_param_err"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[3], "", "no damping before the first step");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    for key in ["seeds", "dt_data", "dt_sim", "layout_schema_version", "config", "wall_time_s", "final_rel_error"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    assert!(summary["error"].is_null());
    assert_eq!(summary["n_params"], 3 * 2 + 9 + 2);

    // Fitting the file on disk repeats the in-memory run.
    let (_, ds) = oqlearn::data::read_dataset(&dir.path().join("a/dataset.csv")).unwrap();
    let again = run_to_dir(&c, Some((true_parameters(&c), ds)), &dir.path().join("c")).unwrap();
    assert_eq!(history_csv(&again.history), history_csv(&o.history));
    assert_eq!(again.theta_hat, o.theta_hat);
}

#[test]
fn failed_run_still_leaves_a_summary() {
    let c = small_config();
    let other = generate_data(&base_config(ModelSpec::linear_dissipator(1), BasisKind::OneLocal, 0.1, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_to_dir(&c, Some((true_parameters(&c), other.dataset)), dir.path()).unwrap_err();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["error"], err.to_string());
    assert!(summary["final_rel_error"].is_null());
}

#[test]
fn noisy_run_stays_at_noise_level() {
    let mut c = small_config();
    c.data.n_times = 10;
    c.data.observables = BasisKind::TwoLocal;
    c.data.n_shots = 10_000;
    let o = run_experiment(&c).unwrap();
    let e = o.final_rel_error();
    assert!(e > 1e-4 && e < 0.1, "{e}");
}

#[test]
fn canned_configs_match_reference_settings() {
    let fig2 = figure_configs(Figure::Fig2, 1);
    assert_eq!(fig2.len(), 2);
    let (_, c) = &fig2[0];
    assert_eq!(c.model.n_params(), 65);
    assert_eq!(c.data.observables.count(6), 19);
    assert_eq!(fig2[1].1.data.observables.count(6), 154);
    assert_eq!((c.data.delta_t, c.data.n_times, c.data.dt, c.fit.dt), (0.1, 10, 0.01, 0.01));
    assert_eq!(c.initial_guess.distance, 0.3658);
    let fig3 = &figure_configs(Figure::Fig3, 1)[0].1;
    assert_eq!((fig3.data.delta_t, fig3.data.n_times), (0.01, 100));
    let fig4 = &figure_configs(Figure::Fig4, 1)[0].1;
    assert_eq!(fig4.data.t_offset, 4.0);
    let fig6 = &figure_configs(Figure::Fig6, 1)[0].1;
    assert_eq!(fig6.data.observables.count(6), 12);
    assert_eq!(fig6.initial_guess.distance, 0.4529);
    for fig in [Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6] {
        for (_, c) in figure_configs(fig, 1) {
            c.validate().unwrap();
            // Same truth and the same starting point across figures of one family.
            assert_eq!(c.seeds(), fig2[0].1.seeds());
        }
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oqlearn"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, MINIMAL.replace("\"schema_version\": 1,", "")).unwrap();
    let status =
        bin().args(["generate-data", "--config"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    let status = bin().arg("simulate").arg("--out").arg(dir.path()).output().unwrap().status;
    assert_eq!(status.code(), Some(2), "missing --config");

    let good = dir.path().join("good.json");
    std::fs::write(&good, MINIMAL).unwrap();
    let out = dir.path().join("run");
    for cmd in ["simulate", "generate-data"] {
        let status = bin().arg(cmd).arg("--config").arg(&good).arg("--out").arg(&out).output().unwrap().status;
        assert!(status.success(), "{cmd}");
    }
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,observable,value\n0.00000000000000e0,I,1.00000000000000e0\n"));
    assert_eq!(traj.lines().count(), 1 + 16 * 6);

    let status = bin()
        .args(["learn", "--data"])
        .arg(out.join("dataset.csv"))
        .arg("--out")
        .arg(dir.path().join("fit"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("fit/summary.json").exists());

    let status = bin()
        .args(["verify", "--only", "adjoint,sse", "--threads", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(report.starts_with("check,value,lower,upper,pass\n"));
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn sse_command_matches_kraus_map_within_sampling_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sse.json");
    let text = MINIMAL.replace(
        "\"initial_guess\": {\"distance\": 0.1}",
        "\"initial_guess\": {\"distance\": 0.1}, \"sse\": {\"dt\": 0.01, \"steps\": 20, \"n_traj\": 4000}",
    );
    std::fs::write(&cfg, text).unwrap();
    let status = bin().arg("sse").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap().status;
    assert!(status.success());
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sse.json")).unwrap()).unwrap();
    assert_eq!(rep["n_traj"], 4000);
    for o in rep["observables"].as_array().unwrap() {
        let gap = (o["trajectory_mean"].as_f64().unwrap() - o["kraus"].as_f64().unwrap()).abs();
        // Pauli means of 4000 unit-bounded samples: 5 standard errors ≤ 0.08.
        assert!(gap < 0.08, "{}: {gap}", o["label"]);
    }
}
