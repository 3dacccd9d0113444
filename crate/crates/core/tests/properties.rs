//! Property checks across modules.

use std::f64::consts::PI;

use geophase::lindblad::{dephasing_qubit_analytic, DephasingQubitParams, TimeGrid};
use geophase::numkernel::{angular_distance, max_abs, outer, partial_trace_ancilla, wrap_phase};
use geophase::phase::{apply_gauge, geometric_phase, GaugeTransform};
use geophase::purification::purify_path;
use geophase::scenario::{read_state_path, run_scenario, write_state_path, ScenarioConfig, ScenarioKind};
use geophase::spectral::decompose_path;
use proptest::prelude::*;

fn path(lam: f64, theta0: f64, steps: usize) -> geophase::spectral::SpectralPath {
    let p = DephasingQubitParams::new(1.0, lam, theta0).unwrap();
    dephasing_qubit_analytic(&p, &TimeGrid::new(p.tau, steps).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wrap_phase_is_idempotent(x in -1e3f64..1e3) {
        let y = wrap_phase(x);
        prop_assert!(y > -PI && y <= PI);
        prop_assert_eq!(wrap_phase(y), y);
        let turns = (x - y) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn gamma_ignores_smooth_gauges(
        lam in 0.0f64..0.5,
        theta0 in 0.05f64..1.5,
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        freq in 0.0f64..4.0,
    ) {
        let sp = path(lam, theta0, 120);
        let g = GaugeTransform::from_fn(sp.times(), 2, |k, t| if k == 0 { a * (freq * t).sin() } else { b * t * t });
        let moved = apply_gauge(&sp, &g).unwrap();
        let (x, y) = (geometric_phase(&sp).unwrap(), geometric_phase(&moved).unwrap());
        prop_assert!(angular_distance(x.gamma, y.gamma) < 1e-12);
        prop_assert!((x.parallel_visibility - y.parallel_visibility).abs() < 1e-12);
    }

    #[test]
    fn purification_traces_back(lam in 0.0f64..1.0, theta0 in 0.0f64..PI, steps in 2usize..40) {
        let sp = path(lam, theta0, steps);
        let psi = purify_path(&sp).unwrap();
        for j in 0..sp.len() {
            let rho = partial_trace_ancilla(&outer(psi.state(j)), 2, 2).unwrap();
            prop_assert!(max_abs(&(rho - sp.reconstruct(j))) < 1e-12);
        }
    }

    #[test]
    fn visibility_is_bounded(lam in 0.0f64..2.0, theta0 in 0.0f64..PI) {
        let r = geometric_phase(&path(lam, theta0, 60));
        if let Ok(r) = r {
            prop_assert!(r.visibility <= 1.0 + 1e-12 && r.parallel_visibility <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn visibility_decreases_with_dephasing() {
    let mut last = f64::INFINITY;
    for i in 0..12 {
        let nu = geometric_phase(&path(0.05 * i as f64, PI / 3.0, 400)).unwrap().visibility;
        assert!(nu <= last + 1e-12, "ν rose at Λ = {}", 0.05 * i as f64);
        last = nu;
    }
}

#[test]
fn exported_path_reimports_to_the_same_phase() {
    let cfg = ScenarioConfig { steps: Some(400), ..ScenarioConfig::new(ScenarioKind::Dephasing) };
    let prepared = geophase::scenario::prepare(&cfg).unwrap();
    let states = prepared.state_path().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("path.txt");
    write_state_path(std::fs::File::create(&file).unwrap(), &states).unwrap();

    let back = read_state_path(std::io::BufReader::new(std::fs::File::open(&file).unwrap())).unwrap();
    assert_eq!(back, states);
    let (sp, _) = decompose_path(&back, 1e-8).unwrap();
    let direct = run_scenario(&cfg).unwrap();
    assert_eq!(geometric_phase(&sp).unwrap().gamma, direct.gamma);

    let imported = ScenarioConfig { path_file: Some(file), ..ScenarioConfig::new(ScenarioKind::ImportedPath) };
    let record = run_scenario(&imported).unwrap();
    assert_eq!(record.gamma, direct.gamma);
    assert!(record.diagnostics.convergence_estimate.unwrap() < 1e-4);
}

#[test]
fn integrated_and_analytic_paths_agree() {
    for theta0 in [0.3, PI / 3.0, 1.2] {
        let base =
            ScenarioConfig { theta0: Some(theta0), steps: Some(4000), ..ScenarioConfig::new(ScenarioKind::Dephasing) };
        let analytic = ScenarioConfig { source: geophase::scenario::PathSource::Analytic, ..base.clone() };
        let a = run_scenario(&base).unwrap();
        let b = run_scenario(&analytic).unwrap();
        assert!(angular_distance(a.gamma, b.gamma) < 1e-9);
    }
}
