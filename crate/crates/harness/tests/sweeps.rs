use onoff_harness::{run_sweep, ExperimentConfig, StateConfig, SweepAxis};

fn base() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::with_state(StateConfig::Squeezed {
        mean_photons: 1.0,
        squeeze_fraction: 0.75,
        relative_phase: 0.0,
    });
    cfg.name = Some("base".into());
    cfg.truncation = 10;
    cfg.grid.count = 20;
    cfg.shots = 10_000;
    cfg.iterations = 300;
    cfg
}

#[test]
fn reordering_values_does_not_change_members() {
    for (axis, values) in [
        (SweepAxis::Zeta, vec![0.0, 0.25, 0.5, 0.75, 1.0]),
        (SweepAxis::N, vec![10.0, 20.0, 30.0]),
        (SweepAxis::Seed, vec![3.0, 1.0, 2.0]),
        (SweepAxis::EtaMax, vec![0.5, 0.7, 0.99]),
    ] {
        let forward = run_sweep(&base(), axis, &values).unwrap();
        let mut reversed_values = values.clone();
        reversed_values.reverse();
        let mut backward = run_sweep(&base(), axis, &reversed_values).unwrap();
        backward.reverse();
        assert_eq!(forward.len(), values.len());
        for (a, b) in forward.iter().zip(&backward) {
            assert_eq!(a.to_json(), b.to_json(), "{axis}");
        }
    }
}

#[test]
fn zeta_sweep_produces_one_fidelity_curve_per_value() {
    let values = [0.0, 0.25, 0.5, 0.75, 1.0];
    let reports = run_sweep(&base(), SweepAxis::Zeta, &values).unwrap();
    for (r, z) in reports.iter().zip(values) {
        let em = r.em.as_ref().unwrap();
        assert!(em.trace.len() > 2);
        assert!(em.trace.iter().all(|t| t.fidelity.is_some()));
        assert!(r
            .config
            .name
            .as_deref()
            .unwrap()
            .contains(&format!("zeta={z}")));
    }
    // members draw independent data
    assert_ne!(reports[0].seed, reports[1].seed);
}

#[test]
fn seed_sweep_spreads_results() {
    let reports = run_sweep(&base(), SweepAxis::Seed, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    let seeds: Vec<u64> = reports.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![1, 2, 3, 4]);
    let f: Vec<f64> = reports
        .iter()
        .map(|r| r.final_fidelity().unwrap())
        .collect();
    assert!(f.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn iterations_and_shots_axes() {
    let r = run_sweep(&base(), SweepAxis::Iterations, &[10.0, 20.0]).unwrap();
    assert_eq!(r[1].em.as_ref().unwrap().iterations_run, 20);
    let r = run_sweep(&base(), SweepAxis::Shots, &[100.0]).unwrap();
    assert!(r[0].shots.iter().all(|&s| s == 100));
}
