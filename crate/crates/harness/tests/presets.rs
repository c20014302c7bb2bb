//! Each preset expands to the published figure parameters.

use onoff_harness::config::FockTerm;
use onoff_harness::presets::{all, names, preset};
use onoff_harness::{ExperimentConfig, GridConfig, Method, ShotsMode, StateConfig, SweepAxis};

fn squeezed(mean_photons: f64, squeeze_fraction: f64) -> StateConfig {
    StateConfig::Squeezed {
        mean_photons,
        squeeze_fraction,
        relative_phase: 0.0,
    }
}

fn superposition() -> StateConfig {
    StateConfig::FockSuperposition {
        terms: vec![
            FockTerm::amplitude(2, (2.0f64 / 3.0).sqrt()),
            FockTerm::amplitude(7, (1.0f64 / 3.0).sqrt()),
        ],
    }
}

/// (state, shots, iterations, eta_max, fluctuation)
fn expect(
    name: &str,
    state: StateConfig,
    shots: u64,
    iterations: u64,
    eta_max: f64,
    a: Option<f64>,
) {
    let cfg: ExperimentConfig = preset(name).unwrap().config;
    assert_eq!(cfg.state, state, "{name}");
    assert_eq!(cfg.shots, shots, "{name}");
    assert_eq!(cfg.iterations, iterations, "{name}");
    assert_eq!(
        cfg.grid,
        GridConfig {
            eta_min: 0.02,
            eta_max,
            count: 50
        },
        "{name}"
    );
    assert_eq!(cfg.fluctuation, a, "{name}");
    assert_eq!(cfg.truncation, 20, "{name}");
    assert_eq!(cfg.shots_mode, ShotsMode::PerEta, "{name}");
    assert_eq!(cfg.methods, vec![Method::Em], "{name}");
    assert_eq!(cfg.seed, 1, "{name}");
    assert_eq!(cfg.name.as_deref(), Some(name));
    cfg.validate().unwrap();
}

#[test]
fn coherent_presets() {
    let c = StateConfig::Coherent { mean_photons: 5.2 };
    expect("fig1a", c.clone(), 100_000, 10_000, 0.99, None);
    expect("fig1b", c.clone(), 100_000, 10_000, 0.5, None);
    expect("fig6", c.clone(), 100_000, 100_000, 0.99, Some(2.0));
    expect("fig6-a-prime", c, 100_000, 100_000, 0.5, Some(2.0));
}

#[test]
fn squeezed_presets() {
    expect("fig2a", squeezed(0.5, 0.99), 100_000, 500_000, 0.99, None);
    expect("fig2b", squeezed(0.5, 0.99), 100_000, 500_000, 0.7, None);
    expect(
        "fig6-b",
        squeezed(0.5, 0.99),
        1_000_000,
        5_000_000,
        0.99,
        Some(2.0),
    );
    expect(
        "fig6-b-prime",
        squeezed(0.5, 0.99),
        1_000_000,
        5_000_000,
        0.7,
        Some(2.0),
    );
}

#[test]
fn superposition_presets() {
    expect("fig3a", superposition(), 10_000, 1_000_000, 0.99, None);
    expect("fig3b", superposition(), 10_000, 1_000_000, 0.5, None);
}

#[test]
fn sweep_presets() {
    let p = preset("fig4-left").unwrap();
    expect(
        "fig4-left",
        squeezed(1.0, 0.75),
        100_000,
        1_000_000,
        0.99,
        None,
    );
    let s = p.sweep.unwrap();
    assert_eq!(s.axis, SweepAxis::Zeta);
    assert_eq!(s.values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);

    let p = preset("fig4-right").unwrap();
    expect(
        "fig4-right",
        squeezed(1.0, 0.75),
        100_000,
        1_000_000,
        0.99,
        None,
    );
    let s = p.sweep.unwrap();
    assert_eq!(s.axis, SweepAxis::N);
    assert_eq!(s.values, vec![20.0, 30.0, 50.0, 70.0, 100.0]);

    for (name, shots) in [("fig5", 100_000), ("fig5-right", 1_000_000)] {
        expect(name, squeezed(1.5, 0.75), shots, 1_000_000, 0.99, None);
        let s = preset(name).unwrap().sweep.unwrap();
        assert_eq!(s.axis, SweepAxis::Seed);
        assert_eq!(s.values, (1..=10).map(f64::from).collect::<Vec<_>>());
    }
}

#[test]
fn required_presets_exist_and_names_are_unique() {
    let n = names();
    for required in [
        "fig1a",
        "fig1b",
        "fig2a",
        "fig2b",
        "fig3a",
        "fig3b",
        "fig4-left",
        "fig4-right",
        "fig5",
        "fig6",
    ] {
        assert!(n.contains(&required), "{required}");
    }
    let mut sorted = n.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), n.len());
    assert!(all().iter().all(|p| !p.description.is_empty()));
}

#[test]
fn sweep_members_of_presets_validate() {
    for p in all() {
        if let Some(s) = &p.sweep {
            let members = onoff_harness::sweep_members(&p.config, s.axis, &s.values).unwrap();
            assert_eq!(members.len(), s.values.len());
        }
    }
}

#[test]
fn documented_examples_load() {
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.md"))
        .unwrap();
    let blocks: Vec<&str> = doc
        .split("```toml\n")
        .skip(1)
        .map(|b| b.split("```").next().unwrap())
        .collect();
    assert!(blocks.len() >= 3);
    for b in blocks {
        onoff_harness::load_document(b).unwrap_or_else(|e| panic!("{e}\n{b}"));
    }
}
