//! Named experiments reproducing the published figure settings.
//!
//! Every preset uses `N = 50` efficiencies from `eta_min = 0.02`, truncation
//! `nbar = 20`, shots counted per efficiency and seed 1 unless stated.

use crate::config::{ExperimentConfig, FockTerm, StateConfig, SweepAxis, SweepSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
    pub sweep: Option<SweepSpec>,
}

fn coherent(mean_photons: f64) -> StateConfig {
    StateConfig::Coherent { mean_photons }
}

fn squeezed(mean_photons: f64, squeeze_fraction: f64) -> StateConfig {
    StateConfig::Squeezed {
        mean_photons,
        squeeze_fraction,
        relative_phase: 0.0,
    }
}

/// `sqrt(2/3)|2> + sqrt(1/3)|7>`.
fn unbalanced_superposition() -> StateConfig {
    StateConfig::FockSuperposition {
        terms: vec![
            FockTerm::amplitude(2, (2.0f64 / 3.0).sqrt()),
            FockTerm::amplitude(7, (1.0f64 / 3.0).sqrt()),
        ],
    }
}

fn experiment(
    name: &str,
    state: StateConfig,
    shots: u64,
    iterations: u64,
    eta_max: f64,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::with_state(state);
    cfg.name = Some(name.to_string());
    cfg.shots = shots;
    cfg.iterations = iterations;
    cfg.grid.eta_max = eta_max;
    cfg
}

fn entry(
    name: &'static str,
    description: &'static str,
    config: ExperimentConfig,
    sweep: Option<SweepSpec>,
) -> Preset {
    Preset {
        name,
        description,
        config,
        sweep,
    }
}

fn fluctuating(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.fluctuation = Some(2.0);
    cfg
}

/// All presets, in listing order.
pub fn all() -> Vec<Preset> {
    let fig4_left = experiment("fig4-left", squeezed(1.0, 0.75), 100_000, 1_000_000, 0.99);
    let fig4_right = experiment("fig4-right", squeezed(1.0, 0.75), 100_000, 1_000_000, 0.99);
    let fig5 = experiment("fig5", squeezed(1.5, 0.75), 100_000, 1_000_000, 0.99);
    let fig5_right = experiment(
        "fig5-right",
        squeezed(1.5, 0.75),
        1_000_000,
        1_000_000,
        0.99,
    );
    let seeds = Some(SweepSpec {
        axis: SweepAxis::Seed,
        values: (1..=10).map(f64::from).collect(),
    });
    vec![
        entry(
            "fig1a",
            "coherent <n>=5.2, n_x=1e5, n_it=1e4, eta_max=0.99",
            experiment("fig1a", coherent(5.2), 100_000, 10_000, 0.99),
            None,
        ),
        entry(
            "fig1b",
            "coherent <n>=5.2, n_x=1e5, n_it=1e4, eta_max=0.5",
            experiment("fig1b", coherent(5.2), 100_000, 10_000, 0.5),
            None,
        ),
        entry(
            "fig2a",
            "squeezed <n>=0.5 zeta=0.99, n_x=1e5, n_it=5e5, eta_max=0.99",
            experiment("fig2a", squeezed(0.5, 0.99), 100_000, 500_000, 0.99),
            None,
        ),
        entry(
            "fig2b",
            "squeezed <n>=0.5 zeta=0.99, n_x=1e5, n_it=5e5, eta_max=0.7",
            experiment("fig2b", squeezed(0.5, 0.99), 100_000, 500_000, 0.7),
            None,
        ),
        entry(
            "fig3a",
            "sqrt(2/3)|2> + sqrt(1/3)|7>, n_x=1e4, n_it=1e6, eta_max=0.99",
            experiment("fig3a", unbalanced_superposition(), 10_000, 1_000_000, 0.99),
            None,
        ),
        entry(
            "fig3b",
            "sqrt(2/3)|2> + sqrt(1/3)|7>, n_x=1e4, n_it=1e6, eta_max=0.5",
            experiment("fig3b", unbalanced_superposition(), 10_000, 1_000_000, 0.5),
            None,
        ),
        entry(
            "fig4-left",
            "squeezed <n>=1, n_it=1e6, sweep zeta over 0, 0.25, 0.5, 0.75, 1",
            fig4_left,
            Some(SweepSpec {
                axis: SweepAxis::Zeta,
                values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            }),
        ),
        entry(
            "fig4-right",
            "squeezed <n>=1 zeta=0.75, n_it=1e6, sweep N over 20, 30, 50, 70, 100",
            fig4_right,
            Some(SweepSpec {
                axis: SweepAxis::N,
                values: vec![20.0, 30.0, 50.0, 70.0, 100.0],
            }),
        ),
        entry(
            "fig5",
            "squeezed <n>=1.5 zeta=0.75, n_x=1e5, n_it=1e6, ten seeds",
            fig5,
            seeds.clone(),
        ),
        entry(
            "fig5-right",
            "squeezed <n>=1.5 zeta=0.75, n_x=1e6, n_it=1e6, ten seeds",
            fig5_right,
            seeds,
        ),
        entry(
            "fig6",
            "coherent <n>=5.2 with a=2 efficiency fluctuation, n_x=1e5, n_it=1e5, eta_max=0.99",
            fluctuating(experiment("fig6", coherent(5.2), 100_000, 100_000, 0.99)),
            None,
        ),
        entry(
            "fig6-a-prime",
            "coherent <n>=5.2 with a=2, n_x=1e5, n_it=1e5, eta_max=0.5",
            fluctuating(experiment(
                "fig6-a-prime",
                coherent(5.2),
                100_000,
                100_000,
                0.5,
            )),
            None,
        ),
        entry(
            "fig6-b",
            "squeezed <n>=0.5 zeta=0.99 with a=2, n_x=1e6, n_it=5e6, eta_max=0.99",
            fluctuating(experiment(
                "fig6-b",
                squeezed(0.5, 0.99),
                1_000_000,
                5_000_000,
                0.99,
            )),
            None,
        ),
        entry(
            "fig6-b-prime",
            "squeezed <n>=0.5 zeta=0.99 with a=2, n_x=1e6, n_it=5e6, eta_max=0.7",
            fluctuating(experiment(
                "fig6-b-prime",
                squeezed(0.5, 0.99),
                1_000_000,
                5_000_000,
                0.7,
            )),
            None,
        ),
    ]
}

pub fn names() -> Vec<&'static str> {
    all().into_iter().map(|p| p.name).collect()
}

pub fn preset(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}
