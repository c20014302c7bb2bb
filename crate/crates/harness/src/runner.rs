//! generate -> sample -> reconstruct -> report.

use std::time::Instant;

use log::{info, warn};
use onoff_core::{
    condition_number, invert_least_squares, invert_square, nonphysical_entries, reconstruct,
    sample_dataset_with_shots, EmConfig, PhotonDistribution,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method, StateConfig, SweepAxis};
use crate::error::{stage, validation, HarnessError, Result};
use crate::report::{fmt_f64, EmReport, InversionReport, RunReport, TracePoint};

/// Seconds per EM multiply-add over one `(nu, n)` cell, measured on a
/// desktop core with margin.
const EM_SECONDS_PER_CELL: f64 = 2.5e-9;
/// Seconds per simulated shot when every shot draws its own efficiency.
const FLUCTUATING_SECONDS_PER_SHOT: f64 = 6e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Run even if the estimated time exceeds `budget_seconds`.
    pub override_budget: bool,
}

/// Rough single-core wall time of `run_experiment(cfg)`.
pub fn estimate_seconds(cfg: &ExperimentConfig) -> f64 {
    let cells = (cfg.grid.count * cfg.truncation) as f64;
    let em = if cfg.has_method(Method::Em) {
        cfg.iterations as f64 * cells * EM_SECONDS_PER_CELL
    } else {
        0.0
    };
    let sampling = if cfg.fluctuation.is_some() {
        let total: u64 = cfg.shots_per_efficiency().iter().sum();
        total as f64 * FLUCTUATING_SECONDS_PER_SHOT / rayon::current_num_threads() as f64
    } else {
        0.0
    };
    em + sampling
}

fn check_budget(estimated_seconds: f64, budget_seconds: f64, options: RunOptions) -> Result<()> {
    if estimated_seconds > budget_seconds && !options.override_budget {
        return Err(HarnessError::Budget {
            estimated_seconds,
            budget_seconds,
        });
    }
    Ok(())
}

/// [`run_experiment_with`] under the configured budget.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_with(cfg, RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, options: RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    check_budget(estimate_seconds(cfg), cfg.budget_seconds, options)?;
    execute(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let label = cfg.name.as_deref().unwrap_or("run");
    let mut warnings = Vec::new();

    let truth = cfg
        .state
        .to_spec()?
        .distribution(cfg.truncation)
        .map_err(stage("state generation"))?;
    let captured_mass = truth.captured_mass();
    if !truth.is_truncation_adequate() {
        let w = format!(
            "truncation {} keeps only {:.4} of the state's probability",
            cfg.truncation, captured_mass
        );
        warn!("{label}: {w}");
        warnings.push(w);
    }

    let grid = cfg.efficiency_grid()?;
    let shots = cfg.shots_per_efficiency();
    let dataset = sample_dataset_with_shots(
        &truth,
        &grid,
        &shots,
        cfg.seed,
        grid.fluctuation_half_width(),
    )
    .map_err(stage("sampling"))?;
    let frequencies = dataset.frequencies::<f64>();

    let em = if cfg.has_method(Method::Em) {
        Some(run_em(cfg, &dataset, &grid, &truth)?)
    } else {
        None
    };

    let inversion = if cfg.has_method(Method::Inversion) {
        let idx = grid
            .spread_indices(cfg.truncation)
            .map_err(stage("inversion"))?;
        let etas: Vec<f64> = idx.iter().map(|&i| grid.etas()[i]).collect();
        let f: Vec<f64> = idx.iter().map(|&i| frequencies[i]).collect();
        let estimate = invert_square(&f, &etas).map_err(stage("inversion"))?;
        Some(InversionReport {
            nonphysical: nonphysical_entries(&estimate),
            condition_number: condition_number(&etas, cfg.truncation)
                .map_err(stage("inversion"))?,
            efficiencies: idx,
            estimate,
        })
    } else {
        None
    };

    let least_squares = if cfg.has_method(Method::LeastSquares) {
        let estimate = invert_least_squares(&frequencies, grid.etas(), cfg.truncation)
            .map_err(stage("least squares"))?;
        Some(InversionReport {
            nonphysical: nonphysical_entries(&estimate),
            condition_number: condition_number(grid.etas(), cfg.truncation)
                .map_err(stage("least squares"))?,
            efficiencies: (0..grid.len()).collect(),
            estimate,
        })
    } else {
        None
    };

    for (name, inv) in [("inversion", &inversion), ("least_squares", &least_squares)] {
        if let Some(inv) = inv {
            if !inv.nonphysical.is_empty() {
                info!(
                    "{label}: {name} gave {} nonphysical entries (max |rho| = {})",
                    inv.nonphysical.len(),
                    fmt_f64(inv.max_abs())
                );
            }
        }
    }

    let report = RunReport {
        config: cfg.clone(),
        seed: cfg.seed,
        ground_truth: truth.into_vec(),
        captured_mass,
        efficiencies: grid.etas().to_vec(),
        shots: dataset.shots().to_vec(),
        no_clicks: dataset.no_clicks().to_vec(),
        em,
        inversion,
        least_squares,
        warnings,
        wall_time_seconds: Some(start.elapsed().as_secs_f64()),
    };
    info!(
        "{label}: done in {:.2} s, fidelity {}",
        report.wall_time_seconds.unwrap_or_default(),
        report
            .final_fidelity()
            .map(fmt_f64)
            .unwrap_or_else(|| "-".into())
    );
    Ok(report)
}

fn run_em(
    cfg: &ExperimentConfig,
    dataset: &onoff_core::OnOffDataset,
    grid: &onoff_core::EfficiencyGrid<f64>,
    truth: &PhotonDistribution<f64>,
) -> Result<EmReport> {
    let mut em_cfg = EmConfig::new(cfg.iterations as usize);
    em_cfg.normalization = cfg.em.normalization.into();
    em_cfg.renormalize_each_step = cfg.em.renormalize;
    em_cfg.trace_stride = cfg.trace_stride();
    let result = reconstruct(dataset, grid, cfg.truncation, &em_cfg, Some(truth))
        .map_err(stage("reconstruction"))?;
    let last = *result.final_row();
    Ok(EmReport {
        normalization: cfg.em.normalization,
        renormalize: cfg.em.renormalize,
        iterations_run: result.iterations_run as u64,
        trace: result
            .trace
            .iter()
            .map(|r| TracePoint {
                iteration: r.iteration as u64,
                total_error: r.total_error,
                empirical_error: r.empirical_error,
                normalization_drift: r.normalization_drift,
                fidelity: r.fidelity,
            })
            .collect(),
        estimate: result.estimate.into_vec(),
        error_bars: result.error_bars,
        fisher_information: result.fisher_information,
        final_fidelity: last.fidelity,
        final_total_error: last.total_error,
        final_empirical_error: last.empirical_error,
        final_drift: last.normalization_drift,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of a sweep member. It depends on the base seed and the swept value
/// only, never on the value's position in the list.
pub fn member_seed(base_seed: u64, axis: SweepAxis, value: f64) -> u64 {
    match axis {
        SweepAxis::Seed => value as u64,
        _ => splitmix64(base_seed ^ splitmix64(value.to_bits())),
    }
}

fn integral(axis: SweepAxis, value: f64) -> Result<u64> {
    if value.is_finite() && value >= 0.0 && value.fract() == 0.0 && value < u64::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(validation(format!(
            "sweep axis {axis} needs non-negative integers, got {value}"
        )))
    }
}

/// The validated member configs of a sweep, in the order of `values`.
pub fn sweep_members(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<ExperimentConfig>> {
    if values.is_empty() {
        return Err(validation("sweep.values must not be empty"));
    }
    let mut members = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if values[..i].iter().any(|w| w.to_bits() == v.to_bits()) {
            return Err(validation(format!("sweep.values lists {v} twice")));
        }
        let mut cfg = base.clone();
        if axis.is_integral() {
            integral(axis, v)?;
        }
        match axis {
            SweepAxis::N => cfg.grid.count = v as usize,
            SweepAxis::Shots => cfg.shots = v as u64,
            SweepAxis::Iterations => cfg.iterations = v as u64,
            SweepAxis::Seed => {}
            SweepAxis::EtaMax => cfg.grid.eta_max = v,
            SweepAxis::Zeta => match &mut cfg.state {
                StateConfig::Squeezed {
                    squeeze_fraction, ..
                } => *squeeze_fraction = v,
                _ => return Err(validation("sweep axis zeta needs a squeezed state")),
            },
        }
        cfg.seed = member_seed(base.seed, axis, v);
        let base_name = base.name.as_deref().unwrap_or("run");
        cfg.name = Some(format!("{base_name}-{axis}={v}"));
        cfg.validate()
            .map_err(|e| validation(format!("sweep value {v}: {e}")))?;
        members.push(cfg);
    }
    Ok(members)
}

/// [`run_sweep_with`] under the configured budget.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<RunReport>> {
    run_sweep_with(base, axis, values, RunOptions::default())
}

/// One report per value, run in parallel. The budget applies to the whole
/// sweep, spread over the available threads.
pub fn run_sweep_with(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    options: RunOptions,
) -> Result<Vec<RunReport>> {
    let members = sweep_members(base, axis, values)?;
    let total: f64 = members.iter().map(estimate_seconds).sum();
    let lanes = rayon::current_num_threads().min(members.len()).max(1) as f64;
    check_budget(total / lanes, base.budget_seconds, options)?;
    members.par_iter().map(execute).collect()
}
