//! The numerical pipeline runs in single precision too.

use onoff_core::detection::{sample_dataset, EfficiencyGrid};
use onoff_core::{
    coherent_distribution, condition_number, fidelity, invert_square, reconstruct,
    squeezed_distribution, EmConfig, Error,
};

#[test]
fn f32_reconstruction_of_a_coherent_state() {
    let grid = EfficiencyGrid::<f32>::uniform(0.02, 0.99, 30).unwrap();
    let truth = coherent_distribution(2.0_f32, 12).unwrap();
    let ds = sample_dataset(&truth, &grid, 50_000, 4, None).unwrap();
    let r = reconstruct(&ds, &grid, 12, &EmConfig::new(3000), Some(&truth)).unwrap();
    let g = fidelity(&r.estimate, &truth).unwrap();
    assert!(g > 0.98, "f32 fidelity {g}");
    assert!(r.estimate.probs().iter().all(|x| *x >= 0.0));
}

#[test]
fn f32_squeezed_state_is_even() {
    let d = squeezed_distribution(0.5_f32, 1.0, 0.0, 20).unwrap();
    let wide = squeezed_distribution(0.5_f64, 1.0, 0.0, 20).unwrap();
    assert!(d.probs().iter().skip(1).step_by(2).all(|x| *x < 1e-6));
    for (a, b) in d.probs().iter().zip(wide.probs()) {
        assert!((*a as f64 - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn f32_inversion_and_conditioning() {
    let rho = invert_square(&[0.86_f32, 0.58], &[0.2, 0.6]).unwrap();
    assert!((rho[0] - 0.3).abs() < 1e-5 && (rho[1] - 0.7).abs() < 1e-5);
    let grid = EfficiencyGrid::<f32>::uniform(0.02, 0.99, 50).unwrap();
    assert!(condition_number(grid.etas(), 4).unwrap() > 50.0);
    // single precision cannot resolve nbar = 20 on this grid
    let f = vec![0.5_f32; 50];
    let err = onoff_core::invert_least_squares(&f, grid.etas(), 20).unwrap_err();
    assert!(matches!(err, Error::RankDeficient { .. }));
}
