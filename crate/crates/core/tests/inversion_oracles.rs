//! Linear inversion checked against nalgebra's SVD and exact forward data.

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use onoff_core::detection::{off_probabilities, sample_dataset, EfficiencyGrid, ResponseMatrix};
use onoff_core::{
    coherent_distribution, condition_number, invert_least_squares, invert_square,
    PhotonDistribution, VandermondeSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> PhotonDistribution<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    PhotonDistribution::new(raw.into_iter().map(|x| x / s).collect()).unwrap()
}

fn vandermonde(etas: &[f64], order: usize) -> DMatrix<f64> {
    DMatrix::from_fn(etas.len(), order, |i, j| (1.0 - etas[i]).powi(j as i32))
}

fn svd_condition(etas: &[f64], order: usize) -> f64 {
    let sv = vandermonde(etas, order).singular_values();
    sv.max() / sv.min()
}

#[test]
fn square_roundtrip_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let nbar = 1 + case % 8;
        let etas: Vec<f64> = if nbar == 1 {
            vec![0.5]
        } else {
            EfficiencyGrid::uniform(0.02, 0.99, nbar)
                .unwrap()
                .etas()
                .to_vec()
        };
        let truth = random_distribution(&mut rng, nbar);
        let m = ResponseMatrix::from_etas(&etas, nbar).unwrap();
        let p = off_probabilities(&truth, &m).unwrap();
        let rho = invert_square(&p, &etas).unwrap();
        for n in 0..nbar {
            assert_abs_diff_eq!(rho[n], truth[n], epsilon = 1e-8);
        }
    }
}

#[test]
fn least_squares_equals_square_when_system_is_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for nbar in 1..=6 {
        let etas: Vec<f64> = if nbar == 1 {
            vec![0.3]
        } else {
            EfficiencyGrid::uniform(0.05, 0.95, nbar)
                .unwrap()
                .etas()
                .to_vec()
        };
        let truth = random_distribution(&mut rng, nbar);
        let m = ResponseMatrix::from_etas(&etas, nbar).unwrap();
        let p = off_probabilities(&truth, &m).unwrap();
        let sq = invert_square(&p, &etas).unwrap();
        let ls = invert_least_squares(&p, &etas, nbar).unwrap();
        for (a, b) in sq.iter().zip(&ls) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}

#[test]
fn least_squares_noiseless_roundtrip() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let truth = random_distribution(&mut rng, 5);
        let m = ResponseMatrix::new(&grid, 5).unwrap();
        let f = off_probabilities(&truth, &m).unwrap();
        let rho = invert_least_squares(&f, grid.etas(), 5).unwrap();
        for n in 0..5 {
            assert_abs_diff_eq!(rho[n], truth[n], epsilon = 1e-8);
        }
    }
}

#[test]
fn least_squares_matches_svd_solution_on_noisy_data() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let f: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
    let ours = invert_least_squares(&f, grid.etas(), 6).unwrap();
    let oracle = vandermonde(grid.etas(), 6)
        .svd(true, true)
        .solve(&DVector::from_vec(f.clone()), 1e-14)
        .unwrap();
    for n in 0..6 {
        assert_abs_diff_eq!(
            ours[n],
            oracle[n],
            epsilon = 1e-7 * oracle[n].abs().max(1.0)
        );
    }
}

#[test]
fn least_squares_residual_is_locally_optimal() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let f: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
    let nbar = 5;
    let rho = invert_least_squares(&f, grid.etas(), nbar).unwrap();
    let v = vandermonde(grid.etas(), nbar);
    let fvec = DVector::from_vec(f);
    let resid = |x: &DVector<f64>| (&v * x - &fvec).norm();
    let base = DVector::from_vec(rho);
    let r0 = resid(&base);
    for _ in 0..100 {
        let dir = DVector::from_fn(nbar, |_, _| rng.random::<f64>() - 0.5).normalize();
        let step = 1e-4 * rng.random::<f64>();
        assert!(resid(&(&base + dir * step)) >= r0);
    }
}

#[test]
fn condition_number_matches_svd_oracle() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    for nbar in 1..=12 {
        let ours = condition_number(grid.etas(), nbar).unwrap();
        let oracle = svd_condition(grid.etas(), nbar);
        assert_abs_diff_eq!(ours / oracle, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn condition_number_thresholds() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    let k5: f64 = condition_number(grid.etas(), 5).unwrap();
    assert!(k5.is_finite() && k5 < 1e4, "kappa(5) = {k5}");
    let k20 = condition_number(grid.etas(), 20).unwrap();
    assert!(k20 > 1e8, "kappa(20) = {k20}");
    assert_eq!(condition_number(&[0.4], 1).unwrap(), 1.0);
}

#[test]
fn condition_number_is_monotone_in_truncation() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    let ks: Vec<f64> = (2..=20)
        .map(|n| condition_number(grid.etas(), n).unwrap())
        .collect();
    for w in ks.windows(2) {
        assert!(w[1] >= w[0], "{:?}", w);
    }
}

#[test]
fn sampled_least_squares_blows_up_at_twenty_photons() {
    let grid = EfficiencyGrid::uniform(0.02, 0.99, 50).unwrap();
    let truth = coherent_distribution(5.2, 20).unwrap();
    let ds = sample_dataset(&truth, &grid, 100_000, 5, None).unwrap();
    let rho = invert_least_squares(&ds.frequencies::<f64>(), grid.etas(), 20).unwrap();
    assert!(rho.iter().any(|r| r.abs() > 1.0), "{rho:?}");
}

#[test]
fn vandermonde_matrix_layout() {
    let sys = VandermondeSystem::from_etas(&[0.2, 0.6], 3).unwrap();
    let m = sys.matrix();
    assert_abs_diff_eq!(m.get(0, 2), 0.64, epsilon = 1e-15);
    assert_abs_diff_eq!(m.get(1, 1), 0.4, epsilon = 1e-15);
    assert_eq!(m.get(1, 0), 1.0);
}
