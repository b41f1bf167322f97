mod common;

use common::mean;
use eabf::priors::DimPrior;
use eabf::samplers::{hist_tv, iat, mh_step, run_chain, Kernel, RjConfig, RunSettings, Walker};
use eabf::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn iat_of_independent_draws_is_one() {
    let t = iat(&normals(100_000, 1)).unwrap();
    assert!((t - 1.0).abs() < 0.2, "{t}");
}

#[test]
fn iat_of_ar1_matches_closed_form() {
    let phi: f64 = 0.9;
    let eps = normals(200_000, 2);
    let mut x = vec![0.0; eps.len()];
    for i in 1..x.len() {
        x[i] = phi * x[i - 1] + eps[i];
    }
    let expected = (1.0 + phi) / (1.0 - phi);
    let t = iat(&x).unwrap();
    assert!((t - expected).abs() < 0.25 * expected, "{t} vs {expected}");
}

#[test]
fn hist_tv_of_two_samples_from_one_law_is_small() {
    let tv = hist_tv(&normals(100_000, 3), &normals(100_000, 4), 50).unwrap();
    assert!(tv < 0.02, "{tv}");
    let shifted: Vec<f64> = normals(100_000, 5).iter().map(|v| v + 1.0).collect();
    assert!(hist_tv(&normals(100_000, 6), &shifted, 50).unwrap() > 0.3);
}

#[test]
fn mh_step_balances_a_three_state_target() {
    let p: [f64; 3] = [0.2, 0.3, 0.5];
    let mut target = |x: &[f64]| -> Result<f64> { Ok(p[x[0] as usize].ln()) };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut w = Walker::new(vec![0.0], &mut target).unwrap();
    let n = 300_000;
    let mut visits = [0usize; 3];
    let mut flux = [[0usize; 3]; 3];
    for _ in 0..n {
        let from = w.x[0] as usize;
        let to = (from + rng.random_range(1..3)) % 3;
        if mh_step(&mut w, vec![to as f64], 0.0, &mut target, &mut rng).unwrap() {
            flux[from][to] += 1;
        }
        visits[w.x[0] as usize] += 1;
    }
    for s in 0..3 {
        assert!((visits[s] as f64 / n as f64 - p[s]).abs() < 0.01, "{visits:?}");
    }
    for i in 0..3 {
        for j in 0..i {
            let (a, b) = (flux[i][j] as f64, flux[j][i] as f64);
            assert!((a - b).abs() < 0.05 * (a + b) / 2.0, "flux {i}->{j}: {a} vs {b}");
        }
    }
}

#[test]
fn mh_step_never_moves_to_zero_density() {
    let mut target = |x: &[f64]| -> Result<f64> { Ok(if x[0] < 0.0 { f64::NEG_INFINITY } else { -x[0] }) };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut w = Walker::new(vec![1.0], &mut target).unwrap();
    for _ in 0..100 {
        assert!(!mh_step(&mut w, vec![-0.5], 0.0, &mut target, &mut rng).unwrap());
    }
    assert!(mh_step(&mut w, vec![f64::NAN], 0.0, &mut |_: &[f64]| Ok(f64::NAN), &mut rng).is_err());
}

fn correlated_target(rho: f64) -> impl FnMut(&[f64]) -> Result<f64> {
    move |x: &[f64]| {
        let q = (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / (1.0 - rho * rho);
        Ok(-0.5 * q)
    }
}

fn check_moments(samples: &[Vec<f64>], rho: f64, tol: f64) {
    let x: Vec<f64> = samples.iter().map(|s| s[0]).collect();
    let y: Vec<f64> = samples.iter().map(|s| s[1]).collect();
    let (mx, my) = (mean(&x), mean(&y));
    let vx = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / x.len() as f64;
    let vy = y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / y.len() as f64;
    let cxy = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    let se = (iat(&x).unwrap() / x.len() as f64).sqrt();
    assert!(mx.abs() < 3.0 * se && my.abs() < 3.0 * se, "means {mx} {my}");
    assert!((vx - 1.0).abs() < tol && (vy - 1.0).abs() < tol, "variances {vx} {vy}");
    assert!((cxy - rho).abs() < tol, "covariance {cxy}");
}

#[test]
fn block_random_walk_recovers_a_correlated_gaussian() {
    let settings = RunSettings { iterations: 400_000, burn_in: 20_000, thin: 2, adapt: true };
    let kernel = Kernel::RandomWalk { scale: 1.0, single_site: false };
    let chain = run_chain(vec![0.0, 0.0], correlated_target(0.8), kernel, None, &settings, 11).unwrap();
    check_moments(chain.samples(), 0.8, 0.05);
    let rate = chain.acceptance_rate("random_walk").unwrap();
    assert!((0.15..0.35).contains(&rate), "{rate}");
}

#[test]
fn pair_stretch_recovers_a_correlated_gaussian() {
    let settings = RunSettings { iterations: 400_000, burn_in: 20_000, thin: 2, adapt: true };
    let kernel = Kernel::PairStretch { a: 2.0, random_walk_prob: 0.2, scale: 0.5 };
    let chain = run_chain(vec![0.0, 0.0], correlated_target(0.8), kernel, None, &settings, 12).unwrap();
    check_moments(chain.samples(), 0.8, 0.05);
    assert!(chain.acceptance_rate("stretch").is_some());
}

#[test]
fn pinned_dimension_range_never_jumps() {
    let h = DimPrior::Point { k: 1 };
    let rj = RjConfig { step: 1, k_min: 1, k_max: 1, jump_prob: 0.5, base_scale: 0.25 };
    let settings = RunSettings { iterations: 20_000, burn_in: 1000, thin: 1, adapt: false };
    let kernel = Kernel::RandomWalk { scale: 1.0, single_site: true };
    let chain = run_chain(
        vec![0.0],
        |x: &[f64]| Ok(-0.5 * x[0] * x[0]),
        kernel,
        Some((&rj, &h)),
        &settings,
        3,
    )
    .unwrap();
    assert!(chain.dims().iter().all(|&d| d == 1));
    assert_eq!(chain.acceptance_rate("birth").unwrap_or(0.0), 0.0);
    let x = chain.coordinate(0);
    let se = (iat(&x).unwrap() / x.len() as f64).sqrt();
    assert!(mean(&x).abs() < 3.0 * se);
}

#[test]
fn runs_are_reproducible_for_a_seed() {
    let settings = RunSettings { iterations: 5000, burn_in: 500, thin: 1, adapt: true };
    let kernel = Kernel::RandomWalk { scale: 1.0, single_site: false };
    let a = run_chain(vec![0.0, 0.0], correlated_target(0.5), kernel, None, &settings, 9).unwrap();
    let b = run_chain(vec![0.0, 0.0], correlated_target(0.5), kernel, None, &settings, 9).unwrap();
    let c = run_chain(vec![0.0, 0.0], correlated_target(0.5), kernel, None, &settings, 10).unwrap();
    assert_eq!(a.samples(), b.samples());
    assert_ne!(a.samples(), c.samples());
}
