mod common;

use std::f64::consts::PI;

use common::{adaptive_simpson, loglog_slope};
use eabf::forward::{
    convolve_analytic, convolve_simpson, fem1d_heat_solve, heat2d_exact, heat2d_numeric, solve_to_budget,
    wave_fm, AdaptiveSolver, DeconvForward, Discretization, ForwardMap, Heat1dForward, Heat2dForward,
    Heat2dParams, RefinementPolicy, RefinementRule, WaveForward,
};

const TRUTH: [f64; 7] = [0.9, -0.4, -0.4, -0.3, -0.3, -0.2, -0.2];

/// The flattened sine–cosine series written out term by term.
fn series(c: &[f64], z: f64) -> f64 {
    let mut v = c[0];
    for (j, pair) in c[1..].chunks(2).enumerate() {
        let w = 2.0 * PI * (j + 1) as f64;
        v += pair[0] * (w * z).cos();
        if pair.len() > 1 {
            v += pair[1] * (w * z).sin();
        }
    }
    v
}

fn box_blur(c: &[f64], alpha: f64, x: f64) -> f64 {
    let (lo, hi) = ((x - alpha).max(0.0), (x + alpha).min(1.0));
    adaptive_simpson(&|z| series(c, z), lo, hi, 1e-13) / (2.0 * alpha)
}

#[test]
fn cosine_blur_matches_quadrature() {
    let c = [0.0, 1.0];
    let v = convolve_analytic(&c, 0.25, 0.5);
    let closed = ((2.0 * PI * 0.75).sin() - (2.0 * PI * 0.25).sin()) / (2.0 * PI * 0.5);
    assert!((v - closed).abs() < 1e-12);
    assert!((v - box_blur(&c, 0.25, 0.5)).abs() < 1e-10);
}

#[test]
fn analytic_blur_matches_quadrature_across_the_design() {
    for alpha in [0.05, 0.1, 0.3] {
        for j in 0..10 {
            let x = j as f64 / 9.0;
            let v = convolve_analytic(&TRUTH, alpha, x);
            assert!((v - box_blur(&TRUTH, alpha, x)).abs() < 1e-10, "alpha {alpha} x {x}");
        }
    }
}

#[test]
fn simpson_is_exact_for_constants() {
    for n in [2, 4, 10, 64] {
        assert!((convolve_simpson(&[1.7], 0.1, 0.0, n).unwrap() - 0.85).abs() < 1e-14);
        assert!((convolve_simpson(&[1.7], 0.1, 0.5, n).unwrap() - 1.7).abs() < 1e-14);
    }
}

#[test]
fn simpson_error_is_fourth_order() {
    let grids = [8usize, 16, 32, 64];
    let design: Vec<f64> = (0..10).map(|j| j as f64 / 9.0).collect();
    let errs: Vec<f64> = grids
        .iter()
        .map(|&n| {
            design
                .iter()
                .map(|&x| (convolve_simpson(&TRUTH, 0.1, x, n).unwrap() - convolve_analytic(&TRUTH, 0.1, x)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let ns: Vec<f64> = grids.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&ns, &errs);
    assert!((-4.5..=-3.5).contains(&slope), "slope {slope}, errors {errs:?}");
}

#[test]
fn deconv_grid_estimate_is_the_true_sup_error() {
    let design: Vec<f64> = (0..10).map(|j| j as f64 / 9.0).collect();
    let fm = DeconvForward::new(0.1, design.clone()).unwrap();
    let s = fm.solve(&TRUTH, &Discretization::Grid { n: 8 }).unwrap();
    let worst = design
        .iter()
        .zip(&s.eta)
        .map(|(&x, e)| (e - box_blur(&TRUTH, 0.1, x)).abs())
        .fold(0.0, f64::max);
    assert!((s.error_estimate - worst).abs() < 1e-10);
}

#[test]
fn wave_map_matches_elementwise_sum() {
    let a = [1.5, 0.8, 0.7, 0.3];
    let design: Vec<f64> = (1..=15).map(|j| j as f64 / 16.0).collect();
    let eta = wave_fm(&a, &design);
    for (z, e) in design.iter().zip(&eta) {
        let mut v = 0.0;
        for (n, an) in a.iter().enumerate() {
            let k = (n + 1) as f64;
            v += an * (-1f64).powi(n as i32 + 1) * (k * PI * z).sin();
        }
        assert!((e - v).abs() < 1e-14);
    }
    assert!((wave_fm(&[1.0], &[0.5])[0] + 1.0).abs() < 1e-15);
    assert!(wave_fm(&[0.0; 4], &design).iter().all(|&v| v == 0.0));
    let exact = solve_to_budget(&WaveForward::new(design), &a, 1e-300, &RefinementPolicy::exact()).unwrap();
    assert_eq!(exact.solve.error_estimate, 0.0);
    assert_eq!(exact.level, 0);
}

#[test]
fn fem_variable_conductivity_manufactured_solution() {
    // a = 1 + x, u = x(1 − x) ⇒ f = −(a u′)′ = 1 + 4x
    let exact = |x: f64| x * (1.0 - x);
    let mut errs = Vec::new();
    let ns = [25usize, 50, 100, 200];
    for &n in &ns {
        let s = fem1d_heat_solve(|x| (1.0 + x, 1.0), |x| 1.0 + 4.0 * x, n).unwrap();
        let e = (0..=4 * n)
            .map(|i| {
                let x = i as f64 / (4 * n) as f64;
                (s.eval(x) - exact(x)).abs()
            })
            .fold(0.0, f64::max);
        errs.push(e);
    }
    let slope = loglog_slope(&ns.map(|n| n as f64), &errs);
    assert!((-2.3..=-1.7).contains(&slope), "slope {slope}");
}

#[test]
fn fem_estimate_bounds_element_error_for_sine_load() {
    let exact = |x: f64| (PI * x).sin() / (PI * PI);
    for n in [50usize, 100, 200] {
        let s = fem1d_heat_solve(|_| (1.0, 0.0), |x| (PI * x).sin(), n).unwrap();
        let h = 1.0 / n as f64;
        let max_nodal = s
            .u
            .iter()
            .enumerate()
            .map(|(i, u)| (u - exact(i as f64 * h)).abs())
            .fold(0.0, f64::max);
        assert!(max_nodal < h * h);
        for i in 0..n {
            let lo = i as f64 * h;
            let err2 = adaptive_simpson(
                &|x| {
                    let uh = s.u[i] + (s.u[i + 1] - s.u[i]) * (x - lo) / h;
                    (exact(x) - uh).powi(2)
                },
                lo,
                lo + h,
                1e-22,
            );
            assert!(s.element_estimates[i] >= err2.sqrt(), "n {n} element {i}");
        }
    }
}

#[test]
fn true_conductivity_meets_the_heat1d_budget_at_150_elements() {
    let (k0, r, a, s) = (5.0, 0.9, 20.0, 2.0);
    let cond = |x: f64| {
        let e = (-a * x + a / s).exp();
        let g = 1.0 / (1.0 + e);
        (k0 - r * k0 * g, -r * k0 * a * e * g * g)
    };
    let sol = fem1d_heat_solve(cond, |x| (PI * x).sin(), 150).unwrap();
    assert!(sol.estimate <= 2.1e-6, "{}", sol.estimate);
}

#[test]
fn heat1d_map_with_zero_log_conductivity_is_the_sine_profile() {
    let design: Vec<f64> = (1..=30).map(|j| j as f64 / 31.0).collect();
    let fm = Heat1dForward::new(21, design.clone()).unwrap();
    let s = fm.solve(&[0.0; 21], &Discretization::Elements { n: 200 }).unwrap();
    for (x, e) in design.iter().zip(&s.eta) {
        assert!((e - (PI * x).sin() / (PI * PI)).abs() < 1e-5);
    }
}

fn heat_params() -> Heat2dParams {
    let g = [0.1, 0.3, 0.5, 0.7, 0.9];
    Heat2dParams {
        alpha: 0.01,
        t1: 0.3,
        observations: g.iter().flat_map(|&y| g.iter().map(move |&x| (x, y))).collect(),
    }
}

#[test]
fn heat2d_reference_values_follow_the_formula() {
    let p = heat_params();
    let eta = p.exact(3.0, 5.0);
    for ((x, y), e) in p.observations.iter().zip(&eta) {
        let d1 = (-2.0 * 0.01 * PI * PI * 0.3f64).exp();
        let d2 = (-5.0 * 0.01 * PI * PI * 0.3f64).exp();
        let v = 3.0 * d1 * (PI * x).sin() * (PI * y).sin() + 5.0 * d2 * (2.0 * PI * x).sin() * (PI * y).sin();
        assert!((e - v).abs() < 1e-14);
    }
    assert_eq!(heat2d_exact(3.0, 5.0, 0.01, 0.0, 0.4, 0.3), 0.0);
}

#[test]
fn heat2d_zero_initial_data_gives_zero() {
    let (eta, err) = heat2d_numeric(0.0, 0.0, &heat_params(), (0.05, 0.05, 0.1)).unwrap();
    assert!(eta.iter().all(|v| *v == 0.0));
    assert_eq!(err, 0.0);
}

#[test]
fn heat2d_error_is_second_order_under_halving() {
    let p = heat_params();
    let mut errs = Vec::new();
    for level in 0..4 {
        let f = 0.5f64.powi(level);
        let (_, err) = heat2d_numeric(3.0, 5.0, &p, (0.1 * f, 0.1 * f, 0.268 * f)).unwrap();
        errs.push(err);
    }
    for w in errs.windows(2).skip(1) {
        let ratio = w[0] / w[1];
        assert!((3.0..=6.0).contains(&ratio), "ratios from {errs:?}");
    }
    assert!(errs[2] <= 0.0015);
}

#[test]
fn heat2d_map_agrees_with_direct_solves() {
    let p = heat_params();
    let fm = Heat2dForward::new(p.clone()).unwrap();
    let mesh = (0.05, 0.05, 0.134);
    let via_map = fm
        .solve(&[2.0, -1.5], &Discretization::Mesh { dx: mesh.0, dy: mesh.1, dt: mesh.2 })
        .unwrap();
    let (direct, err) = heat2d_numeric(2.0, -1.5, &p, mesh).unwrap();
    for (a, b) in via_map.eta.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((via_map.error_estimate - err).abs() < 1e-12);
}

#[test]
fn adaptive_solver_audits_refinements_and_strides() {
    let design: Vec<f64> = (0..10).map(|j| j as f64 / 9.0).collect();
    let fm = DeconvForward::new(0.1, design).unwrap();
    let policy = RefinementPolicy {
        rule: RefinementRule::DoubleGrid { initial: 4 },
        max_refinements: 10,
    };
    let mut solver = AdaptiveSolver::new(&fm, policy, 1e-6).unwrap().with_audit_stride(10);
    for i in 0..30 {
        let mut theta = TRUTH.to_vec();
        theta[0] += 1e-3 * i as f64;
        let s = solver.solve(&theta).unwrap();
        assert!(s.error_estimate <= 1e-6);
    }
    assert_eq!(solver.calls(), 30);
    let audit = solver.audit();
    assert!(audit.iter().any(|r| r.accepted && r.level > 0));
    assert!(audit.iter().filter(|r| r.level == solver.level()).count() >= 3);
    let levels: Vec<usize> = audit.iter().map(|r| r.level).collect();
    assert!(levels.windows(2).all(|w| w[0] <= w[1]), "controller coarsened: {levels:?}");
}
