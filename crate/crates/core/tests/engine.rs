use covarloop::delay::{delayed_steady_state, DelayedLoopSpec};
use covarloop::dynamics::{assemble, integrate, is_hurwitz, lyapunov_steady_state};
use covarloop::feedback::FeedbackLoop;
use covarloop::gaussian::{mean_occupancy, symplectic_eigenvalues, CovarianceMatrix};
use covarloop::model::{NoiseEnvironment, SystemParams};
use covarloop::protocols::cooling::{cooling_sigma_cf, cooling_transient, crossing_time};
use covarloop::protocols::steady_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_frobenius(a: &CovarianceMatrix, b: &CovarianceMatrix) -> f64 {
    (a.matrix() - b.matrix()).norm() / b.matrix().norm()
}

#[test]
fn closed_form_against_lyapunov_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let kappa = 10f64.powf(rng.gen_range(-2.0..-0.5));
        let g = 10f64.powf(rng.gen_range(-4.0..-2.0));
        let gm = 10f64.powf(rng.gen_range(-6.0..-3.0));
        let ke = rng.gen_range(0.05..3.9) * kappa;
        let a = 1.0 - ke / (2.0 * kappa);
        let b = rng.gen_range(-1.0..1.0) * (1.0 - a * a).sqrt();
        let (nl, nm) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..500.0));
        let p = SystemParams::red(kappa, g, gm).unwrap();
        let env = NoiseEnvironment::new(nl, nm).unwrap();
        let lp = FeedbackLoop::passive(a, b).unwrap();
        let s = lyapunov_steady_state(&assemble(&p, &env, Some(&lp))).unwrap();
        let num = symplectic_eigenvalues(&s.mode(1)).unwrap()[0];
        let cf = cooling_sigma_cf(ke, b, kappa, g, gm, nl, nm).unwrap();
        worst = worst.max((num - cf).abs() / cf);
    }
    assert!(worst <= 1e-10, "worst relative error {worst:e}");
}

#[test]
fn zero_delay_matches_lyapunov_on_random_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let kappa = rng.gen_range(0.05..0.2);
        let g = rng.gen_range(1e-3..1e-2);
        let gm = 10f64.powf(rng.gen_range(-5.0..-3.0));
        let a = rng.gen_range(0.5..0.99);
        let p = SystemParams::red(kappa, g, gm).unwrap();
        let env = NoiseEnvironment::new(rng.gen_range(1.0..2.0), rng.gen_range(10.0..200.0)).unwrap();
        let spec = DelayedLoopSpec::new(a, 0.0, p, env).unwrap();
        let delayed = delayed_steady_state(&spec).unwrap().sigma;
        let lp = FeedbackLoop::passive(a, 0.0).unwrap();
        let lyap = lyapunov_steady_state(&assemble(&p, &env, Some(&lp))).unwrap();
        let err = rel_frobenius(&delayed, &lyap);
        assert!(err <= 1e-4, "a = {a}, kappa = {kappa}, G = {g}: relative error {err:e}");
    }
}

#[test]
fn disabled_loop_ignores_delay() {
    let p = SystemParams::red(0.1, 1e-3, 1e-4).unwrap();
    let env = NoiseEnvironment::new(1.0, 50.0).unwrap();
    let open = FeedbackLoop::passive(0.0, 0.0).unwrap();
    let lyap = lyapunov_steady_state(&assemble(&p, &env, Some(&open))).unwrap();
    for tau in [0.0, 3.0, 20.0] {
        let s = delayed_steady_state(&DelayedLoopSpec::new(0.0, tau, p, env).unwrap()).unwrap().sigma;
        assert!(rel_frobenius(&s, &lyap) <= 1e-6, "tau = {tau}");
    }
}

#[test]
fn delayed_occupancy_is_continuous_in_tau() {
    let p = SystemParams::red(0.1, 1e-3, 1e-5).unwrap();
    let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
    let occ = |tau: f64| {
        let s = delayed_steady_state(&DelayedLoopSpec::new(0.99, tau, p, env).unwrap()).unwrap().sigma;
        mean_occupancy(&s.mode(1)).unwrap()
    };
    let base = occ(1.0);
    let mut prev = f64::INFINITY;
    for d in [1e-1, 1e-2, 1e-3] {
        let diff = (occ(1.0 + d) - base).abs();
        assert!(diff <= prev + 1e-9, "difference does not shrink at delta = {d}");
        prev = diff;
    }
    assert!(prev < 1e-3);
}

#[test]
fn optimal_loss_relaxes_much_faster_than_bare_cavity() {
    let p = SystemParams::red(0.1, 1e-3, 1e-5).unwrap();
    let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
    let lp = FeedbackLoop::passive_for_kappa_eff(2e-3, 0.1, 0.0).unwrap();
    let t_final = 2e4;
    let fast = cooling_transient(&p, &env, Some(&lp), t_final, 10.0).unwrap();
    let slow = cooling_transient(&p, &env, None, t_final, 10.0).unwrap();
    let t_fast = crossing_time(&fast, 2.0).expect("optimal loop reaches N = 2");
    if let Some(t_slow) = crossing_time(&slow, 2.0) {
        assert!(t_slow > 10.0 * t_fast, "crossings {t_fast} and {t_slow}");
    }
    let r_fast = is_hurwitz(&assemble(&p, &env, Some(&lp))).abscissa;
    let r_slow = is_hurwitz(&assemble(&p, &env, None)).abscissa;
    assert!(r_fast / r_slow > 10.0, "relaxation rates {r_fast:e} and {r_slow:e}");
}

#[test]
fn decoupled_mechanics_heats_at_gamma_m() {
    let gm = 1e-3;
    let p = SystemParams::red(0.1, 0.0, gm).unwrap();
    let env = NoiseEnvironment::new(1.0, 41.0).unwrap();
    let s0 = CovarianceMatrix::vacuum(2);
    let ts = integrate(&assemble(&p, &env, None), &s0, 2.0 / gm, 1.0).unwrap();
    let occ: Vec<f64> = ts.states.iter().map(|s| mean_occupancy(&s.mode(1)).unwrap()).collect();
    assert!(occ.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    // N̄(t) = N̄_∞(1 − e^{−Γ_m t}); the 1/e point
    let target = 20.0 * (1.0 - (-1f64).exp());
    let i = occ.iter().position(|&n| n >= target).unwrap();
    let t = ts.times[i];
    assert!((t * gm - 1.0).abs() <= 0.02, "e-folding at {t}");
}

#[test]
fn rwa_agrees_with_full_dynamics_at_weak_coupling() {
    let lp = FeedbackLoop::passive(0.99, 0.0).unwrap();
    let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
    let rwa = steady_report(&SystemParams::red(0.1, 1e-3, 1e-5).unwrap(), &env, Some(&lp)).unwrap();
    let full = steady_report(&SystemParams::full_red(0.1, 1e-3, 1e-5).unwrap(), &env, Some(&lp)).unwrap();
    let (a, b) = (rwa.occupancy.unwrap(), full.occupancy.unwrap());
    assert!((a - b).abs() / a <= 0.05, "RWA {a}, full {b}");
}
