use covarloop::dynamics::{assemble, integrate, is_hurwitz, lyapunov_residual, lyapunov_steady_state, norm2};
use covarloop::feedback::FeedbackLoop;
use covarloop::gaussian::{log_negativity, rotation, symplectic_eigenvalues, CovarianceMatrix};
use covarloop::model::{NoiseEnvironment, SystemParams};
use nalgebra::{DMatrix, Matrix4};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loop_constructors_preserve_ccr(a in -1.0f64..1.0, t in 0.0f64..1.0, eta in 0.0f64..1.0, z in 0.05f64..20.0, r in 0.0f64..3.0, flip in any::<bool>()) {
        let b = t * (1.0 - a * a).sqrt();
        for lp in [
            FeedbackLoop::passive(a, b).unwrap(),
            FeedbackLoop::squeeze_loss(eta, z).unwrap(),
            FeedbackLoop::two_mode_squeeze(r, flip).unwrap(),
        ] {
            let scale = 1.0 + lp.e().norm().powi(2) + lp.f().norm().powi(2);
            prop_assert!(lp.ccr_residual() <= 1e-10 * scale, "{} residual {}", lp.kind(), lp.ccr_residual());
        }
    }

    #[test]
    fn steady_states_solve_lyapunov(ke in 0.01f64..0.39, u in -1.0f64..1.0, g in 1e-4f64..5e-3, gm in 1e-5f64..1e-3, nm in 1.0f64..300.0) {
        let p = SystemParams::red(0.1, g, gm).unwrap();
        let env = NoiseEnvironment::new(1.0, nm).unwrap();
        let a = 1.0 - ke / 0.2;
        let lp = FeedbackLoop::passive(a, u * (1.0 - a * a).sqrt()).unwrap();
        let dy = assemble(&p, &env, Some(&lp));
        let s = lyapunov_steady_state(&dy).unwrap();
        prop_assert!(lyapunov_residual(&dy, &s).unwrap() <= 1e-10 * norm2(&dy.d));
    }

    #[test]
    fn trajectories_stay_physical(ke in 0.001f64..0.3, g in 0.0f64..0.05, nm in 1.0f64..100.0, z in 0.3f64..3.0, eta in 0.0f64..1.0) {
        let p = SystemParams::full_red(0.1, g, 1e-4).unwrap();
        let env = NoiseEnvironment::new(1.0, nm).unwrap();
        let s0 = CovarianceMatrix::product(&CovarianceMatrix::vacuum(1), &CovarianceMatrix::thermal(1, nm));
        for lp in [FeedbackLoop::passive_for_kappa_eff(ke, 0.1, 0.0).unwrap(), FeedbackLoop::squeeze_loss(eta, z).unwrap()] {
            let dy = assemble(&p, &env, Some(&lp));
            if !is_hurwitz(&dy).hurwitz {
                continue;
            }
            let ts = integrate(&dy, &s0, 60.0, 3.0).unwrap();
            for s in &ts.states {
                prop_assert!(symplectic_eigenvalues(s).unwrap()[0] >= 1.0 - 1e-7);
            }
        }
    }

    #[test]
    fn log_negativity_ignores_local_rotations(r in 0.0f64..1.5, nl in 1.0f64..3.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let m = Matrix4::new(
            nl * c, 0.0, s, 0.0,
            0.0, nl * c, 0.0, -s,
            s, 0.0, c, 0.0,
            0.0, -s, 0.0, c,
        );
        let sigma = CovarianceMatrix::from_matrix4(&m).unwrap();
        let mut rot = Matrix4::zeros();
        rot.fixed_view_mut::<2, 2>(0, 0).copy_from(&rotation(t1));
        rot.fixed_view_mut::<2, 2>(2, 2).copy_from(&rotation(t2));
        let rotated = rot * m * rot.transpose();
        let rotated = CovarianceMatrix::new(DMatrix::from_fn(4, 4, |i, j| 0.5 * (rotated[(i, j)] + rotated[(j, i)]))).unwrap();
        prop_assert!((log_negativity(&sigma).unwrap() - log_negativity(&rotated).unwrap()).abs() <= 1e-9);
    }
}
