//! Transient transfer of a squeezed optical state onto the mechanics during
//! a red-sideband pulse.

use std::f64::consts::PI;

use crate::dynamics::{assemble, is_hurwitz, mech_block, propagate};
use crate::error::{Error, Result};
use crate::feedback::FeedbackLoop;
use crate::gaussian::{min_eigenvalue2, pure_state_cm, schatten2_distance2, CovarianceMatrix, PureStateSpec};
use crate::model::{NoiseEnvironment, SystemParams};
use crate::table::{Cell, Metrics, Row, SweepTable};

use super::optimize::par_map;
use super::provenance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferOptions {
    /// Rotations `θ + kπ/n`, `k = 0..n`, averaged over.
    pub theta_samples: usize,
    pub steps_per_period: usize,
    /// Pulse length in mechanical periods.
    pub periods: f64,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions { theta_samples: 16, steps_per_period: 100, periods: 25.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferResult {
    /// θ-averaged minimum over the pulse of `‖σ_T − σ_m(t)‖₂`.
    pub v_min: f64,
    /// θ-averaged time of that minimum.
    pub t_min: f64,
    /// θ-averaged smallest mechanical quadrature eigenvalue over the pulse.
    pub min_mech_eigenvalue: f64,
    /// Optics started thermal (`N_l·1`) instead of in the target state.
    pub baseline: bool,
    pub abscissa: f64,
}

pub fn state_transfer(
    params: &SystemParams,
    env: &NoiseEnvironment,
    target: PureStateSpec,
    kappa_eff: f64,
    opts: &TransferOptions,
    baseline: bool,
) -> Result<TransferResult> {
    if opts.theta_samples == 0 || opts.steps_per_period == 0 || !(opts.periods > 0.0) {
        return Err(Error::invalid("transfer options", "need positive sample counts and pulse length"));
    }
    let lp = FeedbackLoop::passive_for_kappa_eff(kappa_eff, params.kappa, 0.0)?;
    let dy = assemble(params, env, Some(&lp));
    let abscissa = is_hurwitz(&dy).abscissa;
    let period = 2.0 * PI / params.omega_m;
    let t_final = opts.periods * period;
    let dt = period / opts.steps_per_period as f64;
    let n = opts.theta_samples;
    let thetas: Vec<f64> = (0..n).map(|k| target.theta + k as f64 * PI / n as f64).collect();

    let per_theta = par_map(&thetas, |&theta| -> Result<(f64, f64, f64)> {
        let spec = PureStateSpec::new(theta, target.z)?;
        let st = pure_state_cm(spec)?.to_matrix2()?;
        let optics = if baseline { CovarianceMatrix::thermal(1, env.n_l) } else { pure_state_cm(spec)? };
        let s0 = CovarianceMatrix::product(&optics, &CovarianceMatrix::thermal(1, env.n_m));
        let (mut v_min, mut t_min, mut e_min) = (f64::INFINITY, 0.0, f64::INFINITY);
        propagate(&dy, &s0, t_final, dt, |t, s| {
            let m = mech_block(s);
            let v = schatten2_distance2(&st, &m);
            if v < v_min {
                v_min = v;
                t_min = t;
            }
            e_min = e_min.min(min_eigenvalue2(&m));
        })?;
        Ok((v_min, t_min, e_min))
    });
    let (mut v, mut t, mut e) = (0.0, 0.0, 0.0);
    for r in per_theta {
        let (a, b, c) = r?;
        v += a;
        t += b;
        e += c;
    }
    let nf = n as f64;
    Ok(TransferResult { v_min: v / nf, t_min: t / nf, min_mech_eigenvalue: e / nf, baseline, abscissa })
}

/// Prepared and thermal-optics transfer figures for each effective loss.
pub fn transfer_sweep(
    params: &SystemParams,
    env: &NoiseEnvironment,
    target: PureStateSpec,
    kappa_effs: &[f64],
    opts: &TransferOptions,
) -> Result<SweepTable> {
    let mut t = SweepTable::new(&["kappa_eff", "baseline"])
        .with_extras(&["t_min"])
        .with_constant("target_theta", target.theta)
        .with_constant("target_z", target.z)
        .with_constant("theta_samples", opts.theta_samples as f64)
        .with_constant("periods", opts.periods);
    for &ke in kappa_effs {
        let lp = FeedbackLoop::passive_for_kappa_eff(ke, params.kappa, 0.0)?;
        for baseline in [false, true] {
            let r = state_transfer(params, env, target, ke, opts, baseline)?;
            t.push(Row {
                axes: vec![ke, if baseline { 1.0 } else { 0.0 }],
                stable: r.abscissa < -crate::dynamics::HURWITZ_TOL,
                metrics: Metrics {
                    min_mech_eig: Cell::Value(r.min_mech_eigenvalue),
                    v_min: Cell::Value(r.v_min),
                    abscissa: Cell::Value(r.abscissa),
                    ..Default::default()
                },
                extras: vec![Cell::Value(r.t_min)],
                provenance: provenance(params, env, Some(&lp)),
            });
        }
    }
    Ok(t)
}
