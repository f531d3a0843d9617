//! Steady-state optomechanical entanglement on the blue sideband.

use crate::dynamics::{assemble, is_hurwitz, Stability};
use crate::error::{Error, Result};
use crate::feedback::FeedbackLoop;
use crate::model::{NoiseEnvironment, SystemParams};
use crate::table::{Cell, SweepTable};

use super::optimize::{bisect_boundary, par_map};
use super::{provenance, steady_report, SteadyReport};

/// Smallest stabilizing effective loss, `4G²/Γ_m`.
pub fn blue_threshold(g: f64, gamma_m: f64) -> f64 {
    4.0 * g * g / gamma_m
}

fn passive_for(params: &SystemParams, kappa_eff: f64) -> Result<FeedbackLoop> {
    FeedbackLoop::passive_for_kappa_eff(kappa_eff, params.kappa, 0.0)
}

fn hurwitz_at(params: &SystemParams, env: &NoiseEnvironment, kappa_eff: f64) -> bool {
    passive_for(params, kappa_eff).map(|lp| is_hurwitz(&assemble(params, env, Some(&lp))).hurwitz).unwrap_or(false)
}

/// Bracket `(lo, hi)` of width `≤ tol` around the effective loss at which the
/// passive-loop drift becomes Hurwitz.
pub fn kappa_eff_threshold_bisect(
    params: &SystemParams,
    env: &NoiseEnvironment,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    bisect_boundary(|ke| !hurwitz_at(params, env, ke), lo, hi, tol)
}

/// Passive-loop steady state at `κ_eff`.
pub fn passive_entanglement(params: &SystemParams, env: &NoiseEnvironment, kappa_eff: f64) -> Result<SteadyReport> {
    let lp = passive_for(params, kappa_eff)?;
    steady_report(params, env, Some(&lp))
}

/// Passive-loop steady state just inside the stable region,
/// `κ_eff = (4G²/Γ_m)(1 + rel_margin)`.
pub fn entanglement_at_margin(params: &SystemParams, env: &NoiseEnvironment, rel_margin: f64) -> Result<SteadyReport> {
    if !(rel_margin > 0.0) {
        return Err(Error::invalid("margin", "must be positive"));
    }
    let ke = blue_threshold(params.g_lin, params.gamma_m) * (1.0 + rel_margin);
    passive_entanglement(params, env, ke)
}

/// Log-negativity against the effective loss of a passive loop.
pub fn entanglement_sweep(params: &SystemParams, env: &NoiseEnvironment, kappa_effs: &[f64]) -> Result<SweepTable> {
    let rows = par_map(kappa_effs, |&ke| -> Result<_> {
        let lp = passive_for(params, ke)?;
        let rep = steady_report(params, env, Some(&lp))?;
        Ok(rep.row(vec![ke], vec![], provenance(params, env, Some(&lp))))
    });
    let mut t = SweepTable::new(&["kappa_eff"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

/// For each in-loop squeezing `z`, the largest log-negativity over the
/// squeeze-loss transmissions `etas`.
pub fn entanglement_vs_squeezing(
    params: &SystemParams,
    env: &NoiseEnvironment,
    zs: &[f64],
    etas: &[f64],
) -> Result<SweepTable> {
    let pts: Vec<(f64, f64)> = zs.iter().flat_map(|&z| etas.iter().map(move |&e| (z, e))).collect();
    let reps = par_map(&pts, |&(z, eta)| -> Result<(FeedbackLoop, SteadyReport)> {
        let lp = FeedbackLoop::squeeze_loss(eta, z)?;
        Ok((lp, steady_report(params, env, Some(&lp))?))
    });
    let mut t = SweepTable::new(&["z"]).with_extras(&["best_eta"]);
    let mut it = reps.into_iter();
    for &z in zs {
        let mut best: Option<(f64, FeedbackLoop, SteadyReport)> = None;
        let mut fallback = None;
        for &eta in etas {
            let (lp, rep) = it.next().expect("one result per grid point")?;
            if rep.stable() {
                if best.as_ref().map_or(true, |b| rep.log_neg > b.2.log_neg) {
                    best = Some((eta, lp, rep));
                }
            } else if fallback.is_none() {
                fallback = Some((lp, rep));
            }
        }
        let row = match best {
            Some((eta, lp, rep)) => rep.row(vec![z], vec![Cell::Value(eta)], provenance(params, env, Some(&lp))),
            None => {
                let (lp, rep) = fallback.ok_or_else(|| Error::invalid("eta grid", "must not be empty"))?;
                rep.row(vec![z], vec![Cell::Unstable], provenance(params, env, Some(&lp)))
            }
        };
        t.push(row);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmsStabilization {
    /// `cosh⁻¹(2G²/(κΓ_m) − 1)`; `None` when the flipped loop is stable at
    /// `r = 0` already.
    pub analytic_r: Option<f64>,
    /// Hurwitz switch located by bisection.
    pub bisected: (f64, f64),
    pub passively_stable: bool,
    pub stability_below: Stability,
    pub stability_above: Stability,
    /// Steady state at `r = r*(1 + 1e-3)`.
    pub report: SteadyReport,
}

pub fn tms_stabilization(params: &SystemParams, env: &NoiseEnvironment) -> Result<TmsStabilization> {
    let (g, k, gm) = (params.g_lin, params.kappa, params.gamma_m);
    if !(k > 0.0 && gm > 0.0) {
        return Err(Error::invalid("kappa, Gamma_m", "must be positive"));
    }
    let stab = |r: f64| -> Result<Stability> {
        let lp = FeedbackLoop::two_mode_squeeze(r, true)?;
        Ok(is_hurwitz(&assemble(params, env, Some(&lp))))
    };
    let arg = 2.0 * g * g / (k * gm) - 1.0;
    let analytic_r = (arg >= 1.0).then(|| arg.acosh());
    let passively_stable = stab(0.0)?.hurwitz;
    let bisected = if passively_stable {
        (0.0, 0.0)
    } else {
        let mut hi = analytic_r.unwrap_or(1.0).max(1.0) * 2.0;
        while !stab(hi)?.hurwitz {
            hi *= 2.0;
            if hi > 1e3 {
                return Err(Error::Numerical("flipped two-mode squeezing loop does not stabilize".into()));
            }
        }
        bisect_boundary(|r| !stab(r).map(|s| s.hurwitz).unwrap_or(false), 0.0, hi, 1e-6)?
    };
    let r_star = analytic_r.unwrap_or(0.5 * (bisected.0 + bisected.1));
    let r_eval = r_star * (1.0 + 1e-3);
    let lp = FeedbackLoop::two_mode_squeeze(r_eval, true)?;
    let report = steady_report(params, env, Some(&lp))?;
    Ok(TmsStabilization {
        analytic_r,
        bisected,
        passively_stable,
        stability_below: stab(r_star * (1.0 - 1e-3))?,
        stability_above: stab(r_eval)?,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blue() -> SystemParams {
        SystemParams::blue(0.1, 4.5e-3, 1e-3).unwrap()
    }

    fn env() -> NoiseEnvironment {
        NoiseEnvironment::new(1.0, 100.0).unwrap()
    }

    #[test]
    fn threshold_bisection() {
        let (lo, hi) = kappa_eff_threshold_bisect(&blue(), &env(), 0.01, 0.2, 1e-6).unwrap();
        assert!(lo <= 0.081 + 1e-6 && hi >= 0.081 - 1e-6 && hi - lo <= 1e-6);
    }

    #[test]
    fn quoted_value_at_kappa_eff_point_one() {
        let r = passive_entanglement(&blue(), &env(), 0.1).unwrap();
        assert!((r.log_neg - 0.01166).abs() < 1e-4, "E_N = {}", r.log_neg);
    }

    #[test]
    fn unstable_points_record_zero() {
        let t = entanglement_sweep(&blue(), &env(), &[0.05, 0.1]).unwrap();
        assert!(!t.rows[0].stable);
        assert_eq!(t.rows[0].metrics.log_neg, Cell::Value(0.0));
        assert!(t.rows[1].stable);
    }

    #[test]
    fn tms_threshold() {
        let p = SystemParams::blue(0.01, 4.5e-3, 1e-3).unwrap();
        let r = tms_stabilization(&p, &env()).unwrap();
        let a = r.analytic_r.unwrap();
        assert!((a - 1.78).abs() < 0.01);
        assert!(r.bisected.0 <= a + 1e-6 && r.bisected.1 >= a - 1e-6);
        assert!(!r.stability_below.hurwitz && r.stability_above.hurwitz);
        assert_eq!(r.report.log_neg, 0.0);
    }

    #[test]
    fn tms_zero_equals_open_passive() {
        let p = SystemParams::blue(0.1, 4.5e-3, 1e-3).unwrap();
        let t = FeedbackLoop::two_mode_squeeze(0.0, true).unwrap();
        let q = FeedbackLoop::passive(-1.0, 0.0).unwrap();
        let a = is_hurwitz(&assemble(&p, &env(), Some(&t)));
        let b = is_hurwitz(&assemble(&p, &env(), Some(&q)));
        assert_eq!(a.hurwitz, b.hurwitz);
        assert!((a.abscissa - b.abscissa).abs() < 1e-12);
        let r = tms_stabilization(&p, &env()).unwrap();
        assert!(r.passively_stable && r.analytic_r.is_none());
    }
}
