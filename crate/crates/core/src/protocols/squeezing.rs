//! Steady-state quadrature squeezing with a squeeze-loss loop.

use crate::dynamics::{assemble, is_hurwitz};
use crate::error::Result;
use crate::feedback::FeedbackLoop;
use crate::model::{NoiseEnvironment, SystemParams};
use crate::table::{Cell, SweepTable};

use super::optimize::{bisect_boundary, par_map};
use super::{provenance, steady_report};

/// Stability and smallest optical and mechanical quadrature eigenvalues
/// against the loop transmission `η` at fixed squeezing `z`.
pub fn squeezing_sweep(params: &SystemParams, env: &NoiseEnvironment, z: f64, etas: &[f64]) -> Result<SweepTable> {
    let rows = par_map(etas, |&eta| -> Result<_> {
        let lp = FeedbackLoop::squeeze_loss(eta, z)?;
        let rep = steady_report(params, env, Some(&lp))?;
        let mut row = rep.row(vec![eta], vec![], provenance(params, env, Some(&lp)));
        row.metrics.occupancy = Cell::Absent;
        row.metrics.log_neg = Cell::Absent;
        Ok(row)
    });
    let mut t = SweepTable::new(&["eta"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

fn stable_at(params: &SystemParams, env: &NoiseEnvironment, eta: f64, z: f64) -> bool {
    FeedbackLoop::squeeze_loss(eta, z).map(|lp| is_hurwitz(&assemble(params, env, Some(&lp))).hurwitz).unwrap_or(false)
}

/// Largest stable `η` in `[lo, hi]` to width `tol`; `lo` must be stable and
/// `hi` unstable.
pub fn squeezing_stability_boundary(
    params: &SystemParams,
    env: &NoiseEnvironment,
    z: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    bisect_boundary(|eta| stable_at(params, env, eta, z), lo, hi, tol)
}

/// `η` at which the smallest optical eigenvalue falls through `level`.
pub fn optical_eigenvalue_crossing(
    params: &SystemParams,
    env: &NoiseEnvironment,
    z: f64,
    level: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let above = |eta: f64| {
        FeedbackLoop::squeeze_loss(eta, z)
            .and_then(|lp| steady_report(params, env, Some(&lp)))
            .ok()
            .and_then(|r| r.min_opt_eig)
            .map_or(false, |v| v >= level)
    };
    bisect_boundary(above, lo, hi, tol)
}
