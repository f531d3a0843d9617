//! Sideband cooling with passive and squeezing loops.

use crate::dynamics::{assemble, integrate};
use crate::error::{Error, Result};
use crate::feedback::FeedbackLoop;
use crate::gaussian::{mean_occupancy, occupancy_from_eigenvalue, CovarianceMatrix};
use crate::model::{NoiseEnvironment, SystemParams};

use super::optimize::{minimize2, Grid, OptimizeOptions};
use super::steady_report;

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be non-negative"))
    }
}

/// Closed-form mechanical eigenvalue of the red-sideband steady state under a
/// passive loop with effective loss `κ_eff` and phase component `b`.
pub fn cooling_sigma_cf(kappa_eff: f64, b: f64, kappa: f64, g: f64, gamma_m: f64, n_l: f64, n_m: f64) -> Result<f64> {
    for (name, v) in [("kappa_eff", kappa_eff), ("kappa", kappa), ("G", g), ("Gamma_m", gamma_m)] {
        check_rate(name, v)?;
    }
    if !b.is_finite() || !n_l.is_finite() || !n_m.is_finite() {
        return Err(Error::invalid("b, N_l, N_m", "must be finite"));
    }
    let s = gamma_m + kappa_eff;
    let det = 16.0 * b * b * kappa * kappa + s * s;
    let num = gamma_m * kappa_eff * det * n_m + 4.0 * g * g * s * (kappa_eff * n_l + gamma_m * n_m);
    let den = 4.0 * g * g * s * s + gamma_m * kappa_eff * det;
    if !(den > 0.0) {
        return Err(Error::invalid("rates", "leave the mechanical steady state undetermined (zero denominator)"));
    }
    Ok(num / den)
}

/// Mechanical eigenvalue at the optimum `b = 0`, `κ_eff = 2G`.
pub fn sigma_m_opt(g: f64, gamma_m: f64, n_l: f64, n_m: f64) -> f64 {
    (4.0 * g * g * n_l + gamma_m * (4.0 * g + gamma_m) * n_m) / (2.0 * g + gamma_m).powi(2)
}

fn passive_occupancy(params: &SystemParams, env: &NoiseEnvironment, a: f64, b: f64) -> f64 {
    if a * a + b * b > 1.0 {
        return f64::INFINITY;
    }
    let Ok(lp) = FeedbackLoop::passive(a, b) else { return f64::INFINITY };
    match steady_report(params, env, Some(&lp)) {
        Ok(r) => r.occupancy.unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakCoolingResult {
    /// Analytic optimum `a = 1 − G/κ` (or the boundary `a = −1`).
    pub a: f64,
    pub b: f64,
    pub kappa_eff: f64,
    /// Lyapunov occupancy at the analytic optimum.
    pub occupancy: f64,
    pub sigma_m: f64,
    /// Grid search plus refinement over `(a, b)`.
    pub search_a: f64,
    pub search_b: f64,
    pub search_occupancy: f64,
    pub warning: Option<String>,
}

pub fn optimize_cooling_weak(params: &SystemParams, env: &NoiseEnvironment, opts: &OptimizeOptions) -> Result<WeakCoolingResult> {
    let (g, k) = (params.g_lin, params.kappa);
    if !(k > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let (a, warning) = if g < 2.0 * k {
        (1.0 - g / k, None)
    } else {
        (-1.0, Some(format!("G = {g} ≥ 2κ = {}: κ_eff = 2G is out of reach, using the boundary a = -1", 2.0 * k)))
    };
    let lp = FeedbackLoop::passive(a, 0.0)?;
    let rep = steady_report(params, env, Some(&lp))?;
    let occupancy = rep.occupancy.ok_or(Error::NotHurwitz { abscissa: rep.stability.abscissa })?;
    let sigma_m = 2.0 * occupancy + 1.0;

    let axis = Grid::linear(-1.0, 1.0, opts.points)?.values();
    let opt = minimize2(|x, y| passive_occupancy(params, env, x, y), &axis, &axis, opts)?;
    Ok(WeakCoolingResult {
        a,
        b: 0.0,
        kappa_eff: 2.0 * k * (1.0 - a),
        occupancy,
        sigma_m,
        search_a: opt.x,
        search_b: opt.y,
        search_occupancy: opt.value,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongCoolingPoint {
    pub g: f64,
    pub kappa_eff: f64,
    pub b: f64,
    pub occupancy: f64,
    /// Single-interface cavity with loss `κ` and no loop.
    pub baseline_occupancy: Option<f64>,
}

/// Per coupling `G`, minimizes the occupancy over `κ_eff ∈ (0, min(4κ, cap)]`
/// and the admissible loop phase `b`.
pub fn optimize_cooling_strong(
    params: &SystemParams,
    env: &NoiseEnvironment,
    g_values: &[f64],
    kappa_eff_cap: f64,
    opts: &OptimizeOptions,
) -> Result<Vec<StrongCoolingPoint>> {
    let k = params.kappa;
    if !(k > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    if !(kappa_eff_cap > 0.0) {
        return Err(Error::invalid("kappa_eff_cap", "must be positive"));
    }
    let kmax = (4.0 * k).min(kappa_eff_cap);
    let ke_axis = Grid::linear(kmax / opts.points as f64, kmax, opts.points)?.values();
    let u_axis = Grid::linear(-1.0, 1.0, opts.points)?.values();
    let mut out = Vec::with_capacity(g_values.len());
    for &g in g_values {
        let p = params.with_g(g)?;
        // b = u·√(1 − a²) keeps every (κ_eff, u) inside the passive disc
        let f = |ke: f64, u: f64| {
            let a = 1.0 - ke / (2.0 * k);
            let b = u * (1.0 - a * a).max(0.0).sqrt();
            passive_occupancy(&p, env, a, b)
        };
        let opt = minimize2(f, &ke_axis, &u_axis, opts)
            .map_err(|_| Error::Numerical(format!("no stable loop setting for G = {g}")))?;
        let a = 1.0 - opt.x / (2.0 * k);
        let baseline = steady_report(&p, env, None)?.occupancy;
        out.push(StrongCoolingPoint {
            g,
            kappa_eff: opt.x,
            b: opt.y * (1.0 - a * a).max(0.0).sqrt(),
            occupancy: opt.value,
            baseline_occupancy: baseline,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveCoolingResult {
    pub eta: f64,
    pub z: f64,
    pub occupancy: f64,
    pub grid_eta: f64,
    pub grid_z: f64,
    pub grid_occupancy: f64,
    pub grid_index: (usize, usize),
    pub z_axis: Vec<f64>,
    /// Occupancy of the analytic passive optimum, when reachable.
    pub passive_optimum: Option<f64>,
}

/// Squeeze-loss loops: grid over `η ∈ [0, 1]` and log-spaced `z ∈ [1/3, 3]`,
/// then refinement in the best cell.
pub fn optimize_cooling_active(params: &SystemParams, env: &NoiseEnvironment, opts: &OptimizeOptions) -> Result<ActiveCoolingResult> {
    let etas = Grid::linear(0.0, 1.0, opts.points)?.values();
    let zs = Grid::log(1.0 / 3.0, 3.0, opts.points)?.values();
    let f = |eta: f64, z: f64| {
        let Ok(lp) = FeedbackLoop::squeeze_loss(eta, z) else { return f64::INFINITY };
        match steady_report(params, env, Some(&lp)) {
            Ok(r) => r.occupancy.unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let opt = minimize2(f, &etas, &zs, opts)?;
    let (g, k) = (params.g_lin, params.kappa);
    let passive_optimum = (g < 2.0 * k).then(|| occupancy_from_eigenvalue(sigma_m_opt(g, params.gamma_m, env.n_l, env.n_m)));
    Ok(ActiveCoolingResult {
        eta: opt.x,
        z: opt.y,
        occupancy: opt.value,
        grid_eta: opt.grid_best.0,
        grid_z: opt.grid_best.1,
        grid_occupancy: opt.grid_best.2,
        grid_index: opt.grid_index,
        z_axis: zs,
        passive_optimum,
    })
}

/// Mechanical occupancy over time from the uncoupled thermal state
/// `N_l·1 ⊕ N_m·1`.
pub fn cooling_transient(
    params: &SystemParams,
    env: &NoiseEnvironment,
    lp: Option<&FeedbackLoop>,
    t_final: f64,
    dt_out: f64,
) -> Result<Vec<(f64, f64)>> {
    let dy = assemble(params, env, lp);
    let s0 = CovarianceMatrix::product(&CovarianceMatrix::thermal(1, env.n_l), &CovarianceMatrix::thermal(1, env.n_m));
    let ts = integrate(&dy, &s0, t_final, dt_out)?;
    ts.times
        .iter()
        .zip(&ts.states)
        .map(|(&t, s)| Ok((t, mean_occupancy(&s.mode(1))?)))
        .collect()
}

/// First sample time at which the occupancy drops to `level` or below.
pub fn crossing_time(series: &[(f64, f64)], level: f64) -> Option<f64> {
    series.iter().find(|(_, n)| *n <= level).map(|(t, _)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::lyapunov_steady_state;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_reductions() {
        let (g, gm, nl, nm) = (1e-3, 1e-5, 1.0, 200.0);
        let v = cooling_sigma_cf(2.0 * g, 0.0, 0.1, g, gm, nl, nm).unwrap();
        assert_relative_eq!(v, sigma_m_opt(g, gm, nl, nm), max_relative = 1e-14);
        assert_relative_eq!(cooling_sigma_cf(0.02, 0.3, 0.1, 0.0, gm, nl, nm).unwrap(), nm, max_relative = 1e-14);
        assert!(cooling_sigma_cf(0.0, 0.0, 0.1, 0.0, 0.0, nl, nm).is_err());
        assert_relative_eq!(occupancy_from_eigenvalue(sigma_m_opt(g, gm, nl, nm)), 0.98759, epsilon = 1e-5);
    }

    #[test]
    fn closed_form_matches_lyapunov() {
        let p = SystemParams::red(0.1, 3e-3, 2e-4).unwrap();
        let env = NoiseEnvironment::new(1.5, 40.0).unwrap();
        let (a, b) = (0.93, 0.2);
        let lp = FeedbackLoop::passive(a, b).unwrap();
        let s = lyapunov_steady_state(&assemble(&p, &env, Some(&lp))).unwrap();
        let cf = cooling_sigma_cf(2.0 * 0.1 * (1.0 - a), b, 0.1, 3e-3, 2e-4, 1.5, 40.0).unwrap();
        assert_relative_eq!(s.block(1, 1)[(0, 0)], cf, max_relative = 1e-10);
        assert!(s.block(1, 1)[(0, 1)].abs() < 1e-10 * cf);
    }

    #[test]
    fn weak_optimum() {
        let p = SystemParams::red(0.1, 1e-3, 1e-5).unwrap();
        let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
        let r = optimize_cooling_weak(&p, &env, &OptimizeOptions { points: 41, ..Default::default() }).unwrap();
        assert_relative_eq!(r.a, 0.99, epsilon = 1e-15);
        assert!((r.occupancy - 0.988).abs() < 0.002);
        assert!(r.occupancy <= r.search_occupancy + 1e-9);
        assert!((r.search_a - 0.99).abs() < 1e-3 && r.search_b.abs() < 1e-2);
        assert!(r.warning.is_none());

        let hot = SystemParams::red(0.1, 0.25, 1e-5).unwrap();
        let r = optimize_cooling_weak(&hot, &env, &OptimizeOptions { points: 11, rounds: 1, ..Default::default() }).unwrap();
        assert_eq!(r.a, -1.0);
        assert!(r.warning.is_some());
    }

    #[test]
    fn weak_damping_limit() {
        // Γ_m → 0: the optimum is limited by the optical noise alone
        let p = SystemParams::red(0.1, 1e-3, 1e-12).unwrap();
        let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
        let lp = FeedbackLoop::passive(0.99, 0.0).unwrap();
        let s = lyapunov_steady_state(&assemble(&p, &env, Some(&lp))).unwrap();
        assert!((s.block(1, 1)[(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn transient_starts_thermal() {
        let p = SystemParams::red(0.1, 1e-3, 1e-5).unwrap();
        let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
        let lp = FeedbackLoop::passive(0.99, 0.0).unwrap();
        let s = cooling_transient(&p, &env, Some(&lp), 2000.0, 100.0).unwrap();
        assert_relative_eq!(s[0].1, 99.5, epsilon = 1e-12);
        assert!(s.last().unwrap().1 < s[0].1);
        assert_eq!(crossing_time(&s, -1.0), None);
    }
}
