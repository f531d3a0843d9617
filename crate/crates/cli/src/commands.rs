//! One driver call per command, producing a summary and a table.

use std::fmt;

use covarloop::delay::{delayed_steady_state, DelayedLoopSpec};
use covarloop::dynamics::{assemble, integrate, is_hurwitz, spectral_abscissa, HURWITZ_TOL};
use covarloop::feedback::FeedbackLoop;
use covarloop::gaussian::{log_negativity_bits, mean_occupancy, min_quadrature_eigenvalue, CovarianceMatrix, PureStateSpec};
use covarloop::model::{NoiseConvention, NoiseEnvironment, Regime, SystemParams};
use covarloop::protocols::entanglement::{entanglement_at_margin, passive_entanglement};
use covarloop::protocols::{
    blue_threshold, entanglement_sweep, entanglement_vs_squeezing, optical_eigenvalue_crossing, optimize_cooling_active,
    optimize_cooling_strong, optimize_cooling_weak, provenance, squeezing_stability_boundary, squeezing_sweep,
    steady_report, tms_stabilization, transfer_sweep, Grid, OptimizeOptions, SteadyReport, TransferOptions,
};
use covarloop::table::{Cell, Metrics, Row, SweepTable};
use covarloop::verify;

use crate::config::{Command, ConfigError, RunConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(covarloop::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Core(covarloop::Error::InvalidParameter { .. } | covarloop::Error::DimensionMismatch { .. }) => 1,
            RunError::Core(covarloop::Error::NotHurwitz { .. }) => 2,
            RunError::Core(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Core(e) => e.fmt(f),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<covarloop::Error> for RunError {
    fn from(e: covarloop::Error) -> Self {
        RunError::Core(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// What a successful run hands back for printing.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub table: Option<SweepTable>,
    /// 2 when a required steady state does not exist, 3 when a
    /// verification criterion fails.
    pub exit_code: i32,
}

impl Outcome {
    fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }
}

/// Core parameter errors are reported against the config key that carries
/// the offending value.
fn keyed(cfg: &RunConfig, e: covarloop::Error) -> RunError {
    match e {
        covarloop::Error::InvalidParameter { name, reason } if cfg.contains(&name) => {
            RunError::Config(ConfigError::at(&name, cfg.origin(&name), reason))
        }
        other => RunError::Core(other),
    }
}

fn system(cfg: &RunConfig, default: Regime) -> Result<SystemParams> {
    let regime = match cfg.word("regime") {
        Some(w) => w.parse::<Regime>()?,
        None => default,
    };
    // sweeps over G only need the grid
    let g = match cfg.grid("G") {
        Some(grid) if !cfg.contains("G") => grid.min,
        _ => cfg.require("G")?,
    };
    let mut p = SystemParams::new(regime, cfg.require("kappa")?, g, cfg.require("Gamma_m")?)
        .map_err(|e| keyed(cfg, e))?;
    p.omega_m = cfg.real_or("omega_m", 1.0);
    let side = if regime == Regime::BlueRwa { 1.0 } else { -1.0 };
    p.delta = cfg.real_or("delta", side * p.omega_m);
    p.validated().map_err(|e| keyed(cfg, e))
}

fn environment(cfg: &RunConfig) -> Result<NoiseEnvironment> {
    let conv = match cfg.word("N_convention") {
        Some(w) => w.parse::<NoiseConvention>()?,
        None => NoiseConvention::Covariance,
    };
    // an absent N_l is optical vacuum in either convention
    let n_l = cfg.real("N_l").map_or(1.0, |v| conv.to_covariance(v));
    let n_m = conv.to_covariance(cfg.require("N_m")?);
    NoiseEnvironment::new(n_l, n_m).map_err(|e| keyed(cfg, e))
}

fn feedback(cfg: &RunConfig, params: &SystemParams) -> Result<Option<FeedbackLoop>> {
    let kind = cfg.word("loop").unwrap_or(if cfg.contains("a") || cfg.contains("kappa_eff") { "passive" } else { "none" });
    let lp = match kind {
        "none" => return Ok(None),
        "open" => FeedbackLoop::passive(0.0, 0.0),
        "passive" => match cfg.real("kappa_eff") {
            Some(ke) => FeedbackLoop::passive_for_kappa_eff(ke, params.kappa, cfg.real_or("b", 0.0)),
            None => FeedbackLoop::passive(cfg.require("a")?, cfg.real_or("b", 0.0)),
        },
        "squeeze" => FeedbackLoop::squeeze_loss(cfg.require("eta")?, cfg.require("z")?),
        "tms" => FeedbackLoop::two_mode_squeeze(cfg.real_or("r", 0.0), false),
        "tms-flipped" => FeedbackLoop::two_mode_squeeze(cfg.real_or("r", 0.0), true),
        other => unreachable!("loop kind {other} passed validation"),
    };
    lp.map(Some).map_err(|e| keyed(cfg, e))
}

fn optimize_options(cfg: &RunConfig) -> OptimizeOptions {
    let d = OptimizeOptions::default();
    OptimizeOptions {
        points: cfg.count_or("points", d.points),
        rel_tol: cfg.real_or("rel_tol", d.rel_tol),
        rounds: cfg.count_or("rounds", d.rounds),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "unstable".to_string(), |v| format!("{v:.6}"))
}

fn report_lines(out: &mut Outcome, rep: &SteadyReport) {
    let s = &rep.stability;
    out.line(format!("stable: {} (abscissa {:.6e}, {:?})", if rep.stable() { "yes" } else { "no" }, s.abscissa, s.status));
    out.line(format!("occupancy: {}", fmt_opt(rep.occupancy)));
    out.line(format!("log_neg (bits): {:.6}", rep.log_neg));
    out.line(format!("min optical eigenvalue: {}", fmt_opt(rep.min_opt_eig)));
    out.line(format!("min mechanical eigenvalue: {}", fmt_opt(rep.min_mech_eig)));
}

fn require_stable(out: &mut Outcome, rep: &SteadyReport) {
    if !rep.stable() {
        out.line("no steady state: drift is not Hurwitz");
        out.exit_code = 2;
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    if cfg.command != Command::Verify {
        out.line(format!("command: {}", cfg.command.name()));
    }
    match cfg.command {
        Command::Steady => steady(cfg, &mut out)?,
        Command::Transient => transient(cfg, &mut out)?,
        Command::CoolingWeak => cooling_weak(cfg, &mut out)?,
        Command::CoolingStrong => cooling_strong(cfg, &mut out)?,
        Command::CoolingActive => cooling_active(cfg, &mut out)?,
        Command::Delay => delay(cfg, &mut out)?,
        Command::Entangle => entangle(cfg, &mut out)?,
        Command::TmsStabilize => tms(cfg, &mut out)?,
        Command::Squeeze => squeeze(cfg, &mut out)?,
        Command::Transfer => transfer(cfg, &mut out)?,
        Command::Verify => run_verify(cfg, &mut out)?,
    }
    Ok(out)
}

fn steady(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::RedRwa)?;
    let env = environment(cfg)?;
    let lp = feedback(cfg, &p)?;
    let rep = steady_report(&p, &env, lp.as_ref())?;
    out.line(format!("loop: {}", lp.map_or("none".to_string(), |l| l.kind().to_string())));
    report_lines(out, &rep);
    require_stable(out, &rep);
    let mut t = SweepTable::new(&[]);
    t.push(rep.row(vec![], vec![], provenance(&p, &env, lp.as_ref())));
    out.table = Some(t);
    Ok(())
}

fn transient(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::RedRwa)?;
    let env = environment(cfg)?;
    let lp = feedback(cfg, &p)?;
    let t_final = cfg.require("t_final")?;
    let dt = cfg.real_or("dt", t_final / 1000.0);
    let dy = assemble(&p, &env, lp.as_ref());
    let stab = is_hurwitz(&dy);
    let s0 = CovarianceMatrix::product(&CovarianceMatrix::thermal(1, env.n_l), &CovarianceMatrix::thermal(1, env.n_m));
    let ts = integrate(&dy, &s0, t_final, dt)?;
    let mut t = SweepTable::new(&["t"]);
    let mut occupancies = Vec::with_capacity(ts.times.len());
    for (&time, s) in ts.times.iter().zip(&ts.states) {
        let mech = s.mode(1);
        let n = mean_occupancy(&mech)?;
        occupancies.push((time, n));
        t.push(Row {
            axes: vec![time],
            stable: stab.hurwitz,
            metrics: Metrics {
                occupancy: Cell::Value(n),
                log_neg: Cell::Value(log_negativity_bits(s)?),
                min_opt_eig: Cell::Value(min_quadrature_eigenvalue(&s.mode(0))?),
                min_mech_eig: Cell::Value(min_quadrature_eigenvalue(&mech)?),
                v_min: Cell::Absent,
                abscissa: Cell::Value(stab.abscissa),
            },
            extras: vec![],
            provenance: provenance(&p, &env, lp.as_ref()),
        });
    }
    out.line(format!("samples: {}", occupancies.len()));
    if let Some(&(tl, nl)) = occupancies.last() {
        out.line(format!("occupancy at t = {tl}: {nl:.6}"));
    }
    out.line(format!("abscissa: {:.6e}", stab.abscissa));
    if let Some(level) = cfg.real("level") {
        match occupancies.iter().find(|(_, n)| *n <= level) {
            Some((tc, _)) => out.line(format!("first time with occupancy <= {level}: {tc}")),
            None => out.line(format!("occupancy stays above {level} up to t = {t_final}")),
        }
    }
    out.table = Some(t);
    Ok(())
}

fn cooling_weak(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::RedRwa)?;
    let env = environment(cfg)?;
    let r = optimize_cooling_weak(&p, &env, &optimize_options(cfg))?;
    if let Some(w) = &r.warning {
        out.line(format!("warning: {w}"));
    }
    out.line(format!("optimal a: {:.6}", r.a));
    out.line(format!("optimal b: {:.6}", r.b));
    out.line(format!("kappa_eff: {:.6e}", r.kappa_eff));
    out.line(format!("occupancy: {:.6}", r.occupancy));
    out.line(format!("mechanical eigenvalue: {:.6}", r.sigma_m));
    out.line(format!("grid search: a = {:.6}, b = {:.6}, occupancy = {:.6}", r.search_a, r.search_b, r.search_occupancy));
    let b = cfg.real_or("b", 0.0);
    let kes = match cfg.grid("kappa_eff") {
        Some(g) => g.values(),
        None => vec![r.kappa_eff],
    };
    let mut t = SweepTable::new(&["kappa_eff"]);
    for ke in kes {
        let lp = FeedbackLoop::passive_for_kappa_eff(ke, p.kappa, b).map_err(|e| keyed(cfg, e))?;
        let rep = steady_report(&p, &env, Some(&lp))?;
        t.push(rep.row(vec![ke], vec![], provenance(&p, &env, Some(&lp))));
    }
    out.table = Some(t);
    Ok(())
}

fn cooling_strong(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::FullLinearized)?;
    let env = environment(cfg)?;
    let gs = cfg.grid("G").expect("required key checked").values();
    let cap = cfg.real_or("cap", 0.1);
    let two = cfg.word("baseline") == Some("two");
    let pts = optimize_cooling_strong(&p, &env, &gs, cap, &optimize_options(cfg))?;
    let mut t = SweepTable::new(&["G"])
        .with_extras(&["kappa_eff_opt", "b_opt", "baseline_occupancy"])
        .with_constant("kappa_eff_cap", cap);
    out.line(format!("baseline: {}", if two { "two-interface open loop" } else { "single interface" }));
    for pt in &pts {
        let pg = p.with_g(pt.g)?;
        let baseline = if two {
            steady_report(&pg, &env, Some(&FeedbackLoop::passive(0.0, 0.0)?))?.occupancy
        } else {
            pt.baseline_occupancy
        };
        let a = 1.0 - pt.kappa_eff / (2.0 * p.kappa);
        let lp = FeedbackLoop::passive(a, pt.b)?;
        let rep = steady_report(&pg, &env, Some(&lp))?;
        let base_cell = baseline.map_or(Cell::Unstable, Cell::Value);
        t.push(rep.row(vec![pt.g], vec![Cell::Value(pt.kappa_eff), Cell::Value(pt.b), base_cell], provenance(&pg, &env, Some(&lp))));
        out.line(format!(
            "G = {:.4e}: occupancy {:.6} at kappa_eff = {:.6e}, b = {:.4}; baseline {}",
            pt.g,
            pt.occupancy,
            pt.kappa_eff,
            pt.b + 0.0,
            fmt_opt(baseline)
        ));
    }
    out.table = Some(t);
    Ok(())
}

fn cooling_active(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::RedRwa)?;
    let env = environment(cfg)?;
    let r = optimize_cooling_active(&p, &env, &optimize_options(cfg))?;
    out.line(format!("optimal eta: {:.6}", r.eta));
    out.line(format!("optimal z: {:.6}", r.z));
    out.line(format!("occupancy: {:.6}", r.occupancy));
    out.line(format!("grid optimum: eta = {:.6}, z = {:.6}, occupancy = {:.6}", r.grid_eta, r.grid_z, r.grid_occupancy));
    if let Some(po) = r.passive_optimum {
        out.line(format!("passive optimum occupancy: {po:.6}"));
    }
    let lp = FeedbackLoop::squeeze_loss(r.eta, r.z)?;
    let rep = steady_report(&p, &env, Some(&lp))?;
    let mut t = SweepTable::new(&["eta", "z"]);
    t.push(rep.row(vec![r.eta, r.z], vec![], provenance(&p, &env, Some(&lp))));
    out.table = Some(t);
    Ok(())
}

fn delay(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::RedRwa)?;
    let env = environment(cfg)?;
    let a = match cfg.real("a") {
        Some(a) => a,
        None if p.g_lin < 2.0 * p.kappa => 1.0 - p.g_lin / p.kappa,
        None => 0.0,
    };
    let taus = match cfg.grid("tau") {
        Some(g) => g.values(),
        None => vec![cfg.require("tau")?],
    };
    out.line(format!("a: {a:.6}"));
    let mut t = SweepTable::new(&["tau"]).with_extras(&["cutoff", "quadrature_error", "imag_residue"]);
    let lp = FeedbackLoop::passive(a, 0.0).map_err(|e| keyed(cfg, e))?;
    let undelayed = spectral_abscissa(&DelayedLoopSpec::new(a, 0.0, p, env).map_err(|e| keyed(cfg, e))?.instantaneous_drift());
    if undelayed >= -HURWITZ_TOL {
        out.line(format!("warning: the undelayed loop is unstable (abscissa {undelayed:.3e}); delayed results are only checked a posteriori"));
    }
    for tau in taus {
        let spec = DelayedLoopSpec::new(a, tau, p, env).map_err(|e| keyed(cfg, e))?;
        let r = delayed_steady_state(&spec)?;
        let s = &r.sigma;
        let occ = mean_occupancy(&s.mode(1))?;
        out.line(format!("tau = {tau}: occupancy {occ:.6}"));
        t.push(Row {
            axes: vec![tau],
            stable: true,
            metrics: Metrics {
                occupancy: Cell::Value(occ),
                log_neg: Cell::Value(log_negativity_bits(s)?),
                min_opt_eig: Cell::Value(min_quadrature_eigenvalue(&s.mode(0))?),
                min_mech_eig: Cell::Value(min_quadrature_eigenvalue(&s.mode(1))?),
                ..Default::default()
            },
            extras: vec![Cell::Value(r.cutoff), Cell::Value(r.quadrature_error), Cell::Value(r.imag_residue)],
            provenance: provenance(&p, &env, Some(&lp)),
        });
    }
    out.table = Some(t);
    Ok(())
}

fn entangle(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::BlueRwa)?;
    let env = environment(cfg)?;
    let threshold = blue_threshold(p.g_lin, p.gamma_m);
    out.line(format!("stability threshold 4G^2/Gamma_m: {threshold:.6e}"));
    if let Some(zg) = cfg.grid("z") {
        let etas = cfg.grid("eta").unwrap_or(Grid::linear(0.0, 1.0, 101)?).values();
        let t = entanglement_vs_squeezing(&p, &env, &zg.values(), &etas)?;
        let best = t
            .rows
            .iter()
            .filter(|r| r.stable)
            .max_by(|a, b| a.metrics.log_neg.value().unwrap_or(0.0).total_cmp(&b.metrics.log_neg.value().unwrap_or(0.0)));
        match best {
            Some(r) => out.line(format!("largest log_neg (bits): {:.6} at z = {:.6}", r.metrics.log_neg.value().unwrap_or(0.0), r.axes[0])),
            None => out.line("no stable point on the grid"),
        }
        out.table = Some(t);
        return Ok(());
    }
    if let Some(kg) = cfg.grid("kappa_eff") {
        let t = entanglement_sweep(&p, &env, &kg.values())?;
        let best = t
            .rows
            .iter()
            .filter(|r| r.stable)
            .max_by(|a, b| a.metrics.log_neg.value().unwrap_or(0.0).total_cmp(&b.metrics.log_neg.value().unwrap_or(0.0)));
        match best {
            Some(r) => out.line(format!("largest log_neg (bits): {:.6} at kappa_eff = {:.6e}", r.metrics.log_neg.value().unwrap_or(0.0), r.axes[0])),
            None => out.line("no stable point on the grid"),
        }
        out.table = Some(t);
        return Ok(());
    }
    let (ke, rep) = match cfg.real("kappa_eff") {
        Some(ke) => (ke, passive_entanglement(&p, &env, ke).map_err(|e| keyed(cfg, e))?),
        None => {
            let margin = cfg.real_or("margin", 1e-3);
            (threshold * (1.0 + margin), entanglement_at_margin(&p, &env, margin).map_err(|e| keyed(cfg, e))?)
        }
    };
    out.line(format!("kappa_eff: {ke:.6e}"));
    report_lines(out, &rep);
    require_stable(out, &rep);
    let lp = FeedbackLoop::passive_for_kappa_eff(ke, p.kappa, 0.0)?;
    let mut t = SweepTable::new(&["kappa_eff"]);
    t.push(rep.row(vec![ke], vec![], provenance(&p, &env, Some(&lp))));
    out.table = Some(t);
    Ok(())
}

fn tms(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::BlueRwa)?;
    let env = environment(cfg)?;
    let r = tms_stabilization(&p, &env)?;
    if r.passively_stable {
        out.line("flipped loop is stable at r = 0: stabilizable passively");
    }
    match r.analytic_r {
        Some(a) => out.line(format!("analytic threshold r*: {a:.6}")),
        None => out.line("analytic threshold r*: none (cosh argument below 1)"),
    }
    out.line(format!("bisected Hurwitz switch: [{:.7}, {:.7}]", r.bisected.0, r.bisected.1));
    out.line(format!("stable just below: {}, just above: {}", r.stability_below.hurwitz, r.stability_above.hurwitz));
    let r_star = r.analytic_r.unwrap_or(0.5 * (r.bisected.0 + r.bisected.1));
    let r_eval = r_star * (1.0 + 1e-3);
    out.line(format!("at r = {r_eval:.6}:"));
    report_lines(out, &r.report);
    require_stable(out, &r.report);
    let lp = FeedbackLoop::two_mode_squeeze(r_eval, true)?;
    let mut t = SweepTable::new(&["r"]);
    t.push(r.report.row(vec![r_eval], vec![], provenance(&p, &env, Some(&lp))));
    out.table = Some(t);
    Ok(())
}

fn squeeze(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::RedRwa)?;
    let env = environment(cfg)?;
    let z = cfg.require("z")?;
    let etas = cfg.grid("eta").unwrap_or(Grid::linear(0.0, 1.0, 201)?).values();
    let level = cfg.real_or("level", 0.5);
    let t = squeezing_sweep(&p, &env, z, &etas)?;
    let tol = 1e-7;
    for (w, r) in etas.windows(2).zip(t.rows.windows(2)) {
        if r[0].stable && !r[1].stable {
            let (lo, hi) = squeezing_stability_boundary(&p, &env, z, w[0], w[1], tol)?;
            out.line(format!("stability boundary: eta = {:.6}", 0.5 * (lo + hi)));
        }
        let above = |row: &Row| row.metrics.min_opt_eig.value().is_some_and(|v| v >= level);
        if above(&r[0]) && r[1].stable && !above(&r[1]) {
            let (lo, hi) = optical_eigenvalue_crossing(&p, &env, z, level, w[0], w[1], tol)?;
            out.line(format!("min optical eigenvalue falls below {level} at eta = {:.6}", 0.5 * (lo + hi)));
        }
    }
    let stable: Vec<&Row> = t.rows.iter().filter(|r| r.stable).collect();
    out.line(format!("stable grid points: {} of {}", stable.len(), t.rows.len()));
    if let Some(best) = stable.iter().min_by(|a, b| {
        a.metrics.min_opt_eig.value().unwrap_or(f64::INFINITY).total_cmp(&b.metrics.min_opt_eig.value().unwrap_or(f64::INFINITY))
    }) {
        out.line(format!(
            "smallest optical eigenvalue on the grid: {:.6} at eta = {:.6}",
            best.metrics.min_opt_eig.value().unwrap_or(f64::NAN),
            best.axes[0]
        ));
    }
    out.table = Some(t);
    Ok(())
}

fn transfer(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let p = system(cfg, Regime::FullLinearized)?;
    let env = environment(cfg)?;
    let target = PureStateSpec::new(cfg.real_or("theta", 0.0), cfg.require("z")?).map_err(|e| keyed(cfg, e))?;
    let d = TransferOptions::default();
    let opts = TransferOptions {
        theta_samples: cfg.count_or("theta_samples", d.theta_samples),
        steps_per_period: cfg.count_or("steps_per_period", d.steps_per_period),
        periods: cfg.real_or("periods", d.periods),
    };
    let kes = match cfg.grid("kappa_eff") {
        Some(g) => g.values(),
        None => vec![cfg.require("kappa_eff")?],
    };
    let t = transfer_sweep(&p, &env, target, &kes, &opts)?;
    for pair in t.rows.chunks(2) {
        let (prep, base) = (&pair[0], &pair[1]);
        out.line(format!(
            "kappa_eff = {:.4e}: V_min prepared {:.6}, thermal {:.6}",
            prep.axes[0],
            prep.metrics.v_min.value().unwrap_or(f64::NAN),
            base.metrics.v_min.value().unwrap_or(f64::NAN)
        ));
    }
    if let Some(best) = t
        .rows
        .iter()
        .filter(|r| r.axes[1] == 0.0)
        .min_by(|a, b| a.metrics.v_min.value().unwrap_or(f64::INFINITY).total_cmp(&b.metrics.v_min.value().unwrap_or(f64::INFINITY)))
    {
        out.line(format!(
            "best prepared-optics transfer: V_min {:.6} at kappa_eff = {:.4e}",
            best.metrics.v_min.value().unwrap_or(f64::NAN),
            best.axes[0]
        ));
    }
    out.table = Some(t);
    Ok(())
}

fn run_verify(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let reports = match cfg.count("criterion") {
        Some(id) => vec![u8::try_from(id)
            .ok()
            .and_then(verify::run)
            .ok_or_else(|| ConfigError::at("criterion", cfg.origin("criterion"), "must be between 1 and 10"))?],
        None => verify::run_all(),
    };
    let failed = reports.iter().filter(|r| !r.passed).count();
    for r in &reports {
        out.summary.extend(r.to_string().lines().map(str::to_string));
    }
    out.line(format!("{} of {} criteria passed", reports.len() - failed, reports.len()));
    if failed > 0 {
        out.exit_code = 3;
    }
    Ok(())
}
