//! Drivers for cooling, entanglement, squeezing and state-transfer studies.

pub mod cooling;
pub mod entanglement;
pub mod optimize;
pub mod squeezing;
pub mod transfer;

pub use cooling::{
    cooling_sigma_cf, cooling_transient, optimize_cooling_active, optimize_cooling_strong, optimize_cooling_weak,
    sigma_m_opt, ActiveCoolingResult, StrongCoolingPoint, WeakCoolingResult,
};
pub use entanglement::{
    blue_threshold, entanglement_sweep, entanglement_vs_squeezing, kappa_eff_threshold_bisect, tms_stabilization,
    TmsStabilization,
};
pub use optimize::{Grid, OptimizeOptions, Scale};
pub use squeezing::{optical_eigenvalue_crossing, squeezing_stability_boundary, squeezing_sweep};
pub use transfer::{state_transfer, transfer_sweep, TransferOptions, TransferResult};

use crate::dynamics::{assemble, is_hurwitz, lyapunov_steady_state, Stability};
use crate::error::Result;
use crate::feedback::FeedbackLoop;
use crate::gaussian::{log_negativity_bits, mean_occupancy, min_quadrature_eigenvalue, CovarianceMatrix};
use crate::model::{NoiseEnvironment, SystemParams};
use crate::table::{Cell, Metrics, Provenance, Row};

/// Steady-state figures of merit of one configuration. Everything except the
/// stability record is `None` when the drift is not Hurwitz.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    pub stability: Stability,
    pub sigma: Option<CovarianceMatrix>,
    pub occupancy: Option<f64>,
    /// In bits; zero when unstable.
    pub log_neg: f64,
    pub min_opt_eig: Option<f64>,
    pub min_mech_eig: Option<f64>,
}

impl SteadyReport {
    pub fn stable(&self) -> bool {
        self.stability.hurwitz
    }

    /// Table metrics with every steady-state column filled.
    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics {
            occupancy: self.occupancy.into(),
            log_neg: Cell::Value(self.log_neg),
            min_opt_eig: self.min_opt_eig.into(),
            min_mech_eig: self.min_mech_eig.into(),
            v_min: Cell::Absent,
            abscissa: Cell::Value(self.stability.abscissa),
        };
        if !self.stable() {
            m.occupancy = Cell::Unstable;
            m.min_opt_eig = Cell::Unstable;
            m.min_mech_eig = Cell::Unstable;
            m.mark_unstable();
        }
        m
    }

    pub fn row(&self, axes: Vec<f64>, extras: Vec<Cell>, prov: Provenance) -> Row {
        Row { axes, stable: self.stable(), metrics: self.metrics(), extras, provenance: prov }
    }
}

pub fn steady_report(params: &SystemParams, env: &NoiseEnvironment, lp: Option<&FeedbackLoop>) -> Result<SteadyReport> {
    let dy = assemble(params, env, lp);
    let stability = is_hurwitz(&dy);
    if !stability.hurwitz {
        return Ok(SteadyReport {
            stability,
            sigma: None,
            occupancy: None,
            log_neg: 0.0,
            min_opt_eig: None,
            min_mech_eig: None,
        });
    }
    let sigma = lyapunov_steady_state(&dy)?;
    let occupancy = mean_occupancy(&sigma.mode(1))?;
    let log_neg = log_negativity_bits(&sigma)?;
    let min_opt_eig = min_quadrature_eigenvalue(&sigma.mode(0))?;
    let min_mech_eig = min_quadrature_eigenvalue(&sigma.mode(1))?;
    Ok(SteadyReport {
        stability,
        sigma: Some(sigma),
        occupancy: Some(occupancy),
        log_neg,
        min_opt_eig: Some(min_opt_eig),
        min_mech_eig: Some(min_mech_eig),
    })
}

pub fn provenance(params: &SystemParams, env: &NoiseEnvironment, lp: Option<&FeedbackLoop>) -> Provenance {
    Provenance { params: *params, env: *env, feedback: lp.map(|l| l.kind()) }
}
