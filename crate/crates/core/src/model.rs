//! System Hamiltonians and bare environment couplings for one optical and
//! one mechanical mode. Frequencies are in units of the mechanical frequency.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix4};

use crate::error::{Error, Result};
use crate::gaussian::omega1;

/// Which Hamiltonian drives the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Beam-splitter interaction `G(a†b + ab†)` in the interaction picture.
    RedRwa,
    /// Two-mode squeezing interaction `G(ab + a†b†)` in the interaction picture.
    BlueRwa,
    /// Lab-frame `−Δ/2 (x_l² + p_l²) + ω_m/2 (x_m² + p_m²) + 2G x_l x_m`.
    FullLinearized,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::RedRwa => "red",
            Regime::BlueRwa => "blue",
            Regime::FullLinearized => "full",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" | "red-rwa" | "redrwa" => Ok(Regime::RedRwa),
            "blue" | "blue-rwa" | "bluerwa" => Ok(Regime::BlueRwa),
            "full" | "full-linearized" | "fulllinearized" => Ok(Regime::FullLinearized),
            other => Err(Error::invalid("regime", format!("unknown value {other:?} (expected red, blue or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega_m: f64,
    /// Laser detuning `Δ = ω_L − ω_l`; only read in the full regime.
    pub delta: f64,
    /// Linearized coupling `G`.
    pub g_lin: f64,
    /// Loss rate of each cavity interface.
    pub kappa: f64,
    pub gamma_m: f64,
    pub regime: Regime,
}

impl SystemParams {
    pub fn new(regime: Regime, kappa: f64, g_lin: f64, gamma_m: f64) -> Result<Self> {
        let delta = match regime {
            Regime::BlueRwa => 1.0,
            _ => -1.0,
        };
        SystemParams { omega_m: 1.0, delta, g_lin, kappa, gamma_m, regime }.validated()
    }

    pub fn red(kappa: f64, g_lin: f64, gamma_m: f64) -> Result<Self> {
        Self::new(Regime::RedRwa, kappa, g_lin, gamma_m)
    }

    pub fn blue(kappa: f64, g_lin: f64, gamma_m: f64) -> Result<Self> {
        Self::new(Regime::BlueRwa, kappa, g_lin, gamma_m)
    }

    /// Full linearized dynamics driven on the red sideband, `Δ = −ω_m`.
    pub fn full_red(kappa: f64, g_lin: f64, gamma_m: f64) -> Result<Self> {
        Self::new(Regime::FullLinearized, kappa, g_lin, gamma_m)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validated()
    }

    pub fn with_g(mut self, g_lin: f64) -> Result<Self> {
        self.g_lin = g_lin;
        self.validated()
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be non-negative"))
            }
        };
        if !(self.omega_m > 0.0 && self.omega_m.is_finite()) {
            return Err(Error::invalid("omega_m", "must be positive"));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        nonneg("G", self.g_lin)?;
        nonneg("kappa", self.kappa)?;
        nonneg("Gamma_m", self.gamma_m)?;
        Ok(self)
    }
}

/// Noise of the thermal inputs, as covariance eigenvalues `N = 2n̄ + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEnvironment {
    pub n_l: f64,
    pub n_m: f64,
}

/// How an `N` value supplied by a user is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseConvention {
    /// `N` is the covariance eigenvalue `2n̄ + 1` (the default).
    #[default]
    Covariance,
    /// `N` is the mean excitation number `n̄`.
    Occupancy,
}

impl NoiseConvention {
    pub fn to_covariance(self, value: f64) -> f64 {
        match self {
            NoiseConvention::Covariance => value,
            NoiseConvention::Occupancy => 2.0 * value + 1.0,
        }
    }
}

impl FromStr for NoiseConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "covariance" => Ok(NoiseConvention::Covariance),
            "occupancy" => Ok(NoiseConvention::Occupancy),
            other => Err(Error::invalid("N_convention", format!("unknown value {other:?} (expected covariance or occupancy)"))),
        }
    }
}

impl NoiseEnvironment {
    pub fn new(n_l: f64, n_m: f64) -> Result<Self> {
        for (name, v) in [("N_l", n_l), ("N_m", n_m)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be at least 1 (vacuum)"));
            }
        }
        Ok(NoiseEnvironment { n_l, n_m })
    }

    pub fn with_convention(n_l: f64, n_m: f64, convention: NoiseConvention) -> Result<Self> {
        Self::new(convention.to_covariance(n_l), convention.to_covariance(n_m))
    }

    /// Block-diagonal input covariance for the given channels.
    pub fn input_covariance(&self, channels: &[Channel]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * channels.len(), 2 * channels.len());
        for (k, ch) in channels.iter().enumerate() {
            let n = match ch.kind {
                ChannelKind::Mechanical => self.n_m,
                _ => self.n_l,
            };
            m[(2 * k, 2 * k)] = n;
            m[(2 * k + 1, 2 * k + 1)] = n;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Input at a cavity interface.
    Optical,
    /// Ancilla mixed in by a feedback loop.
    Ancilla,
    Mechanical,
}

/// One environmental input mode and the rate at which it couples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub label: &'static str,
    pub kind: ChannelKind,
    pub rate: f64,
}

pub(crate) fn single_interface_channels(p: &SystemParams) -> Vec<Channel> {
    vec![
        Channel { label: "l1", kind: ChannelKind::Optical, rate: p.kappa },
        Channel { label: "m", kind: ChannelKind::Mechanical, rate: p.gamma_m },
    ]
}

pub(crate) fn two_interface_channels(p: &SystemParams) -> Vec<Channel> {
    vec![
        Channel { label: "l1", kind: ChannelKind::Optical, rate: p.kappa },
        Channel { label: "l2", kind: ChannelKind::Optical, rate: p.kappa },
        Channel { label: "m", kind: ChannelKind::Mechanical, rate: p.gamma_m },
    ]
}

/// Symmetric matrix `H` of the quadratic Hamiltonian `½ rᵀ H r`.
pub fn hamiltonian_matrix(params: &SystemParams) -> Matrix4<f64> {
    let g = params.g_lin;
    let mut h = Matrix4::zeros();
    match params.regime {
        Regime::RedRwa => {
            // G(x_l x_m + p_l p_m)
            h[(0, 2)] = g;
            h[(2, 0)] = g;
            h[(1, 3)] = g;
            h[(3, 1)] = g;
        }
        Regime::BlueRwa => {
            // G(x_l x_m − p_l p_m)
            h[(0, 2)] = g;
            h[(2, 0)] = g;
            h[(1, 3)] = -g;
            h[(3, 1)] = -g;
        }
        Regime::FullLinearized => {
            h[(0, 0)] = -params.delta;
            h[(1, 1)] = -params.delta;
            h[(2, 2)] = params.omega_m;
            h[(3, 3)] = params.omega_m;
            h[(0, 2)] = 2.0 * g;
            h[(2, 0)] = 2.0 * g;
        }
    }
    h
}

/// Coupling of the bare cavity: `√κ Ω₁ᵀ ⊕ √Γ_m Ω₁ᵀ` (4×4), or with two
/// optical interfaces of strength `κ` each (4×6).
pub fn bare_coupling_matrix(params: &SystemParams, two_optical_interfaces: bool) -> DMatrix<f64> {
    let ot = omega1().transpose();
    let sk = params.kappa.sqrt();
    let sg = params.gamma_m.sqrt();
    let cols = if two_optical_interfaces { 6 } else { 4 };
    let mut c = DMatrix::zeros(4, cols);
    c.fixed_view_mut::<2, 2>(0, 0).copy_from(&(ot * sk));
    if two_optical_interfaces {
        c.fixed_view_mut::<2, 2>(0, 2).copy_from(&(ot * sk));
    }
    c.fixed_view_mut::<2, 2>(2, cols - 2).copy_from(&(ot * sg));
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    #[test]
    fn red_and_blue_blocks() {
        let red = hamiltonian_matrix(&SystemParams::red(0.1, 1e-3, 1e-5).unwrap());
        assert_eq!(Matrix2::from(red.fixed_view::<2, 2>(0, 2)), Matrix2::identity() * 1e-3);
        assert_eq!(Matrix2::from(red.fixed_view::<2, 2>(0, 0)), Matrix2::zeros());
        let blue = hamiltonian_matrix(&SystemParams::blue(0.1, 1e-3, 1e-5).unwrap());
        assert_eq!(Matrix2::from(blue.fixed_view::<2, 2>(0, 2)), Matrix2::new(1e-3, 0.0, 0.0, -1e-3));
        for h in [red, blue] {
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn full_regime_decoupled_is_identity() {
        let p = SystemParams::full_red(0.1, 0.0, 1e-5).unwrap();
        assert_eq!(hamiltonian_matrix(&p), Matrix4::identity());
        let q = p.with_g(0.2).unwrap();
        let h = hamiltonian_matrix(&q);
        assert_eq!(h[(0, 2)], 0.4);
        assert_eq!(h[(1, 3)], 0.0);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn bare_couplings() {
        let p = SystemParams::red(0.1, 1e-3, 1e-5).unwrap();
        let c = bare_coupling_matrix(&p, false);
        assert_eq!(c.shape(), (4, 4));
        assert_eq!(c[(0, 1)], -(0.1f64).sqrt());
        assert_eq!(c[(1, 0)], (0.1f64).sqrt());
        assert_eq!(c[(2, 3)], -(1e-5f64).sqrt());
        let c2 = bare_coupling_matrix(&p, true);
        assert_eq!(c2.shape(), (4, 6));
        assert_eq!(c2.view((0, 0), (2, 2)), c2.view((0, 2), (2, 2)));

        let mech_only = bare_coupling_matrix(&p.with_kappa(0.0).unwrap(), false);
        assert_eq!(mech_only.view((0, 0), (2, 4)).amax(), 0.0);
        assert!(mech_only[(2, 3)] != 0.0);
    }

    #[test]
    fn validation() {
        assert!(SystemParams::red(-1.0, 1e-3, 1e-5).is_err());
        assert!(SystemParams::red(0.1, f64::NAN, 1e-5).is_err());
        assert!(NoiseEnvironment::new(0.5, 10.0).is_err());
        let env = NoiseEnvironment::with_convention(0.0, 100.0, NoiseConvention::Occupancy).unwrap();
        assert_eq!(env.n_m, 201.0);
        assert_eq!(env.n_l, 1.0);
    }

    #[test]
    fn input_covariance_layout() {
        let p = SystemParams::red(0.1, 1e-3, 1e-5).unwrap();
        let env = NoiseEnvironment::new(1.0, 200.0).unwrap();
        let s = env.input_covariance(&two_interface_channels(&p));
        assert_eq!(s.nrows(), 6);
        assert_eq!(s[(3, 3)], 1.0);
        assert_eq!(s[(4, 4)], 200.0);
    }
}
