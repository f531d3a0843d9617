//! In-loop Gaussian CP-maps `(E, F)` acting on the output of the first cavity
//! interface before it re-enters through the second.

use std::fmt;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::gaussian::omega1;
use crate::model::SystemParams;

const CCR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopKind {
    /// Interferometric loop, `E = [[a, b], [−b, a]]`, `F = [[c, d], [−d, c]]`.
    Passive { a: f64, b: f64, c: f64, d: f64 },
    /// Loss `η` followed by single-mode squeezing `z`.
    SqueezeLoss { eta: f64, z: f64 },
    /// Two-mode squeezing with the ancilla, `E = cosh r·1`, `F = sinh r·σ_z`.
    TwoModeSqueeze { r: f64 },
    /// The sign-flipped two-mode squeezing loop `E = −cosh r·1`, `F = −sinh r·σ_z`.
    TwoModeSqueezeFlipped { r: f64 },
    Custom,
}

impl LoopKind {
    pub fn name(&self) -> &'static str {
        match self {
            LoopKind::Passive { .. } => "passive",
            LoopKind::SqueezeLoss { .. } => "squeeze",
            LoopKind::TwoModeSqueeze { .. } => "tms",
            LoopKind::TwoModeSqueezeFlipped { .. } => "tms-flipped",
            LoopKind::Custom => "custom",
        }
    }
}

impl fmt::Display for LoopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopKind::Passive { a, b, .. } => write!(f, "passive(a={a}, b={b})"),
            LoopKind::SqueezeLoss { eta, z } => write!(f, "squeeze(eta={eta}, z={z})"),
            LoopKind::TwoModeSqueeze { r } => write!(f, "tms(r={r})"),
            LoopKind::TwoModeSqueezeFlipped { r } => write!(f, "tms-flipped(r={r})"),
            LoopKind::Custom => f.write_str("custom"),
        }
    }
}

/// A validated feedback map. Every value of this type satisfies
/// `EΩEᵀ + FΩFᵀ = Ω` to `1e-10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackLoop {
    e: Matrix2<f64>,
    f: Matrix2<f64>,
    kind: LoopKind,
}

/// Loss rate and optical noise that an isotropic loop is equivalent to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCavity {
    /// `2κ(1 − a)` for passive loops, `κ_S = 2κ(1 + cosh r)` for flipped TMS.
    pub kappa_eff: f64,
    /// `N_l` for passive loops, `N_S = N_l cosh r` for flipped TMS.
    pub noise: f64,
}

impl FeedbackLoop {
    /// Passive loop with transmission `a` and phase component `b`; the ancilla
    /// mixing is fixed to `c = √(1 − a² − b²)`, `d = 0`.
    pub fn passive(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("a, b", "must be finite"));
        }
        let rest = 1.0 - a * a - b * b;
        if rest < -1e-12 {
            return Err(Error::invalid("a, b", format!("must satisfy a² + b² ≤ 1 (got {})", a * a + b * b)));
        }
        let c = rest.max(0.0).sqrt();
        let e = Matrix2::new(a, b, -b, a);
        let f = Matrix2::new(c, 0.0, 0.0, c);
        Self::checked(e, f, LoopKind::Passive { a, b, c, d: 0.0 })
    }

    /// Passive loop with `b = 0` tuned to the requested effective loss rate,
    /// `a = 1 − κ_eff/(2κ)`.
    pub fn passive_for_kappa_eff(kappa_eff: f64, kappa: f64, b: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        if !(0.0..=4.0 * kappa * (1.0 + 1e-12)).contains(&kappa_eff) {
            return Err(Error::invalid("kappa_eff", format!("must lie in [0, 4κ] = [0, {}]", 4.0 * kappa)));
        }
        let a = (1.0 - kappa_eff / (2.0 * kappa)).clamp(-1.0, 1.0);
        Self::passive(a, b)
    }

    pub fn squeeze_loss(eta: f64, z: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid("eta", "must lie in [0, 1]"));
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::invalid("z", "must be positive"));
        }
        let s = (1.0 - eta * eta).sqrt();
        let e = Matrix2::new(eta * z, 0.0, 0.0, eta / z);
        let f = Matrix2::new(s * z, 0.0, 0.0, s / z);
        Self::checked(e, f, LoopKind::SqueezeLoss { eta, z })
    }

    pub fn two_mode_squeeze(r: f64, flipped: bool) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid("r", "must be non-negative"));
        }
        let sign = if flipped { -1.0 } else { 1.0 };
        let e = Matrix2::identity() * (sign * r.cosh());
        let f = Matrix2::new(1.0, 0.0, 0.0, -1.0) * (sign * r.sinh());
        let kind = if flipped {
            LoopKind::TwoModeSqueezeFlipped { r }
        } else {
            LoopKind::TwoModeSqueeze { r }
        };
        Self::checked(e, f, kind)
    }

    /// Arbitrary `(E, F)`; rejected unless the commutation relations hold.
    pub fn custom(e: Matrix2<f64>, f: Matrix2<f64>) -> Result<Self> {
        Self::checked(e, f, LoopKind::Custom)
    }

    fn checked(e: Matrix2<f64>, f: Matrix2<f64>, kind: LoopKind) -> Result<Self> {
        let lp = FeedbackLoop { e, f, kind };
        let residual = lp.ccr_residual();
        let scale = 1.0f64.max(e.amax() * e.amax()).max(f.amax() * f.amax());
        if !(residual <= CCR_TOL * scale) {
            return Err(Error::CcrViolation { residual });
        }
        Ok(lp)
    }

    pub fn e(&self) -> &Matrix2<f64> {
        &self.e
    }

    pub fn f(&self) -> &Matrix2<f64> {
        &self.f
    }

    pub fn kind(&self) -> LoopKind {
        self.kind
    }

    /// Max-entry residual of `EΩEᵀ + FΩFᵀ − Ω`.
    pub fn ccr_residual(&self) -> f64 {
        let om = omega1();
        (self.e * om * self.e.transpose() + self.f * om * self.f.transpose() - om).amax()
    }

    /// Max-entry residual of `EEᵀ + FFᵀ − 1`; zero for passive loops.
    pub fn passivity_residual(&self) -> f64 {
        (self.e * self.e.transpose() + self.f * self.f.transpose() - Matrix2::identity()).amax()
    }

    /// Equivalent isotropic cavity, for the loop families that have one.
    pub fn effective_cavity(&self, kappa: f64, n_l: f64) -> Option<EffectiveCavity> {
        match self.kind {
            LoopKind::Passive { a, .. } => Some(EffectiveCavity { kappa_eff: 2.0 * kappa * (1.0 - a), noise: n_l }),
            LoopKind::TwoModeSqueezeFlipped { r } => {
                Some(EffectiveCavity { kappa_eff: 2.0 * kappa * (1.0 + r.cosh()), noise: n_l * r.cosh() })
            }
            _ => None,
        }
    }
}

pub fn passive_loop(a: f64, b: f64) -> Result<FeedbackLoop> {
    FeedbackLoop::passive(a, b)
}

pub fn squeeze_loss_loop(eta: f64, z: f64) -> Result<FeedbackLoop> {
    FeedbackLoop::squeeze_loss(eta, z)
}

pub fn two_mode_squeeze_loop(r: f64, flipped: bool) -> Result<FeedbackLoop> {
    FeedbackLoop::two_mode_squeeze(r, flipped)
}

/// The 4×6 coupling to `(r_in,l1, r_in,l3, r_in,m)` with the loop closed:
/// optical blocks `√κ Ωᵀ(1 − E)` and `√κ ΩᵀF`, mechanical block `√Γ_m Ωᵀ`.
pub fn cf_coupling(lp: &FeedbackLoop, params: &SystemParams) -> DMatrix<f64> {
    let ot = omega1().transpose();
    let sk = params.kappa.sqrt();
    let mut c = DMatrix::zeros(4, 6);
    c.fixed_view_mut::<2, 2>(0, 0).copy_from(&((ot - ot * lp.e) * sk));
    c.fixed_view_mut::<2, 2>(0, 2).copy_from(&(ot * lp.f * sk));
    c.fixed_view_mut::<2, 2>(2, 4).copy_from(&(ot * params.gamma_m.sqrt()));
    c
}

/// Optical Hamiltonian correction `H_cf = κ(ΩᵀE + EᵀΩ)`.
pub fn cf_hamiltonian_correction(lp: &FeedbackLoop, kappa: f64) -> Matrix2<f64> {
    let om = omega1();
    (om.transpose() * lp.e + lp.e.transpose() * om) * kappa
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bare_coupling_matrix;
    use approx::assert_relative_eq;

    fn params() -> SystemParams {
        SystemParams::red(0.1, 1e-3, 1e-5).unwrap()
    }

    #[test]
    fn passive_limits() {
        let full = FeedbackLoop::passive(1.0, 0.0).unwrap();
        assert_eq!(*full.e(), Matrix2::identity());
        assert_eq!(*full.f(), Matrix2::zeros());
        assert_eq!(full.effective_cavity(0.1, 1.0).unwrap().kappa_eff, 0.0);

        let open = FeedbackLoop::passive(0.0, 0.0).unwrap();
        assert_eq!(*open.e(), Matrix2::zeros());
        assert_eq!(*open.f(), Matrix2::identity());

        let opt = FeedbackLoop::passive(0.99, 0.0).unwrap();
        assert_relative_eq!(opt.effective_cavity(0.1, 1.0).unwrap().kappa_eff, 0.002, epsilon = 1e-15);

        assert!(FeedbackLoop::passive(0.9, 0.5).is_err());
    }

    #[test]
    fn squeeze_loss_cases() {
        let a = FeedbackLoop::squeeze_loss(0.7, 1.0).unwrap();
        let b = FeedbackLoop::passive(0.7, 0.0).unwrap();
        assert_relative_eq!(a.e(), b.e(), epsilon = 1e-15);
        assert_relative_eq!(a.f(), b.f(), epsilon = 1e-15);

        let replaced = FeedbackLoop::squeeze_loss(0.0, 2.0).unwrap();
        assert_eq!(*replaced.e(), Matrix2::zeros());
        assert_eq!(*replaced.f(), Matrix2::new(2.0, 0.0, 0.0, 0.5));

        // direct evaluation: diag(ηz, η/z) Ω diag(ηz, η/z) = η² Ω, likewise F gives (1−η²) Ω
        let l = FeedbackLoop::squeeze_loss(0.6, 1.3).unwrap();
        assert!(l.ccr_residual() < 1e-15);

        assert!(FeedbackLoop::squeeze_loss(1.2, 1.0).is_err());
        assert!(FeedbackLoop::squeeze_loss(0.5, 0.0).is_err());
    }

    #[test]
    fn tms_cases() {
        let t = FeedbackLoop::two_mode_squeeze(0.0, false).unwrap();
        assert_eq!(t.e(), FeedbackLoop::passive(1.0, 0.0).unwrap().e());
        assert_eq!(*t.f(), Matrix2::zeros());

        let s = FeedbackLoop::two_mode_squeeze(0.0, true).unwrap();
        assert_eq!(*s.e(), -Matrix2::identity());
        assert_relative_eq!(s.effective_cavity(0.1, 1.0).unwrap().kappa_eff, 0.4);

        let s = FeedbackLoop::two_mode_squeeze(1.78, true).unwrap();
        let eff = s.effective_cavity(0.01, 1.0).unwrap();
        assert_relative_eq!(eff.kappa_eff, 0.081, epsilon = 2e-4);
        assert!(eff.noise >= 1.0);
        assert!(FeedbackLoop::two_mode_squeeze(-0.1, false).is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(matches!(
            FeedbackLoop::custom(Matrix2::identity() * 2.0, Matrix2::zeros()),
            Err(Error::CcrViolation { .. })
        ));
        let ok = FeedbackLoop::custom(Matrix2::new(0.6, 0.0, 0.0, 0.6), Matrix2::new(0.8, 0.0, 0.0, 0.8)).unwrap();
        assert_eq!(ok.kind(), LoopKind::Custom);
    }

    #[test]
    fn coupling_reductions() {
        let p = params();
        let closed = cf_coupling(&FeedbackLoop::passive(1.0, 0.0).unwrap(), &p);
        assert_eq!(closed.view((0, 0), (2, 4)).amax(), 0.0);

        let open = cf_coupling(&FeedbackLoop::passive(0.0, 0.0).unwrap(), &p);
        assert_relative_eq!(open, bare_coupling_matrix(&p, true), epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_corrections() {
        let h = cf_hamiltonian_correction(&FeedbackLoop::passive(0.5, 0.3).unwrap(), 0.1);
        assert_relative_eq!(h, Matrix2::identity() * 0.06, epsilon = 1e-15);

        assert_eq!(cf_hamiltonian_correction(&FeedbackLoop::squeeze_loss(1.0, 1.0).unwrap(), 0.1), Matrix2::zeros());
        let (eta, z, k) = (0.4, 1.7, 0.2);
        let hz = cf_hamiltonian_correction(&FeedbackLoop::squeeze_loss(eta, z).unwrap(), k);
        let sx = Matrix2::new(0.0, 1.0, 1.0, 0.0);
        assert_relative_eq!(hz, sx * (k * eta * (z - 1.0 / z)), epsilon = 1e-15);

        for flipped in [false, true] {
            let t = FeedbackLoop::two_mode_squeeze(0.7, flipped).unwrap();
            assert_eq!(cf_hamiltonian_correction(&t, 0.1), Matrix2::zeros());
        }
    }

    #[test]
    fn squeeze_equals_passive_at_unit_z() {
        let p = params();
        for eta in [0.0, 0.3, 0.9, 1.0] {
            let s = FeedbackLoop::squeeze_loss(eta, 1.0).unwrap();
            let q = FeedbackLoop::passive(eta, 0.0).unwrap();
            assert_relative_eq!(cf_coupling(&s, &p), cf_coupling(&q, &p), epsilon = 1e-12);
            assert_relative_eq!(
                cf_hamiltonian_correction(&s, p.kappa),
                cf_hamiltonian_correction(&q, p.kappa),
                epsilon = 1e-12
            );
        }
    }
}
