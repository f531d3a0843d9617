//! Drift/diffusion assembly, stability, steady states and exact propagation
//! of `σ̇ = Aσ + σAᵀ + D`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::feedback::{cf_coupling, cf_hamiltonian_correction, FeedbackLoop};
use crate::gaussian::{omega2, omega_matrix, CovarianceMatrix, PHYSICALITY_TOL};
use crate::model::{
    bare_coupling_matrix, hamiltonian_matrix, single_interface_channels, two_interface_channels, NoiseEnvironment,
    SystemParams,
};

/// Real parts above `−HURWITZ_TOL` are not accepted as decaying.
pub const HURWITZ_TOL: f64 = 1e-12;

const RCOND_MIN: f64 = 1e-15;
const DIVERGENCE_LIMIT: f64 = 1e6;

type Matrix16 = SMatrix<f64, 16, 16>;
type Vector16 = SVector<f64, 16>;

/// Where a pair `(A, D)` came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsMeta {
    pub params: SystemParams,
    pub env: NoiseEnvironment,
    pub feedback: Option<FeedbackLoop>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    pub a: Matrix4<f64>,
    pub d: Matrix4<f64>,
    pub meta: Option<DynamicsMeta>,
}

impl LinearDynamics {
    /// Wraps a raw pair. `d` must be symmetric positive semidefinite.
    pub fn from_matrices(a: Matrix4<f64>, d: Matrix4<f64>) -> Result<Self> {
        let scale = d.amax().max(1.0);
        let asym = (d - d.transpose()).amax();
        if !(asym <= 1e-12 * scale) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let d = (d + d.transpose()) * 0.5;
        let min_eig = d.symmetric_eigenvalues().min();
        if min_eig < -1e-12 * scale {
            return Err(Error::invalid("D", format!("must be positive semidefinite (eigenvalue {min_eig:e})")));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("A", "must be finite"));
        }
        Ok(LinearDynamics { a, d, meta: None })
    }
}

/// Builds `A = ΩH + ½ΩCΩ_kCᵀ` and `D = ΩCσ_inCᵀΩᵀ`.
///
/// Without a loop the cavity has a single interface of rate `κ`. With a loop,
/// the output of one interface passes through `(E, F)` into the other, and the
/// loop's Hamiltonian correction is added to the optical block.
pub fn assemble(params: &SystemParams, env: &NoiseEnvironment, feedback: Option<&FeedbackLoop>) -> LinearDynamics {
    let mut h = hamiltonian_matrix(params);
    let (c, channels) = match feedback {
        None => (bare_coupling_matrix(params, false), single_interface_channels(params)),
        Some(lp) => {
            let hc = cf_hamiltonian_correction(lp, params.kappa);
            let mut blk = h.fixed_view_mut::<2, 2>(0, 0);
            blk += hc;
            (cf_coupling(lp, params), two_interface_channels(params))
        }
    };
    let sigma_in = env.input_covariance(&channels);
    let (a, d) = drift_diffusion(&h, &c, &sigma_in);
    LinearDynamics {
        a,
        d,
        meta: Some(DynamicsMeta { params: *params, env: *env, feedback: feedback.copied() }),
    }
}

pub(crate) fn drift_diffusion(h: &Matrix4<f64>, c: &DMatrix<f64>, sigma_in: &DMatrix<f64>) -> (Matrix4<f64>, Matrix4<f64>) {
    let om = omega2();
    let om_d = DMatrix::from_iterator(4, 4, om.iter().copied());
    let om_k = omega_matrix(c.ncols() / 2);
    let damp = &om_d * c * om_k * c.transpose() * 0.5;
    let diff = &om_d * c * sigma_in * c.transpose() * om_d.transpose();
    let a = om * h + Matrix4::from_iterator(damp.iter().copied());
    let d = Matrix4::from_iterator(diff.iter().copied());
    (a, (d + d.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityStatus {
    Stable,
    /// Spectral abscissa within `HURWITZ_TOL` of zero.
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub hurwitz: bool,
    /// Largest real part of the spectrum of `A`.
    pub abscissa: f64,
    pub status: StabilityStatus,
}

pub fn spectral_abscissa(a: &Matrix4<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(dynamics: &LinearDynamics) -> Stability {
    stability_of(&dynamics.a)
}

pub(crate) fn stability_of(a: &Matrix4<f64>) -> Stability {
    let abscissa = spectral_abscissa(a);
    let status = if abscissa < -HURWITZ_TOL {
        StabilityStatus::Stable
    } else if abscissa <= HURWITZ_TOL {
        StabilityStatus::Marginal
    } else {
        StabilityStatus::Unstable
    };
    Stability { hurwitz: status == StabilityStatus::Stable, abscissa, status }
}

/// Spectrum of the blue-sideband drift with a passive loop,
/// `¼(−Γ_m − κ_eff ± √(16G² + Γ_m² − 2Γ_mκ_eff + κ_eff²))`, each twice,
/// ordered `[λ₊, λ₊, λ₋, λ₋]`.
pub fn blue_eigenvalues(kappa_eff: f64, g: f64, gamma_m: f64) -> [f64; 4] {
    let root = (16.0 * g * g + gamma_m * gamma_m - 2.0 * gamma_m * kappa_eff + kappa_eff * kappa_eff).sqrt();
    let hi = 0.25 * (-gamma_m - kappa_eff + root);
    let lo = 0.25 * (-gamma_m - kappa_eff - root);
    [hi, hi, lo, lo]
}

/// `A ⊗ 1 + 1 ⊗ A` acting on row-major `vec σ`.
fn kron_sum(a: &Matrix4<f64>) -> Matrix16 {
    let mut k = Matrix16::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for m in 0..4 {
                k[(4 * i + j, 4 * m + j)] += a[(i, m)];
                k[(4 * i + j, 4 * i + m)] += a[(j, m)];
            }
        }
    }
    k
}

fn vec_rm(m: &Matrix4<f64>) -> Vector16 {
    Vector16::from_fn(|k, _| m[(k / 4, k % 4)])
}

fn unvec_rm(v: &Vector16) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| v[4 * i + j])
}

fn norm1(m: &Matrix16) -> f64 {
    (0..16).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn norm2(m: &Matrix4<f64>) -> f64 {
    m.singular_values().max()
}

/// Solves `Aσ + σAᵀ + D = 0` by the lifted system `(A⊗1 + 1⊗A) vec σ = −vec D`.
pub fn lyapunov_steady_state(dynamics: &LinearDynamics) -> Result<CovarianceMatrix> {
    let st = is_hurwitz(dynamics);
    if !st.hurwitz {
        return Err(Error::NotHurwitz { abscissa: st.abscissa });
    }
    let sigma = solve_lyapunov(&dynamics.a, &dynamics.d)?;
    let cm = CovarianceMatrix::from_matrix4_symmetrized(&sigma);
    cm.check_physical(PHYSICALITY_TOL)?;
    Ok(cm)
}

pub(crate) fn solve_lyapunov(a: &Matrix4<f64>, d: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let k = kron_sum(a);
    let lu = k.lu();
    let inv = lu.try_inverse().ok_or(Error::Singular { context: "Lyapunov solve", rcond: 0.0 })?;
    let rcond = 1.0 / (norm1(&k) * norm1(&inv));
    if !(rcond > RCOND_MIN) {
        return Err(Error::Singular { context: "Lyapunov solve", rcond });
    }
    let rhs = -vec_rm(d);
    let mut x = lu.solve(&rhs).ok_or(Error::Singular { context: "Lyapunov solve", rcond })?;
    // a couple of refinement sweeps recover digits lost near the stability boundary
    for _ in 0..3 {
        let r = rhs - k * x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    let sigma = unvec_rm(&x);
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Lyapunov solution".into()));
    }
    Ok((sigma + sigma.transpose()) * 0.5)
}

/// `‖Aσ + σAᵀ + D‖₂`.
pub fn lyapunov_residual(dynamics: &LinearDynamics, sigma: &CovarianceMatrix) -> Result<f64> {
    let s = sigma.to_matrix4()?;
    Ok(norm2(&(dynamics.a * s + s * dynamics.a.transpose() + dynamics.d)))
}

/// Exact one-step map `σ ↦ ΦσΦᵀ + Q` with `Φ = e^{Ah}` and
/// `Q = ∫₀ʰ e^{As} D e^{Aᵀs} ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub h: f64,
    pub phi: Matrix4<f64>,
    pub q: Matrix4<f64>,
}

impl Propagator {
    pub fn new(dynamics: &LinearDynamics, h: f64) -> Result<Self> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::invalid("step", "must be non-negative"));
        }
        let phi = (dynamics.a * h).exp();
        // Q from the top-right column of exp([[K h, vec(D) h], [0, 0]]), K = A⊗1 + 1⊗A
        let k = kron_sum(&dynamics.a);
        let mut aug = DMatrix::<f64>::zeros(17, 17);
        aug.view_mut((0, 0), (16, 16)).copy_from(&(k * h));
        aug.view_mut((0, 16), (16, 1)).copy_from(&(vec_rm(&dynamics.d) * h));
        let e = aug.exp();
        let qv = Vector16::from_fn(|i, _| e[(i, 16)]);
        let q = unvec_rm(&qv);
        let q = (q + q.transpose()) * 0.5;
        if phi.iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("matrix exponential overflow at step {h}")));
        }
        Ok(Propagator { h, phi, q })
    }

    pub fn step(&self, sigma: &Matrix4<f64>) -> Matrix4<f64> {
        let s = self.phi * sigma * self.phi.transpose() + self.q;
        (s + s.transpose()) * 0.5
    }
}

/// Internal step bound `min(0.01·2π/ω_m, 0.1/r)`, with `r` the largest decay
/// or growth rate in the spectrum of `A`.
pub fn step_rule(dynamics: &LinearDynamics, omega_m: f64) -> f64 {
    let rate = dynamics.a.complex_eigenvalues().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let h_osc = 0.01 * 2.0 * PI / omega_m;
    if rate > 0.0 {
        h_osc.min(0.1 / rate)
    } else {
        h_osc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<CovarianceMatrix>,
}

/// Samples of the exact solution at `0, dt_out, 2·dt_out, …`, ending at
/// `t_final`.
pub fn integrate(
    dynamics: &LinearDynamics,
    sigma0: &CovarianceMatrix,
    t_final: f64,
    dt_out: f64,
) -> Result<TimeSeries> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    propagate(dynamics, sigma0, t_final, dt_out, |t, s| {
        times.push(t);
        states.push(CovarianceMatrix::from_matrix4_symmetrized(s));
    })?;
    Ok(TimeSeries { times, states })
}

/// Like [`integrate`] but hands each sample to `visit` instead of storing it.
/// Aborts with [`Error::Diverged`] once an entry exceeds `1e6`.
pub fn propagate<F>(
    dynamics: &LinearDynamics,
    sigma0: &CovarianceMatrix,
    t_final: f64,
    dt_out: f64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(f64, &Matrix4<f64>),
{
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::invalid("t_final", "must be positive"));
    }
    if !(dt_out > 0.0) || !dt_out.is_finite() {
        return Err(Error::invalid("dt_out", "must be positive"));
    }
    sigma0.check_physical(PHYSICALITY_TOL)?;
    let mut s = sigma0.to_matrix4()?;
    let omega_m = dynamics.meta.map(|m| m.params.omega_m).unwrap_or(1.0);
    let h_rule = step_rule(dynamics, omega_m);

    let n_full = ((t_final / dt_out) * (1.0 + 1e-12)).floor() as usize;
    let rest = t_final - n_full as f64 * dt_out;
    let stepper = |interval: f64| -> Result<(Propagator, usize)> {
        let n_sub = (interval / h_rule).ceil().max(1.0) as usize;
        Ok((Propagator::new(dynamics, interval / n_sub as f64)?, n_sub))
    };

    visit(0.0, &s);
    let (prop, n_sub) = stepper(dt_out)?;
    let advance = |s: &mut Matrix4<f64>, prop: &Propagator, n_sub: usize, t: f64| -> Result<()> {
        for _ in 0..n_sub {
            *s = prop.step(s);
        }
        let max_entry = s.amax();
        if !(max_entry <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { time: t, max_entry });
        }
        Ok(())
    };
    for k in 1..=n_full {
        let t = k as f64 * dt_out;
        advance(&mut s, &prop, n_sub, t)?;
        visit(t, &s);
    }
    if rest > 1e-12 * t_final {
        let (prop, n_sub) = stepper(rest)?;
        advance(&mut s, &prop, n_sub, t_final)?;
        visit(t_final, &s);
    }
    Ok(())
}

/// Mechanical block of `σ` (modes ordered optical, mechanical).
pub(crate) fn mech_block(s: &Matrix4<f64>) -> Matrix2<f64> {
    Matrix2::from(s.fixed_view::<2, 2>(2, 2))
}
