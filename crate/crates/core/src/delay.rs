//! Steady state of a passive loop whose output is fed back after a delay `τ`,
//! from the frequency-domain solution of the delayed Langevin equations.

use nalgebra::{Complex, Matrix4, SMatrix};

use crate::dynamics::{drift_diffusion, norm2, spectral_abscissa, HURWITZ_TOL};
use crate::error::{Error, Result};
use crate::gaussian::{omega_matrix, CovarianceMatrix};
use crate::model::{bare_coupling_matrix, hamiltonian_matrix, two_interface_channels, NoiseEnvironment, SystemParams};
use crate::quadrature::{integrate_panels, QuadOptions};

type C64 = Complex<f64>;
pub type TransferMatrix = SMatrix<C64, 4, 6>;

const IMAG_RESIDUE_MAX: f64 = 1e-8;
const DELAY_PHYSICALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedLoopSpec {
    /// Loop transmission; the loop phase is fixed to zero.
    pub a: f64,
    /// Ancilla mixing `√(1 − a²)`.
    pub c: f64,
    pub tau: f64,
    pub params: SystemParams,
    pub env: NoiseEnvironment,
}

impl DelayedLoopSpec {
    pub fn new(a: f64, tau: f64, params: SystemParams, env: NoiseEnvironment) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::invalid("a", "must lie in [0, 1]"));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau", "must be non-negative"));
        }
        let params = params.validated()?;
        Ok(DelayedLoopSpec { a, c: (1.0 - a * a).sqrt(), tau, params, env })
    }

    /// Drift of the cavity with both interfaces open and no loop.
    fn open_drift(&self) -> Matrix4<f64> {
        let h = hamiltonian_matrix(&self.params);
        let c = bare_coupling_matrix(&self.params, true);
        let s = self.env.input_covariance(&two_interface_channels(&self.params));
        drift_diffusion(&h, &c, &s).0
    }

    /// Drift of the undelayed loop, `Ã` at `τ = 0`.
    pub fn instantaneous_drift(&self) -> Matrix4<f64> {
        let mut a = self.open_drift();
        a[(0, 0)] += self.a * self.params.kappa;
        a[(1, 1)] += self.a * self.params.kappa;
        a
    }
}

struct Model {
    a0: Matrix4<f64>,
    a: f64,
    c: f64,
    tau: f64,
    sk: f64,
    sg: f64,
    kappa: f64,
    /// `σ_in + iΩ` on the three input channels.
    s_plus: SMatrix<C64, 6, 6>,
}

impl Model {
    fn new(spec: &DelayedLoopSpec) -> Self {
        let sin = spec.env.input_covariance(&two_interface_channels(&spec.params));
        let om = omega_matrix(3);
        let s_plus = SMatrix::<C64, 6, 6>::from_fn(|i, j| C64::new(sin[(i, j)], om[(i, j)]));
        Model {
            a0: spec.open_drift(),
            a: spec.a,
            c: spec.c,
            tau: spec.tau,
            sk: spec.params.kappa.sqrt(),
            sg: spec.params.gamma_m.sqrt(),
            kappa: spec.params.kappa,
            s_plus,
        }
    }

    fn transfer(&self, w: f64) -> Option<TransferMatrix> {
        let e = C64::from_polar(1.0, w * self.tau);
        let mut m = Matrix4::<C64>::from_fn(|i, j| C64::new(-self.a0[(i, j)], 0.0));
        for i in 0..4 {
            m[(i, i)] -= C64::new(0.0, w);
        }
        let fb = e * (self.a * self.kappa);
        m[(0, 0)] -= fb;
        m[(1, 1)] -= fb;
        let mut b = TransferMatrix::zeros();
        let opt = (C64::new(1.0, 0.0) - e * self.a) * self.sk;
        for i in 0..2 {
            b[(i, i)] = opt;
            b[(i, i + 2)] = C64::new(self.sk * self.c, 0.0);
            b[(i + 2, i + 4)] = C64::new(self.sg, 0.0);
        }
        let r = m.lu().solve(&b)?;
        r.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(r)
    }

    /// `R(ω)(σ_in + iΩ)R(−ω)ᵀ + R(−ω)(σ_in − iΩ)R(ω)ᵀ`, real parts then
    /// imaginary parts, row-major.
    fn integrand(&self, w: f64) -> Option<[f64; 32]> {
        let rp = self.transfer(w)?;
        let rm = self.transfer(-w)?;
        let s_minus = self.s_plus.map(|z| z.conj());
        let t = rp * self.s_plus * rm.transpose() + rm * s_minus * rp.transpose();
        let mut out = [0.0; 32];
        for i in 0..4 {
            for j in 0..4 {
                out[4 * i + j] = t[(i, j)].re;
                out[16 + 4 * i + j] = t[(i, j)].im;
            }
        }
        Some(out)
    }

    /// Integrand with even symmetrization, `T(ω) + T(−ω)`, retried at a nudged
    /// frequency if the resolvent is singular.
    fn folded(&self, w: f64) -> [f64; 32] {
        let mut nudge = 0.0;
        for k in 0..8 {
            let x = w + nudge;
            if let (Some(p), Some(m)) = (self.integrand(x), self.integrand(-x)) {
                let mut out = [0.0; 32];
                for i in 0..32 {
                    out[i] = p[i] + m[i];
                }
                return out;
            }
            nudge = (w.abs().max(1e-12)) * 1e-9 * f64::powi(4.0, k);
        }
        [f64::NAN; 32]
    }
}

/// `R(ω) = [−iω − Ã(ω)]⁻¹ B(ω)` mapping the input quadratures of the
/// fed-back interface, the ancilla and the mechanical bath to the system.
pub fn transfer_function(spec: &DelayedLoopSpec, omega: f64) -> Result<TransferMatrix> {
    Model::new(spec).transfer(omega).ok_or(Error::Singular { context: "transfer function", rcond: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayOptions {
    pub panel_tol: f64,
    /// Stop growing the cutoff once the tail bound is below this fraction of
    /// the accumulated integral.
    pub tail_rel_tol: f64,
    pub max_cutoff: f64,
    pub parallel: bool,
}

impl Default for DelayOptions {
    fn default() -> Self {
        DelayOptions { panel_tol: 1e-10, tail_rel_tol: 1e-9, max_cutoff: 1e15, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayedSteadyState {
    pub sigma: CovarianceMatrix,
    /// Largest imaginary entry of the integrated covariance before it was
    /// discarded.
    pub imag_residue: f64,
    pub cutoff: f64,
    pub tail_bound: f64,
    pub quadrature_error: f64,
    pub evaluations: usize,
}

pub fn delayed_steady_state(spec: &DelayedLoopSpec) -> Result<DelayedSteadyState> {
    delayed_steady_state_with(spec, &DelayOptions::default())
}

fn breakpoints(spec: &DelayedLoopSpec, w0: f64) -> Vec<f64> {
    let mut pts = vec![0.0, spec.params.omega_m, w0];
    for lam in spec.instantaneous_drift().complex_eigenvalues().iter() {
        let (centre, width) = (lam.im.abs(), lam.re.abs());
        pts.push(centre);
        for k in [0.3, 1.0, 3.0, 10.0, 30.0] {
            pts.push(centre + k * width);
            pts.push(centre - k * width);
        }
    }
    let mut x = 1e-7;
    while x < w0 {
        pts.push(x);
        x *= 10.0;
    }
    pts.retain(|p| p.is_finite() && *p >= 0.0 && *p <= w0);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * a.abs().max(1e-300));
    pts
}

pub fn delayed_steady_state_with(spec: &DelayedLoopSpec, opts: &DelayOptions) -> Result<DelayedSteadyState> {
    // without delay the frequency integral of an unstable loop is still finite,
    // so stability has to be checked directly
    if spec.tau == 0.0 {
        let abscissa = spectral_abscissa(&spec.instantaneous_drift());
        if abscissa >= -HURWITZ_TOL {
            return Err(Error::NotHurwitz { abscissa });
        }
    }
    let model = Model::new(spec);
    let f = |w: f64| model.folded(w);
    let a_norm = norm2(&model.a0) + spec.a * spec.params.kappa * std::f64::consts::SQRT_2;
    let (k, g) = (spec.params.kappa, spec.params.gamma_m);
    let beta2 = 2.0 * k * (1.0 + spec.a).powi(2) + 2.0 * k * spec.c * spec.c + 2.0 * g;
    let sin_norm = spec.env.n_l.max(spec.env.n_m);

    let w0 = (10.0 * a_norm).max(10.0 * spec.params.omega_m).max(10.0);
    let qopts = QuadOptions { abs_tol: opts.panel_tol, max_depth: 60, parallel: opts.parallel };
    let core = integrate_panels(&f, &breakpoints(spec, w0), &qopts)?;
    let mut acc = core.value;
    let mut err = core.error;
    let mut evals = core.evaluations;

    // ∫_W^∞ of the integrand is at most 4‖B‖²(‖σ_in‖ + 1)/(W − ‖Ã‖); after
    // the 1/4π prefactor that is the bound below
    let tail = |w: f64| beta2 * (sin_norm + 1.0) / (std::f64::consts::PI * (w - a_norm));
    let mut w = w0;
    let scale = |v: &[f64; 32]| v[..16].iter().fold(0.0f64, |m, x| m.max(x.abs())) / (4.0 * std::f64::consts::PI);
    while tail(w) >= opts.tail_rel_tol * scale(&acc) {
        if w >= opts.max_cutoff {
            return Err(Error::QuadratureNotConverged {
                detail: format!("tail bound {:e} at cutoff {w:e} still above target", tail(w)),
            });
        }
        let r = integrate_panels(&f, &[w, 2.0 * w], &QuadOptions { parallel: false, ..qopts })?;
        for i in 0..32 {
            acc[i] += r.value[i];
        }
        err += r.error;
        evals += r.evaluations;
        w *= 2.0;
    }
    if acc.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("delayed-loop integrand is not finite on the real axis".into()));
    }

    let pref = 1.0 / (4.0 * std::f64::consts::PI);
    let re = Matrix4::from_fn(|i, j| acc[4 * i + j] * pref);
    let imag_residue = acc[16..].iter().fold(0.0f64, |m, x| m.max(x.abs())) * pref;
    if imag_residue >= IMAG_RESIDUE_MAX {
        return Err(Error::Numerical(format!("delayed covariance has imaginary residue {imag_residue:e}")));
    }
    let sigma = CovarianceMatrix::from_matrix4_symmetrized(&re);
    sigma.check_physical(DELAY_PHYSICALITY_TOL)?;
    Ok(DelayedSteadyState {
        sigma,
        imag_residue,
        cutoff: w,
        tail_bound: tail(w),
        quadrature_error: err * pref,
        evaluations: evals,
    })
}
