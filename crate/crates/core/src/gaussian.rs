//! Symplectic linear algebra and Gaussian-state figures of merit.
//!
//! Conventions used throughout the crate: quadratures are ordered
//! `(x_l, p_l, x_m, p_m)`, the vacuum covariance is the identity, and a
//! thermal mode with mean excitation `n̄` has covariance `(2n̄ + 1)·1`.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::error::{Error, Result};

/// Tolerance below 1 accepted for symplectic eigenvalues of physical states.
pub const PHYSICALITY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const PAIRING_TOL: f64 = 1e-9;

/// The block-diagonal symplectic form `⊕ⁿ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

pub fn omega(n: usize) -> Result<SymplecticForm> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    Ok(SymplecticForm { n, matrix: omega_matrix(n) })
}

pub(crate) fn omega_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

pub(crate) fn omega1() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

pub(crate) fn omega2() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -1.0;
    m[(2, 3)] = 1.0;
    m[(3, 2)] = -1.0;
    m
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Real symmetric `2n × 2n` matrix of symmetrized second moments.
///
/// Construction only checks shape and symmetry; physicality is a property
/// that can be queried with [`CovarianceMatrix::check_physical`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: "square 2n×2n matrix".into(),
                found: format!("{r}×{c}"),
            });
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if !asym.is_finite() || asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(CovarianceMatrix { matrix: sym })
    }

    /// Symmetrizes `m` before wrapping it. Used for numerically produced states
    /// whose asymmetry is pure round-off.
    pub(crate) fn from_matrix4_symmetrized(m: &Matrix4<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        CovarianceMatrix { matrix: DMatrix::from_iterator(4, 4, sym.iter().copied()) }
    }

    pub fn from_matrix4(m: &Matrix4<f64>) -> Result<Self> {
        Self::new(DMatrix::from_iterator(4, 4, m.iter().copied()))
    }

    pub fn from_matrix2(m: &Matrix2<f64>) -> Result<Self> {
        Self::new(DMatrix::from_iterator(2, 2, m.iter().copied()))
    }

    pub fn vacuum(n: usize) -> Self {
        Self::thermal(n, 1.0)
    }

    /// `N·1` for `n` modes; `N = 2n̄ + 1`.
    pub fn thermal(n: usize, noise: f64) -> Self {
        CovarianceMatrix { matrix: DMatrix::identity(2 * n, 2 * n) * noise }
    }

    /// Block-diagonal product state `σ_l ⊕ σ_m`.
    pub fn product(a: &CovarianceMatrix, b: &CovarianceMatrix) -> Self {
        let (na, nb) = (a.dim(), b.dim());
        let mut m = DMatrix::zeros(na + nb, na + nb);
        m.view_mut((0, 0), (na, na)).copy_from(&a.matrix);
        m.view_mut((na, na), (nb, nb)).copy_from(&b.matrix);
        CovarianceMatrix { matrix: m }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_matrix4(&self) -> Result<Matrix4<f64>> {
        if self.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: "4×4".into(), found: self.shape_str() });
        }
        Ok(Matrix4::from_iterator(self.matrix.iter().copied()))
    }

    pub fn to_matrix2(&self) -> Result<Matrix2<f64>> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: "2×2".into(), found: self.shape_str() });
        }
        Ok(Matrix2::from_iterator(self.matrix.iter().copied()))
    }

    /// The `2×2` block coupling modes `i` and `j` (0-based).
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let v = self.matrix.fixed_view::<2, 2>(2 * i, 2 * j);
        Matrix2::from(v)
    }

    /// Reduced covariance of a single mode.
    pub fn mode(&self, i: usize) -> CovarianceMatrix {
        let b = self.block(i, i);
        CovarianceMatrix { matrix: DMatrix::from_iterator(2, 2, b.iter().copied()) }
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Errors with [`Error::Unphysical`] when some symplectic eigenvalue is below
    /// `1 - tol`.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let nus = symplectic_eigenvalues(self)?;
        let nu = nus[0];
        if nu < 1.0 - tol {
            return Err(Error::Unphysical { nu });
        }
        Ok(())
    }

    fn shape_str(&self) -> String {
        format!("{}×{}", self.matrix.nrows(), self.matrix.ncols())
    }
}

/// Symplectic spectrum of `σ`, ascending, one value per mode.
///
/// Computed from the moduli of the eigenvalues of `iΩσ`, which come in
/// degenerate `±ν` pairs.
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let m = sigma.matrix();
    if m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let n = sigma.modes();
    let om = omega_matrix(n);
    // eigenvalues of iΩσ are i times those of Ωσ; moduli coincide
    let eig = (om * m).complex_eigenvalues();
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::with_capacity(n);
    for pair in moduli.chunks_exact(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo > PAIRING_TOL * hi.max(1.0) {
            return Err(Error::Numerical(format!(
                "symplectic spectrum does not pair: {lo} vs {hi}"
            )));
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Closed-form symplectic eigenvalues for one or two modes: `√det σ` for a
/// single mode, and `ν±² = (Δ ± √(Δ² − 4 det σ))/2` with
/// `Δ = det σ_l + det σ_m + 2 det σ_lm` for two.
pub fn symplectic_eigenvalues_closed_form(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    match sigma.modes() {
        1 => Ok(vec![sigma.determinant().sqrt()]),
        2 => {
            let delta = sigma.block(0, 0).determinant()
                + sigma.block(1, 1).determinant()
                + 2.0 * sigma.block(0, 1).determinant();
            let det = sigma.determinant();
            let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
            Ok(vec![((delta - disc) / 2.0).sqrt(), ((delta + disc) / 2.0).sqrt()])
        }
        n => Err(Error::DimensionMismatch { expected: "1 or 2 modes".into(), found: format!("{n} modes") }),
    }
}

/// `(ν − 1)/2`.
pub fn occupancy_from_eigenvalue(nu: f64) -> f64 {
    (nu - 1.0) / 2.0
}

/// Mean excitation number `(ν − 1)/2` of a single mode.
pub fn mean_occupancy(sigma_m: &CovarianceMatrix) -> Result<f64> {
    if sigma_m.modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "1-mode covariance".into(),
            found: format!("{} modes", sigma_m.modes()),
        });
    }
    let nu = symplectic_eigenvalues(sigma_m)?[0];
    if nu < 1.0 - PHYSICALITY_TOL {
        return Err(Error::Unphysical { nu });
    }
    Ok(occupancy_from_eigenvalue(nu).max(0.0))
}

/// Smallest symplectic eigenvalue of the partially transposed state,
/// `ν̃₋ = √((Δ̃ − √(Δ̃² − 4 det σ))/2)` with `Δ̃ = det σ_l + det σ_m − 2 det σ_lm`.
pub fn partial_transpose_min_eigenvalue(sigma: &CovarianceMatrix) -> Result<f64> {
    if sigma.modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2-mode covariance".into(),
            found: format!("{} modes", sigma.modes()),
        });
    }
    let delta = sigma.block(0, 0).determinant() + sigma.block(1, 1).determinant()
        - 2.0 * sigma.block(0, 1).determinant();
    let det = sigma.determinant();
    let scale = delta.abs().max(1.0);
    let mut disc = delta * delta - 4.0 * det;
    if disc < 0.0 {
        if disc < -1e-12 * scale * scale {
            return Err(Error::Numerical(format!("negative discriminant {disc:e} in partial transpose")));
        }
        disc = 0.0;
    }
    // (Δ̃ − √disc)/2 rewritten as 2 det σ/(Δ̃ + √disc) to avoid cancellation
    // for strongly mixed states
    let sum = delta + disc.sqrt();
    if !(sum > 0.0) || det < 0.0 {
        return Err(Error::Numerical(format!("complex partially transposed eigenvalue (Δ̃ = {delta:e}, det = {det:e})")));
    }
    Ok((2.0 * det / sum).sqrt())
}

/// Logarithmic negativity `max(0, −ln ν̃₋)` in nats.
pub fn log_negativity(sigma: &CovarianceMatrix) -> Result<f64> {
    let nu = partial_transpose_min_eigenvalue(sigma)?;
    if separable_by_correlation_sign(sigma) {
        return Ok(0.0);
    }
    Ok((-nu.ln()).max(0.0))
}

/// Logarithmic negativity `max(0, −log₂ ν̃₋)` in bits. This is the unit of
/// every `log_neg` column the protocol drivers produce.
pub fn log_negativity_bits(sigma: &CovarianceMatrix) -> Result<f64> {
    let nu = partial_transpose_min_eigenvalue(sigma)?;
    if separable_by_correlation_sign(sigma) {
        return Ok(0.0);
    }
    Ok((-nu.log2()).max(0.0))
}

// A physical two-mode state with det σ_lm ≥ 0 is PPT; this keeps product
// states at exactly zero where ν̃₋ = 1 only up to rounding.
fn separable_by_correlation_sign(sigma: &CovarianceMatrix) -> bool {
    sigma.block(0, 1).determinant() >= 0.0
}

/// Smaller ordinary eigenvalue of a single-mode covariance. Values below 1
/// are squeezed below vacuum; below 1/2 beyond the 3 dB limit.
pub fn min_quadrature_eigenvalue(sigma: &CovarianceMatrix) -> Result<f64> {
    let m = sigma.to_matrix2().map_err(|_| Error::DimensionMismatch {
        expected: "1-mode covariance".into(),
        found: format!("{} modes", sigma.modes()),
    })?;
    Ok(min_eigenvalue2(&m))
}

pub(crate) fn min_eigenvalue2(m: &Matrix2<f64>) -> f64 {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    mean - half_diff.hypot(off)
}

/// Rotation angle and squeezing of a single-mode pure state, `σ = R_θ Z R_θᵀ`
/// with `Z = diag(1/z, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureStateSpec {
    pub theta: f64,
    pub z: f64,
}

impl PureStateSpec {
    pub fn new(theta: f64, z: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::invalid("z", "must be positive"));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(PureStateSpec { theta, z })
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        let r = rotation(self.theta);
        r * Matrix2::new(1.0 / self.z, 0.0, 0.0, self.z) * r.transpose()
    }
}

pub fn pure_state_cm(spec: PureStateSpec) -> Result<CovarianceMatrix> {
    if !(spec.z > 0.0) {
        return Err(Error::invalid("z", "must be positive"));
    }
    let m = spec.matrix();
    // rotation conjugation leaves round-off asymmetry of order 1e-17
    let sym = (m + m.transpose()) * 0.5;
    CovarianceMatrix::from_matrix2(&sym)
}

/// `√Tr[(a − b)²]`.
pub fn schatten2_distance(a: &CovarianceMatrix, b: &CovarianceMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}×{0}", a.dim()),
            found: format!("{0}×{0}", b.dim()),
        });
    }
    Ok((a.matrix() - b.matrix()).norm())
}

pub(crate) fn schatten2_distance2(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    (a - b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn omega_blocks_and_square() {
        let o1 = omega(1).unwrap();
        assert_eq!(o1.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let o2 = omega(2).unwrap();
        assert_eq!(o2.matrix()[(2, 3)], 1.0);
        assert_eq!(o2.matrix()[(3, 2)], -1.0);
        assert_eq!(o2.matrix()[(0, 2)], 0.0);
        for n in 1..=4 {
            let o = omega(n).unwrap().into_matrix();
            assert_eq!(&o * &o, -DMatrix::<f64>::identity(2 * n, 2 * n));
            assert_eq!(o.transpose(), -o);
        }
        assert!(omega(0).is_err());
    }

    #[test]
    fn matches_fixed_size_forms() {
        let o = omega(2).unwrap().into_matrix();
        let f = omega2();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(o[(i, j)], f[(i, j)]);
            }
        }
    }

    #[test]
    fn symplectic_eigenvalues_simple_states() {
        assert_relative_eq!(symplectic_eigenvalues(&CovarianceMatrix::vacuum(1)).unwrap()[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(symplectic_eigenvalues(&CovarianceMatrix::thermal(1, 5.0)).unwrap()[0], 5.0, epsilon = 1e-12);
        let sq = CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.25, 4.0]))).unwrap();
        assert_relative_eq!(symplectic_eigenvalues(&sq).unwrap()[0], 1.0, epsilon = 1e-12);
        let two = CovarianceMatrix::product(&CovarianceMatrix::thermal(1, 3.0), &CovarianceMatrix::thermal(1, 2.0));
        let nus = symplectic_eigenvalues(&two).unwrap();
        assert_relative_eq!(nus[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(nus[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_positive_definite() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let s = CovarianceMatrix::new(m).unwrap();
        assert_eq!(symplectic_eigenvalues(&s), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn rejects_asymmetric_and_odd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(CovarianceMatrix::new(m), Err(Error::NotSymmetric { .. })));
        assert!(CovarianceMatrix::new(DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn occupancy_values() {
        assert_eq!(mean_occupancy(&CovarianceMatrix::vacuum(1)).unwrap(), 0.0);
        assert_relative_eq!(mean_occupancy(&CovarianceMatrix::thermal(1, 2.975)).unwrap(), 0.9875, epsilon = 1e-12);
        for nbar in [0.0, 1.0, 10.0] {
            let s = CovarianceMatrix::thermal(1, 2.0 * nbar + 1.0);
            assert_relative_eq!(mean_occupancy(&s).unwrap(), nbar, epsilon = 1e-12);
        }
        let bad = CovarianceMatrix::thermal(1, 0.5);
        assert!(matches!(mean_occupancy(&bad), Err(Error::Unphysical { .. })));
        assert!(mean_occupancy(&CovarianceMatrix::vacuum(2)).is_err());
    }

    /// Two-mode squeezed vacuum with squeezing r.
    fn tmsv(r: f64) -> CovarianceMatrix {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let mut m = DMatrix::identity(4, 4) * c;
        m[(0, 2)] = s;
        m[(2, 0)] = s;
        m[(1, 3)] = -s;
        m[(3, 1)] = -s;
        CovarianceMatrix::new(m).unwrap()
    }

    /// Oracle: −ln of the smallest symplectic eigenvalue of the partially
    /// transposed matrix (p_m → −p_m), through the general eigen-route.
    fn log_neg_oracle(sigma: &CovarianceMatrix) -> f64 {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
        let pt = &p * sigma.matrix() * &p;
        let nus = symplectic_eigenvalues(&CovarianceMatrix::new(pt).unwrap()).unwrap();
        (-nus[0].ln()).max(0.0)
    }

    #[test]
    fn log_negativity_tmsv() {
        let s = tmsv(0.5);
        assert_relative_eq!(log_neg_oracle(&s), 1.0, epsilon = 1e-9);
        assert_relative_eq!(log_negativity(&s).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(log_negativity_bits(&s).unwrap(), 1.0 / std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn log_negativity_product_is_zero() {
        let s = CovarianceMatrix::product(&CovarianceMatrix::thermal(1, 3.0), &pure_state_cm(PureStateSpec::new(0.3, 2.0).unwrap()).unwrap());
        assert_eq!(log_negativity(&s).unwrap(), 0.0);
    }

    #[test]
    fn min_quadrature() {
        assert_relative_eq!(min_quadrature_eigenvalue(&CovarianceMatrix::vacuum(1)).unwrap(), 1.0);
        let sq = pure_state_cm(PureStateSpec::new(0.0, 4.0).unwrap()).unwrap();
        assert_relative_eq!(min_quadrature_eigenvalue(&sq).unwrap(), 0.25, epsilon = 1e-14);
        for theta in [0.1, 0.7, 2.0, -1.3] {
            let r = rotation(theta);
            let m = r * Matrix2::new(0.25, 0.0, 0.0, 4.0) * r.transpose();
            let s = CovarianceMatrix::from_matrix2(&((m + m.transpose()) * 0.5)).unwrap();
            assert_relative_eq!(min_quadrature_eigenvalue(&s).unwrap(), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_states() {
        let id = pure_state_cm(PureStateSpec::new(0.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(id.to_matrix2().unwrap(), Matrix2::identity(), epsilon = 1e-15);
        let s = pure_state_cm(PureStateSpec::new(0.0, 0.25).unwrap()).unwrap();
        assert_relative_eq!(s.to_matrix2().unwrap(), Matrix2::new(4.0, 0.0, 0.0, 0.25), epsilon = 1e-15);
        assert!(PureStateSpec::new(0.0, 0.0).is_err());
        assert!(PureStateSpec::new(0.0, -2.0).is_err());
    }

    #[test]
    fn schatten_distance_basics() {
        let a = CovarianceMatrix::vacuum(1);
        let b = CovarianceMatrix::thermal(1, 3.0);
        assert_eq!(schatten2_distance(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(schatten2_distance(&a, &b).unwrap(), 8f64.sqrt(), epsilon = 1e-14);
        assert!(schatten2_distance(&a, &CovarianceMatrix::vacuum(2)).is_err());
    }
}
