//! Multimode Gaussian states in photon-number units.
//!
//! Quadratures are ordered `(x₁, p₁, …, xₙ, pₙ)` with `[x̂, p̂] = i/2`, so a
//! vacuum quadrature has variance `1/4`. Linear optics acts on the covariance
//! matrix by congruence with a symplectic matrix.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Variance of either vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Tolerance for structural checks (symmetry, symplectic condition).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Tolerance for the uncertainty-principle audit.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Index of a mode inside a [`GaussianState`].
pub type ModeIndex = usize;

/// Standard symplectic form on `n` modes, block-diagonal in `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Mean vector and covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from raw moments. Checks dimensions and symmetry only;
    /// use [`GaussianState::check_physical`] for the uncertainty principle.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidDimension(format!(
                "mean vector length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite moment".into()));
        }
        let asym = max_asymmetry(&cov);
        if asym > STRUCTURAL_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { mean, cov })
    }

    /// `n` vacuum modes.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidDimension("a state needs at least one mode".into()));
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
        })
    }

    /// Product of coherent states `|α₁⟩ ⊗ … ⊗ |αₙ⟩` with `α = x + i p`.
    pub fn coherent(alphas: &[Complex64]) -> Result<Self> {
        let mut state = Self::vacuum(alphas.len())?;
        for (k, a) in alphas.iter().enumerate() {
            state.mean[2 * k] = a.re;
            state.mean[2 * k + 1] = a.im;
        }
        Ok(state)
    }

    /// Single-mode zero-mean state with diagonal covariance `diag(v_x, v_p)`.
    ///
    /// Pure squeezed vacuum has `v_x = e^{2r}/4`, `v_p = e^{-2r}/4` (or the
    /// reverse); `v_x · v_p > 1/16` describes a thermal squeezed state.
    pub fn squeezed_vacuum(v_x: f64, v_p: f64) -> Result<Self> {
        if !(v_x > 0.0 && v_p > 0.0) || !v_x.is_finite() || !v_p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quadrature variances must be positive and finite, got ({v_x}, {v_p})"
            )));
        }
        let floor = VACUUM_VARIANCE * VACUUM_VARIANCE;
        if v_x * v_p < floor - STRUCTURAL_TOL {
            return Err(Error::Unphysical(format!(
                "variance product {:e} below the uncertainty bound 1/16",
                v_x * v_p
            )));
        }
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::from_diagonal(&DVector::from_vec(vec![v_x, v_p])),
        })
    }

    /// Tensor product `self ⊗ other`; `other`'s modes are appended.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `(⟨x⟩, ⟨p⟩)` of one mode.
    pub fn mode_mean(&self, mode: ModeIndex) -> Result<(f64, f64)> {
        self.check_mode(mode)?;
        Ok((self.mean[2 * mode], self.mean[2 * mode + 1]))
    }

    /// `(Var x, Var p)` of one mode.
    pub fn mode_variances(&self, mode: ModeIndex) -> Result<(f64, f64)> {
        self.check_mode(mode)?;
        Ok((self.cov[(2 * mode, 2 * mode)], self.cov[(2 * mode + 1, 2 * mode + 1)]))
    }

    /// Variance of the linear combination `Σ wₖ qₖ` of quadratures.
    pub fn combination_variance(&self, weights: &DVector<f64>) -> Result<f64> {
        if weights.len() != self.mean.len() {
            return Err(Error::InvalidDimension(format!(
                "weight vector length {} does not match {} quadratures",
                weights.len(),
                self.mean.len()
            )));
        }
        Ok((weights.transpose() * &self.cov * weights)[(0, 0)])
    }

    pub(crate) fn check_mode(&self, mode: ModeIndex) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    fn check_modes(&self, modes: &[ModeIndex]) -> Result<()> {
        for (k, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..k].contains(&m) {
                return Err(Error::DuplicateMode(m));
            }
        }
        Ok(())
    }

    /// Applies `S` to the listed modes (in the order given) and the identity
    /// elsewhere: `μ → S μ`, `V → S V Sᵀ`.
    pub fn apply_symplectic(&self, s: &SymplecticMatrix, modes: &[ModeIndex]) -> Result<Self> {
        if s.n_modes() != modes.len() {
            return Err(Error::InvalidDimension(format!(
                "{}-mode symplectic applied to {} modes",
                s.n_modes(),
                modes.len()
            )));
        }
        self.check_modes(modes)?;
        let full = s.embed(self.n_modes(), modes);
        let mean = &full * &self.mean;
        let mut cov = &full * &self.cov * full.transpose();
        symmetrize(&mut cov);
        Ok(Self { mean, cov })
    }

    /// Shifts the mean of `mode` by `(dx, dp)`.
    pub fn displace(&self, mode: ModeIndex, dx: f64, dp: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += dx;
        out.mean[2 * mode + 1] += dp;
        Ok(out)
    }

    /// Pure-loss channel of transmissivity `eta` on one mode: the mode is mixed
    /// with vacuum on a beam splitter and the reflected port discarded.
    pub fn loss_channel(&self, mode: ModeIndex, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "transmissivity {eta} outside [0, 1]"
            )));
        }
        let t = eta.sqrt();
        let mut out = self.clone();
        for q in [2 * mode, 2 * mode + 1] {
            out.mean[q] *= t;
            for j in 0..out.cov.ncols() {
                out.cov[(q, j)] *= t;
            }
            for i in 0..out.cov.nrows() {
                out.cov[(i, q)] *= t;
            }
            out.cov[(q, q)] += (1.0 - eta) * VACUUM_VARIANCE;
        }
        Ok(out)
    }

    /// Reduced state of the listed modes, in the order given.
    pub fn partial_trace(&self, keep: &[ModeIndex]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidDimension("partial trace must keep at least one mode".into()));
        }
        self.check_modes(keep)?;
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        Ok(Self { mean, cov })
    }

    /// Symplectic eigenvalues in ascending order.
    ///
    /// The values `ν²` are the eigenvalues of the symmetric matrix
    /// `V^{1/2} Ω V Ωᵀ V^{1/2}`, which is similar to `-(ΩV)²`; each appears
    /// twice and one copy of each pair is kept.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let asym = max_asymmetry(&self.cov);
        if asym > STRUCTURAL_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        // V = L Lᵀ; the singular values of Lᵀ Ω L are the symplectic eigenvalues
        let chol = Cholesky::new(self.cov.clone())
            .ok_or_else(|| Error::Unphysical("covariance is not positive definite".into()))?;
        let l = chol.l();
        let omega = symplectic_form(self.n_modes());
        let a = l.transpose() * omega * &l;
        let mut m = a.transpose() * &a;
        symmetrize(&mut m);
        let mut nu2: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        nu2.sort_by(|a, b| a.total_cmp(b));
        Ok(nu2.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1]).max(0.0)).map(f64::sqrt).collect())
    }

    /// Uncertainty-principle audit: every symplectic eigenvalue must be at
    /// least `1/4 - 1e-9`.
    pub fn check_physical(&self) -> Result<()> {
        let nus = self.symplectic_eigenvalues()?;
        match nus.first() {
            Some(&nu) if nu < VACUUM_VARIANCE - PHYSICALITY_TOL => Err(Error::Unphysical(format!(
                "smallest symplectic eigenvalue {nu:.12} is below 1/4"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }
}

/// Real `2k × 2k` matrix preserving the symplectic form on `k` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || entries.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "symplectic matrix must be 2k x 2k, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let omega = symplectic_form(dim / 2);
        let dev = (entries.transpose() * &omega * &entries - &omega).amax();
        if dev > STRUCTURAL_TOL {
            return Err(Error::NotSymplectic(dev));
        }
        Ok(Self(entries))
    }

    pub fn identity(n_modes: usize) -> Self {
        Self(DMatrix::identity(2 * n_modes, 2 * n_modes))
    }

    /// Balanced beam splitter on a mode pair:
    /// `out₁ = (in₁ + in₂)/√2`, `out₂ = (in₁ − in₂)/√2`, identically on x and p.
    pub fn beam_splitter_50_50() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            h,   0.0, h,   0.0,
            0.0, h,   0.0, h,
            h,   0.0, -h,  0.0,
            0.0, h,   0.0, -h,
        ]);
        Self(m)
    }

    /// Phase-space rotation of one mode by `phi`:
    /// `x → x cos φ − p sin φ`, `p → x sin φ + p cos φ`.
    pub fn phase_shift(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Single-mode squeezer `diag(e^{-r}, e^{r})`; positive `r` squeezes x.
    pub fn squeezer(r: f64) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_vec(vec![(-r).exp(), r.exp()])))
    }

    pub fn n_modes(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SymplecticMatrix) -> Result<Self> {
        if self.n_modes() != first.n_modes() {
            return Err(Error::InvalidDimension("composing symplectics of different size".into()));
        }
        Ok(Self(&self.0 * &first.0))
    }

    /// Lifts this matrix to an `n_modes` system, acting on `modes` in order.
    pub fn embed(&self, n_modes: usize, modes: &[ModeIndex]) -> DMatrix<f64> {
        let mut full = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                full[(i, j)] = self.0[(a, b)];
            }
        }
        full
    }

    /// Lifts to an `n_modes` system and validates the result.
    pub fn embedded(&self, n_modes: usize, modes: &[ModeIndex]) -> Result<Self> {
        Self::new(self.embed(n_modes, modes))
    }
}
