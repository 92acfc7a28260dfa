//! Ideal homodyne detection of a single quadrature.
//!
//! Measuring quadrature `q` of one mode conditions the remaining modes by a
//! rank-1 Schur complement; the measured mode is then discarded together with
//! its unmeasured conjugate quadrature. Detector inefficiency is modelled by
//! a [`GaussianState::loss_channel`] on the measured mode beforehand.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, ModeIndex};

/// Marginal variances below this are treated as a degenerate measurement.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSelector {
    pub mode: ModeIndex,
    pub quadrature: Quadrature,
}

impl QuadratureSelector {
    pub fn x(mode: ModeIndex) -> Self {
        Self { mode, quadrature: Quadrature::X }
    }

    pub fn p(mode: ModeIndex) -> Self {
        Self { mode, quadrature: Quadrature::P }
    }

    /// Position of the quadrature in the `(x₁, p₁, …)` ordering.
    pub fn index(&self) -> usize {
        match self.quadrature {
            Quadrature::X => 2 * self.mode,
            Quadrature::P => 2 * self.mode + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneOutcome {
    pub value: f64,
    pub selector: QuadratureSelector,
}

/// `(mean, variance)` of the selected quadrature.
pub fn marginal(state: &GaussianState, sel: QuadratureSelector) -> Result<(f64, f64)> {
    state.check_mode(sel.mode)?;
    let q = sel.index();
    Ok((state.mean()[q], state.cov()[(q, q)]))
}

/// Outcome-independent part of a homodyne conditioning.
///
/// For an outcome `y`, the kept modes have mean `base_mean + gain·(y − marginal_mean)`
/// and covariance `cov`, whatever the value of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioning {
    pub selector: QuadratureSelector,
    pub marginal_mean: f64,
    pub marginal_variance: f64,
    /// Cross-covariance column divided by the marginal variance, over kept quadratures.
    pub gain: DVector<f64>,
    base_mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Conditioning {
    pub fn new(state: &GaussianState, sel: QuadratureSelector) -> Result<Self> {
        if state.n_modes() < 2 {
            return Err(Error::InvalidDimension(
                "conditioning would remove the only mode of the state".into(),
            ));
        }
        let (m_q, v_q) = marginal(state, sel)?;
        if v_q < DEGENERATE_VARIANCE {
            return Err(Error::Singular(v_q));
        }
        let q = sel.index();
        let kept: Vec<usize> = (0..state.mean().len())
            .filter(|&i| i / 2 != sel.mode)
            .collect();
        let cov = state.cov();
        let c = DVector::from_iterator(kept.len(), kept.iter().map(|&i| cov[(i, q)]));
        let base_mean = DVector::from_iterator(kept.len(), kept.iter().map(|&i| state.mean()[i]));
        let cov_k = DMatrix::from_fn(kept.len(), kept.len(), |a, b| cov[(kept[a], kept[b])]);
        let mut cov_cond = cov_k - &c * c.transpose() / v_q;
        // restore exact symmetry lost to rounding in the outer product
        for a in 0..cov_cond.nrows() {
            for b in (a + 1)..cov_cond.ncols() {
                let avg = 0.5 * (cov_cond[(a, b)] + cov_cond[(b, a)]);
                cov_cond[(a, b)] = avg;
                cov_cond[(b, a)] = avg;
            }
        }
        Ok(Self {
            selector: sel,
            marginal_mean: m_q,
            marginal_variance: v_q,
            gain: c / v_q,
            base_mean,
            cov: cov_cond,
        })
    }

    /// Conditional covariance of the kept modes.
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Conditional state for the outcome `value`.
    pub fn at(&self, value: f64) -> Result<GaussianState> {
        let mean = &self.base_mean + &self.gain * (value - self.marginal_mean);
        GaussianState::from_moments(mean, self.cov.clone())
    }
}

/// State of the remaining modes after measuring `sel` with result `value`.
pub fn condition_on(state: &GaussianState, sel: QuadratureSelector, value: f64) -> Result<GaussianState> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite outcome {value}")));
    }
    Conditioning::new(state, sel)?.at(value)
}

/// Draws an outcome from the marginal distribution without conditioning.
pub fn sample_marginal<R: Rng + ?Sized>(
    state: &GaussianState,
    sel: QuadratureSelector,
    rng: &mut R,
) -> Result<HomodyneOutcome> {
    let (m, v) = marginal(state, sel)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(HomodyneOutcome { value: m + v.sqrt() * z, selector: sel })
}

/// Measures `sel`: samples an outcome and returns the conditioned remaining modes.
pub fn sample_homodyne<R: Rng + ?Sized>(
    state: &GaussianState,
    sel: QuadratureSelector,
    rng: &mut R,
) -> Result<(HomodyneOutcome, GaussianState)> {
    let cond = Conditioning::new(state, sel)?;
    let outcome = sample_marginal(state, sel, rng)?;
    let post = cond.at(outcome.value)?;
    Ok((outcome, post))
}

/// Deterministic generator for shot `shot` derived from a master seed.
///
/// Every shot owns its own ChaCha stream, so results do not depend on the
/// order or thread in which shots are executed. Draws within a shot are taken
/// sequentially from that stream.
pub fn shot_stream(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}
