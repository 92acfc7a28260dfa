//! Fidelity, gain estimation and noise-level conversions.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::VACUUM_VARIANCE;
use crate::protocol::CloneMoments;

/// Best average fidelity for coherent-state cloning without entanglement.
pub const CLASSICAL_LIMIT: f64 = 0.5;

/// Optimal fidelity of Gaussian 1→2 coherent-state cloning.
pub const OPTIMAL_GAUSSIAN: f64 = 2.0 / 3.0;

/// Multiple of the clone-mean standard error below which an input amplitude
/// is too small to define a gain.
pub const GAIN_FLOOR_SE_MULTIPLE: f64 = 10.0;

/// Noise level of variance `v` in dB above vacuum.
pub fn variance_to_db(v: f64) -> Result<f64> {
    if v <= 0.0 || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {v}")));
    }
    Ok(10.0 * (v / VACUUM_VARIANCE).log10())
}

/// Variance corresponding to a noise level `db` relative to vacuum.
pub fn db_to_variance(db: f64) -> f64 {
    VACUUM_VARIANCE * 10f64.powf(db / 10.0)
}

/// Fidelity of a unit-gain clone with quadrature variances `var_x`, `var_p`
/// against its coherent input: `2 / √((1 + 4 var_x)(1 + 4 var_p))`.
pub fn fidelity_unit_gain(var_x: f64, var_p: f64) -> Result<f64> {
    if !(var_x > 0.0 && var_p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variances must be positive, got ({var_x}, {var_p})"
        )));
    }
    Ok(2.0 / ((1.0 + 4.0 * var_x) * (1.0 + 4.0 * var_p)).sqrt())
}

/// Overlap `⟨α|ρ|α⟩` of a single-mode Gaussian state with a coherent state.
///
/// With `δ = mean − (Re α, Im α)` and `Σ = V + I/4`,
/// `F = exp(−½ δᵀ Σ⁻¹ δ) / (2 √det Σ)`.
pub fn fidelity_general(clone_mean: (f64, f64), clone_cov: &Matrix2<f64>, alpha: Complex64) -> Result<f64> {
    if (clone_cov[(0, 1)] - clone_cov[(1, 0)]).abs() > 1e-12 {
        return Err(Error::NotSymmetric((clone_cov[(0, 1)] - clone_cov[(1, 0)]).abs()));
    }
    if clone_cov.cholesky().is_none() {
        return Err(Error::InvalidParameter("clone covariance is not positive definite".into()));
    }
    let sigma = clone_cov + Matrix2::identity() * VACUUM_VARIANCE;
    let det = sigma.determinant();
    let inv = sigma
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular overlap matrix".into()))?;
    let delta = Vector2::new(clone_mean.0 - alpha.re, clone_mean.1 - alpha.im);
    let quad = (delta.transpose() * inv * delta)[(0, 0)];
    Ok((-0.5 * quad).exp() / (2.0 * det.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f_clone1: f64,
    pub f_clone2: f64,
    pub classical_limit: f64,
    pub optimal_gaussian: f64,
}

impl FidelityReport {
    /// Fidelities of both clones against the coherent input `alpha`. Clone
    /// quadratures are uncorrelated in this protocol, so each clone covariance
    /// is diagonal.
    pub fn from_moments(moments: &CloneMoments, alpha: Complex64) -> Result<Self> {
        let [c1, c2] = moments.clones;
        let f = |c: crate::protocol::SingleClone| {
            let cov = Matrix2::new(c.var_x, 0.0, 0.0, c.var_p);
            fidelity_general((c.mean_x, c.mean_p), &cov, alpha)
        };
        Ok(Self {
            f_clone1: f(c1)?,
            f_clone2: f(c2)?,
            classical_limit: CLASSICAL_LIMIT,
            optimal_gaussian: OPTIMAL_GAUSSIAN,
        })
    }

    pub fn beats_classical_limit(&self) -> bool {
        self.f_clone1 > CLASSICAL_LIMIT && self.f_clone2 > CLASSICAL_LIMIT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub value: f64,
    pub std_err: Option<f64>,
}

/// Gain of each clone quadrature, `⟨clone⟩ / ⟨input⟩`. A component is an
/// error when the input mean is below the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct GainEstimates {
    pub gx1: Result<GainEstimate>,
    pub gp1: Result<GainEstimate>,
    pub gx2: Result<GainEstimate>,
    pub gp2: Result<GainEstimate>,
}

impl GainEstimates {
    pub fn values(&self) -> [Option<f64>; 4] {
        [&self.gx1, &self.gp1, &self.gx2, &self.gp2].map(|g| g.as_ref().ok().map(|g| g.value))
    }
}

fn gain_component(
    component: &'static str,
    clone_mean: f64,
    clone_se: Option<f64>,
    input_mean: f64,
) -> Result<GainEstimate> {
    let floor = clone_se.map_or(0.0, |se| GAIN_FLOOR_SE_MULTIPLE * se);
    let amplitude = input_mean.abs();
    if amplitude <= floor || amplitude < f64::MIN_POSITIVE {
        return Err(Error::UndefinedGain { component, amplitude, floor });
    }
    Ok(GainEstimate {
        value: clone_mean / input_mean,
        std_err: clone_se.map(|se| se / amplitude),
    })
}

/// Ratio of clone means to input means for every clone quadrature.
pub fn estimate_gains(moments: &CloneMoments, alpha: Complex64) -> GainEstimates {
    let [c1, c2] = moments.clones;
    GainEstimates {
        gx1: gain_component("gx1", c1.mean_x, c1.se_mean_x, alpha.re),
        gp1: gain_component("gp1", c1.mean_p, c1.se_mean_p, alpha.im),
        gx2: gain_component("gx2", c2.mean_x, c2.se_mean_x, alpha.re),
        gp2: gain_component("gp2", c2.mean_p, c2.se_mean_p, alpha.im),
    }
}
