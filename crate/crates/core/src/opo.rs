//! Below-threshold OPO squeezing model and the expected-fidelity sweep.
//!
//! With `x = √(P/P_th)` and analysis frequency `ω` in units of the cavity
//! half-bandwidth, the detected quadrature noise relative to vacuum is
//!
//! ```text
//! V∓ = 1 ∓ η · 4x / ((1 ± x)² + ω²)
//! ```
//!
//! This is a phenomenological stand-in for measured squeezing curves; its
//! parameters are fitted, not derived from cavity details.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::fidelity_unit_gain;
use crate::protocol::{run_analytic, ProtocolConfig};
use crate::resource::SqueezerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpoParams {
    /// Pump power at oscillation threshold, mW.
    pub p_threshold: f64,
    /// Overall detection efficiency.
    pub eta_det: f64,
    /// Analysis frequency over cavity half-bandwidth.
    pub omega: f64,
}

impl OpoParams {
    pub fn new(p_threshold: f64, eta_det: f64, omega: f64) -> Result<Self> {
        let p = Self { p_threshold, eta_det, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_threshold > 0.0 && self.p_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!("p_threshold {} must be positive", self.p_threshold)));
        }
        if !(0.0..=1.0).contains(&self.eta_det) {
            return Err(Error::InvalidParameter(format!("eta_det {} outside [0, 1]", self.eta_det)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega {} must be >= 0", self.omega)));
        }
        Ok(())
    }

    /// Normalized noise powers `(V₋, V₊)` at pump power `p_pump`.
    pub fn noise_powers(&self, p_pump: f64) -> Result<(f64, f64)> {
        self.validate()?;
        if !(p_pump >= 0.0 && p_pump < self.p_threshold) {
            return Err(Error::InvalidParameter(format!(
                "pump {p_pump} mW outside [0, {}) mW; above-threshold operation is not modelled",
                self.p_threshold
            )));
        }
        let x = (p_pump / self.p_threshold).sqrt();
        let w2 = self.omega * self.omega;
        let v_minus = 1.0 - self.eta_det * 4.0 * x / ((1.0 + x).powi(2) + w2);
        let v_plus = 1.0 + self.eta_det * 4.0 * x / ((1.0 - x).powi(2) + w2);
        Ok((v_minus, v_plus))
    }
}

/// Squeezing and antisqueezing (dB magnitudes) produced at `p_pump` mW.
pub fn squeezing_spectra(params: &OpoParams, p_pump: f64) -> Result<SqueezerSpec> {
    let (v_minus, v_plus) = params.noise_powers(p_pump)?;
    if v_minus <= 0.0 {
        return Err(Error::Numeric(format!("squeezed noise power {v_minus} is not positive")));
    }
    let sq = -10.0 * v_minus.log10();
    let anti = 10.0 * v_plus.log10();
    // η = 1 makes the product exactly one; clamp rounding so the spec validates.
    SqueezerSpec::new(sq.max(0.0), anti.max(sq.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPoint {
    pub p_pump: f64,
    pub spec: SqueezerSpec,
    pub var_x: f64,
    pub var_p: f64,
    pub fidelity: f64,
}

/// Expected clone fidelity at each pump power, both OPOs identical, unit gains
/// and the losses of `base`.
pub fn fidelity_vs_pump(params: &OpoParams, pump_grid: &[f64], base: &ProtocolConfig) -> Result<Vec<PumpPoint>> {
    pump_grid
        .iter()
        .map(|&p_pump| {
            let spec = squeezing_spectra(params, p_pump)?;
            let cfg = ProtocolConfig {
                spec_i: spec,
                spec_ii: spec,
                gains: Default::default(),
                input_alpha: Complex64::new(0.0, 0.0),
                ..*base
            };
            let clone = run_analytic(&cfg)?.clones[0];
            Ok(PumpPoint {
                p_pump,
                spec,
                var_x: clone.var_x,
                var_p: clone.var_p,
                fidelity: fidelity_unit_gain(clone.var_x, clone.var_p)?,
            })
        })
        .collect()
}

/// Measured squeezing point: pump power (mW) with both noise levels (dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSample {
    pub p_pump: f64,
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpoFit {
    pub params: OpoParams,
    /// Root-mean-square residual over both noise levels, dB.
    pub rms_residual_db: f64,
}

fn residual(data: &[SqueezingSample], p_threshold: f64, eta_det: f64, omega: f64) -> f64 {
    let params = OpoParams { p_threshold, eta_det, omega };
    let mut sum = 0.0;
    for d in data {
        match params.noise_powers(d.p_pump) {
            Ok((vm, vp)) if vm > 0.0 => {
                sum += (-10.0 * vm.log10() - d.squeezing_db).powi(2);
                sum += (10.0 * vp.log10() - d.antisqueezing_db).powi(2);
            }
            _ => return f64::INFINITY,
        }
    }
    (sum / (2 * data.len()) as f64).sqrt()
}

/// Least-squares fit of threshold power and detection efficiency at fixed `omega`:
/// coarse grid search followed by coordinate descent with shrinking steps.
pub fn fit_params(data: &[SqueezingSample], omega: f64) -> Result<OpoFit> {
    if data.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 data points, got {}",
            data.len()
        )));
    }
    let mut pumps: Vec<f64> = data.iter().map(|d| d.p_pump).collect();
    pumps.sort_by(|a, b| a.total_cmp(b));
    if pumps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("pump values must be distinct".into()));
    }
    if pumps[0] < 0.0 || data.iter().any(|d| !d.squeezing_db.is_finite() || !d.antisqueezing_db.is_finite()) {
        return Err(Error::InvalidParameter("data must be finite with non-negative pump".into()));
    }
    let p_max = *pumps.last().expect("non-empty");
    let p_floor = p_max.max(f64::MIN_POSITIVE) * (1.0 + 1e-9);

    // log-spaced threshold from just above the largest pump to 20× it
    let mut best = (f64::INFINITY, p_floor, 1.0);
    for i in 0..=80 {
        let pt = p_floor * 20f64.powf(i as f64 / 80.0);
        for j in 1..=50 {
            let eta = j as f64 / 50.0;
            let r = residual(data, pt, eta, omega);
            if r < best.0 {
                best = (r, pt, eta);
            }
        }
    }

    let (mut r, mut pt, mut eta) = best;
    let (mut step_p, mut step_e) = (0.05 * pt, 0.02);
    while step_p > 1e-12 * pt || step_e > 1e-12 {
        let mut improved = false;
        for cand in [pt + step_p, pt - step_p] {
            if cand > p_max {
                let rc = residual(data, cand, eta, omega);
                if rc < r {
                    (r, pt, improved) = (rc, cand, true);
                }
            }
        }
        for cand in [eta + step_e, eta - step_e] {
            if (0.0..=1.0).contains(&cand) {
                let rc = residual(data, pt, cand, omega);
                if rc < r {
                    (r, eta, improved) = (rc, cand, true);
                }
            }
        }
        if !improved {
            step_p *= 0.5;
            step_e *= 0.5;
        }
    }
    Ok(OpoFit {
        params: OpoParams::new(pt, eta, omega)?,
        rms_residual_db: r,
    })
}
