//! Tripartite entangled resource for 1→2 telecloning.
//!
//! Two squeezed vacua `i`, `ii` meet on a balanced splitter giving Alice's
//! mode `A = (i + ii)/√2` and `E = (i − ii)/√2`; `E` is split with a vacuum
//! `iii` into the receivers' modes `B = (E + iii)/√2`, `C = (E − iii)/√2`.
//! Mode `i` is squeezed in p and mode `ii` in x.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, SymplecticMatrix, STRUCTURAL_TOL, VACUUM_VARIANCE};
use crate::metrics::{db_to_variance, variance_to_db};

/// Mode positions inside a [`ResourceState`].
pub const MODE_A: usize = 0;
pub const MODE_B: usize = 1;
pub const MODE_C: usize = 2;

/// Squeezed and antisqueezed noise levels of one OPO output, in dB relative
/// to vacuum. Equal magnitudes describe a pure squeezed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezerSpec {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
}

impl SqueezerSpec {
    pub fn new(squeezing_db: f64, antisqueezing_db: f64) -> Result<Self> {
        if !squeezing_db.is_finite() || !antisqueezing_db.is_finite() {
            return Err(Error::InvalidParameter("squeezing levels must be finite".into()));
        }
        if squeezing_db < 0.0 || antisqueezing_db < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "squeezing levels are magnitudes and must be >= 0 dB, got {squeezing_db} / {antisqueezing_db}"
            )));
        }
        let spec = Self { squeezing_db, antisqueezing_db };
        let (v_sq, v_anti) = spec.variances();
        if v_sq * v_anti < VACUUM_VARIANCE * VACUUM_VARIANCE - STRUCTURAL_TOL {
            return Err(Error::Unphysical(format!(
                "antisqueezing {antisqueezing_db} dB is smaller than squeezing {squeezing_db} dB"
            )));
        }
        Ok(spec)
    }

    /// Pure squeezing of `db` decibels.
    pub fn pure(db: f64) -> Result<Self> {
        Self::new(db, db)
    }

    /// Pure squeezing with parameter `r`, i.e. variances `e^{∓2r}/4`.
    pub fn pure_from_r(r: f64) -> Result<Self> {
        Self::pure(10.0 * (2.0 * r).exp().log10())
    }

    /// `(v_squeezed, v_antisqueezed)`.
    pub fn variances(&self) -> (f64, f64) {
        (db_to_variance(-self.squeezing_db), db_to_variance(self.antisqueezing_db))
    }

    pub fn is_pure(&self) -> bool {
        (self.squeezing_db - self.antisqueezing_db).abs() < 1e-12
    }
}

/// Linear map from the source modes `(i, ii, iii)` to `(A, B, C)`.
pub fn resource_circuit() -> SymplecticMatrix {
    let bs = SymplecticMatrix::beam_splitter_50_50();
    let first = bs.embedded(3, &[0, 1]).expect("embedding a splitter is symplectic");
    let second = bs.embedded(3, &[1, 2]).expect("embedding a splitter is symplectic");
    second.compose(&first).expect("same dimension")
}

/// Per-mode transmissivities applied to A, B and C after the splitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceLoss {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_c: f64,
}

impl Default for ResourceLoss {
    fn default() -> Self {
        Self { eta_a: 1.0, eta_b: 1.0, eta_c: 1.0 }
    }
}

/// Three-mode state (A, B, C) shared by sender and receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceState {
    pub state: GaussianState,
    pub spec_i: SqueezerSpec,
    pub spec_ii: SqueezerSpec,
}

/// Receiver partnered with Alice in the bipartite criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Partner {
    B,
    C,
}

impl Partner {
    fn mode(self) -> usize {
        match self {
            Partner::B => MODE_B,
            Partner::C => MODE_C,
        }
    }
}

/// Source state `i ⊗ ii ⊗ iii` before the splitters.
pub fn source_state(spec_i: SqueezerSpec, spec_ii: SqueezerSpec) -> Result<GaussianState> {
    let (sq_i, anti_i) = spec_i.variances();
    let (sq_ii, anti_ii) = spec_ii.variances();
    let mode_i = GaussianState::squeezed_vacuum(anti_i, sq_i)?;
    let mode_ii = GaussianState::squeezed_vacuum(sq_ii, anti_ii)?;
    Ok(mode_i.tensor(&mode_ii).tensor(&GaussianState::vacuum(1)?))
}

pub fn build_telecloning_resource(
    spec_i: SqueezerSpec,
    spec_ii: SqueezerSpec,
    loss: Option<ResourceLoss>,
) -> Result<ResourceState> {
    // Re-validate in case the specs were constructed as struct literals.
    let spec_i = SqueezerSpec::new(spec_i.squeezing_db, spec_i.antisqueezing_db)?;
    let spec_ii = SqueezerSpec::new(spec_ii.squeezing_db, spec_ii.antisqueezing_db)?;
    let mut state = source_state(spec_i, spec_ii)?.apply_symplectic(&resource_circuit(), &[0, 1, 2])?;
    let loss = loss.unwrap_or_default();
    for (mode, eta) in [(MODE_A, loss.eta_a), (MODE_B, loss.eta_b), (MODE_C, loss.eta_c)] {
        if eta != 1.0 {
            state = state.loss_channel(mode, eta)?;
        }
    }
    state.check_physical()?;
    Ok(ResourceState { state, spec_i, spec_ii })
}

fn pair_lhs(state: &GaussianState, first: usize, second: usize) -> Result<f64> {
    let dim = 2 * state.n_modes();
    let mut minus_x = DVector::zeros(dim);
    minus_x[2 * first] = 1.0;
    minus_x[2 * second] = -1.0;
    let mut plus_p = DVector::zeros(dim);
    plus_p[2 * first + 1] = 1.0;
    plus_p[2 * second + 1] = 1.0;
    Ok(state.combination_variance(&minus_x)? + state.combination_variance(&plus_p)?)
}

/// `Var(x_A − x_partner) + Var(p_A + p_partner)`; a value below 1 certifies
/// entanglement between Alice and the partner.
pub fn bipartite_criterion_lhs(resource: &ResourceState, partner: Partner) -> Result<f64> {
    pair_lhs(&resource.state, MODE_A, partner.mode())
}

/// Closed-form criterion value for a lossless resource, written directly in
/// terms of the source variances.
pub fn bipartite_criterion_closed_form(spec_i: SqueezerSpec, spec_ii: SqueezerSpec) -> f64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    let a2 = ((1.0 - sqrt2) / 2.0).powi(2);
    let b2 = ((1.0 + sqrt2) / 2.0).powi(2);
    let (p_i, x_i) = spec_i.variances();
    let (x_ii, p_ii) = spec_ii.variances();
    a2 * (x_i + p_ii) + b2 * (x_ii + p_i) + VACUUM_VARIANCE
}

/// `Var(x_B − x_C) + Var(p_B + p_C)` for the two receivers.
pub fn clone_pair_criterion_lhs(resource: &ResourceState) -> Result<f64> {
    pair_lhs(&resource.state, MODE_B, MODE_C)
}

/// Squeezing that minimizes the bipartite criterion for pure, equal squeezers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSqueezing {
    pub r_star: f64,
    pub e_minus_2r: f64,
    pub db: f64,
}

/// `e^{−2r} = (√2 − 1)/(√2 + 1) = 3 − 2√2`.
pub fn optimal_squeezing() -> OptimalSqueezing {
    let sqrt2 = std::f64::consts::SQRT_2;
    let e_minus_2r = (sqrt2 - 1.0) / (sqrt2 + 1.0);
    OptimalSqueezing {
        r_star: -0.5 * e_minus_2r.ln(),
        e_minus_2r,
        db: -10.0 * e_minus_2r.log10(),
    }
}

/// Criterion value for pure squeezing `r` on both squeezers, evaluated on the
/// built resource.
pub fn symmetric_pure_lhs(r: f64) -> Result<f64> {
    let spec = SqueezerSpec::pure_from_r(r)?;
    let res = build_telecloning_resource(spec, spec, None)?;
    bipartite_criterion_lhs(&res, Partner::B)
}

/// Golden-section minimization of [`symmetric_pure_lhs`] over `r ∈ [lo, hi]`.
/// Returns `(r_min, lhs_min)`.
pub fn minimize_symmetric_lhs(lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    if !(lo >= 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}] / tol {tol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = symmetric_pure_lhs(c)?;
    let mut fd = symmetric_pure_lhs(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = symmetric_pure_lhs(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = symmetric_pure_lhs(d)?;
        }
    }
    let r = 0.5 * (a + b);
    Ok((r, symmetric_pure_lhs(r)?))
}

/// Reduced single-mode noise of each resource mode in dB above vacuum,
/// `[(x_A, p_A), (x_B, p_B), (x_C, p_C)]`.
pub fn mode_noise_db(resource: &ResourceState) -> Result<[(f64, f64); 3]> {
    let mut out = [(0.0, 0.0); 3];
    for (m, slot) in out.iter_mut().enumerate() {
        let (vx, vp) = resource.state.mode_variances(m)?;
        *slot = (variance_to_db(vx)?, variance_to_db(vp)?);
    }
    Ok(out)
}
