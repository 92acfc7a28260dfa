//! End-to-end 1→2 telecloning.
//!
//! Alice mixes the input with her resource mode `A` on a balanced splitter,
//! giving `u = (in − A)/√2` and `v = (in + A)/√2`, and homodynes `x_u` and
//! `p_v`. Bob and Claire displace their modes by `√2·g_x·x_u` and
//! `√2·g_p·p_v`, which leaves
//!
//! ```text
//! x_{1,2} = g_x x_in + (x_{B,C} − g_x x_A)
//! p_{1,2} = g_p p_in + (p_{B,C} + g_p p_A)
//! ```
//!
//! Three routes compute the clone moments: [`run_analytic`] sums the
//! Heisenberg expansion over independent noise sources, [`run_circuit_analytic`]
//! pushes the covariance matrix through the measurement and feedforward, and
//! [`run_monte_carlo`] samples individual shots.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, SymplecticMatrix, VACUUM_VARIANCE};
use crate::homodyne::{sample_homodyne, shot_stream, Conditioning, QuadratureSelector};
use crate::resource::{build_telecloning_resource, ResourceLoss, SqueezerSpec};

/// Mode positions in the four-mode protocol state.
pub const MODE_IN: usize = 0;
pub const MODE_A: usize = 1;
pub const MODE_B: usize = 2;
pub const MODE_C: usize = 3;

/// After Alice's splitter, mode 0 carries `v = (in + A)/√2` and mode 1 `u = (in − A)/√2`.
pub const MODE_V: usize = 0;
pub const MODE_U: usize = 1;

/// Feedforward gains of the classical channels to each clone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub gx1: f64,
    pub gp1: f64,
    pub gx2: f64,
    pub gp2: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self { gx1: 1.0, gp1: 1.0, gx2: 1.0, gp2: 1.0 }
    }
}

impl Gains {
    pub fn uniform(g: f64) -> Self {
        Self { gx1: g, gp1: g, gx2: g, gp2: g }
    }

    /// `(g_x, g_p)` of clone 1 or 2 (index 0 or 1).
    fn clone_pair(&self, clone: usize) -> (f64, f64) {
        if clone == 0 {
            (self.gx1, self.gp1)
        } else {
            (self.gx2, self.gp2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub spec_i: SqueezerSpec,
    pub spec_ii: SqueezerSpec,
    pub input_alpha: Complex64,
    pub gains: Gains,
    /// Homodyne detection efficiency; must be positive so the gain can be calibrated.
    pub eta_homodyne: f64,
    pub eta_resource: ResourceLoss,
    /// Transmissivity of the coupler that injects the feedforward into each clone mode.
    pub coupler_t: f64,
    pub shots: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    /// Ideal protocol with the given squeezers, unit gains and no loss.
    pub fn ideal(spec_i: SqueezerSpec, spec_ii: SqueezerSpec, input_alpha: Complex64) -> Self {
        Self {
            spec_i,
            spec_ii,
            input_alpha,
            gains: Gains::default(),
            eta_homodyne: 1.0,
            eta_resource: ResourceLoss::default(),
            coupler_t: 1.0,
            shots: 1000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        SqueezerSpec::new(self.spec_i.squeezing_db, self.spec_i.antisqueezing_db)?;
        SqueezerSpec::new(self.spec_ii.squeezing_db, self.spec_ii.antisqueezing_db)?;
        if !self.input_alpha.re.is_finite() || !self.input_alpha.im.is_finite() {
            return Err(Error::InvalidParameter("input amplitude must be finite".into()));
        }
        let g = self.gains;
        if [g.gx1, g.gp1, g.gx2, g.gp2].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("gains must be finite".into()));
        }
        if !(self.eta_homodyne > 0.0 && self.eta_homodyne <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_homodyne {} outside (0, 1]",
                self.eta_homodyne
            )));
        }
        let r = self.eta_resource;
        for (name, eta) in [("eta_resource_a", r.eta_a), ("eta_resource_b", r.eta_b), ("eta_resource_c", r.eta_c)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter(format!("{name} {eta} outside [0, 1]")));
            }
        }
        if !(self.coupler_t > 0.0 && self.coupler_t <= 1.0) {
            return Err(Error::InvalidParameter(format!("coupler_t {} outside (0, 1]", self.coupler_t)));
        }
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        Ok(())
    }

    /// Multiplier turning a measured (post-loss) outcome into the displacement,
    /// chosen so the overall gain equals the configured one.
    fn feedforward_factor(&self, gain: f64) -> f64 {
        std::f64::consts::SQRT_2 * gain / self.eta_homodyne.sqrt()
    }
}

/// Moments of one clone. Standard errors are present for Monte Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleClone {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub se_mean_x: Option<f64>,
    pub se_mean_p: Option<f64>,
    pub se_var_x: Option<f64>,
    pub se_var_p: Option<f64>,
}

impl SingleClone {
    fn exact(mean_x: f64, mean_p: f64, var_x: f64, var_p: f64) -> Self {
        Self {
            mean_x,
            mean_p,
            var_x,
            var_p,
            se_mean_x: None,
            se_mean_p: None,
            se_var_x: None,
            se_var_p: None,
        }
    }

    /// `[mean_x, mean_p, var_x, var_p]`.
    pub fn moments(&self) -> [f64; 4] {
        [self.mean_x, self.mean_p, self.var_x, self.var_p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloneMoments {
    pub clones: [SingleClone; 2],
}

impl CloneMoments {
    /// All eight moments, clone 1 first.
    pub fn flat(&self) -> [f64; 8] {
        let [a, b] = self.clones.map(|c| c.moments());
        [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
    }
}

/// Independent noise sources of the Heisenberg expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    /// Input mode.
    Input,
    /// First squeezer (antisqueezed in x, squeezed in p).
    SqueezerI,
    /// Second squeezer (squeezed in x, antisqueezed in p).
    SqueezerII,
    /// Vacuum entering the second resource splitter.
    VacuumIII,
    /// Vacuum admitted by propagation loss on A, B or C.
    LossA,
    LossB,
    LossC,
    /// Vacuum admitted by homodyne inefficiency on the measured mode.
    Homodyne,
    /// Vacuum admitted by the feedforward coupler of this clone.
    Coupler,
}

/// Coefficients of one clone quadrature on the independent sources.
///
/// `quadrature_p == false` selects x. `clone` is 0 for Bob, 1 for Claire.
pub fn clone_expansion(config: &ProtocolConfig, clone: usize, quadrature_p: bool) -> Vec<(Source, f64)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let loss = config.eta_resource;
    let (ta, tb, tc) = (loss.eta_a.sqrt(), loss.eta_b.sqrt(), loss.eta_c.sqrt());
    let (gx, gp) = config.gains.clone_pair(clone);
    let t = config.coupler_t.sqrt();
    let eta = config.eta_homodyne;
    let hd = std::f64::consts::SQRT_2 * ((1.0 - eta) / eta).sqrt();
    // Receiver mode = (i − ii)/2 ± iii/√2 before its own loss.
    let (t_recv, loss_src, sign_iii) = if clone == 0 {
        (tb, Source::LossB, 1.0)
    } else {
        (tc, Source::LossC, -1.0)
    };
    let recv_loss = (1.0 - t_recv * t_recv).max(0.0).sqrt();
    let a_loss = (1.0 - ta * ta).max(0.0).sqrt();
    if !quadrature_p {
        // x_clone = √T x_recv + g_x (x_in − x_A) + noise
        vec![
            (Source::Input, gx),
            (Source::SqueezerI, t * t_recv * 0.5 - gx * ta * h),
            (Source::SqueezerII, -t * t_recv * 0.5 - gx * ta * h),
            (Source::VacuumIII, sign_iii * t * t_recv * h),
            (Source::LossA, -gx * a_loss),
            (loss_src, t * recv_loss),
            (Source::Homodyne, gx * hd),
            (Source::Coupler, (1.0 - config.coupler_t).sqrt()),
        ]
    } else {
        // p_clone = √T p_recv + g_p (p_in + p_A) + noise
        vec![
            (Source::Input, gp),
            (Source::SqueezerI, t * t_recv * 0.5 + gp * ta * h),
            (Source::SqueezerII, -t * t_recv * 0.5 + gp * ta * h),
            (Source::VacuumIII, sign_iii * t * t_recv * h),
            (Source::LossA, gp * a_loss),
            (loss_src, t * recv_loss),
            (Source::Homodyne, gp * hd),
            (Source::Coupler, (1.0 - config.coupler_t).sqrt()),
        ]
    }
}

fn source_variance(config: &ProtocolConfig, source: Source, quadrature_p: bool) -> f64 {
    let (sq_i, anti_i) = config.spec_i.variances();
    let (sq_ii, anti_ii) = config.spec_ii.variances();
    match (source, quadrature_p) {
        (Source::SqueezerI, false) => anti_i,
        (Source::SqueezerI, true) => sq_i,
        (Source::SqueezerII, false) => sq_ii,
        (Source::SqueezerII, true) => anti_ii,
        _ => VACUUM_VARIANCE,
    }
}

/// Clone moments from the Heisenberg expansion. Every source is an
/// independent mode, so variances add with squared coefficients.
pub fn run_analytic(config: &ProtocolConfig) -> Result<CloneMoments> {
    config.validate()?;
    let alpha = config.input_alpha;
    let mut clones = [SingleClone::exact(0.0, 0.0, 0.0, 0.0); 2];
    for (k, slot) in clones.iter_mut().enumerate() {
        let mut moments = [0.0; 4];
        for (q, quadrature_p) in [false, true].into_iter().enumerate() {
            let terms = clone_expansion(config, k, quadrature_p);
            let input_mean = if quadrature_p { alpha.im } else { alpha.re };
            moments[q] = terms
                .iter()
                .filter(|(s, _)| *s == Source::Input)
                .map(|(_, c)| c * input_mean)
                .sum();
            moments[2 + q] = terms
                .iter()
                .map(|&(s, c)| c * c * source_variance(config, s, quadrature_p))
                .sum();
        }
        *slot = SingleClone::exact(moments[0], moments[1], moments[2], moments[3]);
    }
    Ok(CloneMoments { clones })
}

/// Four-mode state just before detection: `(v, u, B, C)` with detector and
/// coupler losses already applied.
pub fn pre_measurement_state(config: &ProtocolConfig) -> Result<GaussianState> {
    config.validate()?;
    let resource = build_telecloning_resource(config.spec_i, config.spec_ii, Some(config.eta_resource))?;
    let mut state = GaussianState::coherent(&[config.input_alpha])?.tensor(&resource.state);
    state.check_physical()?;
    for mode in [MODE_B, MODE_C] {
        state = state.loss_channel(mode, config.coupler_t)?;
    }
    state = state.apply_symplectic(&SymplecticMatrix::beam_splitter_50_50(), &[MODE_IN, MODE_A])?;
    state.check_physical()?;
    for mode in [MODE_V, MODE_U] {
        state = state.loss_channel(mode, config.eta_homodyne)?;
    }
    state.check_physical()?;
    Ok(state)
}

/// Outcome-independent description of the measured protocol.
#[derive(Debug, Clone)]
pub struct FeedforwardModel {
    /// Conditional covariance of `(x_B, p_B, x_C, p_C)` given both outcomes.
    pub conditional_cov: DMatrix<f64>,
    /// Outcome-averaged clone means after feedforward.
    pub mean: DVector<f64>,
    /// Outcome-averaged clone covariance after feedforward.
    pub cov: DMatrix<f64>,
}

/// Displacement of `(x_B, p_B, x_C, p_C)` per unit of the x_u and p_v outcomes.
fn feedforward_vectors(config: &ProtocolConfig) -> (DVector<f64>, DVector<f64>) {
    let g = config.gains;
    let fx = DVector::from_vec(vec![
        config.feedforward_factor(g.gx1),
        0.0,
        config.feedforward_factor(g.gx2),
        0.0,
    ]);
    let fp = DVector::from_vec(vec![
        0.0,
        config.feedforward_factor(g.gp1),
        0.0,
        config.feedforward_factor(g.gp2),
    ]);
    (fx, fp)
}

/// Gaussian algebra of the Bell measurement and feedforward.
///
/// Conditioning first on `x_u` and then on `p_v` makes the receivers' mean
/// affine in the two innovations `e₁ = x_u − ⟨x_u⟩` and
/// `e₂ = p_v − ⟨p_v | x_u⟩`, which are independent with the marginal
/// variances of each step. Adding the displacement and averaging over them
/// gives the unconditional clone moments.
pub fn feedforward_model(config: &ProtocolConfig) -> Result<FeedforwardModel> {
    let state = pre_measurement_state(config)?;
    let first = Conditioning::new(&state, QuadratureSelector::x(MODE_U))?;
    // remaining modes: v, B, C
    let after_first = first.at(first.marginal_mean)?;
    after_first.check_physical()?;
    let second = Conditioning::new(&after_first, QuadratureSelector::p(0))?;
    let receivers = second.at(second.marginal_mean)?;
    receivers.check_physical()?;

    let (fx, fp) = feedforward_vectors(config);
    let g1_recv = first.gain.rows(2, 4).into_owned();
    let g1_pv = first.gain[1];
    let a = &g1_recv + &fx + &fp * g1_pv;
    let b = &second.gain + &fp;

    let cov = second.cov() + &a * a.transpose() * first.marginal_variance
        + &b * b.transpose() * second.marginal_variance;
    let mean = receivers.mean() + &fx * first.marginal_mean + &fp * second.marginal_mean;
    let averaged = GaussianState::from_moments(mean.clone(), symmetrized(cov))?;
    averaged.check_physical()?;
    Ok(FeedforwardModel {
        conditional_cov: second.cov().clone(),
        mean,
        cov: averaged.cov().clone(),
    })
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Clone moments from the covariance-matrix pipeline with conditioning.
pub fn run_circuit_analytic(config: &ProtocolConfig) -> Result<CloneMoments> {
    let model = feedforward_model(config)?;
    let m = &model.mean;
    let v = &model.cov;
    Ok(CloneMoments {
        clones: [
            SingleClone::exact(m[0], m[1], v[(0, 0)], v[(1, 1)]),
            SingleClone::exact(m[2], m[3], v[(2, 2)], v[(3, 3)]),
        ],
    })
}

/// One Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub x_u: f64,
    pub p_v: f64,
    /// `(x₁, p₁, x₂, p₂)`: conditional clone means after feedforward, or sampled
    /// quadrature values in [`Estimator::FullySampled`] mode.
    pub clones: [f64; 4],
}

/// How Monte Carlo clone moments are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Spread of per-shot conditional means plus the fixed conditional covariance.
    #[default]
    ConditionalMoments,
    /// One quadrature value drawn per clone quadrature per shot.
    FullySampled,
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub moments: CloneMoments,
    pub records: Vec<ShotRecord>,
}

fn simulate_shot(
    state: &GaussianState,
    config: &ProtocolConfig,
    fx: &DVector<f64>,
    fp: &DVector<f64>,
    estimator: Estimator,
    shot: u64,
) -> Result<(ShotRecord, GaussianState)> {
    let mut rng = shot_stream(config.seed, shot);
    let (xu, s1) = sample_homodyne(state, QuadratureSelector::x(MODE_U), &mut rng)?;
    let (pv, s2) = sample_homodyne(&s1, QuadratureSelector::p(0), &mut rng)?;
    let shift = fx * xu.value + fp * pv.value;
    let post = s2
        .displace(0, shift[0], shift[1])?
        .displace(1, shift[2], shift[3])?;
    let m = post.mean();
    let clones = match estimator {
        Estimator::ConditionalMoments => [m[0], m[1], m[2], m[3]],
        Estimator::FullySampled => {
            let mut out = [0.0; 4];
            for (q, slot) in out.iter_mut().enumerate() {
                let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                *slot = m[q] + post.cov()[(q, q)].sqrt() * z;
            }
            out
        }
    };
    Ok((ShotRecord { shot, x_u: xu.value, p_v: pv.value, clones }, post))
}

/// Sample mean, sample variance (n − 1) and the standard errors of both.
fn sample_stats(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, Option<f64>, Option<f64>) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0, None, None);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se_mean = (var / n as f64).sqrt();
    let se_var = var * (2.0 / (n - 1) as f64).sqrt();
    (mean, var, Some(se_mean), Some(se_var))
}

pub fn run_monte_carlo(config: &ProtocolConfig) -> Result<MonteCarloRun> {
    run_monte_carlo_with(config, Estimator::default())
}

/// Samples `config.shots` Bell measurements and feedforwards. Shots run in
/// parallel on independent streams and are aggregated in shot order, so the
/// result depends only on the seed.
pub fn run_monte_carlo_with(config: &ProtocolConfig, estimator: Estimator) -> Result<MonteCarloRun> {
    let state = pre_measurement_state(config)?;
    let (fx, fp) = feedforward_vectors(config);
    // The conditional covariance does not depend on the outcomes: audit it once.
    let (_, reference) = simulate_shot(&state, config, &fx, &fp, estimator, 0)?;
    reference.check_physical()?;
    let conditional_cov = reference.cov().clone();

    let records: Vec<ShotRecord> = (0..config.shots)
        .into_par_iter()
        .map(|shot| simulate_shot(&state, config, &fx, &fp, estimator, shot).map(|(r, _)| r))
        .collect::<Result<_>>()?;

    let mut clones = [SingleClone::exact(0.0, 0.0, 0.0, 0.0); 2];
    for (k, slot) in clones.iter_mut().enumerate() {
        let mut est = [(0.0, 0.0, None, None); 2];
        for (q, e) in est.iter_mut().enumerate() {
            let col = 2 * k + q;
            let (mean, var, se_mean, se_var) = sample_stats(records.iter().map(|r| r.clones[col]));
            let total = match estimator {
                Estimator::ConditionalMoments => var + conditional_cov[(col, col)],
                Estimator::FullySampled => var,
            };
            *e = (mean, total, se_mean, se_var);
        }
        *slot = SingleClone {
            mean_x: est[0].0,
            mean_p: est[1].0,
            var_x: est[0].1,
            var_p: est[1].1,
            se_mean_x: est[0].2,
            se_mean_p: est[1].2,
            se_var_x: est[0].3,
            se_var_p: est[1].3,
        };
    }
    Ok(MonteCarloRun { moments: CloneMoments { clones }, records })
}

/// Noise seen by Alice's p detector and the power drop of the measured signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliceLevels {
    /// `Var(p_v)` for a vacuum input; identical for any coherent input.
    pub var_pv_vacuum_input: f64,
    /// The same variance in dB above vacuum.
    pub var_pv_db: f64,
    /// Mean-power reduction of the measured mode relative to the input, in dB.
    pub amplitude_reduction_db: f64,
}

pub fn alice_trace_levels(config: &ProtocolConfig) -> Result<AliceLevels> {
    let vacuum_input = ProtocolConfig { input_alpha: Complex64::new(0.0, 0.0), ..*config };
    let state = pre_measurement_state(&vacuum_input)?;
    let (_, var_pv) = state.mode_variances(MODE_V)?;

    let probe = Complex64::new(1.0, 1.0);
    let split = GaussianState::coherent(&[probe, Complex64::new(0.0, 0.0)])?
        .apply_symplectic(&SymplecticMatrix::beam_splitter_50_50(), &[0, 1])?;
    let (mx, mp) = split.mode_mean(MODE_V)?;
    let reduction = 10.0 * (probe.norm_sqr() / (mx * mx + mp * mp)).log10();
    Ok(AliceLevels {
        var_pv_vacuum_input: var_pv,
        var_pv_db: crate::metrics::variance_to_db(var_pv)?,
        amplitude_reduction_db: reduction,
    })
}
