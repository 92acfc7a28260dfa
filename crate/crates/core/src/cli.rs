//! Command-line front end: `run`, `sample`, `sweep` and `criteria`.
//!
//! Results go to standard output as one JSON document (CSV for `sweep`);
//! a human-readable summary goes to standard error. Exit codes: 0 success,
//! 1 configuration or usage error, 2 physicality or numerical failure.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::{ConfigError, RunConfig};
use crate::metrics::{estimate_gains, FidelityReport, GainEstimate};
use crate::opo::squeezing_spectra;
use crate::protocol::{
    alice_trace_levels, run_analytic, run_circuit_analytic, run_monte_carlo_with, AliceLevels, CloneMoments,
    Estimator, ProtocolConfig, ShotRecord,
};
use crate::resource::{
    bipartite_criterion_lhs, build_telecloning_resource, clone_pair_criterion_lhs, optimal_squeezing,
    OptimalSqueezing, Partner, SqueezerSpec,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Maximum disagreement tolerated between the two analytic routes.
pub const PATH_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "teleclone", version, about = "Simulate 1->2 telecloning of coherent states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic clone moments, fidelities and criteria for a configuration.
    Run { config: PathBuf },
    /// Monte Carlo simulation of Bell measurement and feedforward.
    Sample {
        config: PathBuf,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-shot CSV output path.
        #[arg(long, default_value = "shots.csv")]
        csv: PathBuf,
        /// Draw one quadrature value per clone per shot instead of using
        /// conditional moments.
        #[arg(long)]
        fully_sampled: bool,
    },
    /// Fidelity versus squeezing (pure, symmetric) or OPO pump power, as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Inseparability criterion values and the optimal squeezing.
    Criteria { config: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum SweepParam {
    #[value(name = "squeezing_db")]
    #[serde(rename = "squeezing_db")]
    SqueezingDb,
    #[value(name = "pump_mw")]
    #[serde(rename = "pump_mw")]
    PumpMw,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Sim(crate::Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(e) if e.is_physicality() => 2,
            CliError::Sim(e) if e.is_physicality() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Sim(e) => write!(f, "simulation error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Sim(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaValues {
    pub ab: f64,
    pub ac: f64,
    pub bc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub gx1: Option<GainEstimate>,
    pub gp1: Option<GainEstimate>,
    pub gx2: Option<GainEstimate>,
    pub gp2: Option<GainEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub shots: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub command: String,
    pub method: String,
    pub config: RunConfig,
    pub moments: CloneMoments,
    pub fidelity: FidelityReport,
    pub criteria: CriteriaValues,
    pub gains: GainReport,
    pub alice: AliceLevels,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaOutput {
    pub config: RunConfig,
    pub criteria: CriteriaValues,
    pub entangled_ab: bool,
    pub entangled_ac: bool,
    pub optimal: OptimalSqueezing,
    pub lhs_at_optimum: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub var_x_clone: f64,
    pub var_p_clone: f64,
    pub fidelity: f64,
}

/// Formats a number with 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_num(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("output types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn criteria_values(cfg: &ProtocolConfig) -> crate::Result<CriteriaValues> {
    let res = build_telecloning_resource(cfg.spec_i, cfg.spec_ii, Some(cfg.eta_resource))?;
    Ok(CriteriaValues {
        ab: bipartite_criterion_lhs(&res, Partner::B)?,
        ac: bipartite_criterion_lhs(&res, Partner::C)?,
        bc: clone_pair_criterion_lhs(&res)?,
    })
}

fn gain_report(moments: &CloneMoments, alpha: Complex64) -> GainReport {
    let g = estimate_gains(moments, alpha);
    GainReport {
        gx1: g.gx1.ok(),
        gp1: g.gp1.ok(),
        gx2: g.gx2.ok(),
        gp2: g.gp2.ok(),
    }
}

fn provenance(cfg: &ProtocolConfig) -> Provenance {
    Provenance { seed: cfg.seed, shots: cfg.shots, version: VERSION.to_string() }
}

/// `run`: both analytic routes, which must agree.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let p = &cfg.protocol;
    let analytic = run_analytic(p)?;
    let circuit = run_circuit_analytic(p)?;
    let worst = analytic
        .flat()
        .iter()
        .zip(circuit.flat().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > PATH_AGREEMENT_TOL {
        return Err(crate::Error::Numeric(format!(
            "analytic and circuit moments disagree by {worst:e}"
        ))
        .into());
    }
    Ok(RunOutput {
        command: "run".into(),
        method: "analytic".into(),
        config: *cfg,
        fidelity: FidelityReport::from_moments(&analytic, p.input_alpha)?,
        criteria: criteria_values(p)?,
        gains: gain_report(&analytic, p.input_alpha),
        alice: alice_trace_levels(p)?,
        moments: analytic,
        provenance: provenance(p),
    })
}

/// `sample`: Monte Carlo moments plus the per-shot records.
pub fn cmd_sample(cfg: &RunConfig, estimator: Estimator) -> Result<(RunOutput, Vec<ShotRecord>), CliError> {
    let p = &cfg.protocol;
    let run = run_monte_carlo_with(p, estimator)?;
    let method = match estimator {
        Estimator::ConditionalMoments => "monte_carlo",
        Estimator::FullySampled => "monte_carlo_fully_sampled",
    };
    let output = RunOutput {
        command: "sample".into(),
        method: method.into(),
        config: *cfg,
        fidelity: FidelityReport::from_moments(&run.moments, p.input_alpha)?,
        criteria: criteria_values(p)?,
        gains: gain_report(&run.moments, p.input_alpha),
        alice: alice_trace_levels(p)?,
        moments: run.moments,
        provenance: provenance(p),
    };
    Ok((output, run.records))
}

pub fn shots_csv(records: &[ShotRecord]) -> String {
    let mut out = String::from("shot,x_u,p_v,x1,p1,x2,p2\n");
    for r in records {
        out.push_str(&r.shot.to_string());
        for v in [r.x_u, r.p_v, r.clones[0], r.clones[1], r.clones[2], r.clones[3]] {
            out.push(',');
            out.push_str(&fmt_num(v));
        }
        out.push('\n');
    }
    out
}

/// `sweep`: evenly spaced grid from `from` to `to` inclusive.
pub fn cmd_sweep(cfg: &RunConfig, param: SweepParam, from: f64, to: f64, steps: usize) -> Result<Vec<SweepRow>, CliError> {
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(CliError::Usage(format!("sweep range must satisfy from < to, got {from} .. {to}")));
    }
    if steps < 2 {
        return Err(CliError::Usage(format!("sweep needs at least 2 steps, got {steps}")));
    }
    let base = cfg.protocol;
    (0..steps)
        .into_par_iter()
        .map(|k| {
            let value = from + (to - from) * k as f64 / (steps - 1) as f64;
            let spec = match param {
                SweepParam::SqueezingDb => SqueezerSpec::pure(value)?,
                SweepParam::PumpMw => squeezing_spectra(&cfg.opo, value)?,
            };
            let point = ProtocolConfig { spec_i: spec, spec_ii: spec, ..base };
            let moments = run_analytic(&point)?;
            let fid = FidelityReport::from_moments(&moments, point.input_alpha)?;
            let c = moments.clones[0];
            Ok(SweepRow {
                param_value: value,
                squeezing_db: spec.squeezing_db,
                antisqueezing_db: spec.antisqueezing_db,
                var_x_clone: c.var_x,
                var_p_clone: c.var_p,
                fidelity: fid.f_clone1,
            })
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(CliError::from)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param_value,squeezing_db,antisqueezing_db,var_x_clone,var_p_clone,fidelity\n");
    for r in rows {
        let cells = [r.param_value, r.squeezing_db, r.antisqueezing_db, r.var_x_clone, r.var_p_clone, r.fidelity];
        out.push_str(&cells.map(fmt_num).join(","));
        out.push('\n');
    }
    out
}

pub fn cmd_criteria(cfg: &RunConfig) -> Result<CriteriaOutput, CliError> {
    let criteria = criteria_values(&cfg.protocol)?;
    let optimal = optimal_squeezing();
    let spec = SqueezerSpec::pure(optimal.db)?;
    let res = build_telecloning_resource(spec, spec, None)?;
    Ok(CriteriaOutput {
        config: *cfg,
        criteria,
        entangled_ab: criteria.ab < 1.0,
        entangled_ac: criteria.ac < 1.0,
        optimal,
        lhs_at_optimum: bipartite_criterion_lhs(&res, Partner::B)?,
        provenance: provenance(&cfg.protocol),
    })
}

fn summary(out: &RunOutput, err: &mut dyn Write) -> io::Result<()> {
    writeln!(err, "{} ({})", out.command, out.method)?;
    writeln!(err, "  clone   <x>          <p>          Var x        Var p        F")?;
    let f = [out.fidelity.f_clone1, out.fidelity.f_clone2];
    for (k, c) in out.moments.clones.iter().enumerate() {
        writeln!(
            err,
            "  {}       {:<12.6} {:<12.6} {:<12.6} {:<12.6} {:.6}",
            k + 1,
            c.mean_x,
            c.mean_p,
            c.var_x,
            c.var_p,
            f[k]
        )?;
    }
    writeln!(
        err,
        "  criteria A-B {:.6}  A-C {:.6}  B-C {:.6}",
        out.criteria.ab, out.criteria.ac, out.criteria.bc
    )?;
    writeln!(
        err,
        "  classical limit {:.4}, gaussian optimum {:.4}",
        out.fidelity.classical_limit, out.fidelity.optimal_gaussian
    )
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(path)?)
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let output = cmd_run(&load(&config)?)?;
            summary(&output, err)?;
            out.write_all(to_json(&output).as_bytes())?;
        }
        Command::Sample { config, shots, seed, csv, fully_sampled } => {
            let mut cfg = load(&config)?;
            if let Some(n) = shots {
                cfg.protocol.shots = n;
            }
            if let Some(s) = seed {
                cfg.protocol.seed = s;
            }
            let estimator = if fully_sampled { Estimator::FullySampled } else { Estimator::ConditionalMoments };
            let (output, records) = match cmd_sample(&cfg, estimator) {
                Err(CliError::Sim(e)) if !e.is_physicality() => return Err(CliError::Usage(e.to_string())),
                other => other?,
            };
            std::fs::write(&csv, shots_csv(&records))?;
            summary(&output, err)?;
            writeln!(err, "  wrote {} shots to {}", records.len(), csv.display())?;
            out.write_all(to_json(&output).as_bytes())?;
        }
        Command::Sweep { config, param, from, to, steps } => {
            let rows = cmd_sweep(&load(&config)?, param, from, to, steps)?;
            if let Some(best) = rows.iter().max_by(|a, b| a.fidelity.total_cmp(&b.fidelity)) {
                writeln!(err, "sweep: {} points, best F = {:.6} at {:.4}", rows.len(), best.fidelity, best.param_value)?;
            }
            out.write_all(sweep_csv(&rows).as_bytes())?;
        }
        Command::Criteria { config } => {
            let output = cmd_criteria(&load(&config)?)?;
            writeln!(
                err,
                "criteria: A-B {:.6}  A-C {:.6}  B-C {:.6}; optimum {:.4} dB (LHS {:.6})",
                output.criteria.ab, output.criteria.ac, output.criteria.bc, output.optimal.db, output.lhs_at_optimum
            )?;
            out.write_all(to_json(&output).as_bytes())?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
