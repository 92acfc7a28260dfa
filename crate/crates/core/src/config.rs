//! Plain-text experiment configuration.
//!
//! ```text
//! # comment
//! [squeezer_i]
//! squeezing_db = 7.656
//! antisqueezing_db = 7.656
//!
//! [run]
//! shots = 100000
//! seed = 42
//! ```
//!
//! A key is addressed as `section.key`; dotted keys may also appear before
//! any section header. Unknown keys, repeated keys and malformed values are
//! rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opo::OpoParams;
use crate::protocol::{Gains, ProtocolConfig};
use crate::resource::{ResourceLoss, SqueezerSpec};

pub const KEYS: &[&str] = &[
    "squeezer_i.squeezing_db",
    "squeezer_i.antisqueezing_db",
    "squeezer_ii.squeezing_db",
    "squeezer_ii.antisqueezing_db",
    "input.alpha_re",
    "input.alpha_im",
    "gains.gx1",
    "gains.gp1",
    "gains.gx2",
    "gains.gp2",
    "loss.eta_homodyne",
    "loss.eta_resource_a",
    "loss.eta_resource_b",
    "loss.eta_resource_c",
    "loss.coupler_t",
    "run.shots",
    "run.seed",
    "opo.p_threshold_mw",
    "opo.eta_det",
    "opo.omega",
];

/// Default OPO model: one illustrative parameter set under which the model
/// predicts a clone fidelity of about 0.6 at 60 mW pump.
pub const DEFAULT_OPO: OpoParams = OpoParams { p_threshold: 220.0, eta_det: 0.70, omega: 0.3 };

pub const DEFAULT_SHOTS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },

    #[error("line {line}: invalid value `{value}` for key `{key}`")]
    BadValue { line: usize, key: String, value: String },

    #[error("missing required key `{0}`")]
    Missing(&'static str),

    #[error("{key}: {source}")]
    Invalid {
        key: String,
        #[source]
        source: crate::Error,
    },

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    /// Whether the configuration is well-formed but describes an unphysical state.
    pub fn is_physicality(&self) -> bool {
        matches!(self, ConfigError::Invalid { source, .. } if source.is_physicality())
    }
}

/// Everything a run needs: the protocol and the OPO model used by pump sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    pub opo: OpoParams,
}

struct Entry {
    line: usize,
    raw: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("unterminated section header `{content}`"),
                })?;
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(ConfigError::Syntax { line, message: format!("bad section name `{name}`") });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line, message: format!("empty key or value in `{content}`") });
            }
            let full = match &section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            };
            if !KEYS.contains(&full.as_str()) {
                return Err(ConfigError::UnknownKey { line, key: full });
            }
            if let Some(prev) = entries.get(&full) {
                return Err(ConfigError::DuplicateKey { line, key: full, first: prev.line });
            }
            entries.insert(full, Entry { line, raw: value.to_string() });
        }
        Self::from_entries(&entries)
    }

    fn from_entries(entries: &BTreeMap<String, Entry>) -> Result<Self, ConfigError> {
        let float = |key: &'static str| -> Result<Option<f64>, ConfigError> {
            entries
                .get(key)
                .map(|e| {
                    e.raw
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| ConfigError::BadValue { line: e.line, key: key.into(), value: e.raw.clone() })
                })
                .transpose()
        };
        let int = |key: &'static str| -> Result<Option<u64>, ConfigError> {
            entries
                .get(key)
                .map(|e| {
                    e.raw
                        .parse::<u64>()
                        .map_err(|_| ConfigError::BadValue { line: e.line, key: key.into(), value: e.raw.clone() })
                })
                .transpose()
        };
        let required = |key: &'static str| float(key)?.ok_or(ConfigError::Missing(key));
        let invalid = |key: &str| {
            let key = key.to_string();
            move |source| ConfigError::Invalid { key, source }
        };

        let sq_i = required("squeezer_i.squeezing_db")?;
        let anti_i = float("squeezer_i.antisqueezing_db")?.unwrap_or(sq_i);
        let sq_ii = required("squeezer_ii.squeezing_db")?;
        let anti_ii = float("squeezer_ii.antisqueezing_db")?.unwrap_or(sq_ii);
        let spec_i = SqueezerSpec::new(sq_i, anti_i).map_err(invalid("squeezer_i"))?;
        let spec_ii = SqueezerSpec::new(sq_ii, anti_ii).map_err(invalid("squeezer_ii"))?;

        let gains = Gains {
            gx1: float("gains.gx1")?.unwrap_or(1.0),
            gp1: float("gains.gp1")?.unwrap_or(1.0),
            gx2: float("gains.gx2")?.unwrap_or(1.0),
            gp2: float("gains.gp2")?.unwrap_or(1.0),
        };
        let protocol = ProtocolConfig {
            spec_i,
            spec_ii,
            input_alpha: Complex64::new(
                float("input.alpha_re")?.unwrap_or(0.0),
                float("input.alpha_im")?.unwrap_or(0.0),
            ),
            gains,
            eta_homodyne: float("loss.eta_homodyne")?.unwrap_or(1.0),
            eta_resource: ResourceLoss {
                eta_a: float("loss.eta_resource_a")?.unwrap_or(1.0),
                eta_b: float("loss.eta_resource_b")?.unwrap_or(1.0),
                eta_c: float("loss.eta_resource_c")?.unwrap_or(1.0),
            },
            coupler_t: float("loss.coupler_t")?.unwrap_or(1.0),
            shots: int("run.shots")?.unwrap_or(DEFAULT_SHOTS),
            seed: int("run.seed")?.unwrap_or(0),
        };
        protocol.validate().map_err(invalid("protocol"))?;
        let opo = OpoParams {
            p_threshold: float("opo.p_threshold_mw")?.unwrap_or(DEFAULT_OPO.p_threshold),
            eta_det: float("opo.eta_det")?.unwrap_or(DEFAULT_OPO.eta_det),
            omega: float("opo.omega")?.unwrap_or(DEFAULT_OPO.omega),
        };
        opo.validate().map_err(invalid("opo"))?;
        Ok(Self { protocol, opo })
    }

    /// Writes every key, so that `parse(to_config_string())` reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let p = &self.protocol;
        let sections: [(&str, Vec<(&str, String)>); 7] = [
            ("squeezer_i", vec![
                ("squeezing_db", p.spec_i.squeezing_db.to_string()),
                ("antisqueezing_db", p.spec_i.antisqueezing_db.to_string()),
            ]),
            ("squeezer_ii", vec![
                ("squeezing_db", p.spec_ii.squeezing_db.to_string()),
                ("antisqueezing_db", p.spec_ii.antisqueezing_db.to_string()),
            ]),
            ("input", vec![
                ("alpha_re", p.input_alpha.re.to_string()),
                ("alpha_im", p.input_alpha.im.to_string()),
            ]),
            ("gains", vec![
                ("gx1", p.gains.gx1.to_string()),
                ("gp1", p.gains.gp1.to_string()),
                ("gx2", p.gains.gx2.to_string()),
                ("gp2", p.gains.gp2.to_string()),
            ]),
            ("loss", vec![
                ("eta_homodyne", p.eta_homodyne.to_string()),
                ("eta_resource_a", p.eta_resource.eta_a.to_string()),
                ("eta_resource_b", p.eta_resource.eta_b.to_string()),
                ("eta_resource_c", p.eta_resource.eta_c.to_string()),
                ("coupler_t", p.coupler_t.to_string()),
            ]),
            ("run", vec![("shots", p.shots.to_string()), ("seed", p.seed.to_string())]),
            ("opo", vec![
                ("p_threshold_mw", self.opo.p_threshold.to_string()),
                ("eta_det", self.opo.eta_det.to_string()),
                ("omega", self.opo.omega.to_string()),
            ]),
        ];
        let mut out = String::new();
        for (name, keys) in sections {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        }
        out
    }
}
