//! Experiment configuration: strict JSON parsing, registry resolution and
//! range checks.

use std::path::PathBuf;

use irrmc::irregular_error::{ExponentRule, PairFamily};
use irrmc::payoff::Payoff;
use irrmc::sde::SdeModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rate,
    Inequality,
    Maximal,
    Mlmc,
    Complexity,
    Density,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Rate => "rate",
            Self::Inequality => "inequality",
            Self::Maximal => "maximal",
            Self::Mlmc => "mlmc",
            Self::Complexity => "complexity",
            Self::Density => "density",
        }
    }
}

pub const MODEL_REGISTRY: &[&str] = &["constant", "sincos_1d", "sincos_2d"];
pub const PAYOFF_REGISTRY: &[&str] = &[
    "interval_indicator",
    "ball_indicator",
    "clamp_ramp",
    "tent_power",
    "trapezoid",
    "truncated_inverse_power",
];
pub const FAMILY_REGISTRY: &[&str] = &["gaussian_shift", "gaussian_scale"];
pub const RULE_REGISTRY: &[&str] = &["bv", "sobolev", "fractional"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Drift vector of the constant model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// Diffusion scalar of the constant model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

/// Box [lo, hi]^d discretised with the given spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub spacing: f64,
}

/// Numeric parameters. Unset fields take per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Refinement factor M between MLMC levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    /// Mollifier width for |Df| on a grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<PayoffSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 20240501;

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn resolve_model(&self) -> Result<SdeModel> {
        let spec = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} experiment needs a model", self.experiment.name())))?;
        resolve_model(spec)
    }

    pub fn resolve_payoff(&self) -> Result<Payoff> {
        let spec = self
            .payoff
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} experiment needs a payoff", self.experiment.name())))?;
        resolve_payoff(spec)
    }

    /// Checks registry names and numeric ranges without running anything.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let needs_model = matches!(self.experiment, Rate | Mlmc | Complexity | Density);
        let needs_payoff = !matches!(self.experiment, Density);
        if needs_model {
            self.resolve_model()?;
        } else if let Some(m) = &self.model {
            resolve_model(m)?;
        }
        if needs_payoff {
            self.resolve_payoff()?;
        } else if let Some(p) = &self.payoff {
            resolve_payoff(p)?;
        }
        let p = &self.params;
        if let Some(d) = p.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(CliError::Range(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if let Some(q) = p.q {
            if !(q >= 1.0) || !q.is_finite() {
                return Err(CliError::Range(format!("q must be >= 1, got {q}")));
            }
        }
        if let Some(s) = p.s {
            if !(s > 0.0 && s < 1.0) {
                return Err(CliError::Range(format!("s must lie in (0, 1), got {s}")));
            }
        }
        if let Some(pp) = p.p {
            if !(pp >= 1.0) || !pp.is_finite() {
                return Err(CliError::Range(format!("p must be >= 1, got {pp}")));
            }
        }
        if let Some(eps) = &p.epsilons {
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
                return Err(CliError::Range("epsilons must be positive".into()));
            }
        }
        if let Some(m) = p.refinement {
            if m < 2 {
                return Err(CliError::Range(format!("refinement must be >= 2, got {m}")));
            }
        }
        if let Some(t) = p.slope_tolerance {
            if !(t >= 0.0) {
                return Err(CliError::Range(format!("slope_tolerance must be >= 0, got {t}")));
            }
        }
        if let Some(name) = &p.family {
            resolve_family(name, 1)?;
        }
        if let Some(name) = &p.rule {
            if !RULE_REGISTRY.contains(&name.as_str()) {
                return Err(unknown("exponent rule", name, RULE_REGISTRY));
            }
        }
        if let Some(g) = p.grid {
            if !(g.dim == 1 || g.dim == 2) || !(g.hi > g.lo) || !(g.spacing > 0.0) {
                return Err(CliError::Range(format!("bad grid {g:?}")));
            }
        }
        Ok(())
    }
}

fn unknown(registry: &str, name: &str, known: &[&str]) -> CliError {
    CliError::Resolution {
        registry: registry.to_string(),
        name: name.to_string(),
        known: known.join(", "),
    }
}

fn need<T: Copy>(v: Option<T>, what: &str, owner: &str) -> Result<T> {
    v.ok_or_else(|| CliError::Config(format!("{owner} needs parameter {what:?}")))
}

pub fn resolve_model(spec: &ModelSpec) -> Result<SdeModel> {
    let horizon = spec.horizon.unwrap_or(1.0);
    let model = match spec.name.as_str() {
        "constant" => {
            let mu = spec.mu.clone().unwrap_or_else(|| vec![0.0]);
            let x0 = spec.x0.clone().unwrap_or_else(|| vec![0.0; mu.len()]);
            SdeModel::constant(mu, spec.sigma.unwrap_or(1.0), x0, horizon)
        }
        "sincos_1d" => {
            let x0 = spec.x0.as_deref().unwrap_or(&[0.0]);
            if x0.len() != 1 {
                return Err(CliError::Config("sincos_1d needs a one-dimensional x0".into()));
            }
            SdeModel::sincos_1d(x0[0], horizon)
        }
        "sincos_2d" => {
            let x0 = spec.x0.as_deref().unwrap_or(&[0.0, 0.0]);
            if x0.len() != 2 {
                return Err(CliError::Config("sincos_2d needs a two-dimensional x0".into()));
            }
            SdeModel::sincos_2d([x0[0], x0[1]], horizon)
        }
        other => return Err(unknown("model", other, MODEL_REGISTRY)),
    };
    Ok(model?)
}

pub fn resolve_payoff(spec: &PayoffSpec) -> Result<Payoff> {
    let owner = spec.name.as_str();
    let payoff = match owner {
        "interval_indicator" => {
            Payoff::interval_indicator(spec.a.unwrap_or(0.0), spec.b.unwrap_or(1.0))
        }
        "ball_indicator" => Payoff::ball_indicator(
            spec.center.clone().unwrap_or_else(|| vec![0.0, 0.0]),
            spec.radius.unwrap_or(1.0),
        ),
        "clamp_ramp" => Ok(Payoff::clamp_ramp()),
        "tent_power" => Payoff::tent_power(need(spec.s, "s", owner)?, spec.p.unwrap_or(2.0)),
        "trapezoid" => Payoff::trapezoid(need(spec.gain, "gain", owner)?, spec.p.unwrap_or(2.0)),
        "truncated_inverse_power" => Payoff::truncated_inverse_power(
            need(spec.exponent, "exponent", owner)?,
            need(spec.cap, "cap", owner)?,
        ),
        other => return Err(unknown("payoff", other, PAYOFF_REGISTRY)),
    };
    Ok(payoff?)
}

pub fn resolve_family(name: &str, dim: usize) -> Result<PairFamily> {
    if !FAMILY_REGISTRY.contains(&name) {
        return Err(unknown("pair family", name, FAMILY_REGISTRY));
    }
    Ok(PairFamily::from_name(name, dim)?)
}

pub fn resolve_rule(name: &str, params: &Params) -> Result<ExponentRule> {
    let p = params.p.unwrap_or(1.0);
    match name {
        "bv" => Ok(ExponentRule::Bv { p, r: params.r }),
        "sobolev" => Ok(ExponentRule::Sobolev { p, r: params.r }),
        "fractional" => Ok(ExponentRule::Fractional {
            s: need(params.s, "s", "fractional rule")?,
            p,
            r: params.r,
        }),
        other => Err(unknown("exponent rule", other, RULE_REGISTRY)),
    }
}

/// Parses and validates a JSON config; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn to_json(config: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serialises")
}
