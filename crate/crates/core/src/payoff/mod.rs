//! Irregular payoff functionals with function-space metadata.
//!
//! Indicators use open sets, matching the superlevel-set convention
//! `{f > t}`; boundary points carry zero probability under absolutely
//! continuous laws.

mod rates;
mod young;

pub use rates::{
    predicted_mlmc_exponent, predicted_strong_exponent, rate_prediction, standard_mc_exponent,
    RateClass, RatePrediction, WeakRegime,
};
pub use young::{orlicz_bound_minimize, OrliczBound, YoungFunction};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PayoffClass {
    Lipschitz { constant: f64 },
    BoundedVariation { total_variation: f64, sup_norm: f64 },
    Sobolev { p: f64, sup_norm: f64 },
    Orlicz { young: YoungFunction, sup_norm: f64 },
    Fractional { s: f64, p: f64, sup_norm: f64 },
}

impl PayoffClass {
    pub fn sup_norm(&self) -> f64 {
        match *self {
            PayoffClass::Lipschitz { .. } => f64::INFINITY,
            PayoffClass::BoundedVariation { sup_norm, .. }
            | PayoffClass::Sobolev { sup_norm, .. }
            | PayoffClass::Orlicz { sup_norm, .. }
            | PayoffClass::Fractional { sup_norm, .. } => sup_norm,
        }
    }

    pub fn rate_class(&self) -> RateClass {
        match *self {
            PayoffClass::Lipschitz { .. } => RateClass::Lipschitz,
            PayoffClass::BoundedVariation { .. } => RateClass::BoundedVariation,
            PayoffClass::Sobolev { .. } => RateClass::Sobolev,
            PayoffClass::Orlicz { .. } => RateClass::Orlicz,
            PayoffClass::Fractional { s, p, .. } => RateClass::Fractional { s, p },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffKind {
    /// 1_{(a, b)}(x_1)
    IntervalIndicator { a: f64, b: f64 },
    /// 1_{|x - c| < R}
    BallIndicator { center: Vec<f64>, radius: f64 },
    /// max(0, min(1, x_1))
    ClampRamp,
    /// max(0, 1 - |x_1|)^s
    TentPower { s: f64 },
    /// min(1, gain * max(0, 1 - |x_1|))
    Trapezoid { gain: f64 },
    /// min(|x_1|^{-exponent}, cap)
    TruncatedInversePower { exponent: f64, cap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payoff {
    name: String,
    kind: PayoffKind,
    class: PayoffClass,
}

/// Gamma(d / 2) for a positive integer d.
fn gamma_half(d: usize) -> f64 {
    let mut g = if d.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the sphere of radius `r` in R^d.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) * r.powi(d as i32 - 1) / gamma_half(d)
}

impl Payoff {
    pub fn interval_indicator(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("interval ({a}, {b}) is empty or unbounded")));
        }
        Ok(Self {
            name: "interval_indicator".into(),
            kind: PayoffKind::IntervalIndicator { a, b },
            class: PayoffClass::BoundedVariation {
                total_variation: 2.0,
                sup_norm: 1.0,
            },
        })
    }

    pub fn ball_indicator(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(invalid("ball centre needs at least one coordinate"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        let tv = sphere_area(center.len(), radius);
        Ok(Self {
            name: "ball_indicator".into(),
            kind: PayoffKind::BallIndicator { center, radius },
            class: PayoffClass::BoundedVariation {
                total_variation: tv,
                sup_norm: 1.0,
            },
        })
    }

    pub fn clamp_ramp() -> Self {
        Self {
            name: "clamp_ramp".into(),
            kind: PayoffKind::ClampRamp,
            class: PayoffClass::Lipschitz { constant: 1.0 },
        }
    }

    /// Tent raised to the power `s`; tagged as a member of W^{s,p}.
    pub fn tent_power(s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid(format!("p must be in [1, inf), got {p}")));
        }
        Ok(Self {
            name: "tent_power".into(),
            kind: PayoffKind::TentPower { s },
            class: PayoffClass::Fractional { s, p, sup_norm: 1.0 },
        })
    }

    /// Piecewise-linear trapezoid, a bounded W^{1,p} member.
    pub fn trapezoid(gain: f64, p: f64) -> Result<Self> {
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(invalid(format!("gain must be positive, got {gain}")));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid(format!("p must be in [1, inf), got {p}")));
        }
        Ok(Self {
            name: "trapezoid".into(),
            kind: PayoffKind::Trapezoid { gain },
            class: PayoffClass::Sobolev {
                p,
                sup_norm: gain.min(1.0),
            },
        })
    }

    /// The trapezoid tagged as a member of the Orlicz-Sobolev space W^{1,Phi}.
    pub fn trapezoid_orlicz(gain: f64, young: YoungFunction) -> Result<Self> {
        let mut f = Self::trapezoid(gain, young.p())?;
        f.name = "trapezoid_orlicz".into();
        f.class = PayoffClass::Orlicz {
            young,
            sup_norm: gain.min(1.0),
        };
        Ok(f)
    }

    /// min(|x|^{-exponent}, cap): locally BV with finite |Df| but not bounded
    /// by one; used for the finite-r inequality family.
    pub fn truncated_inverse_power(exponent: f64, cap: f64) -> Result<Self> {
        if !(exponent > 0.0) || !(cap > 0.0) || !cap.is_finite() {
            return Err(invalid("exponent and cap must be positive"));
        }
        Ok(Self {
            name: "truncated_inverse_power".into(),
            kind: PayoffKind::TruncatedInversePower { exponent, cap },
            class: PayoffClass::BoundedVariation {
                total_variation: 2.0 * cap,
                sup_norm: cap,
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn class(&self) -> &PayoffClass {
        &self.class
    }

    /// Required input dimension, or `None` when only the first coordinate is read.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            PayoffKind::BallIndicator { center, .. } => Some(center.len()),
            _ => None,
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(
            self.kind,
            PayoffKind::IntervalIndicator { .. } | PayoffKind::BallIndicator { .. }
        )
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PayoffKind::IntervalIndicator { a, b } => {
                if x[0] > *a && x[0] < *b {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffKind::BallIndicator { center, radius } => {
                let r2: f64 = center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
                if r2 < radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffKind::ClampRamp => x[0].clamp(0.0, 1.0),
            PayoffKind::TentPower { s } => (1.0 - x[0].abs()).max(0.0).powf(*s),
            PayoffKind::Trapezoid { gain } => (gain * (1.0 - x[0].abs()).max(0.0)).min(1.0),
            PayoffKind::TruncatedInversePower { exponent, cap } => {
                let a = x[0].abs();
                if a == 0.0 {
                    *cap
                } else {
                    a.powf(-exponent).min(*cap)
                }
            }
        }
    }
}

/// |Df|(R^d) for payoffs where it has a closed form.
pub fn total_variation(payoff: &Payoff) -> Result<f64> {
    match &payoff.kind {
        PayoffKind::IntervalIndicator { .. } => Ok(2.0),
        PayoffKind::BallIndicator { center, radius } => Ok(sphere_area(center.len(), *radius)),
        PayoffKind::TentPower { .. } => Ok(2.0),
        PayoffKind::Trapezoid { gain } => Ok(2.0 * gain.min(1.0)),
        PayoffKind::TruncatedInversePower { cap, .. } => Ok(2.0 * cap),
        PayoffKind::ClampRamp => Err(Error::Unsupported(format!(
            "no closed-form total variation for Lipschitz payoff {}",
            payoff.name
        ))),
    }
}
