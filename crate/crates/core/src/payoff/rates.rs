//! Predicted exponents for the strong error of Euler-Maruyama on irregular
//! payoffs and for the resulting MLMC cost.
//!
//! Strong: `E|f(X(T)) - f(X^(n)(T))|^q <= C n^{-gamma}` with
//!
//! | class                         | gamma                |
//! |-------------------------------|----------------------|
//! | bounded variation             | delta / 2            |
//! | Orlicz-/variable-exp. Sobolev | q / (2 (q + 1))      |
//! | fractional W^{s,p}            | p q s / (2 (q + p))  |
//!
//! MLMC cost `C <= c eps^{-kappa}` with weak rate 1 or weak rate delta/2.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum RateClass {
    Lipschitz,
    BoundedVariation,
    Sobolev,
    Orlicz,
    VariableExponent,
    Fractional { s: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakRegime {
    /// Smooth coefficients: weak rate one.
    One,
    /// Lipschitz coefficients: weak rate delta / 2.
    HalfDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub strong_exponent: f64,
    pub mlmc_cost_exponent_weak1: f64,
    pub mlmc_cost_exponent_weakdelta: f64,
    pub q: f64,
    pub delta: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_class(class: &RateClass) -> Result<()> {
    if let RateClass::Fractional { s, p } = *class {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(invalid(format!("p must be in [1, inf), got {p}")));
        }
    }
    Ok(())
}

/// Exponent `gamma` of `n^{-gamma}`. Lipschitz payoffs inherit the strong
/// rate of the scheme, `q / 2`.
pub fn predicted_strong_exponent(class: &RateClass, q: f64, delta: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(invalid(format!("q must be >= 1, got {q}")));
    }
    check_delta(delta)?;
    check_class(class)?;
    Ok(match *class {
        RateClass::Lipschitz => q / 2.0,
        RateClass::BoundedVariation => delta / 2.0,
        RateClass::Sobolev | RateClass::Orlicz | RateClass::VariableExponent => {
            q / (2.0 * (q + 1.0))
        }
        RateClass::Fractional { s, p } => p * q * s / (2.0 * (q + p)),
    })
}

/// Exponent `kappa` of `eps^{-kappa}` for the MLMC cost. Lipschitz payoffs sit
/// in the variance-rate-one case, which gives `eps^{-2} (log eps)^2`; the log
/// factor is not part of the returned exponent.
pub fn predicted_mlmc_exponent(class: &RateClass, regime: WeakRegime, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_class(class)?;
    Ok(match (regime, *class) {
        (_, RateClass::Lipschitz) => 2.0,
        (WeakRegime::One, RateClass::BoundedVariation) => (6.0 - delta) / 2.0,
        (WeakRegime::One, RateClass::Sobolev | RateClass::Orlicz | RateClass::VariableExponent) => {
            8.0 / 3.0
        }
        (WeakRegime::One, RateClass::Fractional { s, p }) => 3.0 - p * s / (p + 2.0),
        (WeakRegime::HalfDelta, RateClass::BoundedVariation) => 1.0 + 2.0 / delta,
        (
            WeakRegime::HalfDelta,
            RateClass::Sobolev | RateClass::Orlicz | RateClass::VariableExponent,
        ) => 2.0 + 4.0 / (3.0 * delta),
        (WeakRegime::HalfDelta, RateClass::Fractional { s, p }) => {
            2.0 + (p * (1.0 - s) + 2.0) / (delta * (p + 2.0))
        }
    })
}

/// Exponent of the plain single-level Monte Carlo cost, `2 + 1/alpha`.
pub fn standard_mc_exponent(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("weak rate must be positive, got {alpha}")));
    }
    Ok(2.0 + 1.0 / alpha)
}

pub fn rate_prediction(class: &RateClass, q: f64, delta: f64) -> Result<RatePrediction> {
    Ok(RatePrediction {
        strong_exponent: predicted_strong_exponent(class, q, delta)?,
        mlmc_cost_exponent_weak1: predicted_mlmc_exponent(class, WeakRegime::One, delta)?,
        mlmc_cost_exponent_weakdelta: predicted_mlmc_exponent(class, WeakRegime::HalfDelta, delta)?,
        q,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strong_table_values() {
        let bv = predicted_strong_exponent(&RateClass::BoundedVariation, 2.0, 0.9).unwrap();
        assert!((bv - 0.45).abs() < 1e-15);
        let sob = predicted_strong_exponent(&RateClass::Sobolev, 2.0, 0.5).unwrap();
        assert!((sob - 1.0 / 3.0).abs() < 1e-15);
        let frac =
            predicted_strong_exponent(&RateClass::Fractional { s: 0.5, p: 2.0 }, 2.0, 0.5).unwrap();
        assert!((frac - 0.25).abs() < 1e-15);
        let var = predicted_strong_exponent(&RateClass::VariableExponent, 2.0, 0.5).unwrap();
        assert_eq!(var, sob);
    }

    #[test]
    fn mlmc_table_values() {
        let bv = predicted_mlmc_exponent(&RateClass::BoundedVariation, WeakRegime::One, 1.0 - 1e-12)
            .unwrap();
        assert!((bv - 2.5).abs() < 1e-11);
        let sob = predicted_mlmc_exponent(&RateClass::Orlicz, WeakRegime::One, 0.3).unwrap();
        assert!((sob - 8.0 / 3.0).abs() < 1e-15);
        let frac = predicted_mlmc_exponent(
            &RateClass::Fractional { s: 0.5, p: 2.0 },
            WeakRegime::One,
            0.5,
        )
        .unwrap();
        assert!((frac - 2.75).abs() < 1e-15);
        let bvd =
            predicted_mlmc_exponent(&RateClass::BoundedVariation, WeakRegime::HalfDelta, 0.5).unwrap();
        assert!((bvd - 5.0).abs() < 1e-15);
        let sobd = predicted_mlmc_exponent(&RateClass::Sobolev, WeakRegime::HalfDelta, 0.5).unwrap();
        assert!((sobd - (2.0 + 8.0 / 3.0)).abs() < 1e-14);
        let fracd = predicted_mlmc_exponent(
            &RateClass::Fractional { s: 0.5, p: 2.0 },
            WeakRegime::HalfDelta,
            0.5,
        )
        .unwrap();
        assert!((fracd - 3.5).abs() < 1e-14);
    }

    #[test]
    fn weak_one_matches_complexity_theorem_case() {
        // beta in (0,1), alpha = 1: 2 + (1 - beta), with beta = 2 * strong exponent at q = 2
        // taken at the BV rate delta/2 and the Sobolev rate 1/3.
        for delta in [0.2, 0.5, 0.9] {
            let beta = delta / 2.0;
            let k = predicted_mlmc_exponent(&RateClass::BoundedVariation, WeakRegime::One, delta)
                .unwrap();
            assert!((k - (2.0 + 1.0 - beta)).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_delta() {
        for d in [0.0, 1.0, 1.5, -0.1] {
            assert!(predicted_strong_exponent(&RateClass::BoundedVariation, 2.0, d).is_err());
            assert!(predicted_mlmc_exponent(&RateClass::Sobolev, WeakRegime::One, d).is_err());
        }
        assert!(predicted_strong_exponent(&RateClass::Sobolev, 0.5, 0.5).is_err());
        assert!(predicted_strong_exponent(&RateClass::Fractional { s: 1.0, p: 2.0 }, 2.0, 0.5)
            .is_err());
    }

    proptest! {
        #[test]
        fn strong_exponent_monotone(d1 in 0.01f64..0.98, dd in 0.0f64..0.01, s1 in 0.01f64..0.98,
                                    ds in 0.0f64..0.01, p1 in 1.0f64..8.0, dp in 0.0f64..2.0,
                                    q in 1.0f64..6.0) {
            let bv = |d| predicted_strong_exponent(&RateClass::BoundedVariation, q, d).unwrap();
            prop_assert!(bv(d1 + dd) >= bv(d1));
            let fr = |s, p| predicted_strong_exponent(&RateClass::Fractional { s, p }, q, 0.5).unwrap();
            prop_assert!(fr(s1 + ds, p1) >= fr(s1, p1));
            prop_assert!(fr(s1, p1 + dp) >= fr(s1, p1));
            prop_assert!(bv(d1) > 0.0 && fr(s1, p1) > 0.0);
        }
    }
}
