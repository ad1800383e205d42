//! Problem parameters shared by every module: the bivariate Gaussian source,
//! the two-user channel with its conference link, and normalized distortion
//! and rate pairs.
//!
//! All rates and capacities are in bits per symbol. Distortions are carried
//! in normalized form `d = D / sigma^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Zero-mean bivariate Gaussian source with equal variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub sigma2: f64,
    pub rho: f64,
}

impl SourceSpec {
    pub fn new(sigma2: f64, rho: f64) -> Result<Self> {
        let src = SourceSpec { sigma2, rho };
        src.validate()?;
        Ok(src)
    }

    /// Unit-variance source with correlation `rho`.
    pub fn unit(rho: f64) -> Result<Self> {
        Self::new(1.0, rho)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::domain("sigma2", format!("must be finite and > 0, got {}", self.sigma2)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::domain("rho", format!("must lie in [0, 1], got {}", self.rho)));
        }
        Ok(())
    }

    /// `1 - rho^2`, the normalized conditional variance of one component given the other.
    pub fn upsilon(&self) -> f64 {
        1.0 - self.rho * self.rho
    }
}

/// Capacity of the conference link from Encoder 1 to Encoder 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfCapacity {
    Finite(f64),
    Unlimited,
}

impl ConfCapacity {
    pub fn is_unlimited(&self) -> bool {
        matches!(self, ConfCapacity::Unlimited)
    }

    /// Bits per symbol, `+inf` when unlimited.
    pub fn bits(&self) -> f64 {
        match *self {
            ConfCapacity::Finite(c) => c,
            ConfCapacity::Unlimited => f64::INFINITY,
        }
    }
}

impl fmt::Display for ConfCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfCapacity::Finite(c) => write!(f, "{c}"),
            ConfCapacity::Unlimited => f.write_str("inf"),
        }
    }
}

impl FromStr for ConfCapacity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("unlimited") {
            return Ok(ConfCapacity::Unlimited);
        }
        let c: f64 = t
            .parse()
            .map_err(|_| Error::domain("c12", format!("expected a number or `inf`, got `{s}`")))?;
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::domain("c12", format!("must be finite and >= 0 (or `inf`), got {c}")));
        }
        Ok(ConfCapacity::Finite(c))
    }
}

// JSON: a number, or the string "inf".
impl Serialize for ConfCapacity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ConfCapacity::Finite(c) => s.serialize_f64(c),
            ConfCapacity::Unlimited => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ConfCapacity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(c) => Ok(ConfCapacity::Finite(c)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Channel powers, noise variance and conference capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub p1: f64,
    pub p2: f64,
    pub n0: f64,
    pub c12: ConfCapacity,
}

impl ChannelSpec {
    pub fn new(p1: f64, p2: f64, n0: f64, c12: ConfCapacity) -> Result<Self> {
        let ch = ChannelSpec { p1, p2, n0, c12 };
        ch.validate()?;
        Ok(ch)
    }

    /// Equal powers `p` on both encoders.
    pub fn symmetric(p: f64, n0: f64, c12: ConfCapacity) -> Result<Self> {
        Self::new(p, p, n0, c12)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("p1", self.p1), ("p2", self.p2), ("n0", self.n0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if let ConfCapacity::Finite(c) = self.c12 {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::domain("c12", format!("must be finite and >= 0, got {c}")));
            }
        }
        Ok(())
    }

    pub fn with_c12(mut self, c12: ConfCapacity) -> Self {
        self.c12 = c12;
        self
    }

    pub fn with_powers(mut self, p1: f64, p2: f64) -> Self {
        self.p1 = p1;
        self.p2 = p2;
        self
    }
}

/// Normalized distortion pair `(D1/sigma^2, D2/sigma^2)`, each in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionPair {
    pub d1: f64,
    pub d2: f64,
}

impl DistortionPair {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        let d = DistortionPair { d1, d2 };
        d.validate()?;
        Ok(d)
    }

    /// Normalizes absolute distortions by the source variance.
    pub fn from_absolute(big_d1: f64, big_d2: f64, sigma2: f64) -> Result<Self> {
        Self::new(big_d1 / sigma2, big_d2 / sigma2)
    }

    pub fn to_absolute(&self, sigma2: f64) -> (f64, f64) {
        (self.d1 * sigma2, self.d2 * sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("d1", self.d1), ("d2", self.d2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain(field, format!("normalized distortion must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// `true` when both components are at least as good as `target`'s.
    pub fn meets(&self, target: &DistortionPair) -> bool {
        self.d1 <= target.d1 && self.d2 <= target.d2
    }

    pub fn product(&self) -> f64 {
        self.d1 * self.d2
    }
}

/// Pair of source-coding rates in bits per source symbol.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        let rp = RatePoint { r1, r2 };
        rp.validate()?;
        Ok(rp)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("r1", self.r1), ("r2", self.r2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(field, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// A source, channel and target distortion that passed validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatedProblem {
    pub src: SourceSpec,
    pub ch: ChannelSpec,
    pub target: DistortionPair,
}

pub fn validate_problem(
    src: SourceSpec,
    ch: ChannelSpec,
    target: DistortionPair,
) -> Result<ValidatedProblem> {
    src.validate()?;
    ch.validate()?;
    target.validate()?;
    Ok(ValidatedProblem { src, ch, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> (SourceSpec, ChannelSpec, DistortionPair) {
        (
            SourceSpec { sigma2: 1.0, rho: 0.5 },
            ChannelSpec { p1: 1.0, p2: 1.0, n0: 1.0, c12: ConfCapacity::Finite(1.0) },
            DistortionPair { d1: 0.2, d2: 0.2 },
        )
    }

    fn field_of(e: Error) -> &'static str {
        match e {
            Error::Domain { field, .. } => field,
            other => panic!("expected a domain error, got {other:?}"),
        }
    }

    #[test]
    fn valid_problem_passes() {
        let (s, c, d) = base();
        let v = validate_problem(s, c, d).unwrap();
        assert_eq!(v.target, d);
    }

    #[test]
    fn rejects_rho_above_one() {
        let (mut s, c, d) = base();
        s.rho = 1.2;
        assert_eq!(field_of(validate_problem(s, c, d).unwrap_err()), "rho");
    }

    #[test]
    fn rejects_zero_distortion() {
        let (s, c, mut d) = base();
        d.d1 = 0.0;
        assert_eq!(field_of(validate_problem(s, c, d).unwrap_err()), "d1");
    }

    #[test]
    fn rejects_distortion_above_one() {
        let (s, c, mut d) = base();
        d.d2 = 1.0 + 1e-12;
        assert_eq!(field_of(validate_problem(s, c, d).unwrap_err()), "d2");
    }

    #[test]
    fn rejects_bad_channel() {
        let (s, mut c, d) = base();
        c.n0 = 0.0;
        assert_eq!(field_of(validate_problem(s, c, d).unwrap_err()), "n0");
        c.n0 = 1.0;
        c.c12 = ConfCapacity::Finite(-0.5);
        assert_eq!(field_of(validate_problem(s, c, d).unwrap_err()), "c12");
        c.c12 = ConfCapacity::Unlimited;
        c.p2 = f64::INFINITY;
        assert_eq!(field_of(validate_problem(s, c, d).unwrap_err()), "p2");
    }

    #[test]
    fn conf_capacity_parses_inf() {
        assert_eq!("inf".parse::<ConfCapacity>().unwrap(), ConfCapacity::Unlimited);
        assert_eq!("1.5".parse::<ConfCapacity>().unwrap(), ConfCapacity::Finite(1.5));
        assert!("-1".parse::<ConfCapacity>().is_err());
        let js = serde_json::to_string(&ConfCapacity::Unlimited).unwrap();
        assert_eq!(js, "\"inf\"");
        assert_eq!(serde_json::from_str::<ConfCapacity>("2.0").unwrap(), ConfCapacity::Finite(2.0));
    }

    proptest! {
        #[test]
        fn validation_is_pure(rho in -0.5f64..1.5, d1 in -0.2f64..1.2, d2 in -0.2f64..1.2) {
            let (mut s, c, _) = base();
            s.rho = rho;
            let d = DistortionPair { d1, d2 };
            let a = validate_problem(s, c, d);
            let b = validate_problem(s, c, d);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn normalization_round_trip(big1 in 1e-6f64..1.0, big2 in 1e-6f64..1.0, sigma2 in 1e-3f64..1e3) {
            let d = DistortionPair::from_absolute(big1 * sigma2, big2 * sigma2, sigma2).unwrap();
            let (b1, b2) = d.to_absolute(sigma2);
            prop_assert!(((b1 - big1 * sigma2) / (big1 * sigma2)).abs() < 4.0 * f64::EPSILON);
            prop_assert!(((b2 - big2 * sigma2) / (big2 * sigma2)).abs() < 4.0 * f64::EPSILON);
        }
    }
}
