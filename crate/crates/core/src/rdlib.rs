//! Closed-form rate-distortion quantities for the bivariate Gaussian source.
//!
//! Every function takes normalized distortions; rates are in bits.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{DistortionPair, RatePoint, SourceSpec};
use crate::report::{FeasibilityReport, ReportBuilder};

/// `max(0, log2 x)`, exactly zero for `x <= 1`.
pub fn log2_plus(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.log2()
    }
}

/// `1 - 2^{-2r}`, the normalized variance of a Gaussian codeword at rate `r`.
pub(crate) fn fr(r: f64) -> f64 {
    -(-2.0 * r * std::f64::consts::LN_2).exp_m1()
}

/// `2^{-2r}`.
pub(crate) fn ex(r: f64) -> f64 {
    (-2.0 * r * std::f64::consts::LN_2).exp()
}

pub(crate) fn half_log2(x: f64) -> f64 {
    0.5 * x.log2()
}

/// Which of the three distortion regions a pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RdRegion {
    D1Region,
    D2Region,
    D3Region,
}

impl fmt::Display for RdRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RdRegion::D1Region => "D1_REGION",
            RdRegion::D2Region => "D2_REGION",
            RdRegion::D3Region => "D3_REGION",
        })
    }
}

pub fn rd_region_of(src: &SourceSpec, d: &DistortionPair) -> RdRegion {
    let (d1, d2) = (d.d1, d.d2);
    let r2 = src.rho * src.rho;
    let ups = 1.0 - r2;
    // One distortion is so loose that only the other matters.
    let upper = d2 >= ups + r2 * d1 || d1 >= ups + r2 * d2;
    if upper {
        return RdRegion::D1Region;
    }
    let edge = if r2 == 0.0 { 1.0 } else { 1.0 - r2 / (1.0 - d1) };
    if d1 <= ups && d2 < edge {
        RdRegion::D2Region
    } else {
        RdRegion::D3Region
    }
}

/// Joint rate-distortion function `R_{S1,S2}(d1, d2)`.
pub fn rd_joint(src: &SourceSpec, d: &DistortionPair) -> f64 {
    let (d1, d2) = (d.d1, d.d2);
    let rho = src.rho;
    let ups = src.upsilon();
    match rd_region_of(src, d) {
        RdRegion::D1Region => 0.5 * log2_plus(1.0 / d1.min(d2)),
        RdRegion::D2Region => 0.5 * log2_plus(ups / (d1 * d2)),
        RdRegion::D3Region => {
            let vr = ((1.0 - d1) * (1.0 - d2)).sqrt();
            let gap = rho - vr;
            0.5 * log2_plus(ups / (d1 * d2 - gap * gap))
        }
    }
}

/// `R_{S2|S1}(d2)`.
pub fn rd_conditional(src: &SourceSpec, d2: f64) -> f64 {
    0.5 * log2_plus(src.upsilon() / d2)
}

/// Wyner-Ziv rate for `S1` with `S2` at the decoder.
pub fn wz_rate(src: &SourceSpec, d1: f64) -> f64 {
    let r2 = src.rho * src.rho;
    0.5 * ((1.0 - r2) / d1 + r2).log2().max(0.0)
}

/// Two-terminal region membership. Slacks are `rate - bound`, named
/// `r1`, `r2`, `r1+r2`.
pub fn wagner_contains(
    src: &SourceSpec,
    d: &DistortionPair,
    rp: &RatePoint,
) -> Result<FeasibilityReport> {
    let b = wagner_bounds(src, d, rp)?;
    Ok(ReportBuilder::new()
        .push("r1", rp.r1 - b[0])
        .push("r2", rp.r2 - b[1])
        .push("r1+r2", rp.sum() - b[2])
        .finish(0.0))
}

/// Lower bounds `[R1, R2, R1+R2]` of the two-terminal region at `rp`.
pub(crate) fn wagner_bounds(src: &SourceSpec, d: &DistortionPair, rp: &RatePoint) -> Result<[f64; 3]> {
    let r2 = src.rho * src.rho;
    let ups = 1.0 - r2;
    if ups <= 0.0 {
        return Err(Error::Degenerate("two-terminal sum-rate bound needs rho < 1".into()));
    }
    let b1 = 0.5 * log2_plus((1.0 - r2 * fr(rp.r2)) / d.d1);
    let b2 = 0.5 * log2_plus((1.0 - r2 * fr(rp.r1)) / d.d2);
    Ok([b1, b2, wagner_sum_bound(src, d)?])
}

pub(crate) fn wagner_sum_bound(src: &SourceSpec, d: &DistortionPair) -> Result<f64> {
    let r2 = src.rho * src.rho;
    let ups = 1.0 - r2;
    if ups <= 0.0 {
        return Err(Error::Degenerate("two-terminal sum-rate bound needs rho < 1".into()));
    }
    let p = d.d1 * d.d2;
    let gamma = 1.0 + (1.0 + 4.0 * r2 * p / (ups * ups)).sqrt();
    Ok(0.5 * log2_plus(ups * gamma / (2.0 * p)))
}

/// Variance of an auxiliary test-channel noise; `Unlimited` removes the auxiliary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxVariance {
    Finite(f64),
    Unlimited,
}

impl AuxVariance {
    /// `1 / variance`, exactly 0 when unlimited.
    pub fn precision(&self) -> f64 {
        match *self {
            AuxVariance::Finite(v) => 1.0 / v,
            AuxVariance::Unlimited => 0.0,
        }
    }

    pub fn from_precision(p: f64) -> Self {
        if p <= 0.0 {
            AuxVariance::Unlimited
        } else {
            AuxVariance::Finite(1.0 / p)
        }
    }

    fn validate(&self, field: &'static str) -> Result<()> {
        match *self {
            AuxVariance::Finite(v) if !(v > 0.0 && v.is_finite()) => {
                Err(Error::domain(field, format!("must be > 0 or unlimited, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

impl Serialize for AuxVariance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            AuxVariance::Finite(v) => s.serialize_f64(v),
            AuxVariance::Unlimited => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for AuxVariance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(AuxVariance::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(AuxVariance::Unlimited),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad variance `{t}`"))),
        }
    }
}

/// Test-channel noise variances of the conferencing source code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaspiParams {
    pub sw2: AuxVariance,
    pub su2: AuxVariance,
    pub sv2: AuxVariance,
}

impl KaspiParams {
    pub fn unlimited() -> Self {
        KaspiParams {
            sw2: AuxVariance::Unlimited,
            su2: AuxVariance::Unlimited,
            sv2: AuxVariance::Unlimited,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sw2.validate("sw2")?;
        self.su2.validate("su2")?;
        self.sv2.validate("sv2")
    }
}

/// Rate bounds and distortions of the conferencing source code at one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaspiPoint {
    pub c12: f64,
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
    pub dist: DistortionPair,
}

pub fn kaspi_region_point(src: &SourceSpec, kp: &KaspiParams) -> Result<KaspiPoint> {
    kp.validate()?;
    let s2 = src.sigma2;
    let ups = src.upsilon();
    let (pw, pu, pv) = (kp.sw2.precision(), kp.su2.precision(), kp.sv2.precision());
    let delta = 1.0 + s2 * pu + s2 * (1.0 + s2 * pu * ups) * (pv + pw);
    let c12 = 0.5 * (s2 * ups * pw).ln_1p() / std::f64::consts::LN_2;
    let r1_inner = s2 * pv * (ups * pu + 1.0 / s2) / (pu + s2 * ups * pw * pu + pw + 1.0 / s2);
    let r2_inner = s2 * pu * (1.0 + s2 * (pw + pv) * ups) / (1.0 + s2 * (pw + pv));
    let to_bits = |x: f64| 0.5 * x.ln_1p() / std::f64::consts::LN_2;
    Ok(KaspiPoint {
        c12,
        r1: to_bits(r1_inner),
        r2: to_bits(r2_inner),
        sum: half_log2(delta),
        dist: DistortionPair {
            d1: (1.0 + s2 * pu * ups) / delta,
            d2: (1.0 + s2 * ups * (pv + pw)) / delta,
        },
    })
}
