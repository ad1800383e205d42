//! Capacity regions of the two-user Gaussian MAC, without and with a
//! conference link from Encoder 1 to Encoder 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSpec, ConfCapacity, RatePoint};
use crate::report::{FeasibilityReport, ReportBuilder};

/// Fractions of each encoder's power spent on the common (coherent) part.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MacPowerSplit {
    pub beta1: f64,
    pub beta2: f64,
}

impl MacPowerSplit {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        let s = MacPowerSplit { beta1, beta2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

fn c(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

/// Upper bounds `[R1, R2, R1+R2]` of the plain MAC.
pub fn mac_plain_bounds(ch: &ChannelSpec) -> [f64; 3] {
    let n = ch.n0;
    [c(ch.p1 / n), c(ch.p2 / n), c((ch.p1 + ch.p2) / n)]
}

/// Upper bounds `[R2, R1+R2]` with an unlimited conference link.
pub fn mac_conf_unlimited_bounds(ch: &ChannelSpec, beta: f64) -> [f64; 2] {
    let n = ch.n0;
    [
        c((1.0 - beta) * ch.p2 / n),
        c((ch.p1 + ch.p2 + 2.0 * (beta * ch.p1 * ch.p2).sqrt()) / n),
    ]
}

/// Upper bounds `[R1, R2, R1+R2]` with a conference link of `c12` bits.
pub fn mac_conf_fixed_bounds(ch: &ChannelSpec, c12: f64, split: &MacPowerSplit) -> [f64; 3] {
    let n = ch.n0;
    let (p1, p2) = (ch.p1, ch.p2);
    let (bb1, bb2) = (1.0 - split.beta1, 1.0 - split.beta2);
    let coherent = c((p1 + p2 + 2.0 * (split.beta1 * split.beta2 * p1 * p2).sqrt()) / n);
    [
        c(bb1 * p1 / n) + c12,
        c(bb2 * p2 / n),
        (c((bb1 * p1 + bb2 * p2) / n) + c12).min(coherent),
    ]
}

pub fn mac_plain_contains(ch: &ChannelSpec, rp: &RatePoint) -> FeasibilityReport {
    let b = mac_plain_bounds(ch);
    ReportBuilder::new()
        .push("r1", b[0] - rp.r1)
        .push("r2", b[1] - rp.r2)
        .push("r1+r2", b[2] - rp.sum())
        .finish(0.0)
}

pub fn mac_conf_unlimited_contains(ch: &ChannelSpec, rp: &RatePoint, beta: f64) -> Result<FeasibilityReport> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain("beta", format!("must lie in [0, 1], got {beta}")));
    }
    let b = mac_conf_unlimited_bounds(ch, beta);
    Ok(ReportBuilder::new()
        .push("r2", b[0] - rp.r2)
        .push("r1+r2", b[1] - rp.sum())
        .finish(0.0))
}

/// One-sided conferencing region for a finite link; `Unlimited` is rejected.
pub fn mac_conf_fixed_contains(ch: &ChannelSpec, rp: &RatePoint, split: &MacPowerSplit) -> Result<FeasibilityReport> {
    split.validate()?;
    let c12 = match ch.c12 {
        ConfCapacity::Finite(c) => c,
        ConfCapacity::Unlimited => {
            return Err(Error::domain(
                "c12",
                "finite conference capacity required; use mac_conf_unlimited_contains",
            ))
        }
    };
    let b = mac_conf_fixed_bounds(ch, c12, split);
    Ok(ReportBuilder::new()
        .push("r1", b[0] - rp.r1)
        .push("r2", b[1] - rp.r2)
        .push("r1+r2", b[2] - rp.sum())
        .finish(0.0))
}
