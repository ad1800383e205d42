//! Feasibility of the two source-channel separation schemes.
//!
//! Scheme 1 pairs the two-terminal source code with conferencing MAC codes;
//! scheme 2 pairs the conferencing source code with a plain MAC code.

use crate::capacity::{mac_conf_fixed_bounds, mac_conf_unlimited_bounds, mac_plain_bounds, MacPowerSplit};
use crate::error::Result;
use crate::model::{ChannelSpec, ConfCapacity, DistortionPair, RatePoint, SourceSpec};
use crate::optim::{golden_max, halton, pattern_max, PatternOpts};
use crate::rdlib::{fr, kaspi_region_point, log2_plus, wagner_bounds, wagner_sum_bound, AuxVariance, KaspiParams};
use crate::report::{FeasibilityReport, ReportBuilder, Witness};

/// Slack threshold below which a search result still counts as feasible.
pub const SEARCH_TOL: f64 = 1e-9;

const GOLDEN_TOL: f64 = 1e-11;

// Smallest R2 that completes a two-terminal rate pair with the given R1.
struct WagnerEdge {
    rho2: f64,
    d1: f64,
    d2: f64,
    sum: f64,
}

impl WagnerEdge {
    fn new(src: &SourceSpec, d: &DistortionPair) -> Result<Self> {
        Ok(WagnerEdge { rho2: src.rho * src.rho, d1: d.d1, d2: d.d2, sum: wagner_sum_bound(src, d)? })
    }

    /// Below this R1 no R2 satisfies the R1 constraint.
    fn r1_floor(&self) -> f64 {
        0.5 * log2_plus((1.0 - self.rho2) / self.d1)
    }

    fn r2_min(&self, r1: f64) -> f64 {
        let own = 0.5 * log2_plus((1.0 - self.rho2 * fr(r1)) / self.d2);
        // R1 >= 1/2 log+((1 - rho^2 (1 - 2^{-2 R2})) / d1), solved for R2.
        let need = if self.d1 * 4f64.powf(r1) >= 1.0 {
            0.0
        } else if self.rho2 == 0.0 {
            f64::INFINITY
        } else {
            let x = (self.d1 * 4f64.powf(r1) - 1.0 + self.rho2) / self.rho2;
            if x <= 0.0 {
                f64::INFINITY
            } else {
                -0.5 * x.log2()
            }
        };
        own.max(self.sum - r1).max(need).max(0.0)
    }
}

fn sep1_unlimited_slack(ch: &ChannelSpec, edge: &WagnerEdge, beta: f64, r1: f64) -> f64 {
    let r2 = edge.r2_min(r1);
    let b = mac_conf_unlimited_bounds(ch, beta);
    (b[0] - r2).min(b[1] - r1 - r2)
}

fn sep1_fixed_slack(ch: &ChannelSpec, c12: f64, edge: &WagnerEdge, split: &MacPowerSplit, r1: f64) -> f64 {
    let r2 = edge.r2_min(r1);
    let b = mac_conf_fixed_bounds(ch, c12, split);
    (b[0] - r1).min(b[1] - r2).min(b[2] - r1 - r2)
}

fn r1_range(edge: &WagnerEdge) -> (f64, f64) {
    let lo = edge.r1_floor();
    let hi = lo.max(edge.sum) + 0.5 * (1.0 / edge.d1).log2() + 4.0;
    (lo, hi)
}

/// Scheme 1: is some rate pair on the two-terminal region boundary inside the
/// conferencing MAC region for some power split?
///
/// The best channel slack over `(R1, split)` is concave, so nested golden
/// sections over the split and `R1` find it.
pub fn sep1_feasible(src: &SourceSpec, ch: &ChannelSpec, target: &DistortionPair) -> Result<FeasibilityReport> {
    src.validate()?;
    ch.validate()?;
    target.validate()?;
    let edge = WagnerEdge::new(src, target)?;
    let (lo, hi) = r1_range(&edge);
    let (r1, split) = match ch.c12 {
        ConfCapacity::Unlimited => {
            let inner = |beta: f64| golden_max(|r| sep1_unlimited_slack(ch, &edge, beta, r), lo, hi, GOLDEN_TOL);
            let (beta, _) = golden_max(|b| inner(b).1, 0.0, 1.0, GOLDEN_TOL);
            (inner(beta).0, MacPowerSplit { beta1: 1.0, beta2: beta })
        }
        ConfCapacity::Finite(c12) => {
            let inner = |s: MacPowerSplit| golden_max(|r| sep1_fixed_slack(ch, c12, &edge, &s, r), lo, hi, 1e-9);
            let mid = |b1: f64| golden_max(|b2| inner(MacPowerSplit { beta1: b1, beta2: b2 }).1, 0.0, 1.0, 1e-7);
            let (b1, _) = golden_max(|b1| mid(b1).1, 0.0, 1.0, 1e-7);
            let (b2, _) = mid(b1);
            let s = MacPowerSplit { beta1: b1, beta2: b2 };
            (inner(s).0, s)
        }
    };
    Ok(sep1_report(src, ch, target, &edge, r1, split)?)
}

fn sep1_report(
    src: &SourceSpec,
    ch: &ChannelSpec,
    target: &DistortionPair,
    edge: &WagnerEdge,
    r1: f64,
    split: MacPowerSplit,
) -> Result<FeasibilityReport> {
    let rates = RatePoint { r1, r2: edge.r2_min(r1) };
    let w = wagner_bounds(src, target, &rates)?;
    let mut rb = ReportBuilder::new()
        .push("src.r1", rates.r1 - w[0])
        .push("src.r2", rates.r2 - w[1])
        .push("src.r1+r2", rates.sum() - w[2]);
    rb = match ch.c12 {
        ConfCapacity::Unlimited => {
            let b = mac_conf_unlimited_bounds(ch, split.beta2);
            rb.push("ch.r2", b[0] - rates.r2).push("ch.r1+r2", b[1] - rates.sum())
        }
        ConfCapacity::Finite(c12) => {
            let b = mac_conf_fixed_bounds(ch, c12, &split);
            rb.push("ch.r1", b[0] - rates.r1)
                .push("ch.r2", b[1] - rates.r2)
                .push("ch.r1+r2", b[2] - rates.sum())
        }
    };
    Ok(rb.finish(-SEARCH_TOL).with_witness(Witness::Sep1 { rates, beta1: split.beta1, beta2: split.beta2 }))
}

// Search box for log-precisions (precision times sigma^2).
const LOG_PREC_LO: f64 = -12.0;
const LOG_PREC_HI: f64 = 12.0;
const SEP2_STARTS: usize = 16;

fn sep2_params(src: &SourceSpec, x: &[f64]) -> KaspiParams {
    let v = |t: f64| AuxVariance::Finite(src.sigma2 * (-t).exp());
    KaspiParams { sw2: v(x[0]), su2: v(x[1]), sv2: v(x[2]) }
}

struct Sep2Eval {
    slacks: [(&'static str, f64); 7],
    rates: RatePoint,
}

fn sep2_eval(src: &SourceSpec, ch: &ChannelSpec, target: &DistortionPair, kp: &KaspiParams) -> Result<Sep2Eval> {
    let p = kaspi_region_point(src, kp)?;
    let c = mac_plain_bounds(ch);
    let need = p.sum.max(p.r1 + p.r2);
    let room = c[2].min(c[0] + c[1]);
    let r1 = p.r1;
    let mut r2 = p.r2.max(p.sum - p.r1);
    let mut r1w = r1;
    if r2 > c[1] {
        r2 = c[1];
        r1w = p.sum - c[1];
    }
    Ok(Sep2Eval {
        slacks: [
            ("src.d1", 0.5 * (target.d1 / p.dist.d1).log2()),
            ("src.d2", 0.5 * (target.d2 / p.dist.d2).log2()),
            ("src.c12", ch.c12.bits() - p.c12),
            ("ch.r1", c[0] - p.r1),
            ("ch.r2", c[1] - p.r2),
            ("ch.r1+r2", room - need),
            ("ch.sum", c[2] - p.sum),
        ],
        rates: RatePoint { r1: r1w, r2 },
    })
}

fn sep2_min(e: &Sep2Eval) -> f64 {
    e.slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
}

/// Scheme 2: is some test-channel parameter inside the conferencing source-code
/// region, meeting the target, with its rate bounds inside the plain MAC region?
///
/// Pattern search over the three log-precisions from deterministic Halton starts;
/// stops at the first feasible point.
pub fn sep2_feasible(src: &SourceSpec, ch: &ChannelSpec, target: &DistortionPair) -> Result<FeasibilityReport> {
    src.validate()?;
    ch.validate()?;
    target.validate()?;
    let mut best_kp = KaspiParams::unlimited();
    let mut best = sep2_eval(src, ch, target, &best_kp)?;
    let mut best_val = sep2_min(&best);
    if best_val < -SEARCH_TOL {
        let obj = |x: &[f64]| {
            sep2_eval(src, ch, target, &sep2_params(src, x)).map(|e| sep2_min(&e)).unwrap_or(f64::NEG_INFINITY)
        };
        let lo = [LOG_PREC_LO; 3];
        let hi = [LOG_PREC_HI; 3];
        let opts = PatternOpts { step: 2.0, target: Some(0.0), ..PatternOpts::default() };
        for i in 0..SEP2_STARTS {
            let x0: Vec<f64> = halton(i, 3).iter().map(|u| -6.0 + 12.0 * u).collect();
            let (x, fx, _) = pattern_max(obj, &x0, &lo, &hi, &opts);
            if fx > best_val {
                best_val = fx;
                best_kp = sep2_params(src, &x);
                best = sep2_eval(src, ch, target, &best_kp)?;
            }
            if best_val >= 0.0 {
                break;
            }
        }
    }
    let mut rb = ReportBuilder::new();
    for (name, v) in best.slacks {
        rb = rb.push(name, v);
    }
    Ok(rb.finish(-SEARCH_TOL).with_witness(Witness::Sep2 { params: best_kp, rates: best.rates }))
}
