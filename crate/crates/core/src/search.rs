//! Minimal symmetric power, minimal conference capacity and curve tracing for
//! each coding scheme.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{full_coop_min_power_symmetric, necessary_condition, necessary_min_power_symmetric};
use crate::error::{Error, Result};
use crate::model::{ChannelSpec, ConfCapacity, DistortionPair, SourceSpec};
use crate::optim::{golden_max, halton, pattern_max, PatternOpts};
use crate::rdlib::{half_log2, rd_joint};
use crate::report::{FeasibilityReport, ReportBuilder, Witness};
use crate::separation::{sep1_feasible, sep2_feasible, SEARCH_TOL};
use crate::vqscheme::{
    vq_conf_requirement, vq_distortion, vq_rate_bounds, vq_rate_region_with_margin, vq_unlimited_bounds,
    vq_unlimited_distortion, vq_unlimited_region, VqConfig,
};

/// Ceiling on the symmetric power, as a multiple of the noise variance.
pub const POWER_CEILING: f64 = 1e6;
/// Default relative bisection tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
const VQ_STARTS: usize = 16;
const MAX_CONF_BITS: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Vq,
    Sep1,
    Sep2,
    Necessary,
    FullCoop,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Vq => "vq",
            Scheme::Sep1 => "sep1",
            Scheme::Sep2 => "sep2",
            Scheme::Necessary => "necessary",
            Scheme::FullCoop => "fullcoop",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "vq" => Ok(Scheme::Vq),
            "sep1" => Ok(Scheme::Sep1),
            "sep2" => Ok(Scheme::Sep2),
            "necessary" => Ok(Scheme::Necessary),
            "fullcoop" | "full-coop" => Ok(Scheme::FullCoop),
            other => Err(Error::domain("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub objective: f64,
    pub witness: Option<Witness>,
    pub iterations: usize,
    pub converged: bool,
    pub bracket: (f64, f64),
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NEG_INFINITY
    } else {
        a.min(b)
    }
}

/// Smallest slack of the general vector-quantizer constraints plus the two
/// distortion constraints, the latter as `log2(target/achieved)/2`.
fn vq_score(src: &SourceSpec, ch: &ChannelSpec, t: &DistortionPair, cfg: &VqConfig) -> f64 {
    let (b, v_present) = vq_rate_bounds(src, ch, cfg);
    let lhs = [
        cfg.r1,
        cfg.r2,
        cfg.rc,
        cfg.r1 + cfg.r2,
        cfg.r1 + cfg.rc,
        cfg.r2 + cfg.rc,
        cfg.r1 + cfg.r2 + cfg.rc,
    ];
    let mut m = f64::INFINITY;
    for i in 0..7 {
        m = nan_min(m, if i == 2 && !v_present { -cfg.rc } else { b[i] - lhs[i] });
    }
    if let ConfCapacity::Finite(c) = ch.c12 {
        m = nan_min(m, c - vq_conf_requirement(src, cfg).0);
    }
    let d = vq_distortion(src, cfg);
    nan_min(m, nan_min(half_log2(t.d1 / d.d1), half_log2(t.d2 / d.d2)))
}

fn rate_cap(t: &DistortionPair) -> f64 {
    (0.5 * (1.0 / t.d1).log2() + 0.5 * (1.0 / t.d2).log2() + 2.0).max(8.0)
}

fn vq_from_unit(x: &[f64], cap: f64) -> VqConfig {
    VqConfig { r1: cap * x[0], r2: cap * x[1], rc: cap * x[2], beta1: x[3], beta2: x[4] }
}

/// Pattern search over the five parameters in unit coordinates, starting from
/// `warm` (if any) and then from Halton points. Stops at the first feasible point.
fn vq_general_search(
    src: &SourceSpec,
    ch: &ChannelSpec,
    t: &DistortionPair,
    warm: Option<&VqConfig>,
) -> (VqConfig, f64) {
    let cap = rate_cap(t);
    let obj = |x: &[f64]| vq_score(src, ch, t, &vq_from_unit(x, cap));
    let lo = [0.0; 5];
    let hi = [1.0; 5];
    let opts = PatternOpts { step: 0.25, min_step: 1e-7, target: Some(0.0), ..PatternOpts::default() };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = warm {
        starts.push(vec![w.r1 / cap, w.r2 / cap, w.rc / cap, w.beta1, w.beta2]);
    }
    // Rates spread over the lower part of the box, where targets of interest sit.
    starts.extend((0..VQ_STARTS).map(|i| {
        let h = halton(i, 5);
        vec![0.5 * h[0], 0.5 * h[1], 0.5 * h[2], h[3], h[4]]
    }));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in &starts {
        let (x, fx, _) = pattern_max(obj, x0, &lo, &hi, &opts);
        if best.as_ref().is_none_or(|b| fx > b.1) {
            best = Some((x, fx));
        }
        if fx >= 0.0 {
            break;
        }
    }
    let (x, fx) = best.expect("at least one start");
    (vq_from_unit(&x, cap), fx)
}

/// Smallest `rc` meeting both targets in the unlimited-conference form at `r2`.
fn rc_min(src: &SourceSpec, t: &DistortionPair, r2: f64) -> Option<f64> {
    let ok = |rc: f64| {
        let d = vq_unlimited_distortion(src, r2, rc);
        d.d1 <= t.d1 && d.d2 <= t.d2
    };
    if ok(0.0) {
        return Some(0.0);
    }
    let mut hi = 64.0;
    if !ok(hi) {
        return None;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn unlimited_slack(src: &SourceSpec, ch: &ChannelSpec, r2: f64, rc: f64, beta: f64) -> f64 {
    let b = vq_unlimited_bounds(src, ch, r2, rc, beta);
    nan_min(nan_min(b[0] - r2, b[1] - rc), b[2] - r2 - rc)
}

/// Best `beta` at `(r2, rc)`, searched in `u = ln(1 - beta)`; the slack is
/// quasi-concave in `beta`.
fn unlimited_best_beta(src: &SourceSpec, ch: &ChannelSpec, r2: f64, rc: f64) -> (f64, f64) {
    let to_beta = |u: f64| -u.exp_m1();
    let (u, f) = golden_max(|u| unlimited_slack(src, ch, r2, rc, to_beta(u)), -40.0, 0.0, 1e-10);
    let f1 = unlimited_slack(src, ch, r2, rc, 1.0);
    if f1 > f {
        (1.0, f1)
    } else {
        (to_beta(u), f)
    }
}

/// Unlimited-conference form with both distortion constraints tight: a grid
/// over `r2` refined by golden section around the best cell.
fn vq_unlimited_search(src: &SourceSpec, ch: &ChannelSpec, t: &DistortionPair) -> Option<(f64, f64, f64, f64)> {
    let cap = rate_cap(t);
    let eval = |r2: f64| rc_min(src, t, r2).map(|rc| (rc, unlimited_best_beta(src, ch, r2, rc)));
    let score = |r2: f64| eval(r2).map_or(f64::NEG_INFINITY, |(_, (_, f))| f);
    const GRID: usize = 64;
    let xs: Vec<f64> = (0..=GRID).map(|k| cap * k as f64 / GRID as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| score(x)).collect();
    let k = (0..=GRID).fold(0, |m, i| if vals[i] > vals[m] { i } else { m });
    if vals[k] == f64::NEG_INFINITY {
        return None;
    }
    let (a, b) = (xs[k.saturating_sub(1)], xs[(k + 1).min(GRID)]);
    let (r2g, fg) = golden_max(score, a, b, 1e-10);
    let r2 = if fg >= vals[k] { r2g } else { xs[k] };
    let (rc, (beta, f)) = eval(r2)?;
    Some((r2, rc, beta, f))
}

/// Vector-quantizer feasibility: does some configuration meet `target` within `ch`?
///
/// With an unlimited link three searches are tried in turn: the
/// unlimited-conference form, the general form, and the general form with no
/// link. The report carries the constraint and distortion slacks of the witness.
pub fn vq_feasible(src: &SourceSpec, ch: &ChannelSpec, target: &DistortionPair) -> Result<FeasibilityReport> {
    vq_feasible_warm(src, ch, target, None)
}

fn vq_feasible_warm(
    src: &SourceSpec,
    ch: &ChannelSpec,
    target: &DistortionPair,
    warm: Option<&Witness>,
) -> Result<FeasibilityReport> {
    src.validate()?;
    ch.validate()?;
    target.validate()?;
    let warm_cfg = match warm {
        Some(Witness::Vq { config }) => Some(*config),
        _ => None,
    };
    let mut fallback: Option<FeasibilityReport> = None;
    if ch.c12.is_unlimited() {
        if let Some((r2, rc, beta, f)) = vq_unlimited_search(src, ch, target) {
            let rep = unlimited_report(src, ch, target, r2, rc, beta)?;
            if f >= -SEARCH_TOL && rep.feasible {
                return Ok(rep);
            }
            fallback = Some(rep);
        }
    }
    let (cfg, f) = vq_general_search(src, ch, target, warm_cfg.as_ref());
    let rep = general_report(src, ch, target, &cfg)?;
    if f >= -SEARCH_TOL && rep.feasible {
        return Ok(rep);
    }
    let mut best = match fallback {
        Some(fb) if fb.min_slack() > rep.min_slack() => fb,
        _ => rep,
    };
    if ch.c12.is_unlimited() {
        let ch0 = ch.with_c12(ConfCapacity::Finite(0.0));
        let (cfg0, f0) = vq_general_search(src, &ch0, target, warm_cfg.as_ref());
        let rep0 = general_report(src, ch, target, &cfg0)?;
        if f0 >= -SEARCH_TOL && rep0.feasible {
            return Ok(rep0);
        }
        if rep0.min_slack() > best.min_slack() {
            best = rep0;
        }
    }
    Ok(best)
}

fn general_report(src: &SourceSpec, ch: &ChannelSpec, t: &DistortionPair, cfg: &VqConfig) -> Result<FeasibilityReport> {
    let rep = match vq_rate_region_with_margin(src, ch, cfg, -SEARCH_TOL) {
        Ok(r) => r,
        // A positive rc without a second-stage codebook: report it as violated.
        Err(Error::Degenerate(_)) => vq_rate_region_with_margin(src, ch, &VqConfig { rc: 0.0, ..*cfg }, -SEARCH_TOL)?,
        Err(e) => return Err(e),
    };
    Ok(with_distortion(rep, &vq_distortion(src, cfg), t).with_witness(Witness::Vq { config: *cfg }))
}

fn unlimited_report(
    src: &SourceSpec,
    ch: &ChannelSpec,
    t: &DistortionPair,
    r2: f64,
    rc: f64,
    beta: f64,
) -> Result<FeasibilityReport> {
    let (rep, d) = vq_unlimited_region(src, ch, r2, rc, beta)?;
    Ok(with_distortion(rep, &d, t))
}

fn with_distortion(rep: FeasibilityReport, d: &DistortionPair, t: &DistortionPair) -> FeasibilityReport {
    let mut b = ReportBuilder::new();
    for (k, v) in &rep.slacks {
        b = b.push(k, v.0);
    }
    let out = b.push("d1", half_log2(t.d1 / d.d1)).push("d2", half_log2(t.d2 / d.d2)).finish(-SEARCH_TOL);
    match rep.witness {
        Some(w) => out.with_witness(w),
        None => out,
    }
}

/// Feasibility of `scheme` at `ch`. `warm` is a previous witness to try first.
pub fn scheme_feasible(
    src: &SourceSpec,
    scheme: Scheme,
    ch: &ChannelSpec,
    target: &DistortionPair,
) -> Result<FeasibilityReport> {
    scheme_feasible_warm(src, scheme, ch, target, None)
}

fn scheme_feasible_warm(
    src: &SourceSpec,
    scheme: Scheme,
    ch: &ChannelSpec,
    target: &DistortionPair,
    warm: Option<&Witness>,
) -> Result<FeasibilityReport> {
    match scheme {
        Scheme::Vq => vq_feasible_warm(src, ch, target, warm),
        Scheme::Sep1 => sep1_feasible(src, ch, target),
        Scheme::Sep2 => sep2_feasible(src, ch, target),
        Scheme::Necessary => necessary_condition(src, ch, target),
        Scheme::FullCoop => {
            let cap = half_log2(1.0 + (ch.p1.sqrt() + ch.p2.sqrt()).powi(2) / ch.n0);
            Ok(ReportBuilder::new().push("joint", cap - rd_joint(src, target)).finish(-SEARCH_TOL))
        }
    }
}

/// Geometric bisection for the smallest `x` in `[lo, hi]` where `pred` holds,
/// given that it holds at `hi`. Returns the final bracket, the witness at the
/// upper end and the iteration count.
fn bisect_witness<F>(mut pred: F, mut lo: f64, mut hi: f64, mut witness: Option<Witness>, tol: f64) -> Result<(f64, f64, Option<Witness>, usize)>
where
    F: FnMut(f64, Option<&Witness>) -> Result<Option<FeasibilityReport>>,
{
    let mut it = 0;
    while hi - lo > tol * hi && it < 200 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        match pred(mid, witness.as_ref())? {
            Some(rep) => {
                hi = mid;
                witness = rep.witness;
            }
            None => lo = mid,
        }
        it += 1;
    }
    Ok((lo, hi, witness, it))
}

fn validate_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain("tol", format!("must lie in (0, 1), got {tol}")));
    }
    Ok(())
}

/// Smallest `P = P1 = P2` at which `scheme` meets `target`.
pub fn min_power_symmetric(
    src: &SourceSpec,
    scheme: Scheme,
    target: &DistortionPair,
    c12: ConfCapacity,
    n0: f64,
    tol: f64,
) -> Result<OptimizationResult> {
    src.validate()?;
    target.validate()?;
    validate_tol(tol)?;
    ChannelSpec::symmetric(1.0, n0, c12)?;
    if rd_joint(src, target) == 0.0 {
        let witness = match scheme {
            Scheme::Vq => Some(Witness::Vq { config: VqConfig::default() }),
            Scheme::Necessary => Some(Witness::Necessary { beta: 0.0 }),
            _ => None,
        };
        return Ok(OptimizationResult { objective: 0.0, witness, iterations: 0, converged: true, bracket: (0.0, 0.0) });
    }
    let floor = necessary_min_power_symmetric(src, target, n0);
    match scheme {
        Scheme::FullCoop => {
            let p = full_coop_min_power_symmetric(src, target, n0);
            return Ok(OptimizationResult { objective: p, witness: None, iterations: 0, converged: true, bracket: (p, p) });
        }
        Scheme::Necessary => {
            let ch = ChannelSpec::symmetric(floor, n0, c12)?;
            let w = necessary_condition(src, &ch, target)?.witness;
            return Ok(OptimizationResult { objective: floor, witness: w, iterations: 0, converged: true, bracket: (floor, floor) });
        }
        _ => {}
    }
    let ceiling = POWER_CEILING * n0;
    let at = |p: f64, warm: Option<&Witness>| -> Result<Option<FeasibilityReport>> {
        let ch = ChannelSpec::symmetric(p, n0, c12)?;
        let rep = scheme_feasible_warm(src, scheme, &ch, target, warm)?;
        Ok(if rep.feasible { Some(rep) } else { None })
    };
    let top = at(ceiling, None)?.ok_or_else(|| {
        Error::Unbounded(format!("{scheme} cannot meet ({}, {}) at P = {ceiling}", target.d1, target.d2))
    })?;
    let lo = (floor * (1.0 - 1e-9)).max(1e-12 * n0);
    if let Some(rep) = at(lo, top.witness.as_ref())? {
        return Ok(OptimizationResult { objective: lo, witness: rep.witness, iterations: 1, converged: true, bracket: (lo, lo) });
    }
    let (lo, hi, witness, it) = bisect_witness(at, lo, ceiling, top.witness, tol)?;
    Ok(OptimizationResult { objective: hi, witness, iterations: it, converged: hi - lo <= tol * hi, bracket: (lo, hi) })
}

/// Smallest finite conference capacity at which `scheme` meets `target`.
pub fn min_conf_capacity(
    src: &SourceSpec,
    p1: f64,
    p2: f64,
    n0: f64,
    scheme: Scheme,
    target: &DistortionPair,
    tol: f64,
) -> Result<OptimizationResult> {
    src.validate()?;
    target.validate()?;
    validate_tol(tol)?;
    if !matches!(scheme, Scheme::Vq | Scheme::Sep1) {
        return Err(Error::domain("scheme", format!("conference capacity search supports vq and sep1, got {scheme}")));
    }
    let base = ChannelSpec::new(p1, p2, n0, ConfCapacity::Unlimited)?;
    let at = |c: f64, warm: Option<&Witness>| -> Result<Option<FeasibilityReport>> {
        let rep = scheme_feasible_warm(src, scheme, &base.with_c12(ConfCapacity::Finite(c)), target, warm)?;
        Ok(if rep.feasible { Some(rep) } else { None })
    };
    let unl = scheme_feasible(src, scheme, &base, target)?;
    if !unl.feasible {
        return Err(Error::Unbounded(format!("{scheme} cannot meet ({}, {}) even with an unlimited link", target.d1, target.d2)));
    }
    if let Some(rep) = at(0.0, None)? {
        return Ok(OptimizationResult { objective: 0.0, witness: rep.witness, iterations: 0, converged: true, bracket: (0.0, 0.0) });
    }
    // A witness of the unlimited-conference form is a general configuration
    // with R1 = 0 and beta1 = 1, whose link requirement is finite.
    let mut warm = match unl.witness {
        Some(Witness::VqUnlimited { r2, rc, beta }) => {
            Some(Witness::Vq { config: VqConfig { r1: 0.0, r2, rc, beta1: 1.0, beta2: beta } })
        }
        w => w,
    };
    let mut hi = match &warm {
        Some(Witness::Vq { config }) => (vq_conf_requirement(src, config).0 + 1e-9).max(1e-6),
        _ => 1.0,
    };
    let mut top = None;
    while hi <= MAX_CONF_BITS {
        if let Some(rep) = at(hi, warm.as_ref())? {
            top = Some(rep);
            break;
        }
        hi *= 2.0;
    }
    let top = top.ok_or_else(|| Error::Unbounded(format!("{scheme} needs more than {MAX_CONF_BITS} conference bits")))?;
    warm = top.witness;
    // Linear bisection: the lower end is 0.
    let mut lo = 0.0;
    let mut it = 0;
    while hi - lo > tol * hi.max(1.0) && it < 200 {
        let mid = 0.5 * (lo + hi);
        match at(mid, warm.as_ref())? {
            Some(rep) => {
                hi = mid;
                warm = rep.witness;
            }
            None => lo = mid,
        }
        it += 1;
    }
    Ok(OptimizationResult {
        objective: hi,
        witness: warm,
        iterations: it,
        converged: hi - lo <= tol * hi.max(1.0),
        bracket: (lo, hi),
    })
}

/// Smallest `d1 d2` at fixed `d2` for `scheme` on `ch`, found by bisection on `d1`.
pub fn min_distortion_product(
    src: &SourceSpec,
    scheme: Scheme,
    ch: &ChannelSpec,
    d2: f64,
    tol: f64,
) -> Result<OptimizationResult> {
    src.validate()?;
    ch.validate()?;
    validate_tol(tol)?;
    let at = |d1: f64, warm: Option<&Witness>| -> Result<Option<FeasibilityReport>> {
        let t = DistortionPair::new(d1, d2)?;
        let rep = scheme_feasible_warm(src, scheme, ch, &t, warm)?;
        Ok(if rep.feasible { Some(rep) } else { None })
    };
    let top = at(1.0, None)?.ok_or_else(|| Error::Unbounded(format!("{scheme} cannot meet d2 = {d2}")))?;
    let lo = 1e-15;
    if let Some(rep) = at(lo, top.witness.as_ref())? {
        return Ok(OptimizationResult { objective: lo * d2, witness: rep.witness, iterations: 1, converged: true, bracket: (lo * d2, lo * d2) });
    }
    let (lo, hi, witness, it) = bisect_witness(at, lo, 1.0, top.witness, tol)?;
    Ok(OptimizationResult {
        objective: hi * d2,
        witness,
        iterations: it,
        converged: hi - lo <= tol * hi,
        bracket: (lo * d2, hi * d2),
    })
}

/// A scheme column of a traced curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeColumn {
    pub scheme: Scheme,
    /// Conference capacity; `None` takes the curve-wide value.
    pub c12: Option<ConfCapacity>,
}

impl SchemeColumn {
    pub fn label(&self) -> String {
        match self.c12 {
            None => self.scheme.to_string(),
            Some(ConfCapacity::Unlimited) => format!("{}-unlimited", self.scheme),
            Some(ConfCapacity::Finite(c)) if c == 0.0 => format!("{}-none", self.scheme),
            Some(ConfCapacity::Finite(c)) => format!("{}-c{c}", self.scheme),
        }
    }
}

impl FromStr for SchemeColumn {
    type Err = Error;

    /// `vq`, `vq-unlimited`, `vq-none`, `sep1-c1.5`, ...
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        for (suffix, c) in [("-unlimited", ConfCapacity::Unlimited), ("-inf", ConfCapacity::Unlimited), ("-none", ConfCapacity::Finite(0.0))] {
            if let Some(head) = s.strip_suffix(suffix) {
                return Ok(SchemeColumn { scheme: head.parse()?, c12: Some(c) });
            }
        }
        if let Some(pos) = s.rfind("-c") {
            if let Ok(c) = s[pos + 2..].parse::<f64>() {
                if c >= 0.0 {
                    return Ok(SchemeColumn { scheme: s[..pos].parse()?, c12: Some(ConfCapacity::Finite(c)) });
                }
            }
        }
        Ok(SchemeColumn { scheme: s.parse()?, c12: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    /// Minimal symmetric power over `alpha = d1/d2`.
    PminVsAlpha,
    /// Minimal conference capacity over `alpha` at fixed symmetric power.
    C12VsAlpha,
    /// Minimal `d1 d2` at fixed `d2` over the symmetric SNR `P/N`.
    D1d2VsSnr,
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pmin-vs-alpha" => Ok(CurveKind::PminVsAlpha),
            "c12-vs-alpha" => Ok(CurveKind::C12VsAlpha),
            "d1d2-vs-snr" => Ok(CurveKind::D1d2VsSnr),
            other => Err(Error::domain("kind", format!("unknown curve kind `{other}`"))),
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::PminVsAlpha => "pmin-vs-alpha",
            CurveKind::C12VsAlpha => "c12-vs-alpha",
            CurveKind::D1d2VsSnr => "d1d2-vs-snr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub src: SourceSpec,
    pub d2: f64,
    pub n0: f64,
    /// Symmetric power for `C12VsAlpha`.
    pub power: f64,
    pub c12: ConfCapacity,
    pub schemes: Vec<SchemeColumn>,
    pub tol: f64,
}

/// A cell is either a value or an error marker such as `Unbounded`.
pub type Cell = std::result::Result<f64, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub x: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTable {
    pub kind: CurveKind,
    pub x_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<TraceRow>,
}

fn error_marker(e: &Error) -> String {
    match e {
        Error::Domain { .. } => "DomainError",
        Error::Degenerate(_) => "DegenerateError",
        Error::Regime(_) => "RegimeError",
        Error::Singular(_) => "SingularError",
        Error::Unbounded(_) => "UnboundedError",
    }
    .to_string()
}

/// One row per grid point, computed independently and emitted in grid order.
pub fn trace_curve(kind: CurveKind, params: &TraceParams, grid: &[f64]) -> Result<TraceTable> {
    if grid.is_empty() {
        return Err(Error::domain("grid", "must be nonempty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("grid", "must be strictly increasing"));
    }
    if params.schemes.is_empty() {
        return Err(Error::domain("schemes", "at least one scheme is required"));
    }
    params.src.validate()?;
    validate_tol(params.tol)?;
    let mut columns: Vec<String> = params.schemes.iter().map(|s| s.label()).collect();
    if kind == CurveKind::D1d2VsSnr {
        columns.push("semi_symmetric_limit".to_string());
    }
    let cell = |x: f64, col: &SchemeColumn| -> Result<f64> {
        let c12 = col.c12.unwrap_or(params.c12);
        match kind {
            CurveKind::PminVsAlpha => {
                let t = DistortionPair::new(x * params.d2, params.d2)?;
                Ok(min_power_symmetric(&params.src, col.scheme, &t, c12, params.n0, params.tol)?.objective)
            }
            CurveKind::C12VsAlpha => {
                let t = DistortionPair::new(x * params.d2, params.d2)?;
                let p = params.power;
                Ok(min_conf_capacity(&params.src, p, p, params.n0, col.scheme, &t, params.tol)?.objective)
            }
            CurveKind::D1d2VsSnr => {
                let ch = ChannelSpec::symmetric(x * params.n0, params.n0, c12)?;
                Ok(min_distortion_product(&params.src, col.scheme, &ch, params.d2, params.tol)?.objective)
            }
        }
    };
    let rows = grid
        .par_iter()
        .map(|&x| {
            let mut cells: Vec<Cell> =
                params.schemes.iter().map(|col| cell(x, col).map_err(|e| error_marker(&e))).collect();
            if kind == CurveKind::D1d2VsSnr {
                let p = x * params.n0;
                cells.push(
                    crate::bounds::semi_symmetric_limit(params.src.rho, params.n0, p, params.d2).map_err(|e| error_marker(&e)),
                );
            }
            TraceRow { x, cells }
        })
        .collect();
    let x_name = match kind {
        CurveKind::D1d2VsSnr => "snr",
        _ => "alpha",
    };
    Ok(TraceTable { kind, x_name: x_name.to_string(), columns, rows })
}
