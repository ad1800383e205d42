//! The vector-quantizer scheme: two-stage quantization at Encoder 1 with the
//! second-stage index binned over the conference link, one-stage quantization
//! at Encoder 2, and coherent superposition of the codewords on the channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSpec, DistortionPair, SourceSpec};
use crate::rdlib::{ex, fr};
use crate::report::{FeasibilityReport, ReportBuilder};

/// Constraint names reported by [`vq_rate_region`], in order.
pub const VQ_CONSTRAINTS: [&str; 8] = ["r1", "r2", "rc", "r1+r2", "r1+rc", "r2+rc", "r1+r2+rc", "c12"];

/// Free parameters: quantizer rates (bits) and coherent-power fractions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VqConfig {
    pub r1: f64,
    pub r2: f64,
    pub rc: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl VqConfig {
    pub fn new(r1: f64, r2: f64, rc: f64, beta1: f64, beta2: f64) -> Result<Self> {
        let c = VqConfig { r1, r2, rc, beta1, beta2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("r1", self.r1), ("r2", self.r2), ("rc", self.rc)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(field, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        for (field, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Channel-input amplitude gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqGains {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub alpha: f64,
    pub sigma_v2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqConstants {
    pub tilde_rho: f64,
    pub bar_rho: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub lambda_c: f64,
    pub lambda12: f64,
    pub lambda1c: f64,
    pub lambda2c: f64,
}

// 0/0 gains are defined as 0: the component is absent.
fn gain(power: f64, var: f64) -> f64 {
    if power <= 0.0 || var <= 0.0 {
        0.0
    } else {
        (power / var).sqrt()
    }
}

pub fn vq_constants(src: &SourceSpec, ch: &ChannelSpec, cfg: &VqConfig) -> (VqGains, VqConstants) {
    let s2 = src.sigma2;
    let r2 = src.rho * src.rho;
    let (p1, p2, n) = (ch.p1, ch.p2, ch.n0);
    let (f1, f2, fc) = (fr(cfg.r1), fr(cfg.r2), fr(cfg.rc));
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let (bb1, bb2) = (1.0 - b1, 1.0 - b2);

    let tilde_rho = src.rho * (f1 * f2).sqrt();
    let bar_rho = src.rho * (ex(cfg.r1) * f2 * fc).sqrt();
    let sigma_v2 = s2 * ex(cfg.r1) * fc;
    let sv = sigma_v2.sqrt();

    let a11 = gain(bb1 * p1, s2 * f1);
    let a12 = gain(b1 * p1, sigma_v2);
    let a21 = gain(bb2 * p2, s2 * f2);
    let a22 = if sigma_v2 > 0.0 && b2 > 0.0 {
        let a = (r2 * bb2 * f2).sqrt();
        (p2 / s2).sqrt() * ((a * a + s2 * b2 / sigma_v2).sqrt() - a)
    } else {
        0.0
    };
    let eta = if sigma_v2 > 0.0 { (b1 * p1).sqrt() + sv * a22 } else { 0.0 };

    let (rt2, rb2) = (tilde_rho * tilde_rho, bar_rho * bar_rho);
    let dd = 1.0 - rt2 - rb2;
    let lambda2 = n * n * rb2 * rt2 * (2.0 + rt2) / (b2 * p2 * dd + n);
    // rho_bar^2 / sigma_v^2 written as rho^2 f2 / sigma^2 so it stays finite as sigma_v^2 -> 0.
    let k = r2 * f2 / s2;
    let lambda_c = n * n * k * (rb2 * bb1 * p1 - rt2 * sigma_v2) / (eta * eta * dd + n * (1.0 - rt2));
    let lambda12 = bb1 * p1 + 2.0 * tilde_rho * (bb1 * bb2 * p1 * p2).sqrt() + bb2 * p2;
    let lambda1c = bb1 * p1 * (1.0 - rt2) + eta * eta * (1.0 - rb2)
        - 2.0 * eta * k * sv * (bb1 * p1 * s2 * f1).sqrt();
    let lambda2c = bb2 * p2 + 2.0 * eta * bar_rho * (bb2 * p2).sqrt() + eta * eta;

    (
        VqGains { a11, a12, a21, a22, alpha: a12 + a22, sigma_v2 },
        VqConstants { tilde_rho, bar_rho, lambda2, eta, lambda_c, lambda12, lambda1c, lambda2c },
    )
}

// 1/2 log2(num/den); a non-positive argument means the bound is unattainable.
fn hl(num: f64, den: f64) -> f64 {
    let x = num / den;
    if x > 0.0 && x.is_finite() {
        0.5 * x.log2()
    } else if num > 0.0 && den == 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Right-hand sides of the seven rate constraints, in [`VQ_CONSTRAINTS`] order.
/// `rc` is `None` when the second-stage codebook is empty (`sigma_v^2 = 0`).
pub fn vq_rate_bounds(src: &SourceSpec, ch: &ChannelSpec, cfg: &VqConfig) -> ([f64; 7], bool) {
    let (g, c) = vq_constants(src, ch, cfg);
    let (p1, p2, n) = (ch.p1, ch.p2, ch.n0);
    let (bb1, bb2) = (1.0 - cfg.beta1, 1.0 - cfg.beta2);
    let (rt2, rb2) = (c.tilde_rho * c.tilde_rho, c.bar_rho * c.bar_rho);
    let dd = 1.0 - rt2 - rb2;
    let eta = c.eta;
    let v_present = g.sigma_v2 > 0.0;

    let b_r1 = hl(bb1 * p1 * dd + n * (1.0 - rb2), n * dd);
    let b_r2 = hl(bb2 * p2 * dd + n, n * dd + c.lambda2);
    let b_rc = if v_present { hl(eta * eta * dd + n * (1.0 - rt2), n * dd + c.lambda_c) } else { 0.0 };
    let t12 = if c.lambda12 > 0.0 { bb2 * p2 * rb2 / c.lambda12 } else { 0.0 };
    let b_r1r2 = hl(c.lambda12 - bb2 * p2 * rb2 + n, (1.0 - t12) * n * (1.0 - rt2));
    // Without V, (bb1 P1 + eta^2)/lambda1c reduces to 1/(1 - rt^2) exactly.
    let q1c = if eta == 0.0 { 1.0 / (1.0 - rt2) } else { (bb1 * p1 + eta * eta) / c.lambda1c };
    let b_r1rc = hl((c.lambda1c + n) * q1c, n);
    let t2c = if c.lambda2c > 0.0 { bb2 * p2 * rt2 / c.lambda2c } else { 0.0 };
    let b_r2rc = hl(c.lambda2c - bb2 * p2 * rt2 + n, (1.0 - t2c) * n * (1.0 - rb2));
    let b_all = hl(
        c.lambda12 + 2.0 * eta * c.bar_rho * (bb2 * p2).sqrt() + eta * eta + n,
        n * (1.0 - rt2) * (1.0 - rb2),
    );
    ([b_r1, b_r2, b_rc, b_r1r2, b_r1rc, b_r2rc, b_all], v_present)
}

/// Rate-region membership with the default margin 0.
pub fn vq_rate_region(src: &SourceSpec, ch: &ChannelSpec, cfg: &VqConfig) -> Result<FeasibilityReport> {
    vq_rate_region_with_margin(src, ch, cfg, 0.0)
}

/// Feasible iff every slack is `>= margin`; pass `margin > 0` for strict inequalities.
pub fn vq_rate_region_with_margin(
    src: &SourceSpec,
    ch: &ChannelSpec,
    cfg: &VqConfig,
    margin: f64,
) -> Result<FeasibilityReport> {
    cfg.validate()?;
    let (b, v_present) = vq_rate_bounds(src, ch, cfg);
    if !v_present && cfg.rc > 0.0 {
        return Err(Error::Degenerate(format!(
            "rc = {} > 0 but the second-stage codebook has zero variance",
            cfg.rc
        )));
    }
    let lhs = [
        cfg.r1,
        cfg.r2,
        cfg.rc,
        cfg.r1 + cfg.r2,
        cfg.r1 + cfg.rc,
        cfg.r2 + cfg.rc,
        cfg.r1 + cfg.r2 + cfg.rc,
    ];
    let mut rb = ReportBuilder::new();
    for i in 0..7 {
        let name = VQ_CONSTRAINTS[i];
        if i == 2 && !v_present {
            rb = rb.push_exact(name, -cfg.rc);
        } else {
            rb = rb.push(name, b[i] - lhs[i]);
        }
    }
    let conf = ch.c12.bits() - vq_conf_requirement(src, cfg).0;
    let rep = rb.push(VQ_CONSTRAINTS[7], conf).finish(margin);
    Ok(rep.with_witness(crate::report::Witness::Vq { config: *cfg }))
}

/// Distortions of the genie-aided decoder at `cfg`.
pub fn vq_distortion(src: &SourceSpec, cfg: &VqConfig) -> DistortionPair {
    let r2 = src.rho * src.rho;
    let s = cfg.r1 + cfg.rc;
    let (fs, f2) = (fr(s), fr(cfg.r2));
    let den = 1.0 - r2 * f2 * fs;
    DistortionPair {
        d1: ex(s) * (1.0 - r2 * f2) / den,
        d2: ex(cfg.r2) * (1.0 - r2 * fs) / den,
    }
}

/// Conference rate needed by `cfg` and the per-symbol log bin size.
pub fn vq_conf_requirement(src: &SourceSpec, cfg: &VqConfig) -> (f64, f64) {
    let x = -src.rho * src.rho * ex(cfg.r1) * fr(cfg.rc);
    let bin = -0.5 * x.ln_1p() / std::f64::consts::LN_2;
    (cfg.rc - bin, bin)
}

/// Unlimited-conference form, in which Encoder 2 learns the first-stage
/// codeword and only `(R2, Rc)` remain. Slacks are named `r2`, `rc`, `r2+rc`.
pub fn vq_unlimited_region(
    src: &SourceSpec,
    ch: &ChannelSpec,
    r2: f64,
    rc: f64,
    beta: f64,
) -> Result<(FeasibilityReport, DistortionPair)> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain("beta", format!("must lie in [0, 1], got {beta}")));
    }
    for (field, v) in [("r2", r2), ("rc", rc)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(field, format!("rate must be finite and >= 0, got {v}")));
        }
    }
    let b = vq_unlimited_bounds(src, ch, r2, rc, beta);
    let rep = ReportBuilder::new()
        .push("r2", b[0] - r2)
        .push("rc", b[1] - rc)
        .push("r2+rc", b[2] - r2 - rc)
        .finish(0.0)
        .with_witness(crate::report::Witness::VqUnlimited { r2, rc, beta });
    Ok((rep, vq_unlimited_distortion(src, r2, rc)))
}

pub(crate) fn vq_unlimited_bounds(src: &SourceSpec, ch: &ChannelSpec, r2: f64, rc: f64, beta: f64) -> [f64; 3] {
    let (p1, p2, n) = (ch.p1, ch.p2, ch.n0);
    let bb = 1.0 - beta;
    let rh2 = src.rho * src.rho * fr(r2) * fr(rc);
    let rh = rh2.sqrt();
    let coh = bb * rh2 + beta;
    let delta1 = p1.sqrt() + p2.sqrt() * (coh.sqrt() - bb.sqrt() * rh);
    let delta2 = p1 + p2 + 2.0 * (coh * p1 * p2).sqrt();
    let den = n * (1.0 - rh2);
    [
        hl(bb * p2 * (1.0 - rh2) + n, den),
        hl(delta1 * delta1 * (1.0 - rh2) + n, den),
        hl(delta2 + n, den),
    ]
}

pub fn vq_unlimited_distortion(src: &SourceSpec, r2: f64, rc: f64) -> DistortionPair {
    let rr = src.rho * src.rho;
    let (f2, fc) = (fr(r2), fr(rc));
    let den = 1.0 - rr * f2 * fc;
    DistortionPair {
        d1: ex(rc) * (1.0 - rr * f2) / den,
        d2: ex(r2) * (1.0 - rr * fc) / den,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConfCapacity;
    use crate::rdlib::wz_rate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn src(rho: f64) -> SourceSpec {
        SourceSpec { sigma2: 1.0, rho }
    }

    fn ch(p1: f64, p2: f64, n0: f64, c12: ConfCapacity) -> ChannelSpec {
        ChannelSpec { p1, p2, n0, c12 }
    }

    fn cfg(r1: f64, r2: f64, rc: f64, beta1: f64, beta2: f64) -> VqConfig {
        VqConfig { r1, r2, rc, beta1, beta2 }
    }

    #[test]
    fn tilde_rho_value() {
        let c = ch(1.0, 1.0, 1.0, ConfCapacity::Unlimited);
        let (_, k) = vq_constants(&src(0.5), &c, &cfg(1.0, 1.0, 0.3, 0.2, 0.7));
        assert!((k.tilde_rho - 0.375).abs() < 1e-15);
        let (_, k) = vq_constants(&src(0.5), &c, &cfg(0.0, 3.0, 0.3, 0.2, 0.7));
        assert_eq!(k.tilde_rho, 0.0);
    }

    #[test]
    fn absent_second_stage() {
        let c = ch(2.0, 3.0, 1.0, ConfCapacity::Finite(0.0));
        let (g, k) = vq_constants(&src(0.5), &c, &cfg(1.0, 1.0, 0.0, 0.0, 0.0));
        assert_eq!(g.sigma_v2, 0.0);
        assert_eq!(g.a12, 0.0);
        assert_eq!(k.eta, 0.0);
        assert_eq!(k.bar_rho, 0.0);
        let expect = 2.0 + 2.0 * k.tilde_rho * 6f64.sqrt() + 3.0;
        assert!((k.lambda12 - expect).abs() < 1e-14);
    }

    // Values frozen from an independent scalar re-implementation of the
    // constraint set (separate script, not this code).
    #[test]
    fn double_evaluation_oracle() {
        let c = ch(1.0, 1.0, 1.0, ConfCapacity::Unlimited);
        let x = cfg(1.0, 1.0, 0.5, 0.3, 0.3);
        let (g, k) = vq_constants(&src(0.5), &c, &x);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
        assert!(close(k.bar_rho, 0.15309310892394862));
        assert!(close(k.eta, 0.9821356729306712));
        assert!(close(k.lambda2, 0.005640700636321049));
        assert!(close(k.lambda_c, -0.00013191146833854488));
        assert!(close(k.lambda12, 1.925));
        assert!(close(k.lambda1c, 1.4491963667356014));
        assert!(close(k.lambda2c, 1.9161878771933119));
        assert!(close(g.a22, 1.2287058390149959));
        let rep = vq_rate_region(&src(0.5), &c, &x).unwrap();
        let want = [
            ("r1", -0.5491661622719409),
            ("r2", -0.5432720926451953),
            ("rc", -0.0025500108005334643),
            ("r1+r2", -1.1143447575664323),
            ("r1+rc", -0.7538886772717165),
            ("r2+rc", -0.6975777746076504),
            ("r1+r2+rc", -1.348549670940816),
        ];
        for (name, v) in want {
            assert!(close(rep.slack(name).unwrap(), v), "{name}: {:?} vs {v}", rep.slack(name));
        }
        assert_eq!(rep.slack("c12"), Some(f64::INFINITY));
        assert_eq!(rep.slacks.len(), 8);
        assert!(!rep.feasible);
    }

    #[test]
    fn zero_rates_feasible_everywhere() {
        for c12 in [0.0, 0.5, 3.0] {
            let c = ch(0.3, 2.0, 1.5, ConfCapacity::Finite(c12));
            let rep = vq_rate_region(&src(0.7), &c, &cfg(0.0, 0.0, 0.0, 0.4, 0.9)).unwrap();
            assert!(rep.feasible, "{rep:?}");
        }
    }

    #[test]
    fn degenerate_rc_rejected() {
        // sigma_v^2 underflows to 0 at huge R1 while Rc > 0.
        let c = ch(1.0, 1.0, 1.0, ConfCapacity::Unlimited);
        assert!(matches!(
            vq_rate_region(&src(0.5), &c, &cfg(600.0, 1.0, 0.5, 0.3, 0.3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(vq_distortion(&src(0.5), &cfg(0.0, 0.0, 0.0, 0.0, 0.0)), DistortionPair { d1: 1.0, d2: 1.0 });
        let d = vq_distortion(&src(0.0), &cfg(0.7, 1.2, 0.4, 0.0, 0.0));
        assert!((d.d1 - 2f64.powf(-2.2)).abs() < 1e-15);
        assert!((d.d2 - 2f64.powf(-2.4)).abs() < 1e-15);
        let d = vq_distortion(&src(0.5), &cfg(1.0, 1.0, 0.5, 0.0, 0.0));
        assert!((d.d1 - 0.125 * 0.8125 / 0.8359375).abs() < 1e-15);
        assert!((d.d1 - 0.12149532710280374).abs() < 1e-15);
        assert!((d.d2 - 0.2336448598130841).abs() < 1e-15);
    }

    #[test]
    fn conf_requirement_examples() {
        let s = src(0.5);
        assert_eq!(vq_conf_requirement(&s, &cfg(1.0, 1.0, 0.0, 0.0, 0.0)).0, 0.0);
        assert_eq!(vq_conf_requirement(&src(0.0), &cfg(1.0, 1.0, 0.7, 0.0, 0.0)).0, 0.7);
        let (req, bin) = vq_conf_requirement(&s, &cfg(0.0, 1.0, 1.0, 0.0, 0.0));
        assert!((req - (1.0 + 0.5 * 0.8125f64.log2())).abs() < 1e-15);
        assert!((req - 0.8503).abs() < 1e-4);
        assert!((req - wz_rate(&s, 0.25)).abs() < 1e-14);
        assert!((bin - (1.0 - req)).abs() < 1e-15);
    }

    #[test]
    fn lapidoth_tinguely_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let rho: f64 = rng.random_range(0.0..0.99);
            let (p1, p2, n) = (rng.random_range(0.1..50.0), rng.random_range(0.1..50.0), rng.random_range(0.1..5.0));
            let (r1, r2) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
            let c = ch(p1, p2, n, ConfCapacity::Finite(0.0));
            let (b, vp) = vq_rate_bounds(&src(rho), &c, &cfg(r1, r2, 0.0, 0.0, 0.0));
            assert!(!vp);
            let rt2 = rho * rho * fr(r1) * fr(r2);
            let rt = rt2.sqrt();
            let lt1 = 0.5 * ((p1 * (1.0 - rt2) + n) / (n * (1.0 - rt2))).log2();
            let lt2 = 0.5 * ((p2 * (1.0 - rt2) + n) / (n * (1.0 - rt2))).log2();
            let lts = 0.5 * ((p1 + p2 + 2.0 * rt * (p1 * p2).sqrt() + n) / (n * (1.0 - rt2))).log2();
            assert!((b[0] - lt1).abs() < 1e-12);
            assert!((b[1] - lt2).abs() < 1e-12);
            assert!((b[3] - lts).abs() < 1e-12);
            let rep = vq_rate_region(&src(rho), &c, &cfg(r1, r2, 0.0, 0.0, 0.0)).unwrap();
            assert_eq!(rep.slack("rc"), Some(0.0));
        }
    }

    #[test]
    fn unlimited_examples() {
        let c = ch(1.0, 2.0, 1.0, ConfCapacity::Unlimited);
        let (_, d) = vq_unlimited_region(&src(0.5), &c, 1.0, 0.0, 0.4).unwrap();
        // No second stage: S1 is estimated from Encoder 2's codeword alone.
        assert!((d.d1 - (1.0 - 0.25 * 0.75)).abs() < 1e-15);
        let b = vq_unlimited_bounds(&src(0.5), &c, 1.0, 0.0, 0.4);
        let d2 = 1.0 + 2.0 + 2.0 * (0.4f64 * 2.0).sqrt();
        assert!((b[2] - 0.5 * (d2 + 1.0).log2()).abs() < 1e-14);
        let b = vq_unlimited_bounds(&src(0.0), &c, 1.0, 1.0, 0.0);
        assert!((b[0] - 0.5 * 3f64.log2()).abs() < 1e-15);
        assert!((b[1] - 0.5 * 2f64.log2()).abs() < 1e-15);
        // rho = 0.5, P = N = 1, beta = 0.5, r2 = rc = 1.
        let c = ch(1.0, 1.0, 1.0, ConfCapacity::Unlimited);
        let b = vq_unlimited_bounds(&src(0.5), &c, 1.0, 1.0, 0.5);
        let rh2: f64 = 0.25 * 0.75 * 0.75;
        let coh = 0.5 * rh2 + 0.5;
        let delta1 = 1.0 + coh.sqrt() - 0.5f64.sqrt() * rh2.sqrt();
        let delta2 = 2.0 + 2.0 * coh.sqrt();
        assert!((rh2.sqrt() - 0.375).abs() < 1e-15);
        assert!((b[1] - 0.5 * ((delta1 * delta1 * (1.0 - rh2) + 1.0) / (1.0 - rh2)).log2()).abs() < 1e-14);
        assert!((b[2] - 0.5 * ((delta2 + 1.0) / (1.0 - rh2)).log2()).abs() < 1e-14);
    }

    #[test]
    fn unlimited_form_is_the_single_stage_case() {
        // With R1 = 0 and all of Encoder 1's power on V, the general constraints
        // on (R2, Rc, R2+Rc) and both distortions coincide with the unlimited form.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let s = src(rng.random_range(0.0..0.99));
            let c = ch(rng.random_range(0.1..20.0), rng.random_range(0.1..20.0), rng.random_range(0.2..3.0), ConfCapacity::Unlimited);
            let (r2, rc, beta) = (rng.random_range(0.0..4.0), rng.random_range(0.01..4.0), rng.random_range(0.0..=1.0));
            let bu = vq_unlimited_bounds(&s, &c, r2, rc, beta);
            let x = cfg(0.0, r2, rc, 1.0, beta);
            let (b, _) = vq_rate_bounds(&s, &c, &x);
            for (i, j) in [(1, 0), (2, 1), (5, 2)] {
                assert!((b[i] - bu[j]).abs() < 1e-10 * bu[j].abs().max(1.0), "{i}: {} vs {}", b[i], bu[j]);
            }
            let (d, du) = (vq_distortion(&s, &x), vq_unlimited_distortion(&s, r2, rc));
            assert!((d.d1 - du.d1).abs() < 1e-14 && (d.d2 - du.d2).abs() < 1e-14);
        }
        // Large R1 does not reproduce it: the first-stage codeword then carries all of S1.
        let s = src(0.5);
        let c = ch(1.0, 1.0, 1.0, ConfCapacity::Unlimited);
        let bu = vq_unlimited_bounds(&s, &c, 0.8, 0.6, 0.35);
        let (b, _) = vq_rate_bounds(&s, &c, &cfg(30.0, 0.8, 0.6, 1.0, 0.35));
        assert!((b[1] - bu[0]).abs() > 1e-3);
    }

    proptest! {
        #[test]
        fn power_identities(rho in 0.0f64..1.0, r1 in 0.0f64..6.0, r2 in 0.0f64..6.0, rc in 0.0f64..6.0,
                            b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0, p1 in 0.01f64..100.0, p2 in 0.01f64..100.0,
                            s2 in 0.1f64..10.0) {
            let s = SourceSpec { sigma2: s2, rho };
            let c = ch(p1, p2, 1.0, ConfCapacity::Unlimited);
            let x = cfg(r1, r2, rc, b1, b2);
            let (g, k) = vq_constants(&s, &c, &x);
            for a in [g.a11, g.a12, g.a21, g.a22] {
                prop_assert!(a >= 0.0 && a.is_finite());
            }
            let u1 = s2 * fr(r1);
            let u2 = s2 * fr(r2);
            let p1_used = g.a11 * g.a11 * u1 + g.a12 * g.a12 * g.sigma_v2;
            let p2_used = g.a21 * g.a21 * u2 + 2.0 * g.a21 * g.a22 * k.bar_rho * u2.sqrt() * g.sigma_v2.sqrt()
                + g.a22 * g.a22 * g.sigma_v2;
            let want1 = (if u1 > 0.0 { 1.0 - b1 } else { 0.0 } + if g.sigma_v2 > 0.0 { b1 } else { 0.0 }) * p1;
            let want2 = (if u2 > 0.0 { 1.0 - b2 } else { 0.0 } + if g.sigma_v2 > 0.0 { b2 } else { 0.0 }) * p2;
            prop_assert!((p1_used - want1).abs() <= 1e-9 * p1);
            prop_assert!((p2_used - want2).abs() <= 1e-9 * p2);
            prop_assert!(k.tilde_rho <= rho + 1e-15 && k.bar_rho <= rho + 1e-15);
            prop_assert!(k.lambda12 >= (1.0 - b1) * p1 + (1.0 - b2) * p2 - 1e-12);
            prop_assert!(k.eta >= 0.0);
        }

        #[test]
        fn distortion_depends_on_first_stage_sum(rho in 0.0f64..0.99, r1 in 0.0f64..5.0, r2 in 0.0f64..5.0,
                                                   rc in 0.0f64..5.0, t in 0.0f64..1.0) {
            let s = src(rho);
            let a = vq_distortion(&s, &cfg(r1, r2, rc, 0.0, 0.0));
            let dlt = t * rc;
            let b = vq_distortion(&s, &cfg(r1 + dlt, r2, rc - dlt, 0.0, 0.0));
            prop_assert!((a.d1 - b.d1).abs() < 1e-14);
            prop_assert!((a.d2 - b.d2).abs() < 1e-14);
        }

        #[test]
        fn distortion_strictly_decreasing(rho in 0.0f64..0.99, r1 in 0.0f64..5.0, r2 in 0.0f64..5.0, rc in 0.0f64..5.0, h in 0.01f64..0.5) {
            let s = src(rho);
            let a = vq_distortion(&s, &cfg(r1, r2, rc, 0.0, 0.0));
            let b = vq_distortion(&s, &cfg(r1 + h, r2, rc, 0.0, 0.0));
            let c = vq_distortion(&s, &cfg(r1, r2 + h, rc, 0.0, 0.0));
            prop_assert!(b.d1 < a.d1);
            prop_assert!(c.d2 < a.d2);
        }

        #[test]
        fn conf_requirement_below_rc(rho in 0.0f64..1.0, r1 in 0.0f64..8.0, rc in 0.0f64..8.0) {
            let s = src(rho);
            let (req, bin) = vq_conf_requirement(&s, &cfg(r1, 0.0, rc, 0.0, 0.0));
            prop_assert!(req <= rc);
            prop_assert!(bin >= 0.0);
            if rho == 0.0 || rc == 0.0 {
                prop_assert_eq!(req, rc);
            }
        }
    }
}
