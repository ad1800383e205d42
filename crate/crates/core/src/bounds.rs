//! Outer bound on achievable distortions and the high-SNR asymptotics of the
//! coding schemes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSpec, ConfCapacity, DistortionPair, SourceSpec};
use crate::montecarlo::{normal, sample_chunked, Welford2};
use crate::rdlib::{half_log2, rd_conditional, rd_joint};
use crate::report::{FeasibilityReport, ReportBuilder, Witness};

/// Slack threshold for the outer bound.
pub const NECESSARY_TOL: f64 = 1e-12;

/// Right-hand sides of the joint and conditional constraints of the outer
/// bound at input-correlation parameter `beta`.
pub fn necessary_bounds(src: &SourceSpec, ch: &ChannelSpec, beta: f64) -> (f64, f64) {
    let r2 = src.rho * src.rho;
    let bb = 1.0 - beta;
    let coh = (r2 * bb + beta).sqrt();
    let joint = half_log2(1.0 + (ch.p1 + ch.p2 + 2.0 * coh * (ch.p1 * ch.p2).sqrt()) / ch.n0);
    let cond = half_log2(1.0 + bb * ch.p2 * (1.0 - r2) / ch.n0);
    (joint, cond)
}

/// Checks the outer bound. `beta` is chosen where the two slacks balance,
/// which maximizes the smaller one since the joint side increases and the
/// conditional side decreases in `beta`.
pub fn necessary_condition(src: &SourceSpec, ch: &ChannelSpec, target: &DistortionPair) -> Result<FeasibilityReport> {
    src.validate()?;
    ch.validate()?;
    target.validate()?;
    let rj = rd_joint(src, target);
    let rc = rd_conditional(src, target.d2);
    let slacks = |b: f64| {
        let (j, c) = necessary_bounds(src, ch, b);
        (j - rj, c - rc)
    };
    let gap = |b: f64| {
        let (a, c) = slacks(b);
        a - c
    };
    let beta = if gap(0.0) >= 0.0 {
        0.0
    } else if gap(1.0) <= 0.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Take whichever end has the larger worst-case slack.
        let m = |b: f64| {
            let (a, c) = slacks(b);
            a.min(c)
        };
        if m(lo) > m(hi) {
            lo
        } else {
            hi
        }
    };
    let (sj, sc) = slacks(beta);
    Ok(ReportBuilder::new()
        .push("joint", sj)
        .push("conditional", sc)
        .finish(-NECESSARY_TOL)
        .with_witness(Witness::Necessary { beta }))
}

/// Smallest symmetric power `P = P1 = P2` meeting the outer bound, in closed form.
pub fn necessary_min_power_symmetric(src: &SourceSpec, target: &DistortionPair, n0: f64) -> f64 {
    let rj = rd_joint(src, target);
    let rcond = rd_conditional(src, target.d2);
    let ups = src.upsilon();
    let c = if rcond == 0.0 { 0.0 } else { (2f64.powf(2.0 * rcond) - 1.0) * n0 / ups };
    let k = n0 * (2f64.powf(2.0 * rj) - 1.0) / 2.0;
    let a = ups * c;
    let h = |p: f64| p + (p * p - a * p).max(0.0).sqrt();
    if h(c) >= k {
        c
    } else {
        k * k / (2.0 * k - a)
    }
}

/// Smallest symmetric power when the encoders fully cooperate.
pub fn full_coop_min_power_symmetric(src: &SourceSpec, target: &DistortionPair, n0: f64) -> f64 {
    n0 * (2f64.powf(2.0 * rd_joint(src, target)) - 1.0) / 4.0
}

/// Sample moments of the maximally correlated linear maps
/// `phi1 = S1/sigma`, `phi2 = sqrt(1-beta) S2/sigma + (sqrt(rho^2 (1-beta) + beta) - rho sqrt(1-beta)) S1/sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxCorrEstimate {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub corr: f64,
    /// Residual variance of `phi2` after linear regression on `S1`.
    pub cond_var: f64,
    pub corr_se: f64,
    pub cond_var_se: f64,
    pub samples: usize,
}

pub fn maxcorr_linear_maps(src: &SourceSpec, beta: f64, sample_count: usize, seed: u64) -> Result<MaxCorrEstimate> {
    src.validate()?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain("beta", format!("must lie in [0, 1], got {beta}")));
    }
    if sample_count < 3 {
        return Err(Error::domain("sample_count", format!("must be >= 3, got {sample_count}")));
    }
    let rho = src.rho;
    let sigma = src.sigma2.sqrt();
    let ups = src.upsilon().sqrt();
    let bb = 1.0 - beta;
    let a2 = bb.sqrt();
    let a1 = (rho * rho * bb + beta).sqrt() - rho * a2;
    let acc = sample_chunked(
        sample_count,
        seed,
        |rng, count, acc: &mut Welford2| {
            for _ in 0..count {
                let (z1, z2) = (normal(rng), normal(rng));
                let s1 = sigma * z1;
                let s2 = sigma * (rho * z1 + ups * z2);
                acc.push(s1 / sigma, a2 * s2 / sigma + a1 * s1 / sigma);
            }
        },
        |t, p| t.merge(p),
    );
    let n = sample_count as f64;
    let corr = acc.corr();
    let cond_var = acc.cond_var_y();
    Ok(MaxCorrEstimate {
        mean1: acc.mx,
        mean2: acc.my,
        var1: acc.var_x(),
        var2: acc.var_y(),
        corr,
        cond_var,
        corr_se: (1.0 - corr * corr) / n.sqrt(),
        cond_var_se: cond_var * (2.0 / (n - 2.0).max(1.0)).sqrt(),
        samples: sample_count,
    })
}

/// Default bound on `N/(d_i P_i)` for the asymptotic formulas.
pub const REGIME_PROXY: f64 = 0.1;

/// Correlation coefficients and limiting distortion products at high SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticQuantities {
    pub varrho_inf: f64,
    pub varrho_sep1: f64,
    pub varrho_sep1_fixed: f64,
    pub varrho_vq_lower: f64,
    pub check_rho: f64,
    /// Limit of `d1 d2` with an unlimited conference link.
    pub d1d2_limit: f64,
    pub d1d2_limit_sep1_fixed: f64,
    pub d1d2_limit_vq_fixed: f64,
}

fn root(x: f64, what: &str) -> Result<f64> {
    if x < 0.0 {
        Err(Error::Regime(format!("negative radicand {x} in {what}")))
    } else {
        Ok(x.sqrt())
    }
}

/// `rho_check` at the largest second-stage rate the link supports, with
/// `R1 + Rc = log(1/d1)/2` split toward `Rc`.
pub fn check_rho(rho: f64, d1: f64, c12: ConfCapacity) -> f64 {
    let r2 = rho * rho;
    // y = 2^{2 Rc} in [1, 1/d1]; the link needs y (1 - rho^2 d1 (y - 1)) <= 2^{2C}.
    let y_max = 1.0 / d1;
    let g = |y: f64| y * (1.0 - r2 * d1 * (y - 1.0));
    let y = match c12 {
        ConfCapacity::Unlimited => y_max,
        ConfCapacity::Finite(c) => {
            let k = 2f64.powf(2.0 * c);
            if g(y_max) <= k {
                y_max
            } else if r2 == 0.0 {
                k.min(y_max)
            } else {
                let q = r2 * d1;
                let b = 1.0 + q;
                let disc = (b * b - 4.0 * q * k).max(0.0);
                // Smaller root, written to avoid cancellation.
                (2.0 * k / (b + disc.sqrt())).min(y_max)
            }
        }
    };
    (r2 * d1 * (y - 1.0)).max(0.0).sqrt().min(rho)
}

pub fn high_snr_quantities(src: &SourceSpec, ch: &ChannelSpec, target: &DistortionPair) -> Result<AsymptoticQuantities> {
    high_snr_quantities_with_proxy(src, ch, target, REGIME_PROXY)
}

pub fn high_snr_quantities_with_proxy(
    src: &SourceSpec,
    ch: &ChannelSpec,
    target: &DistortionPair,
    proxy: f64,
) -> Result<AsymptoticQuantities> {
    src.validate()?;
    ch.validate()?;
    target.validate()?;
    let n = ch.n0;
    let x1 = n / (target.d1 * ch.p1);
    let x2 = n / (target.d2 * ch.p2);
    if !(x1 <= proxy && x2 <= proxy) {
        return Err(Error::Regime(format!(
            "N/(d1 P1) = {x1:.4e}, N/(d2 P2) = {x2:.4e}; both must be <= {proxy}"
        )));
    }
    let ups = src.upsilon();
    let e = match ch.c12 {
        ConfCapacity::Unlimited => 0.0,
        ConfCapacity::Finite(c) => 2f64.powf(-c),
    };
    let varrho_inf = root(1.0 - ups * x2, "varrho_inf")?;
    let varrho_sep1_fixed = root(1.0 - ups * x1 * e * e, "varrho_sep1")? * varrho_inf;
    let varrho_vq_lower =
        src.rho * e * (x1 * x2).sqrt() + root(1.0 - x1 * e * e, "varrho_vq")? * root(1.0 - x2, "varrho_vq")?;
    let check_rho = check_rho(src.rho, target.d1, ch.c12);
    let coh = |v: f64| ch.p1 + ch.p2 + 2.0 * v * (ch.p1 * ch.p2).sqrt();
    Ok(AsymptoticQuantities {
        varrho_inf,
        varrho_sep1: varrho_inf,
        varrho_sep1_fixed,
        varrho_vq_lower: varrho_vq_lower.min(1.0),
        check_rho,
        d1d2_limit: n * ups / coh(varrho_inf),
        d1d2_limit_sep1_fixed: n * ups / coh(varrho_sep1_fixed),
        d1d2_limit_vq_fixed: n * ups * (1.0 - check_rho * check_rho) / coh(varrho_vq_lower.min(1.0)),
    })
}

/// Limiting `d1 d2` for `P1 = P2 = p` with an unlimited link.
pub fn semi_symmetric_limit(rho: f64, n0: f64, p: f64, d2: f64) -> Result<f64> {
    let ups = 1.0 - rho * rho;
    let s = root(1.0 - n0 * ups / (d2 * p), "semi-symmetric limit")?;
    Ok(n0 / (2.0 * p) * ups / (1.0 + s))
}

/// Largest `rho` for which the first-order vector-quantizer correlation beats
/// the first-order separation correlation, with `d1 = alpha d2` and symmetric powers.
pub fn compare_threshold(c_bits: f64, alpha: f64) -> f64 {
    let e = 2f64.powf(-c_bits);
    2.0 * e * alpha.sqrt() / (e * e + alpha)
}

/// First-order expansion of the separation-scheme correlation; `x = N/(d P)`.
pub fn varrho_sep1_first_order(rho: f64, c_bits: f64, alpha: f64, x: f64) -> f64 {
    let e2 = 2f64.powf(-2.0 * c_bits);
    1.0 - 0.5 * x * (e2 / alpha + 1.0) * (1.0 - rho * rho)
}

/// First-order expansion of the vector-quantizer correlation lower bound; `x = N/(d P)`.
pub fn varrho_vq_first_order(rho: f64, c_bits: f64, alpha: f64, x: f64) -> f64 {
    let e = 2f64.powf(-c_bits);
    rho * e / alpha.sqrt() * x + 1.0 - 0.5 * x * (e * e / alpha + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqscheme::{vq_distortion, vq_rate_region, VqConfig};
    use proptest::prelude::*;

    fn sym(p: f64, c12: ConfCapacity) -> ChannelSpec {
        ChannelSpec { p1: p, p2: p, n0: 1.0, c12 }
    }

    fn src(rho: f64) -> SourceSpec {
        SourceSpec { sigma2: 1.0, rho }
    }

    #[test]
    fn bound_collapses() {
        let s = src(0.5);
        let (j, _) = necessary_bounds(&s, &sym(2.0, ConfCapacity::Unlimited), 1.0);
        assert!((j - 0.5 * 9f64.log2()).abs() < 1e-14);
        let (j, c) = necessary_bounds(&src(0.0), &ChannelSpec { p1: 1.0, p2: 3.0, n0: 1.0, c12: ConfCapacity::Unlimited }, 0.25);
        assert!((j - 0.5 * (1.0 + (4.0 + 2.0 * 0.5 * 3f64.sqrt())).log2()).abs() < 1e-14);
        assert!((c - 0.5 * (1.0 + 0.75 * 3.0f64).log2()).abs() < 1e-14);
    }

    #[test]
    fn unit_power_example_is_infeasible() {
        let s = src(0.5);
        let d = DistortionPair { d1: 0.2, d2: 0.2 };
        assert!((rd_joint(&s, &d) - 2.1144).abs() < 1e-4);
        assert!((rd_conditional(&s, 0.2) - 0.9534).abs() < 1e-4);
        let r = necessary_condition(&s, &sym(1.0, ConfCapacity::Unlimited), &d).unwrap();
        assert!(!r.feasible);
        assert!(r.slack("joint").unwrap() < 0.0);
        assert!((necessary_bounds(&s, &sym(1.0, ConfCapacity::Unlimited), 1.0).0 - 0.5 * 5f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_power_matches_predicate() {
        for &(rho, d1, d2) in &[(0.5, 0.02, 0.2), (0.5, 0.2, 0.2), (0.0, 0.3, 0.1), (0.9, 0.05, 0.5), (0.5, 0.2, 1.0)] {
            let s = src(rho);
            let d = DistortionPair { d1, d2 };
            let p = necessary_min_power_symmetric(&s, &d, 1.0);
            let at = |q: f64| necessary_condition(&s, &sym(q, ConfCapacity::Unlimited), &d).unwrap().feasible;
            if p > 0.0 {
                assert!(at(p * (1.0 + 1e-9)), "{rho} {d1} {d2} {p}");
                assert!(!at(p * (1.0 - 1e-6)), "{rho} {d1} {d2} {p}");
            }
            assert!(full_coop_min_power_symmetric(&s, &d, 1.0) <= p + 1e-12);
        }
        let s = src(0.5);
        let p = full_coop_min_power_symmetric(&s, &DistortionPair { d1: 0.2, d2: 0.2 }, 1.0);
        assert!((p - 4.4375).abs() < 2e-3, "{p}");
        assert_eq!(necessary_min_power_symmetric(&s, &DistortionPair { d1: 1.0, d2: 1.0 }, 1.0), 0.0);
    }

    #[test]
    fn maxcorr_edges() {
        let e = maxcorr_linear_maps(&src(0.3), 1.0, 10_000, 1).unwrap();
        assert!((e.corr - 1.0).abs() < 1e-12 && e.cond_var.abs() < 1e-12);
        let e = maxcorr_linear_maps(&src(0.0), 0.0, 200_000, 2).unwrap();
        assert!(e.corr.abs() < 3.0 / (200_000f64).sqrt());
        assert!((e.cond_var - 1.0).abs() < 3.0 * e.cond_var_se);
        let e = maxcorr_linear_maps(&src(0.5), 0.5, 1_000_000, 3).unwrap();
        assert!((e.corr - 0.625f64.sqrt()).abs() < 3.0 * e.corr_se, "{e:?}");
        assert!((0.625f64.sqrt() - 0.7906).abs() < 1e-4);
        assert!(maxcorr_linear_maps(&src(0.5), 1.5, 100, 3).is_err());
    }

    #[test]
    fn unlimited_link_schemes_coincide() {
        let s = src(0.5);
        let q = high_snr_quantities(&s, &sym(1e5, ConfCapacity::Unlimited), &DistortionPair { d1: 0.05, d2: 0.2 }).unwrap();
        assert_eq!(q.varrho_sep1, q.varrho_inf);
        assert_eq!(q.varrho_sep1_fixed, q.varrho_inf);
        assert!((q.varrho_inf - (1.0 - 0.75 / (0.2 * 1e5f64)).sqrt()).abs() < 1e-15);
        let lim = semi_symmetric_limit(0.5, 1.0, 1e5, 0.2).unwrap();
        assert!((q.d1d2_limit / lim - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_is_enforced() {
        let s = src(0.5);
        let d = DistortionPair { d1: 0.05, d2: 0.2 };
        assert!(matches!(high_snr_quantities(&s, &sym(10.0, ConfCapacity::Finite(1.0)), &d), Err(Error::Regime(_))));
        assert!(high_snr_quantities_with_proxy(&s, &sym(30.0, ConfCapacity::Finite(1.0)), &d, 0.9).is_ok());
    }

    #[test]
    fn semi_symmetric_large_power() {
        for &p in &[1e6, 1e8, 1e10] {
            let v = semi_symmetric_limit(0.5, 1.0, p, 0.2).unwrap();
            assert!((v * 4.0 * p / 0.75 - 1.0).abs() < 10.0 / (0.2 * p));
        }
    }

    #[test]
    fn threshold_values() {
        assert!((compare_threshold(1.0, 0.25) - 1.0).abs() < 1e-15);
        for c in [0.0, 0.5, 2.0, 3.3] {
            assert!((compare_threshold(c, 2f64.powf(-2.0 * c)) - 1.0).abs() < 1e-12);
        }
        assert!(compare_threshold(1.0, 1.0) < 1.0);
    }

    #[test]
    fn check_rho_range() {
        assert_eq!(check_rho(0.5, 0.1, ConfCapacity::Finite(0.0)), 0.0);
        let u = check_rho(0.5, 0.1, ConfCapacity::Unlimited);
        assert!((u - 0.5 * 0.9f64.sqrt()).abs() < 1e-15);
        let f = check_rho(0.5, 0.1, ConfCapacity::Finite(0.5));
        assert!(f > 0.0 && f < u);
        // The chosen rate sits on the link constraint.
        let y = 1.0 + f * f / (0.25 * 0.1);
        assert!((0.5 * y.log2() + 0.5 * (1.0 - f * f).log2() - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bounds_monotone_in_beta(rho in 0.0f64..0.99, p1 in 0.01f64..100.0, p2 in 0.01f64..100.0) {
            let s = src(rho);
            let ch = ChannelSpec { p1, p2, n0: 1.0, c12: ConfCapacity::Unlimited };
            let mut prev = necessary_bounds(&s, &ch, 0.0);
            for k in 1..=100 {
                let cur = necessary_bounds(&s, &ch, k as f64 / 100.0);
                prop_assert!(cur.0 >= prev.0 && cur.1 <= prev.1);
                prev = cur;
            }
        }

        #[test]
        fn achievable_passes_outer_bound(rho in 0.0f64..0.95, p1 in 0.05f64..20.0, p2 in 0.05f64..20.0,
                                         r1 in 0.0f64..2.0, r2 in 0.0f64..2.0, rc in 0.0f64..2.0,
                                         b1 in 0.0f64..1.0, b2 in 0.0f64..1.0) {
            let s = src(rho);
            let ch = ChannelSpec { p1, p2, n0: 1.0, c12: ConfCapacity::Unlimited };
            let cfg = VqConfig { r1, r2, rc, beta1: b1, beta2: b2 };
            if let Ok(rep) = vq_rate_region(&s, &ch, &cfg) {
                if rep.feasible {
                    let d = vq_distortion(&s, &cfg);
                    prop_assert!(necessary_condition(&s, &ch, &d).unwrap().feasible);
                }
            }
        }

        #[test]
        fn correlations_in_unit_interval(rho in 0.0f64..0.99, c in 0.0f64..4.0, d1 in 0.01f64..1.0, d2 in 0.01f64..1.0) {
            let s = src(rho);
            let ch = sym(1e4, ConfCapacity::Finite(c));
            let q = high_snr_quantities(&s, &ch, &DistortionPair { d1, d2 }).unwrap();
            for v in [q.varrho_inf, q.varrho_sep1_fixed, q.varrho_vq_lower] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(q.check_rho >= 0.0 && q.check_rho <= rho);
        }
    }
}
