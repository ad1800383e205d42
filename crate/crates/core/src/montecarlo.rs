//! Stochastic oracles: a jointly Gaussian surrogate of the genie-aided decoder,
//! and polar-cap geometry on the unit sphere.
//!
//! Sampling is split into fixed-size chunks. Chunk `k` draws from ChaCha8
//! seeded with `seed` on stream `k`, chunks run on the rayon pool, and their
//! accumulators are merged in chunk order, so results do not depend on the
//! thread count.

use nalgebra::{DMatrix, DVector, SMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::model::SourceSpec;
use crate::rdlib::{ex, fr};
use crate::vqscheme::VqConfig;

/// Samples per chunk.
pub const CHUNK: usize = 1 << 14;

/// Single-pass mean and variance accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Single-pass first and second moments of a pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford2 {
    pub n: u64,
    pub mx: f64,
    pub my: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl Welford2 {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let (dx, dy) = (x - self.mx, y - self.my);
        self.mx += dx / n;
        self.my += dy / n;
        self.sxx += dx * (x - self.mx);
        self.syy += dy * (y - self.my);
        self.sxy += dx * (y - self.my);
    }

    pub fn merge(&mut self, o: &Welford2) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.n as f64, o.n as f64);
        let n = na + nb;
        let (dx, dy) = (o.mx - self.mx, o.my - self.my);
        self.sxx += o.sxx + dx * dx * na * nb / n;
        self.syy += o.syy + dy * dy * na * nb / n;
        self.sxy += o.sxy + dx * dy * na * nb / n;
        self.mx += dx * nb / n;
        self.my += dy * nb / n;
        self.n += o.n;
    }

    pub fn var_x(&self) -> f64 {
        self.sxx / (self.n - 1) as f64
    }

    pub fn var_y(&self) -> f64 {
        self.syy / (self.n - 1) as f64
    }

    pub fn corr(&self) -> f64 {
        let d = (self.sxx * self.syy).sqrt();
        if d == 0.0 {
            0.0
        } else {
            self.sxy / d
        }
    }

    /// Residual variance of `y` after linear regression on `x`.
    pub fn cond_var_y(&self) -> f64 {
        let r = if self.sxx == 0.0 { self.syy } else { self.syy - self.sxy * self.sxy / self.sxx };
        r.max(0.0) / (self.n - 1) as f64
    }
}

/// Runs `body(rng, count, acc)` over `n` samples in fixed chunks and merges
/// the chunk accumulators in chunk order.
pub fn sample_chunked<A, F, M>(n: usize, seed: u64, body: F, merge: M) -> A
where
    A: Default + Send,
    F: Fn(&mut ChaCha8Rng, usize, &mut A) + Sync,
    M: Fn(&mut A, &A),
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = CHUNK.min(n - k * CHUNK);
            let mut acc = A::default();
            body(&mut rng, count, &mut acc);
            acc
        })
        .collect();
    let mut total = A::default();
    for p in &parts {
        merge(&mut total, p);
    }
    total
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Jointly Gaussian stand-in for `(S1, S2, U1, V, U2)`.
///
/// `U1 = nu1 S1 + N1`, `V = nu2 (S1 - U1) + Nv`, `U2 = nu3 S2 + N2` with
/// independent test-channel noises.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub covariance: SMatrix<f64, 5, 5>,
    /// Rows express each variable in five independent unit normals.
    pub loading: SMatrix<f64, 5, 5>,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
}

/// Variable order in [`SurrogateModel`].
pub const S1: usize = 0;
pub const S2: usize = 1;
pub const U1: usize = 2;
pub const V: usize = 3;
pub const U2: usize = 4;

pub fn build_surrogate(src: &SourceSpec, cfg: &VqConfig) -> SurrogateModel {
    let s = src.sigma2.sqrt();
    let rho = src.rho;
    let ups = src.upsilon().sqrt();
    let (f1, f2, fc) = (fr(cfg.r1), fr(cfg.r2), fr(cfg.rc));
    let n1 = s * (f1 * (1.0 - f1)).sqrt();
    let nv = s * (ex(cfg.r1) * fc * (1.0 - fc)).sqrt();
    let n2 = s * (f2 * (1.0 - f2)).sqrt();
    #[rustfmt::skip]
    let loading = SMatrix::<f64, 5, 5>::from_row_slice(&[
        s,                       0.0,          0.0,      0.0, 0.0,
        rho * s,                 ups * s,      0.0,      0.0, 0.0,
        f1 * s,                  0.0,          n1,       0.0, 0.0,
        fc * (1.0 - f1) * s,     0.0,          -fc * n1, nv,  0.0,
        f2 * rho * s,            f2 * ups * s, 0.0,      0.0, n2,
    ]);
    SurrogateModel { covariance: loading * loading.transpose(), loading, nu1: f1, nu2: fc, nu3: f2 }
}

/// Linear MMSE coefficients: `S1_hat = g11 U1 + g12 U2 + g13 V`,
/// `S2_hat = g21 U1 + g22 U2 + g23 V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaCoeffs {
    pub g11: f64,
    pub g12: f64,
    pub g13: f64,
    pub g21: f64,
    pub g22: f64,
    pub g23: f64,
}

pub fn mmse_gamma(src: &SourceSpec, cfg: &VqConfig) -> GammaCoeffs {
    let r2 = src.rho * src.rho;
    let s = cfg.r1 + cfg.rc;
    let (fs, f2) = (fr(s), fr(cfg.r2));
    let den = 1.0 - r2 * f2 * fs;
    let g11 = (1.0 - r2 * f2) / den;
    let g21 = src.rho * ex(cfg.r2) / den;
    let v_present = cfg.rc > 0.0;
    GammaCoeffs {
        g11,
        g12: src.rho * ex(s) / den,
        g13: if v_present { g11 } else { 0.0 },
        g21,
        g22: (1.0 - r2 * fs) / den,
        g23: if v_present { g21 } else { 0.0 },
    }
}

/// Solves the normal equations on the surrogate covariance. Zero-variance
/// observations are dropped (their coefficient is reported as 0).
pub fn mmse_gamma_oracle(model: &SurrogateModel) -> Result<GammaCoeffs> {
    let c = &model.covariance;
    let obs: Vec<usize> = [U1, V, U2].into_iter().filter(|&i| c[(i, i)] > 0.0).collect();
    let mut out = [[0.0; 3]; 2];
    if !obs.is_empty() {
        let g = DMatrix::from_fn(obs.len(), obs.len(), |i, j| c[(obs[i], obs[j])]);
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Singular(format!("observation Gram matrix over {obs:?}")))?;
        for (row, target) in [S1, S2].into_iter().enumerate() {
            let rhs = DVector::from_fn(obs.len(), |i, _| c[(target, obs[i])]);
            let sol = chol.solve(&rhs);
            for (k, &o) in obs.iter().enumerate() {
                let slot = match o {
                    U1 => 0,
                    U2 => 1,
                    _ => 2,
                };
                out[row][slot] = sol[k];
            }
        }
    }
    Ok(GammaCoeffs {
        g11: out[0][0],
        g12: out[0][1],
        g13: out[0][2],
        g21: out[1][0],
        g22: out[1][1],
        g23: out[1][2],
    })
}

/// Empirical normalized distortions with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenieEstimate {
    pub d1: f64,
    pub d1_se: f64,
    pub d2: f64,
    pub d2_se: f64,
}

#[derive(Default)]
struct Pair(Welford, Welford);

/// Samples the surrogate and applies the closed-form estimators.
pub fn genie_distortion_mc(src: &SourceSpec, cfg: &VqConfig, sample_count: usize, seed: u64) -> Result<GenieEstimate> {
    if sample_count < 1000 {
        return Err(Error::domain("sample_count", format!("must be >= 1000, got {sample_count}")));
    }
    cfg.validate()?;
    let m = build_surrogate(src, cfg);
    let g = mmse_gamma(src, cfg);
    let a = m.loading;
    let s2 = src.sigma2;
    let acc = sample_chunked(
        sample_count,
        seed,
        |rng, count, acc: &mut Pair| {
            for _ in 0..count {
                let z = nalgebra::Vector5::from_fn(|_, _| normal(rng));
                let x = a * z;
                let e1 = x[S1] - (g.g11 * x[U1] + g.g12 * x[U2] + g.g13 * x[V]);
                let e2 = x[S2] - (g.g21 * x[U1] + g.g22 * x[U2] + g.g23 * x[V]);
                acc.0.push(e1 * e1 / s2);
                acc.1.push(e2 * e2 / s2);
            }
        },
        |t, p| {
            t.0.merge(&p.0);
            t.1.merge(&p.1);
        },
    );
    Ok(GenieEstimate { d1: acc.0.mean, d1_se: acc.0.se(), d2: acc.1.mean, d2_se: acc.1.se() })
}

/// Fraction of the unit sphere in `R^n` within angle `phi` of a pole.
pub fn cap_ratio_exact(n: usize, phi: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("n", format!("dimension must be >= 2, got {n}")));
    }
    if !(phi > 0.0 && phi <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain("phi", format!("must lie in (0, pi/2], got {phi}")));
    }
    let s = phi.sin();
    Ok(0.5 * beta_reg((n as f64 - 1.0) / 2.0, 0.5, (s * s).min(1.0)))
}

/// Lower and upper bounds on [`cap_ratio_exact`]. The lower bound is the upper
/// bound times `1 - tan^2(phi)/n`, which may be negative.
pub fn cap_ratio_bounds(n: usize, phi: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::domain("n", format!("dimension must be >= 2, got {n}")));
    }
    if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain("phi", format!("bounds need phi in (0, pi/2), got {phi}")));
    }
    let nf = n as f64;
    // Gamma(n/2 + 1) / Gamma((n + 1)/2) is the ratio at x = (n + 1)/2.
    let g = gamma_ratio_exact((nf + 1.0) / 2.0)?;
    let upper = g * phi.sin().powi(n as i32 - 1) / (nf * std::f64::consts::PI.sqrt() * phi.cos());
    let t = phi.tan();
    Ok((upper * (1.0 - t * t / nf), upper))
}

const SERIES: [f64; 5] = [1.0, -1.0 / 8.0, 1.0 / 128.0, 5.0 / 1024.0, -21.0 / 32768.0];

/// Truncated asymptotic series for `Gamma(x + 1/2) / Gamma(x)` with `terms` in 1..=5.
pub fn gamma_ratio_series(x: f64, terms: usize) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("x", format!("must be > 0, got {x}")));
    }
    if !(1..=5).contains(&terms) {
        return Err(Error::domain("terms", format!("must lie in 1..=5, got {terms}")));
    }
    let mut sum = 0.0;
    let mut p = 1.0;
    for c in SERIES.iter().take(terms) {
        sum += c * p;
        p /= x;
    }
    Ok(x.sqrt() * sum)
}

/// `Gamma(x + 1/2) / Gamma(x)` to near machine precision.
///
/// Small `x` is shifted up with `r(x) = r(x + 1) x / (x + 1/2)`; for `x >= 20`
/// the log-gamma difference is taken from Stirling's series written so that
/// the large terms cancel analytically.
pub fn gamma_ratio_exact(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain("x", format!("must be finite and > 0, got {x}")));
    }
    let mut y = x;
    let mut scale = 1.0;
    while y < 20.0 {
        scale *= y / (y + 0.5);
        y += 1.0;
    }
    const B: [f64; 5] = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0];
    let z = y + 0.5;
    let mut corr = 0.0;
    for (k, b) in B.iter().enumerate() {
        let p = (2 * k + 1) as i32;
        corr += b * (z.powi(-p) - y.powi(-p));
    }
    let d = 0.5 * y.ln() + y * (0.5 / y).ln_1p() - 0.5 + corr;
    Ok(scale * d.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use statrs::function::gamma::ln_gamma;

    fn src(rho: f64) -> SourceSpec {
        SourceSpec { sigma2: 1.0, rho }
    }

    fn cfg(r1: f64, r2: f64, rc: f64) -> VqConfig {
        VqConfig { r1, r2, rc, beta1: 0.0, beta2: 0.0 }
    }

    #[test]
    fn surrogate_structure() {
        let m = build_surrogate(&src(0.5), &cfg(1.0, 1.0, 0.0));
        for j in 0..5 {
            assert_eq!(m.covariance[(V, j)], 0.0);
        }
        let m = build_surrogate(&src(0.0), &cfg(1.0, 1.3, 0.7));
        for i in [S1, U1, V] {
            for j in [S2, U2] {
                assert_eq!(m.covariance[(i, j)], 0.0);
            }
        }
        let m = build_surrogate(&src(0.5), &cfg(1.0, 1.0, 0.5));
        let c = m.covariance;
        let corr = c[(V, U2)] / (c[(V, V)] * c[(U2, U2)]).sqrt();
        assert!((corr - 0.5 * (0.25f64 * 0.5 * 0.75).sqrt()).abs() < 1e-15);
        assert!((corr - 0.15309).abs() < 1e-5);
        assert!(m.covariance.cholesky().is_some());
    }

    #[test]
    fn gamma_independent_source() {
        let g = mmse_gamma(&src(0.0), &cfg(0.8, 1.1, 0.4));
        assert_eq!((g.g11, g.g13, g.g22), (1.0, 1.0, 1.0));
        assert_eq!((g.g12, g.g21, g.g23), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gamma_oracle_without_second_stage() {
        let m = build_surrogate(&src(0.6), &cfg(0.8, 1.1, 0.0));
        let o = mmse_gamma_oracle(&m).unwrap();
        let g = mmse_gamma(&src(0.6), &cfg(0.8, 1.1, 0.0));
        assert_eq!(o.g13, 0.0);
        assert_eq!(g.g13, 0.0);
        assert!((o.g11 - g.g11).abs() < 1e-12 && (o.g22 - g.g22).abs() < 1e-12);
    }

    #[test]
    fn gamma_oracle_rejects_singular() {
        // rho = 1 with U2 an exact copy of U1.
        let m = build_surrogate(&src(1.0), &cfg(60.0, 60.0, 0.0));
        assert!(matches!(mmse_gamma_oracle(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn genie_trivial_and_independent() {
        let e = genie_distortion_mc(&src(0.5), &cfg(0.0, 0.0, 0.0), 20_000, 1).unwrap();
        assert!((e.d1 - 1.0).abs() < 3.0 * e.d1_se);
        let e = genie_distortion_mc(&src(0.0), &cfg(1.0, 1.0, 1.0), 200_000, 2).unwrap();
        assert!((e.d1 - 0.0625).abs() < 3.0 * e.d1_se, "{e:?}");
        assert!((e.d2 - 0.25).abs() < 3.0 * e.d2_se, "{e:?}");
        assert!(genie_distortion_mc(&src(0.0), &cfg(1.0, 1.0, 1.0), 999, 2).is_err());
    }

    #[test]
    fn sampling_is_thread_independent() {
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| genie_distortion_mc(&src(0.5), &cfg(1.0, 1.0, 0.5), 100_000, 42).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn angles_match_constants() {
        // Empirical cosines between 64-dimensional codeword draws.
        let s = src(0.5);
        let c = cfg(1.0, 1.0, 0.5);
        let m = build_surrogate(&s, &c);
        let (_, k) = crate::vqscheme::vq_constants(&s, &crate::model::ChannelSpec { p1: 1.0, p2: 1.0, n0: 1.0, c12: crate::model::ConfCapacity::Unlimited }, &c);
        let a = m.loading;
        #[derive(Default)]
        struct Acc([Welford; 3]);
        let acc = sample_chunked(
            20_000,
            3,
            |rng, count, acc: &mut Acc| {
                for _ in 0..count {
                    let mut dots = [0.0; 6];
                    for _ in 0..64 {
                        let z = nalgebra::Vector5::from_fn(|_, _| normal(rng));
                        let x = a * z;
                        dots[0] += x[U1] * x[U2];
                        dots[1] += x[V] * x[U2];
                        dots[2] += x[V] * x[U1];
                        dots[3] += x[U1] * x[U1];
                        dots[4] += x[V] * x[V];
                        dots[5] += x[U2] * x[U2];
                    }
                    acc.0[0].push(dots[0] / (dots[3] * dots[5]).sqrt());
                    acc.0[1].push(dots[1] / (dots[4] * dots[5]).sqrt());
                    acc.0[2].push(dots[2] / (dots[4] * dots[3]).sqrt());
                }
            },
            |t, p| {
                for i in 0..3 {
                    t.0[i].merge(&p.0[i]);
                }
            },
        );
        // The sample cosine is biased by O(1/dim); compare with a tolerance
        // that covers both the bias and three standard errors.
        for (w, want) in acc.0.iter().zip([k.tilde_rho, k.bar_rho, 0.0]) {
            let bias = want * (1.0 - want * want) / (2.0 * 64.0);
            assert!((w.mean - want).abs() < 3.0 * w.se() + bias.abs(), "{} vs {want} (se {})", w.mean, w.se());
        }
    }

    #[test]
    fn cap_closed_forms() {
        use std::f64::consts::PI;
        assert!((cap_ratio_exact(2, PI / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((cap_ratio_exact(3, PI / 3.0).unwrap() - 0.25).abs() < 1e-12);
        for k in 1..15 {
            let phi = 0.1 * k as f64;
            assert!((cap_ratio_exact(2, phi).unwrap() - phi / PI).abs() < 1e-12);
            assert!((cap_ratio_exact(3, phi).unwrap() - (1.0 - phi.cos()) / 2.0).abs() < 1e-12);
        }
        assert!(cap_ratio_bounds(5, PI / 2.0).is_err());
        assert!((cap_ratio_exact(7, PI / 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cap_fraction_of_uniform_samples() {
        let (n, phi) = (6usize, 0.9f64);
        let cos_phi = phi.cos();
        let hits = sample_chunked(
            200_000,
            5,
            |rng, count, acc: &mut Welford| {
                for _ in 0..count {
                    let v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    acc.push(if v[0] / norm >= cos_phi { 1.0 } else { 0.0 });
                }
            },
            |t, p| t.merge(p),
        );
        let p = cap_ratio_exact(n, phi).unwrap();
        let se = (p * (1.0 - p) / hits.n as f64).sqrt();
        assert!((hits.mean - p).abs() < 3.0 * se, "{} vs {p}", hits.mean);
    }

    #[test]
    fn gamma_ratio_values() {
        let r = gamma_ratio_exact(0.5).unwrap();
        assert!((r - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        for &x in &[0.7, 1.0, 3.3, 12.0, 19.9, 20.0, 57.5, 300.0] {
            let lg = (ln_gamma(x + 0.5) - ln_gamma(x)).exp();
            assert!((gamma_ratio_exact(x).unwrap() / lg - 1.0).abs() < 1e-12, "x={x}");
        }
        let x = 1e4;
        let s = gamma_ratio_series(x, 3).unwrap();
        assert!((s / gamma_ratio_exact(x).unwrap() - 1.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for &x in &[10.0, 100.0, 1e3, 1e4, 1e6] {
            let dev = (gamma_ratio_exact(x).unwrap() / x.sqrt() - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
        }
        assert!(gamma_ratio_series(1.0, 0).is_err());
        assert!(gamma_ratio_series(-1.0, 2).is_err());
    }

    #[test]
    fn welford_merge_matches_serial() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Welford::default(), Welford::default());
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-14 && (a.m2 - all.m2).abs() < 1e-10);
    }
}
