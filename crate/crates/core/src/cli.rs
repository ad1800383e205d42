//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain or usage error, 2 infeasible or unbounded,
//! 3 validation failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{high_snr_quantities_with_proxy, maxcorr_linear_maps, necessary_condition, REGIME_PROXY};
use crate::capacity::{mac_conf_fixed_contains, mac_conf_unlimited_contains, mac_plain_contains, MacPowerSplit};
use crate::error::{Error, Result};
use crate::model::{ChannelSpec, ConfCapacity, DistortionPair, RatePoint, SourceSpec};
use crate::montecarlo::{build_surrogate, cap_ratio_bounds, cap_ratio_exact, genie_distortion_mc, gamma_ratio_exact, gamma_ratio_series, mmse_gamma, mmse_gamma_oracle};
use crate::rdlib::{ex, fr, kaspi_region_point, rd_conditional, rd_joint, rd_region_of, wagner_contains, wz_rate, AuxVariance, KaspiParams};
use crate::report::FeasibilityReport;
use crate::search::{
    min_conf_capacity, min_power_symmetric, trace_curve, vq_feasible, CurveKind, Scheme, SchemeColumn, TraceParams,
    TraceTable, DEFAULT_TOL,
};
use crate::separation::{sep1_feasible, sep2_feasible};
use crate::vqscheme::{vq_conf_requirement, vq_distortion, vq_rate_bounds, vq_rate_region, vq_unlimited_region, VqConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "gmac", version, about = "Gaussian source over a Gaussian MAC with a conference link")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one region or feasibility check.
    Region {
        /// vq, vq-unlimited, vq-search, sep1, sep2, wagner, kaspi, mac, mac-conf, necessary, rd
        what: String,
        #[command(flatten)]
        p: Params,
        #[command(flatten)]
        o: Output,
    },
    /// Minimal symmetric power for a target distortion pair.
    Minpower {
        #[command(flatten)]
        p: Params,
        #[command(flatten)]
        o: Output,
    },
    /// Minimal conference capacity for a target distortion pair.
    Minconf {
        #[command(flatten)]
        p: Params,
        #[command(flatten)]
        o: Output,
    },
    /// High-SNR correlation coefficients and limiting distortion products.
    Asymptote {
        #[command(flatten)]
        p: Params,
        #[command(flatten)]
        o: Output,
    },
    /// Run the Monte-Carlo and oracle checks.
    Validate {
        #[command(flatten)]
        p: Params,
        #[command(flatten)]
        o: Output,
    },
    /// Trace a curve over a grid and write CSV.
    Trace {
        #[command(flatten)]
        p: Params,
        #[command(flatten)]
        o: Output,
    },
}

#[derive(Args, Debug, Default)]
struct Output {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit JSON.
    #[arg(long)]
    json: bool,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Every experiment parameter; the JSON config file has the same keys.
#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    /// Symmetric power, used where p1/p2 are absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Conference capacity in bits, or `inf`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c12: Option<ConfCapacity>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    /// `d1 = alpha * d2` when d1 is absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rc: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Test-channel variances of the conferencing source code (number or `inf`).
    #[arg(long, value_parser = parse_aux)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sw2: Option<AuxVariance>,
    #[arg(long, value_parser = parse_aux)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub su2: Option<AuxVariance>,
    #[arg(long, value_parser = parse_aux)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sv2: Option<AuxVariance>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// Comma-separated scheme columns, e.g. `vq-unlimited,vq-none,sep2`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<String>,
    /// Curve kind: pmin-vs-alpha, c12-vs-alpha, d1d2-vs-snr.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Grid `lo:hi:step` or a comma-separated list.
    #[arg(long, alias = "alphas", alias = "snrs")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn parse_aux(s: &str) -> std::result::Result<AuxVariance, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "unlimited" => Ok(AuxVariance::Unlimited),
        t => t.parse::<f64>().map(AuxVariance::Finite).map_err(|e| format!("bad variance `{s}`: {e}")),
    }
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Params {
    /// Values in `top` win over values in `self`.
    pub fn overlay(mut self, top: &Params) -> Params {
        overlay!(self, top, rho, sigma2, p, p1, p2, noise, c12, d1, d2, alpha, r1, r2, rc, beta1, beta2, beta,
                 sw2, su2, sv2, scheme, schemes, kind, grid, tol, proxy, seed, samples);
        self
    }

    pub fn from_json(text: &str) -> Result<Params> {
        serde_json::from_str(text).map_err(|e| Error::domain("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialize")
    }

    fn source(&self) -> Result<SourceSpec> {
        SourceSpec::new(self.sigma2.unwrap_or(1.0), need(self.rho, "rho")?)
    }

    fn noise(&self) -> f64 {
        self.noise.unwrap_or(1.0)
    }

    fn c12(&self) -> ConfCapacity {
        self.c12.unwrap_or(ConfCapacity::Unlimited)
    }

    fn powers(&self) -> Result<(f64, f64)> {
        let p1 = self.p1.or(self.p).ok_or_else(|| Error::domain("p1", "required (or --p)"))?;
        let p2 = self.p2.or(self.p).ok_or_else(|| Error::domain("p2", "required (or --p)"))?;
        Ok((p1, p2))
    }

    fn channel(&self) -> Result<ChannelSpec> {
        let (p1, p2) = self.powers()?;
        ChannelSpec::new(p1, p2, self.noise(), self.c12())
    }

    fn target(&self) -> Result<DistortionPair> {
        let d2 = need(self.d2, "d2")?;
        let d1 = match (self.d1, self.alpha) {
            (Some(d1), _) => d1,
            (None, Some(a)) => a * d2,
            (None, None) => return Err(Error::domain("d1", "required (or --alpha)")),
        };
        DistortionPair::new(d1, d2)
    }

    fn vq_config(&self) -> Result<VqConfig> {
        VqConfig::new(
            self.r1.unwrap_or(0.0),
            self.r2.unwrap_or(0.0),
            self.rc.unwrap_or(0.0),
            self.beta1.unwrap_or(0.0),
            self.beta2.unwrap_or(0.0),
        )
    }

    fn rates(&self) -> Result<RatePoint> {
        RatePoint::new(self.r1.unwrap_or(0.0), self.r2.unwrap_or(0.0))
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    fn scheme(&self) -> Result<Scheme> {
        need(self.scheme.as_deref(), "scheme")?.parse()
    }
}

fn need<T>(v: Option<T>, field: &'static str) -> Result<T> {
    v.ok_or_else(|| Error::domain(field, "required"))
}

/// Parses `lo:hi:step` (inclusive of `hi` up to half a step) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::domain("grid", m);
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(format!("`{t}`: {e}")));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("expected lo:hi:step, got `{s}`")));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(bad(format!("need step > 0 and hi >= lo, got `{s}`")));
        }
        let n = ((hi - lo) / step + 0.5).floor() as usize;
        if n > 1_000_000 {
            return Err(bad("more than a million points".into()));
        }
        Ok((0..=n).map(|k| lo + k as f64 * step).collect())
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
    }
}

/// Formats with 12 significant digits, independent of locale.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let e = v.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

/// CSV text of a traced curve with `#` metadata lines.
pub fn trace_csv(tab: &TraceTable, params: &Params) -> String {
    let mut s = String::new();
    s.push_str(&format!("# gmac {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# kind={}\n", tab.kind));
    let cfg = serde_json::to_value(params).expect("parameters serialize");
    if let serde_json::Value::Object(m) = cfg {
        for (k, v) in m.into_iter().filter(|(k, _)| k != "kind") {
            let v = match v {
                serde_json::Value::String(t) => t,
                other => other.to_string(),
            };
            s.push_str(&format!("# {k}={v}\n"));
        }
    }
    s.push_str(&tab.x_name);
    for c in &tab.columns {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for row in &tab.rows {
        s.push_str(&fmt_num(row.x));
        for c in &row.cells {
            s.push(',');
            match c {
                Ok(v) => s.push_str(&fmt_num(*v)),
                Err(m) => s.push_str(m),
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct RegionOutput {
    #[serde(flatten)]
    report: FeasibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    distortion: Option<DistortionPair>,
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed, detail }
}

/// Oracle and Monte-Carlo checks, deterministic given `seed`.
pub fn validation_suite(seed: u64, samples: usize) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Binning requirement with no first stage equals the Wyner-Ziv rate.
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let s = SourceSpec::new(1.0, 0.95 * i as f64 / 19.0)?;
        for j in 0..10 {
            let rc = 6.0 * j as f64 / 9.0;
            let cfg = VqConfig::new(0.0, 0.0, rc, 0.0, 0.0)?;
            worst = worst.max((wz_rate(&s, ex(rc)) - vq_conf_requirement(&s, &cfg).0).abs());
        }
    }
    out.push(check("wyner_ziv_identity", worst <= 1e-12, format!("max deviation {worst:.3e}")));

    // Without a second stage or coherent power the region reduces to the
    // uncooperative one.
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let rho: f64 = rng.random_range(0.0..0.99);
        let (p1, p2, n): (f64, f64, f64) = (rng.random_range(0.1..50.0), rng.random_range(0.1..50.0), rng.random_range(0.1..5.0));
        let (r1, r2) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
        let s = SourceSpec::new(1.0, rho)?;
        let ch = ChannelSpec::new(p1, p2, n, ConfCapacity::Finite(0.0))?;
        let (b, _) = vq_rate_bounds(&s, &ch, &VqConfig::new(r1, r2, 0.0, 0.0, 0.0)?);
        let rt2 = rho * rho * fr(r1) * fr(r2);
        let lt = [
            0.5 * ((p1 * (1.0 - rt2) + n) / (n * (1.0 - rt2))).log2(),
            0.5 * ((p2 * (1.0 - rt2) + n) / (n * (1.0 - rt2))).log2(),
            0.5 * ((p1 + p2 + 2.0 * rt2.sqrt() * (p1 * p2).sqrt() + n) / (n * (1.0 - rt2))).log2(),
        ];
        for (x, y) in [(b[0], lt[0]), (b[1], lt[1]), (b[3], lt[2])] {
            worst = worst.max((x - y).abs());
        }
    }
    out.push(check("uncooperative_reduction", worst <= 1e-12, format!("max deviation {worst:.3e}")));

    // Closed-form estimator coefficients against the normal equations.
    let mut worst: f64 = 0.0;
    let mut lemma = true;
    for _ in 0..1000 {
        let rho: f64 = rng.random_range(0.01..0.99);
        let cfg = VqConfig::new(rng.random_range(0.05..4.0), rng.random_range(0.05..4.0), rng.random_range(0.05..4.0), 0.0, 0.0)?;
        let s = SourceSpec::new(1.0, rho)?;
        let g = mmse_gamma(&s, &cfg);
        let o = mmse_gamma_oracle(&build_surrogate(&s, &cfg))?;
        for (a, b) in [(g.g11, o.g11), (g.g12, o.g12), (g.g13, o.g13), (g.g21, o.g21), (g.g22, o.g22), (g.g23, o.g23)] {
            worst = worst.max((a - b).abs());
        }
        lemma &= [g.g11, g.g13, g.g22].iter().all(|&v| v > 0.0 && v <= 1.0);
        lemma &= [g.g12, g.g21, g.g23].iter().all(|&v| v > 0.0 && v <= rho);
    }
    out.push(check("mmse_coefficients", worst <= 1e-10, format!("max deviation {worst:.3e}")));
    out.push(check("mmse_coefficient_bounds", lemma, String::new()));

    // Genie-aided distortions.
    let s = SourceSpec::new(1.0, 0.5)?;
    let cfg = VqConfig::new(1.0, 1.0, 0.5, 0.0, 0.0)?;
    let e = genie_distortion_mc(&s, &cfg, samples.max(1000), seed)?;
    let d = vq_distortion(&s, &cfg);
    let z1 = (e.d1 - d.d1) / e.d1_se;
    let z2 = (e.d2 - d.d2) / e.d2_se;
    out.push(check("genie_distortion", z1.abs() <= 3.0 && z2.abs() <= 3.0, format!("z = ({z1:.2}, {z2:.2})")));

    // Maximally correlated maps.
    let mut ok = true;
    let mut zmax: f64 = 0.0;
    for (i, &rho) in [0.0, 0.2, 0.4, 0.6, 0.8].iter().enumerate() {
        for (j, &beta) in [0.0, 0.2, 0.4, 0.6, 0.8].iter().enumerate() {
            let s = SourceSpec::new(1.0, rho)?;
            let m = maxcorr_linear_maps(&s, beta, samples.max(3), seed.wrapping_add((5 * i + j) as u64))?;
            let zc = (m.corr - (rho * rho * (1.0 - beta) + beta).sqrt()) / m.corr_se;
            let zv = (m.cond_var - (1.0 - beta) * (1.0 - rho * rho)) / m.cond_var_se;
            zmax = zmax.max(zc.abs()).max(zv.abs());
            ok &= zc.abs() <= 3.0 && zv.abs() <= 3.0;
        }
    }
    out.push(check("max_correlation_maps", ok, format!("max |z| {zmax:.2}")));

    // Polar caps.
    let mut ok = true;
    for n in 4..=200usize {
        for k in 1..28 {
            let phi = 0.05 * k as f64;
            let t = phi.tan();
            if 1.0 - t * t / n as f64 <= 0.0 {
                continue;
            }
            let (lo, hi) = cap_ratio_bounds(n, phi)?;
            let x = cap_ratio_exact(n, phi)?;
            ok &= lo <= x * (1.0 + 1e-12) && x <= hi * (1.0 + 1e-12);
        }
    }
    out.push(check("cap_sandwich", ok, String::new()));
    let x = 1e4;
    let dev = (gamma_ratio_series(x, 3)? / gamma_ratio_exact(x)? - 1.0).abs();
    out.push(check("gamma_ratio_series", dev <= 1e-12, format!("relative deviation {dev:.3e}")));

    // Achievable points satisfy the outer bound.
    let mut tested = 0;
    let mut ok = true;
    while tested < 200 {
        let s = SourceSpec::new(1.0, rng.random_range(0.0..0.95))?;
        let cfg = VqConfig::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))?;
        let ch = ChannelSpec::new(rng.random_range(0.1..30.0), rng.random_range(0.1..30.0), 1.0, ConfCapacity::Unlimited)?;
        if let Ok(rep) = vq_rate_region(&s, &ch, &cfg) {
            if rep.feasible {
                tested += 1;
                ok &= necessary_condition(&s, &ch, &vq_distortion(&s, &cfg))?.feasible;
            }
        }
    }
    out.push(check("outer_bound_consistency", ok, format!("{tested} feasible configurations")));
    Ok(out)
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Unbounded(_) => EXIT_INFEASIBLE,
        _ => EXIT_DOMAIN,
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, v: &T, json: bool) -> Result<()> {
    let text = if json {
        serde_json::to_string_pretty(v).expect("serializable output")
    } else {
        flat_text(&serde_json::to_value(v).expect("serializable output"), "")
    };
    writeln!(out, "{text}").map_err(|e| Error::domain("out", e.to_string()))
}

fn flat_text(v: &serde_json::Value, prefix: &str) -> String {
    match v {
        serde_json::Value::Object(m) => m
            .iter()
            .map(|(k, x)| flat_text(x, &if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }))
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("\n"),
        serde_json::Value::Number(n) => format!("{prefix} = {}", n.as_f64().map(fmt_num).unwrap_or_else(|| n.to_string())),
        other => format!("{prefix} = {other}"),
    }
}

fn load(p: &Params, o: &Output) -> Result<Params> {
    let base = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::domain("config", format!("{}: {e}", path.display())))?;
            Params::from_json(&text)?
        }
        None => Params::default(),
    };
    Ok(base.overlay(p))
}

fn region(what: &str, p: &Params, out: &mut dyn Write, json: bool) -> Result<i32> {
    let verdict = |r: &FeasibilityReport| if r.feasible { EXIT_OK } else { EXIT_INFEASIBLE };
    let src = || p.source();
    let report = match what {
        "vq" => vq_rate_region(&src()?, &p.channel()?, &p.vq_config()?)?,
        "vq-unlimited" => {
            let (rep, d) = vq_unlimited_region(&src()?, &p.channel()?, p.r2.unwrap_or(0.0), p.rc.unwrap_or(0.0), p.beta.unwrap_or(0.0))?;
            let code = verdict(&rep);
            emit(out, &RegionOutput { report: rep, distortion: Some(d) }, json)?;
            return Ok(code);
        }
        "vq-search" => vq_feasible(&src()?, &p.channel()?, &p.target()?)?,
        "sep1" => sep1_feasible(&src()?, &p.channel()?, &p.target()?)?,
        "sep2" => sep2_feasible(&src()?, &p.channel()?, &p.target()?)?,
        "necessary" => necessary_condition(&src()?, &p.channel()?, &p.target()?)?,
        "wagner" => wagner_contains(&src()?, &p.target()?, &p.rates()?)?,
        "mac" => mac_plain_contains(&p.channel()?, &p.rates()?),
        "mac-conf" => {
            let ch = p.channel()?;
            match ch.c12 {
                ConfCapacity::Unlimited => mac_conf_unlimited_contains(&ch, &p.rates()?, p.beta.unwrap_or(0.0))?,
                ConfCapacity::Finite(_) => {
                    let split = MacPowerSplit::new(p.beta1.unwrap_or(0.0), p.beta2.unwrap_or(0.0))?;
                    mac_conf_fixed_contains(&ch, &p.rates()?, &split)?
                }
            }
        }
        "kaspi" => {
            let kp = KaspiParams {
                sw2: p.sw2.unwrap_or(AuxVariance::Unlimited),
                su2: p.su2.unwrap_or(AuxVariance::Unlimited),
                sv2: p.sv2.unwrap_or(AuxVariance::Unlimited),
            };
            emit(out, &kaspi_region_point(&src()?, &kp)?, json)?;
            return Ok(EXIT_OK);
        }
        "rd" => {
            let s = src()?;
            let t = p.target()?;
            #[derive(Serialize)]
            struct Rd {
                region: String,
                joint: f64,
                conditional: f64,
                wyner_ziv: f64,
            }
            let v = Rd {
                region: rd_region_of(&s, &t).to_string(),
                joint: rd_joint(&s, &t),
                conditional: rd_conditional(&s, t.d2),
                wyner_ziv: wz_rate(&s, t.d1),
            };
            emit(out, &v, json)?;
            return Ok(EXIT_OK);
        }
        other => return Err(Error::domain("region", format!("unknown region `{other}`"))),
    };
    let code = verdict(&report);
    emit(out, &RegionOutput { report, distortion: None }, json)?;
    Ok(code)
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (p, o) = match &cmd {
        Command::Region { p, o, .. }
        | Command::Minpower { p, o }
        | Command::Minconf { p, o }
        | Command::Asymptote { p, o }
        | Command::Validate { p, o }
        | Command::Trace { p, o } => (load(p, o)?, o),
    };
    if o.dump_config {
        writeln!(out, "{}", p.to_json()).map_err(|e| Error::domain("out", e.to_string()))?;
        return Ok(EXIT_OK);
    }
    let mut buf: Vec<u8> = Vec::new();
    let code = {
        let w: &mut dyn Write = if o.out.is_some() { &mut buf } else { &mut *out };
        match &cmd {
            Command::Region { what, .. } => region(&what.to_ascii_lowercase(), &p, w, o.json)?,
            Command::Minpower { .. } => {
                let r = min_power_symmetric(&p.source()?, p.scheme()?, &p.target()?, p.c12(), p.noise(), p.tol())?;
                emit(w, &r, o.json)?;
                EXIT_OK
            }
            Command::Minconf { .. } => {
                let (p1, p2) = p.powers()?;
                let r = min_conf_capacity(&p.source()?, p1, p2, p.noise(), p.scheme()?, &p.target()?, p.tol())?;
                emit(w, &r, o.json)?;
                EXIT_OK
            }
            Command::Asymptote { .. } => {
                let q = high_snr_quantities_with_proxy(&p.source()?, &p.channel()?, &p.target()?, p.proxy.unwrap_or(REGIME_PROXY))?;
                emit(w, &q, o.json)?;
                EXIT_OK
            }
            Command::Validate { .. } => {
                let checks = validation_suite(p.seed.unwrap_or(42), p.samples.unwrap_or(1_000_000))?;
                let all = checks.iter().all(|c| c.passed);
                if o.json {
                    emit(w, &checks, true)?;
                } else {
                    for c in &checks {
                        let _ = writeln!(w, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                }
                if all {
                    EXIT_OK
                } else {
                    EXIT_VALIDATION
                }
            }
            Command::Trace { .. } => {
                let kind: CurveKind = need(p.kind.as_deref(), "kind")?.parse()?;
                let grid = parse_grid(need(p.grid.as_deref(), "grid")?)?;
                let schemes = need(p.schemes.as_deref(), "schemes")?
                    .split(',')
                    .map(|s| s.parse::<SchemeColumn>())
                    .collect::<Result<Vec<_>>>()?;
                let d2 = match kind {
                    CurveKind::D1d2VsSnr | CurveKind::PminVsAlpha | CurveKind::C12VsAlpha => need(p.d2, "d2")?,
                };
                let tp = TraceParams {
                    src: p.source()?,
                    d2,
                    n0: p.noise(),
                    power: if kind == CurveKind::C12VsAlpha { p.powers()?.0 } else { p.p.or(p.p1).unwrap_or(1.0) },
                    c12: p.c12(),
                    schemes,
                    tol: p.tol(),
                };
                let tab = trace_curve(kind, &tp, &grid)?;
                if o.json {
                    emit(w, &tab, true)?;
                } else {
                    write!(w, "{}", trace_csv(&tab, &p)).map_err(|e| Error::domain("out", e.to_string()))?;
                }
                if tab.rows.iter().any(|r| r.cells.iter().any(|c| c.is_err())) {
                    let _ = writeln!(err, "some rows carry error markers");
                }
                EXIT_OK
            }
        }
    };
    if let Some(path) = &o.out {
        std::fs::write(path, &buf).map_err(|e| Error::domain("out", format!("{}: {e}", path.display())))?;
    }
    Ok(code)
}

fn configure_threads() {
    if let Ok(v) = std::env::var("GMAC_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                // Fails harmlessly if the pool was already built.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Runs the CLI on `argv` (including the program name), writing to the given streams.
pub fn run_with_io(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    configure_threads();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_DOMAIN
                }
            };
        }
    };
    match dispatch(cli.cmd, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_for(&e)
        }
    }
}

pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(argv, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g = parse_grid("0.1:1:0.05").unwrap();
        assert_eq!(g.len(), 19);
        assert!((g[18] - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(4.4375), "4.4375");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(1e-9), "1.00000000000e-9");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(0.0), "0");
    }

    #[test]
    fn overlay_prefers_flags() {
        let file = Params { rho: Some(0.3), d2: Some(0.2), ..Params::default() };
        let flags = Params { rho: Some(0.5), ..Params::default() };
        let m = file.overlay(&flags);
        assert_eq!((m.rho, m.d2), (Some(0.5), Some(0.2)));
    }

    #[test]
    fn config_round_trip() {
        let p = Params { rho: Some(0.5), c12: Some(ConfCapacity::Unlimited), sw2: Some(AuxVariance::Finite(2.0)), ..Params::default() };
        let j = p.to_json();
        assert_eq!(Params::from_json(&j).unwrap(), p);
        assert!(Params::from_json("{\"bogus\": 1}").is_err());
    }
}
