//! Traces minimal power against the distortion ratio and prints CSV.
use gmac::cli::{trace_csv, Params};
use gmac::search::{trace_curve, CurveKind, TraceParams};
use gmac::{ConfCapacity, SourceSpec};

fn main() -> gmac::Result<()> {
    let tp = TraceParams {
        src: SourceSpec::unit(0.5)?,
        d2: 0.2,
        n0: 1.0,
        power: 1.0,
        c12: ConfCapacity::Unlimited,
        schemes: vec!["necessary".parse()?, "vq-unlimited".parse()?, "vq-none".parse()?, "sep2".parse()?],
        tol: 1e-5,
    };
    let grid: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let tab = trace_curve(CurveKind::PminVsAlpha, &tp, &grid)?;
    let params = Params { rho: Some(0.5), d2: Some(0.2), ..Params::default() };
    print!("{}", trace_csv(&tab, &params));
    Ok(())
}
