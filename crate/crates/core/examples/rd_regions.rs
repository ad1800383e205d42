//! Rate-distortion quantities of the bivariate source and the conferencing source-code region.
use gmac::rdlib::{kaspi_region_point, rd_conditional, rd_joint, rd_region_of, wagner_contains, wz_rate, AuxVariance, KaspiParams};
use gmac::{DistortionPair, RatePoint, SourceSpec};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    for (d1, d2) in [(0.9, 0.9), (0.3, 0.6), (0.1, 0.2)] {
        let d = DistortionPair::new(d1, d2)?;
        println!(
            "D=({d1}, {d2}) region {} joint {:.4} conditional {:.4} wyner-ziv {:.4}",
            rd_region_of(&src, &d),
            rd_joint(&src, &d),
            rd_conditional(&src, d2),
            wz_rate(&src, d1)
        );
    }
    let d = DistortionPair::new(0.1, 0.2)?;
    let rep = wagner_contains(&src, &d, &RatePoint::new(1.5, 1.2)?)?;
    println!("two-terminal region contains (1.5, 1.2): {} (min slack {:.4})", rep.feasible, rep.min_slack());

    let kp = KaspiParams { sw2: AuxVariance::Finite(1.0), su2: AuxVariance::Finite(0.2), sv2: AuxVariance::Finite(0.3) };
    let pt = kaspi_region_point(&src, &kp)?;
    println!("conferencing code: C12 {:.4} R1 {:.4} R2 {:.4} sum {:.4} D ({:.4}, {:.4})", pt.c12, pt.r1, pt.r2, pt.sum, pt.dist.d1, pt.dist.d2);
    Ok(())
}
