//! Outer bound and its empirical maximum-correlation check.
use gmac::bounds::{full_coop_min_power_symmetric, maxcorr_linear_maps, necessary_condition, necessary_min_power_symmetric};
use gmac::{ChannelSpec, ConfCapacity, DistortionPair, SourceSpec};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    let target = DistortionPair::new(0.1, 0.2)?;
    let pn = necessary_min_power_symmetric(&src, &target, 1.0);
    println!("necessary power {pn:.4}, full cooperation {:.4}", full_coop_min_power_symmetric(&src, &target, 1.0));
    for p in [0.9 * pn, 1.1 * pn] {
        let rep = necessary_condition(&src, &ChannelSpec::symmetric(p, 1.0, ConfCapacity::Unlimited)?, &target)?;
        println!("P {p:.4}: passes {} witness {:?}", rep.feasible, rep.witness);
    }
    for beta in [0.0, 0.5, 1.0] {
        let m = maxcorr_linear_maps(&src, beta, 200_000, 1)?;
        println!("beta {beta}: corr {:.4} +- {:.4}, cond var {:.4} +- {:.4}", m.corr, m.corr_se, m.cond_var, m.cond_var_se);
    }
    Ok(())
}
