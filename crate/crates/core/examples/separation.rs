//! Feasibility of the two source-channel separation schemes.
use gmac::separation::{sep1_feasible, sep2_feasible};
use gmac::{ChannelSpec, ConfCapacity, DistortionPair, SourceSpec};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    let target = DistortionPair::new(0.2, 0.2)?;
    for p in [5.0, 20.0, 100.0] {
        for c in [ConfCapacity::Finite(0.0), ConfCapacity::Finite(1.0), ConfCapacity::Unlimited] {
            let ch = ChannelSpec::symmetric(p, 1.0, c)?;
            let a = sep1_feasible(&src, &ch, &target)?;
            let b = sep2_feasible(&src, &ch, &target)?;
            println!("P {p:>5} C12 {c:?}: sep1 {} ({:.4}) sep2 {} ({:.4})", a.feasible, a.min_slack(), b.feasible, b.min_slack());
        }
    }
    Ok(())
}
