//! Rate constraints and distortions of the vector-quantizer scheme.
use gmac::vqscheme::{vq_conf_requirement, vq_distortion, vq_rate_region, vq_unlimited_region};
use gmac::{ChannelSpec, ConfCapacity, SourceSpec, VqConfig};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    let cfg = VqConfig::new(1.0, 1.0, 0.5, 0.5, 0.5)?;
    let (need, _) = vq_conf_requirement(&src, &cfg);
    println!("conference rate needed: {need:.4} bits");
    let d = vq_distortion(&src, &cfg);
    println!("distortions: ({:.4}, {:.4})", d.d1, d.d2);
    for c in [ConfCapacity::Finite(0.5), ConfCapacity::Finite(1.5), ConfCapacity::Unlimited] {
        let ch = ChannelSpec::symmetric(1000.0, 1.0, c)?;
        let rep = vq_rate_region(&src, &ch, &cfg)?;
        println!("C12 {c:?}: feasible {}", rep.feasible);
        for (name, s) in &rep.slacks {
            println!("  {name:>9} {:.4}", s.0);
        }
    }
    let ch = ChannelSpec::symmetric(20.0, 1.0, ConfCapacity::Unlimited)?;
    let (rep, d) = vq_unlimited_region(&src, &ch, 1.0, 1.0, 0.5)?;
    println!("unlimited form: feasible {} D ({:.4}, {:.4})", rep.feasible, d.d1, d.d2);
    Ok(())
}
