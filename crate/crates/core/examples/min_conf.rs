//! Smallest conference capacity meeting a distortion target, and the best distortion product.
use gmac::search::{min_conf_capacity, min_distortion_product, Scheme};
use gmac::{ChannelSpec, ConfCapacity, DistortionPair, SourceSpec};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    let target = DistortionPair::new(0.2, 0.2)?;
    for scheme in [Scheme::Vq, Scheme::Sep1] {
        let r = min_conf_capacity(&src, 6.0, 6.0, 1.0, scheme, &target, 1e-6)?;
        println!("{scheme}: C12 {:.4} bits", r.objective);
    }
    let ch = ChannelSpec::symmetric(50.0, 1.0, ConfCapacity::Finite(1.0))?;
    let r = min_distortion_product(&src, Scheme::Vq, &ch, 0.2, 1e-6)?;
    println!("vq at P 50, C12 1, d2 0.2: smallest d1*d2 {:.6}", r.objective);
    Ok(())
}
