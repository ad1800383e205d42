//! Large-power behaviour of the correlation coefficients and distortion products.
use gmac::bounds::{compare_threshold, high_snr_quantities, semi_symmetric_limit};
use gmac::{ChannelSpec, ConfCapacity, DistortionPair, SourceSpec};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.6)?;
    let target = DistortionPair::new(0.05, 0.1)?;
    for c in [ConfCapacity::Finite(0.5), ConfCapacity::Finite(2.0), ConfCapacity::Unlimited] {
        let ch = ChannelSpec::symmetric(1e5, 1.0, c)?;
        println!("C12 {c:?}: {:#?}", high_snr_quantities(&src, &ch, &target)?);
    }
    println!("semi-symmetric limit at P/N 1e5: {:.6e}", semi_symmetric_limit(0.6, 1.0, 1e5, 0.1)?);
    for c in [0.5, 1.0, 2.0] {
        println!("C12 {c}: vq beats sep1 for rho below {:.4} at alpha 0.5", compare_threshold(c, 0.5));
    }
    Ok(())
}
