//! Smallest symmetric power meeting a distortion target, per scheme.
use gmac::search::{min_power_symmetric, Scheme};
use gmac::{ConfCapacity, DistortionPair, SourceSpec};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    let target = DistortionPair::new(0.1, 0.2)?;
    let runs = [
        (Scheme::FullCoop, ConfCapacity::Unlimited),
        (Scheme::Necessary, ConfCapacity::Unlimited),
        (Scheme::Vq, ConfCapacity::Unlimited),
        (Scheme::Vq, ConfCapacity::Finite(1.0)),
        (Scheme::Vq, ConfCapacity::Finite(0.0)),
        (Scheme::Sep1, ConfCapacity::Unlimited),
        (Scheme::Sep2, ConfCapacity::Unlimited),
    ];
    for (scheme, c) in runs {
        let r = min_power_symmetric(&src, scheme, &target, c, 1.0, 1e-6)?;
        println!("{scheme:>9} C12 {c:?}: P {:.4} ({} iterations)", r.objective, r.iterations);
    }
    Ok(())
}
