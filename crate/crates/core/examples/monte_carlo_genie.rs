//! Monte-Carlo check of the genie-aided estimator against the closed-form distortions.
use gmac::montecarlo::{build_surrogate, genie_distortion_mc, mmse_gamma, mmse_gamma_oracle};
use gmac::vqscheme::vq_distortion;
use gmac::{SourceSpec, VqConfig};

fn main() -> gmac::Result<()> {
    let src = SourceSpec::unit(0.5)?;
    let cfg = VqConfig::new(1.0, 1.0, 0.5, 0.0, 0.0)?;
    println!("closed-form coefficients {:?}", mmse_gamma(&src, &cfg));
    println!("linear-algebra oracle    {:?}", mmse_gamma_oracle(&build_surrogate(&src, &cfg))?);
    let e = genie_distortion_mc(&src, &cfg, 1_000_000, 7)?;
    let d = vq_distortion(&src, &cfg);
    println!("d1 {:.5} +- {:.1e} (closed form {:.5})", e.d1, e.d1_se, d.d1);
    println!("d2 {:.5} +- {:.1e} (closed form {:.5})", e.d2, e.d2_se, d.d2);
    Ok(())
}
