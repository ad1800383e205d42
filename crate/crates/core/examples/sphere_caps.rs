//! Spherical-cap area fractions and the gamma-function ratio.
use gmac::montecarlo::{cap_ratio_bounds, cap_ratio_exact, gamma_ratio_exact, gamma_ratio_series};

fn main() -> gmac::Result<()> {
    for n in [4, 16, 64, 200] {
        let phi = 1.2;
        let (lo, hi) = cap_ratio_bounds(n, phi)?;
        println!("n {n:>3} phi {phi}: {lo:.6e} <= {:.6e} <= {hi:.6e}", cap_ratio_exact(n, phi)?);
    }
    for x in [10.0, 100.0, 1e4] {
        println!("x {x}: series {:.15} exact {:.15}", gamma_ratio_series(x, 3)?, gamma_ratio_exact(x)?);
    }
    Ok(())
}
