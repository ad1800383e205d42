//! Capacity regions of the channel with and without conferencing.
use gmac::capacity::{mac_conf_fixed_contains, mac_conf_unlimited_contains, mac_plain_contains, MacPowerSplit};
use gmac::{ChannelSpec, ConfCapacity, RatePoint};

fn main() -> gmac::Result<()> {
    let rp = RatePoint::new(1.0, 1.2)?;
    let ch = ChannelSpec::symmetric(3.0, 1.0, ConfCapacity::Finite(0.0))?;
    println!("plain MAC: {:?}", mac_plain_contains(&ch, &rp).slacks);
    let ch = ch.with_c12(ConfCapacity::Finite(0.5));
    let split = MacPowerSplit::new(0.4, 0.4)?;
    println!("C12=0.5: {:?}", mac_conf_fixed_contains(&ch, &rp, &split)?.slacks);
    let ch = ch.with_c12(ConfCapacity::Unlimited);
    println!("unlimited: {:?}", mac_conf_unlimited_contains(&ch, &rp, 0.5)?.slacks);
    Ok(())
}
