//! Monte Carlo error rates of the layered code on the XOR channel.
//!
//! Pass a trial count to change the default of 500.

use icckit::sim::{estimate_errors, sent_tuple_typical_rate, SimConfig, XOR_EXTERIOR, XOR_INTERIOR};

fn main() -> icckit::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);

    let mut inside = SimConfig::xor_fixture(XOR_INTERIOR, 1);
    inside.trials = trials;
    for n in [8, 32, 128] {
        println!("n = {n:>3}: sent tuple typical in {:.3} of trials", sent_tuple_typical_rate(&inside, n, trials)?);
    }
    println!("\ninside the region {:?}:\n{}", inside.rates, estimate_errors(&inside)?.to_csv());

    let mut outside = SimConfig::xor_flat(XOR_EXTERIOR, 1);
    outside.trials = trials;
    println!("outside the region {:?}:\n{}", outside.rates, estimate_errors(&outside)?.to_csv());
    Ok(())
}
