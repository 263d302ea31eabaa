//! Strong-interference check and the region that follows from it.

use icckit::channel::{check_strong_interference, induce_joint, strong_interference_sweep, CommonFactors, SweepConfig};
use icckit::regions::{self, SICC_REDUNDANT_ROWS};
use icckit::{ChannelSpec, InputFactorization};

/// Each receiver sees the other user's input exactly and its own through a BSC.
fn cross_observing(z1: f64, z2: f64) -> icckit::Result<ChannelSpec> {
    let mut kernel = Vec::new();
    for x1 in 0..2 {
        for x2 in 0..2 {
            for y1 in 0..4usize {
                for y2 in 0..4usize {
                    let (a1, b1) = (y1 / 2, y1 % 2);
                    let (a2, b2) = (y2 / 2, y2 % 2);
                    let p1 = if b1 != x2 { 0.0 } else if a1 == x1 { 1.0 - z1 } else { z1 };
                    let p2 = if a2 != x1 { 0.0 } else if b2 == x2 { 1.0 - z2 } else { z2 };
                    kernel.push(p1 * p2);
                }
            }
        }
    }
    ChannelSpec::new(2, 2, 4, 4, kernel)
}

fn main() -> icckit::Result<()> {
    let ch = cross_observing(0.1, 0.2)?;
    let sweep = strong_interference_sweep(&ch, &SweepConfig { random_samples: 100, ..SweepConfig::default() })?;
    println!(
        "sweep over {} distributions: holds = {}, min slacks {:.4} / {:.4}",
        sweep.samples, sweep.holds, sweep.min_slack_1, sweep.min_slack_2
    );

    let f = InputFactorization::Sicc(CommonFactors::random(2, 2, 2, &mut icckit::rng_from_seed(1)));
    println!("{:?}", check_strong_interference(&ch, &f)?);
    let p = induce_joint(&f, &ch)?;
    let region = regions::sicc_region(&p)?;
    println!("\nregion:\n{}", region.to_csv());
    let reduced = regions::sicc_reduced_region(&p)?.without_labels(&SICC_REDUNDANT_ROWS);
    let d = region.grid_diff(&reduced, 0.01, &[(0.0, 2.0)], 1e-9)?;
    println!("reduced layered rows agree: {}", d.equivalent());
    Ok(())
}
