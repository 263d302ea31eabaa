//! One sender knows both messages: the asymmetric region and its projection.

use icckit::channel::{induce_joint, AiccFactors};
use icckit::regions;
use icckit::{ChannelSpec, InputFactorization};

fn main() -> icckit::Result<()> {
    let ch = ChannelSpec::from_json(include_str!("../data/adder_bsc.json"))?;
    let f = InputFactorization::Aicc(AiccFactors::random(2, 2, 2, &mut icckit::rng_from_seed(4)));
    let p = induce_joint(&f, &ch)?;
    let (modified, pairs) = regions::aicc_regions(&p)?;
    println!("split region:\n{}", modified.to_csv());
    println!("rate pairs:\n{}", pairs.to_csv());

    let projected = modified
        .with_sum_coords(&[("R2", &["R21", "R22"])])?
        .fourier_motzkin(&["R21", "R22"])?
        .prune();
    println!("projection of the split region:\n{}", projected.to_csv());
    Ok(())
}
