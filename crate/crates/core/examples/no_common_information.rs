//! Rate splitting without a common message.

use icckit::channel::{induce_joint, AuxCards, Family};
use icckit::regions;
use icckit::{ChannelSpec, InputFactorization};

fn main() -> icckit::Result<()> {
    let ch = ChannelSpec::from_json(include_str!("../data/adder_bsc.json"))?;
    let mut rng = icckit::rng_from_seed(9);
    let f = InputFactorization::random(Family::Timeshare, AuxCards::default(), 2, 2, &mut rng);
    let p = induce_joint(&f, &ch)?;

    let cmg = regions::cmg_region(&p)?;
    println!("split rates ({} rows):", cmg.split.len());
    for (a, b) in cmg.split.rows().iter().zip(cmg.unsimplified.rows()) {
        println!("  {:<32} {:.6}   before simplification {:.6}", a.label.as_deref().unwrap_or(""), a.rhs, b.rhs);
    }
    println!("\nrate pairs:\n{}", cmg.rate_pairs()?.prune().to_csv());

    let slice = regions::explicit_region(&p.renamed(&[("Q", "U0")])?)?.slice("R0", 0.0)?;
    println!("three-rate region at R0 = 0:\n{}", slice.prune().to_csv());
    Ok(())
}
