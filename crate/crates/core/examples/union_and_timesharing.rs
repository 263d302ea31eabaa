//! Sampled unions of regions, and time sharing between two distributions.

use icckit::channel::{AuxCards, Family};
use icckit::regions::{self, RegionKind, UnionConfig};
use icckit::{ChannelSpec, InputFactorization, RatePoint};

fn main() -> icckit::Result<()> {
    let ch = ChannelSpec::from_json(include_str!("../data/identity.json"))?;
    let u = regions::union_region(&ch, RegionKind::Explicit, &UnionConfig { samples: 50, ..UnionConfig::default() }, None)?;
    for point in ["R0=0,R1=0.5,R2=0.5", "R0=0.3,R1=0.3,R2=0.3", "R0=0,R1=1.2,R2=0"] {
        let r = RatePoint::parse(point)?;
        println!("{point}: witness {:?}", u.witness(&r, 1e-9)?);
    }

    let adder = ChannelSpec::from_json(include_str!("../data/adder_bsc.json"))?;
    let mut rng = icckit::rng_from_seed(2);
    let f1 = InputFactorization::random(Family::General, AuxCards::default(), 2, 2, &mut rng);
    let f2 = InputFactorization::random(Family::General, AuxCards::default(), 2, 2, &mut rng);
    let s1 = regions::region_of(RegionKind::ImplicitM, &f1, &adder, None)?;
    let s2 = regions::region_of(RegionKind::ImplicitM, &f2, &adder, None)?;
    let a = regions::sample_members(&s1, 100, &mut rng)?;
    let b = regions::sample_members(&s2, 100, &mut rng)?;
    let pairs: Vec<_> = a.into_iter().zip(b).collect();
    for alpha in [0.25, 0.5, 0.75] {
        let r = regions::timeshare_check(&f1, &f2, alpha, &adder, &pairs, 1e-9)?;
        println!("alpha {alpha}: {} pairs, {} failures, worst row {:.3e}", r.checked, r.failures.len(), r.max_violation);
    }
    Ok(())
}
