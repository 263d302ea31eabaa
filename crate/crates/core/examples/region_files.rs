//! Region files: write, read back, eliminate, compare, and query.

use icckit::channel::induce_joint;
use icckit::regions;
use icckit::{ChannelSpec, IneqSystem, InputFactorization, RatePoint};

fn main() -> icckit::Result<()> {
    let ch = ChannelSpec::from_json(include_str!("../data/identity.json"))?;
    let f = InputFactorization::from_json(include_str!("../data/general_flat.json"))?;
    let p = induce_joint(&f, &ch)?;

    let implicit = regions::implicit_region(&p)?;
    let json = implicit.to_json();
    let back = IneqSystem::from_json(&json)?;
    assert_eq!(back.to_json(), json);
    println!("{json}");

    let projected = back
        .with_sum_coords(&[("R1", &["R12", "R11"]), ("R2", &["R21", "R22"])])?
        .fourier_motzkin(&["R12", "R11", "R21", "R22"])?
        .prune()
        .reordered(&["R0", "R1", "R2"])?;
    println!("projected:\n{}", projected.to_csv());

    let csv = IneqSystem::from_csv(&projected.to_csv())?;
    let d = csv.grid_diff(&regions::explicit_region(&p)?, 0.25, &[(0.0, 1.0)], 1e-9)?;
    println!("grid diff: only_a {} only_b {} both {} neither {}", d.only_a, d.only_b, d.both, d.neither);

    let point = RatePoint::parse("R0=0,R1=1,R2=1")?;
    println!("(0, 1, 1) member: {}, slacks {:?}", csv.member(&point, 1e-9)?, csv.slacks(&point)?);
    Ok(())
}
