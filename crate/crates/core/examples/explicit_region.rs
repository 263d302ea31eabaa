//! The five-message region, its projection onto (R0, R1, R2), and the
//! thirteen listed rows.

use icckit::channel::induce_joint;
use icckit::regions;
use icckit::{ChannelSpec, InputFactorization};

fn main() -> icckit::Result<()> {
    let ch = ChannelSpec::from_json(include_str!("../data/adder_bsc.json"))?;
    let f = InputFactorization::from_json(include_str!("../data/general_random.json"))?;
    let p = induce_joint(&f, &ch)?;

    let implicit = regions::implicit_region(&p)?;
    println!("five-message region ({} rows):", implicit.len());
    for r in implicit.rows() {
        println!("  {:<40} rhs {:.5}", r.label.as_deref().unwrap_or(""), r.rhs);
    }

    let projected = regions::projected_region(&p)?.prune();
    println!("\nprojection, pruned ({} rows):\n{}", projected.len(), projected.to_csv());

    let listed = regions::explicit_region(&p)?;
    let complete = regions::explicit_complete(&p)?;
    let hi = listed.coordinate_maxima().iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    let step = hi / 40.0;
    let bbox = vec![(0.0, hi + step); 3];
    let d = projected.grid_diff(&listed, step, &bbox, 1e-9)?;
    println!("projection vs thirteen rows: {} points only in the projection, {} only in the listed rows", d.only_a, d.only_b);
    let d = projected.grid_diff(&complete, step, &bbox, 1e-9)?;
    println!("projection vs thirteen + four rows: {} / {}", d.only_a, d.only_b);
    for r in regions::explicit_supplement(&p)?.rows() {
        println!("  extra row {:<45} rhs {:.5}", r.label.as_deref().unwrap_or(""), r.rhs);
    }
    Ok(())
}
