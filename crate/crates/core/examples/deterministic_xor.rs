//! Deterministic channel region on the binary XOR channel.

use icckit::channel::{induce_joint, CommonFactors};
use icckit::regions;
use icckit::{DeterministicSpec, InputFactorization, RatePoint};

fn main() -> icckit::Result<()> {
    let d = DeterministicSpec::binary_xor();
    let ch = d.lift()?;
    let f = InputFactorization::Dicc(CommonFactors::independent(vec![0.5, 0.5], vec![0.5, 0.5]));
    let p = induce_joint(&f, &ch)?;
    let region = regions::dicc_region(&d, &p)?;
    for r in region.rows() {
        println!("{:<45} {}", r.label.as_deref().unwrap_or(""), r.rhs);
    }
    for point in ["R0=0,R1=0.5,R2=0.5", "R0=0.2,R1=0.4,R2=0.4", "R0=0,R1=0.6,R2=0.6"] {
        let r = RatePoint::parse(point)?;
        println!("{point}: member = {}", region.member(&r, 1e-9)?);
    }
    Ok(())
}
