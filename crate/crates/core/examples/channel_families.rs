//! Channels, input distributions, and the joint they induce.

use icckit::channel::{induce_joint, AuxCards, CommonFactors, DeterministicSpec, Family};
use icckit::{ChannelSpec, InputFactorization};

fn main() -> icckit::Result<()> {
    // Y1 = X1 + X2 over {0,1,2}; Y2 = X1 xor X2 seen through a BSC(0.1).
    let ch = ChannelSpec::from_json(include_str!("../data/adder_bsc.json"))?;
    let m = ch.marginal_channels();
    println!("p(y1|x1=1,x2=1) = {:?}", &m.p1[9..12]);
    println!("p(y2|x1=1,x2=1) = {:?}", &m.p2[6..8]);

    let mut rng = icckit::rng_from_seed(3);
    for family in [Family::General, Family::Timeshare, Family::Sicc, Family::Aicc, Family::Dicc] {
        let f = InputFactorization::random(family, AuxCards::default(), 2, 2, &mut rng);
        let p = induce_joint(&f, &ch)?;
        println!("{family:?}: variables {:?}, I(X1X2;Y1) = {:.4}", p.names(), p.cond_mutual_info(&["X1", "X2"], &["Y1"], &[])?);
    }

    // The deterministic XOR channel: Y1 = X1 xor X2 = Y2, interference recoverable.
    let d = DeterministicSpec::binary_xor();
    let xor = d.lift()?;
    println!("xor kernel row (1,0): {:?}", xor.row(1, 0));
    println!("h1(y1=1, x1=0) = {:?}", d.h1(1, 0));

    let uniform = InputFactorization::Dicc(CommonFactors::independent(vec![0.5, 0.5], vec![0.5, 0.5]));
    let p = induce_joint(&uniform, &xor)?;
    println!("uniform inputs on xor: H(Y1) = {}", p.entropy(&["Y1"])?);
    Ok(())
}
