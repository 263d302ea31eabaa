#![allow(dead_code)]

use icckit::channel::{random_channel, AuxCards, ChannelSpec, Family, InputFactorization};
use icckit::prob::{JointPmf, VarId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    icckit::rng_from_seed(seed)
}

pub fn binary_channel(rng: &mut ChaCha8Rng) -> ChannelSpec {
    random_channel(2, 2, 2, 2, rng)
}

pub fn binary(family: Family, rng: &mut ChaCha8Rng) -> InputFactorization {
    InputFactorization::random(family, AuxCards::default(), 2, 2, rng)
}

/// Random pmf with every entry drawn uniformly and then normalized.
pub fn random_joint(cards: &[usize], rng: &mut ChaCha8Rng) -> JointPmf {
    let size: usize = cards.iter().product();
    let mut mass: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    let vars = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| VarId::new(format!("A{i}"), c))
        .collect();
    JointPmf::new(vars, mass).unwrap()
}

/// `Y1 = (X1 xor Z1, X2)`, `Y2 = (X1, X2 xor Z2)` with the pair packed as `2a + b`.
/// Each receiver sees the other sender's input noiselessly.
pub fn cross_observing_channel(z1: f64, z2: f64) -> ChannelSpec {
    let mut kernel = Vec::new();
    for x1 in 0..2 {
        for x2 in 0..2 {
            for y1 in 0..4usize {
                for y2 in 0..4usize {
                    let p1 = if y1 % 2 != x2 {
                        0.0
                    } else if y1 / 2 == x1 {
                        1.0 - z1
                    } else {
                        z1
                    };
                    let p2 = if y2 / 2 != x1 {
                        0.0
                    } else if y2 % 2 == x2 {
                        1.0 - z2
                    } else {
                        z2
                    };
                    kernel.push(p1 * p2);
                }
            }
        }
    }
    ChannelSpec::new(2, 2, 4, 4, kernel).unwrap()
}
