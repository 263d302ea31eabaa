mod common;

use common::*;
use icckit::channel::{ChannelSpec, InputFactorization, LayeredFactors};
use icckit::sim::{self, Codebook, LazyCodebook, Rates, SimConfig, Typicality, XOR_INTERIOR};

/// `|count/n - p|` within three standard deviations.
fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (count as f64 / n as f64 - p).abs() <= 3.0 * sd + 1e-12
}

fn skewed() -> SimConfig {
    let f = LayeredFactors {
        u0: vec![0.3, 0.7],
        u1_given_u0: vec![vec![0.5, 0.5], vec![0.9, 0.1]],
        u2_given_u0: vec![vec![1.0], vec![1.0]],
        x1_given_u0u1: vec![vec![0.8, 0.2], vec![0.4, 0.6], vec![0.1, 0.9], vec![0.5, 0.5]],
        x2_given_u0u2: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
    };
    SimConfig {
        factorization: InputFactorization::General(f),
        rates: Rates::default(),
        ..SimConfig::xor_fixture(Rates::default(), 9)
    }
}

#[test]
fn codeword_symbols_follow_the_factors() {
    let cfg = skewed();
    let n = 20_000;
    let cb = LazyCodebook::new(&cfg, n, 31, 0).unwrap();
    let (u0, u1, x1) = (cb.u0(0), cb.u1(0, 0), cb.x1(0, 0, 0));
    let ones = u0.iter().filter(|&&s| s == 1).count();
    assert!(within_3_sigma(ones, n, 0.7), "u0 ones {ones}");

    // p(u1 = 0 | u0 = 1) = 0.9
    let given: Vec<usize> = (0..n).filter(|&t| u0[t] == 1).collect();
    let zeros = given.iter().filter(|&&t| u1[t] == 0).count();
    assert!(within_3_sigma(zeros, given.len(), 0.9));

    // p(x1 = 1 | u0 = 1, u1 = 0) = 0.9
    let cell: Vec<usize> = given.iter().copied().filter(|&t| u1[t] == 0).collect();
    let hits = cell.iter().filter(|&&t| x1[t] == 1).count();
    assert!(within_3_sigma(hits, cell.len(), 0.9));
}

#[test]
fn channel_outputs_follow_the_kernel() {
    let mut r = rng(77);
    let ch = binary_channel(&mut r);
    let n = 20_000;
    for (a, b) in [(0u8, 0u8), (1, 0), (1, 1)] {
        let (y1, y2) = sim::transmit(&ch, &vec![a; n], &vec![b; n], &mut r).unwrap();
        let row = ch.row(a as usize, b as usize);
        for (cell, &p) in row.iter().enumerate() {
            let count = (0..n)
                .filter(|&t| y1[t] as usize * 2 + y2[t] as usize == cell)
                .count();
            assert!(within_3_sigma(count, n, p), "cell {cell}: {count} vs {p}");
        }
    }
}

#[test]
fn noiseless_channel_decodes_private_rates() {
    let flat = LayeredFactors {
        u0: vec![1.0],
        u1_given_u0: vec![vec![1.0]],
        u2_given_u0: vec![vec![1.0]],
        x1_given_u0u1: vec![vec![0.5, 0.5]],
        x2_given_u0u2: vec![vec![0.5, 0.5]],
    };
    let cfg = SimConfig {
        channel: ChannelSpec::from_fn(2, 2, 2, 2, |a, b| (a, b)).unwrap(),
        factorization: InputFactorization::General(flat),
        rates: Rates::new(0.0, 0.0, 0.25, 0.0, 0.25),
        blocklengths: vec![16, 32],
        trials: 200,
        ..SimConfig::xor_fixture(Rates::default(), 3)
    };
    for row in sim::estimate_errors(&cfg).unwrap().rows {
        assert!(1.0 - row.pe_max >= 0.99, "{row:?}");
    }
}

#[test]
fn single_messages_with_loose_typicality_never_fail() {
    let mut cfg = SimConfig::xor_fixture(Rates::default(), 4);
    cfg.epsilon = 10.0;
    cfg.blocklengths = vec![8, 64];
    cfg.trials = 200;
    for row in sim::estimate_errors(&cfg).unwrap().rows {
        assert_eq!(row.pe_max, 0.0);
    }
}

#[test]
fn sent_tuples_become_typical_with_length() {
    let cfg = SimConfig::xor_fixture(Rates::default(), 8);
    let short = sim::sent_tuple_typical_rate(&cfg, 8, 400).unwrap();
    let long = sim::sent_tuple_typical_rate(&cfg, 1024, 400).unwrap();
    assert!(long > short, "{short} then {long}");
    assert!(long > 0.9, "{long}");
}

#[test]
fn strong_typicality_is_stricter() {
    let weak = SimConfig::xor_fixture(Rates::default(), 8);
    let strong = SimConfig {
        typicality: Typicality::Strong,
        ..weak.clone()
    };
    let w = sim::sent_tuple_typical_rate(&weak, 64, 200).unwrap();
    let s = sim::sent_tuple_typical_rate(&strong, 64, 200).unwrap();
    assert!(s <= w);
}

#[test]
fn interior_errors_fall_with_blocklength() {
    let mut cfg = SimConfig::xor_fixture(XOR_INTERIOR, 12);
    cfg.trials = 200;
    let pe: Vec<f64> = sim::estimate_errors(&cfg)
        .unwrap()
        .rows
        .iter()
        .map(|r| r.pe_max)
        .collect();
    let drops = pe.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(drops >= 2 && pe[pe.len() - 1] < pe[0], "{pe:?}");
}
