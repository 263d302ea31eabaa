//! Monte Carlo simulation of the layered superposition code.
//!
//! Codewords are drawn symbol by symbol from the conditional factors of a
//! layered distribution. A codeword is a pure function of
//! `(seed, blocklength, trial, layer, index)`, so a codebook never has to be
//! stored: [`LazyCodebook`] regenerates words on demand and
//! [`CodebookSet`] is its materialized form. Receivers decode by joint
//! typicality over their own common, cloud and private layers, treating the
//! other sender's cloud index as a nuisance that only needs to exist.

use std::borrow::Cow;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{induce_joint, ChannelSpec, InputFactorization, LayeredFactors};
use crate::error::{Error, Result};
use crate::polytope::RatePoint;
use crate::prob::JointPmf;

/// Default cap on materialized codebook symbols.
pub const DEFAULT_MAX_SYMBOLS: u64 = 1 << 20;
/// Default cap on typicality tests per decoding.
pub const DEFAULT_MAX_TESTS: u64 = 1 << 24;

/// Five-message rate vector in bits per channel use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R12")]
    pub r12: f64,
    #[serde(rename = "R11")]
    pub r11: f64,
    #[serde(rename = "R21")]
    pub r21: f64,
    #[serde(rename = "R22")]
    pub r22: f64,
}

impl Rates {
    pub const fn new(r0: f64, r12: f64, r11: f64, r21: f64, r22: f64) -> Self {
        Self {
            r0,
            r12,
            r11,
            r21,
            r22,
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.r0, self.r12, self.r11, self.r21, self.r22]
    }
}

/// Rate point inside the five-message region of the XOR fixture with at
/// least 0.1 bit of slack in every row.
pub const XOR_INTERIOR: Rates = Rates::new(0.1, 0.05, 0.05, 0.05, 0.05);
/// Rate point whose triple `(0, 0.6, 0.6)` exceeds the XOR channel's
/// sum-rate bound of one bit by 0.2.
pub const XOR_EXTERIOR: Rates = Rates::new(0.0, 0.0, 0.6, 0.0, 0.6);

/// Which typical set the decoders test against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Typicality {
    /// Every nonempty subset of the decoded variables has empirical
    /// per-symbol log-probability within epsilon of its entropy.
    #[default]
    Weak,
    /// Every cell of the empirical joint type lies within
    /// `epsilon * p(a) + epsilon / |A|` of `p(a)`; impossible cells stay empty.
    Strong,
}

/// Everything needed to run the simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    pub factorization: InputFactorization,
    pub rates: Rates,
    pub blocklengths: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub typicality: Typicality,
    #[serde(default = "default_max_symbols")]
    pub max_codebook_symbols: u64,
    #[serde(default = "default_max_tests")]
    pub max_tests_per_decode: u64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_max_symbols() -> u64 {
    DEFAULT_MAX_SYMBOLS
}

fn default_max_tests() -> u64 {
    DEFAULT_MAX_TESTS
}

impl SimConfig {
    /// Binary XOR channel `Y1 = Y2 = X1 xor X2` with uniform inputs, a
    /// degenerate common layer, and four-valued clouds: cloud values 0 and 1
    /// fix the input, values 2 and 3 leave it uniform.
    pub fn xor_fixture(rates: Rates, seed: u64) -> Self {
        let cloud = vec![0.25; 4];
        let given = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![0.5, 0.5]];
        let f = LayeredFactors {
            u0: vec![1.0],
            u1_given_u0: vec![cloud.clone()],
            u2_given_u0: vec![cloud],
            x1_given_u0u1: given.clone(),
            x2_given_u0u2: given,
        };
        Self {
            channel: crate::channel::DeterministicSpec::binary_xor()
                .lift()
                .expect("xor is recoverable"),
            factorization: InputFactorization::General(f),
            rates,
            blocklengths: vec![8, 16, 32, 64],
            trials: 2000,
            epsilon: 0.1,
            seed,
            typicality: Typicality::Weak,
            max_codebook_symbols: DEFAULT_MAX_SYMBOLS,
            max_tests_per_decode: DEFAULT_MAX_TESTS,
        }
    }

    /// Same channel with degenerate auxiliaries and uniform inputs, so every
    /// rate sits on a private layer. Points outside the channel's capacity
    /// region are outside the region of every input distribution, and this
    /// one makes competing codewords cheap to find.
    pub fn xor_flat(rates: Rates, seed: u64) -> Self {
        let f = LayeredFactors {
            u0: vec![1.0],
            u1_given_u0: vec![vec![1.0]],
            u2_given_u0: vec![vec![1.0]],
            x1_given_u0u1: vec![vec![0.5, 0.5]],
            x2_given_u0u2: vec![vec![0.5, 0.5]],
        };
        Self {
            factorization: InputFactorization::General(f),
            ..Self::xor_fixture(rates, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.as_array().iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config("rates must be finite and nonnegative".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("epsilon must be nonnegative".into()));
        }
        if self.blocklengths.iter().any(|&n| n == 0) {
            return Err(Error::Config("blocklengths must be positive".into()));
        }
        layered(&self.factorization)?;
        induce_joint(&self.factorization, &self.channel)?;
        Ok(())
    }

    /// The five-message rate point.
    pub fn rate_point(&self) -> RatePoint {
        let r = &self.rates;
        RatePoint::new(&[
            ("R0", r.r0),
            ("R12", r.r12),
            ("R11", r.r11),
            ("R21", r.r21),
            ("R22", r.r22),
        ])
    }

    /// The rate triple `(R0, R12 + R11, R21 + R22)`.
    pub fn triple_point(&self) -> RatePoint {
        let r = &self.rates;
        RatePoint::new(&[("R0", r.r0), ("R1", r.r12 + r.r11), ("R2", r.r21 + r.r22)])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn layered(f: &InputFactorization) -> Result<&LayeredFactors> {
    match f {
        InputFactorization::General(l) | InputFactorization::Timeshare(l) => Ok(l),
        other => Err(Error::Config(format!(
            "simulation needs a layered distribution, got {:?}",
            other.family()
        ))),
    }
}

/// Codebook sizes `max(1, floor(2^(n R)))` for the five layers' index ranges.
pub fn codebook_sizes(rates: &Rates, n: usize) -> Result<[u64; 5]> {
    let mut out = [1u64; 5];
    for (slot, r) in out.iter_mut().zip(rates.as_array()) {
        let bits = n as f64 * r;
        if bits >= 56.0 {
            return Err(Error::ResourceCap(format!(
                "2^{bits:.1} messages in one layer at n = {n}"
            )));
        }
        *slot = (bits.exp2().floor() as u64).max(1);
    }
    Ok(out)
}

/// Message indices `(i, j, k, l, m)`, zero-based: common, cloud and private
/// index of sender 1, cloud and private index of sender 2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub i: u64,
    pub j: u64,
    pub k: u64,
    pub l: u64,
    pub m: u64,
}

impl Message {
    pub const fn new(i: u64, j: u64, k: u64, l: u64, m: u64) -> Self {
        Self { i, j, k, l, m }
    }

    /// Uniform message over the index ranges.
    pub fn random(sizes: &[u64; 5], rng: &mut impl Rng) -> Self {
        Self {
            i: rng.random_range(0..sizes[0]),
            j: rng.random_range(0..sizes[1]),
            k: rng.random_range(0..sizes[2]),
            l: rng.random_range(0..sizes[3]),
            m: rng.random_range(0..sizes[4]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layer {
    U0 = 0,
    U1 = 1,
    X1 = 2,
    U2 = 3,
    X2 = 4,
}

/// Read access to the five codeword layers.
pub trait Codebook {
    fn n(&self) -> usize;
    /// Index ranges `[M0, M12, M11, M21, M22]`.
    fn sizes(&self) -> [u64; 5];
    fn u0(&self, i: u64) -> Cow<'_, [u8]>;
    fn u1(&self, i: u64, j: u64) -> Cow<'_, [u8]>;
    fn x1(&self, i: u64, j: u64, k: u64) -> Cow<'_, [u8]>;
    fn u2(&self, i: u64, l: u64) -> Cow<'_, [u8]>;
    fn x2(&self, i: u64, l: u64, m: u64) -> Cow<'_, [u8]>;
}

/// Cumulative conditional tables for drawing symbols.
#[derive(Clone, Debug)]
struct Sampler {
    u0: Vec<f64>,
    u1: Vec<Vec<f64>>,
    u2: Vec<Vec<f64>>,
    x1: Vec<Vec<f64>>,
    x2: Vec<Vec<f64>>,
    u1_card: usize,
    u2_card: usize,
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    row.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> u8 {
    // The first cell above u always has positive mass. If rounding leaves
    // the total short of 1, fall back to the last cell that has any.
    let k = cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
        let total = cdf[cdf.len() - 1];
        cdf.iter().position(|&c| c == total).unwrap_or(cdf.len() - 1)
    });
    k as u8
}

impl Sampler {
    fn new(f: &LayeredFactors) -> Result<Self> {
        let cards = [
            f.u0.len(),
            f.u1_given_u0.first().map_or(0, Vec::len),
            f.u2_given_u0.first().map_or(0, Vec::len),
            f.x1_given_u0u1.first().map_or(0, Vec::len),
            f.x2_given_u0u2.first().map_or(0, Vec::len),
        ];
        if let Some(&c) = cards.iter().find(|&&c| c > 256) {
            return Err(Error::Config(format!("alphabet of size {c} exceeds 256 symbols")));
        }
        Ok(Self {
            u0: cumulative(&f.u0),
            u1: f.u1_given_u0.iter().map(|r| cumulative(r)).collect(),
            u2: f.u2_given_u0.iter().map(|r| cumulative(r)).collect(),
            x1: f.x1_given_u0u1.iter().map(|r| cumulative(r)).collect(),
            x2: f.x2_given_u0u2.iter().map(|r| cumulative(r)).collect(),
            u1_card: cards[1],
            u2_card: cards[2],
        })
    }
}

/// Codebook whose words are regenerated from their index on every access.
#[derive(Clone, Debug)]
pub struct LazyCodebook {
    key: [u8; 32],
    n: usize,
    sizes: [u64; 5],
    sampler: Sampler,
}

impl LazyCodebook {
    /// Codebook for trial `trial` at blocklength `n` of a run seeded with `seed`.
    pub fn new(cfg: &SimConfig, n: usize, seed: u64, trial: u64) -> Result<Self> {
        let sizes = codebook_sizes(&cfg.rates, n)?;
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
        key[16..24].copy_from_slice(&trial.to_le_bytes());
        Ok(Self {
            key,
            n,
            sizes,
            sampler: Sampler::new(layered(&cfg.factorization)?)?,
        })
    }

    fn stream(&self, layer: Layer, flat: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(((layer as u64) << 58) | flat);
        rng
    }

    fn uniforms(&self, layer: Layer, flat: u64) -> impl Iterator<Item = f64> {
        let mut rng = self.stream(layer, flat);
        (0..self.n).map(move |_| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
    }

    fn gen_u0(&self, i: u64) -> Vec<u8> {
        self.uniforms(Layer::U0, i).map(|u| draw(&self.sampler.u0, u)).collect()
    }

    fn gen_cloud(&self, layer: Layer, flat: u64, u0: &[u8]) -> Vec<u8> {
        let rows = if layer == Layer::U1 { &self.sampler.u1 } else { &self.sampler.u2 };
        self.uniforms(layer, flat)
            .zip(u0)
            .map(|(u, &a)| draw(&rows[a as usize], u))
            .collect()
    }

    fn gen_input(&self, layer: Layer, flat: u64, u0: &[u8], cloud: &[u8]) -> Vec<u8> {
        let (rows, card) = if layer == Layer::X1 {
            (&self.sampler.x1, self.sampler.u1_card)
        } else {
            (&self.sampler.x2, self.sampler.u2_card)
        };
        self.uniforms(layer, flat)
            .zip(u0.iter().zip(cloud))
            .map(|(u, (&a, &c))| draw(&rows[a as usize * card + c as usize], u))
            .collect()
    }

    /// All words, checked against the symbol cap.
    pub fn materialize(&self, max_symbols: u64) -> Result<CodebookSet> {
        let [m0, m12, m11, m21, m22] = self.sizes;
        let words = m0
            .saturating_mul(1 + m12.saturating_mul(1 + m11) + m21.saturating_mul(1 + m22));
        let symbols = words.saturating_mul(self.n as u64);
        if symbols > max_symbols {
            return Err(Error::ResourceCap(format!(
                "codebook needs {symbols} symbols (cap {max_symbols})"
            )));
        }
        let mut set = CodebookSet {
            n: self.n,
            sizes: self.sizes,
            u0: Vec::new(),
            u1: Vec::new(),
            x1: Vec::new(),
            u2: Vec::new(),
            x2: Vec::new(),
        };
        for i in 0..m0 {
            set.u0.push(self.u0(i).into_owned());
            for j in 0..m12 {
                set.u1.push(self.u1(i, j).into_owned());
                for k in 0..m11 {
                    set.x1.push(self.x1(i, j, k).into_owned());
                }
            }
            for l in 0..m21 {
                set.u2.push(self.u2(i, l).into_owned());
                for m in 0..m22 {
                    set.x2.push(self.x2(i, l, m).into_owned());
                }
            }
        }
        Ok(set)
    }
}

impl Codebook for LazyCodebook {
    fn n(&self) -> usize {
        self.n
    }

    fn sizes(&self) -> [u64; 5] {
        self.sizes
    }

    fn u0(&self, i: u64) -> Cow<'_, [u8]> {
        Cow::Owned(self.gen_u0(i))
    }

    fn u1(&self, i: u64, j: u64) -> Cow<'_, [u8]> {
        let u0 = self.gen_u0(i);
        Cow::Owned(self.gen_cloud(Layer::U1, i * self.sizes[1] + j, &u0))
    }

    fn x1(&self, i: u64, j: u64, k: u64) -> Cow<'_, [u8]> {
        let u0 = self.gen_u0(i);
        let u1 = self.gen_cloud(Layer::U1, i * self.sizes[1] + j, &u0);
        let flat = (i * self.sizes[1] + j) * self.sizes[2] + k;
        Cow::Owned(self.gen_input(Layer::X1, flat, &u0, &u1))
    }

    fn u2(&self, i: u64, l: u64) -> Cow<'_, [u8]> {
        let u0 = self.gen_u0(i);
        Cow::Owned(self.gen_cloud(Layer::U2, i * self.sizes[3] + l, &u0))
    }

    fn x2(&self, i: u64, l: u64, m: u64) -> Cow<'_, [u8]> {
        let u0 = self.gen_u0(i);
        let u2 = self.gen_cloud(Layer::U2, i * self.sizes[3] + l, &u0);
        let flat = (i * self.sizes[3] + l) * self.sizes[4] + m;
        Cow::Owned(self.gen_input(Layer::X2, flat, &u0, &u2))
    }
}

/// A fully stored codebook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodebookSet {
    n: usize,
    sizes: [u64; 5],
    u0: Vec<Vec<u8>>,
    u1: Vec<Vec<u8>>,
    x1: Vec<Vec<u8>>,
    u2: Vec<Vec<u8>>,
    x2: Vec<Vec<u8>>,
}

impl CodebookSet {
    pub fn symbol_count(&self) -> usize {
        [&self.u0, &self.u1, &self.x1, &self.u2, &self.x2]
            .iter()
            .map(|l| l.len() * self.n)
            .sum()
    }
}

impl Codebook for CodebookSet {
    fn n(&self) -> usize {
        self.n
    }

    fn sizes(&self) -> [u64; 5] {
        self.sizes
    }

    fn u0(&self, i: u64) -> Cow<'_, [u8]> {
        Cow::Borrowed(&self.u0[i as usize])
    }

    fn u1(&self, i: u64, j: u64) -> Cow<'_, [u8]> {
        Cow::Borrowed(&self.u1[(i * self.sizes[1] + j) as usize])
    }

    fn x1(&self, i: u64, j: u64, k: u64) -> Cow<'_, [u8]> {
        Cow::Borrowed(&self.x1[((i * self.sizes[1] + j) * self.sizes[2] + k) as usize])
    }

    fn u2(&self, i: u64, l: u64) -> Cow<'_, [u8]> {
        Cow::Borrowed(&self.u2[(i * self.sizes[3] + l) as usize])
    }

    fn x2(&self, i: u64, l: u64, m: u64) -> Cow<'_, [u8]> {
        Cow::Borrowed(&self.x2[((i * self.sizes[3] + l) * self.sizes[4] + m) as usize])
    }
}

/// Draws a fresh stored codebook at blocklength `n`.
pub fn generate_codebooks(cfg: &SimConfig, n: usize, rng: &mut impl Rng) -> Result<CodebookSet> {
    cfg.validate()?;
    LazyCodebook::new(cfg, n, rng.random(), 0)?.materialize(cfg.max_codebook_symbols)
}

fn check_message(cb: &impl Codebook, msg: &Message) -> Result<()> {
    let sizes = cb.sizes();
    let idx = [msg.i, msg.j, msg.k, msg.l, msg.m];
    for (pos, (&v, &size)) in idx.iter().zip(&sizes).enumerate() {
        if v >= size {
            return Err(Error::IndexOutOfRange {
                what: ["i", "j", "k", "l", "m"][pos].into(),
                index: v as usize,
                size: size as usize,
            });
        }
    }
    Ok(())
}

/// The two transmitted input sequences.
pub fn encode(cb: &impl Codebook, msg: &Message) -> Result<(Vec<u8>, Vec<u8>)> {
    check_message(cb, msg)?;
    Ok((
        cb.x1(msg.i, msg.j, msg.k).into_owned(),
        cb.x2(msg.i, msg.l, msg.m).into_owned(),
    ))
}

/// Passes both input sequences through the memoryless channel.
pub fn transmit(
    ch: &ChannelSpec,
    x1: &[u8],
    x2: &[u8],
    rng: &mut impl Rng,
) -> Result<(Vec<u8>, Vec<u8>)> {
    if x1.len() != x2.len() {
        return Err(Error::Shape {
            what: "input sequences".into(),
            expected: x1.len(),
            found: x2.len(),
        });
    }
    let mut y1 = Vec::with_capacity(x1.len());
    let mut y2 = Vec::with_capacity(x1.len());
    for (&a, &b) in x1.iter().zip(x2) {
        let (a, b) = (a as usize, b as usize);
        if a >= ch.x1_card || b >= ch.x2_card {
            return Err(Error::OutOfAlphabet {
                map: "channel input".into(),
                index: y1.len(),
                value: a.max(b),
                card: if a >= ch.x1_card { ch.x1_card } else { ch.x2_card },
            });
        }
        let row = ch.row(a, b);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cell = row.len() - 1;
        for (c, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                cell = c;
                break;
            }
        }
        while row[cell] == 0.0 && cell > 0 {
            cell -= 1;
        }
        y1.push((cell / ch.y2_card) as u8);
        y2.push((cell % ch.y2_card) as u8);
    }
    Ok((y1, y2))
}

/// One receiver's view: which layers it decodes, and in what order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Receiver {
    One,
    Two,
}

/// Joint-typicality tests for one receiver, organized by search depth.
///
/// The decoded tuple is `(U0, own cloud, other cloud, own input, Y)`; depth
/// `d` knows the first `d + 1` of the first four together with `Y`. Each
/// depth only runs the tests that involve its newest variable, so a tuple
/// passes all depths exactly when it is jointly typical.
#[derive(Clone, Debug)]
pub struct TypicalityTests {
    kind: Typicality,
    epsilon: f64,
    /// Cardinalities in tuple order `[U0, own cloud, other cloud, own input, Y]`.
    cards: [usize; 5],
    depths: Vec<DepthTests>,
}

#[derive(Clone, Debug)]
struct DepthTests {
    /// Tuple positions known at this depth, `Y` last.
    known: Vec<usize>,
    /// Mixed-radix multipliers for the known positions.
    strides: Vec<usize>,
    cells: usize,
    checks: Vec<Check>,
}

#[derive(Clone, Debug)]
enum Check {
    /// Per-cell `-log2 p_S`, and the entropy `H(S)`.
    Entropy { neglog: Vec<f64>, entropy: f64 },
    /// Per-cell probability and allowed deviation.
    Type { prob: Vec<f64>, slack: Vec<f64> },
}

const TUPLE_1: [&str; 5] = ["U0", "U1", "U2", "X1", "Y1"];
const TUPLE_2: [&str; 5] = ["U0", "U2", "U1", "X2", "Y2"];

impl TypicalityTests {
    pub fn new(p: &JointPmf, rx: Receiver, kind: Typicality, epsilon: f64) -> Result<Self> {
        let names = match rx {
            Receiver::One => TUPLE_1,
            Receiver::Two => TUPLE_2,
        };
        let mut cards = [0usize; 5];
        for (c, name) in cards.iter_mut().zip(names) {
            *c = p.card(name)?;
        }
        let mut depths = Vec::with_capacity(4);
        for d in 0..4 {
            let mut known: Vec<usize> = (0..=d).collect();
            known.push(4);
            let mut strides = vec![1usize; known.len()];
            for t in (0..known.len() - 1).rev() {
                strides[t] = strides[t + 1] * cards[known[t + 1]];
            }
            let cells = strides[0] * cards[known[0]];
            let known_names: Vec<&str> = known.iter().map(|&t| names[t]).collect();
            let marginal = p.marginalize(&known_names)?;
            // Map a marginal assignment (in the joint's variable order) to our cell index.
            let order: Vec<usize> = marginal
                .names()
                .iter()
                .map(|n| known_names.iter().position(|k| k == n).expect("known"))
                .collect();
            let cell_of = |a: &[usize]| -> usize {
                a.iter().zip(&order).map(|(&v, &slot)| v * strides[slot]).sum()
            };
            let mut checks = Vec::new();
            match kind {
                Typicality::Strong => {
                    let mut prob = vec![0.0; cells];
                    marginal.for_each(|a, m| prob[cell_of(a)] = m);
                    let slack = prob
                        .iter()
                        .map(|&q| epsilon * q + epsilon / cells as f64)
                        .collect();
                    checks.push(Check::Type { prob, slack });
                }
                Typicality::Weak => {
                    // Subsets of the known slots, as bitmasks over `known`.
                    let newest = if d == 0 { None } else { Some(known.len() - 2) };
                    for mask in 1u32..(1 << known.len()) {
                        if let Some(bit) = newest {
                            if mask & (1 << bit) == 0 {
                                continue;
                            }
                        }
                        let subset: Vec<&str> = (0..known.len())
                            .filter(|b| mask & (1 << b) != 0)
                            .map(|b| known_names[b])
                            .collect();
                        let sub = marginal.marginalize(&subset)?;
                        let entropy = sub.entropy(&subset)?;
                        let sub_pos: Vec<usize> = sub
                            .names()
                            .iter()
                            .map(|n| marginal.position(n).expect("subset"))
                            .collect();
                        let sub_cards = sub.cards();
                        let mut neglog = vec![f64::INFINITY; cells];
                        marginal.for_each(|a, _| {
                            let mut idx = 0;
                            for (&pos, &card) in sub_pos.iter().zip(&sub_cards) {
                                idx = idx * card + a[pos];
                            }
                            let q = sub.mass()[idx];
                            neglog[cell_of(a)] = if q > 0.0 { -q.log2() } else { f64::INFINITY };
                        });
                        checks.push(Check::Entropy { neglog, entropy });
                    }
                }
            }
            depths.push(DepthTests {
                known,
                strides,
                cells,
                checks,
            });
        }
        Ok(Self {
            kind,
            epsilon,
            cards,
            depths,
        })
    }

    pub fn kind(&self) -> Typicality {
        self.kind
    }

    /// Runs the tests of depth `d` on sequences for the known positions
    /// (`seqs[t]` for tuple slot `known[t]`).
    fn passes(&self, d: usize, seqs: &[&[u8]], counts: &mut Vec<u32>) -> bool {
        let depth = &self.depths[d];
        counts.clear();
        counts.resize(depth.cells, 0);
        let n = seqs[0].len();
        for t in 0..n {
            let mut c = 0;
            for (s, &stride) in seqs.iter().zip(&depth.strides) {
                c += s[t] as usize * stride;
            }
            counts[c] += 1;
        }
        let nf = n as f64;
        depth.checks.iter().all(|check| match check {
            Check::Entropy { neglog, entropy } => {
                let mut total = 0.0;
                for (&k, &w) in counts.iter().zip(neglog) {
                    if k > 0 {
                        if w.is_infinite() {
                            return false;
                        }
                        total += k as f64 * w;
                    }
                }
                (total / nf - entropy).abs() <= self.epsilon
            }
            Check::Type { prob, slack } => counts
                .iter()
                .zip(prob.iter().zip(slack))
                .all(|(&k, (&q, &s))| {
                    if q == 0.0 {
                        k == 0
                    } else {
                        (k as f64 / nf - q).abs() <= s
                    }
                }),
        })
    }

    /// Whether a complete tuple `(u0, own cloud, other cloud, own input, y)` is typical.
    pub fn typical(&self, tuple: [&[u8]; 5]) -> bool {
        let mut counts = Vec::new();
        (0..4).all(|d| {
            let seqs: Vec<&[u8]> = self.depths[d].known.iter().map(|&t| tuple[t]).collect();
            self.passes(d, &seqs, &mut counts)
        })
    }

    pub fn cards(&self) -> [usize; 5] {
        self.cards
    }
}

/// Decoded `(common, cloud, private)` indices of one sender.
pub type Triple = (u64, u64, u64);

/// What a receiver-side search should establish.
enum Goal {
    /// Collect every triple that is typical with some nuisance index.
    All,
    /// Stop at the first typical triple different from this one.
    Other(Triple),
}

struct Search<'a, C: Codebook> {
    cb: &'a C,
    tests: &'a TypicalityTests,
    rx: Receiver,
    y: &'a [u8],
    budget: u64,
    used: u64,
    counts: Vec<u32>,
}

impl<C: Codebook> Search<'_, C> {
    /// `(own cloud size, nuisance size, private size)` for this receiver.
    fn ranges(&self) -> (u64, u64, u64) {
        let s = self.cb.sizes();
        match self.rx {
            Receiver::One => (s[1], s[3], s[2]),
            Receiver::Two => (s[3], s[1], s[4]),
        }
    }

    fn cloud(&self, i: u64, a: u64) -> Cow<'_, [u8]> {
        match self.rx {
            Receiver::One => self.cb.u1(i, a),
            Receiver::Two => self.cb.u2(i, a),
        }
    }

    fn nuisance(&self, i: u64, b: u64) -> Cow<'_, [u8]> {
        match self.rx {
            Receiver::One => self.cb.u2(i, b),
            Receiver::Two => self.cb.u1(i, b),
        }
    }

    fn input(&self, i: u64, a: u64, k: u64) -> Cow<'_, [u8]> {
        match self.rx {
            Receiver::One => self.cb.x1(i, a, k),
            Receiver::Two => self.cb.x2(i, a, k),
        }
    }

    fn test(&mut self, d: usize, seqs: &[&[u8]]) -> Result<bool> {
        self.used += 1;
        if self.used > self.budget {
            return Err(Error::ResourceCap(format!(
                "decoding needed more than {} typicality tests",
                self.budget
            )));
        }
        Ok(self.tests.passes(d, seqs, &mut self.counts))
    }

    /// Whether `(i, a, k)` is typical with some nuisance index, trying `first` before the rest.
    fn triple_typical(&mut self, (i, a, k): Triple, first: Option<u64>) -> Result<bool> {
        let (_, nb, _) = self.ranges();
        let u0 = self.cb.u0(i).into_owned();
        let cloud = self.cloud(i, a).into_owned();
        let x = self.input(i, a, k).into_owned();
        if !self.test(0, &[&u0, self.y])? || !self.test(1, &[&u0, &cloud, self.y])? {
            return Ok(false);
        }
        let order = first.into_iter().chain((0..nb).filter(|&b| Some(b) != first));
        for b in order {
            let nu = self.nuisance(i, b).into_owned();
            if self.test(2, &[&u0, &cloud, &nu, self.y])?
                && self.test(3, &[&u0, &cloud, &nu, &x, self.y])?
            {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Enumerates typical triples. With [`Goal::Other`] returns as soon as
    /// one differing from the given triple is found.
    fn run(&mut self, goal: &Goal) -> Result<Vec<Triple>> {
        let (na, nb, nk) = self.ranges();
        let m0 = self.cb.sizes()[0];
        let mut found: Vec<Triple> = Vec::new();
        for i in 0..m0 {
            let u0 = self.cb.u0(i).into_owned();
            if !self.test(0, &[&u0, self.y])? {
                continue;
            }
            let nuisance: Vec<Vec<u8>> = (0..nb).map(|b| self.nuisance(i, b).into_owned()).collect();
            for a in 0..na {
                let cloud = self.cloud(i, a).into_owned();
                if !self.test(1, &[&u0, &cloud, self.y])? {
                    continue;
                }
                let live: Vec<&Vec<u8>> = {
                    let mut v = Vec::new();
                    for nu in &nuisance {
                        if self.test(2, &[&u0, &cloud, nu, self.y])? {
                            v.push(nu);
                        }
                    }
                    v
                };
                if live.is_empty() {
                    continue;
                }
                for k in 0..nk {
                    let t = (i, a, k);
                    if let Goal::Other(skip) = goal {
                        if *skip == t {
                            continue;
                        }
                    }
                    let x = self.input(i, a, k).into_owned();
                    let mut hit = false;
                    for nu in &live {
                        if self.test(3, &[&u0, &cloud, nu, &x, self.y])? {
                            hit = true;
                            break;
                        }
                    }
                    if hit {
                        found.push(t);
                        if matches!(goal, Goal::Other(_)) {
                            return Ok(found);
                        }
                    }
                }
            }
        }
        Ok(found)
    }
}

fn search<'a, C: Codebook>(
    cb: &'a C,
    tests: &'a TypicalityTests,
    rx: Receiver,
    y: &'a [u8],
    budget: u64,
) -> Search<'a, C> {
    Search {
        cb,
        tests,
        rx,
        y,
        budget,
        used: 0,
        counts: Vec::new(),
    }
}

/// Typicality tests for one configuration and receiver.
pub fn typicality_tests(cfg: &SimConfig, rx: Receiver) -> Result<TypicalityTests> {
    let p = induce_joint(&cfg.factorization, &cfg.channel)?;
    let p = match cfg.factorization {
        InputFactorization::Timeshare(_) => p.renamed(&[("Q", "U0")])?,
        _ => p,
    };
    TypicalityTests::new(&p, rx, cfg.typicality, cfg.epsilon)
}

/// Full search at one receiver: the unique typical triple, or `None`
/// when no triple or several triples are typical.
pub fn decode(
    cb: &impl Codebook,
    tests: &TypicalityTests,
    rx: Receiver,
    y: &[u8],
    budget: u64,
) -> Result<Option<Triple>> {
    let found = search(cb, tests, rx, y, budget).run(&Goal::All)?;
    Ok(if found.len() == 1 { Some(found[0]) } else { None })
}

/// Receiver 1's decision on `(i, j, k)`.
pub fn decode1(cb: &impl Codebook, tests: &TypicalityTests, y1: &[u8]) -> Result<Option<Triple>> {
    decode(cb, tests, Receiver::One, y1, u64::MAX)
}

/// Receiver 2's decision on `(i, l, m)`.
pub fn decode2(cb: &impl Codebook, tests: &TypicalityTests, y2: &[u8]) -> Result<Option<Triple>> {
    decode(cb, tests, Receiver::Two, y2, u64::MAX)
}

/// The triple a receiver is meant to recover.
pub fn intended(msg: &Message, rx: Receiver) -> Triple {
    match rx {
        Receiver::One => (msg.i, msg.j, msg.k),
        Receiver::Two => (msg.i, msg.l, msg.m),
    }
}

/// Whether decoding at `rx` fails, decided with as little search as possible.
///
/// Decoding succeeds exactly when the sent triple is typical with some
/// nuisance index and no other triple is, so the search stops at the first
/// competing typical triple.
pub fn decoding_fails(
    cb: &impl Codebook,
    tests: &TypicalityTests,
    rx: Receiver,
    y: &[u8],
    msg: &Message,
    budget: u64,
) -> Result<bool> {
    let sent = intended(msg, rx);
    let nuisance = match rx {
        Receiver::One => msg.l,
        Receiver::Two => msg.j,
    };
    let mut s = search(cb, tests, rx, y, budget);
    if !s.triple_typical(sent, Some(nuisance))? {
        return Ok(true);
    }
    Ok(!s.run(&Goal::Other(sent))?.is_empty())
}

/// Empirical error rates at one blocklength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub n: usize,
    pub trials: usize,
    pub pe1: f64,
    pub pe2: f64,
    pub pe_max: f64,
    /// Half-width of the Wilson 95% interval around `pe_max`.
    pub ci_half_width: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub rows: Vec<SimRow>,
}

impl SimReport {
    pub fn to_csv(&self) -> String {
        use crate::num::fmt_num;
        let mut out = String::from("n,trials,pe1,pe2,pe_max,ci_half_width\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.trials,
                fmt_num(r.pe1),
                fmt_num(r.pe2),
                fmt_num(r.pe_max),
                fmt_num(r.ci_half_width)
            ));
        }
        out
    }
}

/// Half-width of the Wilson score interval at 95% confidence.
pub fn wilson_half_width(p: f64, trials: usize) -> f64 {
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

/// Runs `trials` independent trials at every blocklength, each with its own
/// codebook, message and channel noise derived from `(seed, n, trial)`.
pub fn estimate_errors(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let t1 = typicality_tests(cfg, Receiver::One)?;
    let t2 = typicality_tests(cfg, Receiver::Two)?;
    let mut report = SimReport::default();
    for &n in &cfg.blocklengths {
        let outcomes = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| -> Result<(bool, bool)> {
                let cb = LazyCodebook::new(cfg, n, cfg.seed, trial)?;
                let mut rng = cb.stream(Layer::X2, (1u64 << 58) - 1);
                let msg = Message::random(&cb.sizes(), &mut rng);
                let (x1, x2) = encode(&cb, &msg)?;
                let (y1, y2) = transmit(&cfg.channel, &x1, &x2, &mut rng)?;
                let budget = cfg.max_tests_per_decode;
                Ok((
                    decoding_fails(&cb, &t1, Receiver::One, &y1, &msg, budget)?,
                    decoding_fails(&cb, &t2, Receiver::Two, &y2, &msg, budget)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let e1 = outcomes.iter().filter(|o| o.0).count();
        let e2 = outcomes.iter().filter(|o| o.1).count();
        let trials = cfg.trials;
        let pe1 = e1 as f64 / trials as f64;
        let pe2 = e2 as f64 / trials as f64;
        let pe_max = pe1.max(pe2);
        report.rows.push(SimRow {
            n,
            trials,
            pe1,
            pe2,
            pe_max,
            ci_half_width: wilson_half_width(pe_max, trials),
        });
    }
    Ok(report)
}

/// Fraction of trials in which the transmitted tuple is typical at both receivers.
pub fn sent_tuple_typical_rate(cfg: &SimConfig, n: usize, trials: usize) -> Result<f64> {
    cfg.validate()?;
    let t1 = typicality_tests(cfg, Receiver::One)?;
    let t2 = typicality_tests(cfg, Receiver::Two)?;
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<bool> {
            let cb = LazyCodebook::new(cfg, n, cfg.seed, trial)?;
            let mut rng = cb.stream(Layer::X2, (1u64 << 58) - 1);
            let msg = Message::random(&cb.sizes(), &mut rng);
            let (x1, x2) = encode(&cb, &msg)?;
            let (y1, y2) = transmit(&cfg.channel, &x1, &x2, &mut rng)?;
            let (u0, u1, u2) = (cb.u0(msg.i), cb.u1(msg.i, msg.j), cb.u2(msg.i, msg.l));
            Ok(t1.typical([&u0, &u1, &u2, &x1, &y1]) && t2.typical([&u0, &u2, &u1, &x2, &y2]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CommonFactors;

    fn zero_rates() -> SimConfig {
        SimConfig {
            rates: Rates::default(),
            blocklengths: vec![8, 32],
            trials: 50,
            ..SimConfig::xor_fixture(Rates::default(), 1)
        }
    }

    #[test]
    fn zero_rates_give_single_words() {
        let cfg = zero_rates();
        let mut rng = crate::rng_from_seed(0);
        let cb = generate_codebooks(&cfg, 16, &mut rng).unwrap();
        assert_eq!(cb.sizes(), [1; 5]);
        assert_eq!(cb.symbol_count(), 5 * 16);
        let a = encode(&cb, &Message::default()).unwrap();
        assert_eq!(a.0.len(), 16);
        assert!(encode(&cb, &Message::new(0, 1, 0, 0, 0)).is_err());
    }

    #[test]
    fn point_mass_factors_give_constant_words() {
        let mut cfg = zero_rates();
        cfg.rates = Rates::new(0.3, 0.2, 0.2, 0.2, 0.2);
        cfg.factorization = InputFactorization::General(LayeredFactors {
            u0: vec![0.0, 1.0],
            u1_given_u0: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            u2_given_u0: vec![vec![1.0], vec![1.0]],
            x1_given_u0u1: vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
            x2_given_u0u2: vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        });
        let mut rng = crate::rng_from_seed(2);
        let cb = generate_codebooks(&cfg, 10, &mut rng).unwrap();
        let s = cb.sizes();
        for i in 0..s[0] {
            assert!(cb.u0(i).iter().all(|&v| v == 1));
            for j in 0..s[1] {
                assert!(cb.u1(i, j).iter().all(|&v| v == 1));
                for k in 0..s[2] {
                    assert!(cb.x1(i, j, k).iter().all(|&v| v == 1));
                }
            }
        }
    }

    #[test]
    fn stored_and_lazy_codebooks_agree() {
        let cfg = SimConfig::xor_fixture(XOR_INTERIOR, 3);
        let lazy = LazyCodebook::new(&cfg, 40, 9, 4).unwrap();
        let stored = lazy.materialize(DEFAULT_MAX_SYMBOLS).unwrap();
        let s = lazy.sizes();
        assert_eq!(s, [16, 4, 4, 4, 4]);
        for i in [0, 5, 15] {
            assert_eq!(lazy.u0(i), stored.u0(i));
            for j in 0..s[1] {
                assert_eq!(lazy.u1(i, j), stored.u1(i, j));
                assert_eq!(lazy.x2(i, j, 3), stored.x2(i, j, 3));
            }
        }
    }

    #[test]
    fn symbol_cap_is_enforced() {
        let mut cfg = SimConfig::xor_fixture(XOR_EXTERIOR, 0);
        cfg.max_codebook_symbols = 1000;
        let mut rng = crate::rng_from_seed(0);
        assert!(matches!(
            generate_codebooks(&cfg, 32, &mut rng),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn identity_transmission() {
        let ch = ChannelSpec::from_fn(2, 3, 2, 3, |a, b| (a, b)).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let (y1, y2) = transmit(&ch, &[0, 1, 1, 0], &[2, 0, 1, 2], &mut rng).unwrap();
        assert_eq!(y1, vec![0, 1, 1, 0]);
        assert_eq!(y2, vec![2, 0, 1, 2]);
    }

    #[test]
    fn draw_skips_zero_mass_symbols() {
        let cdf = cumulative(&[0.0, 0.5, 0.0, 0.5]);
        assert_eq!(draw(&cdf, 0.0), 1);
        assert_eq!(draw(&cdf, 0.49), 1);
        assert_eq!(draw(&cdf, 0.5), 3);
        assert_eq!(draw(&cdf, 0.999), 3);
    }

    #[test]
    fn single_message_decodes_when_typical() {
        let cfg = zero_rates();
        let t1 = typicality_tests(&cfg, Receiver::One).unwrap();
        let mut rng = crate::rng_from_seed(5);
        for _ in 0..20 {
            let cb = generate_codebooks(&cfg, 32, &mut rng).unwrap();
            let (x1, x2) = encode(&cb, &Message::default()).unwrap();
            let (y1, _) = transmit(&cfg.channel, &x1, &x2, &mut rng).unwrap();
            let typical = t1.typical([&cb.u0(0), &cb.u1(0, 0), &cb.u2(0, 0), &x1, &y1]);
            let decoded = decode1(&cb, &t1, &y1).unwrap();
            assert_eq!(decoded, typical.then_some((0, 0, 0)));
        }
    }

    #[test]
    fn zero_epsilon_strong_typicality_rejects_noisy_tuples() {
        let mut cfg = zero_rates();
        cfg.epsilon = 0.0;
        cfg.typicality = Typicality::Strong;
        let rate = sent_tuple_typical_rate(&cfg, 32, 200).unwrap();
        assert!(rate < 0.01, "{rate}");
    }

    #[test]
    fn early_exit_scoring_matches_full_decoding() {
        for rates in [XOR_INTERIOR, Rates::new(0.1, 0.1, 0.2, 0.1, 0.2)] {
            let cfg = SimConfig::xor_fixture(rates, 11);
            let t1 = typicality_tests(&cfg, Receiver::One).unwrap();
            let t2 = typicality_tests(&cfg, Receiver::Two).unwrap();
            for trial in 0..40 {
                let cb = LazyCodebook::new(&cfg, 24, 11, trial).unwrap();
                let stored = cb.materialize(DEFAULT_MAX_SYMBOLS).unwrap();
                let mut rng = crate::rng_from_seed(trial);
                let msg = Message::random(&cb.sizes(), &mut rng);
                let (x1, x2) = encode(&stored, &msg).unwrap();
                let (y1, y2) = transmit(&cfg.channel, &x1, &x2, &mut rng).unwrap();
                let full1 = decode1(&stored, &t1, &y1).unwrap();
                let full2 = decode2(&stored, &t2, &y2).unwrap();
                let fast1 = decoding_fails(&cb, &t1, Receiver::One, &y1, &msg, u64::MAX).unwrap();
                let fast2 = decoding_fails(&cb, &t2, Receiver::Two, &y2, &msg, u64::MAX).unwrap();
                assert_eq!(fast1, full1 != Some(intended(&msg, Receiver::One)));
                assert_eq!(fast2, full2 != Some(intended(&msg, Receiver::Two)));
            }
        }
    }

    #[test]
    fn wrong_nuisance_index_is_not_an_error() {
        // Sender 2's cloud carries no information about Y1 beyond X2, so with
        // two identical cloud words either index witnesses typicality.
        let cfg = SimConfig::xor_fixture(Rates::new(0.0, 0.0, 0.0, 0.1, 0.0), 4);
        let t1 = typicality_tests(&cfg, Receiver::One).unwrap();
        let cb = LazyCodebook::new(&cfg, 16, 4, 0).unwrap();
        let mut stored = cb.materialize(DEFAULT_MAX_SYMBOLS).unwrap();
        assert_eq!(stored.sizes()[3], 3);
        stored.u2[1] = stored.u2[0].clone();
        stored.x2[1] = stored.x2[0].clone();
        let msg = Message::new(0, 0, 0, 1, 0);
        let (x1, x2) = encode(&stored, &msg).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let (y1, _) = transmit(&cfg.channel, &x1, &x2, &mut rng).unwrap();
        if t1.typical([&stored.u0(0), &stored.u1(0, 0), &stored.u2(0, 0), &x1, &y1]) {
            assert_eq!(decode1(&stored, &t1, &y1).unwrap(), Some((0, 0, 0)));
            assert!(!decoding_fails(&stored, &t1, Receiver::One, &y1, &msg, u64::MAX).unwrap());
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = zero_rates();
        cfg.trials = 30;
        let a = estimate_errors(&cfg).unwrap();
        let b = estimate_errors(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("n,trials,pe1,pe2,pe_max,ci_half_width\n8,30,"));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SimConfig::xor_fixture(XOR_INTERIOR, 7);
        assert_eq!(SimConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let mut bad = cfg.clone();
        bad.factorization = InputFactorization::Sicc(CommonFactors::independent(vec![0.5, 0.5], vec![0.5, 0.5]));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wilson_half_width_values() {
        // p = 0.5, n = 100: z/(1+z^2/n) * sqrt(0.0025 + z^2/40000).
        let w = wilson_half_width(0.5, 100);
        assert!((w - 0.0961).abs() < 1e-4, "{w}");
        assert!(wilson_half_width(0.0, 2000) > 0.0);
    }
}
