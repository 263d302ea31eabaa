//! Channel kernels, input factorization families, and deterministic channels.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{compose_factors, Factor, JointPmf, VarId, NORMALIZATION_TOL};

/// Discrete memoryless two-user channel `p(y1, y2 | x1, x2)`.
///
/// The kernel is stored row-major over `(x1, x2, y1, y2)` with zero-based
/// symbols; each `(x1, x2)` row sums to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelFile", into = "ChannelFile")]
pub struct ChannelSpec {
    pub x1_card: usize,
    pub x2_card: usize,
    pub y1_card: usize,
    pub y2_card: usize,
    kernel: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct Alphabets {
    X1: usize,
    X2: usize,
    Y1: usize,
    Y2: usize,
}

#[derive(Clone, Serialize, Deserialize)]
struct ChannelFile {
    alphabets: Alphabets,
    kernel: Vec<f64>,
}

impl TryFrom<ChannelFile> for ChannelSpec {
    type Error = Error;

    fn try_from(f: ChannelFile) -> Result<Self> {
        let a = f.alphabets;
        Self::new(a.X1, a.X2, a.Y1, a.Y2, f.kernel)
    }
}

impl From<ChannelSpec> for ChannelFile {
    fn from(c: ChannelSpec) -> Self {
        Self {
            alphabets: Alphabets {
                X1: c.x1_card,
                X2: c.x2_card,
                Y1: c.y1_card,
                Y2: c.y2_card,
            },
            kernel: c.kernel,
        }
    }
}

/// Per-receiver marginal kernels, row-major over `(x1, x2, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalChannels {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(
        x1_card: usize,
        x2_card: usize,
        y1_card: usize,
        y2_card: usize,
        kernel: Vec<f64>,
    ) -> Result<Self> {
        for (name, card) in [("X1", x1_card), ("X2", x2_card), ("Y1", y1_card), ("Y2", y2_card)] {
            if card == 0 {
                return Err(Error::BadCardinality {
                    name: name.into(),
                    card,
                });
            }
        }
        let row = y1_card * y2_card;
        let expected = x1_card * x2_card * row;
        if kernel.len() != expected {
            return Err(Error::Shape {
                what: "channel kernel".into(),
                expected,
                found: kernel.len(),
            });
        }
        if let Some((index, &value)) = kernel
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::BadEntry {
                what: "channel kernel".into(),
                index,
                value,
            });
        }
        for (r, chunk) in kernel.chunks(row).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    what: format!(
                        "channel kernel row (x1={}, x2={})",
                        r / x2_card,
                        r % x2_card
                    ),
                    row: r,
                    sum,
                });
            }
        }
        Ok(Self {
            x1_card,
            x2_card,
            y1_card,
            y2_card,
            kernel,
        })
    }

    /// Deterministic channel `(y1, y2) = f(x1, x2)`.
    pub fn from_fn(
        x1_card: usize,
        x2_card: usize,
        y1_card: usize,
        y2_card: usize,
        f: impl Fn(usize, usize) -> (usize, usize),
    ) -> Result<Self> {
        let mut kernel = vec![0.0; x1_card * x2_card * y1_card * y2_card];
        for x1 in 0..x1_card {
            for x2 in 0..x2_card {
                let (y1, y2) = f(x1, x2);
                if y1 >= y1_card || y2 >= y2_card {
                    return Err(Error::OutOfAlphabet {
                        map: "channel function".into(),
                        index: x1 * x2_card + x2,
                        value: if y1 >= y1_card { y1 } else { y2 },
                        card: if y1 >= y1_card { y1_card } else { y2_card },
                    });
                }
                kernel[((x1 * x2_card + x2) * y1_card + y1) * y2_card + y2] = 1.0;
            }
        }
        Self::new(x1_card, x2_card, y1_card, y2_card, kernel)
    }

    /// Product channel `p1(y1|x1,x2) p2(y2|x1,x2)` from row-major marginals.
    pub fn from_marginals(
        x1_card: usize,
        x2_card: usize,
        p1: &[f64],
        p2: &[f64],
    ) -> Result<Self> {
        let rows = x1_card * x2_card;
        let y1_card = p1.len() / rows.max(1);
        let y2_card = p2.len() / rows.max(1);
        let mut kernel = Vec::with_capacity(rows * y1_card * y2_card);
        for r in 0..rows {
            for y1 in 0..y1_card {
                for y2 in 0..y2_card {
                    kernel.push(p1[r * y1_card + y1] * p2[r * y2_card + y2]);
                }
            }
        }
        Self::new(x1_card, x2_card, y1_card, y2_card, kernel)
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn prob(&self, x1: usize, x2: usize, y1: usize, y2: usize) -> f64 {
        self.kernel[((x1 * self.x2_card + x2) * self.y1_card + y1) * self.y2_card + y2]
    }

    /// Output distribution for one input pair, indexed `y1 * |Y2| + y2`.
    pub fn row(&self, x1: usize, x2: usize) -> &[f64] {
        let len = self.y1_card * self.y2_card;
        let start = (x1 * self.x2_card + x2) * len;
        &self.kernel[start..start + len]
    }

    /// `p1(y1|x1,x2)` and `p2(y2|x1,x2)`.
    pub fn marginal_channels(&self) -> MarginalChannels {
        let rows = self.x1_card * self.x2_card;
        let mut p1 = vec![0.0; rows * self.y1_card];
        let mut p2 = vec![0.0; rows * self.y2_card];
        for r in 0..rows {
            for y1 in 0..self.y1_card {
                for y2 in 0..self.y2_card {
                    let m = self.kernel[(r * self.y1_card + y1) * self.y2_card + y2];
                    p1[r * self.y1_card + y1] += m;
                    p2[r * self.y2_card + y2] += m;
                }
            }
        }
        MarginalChannels { p1, p2 }
    }

    /// The same channel with the roles of users 1 and 2 exchanged.
    pub fn swapped(&self) -> ChannelSpec {
        let mut kernel = Vec::with_capacity(self.kernel.len());
        for x2 in 0..self.x2_card {
            for x1 in 0..self.x1_card {
                for y2 in 0..self.y2_card {
                    for y1 in 0..self.y1_card {
                        kernel.push(self.prob(x1, x2, y1, y2));
                    }
                }
            }
        }
        ChannelSpec {
            x1_card: self.x2_card,
            x2_card: self.x1_card,
            y1_card: self.y2_card,
            y2_card: self.y1_card,
            kernel,
        }
    }

    /// The kernel as a factor `p(Y1, Y2 | X1, X2)`.
    pub fn factor(&self) -> Factor {
        Factor::new(
            vec![VarId::new("Y1", self.y1_card), VarId::new("Y2", self.y2_card)],
            vec![VarId::new("X1", self.x1_card), VarId::new("X2", self.x2_card)],
            self.kernel.clone(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ChannelFile = serde_json::from_str(text)?;
        f.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Deterministic channel with recoverable interference:
/// `V1 = k1(X1)`, `V2 = k2(X2)`, `Y1 = o1(X1, V2)`, `Y2 = o2(X2, V1)`.
///
/// Construction checks that `v2` is a function of `(y1, x1)` and `v1` a
/// function of `(y2, x2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSpec {
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    /// Indexed `[x1][v2]`.
    pub o1: Vec<Vec<usize>>,
    /// Indexed `[x2][v1]`.
    pub o2: Vec<Vec<usize>>,
}

impl DeterministicSpec {
    pub fn new(k1: Vec<usize>, k2: Vec<usize>, o1: Vec<Vec<usize>>, o2: Vec<Vec<usize>>) -> Result<Self> {
        let d = Self { k1, k2, o1, o2 };
        d.validate()?;
        Ok(d)
    }

    /// Binary XOR channel: `Y1 = X1 ⊕ X2`, `Y2 = X2 ⊕ X1`.
    pub fn binary_xor() -> Self {
        Self {
            k1: vec![0, 1],
            k2: vec![0, 1],
            o1: vec![vec![0, 1], vec![1, 0]],
            o2: vec![vec![0, 1], vec![1, 0]],
        }
    }

    pub fn x1_card(&self) -> usize {
        self.k1.len()
    }

    pub fn x2_card(&self) -> usize {
        self.k2.len()
    }

    pub fn v1_card(&self) -> usize {
        self.o2.first().map_or(0, Vec::len)
    }

    pub fn v2_card(&self) -> usize {
        self.o1.first().map_or(0, Vec::len)
    }

    pub fn y1_card(&self) -> usize {
        self.o1.iter().flatten().max().map_or(1, |m| m + 1)
    }

    pub fn y2_card(&self) -> usize {
        self.o2.iter().flatten().max().map_or(1, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let (x1, x2, v1, v2) = (self.x1_card(), self.x2_card(), self.v1_card(), self.v2_card());
        for (name, card) in [("X1", x1), ("X2", x2), ("V1", v1), ("V2", v2)] {
            if card == 0 {
                return Err(Error::BadCardinality {
                    name: name.into(),
                    card,
                });
            }
        }
        check_map("k1", &self.k1, v1)?;
        check_map("k2", &self.k2, v2)?;
        check_table("o1", &self.o1, x1, v2)?;
        check_table("o2", &self.o2, x2, v1)?;
        check_recoverable(1, &self.o1)?;
        check_recoverable(2, &self.o2)?;
        Ok(())
    }

    /// `h1(y1, x1) = v2`, if some `v2` produces `y1`.
    pub fn h1(&self, y1: usize, x1: usize) -> Option<usize> {
        self.o1[x1].iter().position(|&y| y == y1)
    }

    /// `h2(y2, x2) = v1`.
    pub fn h2(&self, y2: usize, x2: usize) -> Option<usize> {
        self.o2[x2].iter().position(|&y| y == y2)
    }

    pub fn outputs(&self, x1: usize, x2: usize) -> (usize, usize) {
        let v1 = self.k1[x1];
        let v2 = self.k2[x2];
        (self.o1[x1][v2], self.o2[x2][v1])
    }

    /// The 0/1 kernel realizing the deterministic maps.
    pub fn lift(&self) -> Result<ChannelSpec> {
        self.validate()?;
        ChannelSpec::from_fn(
            self.x1_card(),
            self.x2_card(),
            self.y1_card(),
            self.y2_card(),
            |x1, x2| self.outputs(x1, x2),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Lifts a deterministic spec to its kernel, rejecting unrecoverable interference.
pub fn lift_deterministic(d: &DeterministicSpec) -> Result<ChannelSpec> {
    d.lift()
}

fn check_map(name: &str, map: &[usize], card: usize) -> Result<()> {
    match map.iter().enumerate().find(|(_, &v)| v >= card) {
        Some((index, &value)) => Err(Error::OutOfAlphabet {
            map: name.into(),
            index,
            value,
            card,
        }),
        None => Ok(()),
    }
}

fn check_table(name: &str, table: &[Vec<usize>], rows: usize, cols: usize) -> Result<()> {
    if table.len() != rows {
        return Err(Error::Shape {
            what: name.into(),
            expected: rows,
            found: table.len(),
        });
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Shape {
                what: format!("{name} row {i}"),
                expected: cols,
                found: row.len(),
            });
        }
    }
    Ok(())
}

fn check_recoverable(receiver: u8, table: &[Vec<usize>]) -> Result<()> {
    for (input, row) in table.iter().enumerate() {
        for (second, y) in row.iter().enumerate() {
            if let Some(first) = row[..second].iter().position(|z| z == y) {
                return Err(Error::NotRecoverable {
                    receiver,
                    input,
                    first,
                    second,
                });
            }
        }
    }
    Ok(())
}

/// Which product form an input distribution takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `p(u0) p(u1|u0) p(u2|u0) p(x1|u1,u0) p(x2|u2,u0)`.
    General,
    /// The general form with the time-sharing variable `Q` in place of `U0`.
    Timeshare,
    /// `p(u0) p(x1|u0) p(x2|u0)`, used for strong interference.
    Sicc,
    /// Arbitrary `p(x1, u2, x2)`, written as `p(x1) p(u2|x1) p(x2|x1,u2)`.
    Aicc,
    /// `p(v0) p(x1|v0) p(x2|v0)` for deterministic channels.
    Dicc,
}

/// The three-layer factor tables shared by the general and time-sharing families.
///
/// `x1_given_u0u1` has one row per `(u0, u1)`, indexed `u0 * |U1| + u1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredFactors {
    #[serde(alias = "q")]
    pub u0: Vec<f64>,
    #[serde(alias = "u1_given_q")]
    pub u1_given_u0: Vec<Vec<f64>>,
    #[serde(alias = "u2_given_q")]
    pub u2_given_u0: Vec<Vec<f64>>,
    #[serde(alias = "x1_given_qu1")]
    pub x1_given_u0u1: Vec<Vec<f64>>,
    #[serde(alias = "x2_given_qu2")]
    pub x2_given_u0u2: Vec<Vec<f64>>,
}

/// A common variable and two conditionally independent inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonFactors {
    #[serde(alias = "u0", alias = "v0")]
    pub common: Vec<f64>,
    #[serde(alias = "x1_given_u0", alias = "x1_given_v0")]
    pub x1_given_common: Vec<Vec<f64>>,
    #[serde(alias = "x2_given_u0", alias = "x2_given_v0")]
    pub x2_given_common: Vec<Vec<f64>>,
}

/// Chain-rule factors of an arbitrary `p(x1, u2, x2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiccFactors {
    pub x1: Vec<f64>,
    pub u2_given_x1: Vec<Vec<f64>>,
    /// One row per `(x1, u2)`, indexed `x1 * |U2| + u2`.
    pub x2_given_x1u2: Vec<Vec<f64>>,
}

/// An input distribution from one of the factorization families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InputFactorization {
    General(LayeredFactors),
    Timeshare(LayeredFactors),
    Sicc(CommonFactors),
    Aicc(AiccFactors),
    Dicc(CommonFactors),
}

/// Auxiliary alphabet sizes for sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxCards {
    pub u0: usize,
    pub u1: usize,
    pub u2: usize,
}

impl Default for AuxCards {
    fn default() -> Self {
        Self { u0: 2, u1: 2, u2: 2 }
    }
}

fn flat(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn width(rows: &[Vec<f64>]) -> usize {
    rows.first().map_or(0, Vec::len)
}

fn check_rows(what: &str, rows: &[Vec<f64>], count: usize, len: usize) -> Result<()> {
    if rows.len() != count {
        return Err(Error::Shape {
            what: what.into(),
            expected: count,
            found: rows.len(),
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != len {
            return Err(Error::Shape {
                what: format!("{what} row {i}"),
                expected: len,
                found: r.len(),
            });
        }
    }
    Ok(())
}

impl LayeredFactors {
    fn cards(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.u0.len(),
            width(&self.u1_given_u0),
            width(&self.u2_given_u0),
            width(&self.x1_given_u0u1),
            width(&self.x2_given_u0u2),
        )
    }

    fn check_shapes(&self) -> Result<()> {
        let (u0, u1, u2, x1, x2) = self.cards();
        check_rows("u1_given_u0", &self.u1_given_u0, u0, u1)?;
        check_rows("u2_given_u0", &self.u2_given_u0, u0, u2)?;
        check_rows("x1_given_u0u1", &self.x1_given_u0u1, u0 * u1, x1)?;
        check_rows("x2_given_u0u2", &self.x2_given_u0u2, u0 * u2, x2)
    }

    fn factors(&self, common: &str) -> Result<Vec<Factor>> {
        self.check_shapes()?;
        let (u0, u1, u2, x1, x2) = self.cards();
        let (c, a1, a2) = (VarId::new(common, u0), VarId::new("U1", u1), VarId::new("U2", u2));
        Ok(vec![
            Factor::marginal(c.clone(), self.u0.clone()),
            Factor::conditional(a1.clone(), vec![c.clone()], flat(&self.u1_given_u0)),
            Factor::conditional(a2.clone(), vec![c.clone()], flat(&self.u2_given_u0)),
            Factor::conditional(
                VarId::new("X1", x1),
                vec![c.clone(), a1],
                flat(&self.x1_given_u0u1),
            ),
            Factor::conditional(VarId::new("X2", x2), vec![c, a2], flat(&self.x2_given_u0u2)),
        ])
    }

    /// Independent flat-Dirichlet rows.
    pub fn random(cards: AuxCards, x1: usize, x2: usize, rng: &mut impl Rng) -> Self {
        Self {
            u0: dirichlet_row(cards.u0, rng),
            u1_given_u0: dirichlet_rows(cards.u0, cards.u1, rng),
            u2_given_u0: dirichlet_rows(cards.u0, cards.u2, rng),
            x1_given_u0u1: dirichlet_rows(cards.u0 * cards.u1, x1, rng),
            x2_given_u0u2: dirichlet_rows(cards.u0 * cards.u2, x2, rng),
        }
    }
}

impl CommonFactors {
    fn check_shapes(&self) -> Result<()> {
        let c = self.common.len();
        check_rows("x1_given_common", &self.x1_given_common, c, width(&self.x1_given_common))?;
        check_rows("x2_given_common", &self.x2_given_common, c, width(&self.x2_given_common))
    }

    fn factors(&self, common: &str) -> Result<Vec<Factor>> {
        self.check_shapes()?;
        let c = VarId::new(common, self.common.len());
        Ok(vec![
            Factor::marginal(c.clone(), self.common.clone()),
            Factor::conditional(
                VarId::new("X1", width(&self.x1_given_common)),
                vec![c.clone()],
                flat(&self.x1_given_common),
            ),
            Factor::conditional(
                VarId::new("X2", width(&self.x2_given_common)),
                vec![c],
                flat(&self.x2_given_common),
            ),
        ])
    }

    pub fn random(common: usize, x1: usize, x2: usize, rng: &mut impl Rng) -> Self {
        Self {
            common: dirichlet_row(common, rng),
            x1_given_common: dirichlet_rows(common, x1, rng),
            x2_given_common: dirichlet_rows(common, x2, rng),
        }
    }

    /// Degenerate common variable with the given input marginals.
    pub fn independent(x1: Vec<f64>, x2: Vec<f64>) -> Self {
        Self {
            common: vec![1.0],
            x1_given_common: vec![x1],
            x2_given_common: vec![x2],
        }
    }
}

impl AiccFactors {
    fn factors(&self) -> Result<Vec<Factor>> {
        let (x1, u2, x2) = (self.x1.len(), width(&self.u2_given_x1), width(&self.x2_given_x1u2));
        check_rows("u2_given_x1", &self.u2_given_x1, x1, u2)?;
        check_rows("x2_given_x1u2", &self.x2_given_x1u2, x1 * u2, x2)?;
        let (vx1, vu2) = (VarId::new("X1", x1), VarId::new("U2", u2));
        Ok(vec![
            Factor::marginal(vx1.clone(), self.x1.clone()),
            Factor::conditional(vu2.clone(), vec![vx1.clone()], flat(&self.u2_given_x1)),
            Factor::conditional(VarId::new("X2", x2), vec![vx1, vu2], flat(&self.x2_given_x1u2)),
        ])
    }

    pub fn random(u2: usize, x1: usize, x2: usize, rng: &mut impl Rng) -> Self {
        Self {
            x1: dirichlet_row(x1, rng),
            u2_given_x1: dirichlet_rows(x1, u2, rng),
            x2_given_x1u2: dirichlet_rows(x1 * u2, x2, rng),
        }
    }
}

impl InputFactorization {
    pub fn family(&self) -> Family {
        match self {
            Self::General(_) => Family::General,
            Self::Timeshare(_) => Family::Timeshare,
            Self::Sicc(_) => Family::Sicc,
            Self::Aicc(_) => Family::Aicc,
            Self::Dicc(_) => Family::Dicc,
        }
    }

    /// Factors over the family's variable names (`U0`/`Q`/`V0`, `U1`, `U2`,
    /// `X1`, `X2`), without the channel.
    pub fn factors(&self) -> Result<Vec<Factor>> {
        match self {
            Self::General(f) => f.factors("U0"),
            Self::Timeshare(f) => f.factors("Q"),
            Self::Sicc(f) => f.factors("U0"),
            Self::Aicc(f) => f.factors(),
            Self::Dicc(f) => f.factors("V0"),
        }
    }

    /// Input distribution alone.
    pub fn input_joint(&self) -> Result<JointPmf> {
        compose_factors(&self.factors()?)
    }

    pub fn input_cards(&self) -> Result<(usize, usize)> {
        let j = self.input_joint()?;
        Ok((j.card("X1")?, j.card("X2")?))
    }

    pub fn validate(&self) -> Result<()> {
        self.input_joint().map(|_| ())
    }

    /// Samples a random member of `family` with flat-Dirichlet rows.
    pub fn random(family: Family, cards: AuxCards, x1: usize, x2: usize, rng: &mut impl Rng) -> Self {
        match family {
            Family::General => Self::General(LayeredFactors::random(cards, x1, x2, rng)),
            Family::Timeshare => Self::Timeshare(LayeredFactors::random(cards, x1, x2, rng)),
            Family::Sicc => Self::Sicc(CommonFactors::random(cards.u0, x1, x2, rng)),
            Family::Aicc => Self::Aicc(AiccFactors::random(cards.u2, x1, x2, rng)),
            Family::Dicc => Self::Dicc(CommonFactors::random(cards.u0, x1, x2, rng)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Joint distribution of the family's variables together with `Y1, Y2`.
pub fn induce_joint(f: &InputFactorization, ch: &ChannelSpec) -> Result<JointPmf> {
    let mut factors = f.factors()?;
    let (x1, x2) = f.input_cards()?;
    if x1 != ch.x1_card {
        return Err(Error::AlphabetMismatch {
            what: "X1".into(),
            expected: ch.x1_card,
            found: x1,
        });
    }
    if x2 != ch.x2_card {
        return Err(Error::AlphabetMismatch {
            what: "X2".into(),
            expected: ch.x2_card,
            found: x2,
        });
    }
    factors.push(ch.factor());
    compose_factors(&factors)
}

/// Marginal kernels of each receiver.
pub fn marginal_channels(ch: &ChannelSpec) -> MarginalChannels {
    ch.marginal_channels()
}

/// Both strong-interference slacks for one distribution, in bits.
///
/// `slack_1 = I(X1; Y2 | X2 U0) - I(X1; Y1 | X2 U0)` and symmetrically for
/// user 2; the conditions hold when both are nonnegative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongInterference {
    pub holds: bool,
    pub slack_1: f64,
    pub slack_2: f64,
}

/// Slack below which a strong-interference condition counts as violated.
pub const SI_TOL: f64 = 1e-12;

pub fn check_strong_interference(
    ch: &ChannelSpec,
    f: &InputFactorization,
) -> Result<StrongInterference> {
    if f.family() != Family::Sicc {
        return Err(Error::Config(format!(
            "strong interference is checked on the sicc family, got {:?}",
            f.family()
        )));
    }
    let p = induce_joint(f, ch)?;
    let slack_1 = p.cond_mutual_info(&["X1"], &["Y2"], &["X2", "U0"])?
        - p.cond_mutual_info(&["X1"], &["Y1"], &["X2", "U0"])?;
    let slack_2 = p.cond_mutual_info(&["X2"], &["Y1"], &["X1", "U0"])?
        - p.cond_mutual_info(&["X2"], &["Y2"], &["X1", "U0"])?;
    Ok(StrongInterference {
        holds: slack_1 >= -SI_TOL && slack_2 >= -SI_TOL,
        slack_1,
        slack_2,
    })
}

/// How to sample the strong-interference family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub u0_card: usize,
    /// Simplex grid step for every factor row; `None` skips the grid.
    pub grid_step: Option<f64>,
    pub random_samples: usize,
    pub seed: u64,
    /// Upper bound on grid size.
    pub max_grid: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            u0_card: 2,
            grid_step: Some(0.25),
            random_samples: 200,
            seed: 0,
            max_grid: 1 << 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub samples: usize,
    pub holds: bool,
    pub min_slack_1: f64,
    pub min_slack_2: f64,
    /// A distribution attaining the smallest slack.
    pub worst: Option<InputFactorization>,
}

/// Checks strong interference on a grid of distributions plus random draws.
pub fn strong_interference_sweep(ch: &ChannelSpec, cfg: &SweepConfig) -> Result<SweepReport> {
    let mut candidates: Vec<InputFactorization> = Vec::new();
    if let Some(step) = cfg.grid_step {
        let u0 = simplex_grid(cfg.u0_card, step)?;
        let x1 = simplex_grid(ch.x1_card, step)?;
        let x2 = simplex_grid(ch.x2_card, step)?;
        let total = u0.len()
            .saturating_mul(x1.len().saturating_pow(cfg.u0_card as u32))
            .saturating_mul(x2.len().saturating_pow(cfg.u0_card as u32));
        if total > cfg.max_grid {
            return Err(Error::ResourceCap(format!(
                "strong-interference grid has {total} points (cap {})",
                cfg.max_grid
            )));
        }
        let mut choice = vec![u0.len()];
        choice.extend(std::iter::repeat_n(x1.len(), cfg.u0_card));
        choice.extend(std::iter::repeat_n(x2.len(), cfg.u0_card));
        let mut odo = crate::prob::Odometer::new(&choice);
        while let Some(d) = odo.current() {
            let k = cfg.u0_card;
            candidates.push(InputFactorization::Sicc(CommonFactors {
                common: u0[d[0]].clone(),
                x1_given_common: d[1..1 + k].iter().map(|&i| x1[i].clone()).collect(),
                x2_given_common: d[1 + k..].iter().map(|&i| x2[i].clone()).collect(),
            }));
            odo.advance();
        }
    }
    let mut rng = crate::rng_from_seed(cfg.seed);
    for _ in 0..cfg.random_samples {
        candidates.push(InputFactorization::Sicc(CommonFactors::random(
            cfg.u0_card,
            ch.x1_card,
            ch.x2_card,
            &mut rng,
        )));
    }
    let results: Vec<StrongInterference> = candidates
        .par_iter()
        .map(|f| check_strong_interference(ch, f))
        .collect::<Result<_>>()?;
    let mut report = SweepReport {
        samples: results.len(),
        holds: true,
        min_slack_1: f64::INFINITY,
        min_slack_2: f64::INFINITY,
        worst: None,
    };
    let mut worst = f64::INFINITY;
    for (f, r) in candidates.iter().zip(&results) {
        report.holds &= r.holds;
        report.min_slack_1 = report.min_slack_1.min(r.slack_1);
        report.min_slack_2 = report.min_slack_2.min(r.slack_2);
        let m = r.slack_1.min(r.slack_2);
        if m < worst {
            worst = m;
            report.worst = Some(f.clone());
        }
    }
    Ok(report)
}

/// All probability vectors of length `card` whose entries are multiples of `step`.
pub fn simplex_grid(card: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Config(format!("simplex step {step} not in (0, 1]")));
    }
    let units = (1.0 / step).round() as usize;
    if ((units as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("simplex step {step} does not divide 1")));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(card);
    compositions(units, card, &mut current, &mut out);
    Ok(out
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / units as f64).collect())
        .collect())
}

fn compositions(left: usize, parts: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        current.push(left);
        out.push(current.clone());
        current.pop();
        return;
    }
    for k in 0..=left {
        current.push(k);
        compositions(left - k, parts - 1, current, out);
        current.pop();
    }
}

/// Uniform draw from the probability simplex.
pub fn dirichlet_row(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let draws: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    let mut row: Vec<f64> = draws.iter().map(|d| d / sum).collect();
    // Push rounding residue into the largest entry so the row sums to 1.
    let residue = 1.0 - row.iter().sum::<f64>();
    let (imax, _) = row
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    row[imax] += residue;
    row
}

pub fn dirichlet_rows(count: usize, len: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..count).map(|_| dirichlet_row(len, rng)).collect()
}

/// Random channel kernel with flat-Dirichlet rows.
pub fn random_channel(
    x1: usize,
    x2: usize,
    y1: usize,
    y2: usize,
    rng: &mut impl Rng,
) -> ChannelSpec {
    let kernel = flat(&dirichlet_rows(x1 * x2, y1 * y2, rng));
    ChannelSpec::new(x1, x2, y1, y2, kernel).expect("dirichlet rows are normalized")
}
