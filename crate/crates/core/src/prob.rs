//! Exact finite-alphabet probability tables and Shannon measures.
//!
//! A [`JointPmf`] is a dense table over the cartesian product of a list of
//! named finite variables, stored row-major with the first variable most
//! significant. All information measures are in bits, with `0 log 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total mass and on conditional rows.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Mutual information values in `(-MI_CLAMP, 0)` are reported as zero.
pub const MI_CLAMP: f64 = 1e-12;

/// A named finite random variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarId {
    pub name: String,
    pub card: usize,
}

impl VarId {
    pub fn new(name: impl Into<String>, card: usize) -> Self {
        Self {
            name: name.into(),
            card,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.card == 0 {
            return Err(Error::BadCardinality {
                name: self.name.clone(),
                card: self.card,
            });
        }
        Ok(())
    }
}

/// Mixed-radix counter over the cells of a table.
pub(crate) struct Odometer {
    cards: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub(crate) fn new(cards: &[usize]) -> Self {
        Self {
            cards: cards.to_vec(),
            digits: vec![0; cards.len()],
            done: cards.iter().any(|&c| c == 0),
        }
    }

    pub(crate) fn current(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.digits.as_slice())
    }

    pub(crate) fn advance(&mut self) {
        for pos in (0..self.cards.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < self.cards[pos] {
                return;
            }
            self.digits[pos] = 0;
        }
        self.done = true;
    }
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![1; cards.len()];
    for pos in (0..cards.len().saturating_sub(1)).rev() {
        out[pos] = out[pos + 1] * cards[pos + 1];
    }
    out
}

/// Joint probability mass function over an ordered list of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    vars: Vec<VarId>,
    mass: Vec<f64>,
}

impl JointPmf {
    /// Builds a pmf, checking shape, nonnegativity and normalization.
    pub fn new(vars: Vec<VarId>, mass: Vec<f64>) -> Result<Self> {
        check_vars(&vars)?;
        let size: usize = vars.iter().map(|v| v.card).product();
        if mass.len() != size {
            return Err(Error::Shape {
                what: "joint pmf".into(),
                expected: size,
                found: mass.len(),
            });
        }
        if let Some((index, &value)) = mass
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::BadEntry {
                what: "joint pmf".into(),
                index,
                value,
            });
        }
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                what: "joint pmf".into(),
                row: 0,
                sum,
            });
        }
        Ok(Self { vars, mass })
    }

    pub fn uniform(vars: Vec<VarId>) -> Result<Self> {
        check_vars(&vars)?;
        let size: usize = vars.iter().map(|v| v.card).product();
        Self::new(vars, vec![1.0 / size as f64; size])
    }

    /// Point mass at the given assignment.
    pub fn point_mass(vars: Vec<VarId>, at: &[usize]) -> Result<Self> {
        check_vars(&vars)?;
        let size: usize = vars.iter().map(|v| v.card).product();
        let cards: Vec<usize> = vars.iter().map(|v| v.card).collect();
        if at.len() != cards.len() || at.iter().zip(&cards).any(|(a, c)| a >= c) {
            return Err(Error::Shape {
                what: "point mass assignment".into(),
                expected: cards.len(),
                found: at.len(),
            });
        }
        let flat: usize = at.iter().zip(strides(&cards)).map(|(a, s)| a * s).sum();
        let mut mass = vec![0.0; size];
        mass[flat] = 1.0;
        Self::new(vars, mass)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.card).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVar(name.to_string()))
    }

    pub fn card(&self, name: &str) -> Result<usize> {
        Ok(self.vars[self.position(name)?].card)
    }

    pub fn has(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    /// Probability of a full assignment (in variable order).
    pub fn prob(&self, assignment: &[usize]) -> f64 {
        let flat: usize = assignment
            .iter()
            .zip(strides(&self.cards()))
            .map(|(a, s)| a * s)
            .sum();
        self.mass[flat]
    }

    /// Visits every cell as `(assignment, mass)`.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut odo = Odometer::new(&self.cards());
        let mut flat = 0;
        while let Some(digits) = odo.current() {
            f(digits, self.mass[flat]);
            flat += 1;
            odo.advance();
        }
    }

    /// Resolves a variable set to sorted, deduplicated positions.
    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = names
            .iter()
            .map(|n| self.position(n))
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Sums out every variable not in `keep`. Kept variables retain their
    /// original relative order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        let keep_pos = self.positions(keep)?;
        let vars: Vec<VarId> = keep_pos.iter().map(|&p| self.vars[p].clone()).collect();
        let mass = self.marginal_table(&keep_pos);
        Ok(JointPmf { vars, mass })
    }

    fn marginal_table(&self, keep_pos: &[usize]) -> Vec<f64> {
        let keep_cards: Vec<usize> = keep_pos.iter().map(|&p| self.vars[p].card).collect();
        let keep_strides = strides(&keep_cards);
        let size: usize = keep_cards.iter().product();
        let mut out = vec![0.0; size];
        self.for_each(|digits, m| {
            let idx: usize = keep_pos
                .iter()
                .zip(&keep_strides)
                .map(|(&p, s)| digits[p] * s)
                .sum();
            out[idx] += m;
        });
        out
    }

    /// Entropy in bits of the marginal on `vars`. The empty set has entropy 0.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        let pos = self.positions(vars)?;
        Ok(entropy_of(&self.marginal_table(&pos)))
    }

    /// H(A | C) = H(AC) - H(C).
    pub fn cond_entropy(&self, a: &[&str], given: &[&str]) -> Result<f64> {
        let joint: Vec<&str> = a.iter().chain(given).copied().collect();
        let h = self.entropy(&joint)? - self.entropy(given)?;
        Ok(if h < 0.0 && h > -MI_CLAMP { 0.0 } else { h })
    }

    /// I(A; B | C) in bits. `c` may be empty; the three groups must be disjoint.
    pub fn cond_mutual_info(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let pa = self.positions(a)?;
        let pb = self.positions(b)?;
        let pc = self.positions(c)?;
        for (x, y) in [(&pa, &pb), (&pa, &pc), (&pb, &pc)] {
            if let Some(p) = x.iter().find(|p| y.contains(p)) {
                return Err(Error::OverlappingGroups(self.vars[*p].name.clone()));
            }
        }
        let union = |parts: &[&Vec<usize>]| {
            let mut v: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
            v.sort_unstable();
            v
        };
        let h = |pos: Vec<usize>| entropy_of(&self.marginal_table(&pos));
        let value = h(union(&[&pa, &pc])) + h(union(&[&pb, &pc]))
            - h(union(&[&pa, &pb, &pc]))
            - h(pc.clone());
        Ok(clamp_mi(value))
    }

    /// Appends a variable that is a deterministic function of the existing ones.
    pub fn with_function(
        &self,
        var: VarId,
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<JointPmf> {
        var.validate()?;
        if self.has(&var.name) {
            return Err(Error::DuplicateVar(var.name));
        }
        let card = var.card;
        let mut mass = Vec::with_capacity(self.mass.len() * card);
        let mut failure = None;
        self.for_each(|digits, m| {
            let value = f(digits);
            if value >= card && failure.is_none() {
                failure = Some(value);
            }
            mass.extend((0..card).map(|v| if v == value { m } else { 0.0 }));
        });
        if let Some(value) = failure {
            return Err(Error::OutOfAlphabet {
                map: format!("function defining `{}`", var.name),
                index: 0,
                value,
                card,
            });
        }
        let mut vars = self.vars.clone();
        vars.push(var);
        Ok(JointPmf { vars, mass })
    }

    /// Appends an exact copy of an existing variable under a new name.
    pub fn with_copy(&self, source: &str, name: &str) -> Result<JointPmf> {
        let pos = self.position(source)?;
        let card = self.vars[pos].card;
        self.with_function(VarId::new(name, card), |d| d[pos])
    }

    /// Renames variables; names not listed are kept.
    pub fn renamed(&self, map: &[(&str, &str)]) -> Result<JointPmf> {
        for (from, _) in map {
            self.position(from)?;
        }
        let vars: Vec<VarId> = self
            .vars
            .iter()
            .map(|v| {
                let name = map
                    .iter()
                    .find(|(from, _)| *from == v.name)
                    .map(|(_, to)| to.to_string())
                    .unwrap_or_else(|| v.name.clone());
                VarId::new(name, v.card)
            })
            .collect();
        check_vars(&vars)?;
        Ok(JointPmf {
            vars,
            mass: self.mass.clone(),
        })
    }

    /// Total mass; 1 up to rounding for every pmf this module produces.
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

fn check_vars(vars: &[VarId]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        v.validate()?;
        if vars[..i].iter().any(|w| w.name == v.name) {
            return Err(Error::DuplicateVar(v.name.clone()));
        }
    }
    Ok(())
}

pub(crate) fn clamp_mi(value: f64) -> f64 {
    if value < 0.0 && value > -MI_CLAMP {
        0.0
    } else {
        value
    }
}

/// Entropy in bits of a (possibly unnormalized-by-rounding) probability vector.
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// One conditional factor `p(targets | given)` in a product-form joint.
///
/// The table is row-major over `(given..., targets...)`: each row is indexed by
/// an assignment of the conditioning variables and sums to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub targets: Vec<VarId>,
    pub given: Vec<VarId>,
    pub table: Vec<f64>,
}

impl Factor {
    pub fn new(targets: Vec<VarId>, given: Vec<VarId>, table: Vec<f64>) -> Self {
        Self {
            targets,
            given,
            table,
        }
    }

    /// Unconditional single-variable factor.
    pub fn marginal(target: VarId, table: Vec<f64>) -> Self {
        Self::new(vec![target], Vec::new(), table)
    }

    pub fn conditional(target: VarId, given: Vec<VarId>, table: Vec<f64>) -> Self {
        Self::new(vec![target], given, table)
    }

    fn label(&self) -> String {
        let t: Vec<&str> = self.targets.iter().map(|v| v.name.as_str()).collect();
        let g: Vec<&str> = self.given.iter().map(|v| v.name.as_str()).collect();
        if g.is_empty() {
            format!("p({})", t.join(","))
        } else {
            format!("p({}|{})", t.join(","), g.join(","))
        }
    }

    fn row_len(&self) -> usize {
        self.targets.iter().map(|v| v.card).product()
    }

    fn rows(&self) -> usize {
        self.given.iter().map(|v| v.card).product()
    }

    /// Checks shape, nonnegativity and per-row normalization.
    pub fn validate(&self) -> Result<()> {
        check_vars(&self.targets)?;
        check_vars(&self.given)?;
        let what = self.label();
        let expected = self.rows() * self.row_len();
        if self.table.len() != expected {
            return Err(Error::Shape {
                what,
                expected,
                found: self.table.len(),
            });
        }
        if let Some((index, &value)) = self
            .table
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < 0.0)
        {
            return Err(Error::BadEntry { what, index, value });
        }
        for (row, chunk) in self.table.chunks(self.row_len()).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized { what, row, sum });
            }
        }
        Ok(())
    }
}

/// Multiplies conditional factors into a joint pmf.
///
/// Factors are applied in order; every conditioning variable must be a target
/// of an earlier factor. The joint's variable order is the order in which
/// targets first appear.
pub fn compose_factors(factors: &[Factor]) -> Result<JointPmf> {
    let mut vars: Vec<VarId> = Vec::new();
    for f in factors {
        f.validate()?;
        for g in &f.given {
            match vars.iter().find(|v| v.name == g.name) {
                None => {
                    return Err(Error::CyclicFactor {
                        target: f.targets[0].name.clone(),
                        given: g.name.clone(),
                    })
                }
                Some(v) if v.card != g.card => {
                    return Err(Error::AlphabetMismatch {
                        what: format!("`{}` in {}", g.name, f.label()),
                        expected: v.card,
                        found: g.card,
                    })
                }
                Some(_) => {}
            }
        }
        for t in &f.targets {
            if vars.iter().any(|v| v.name == t.name) {
                return Err(Error::DuplicateVar(t.name.clone()));
            }
            vars.push(t.clone());
        }
    }
    if vars.is_empty() {
        return Err(Error::Config("no factors to compose".into()));
    }

    // Per factor: positions of its given and target variables in the joint.
    let lookup = |list: &[VarId]| -> Vec<usize> {
        list.iter()
            .map(|v| vars.iter().position(|w| w.name == v.name).unwrap())
            .collect()
    };
    let plans: Vec<(Vec<usize>, Vec<usize>)> = factors
        .iter()
        .map(|f| {
            let mut pos = lookup(&f.given);
            pos.extend(lookup(&f.targets));
            let cards: Vec<usize> = f.given.iter().chain(&f.targets).map(|v| v.card).collect();
            (pos, strides(&cards))
        })
        .collect();

    let cards: Vec<usize> = vars.iter().map(|v| v.card).collect();
    let size: usize = cards.iter().product();
    let mut mass = Vec::with_capacity(size);
    let mut odo = Odometer::new(&cards);
    while let Some(digits) = odo.current() {
        let mut m = 1.0;
        for (f, (pos, st)) in factors.iter().zip(&plans) {
            let idx: usize = pos.iter().zip(st).map(|(&p, s)| digits[p] * s).sum();
            m *= f.table[idx];
            if m == 0.0 {
                break;
            }
        }
        mass.push(m);
        odo.advance();
    }
    Ok(JointPmf { vars, mass })
}
