//! Rate regions as inequality systems over an induced joint distribution.
//!
//! Every constructor reads a [`JointPmf`] with the variable names of its
//! family: `U0 U1 U2 X1 X2 Y1 Y2` for the general layered scheme, `Q` in place
//! of `U0` when there is no common message, `X1 U2 X2 Y1 Y2` for the
//! asymmetric case and `V0 X1 X2 Y1 Y2` for deterministic channels. Row labels
//! spell out the inequality.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    induce_joint, AuxCards, ChannelSpec, DeterministicSpec, Family, InputFactorization,
    LayeredFactors,
};
use crate::error::{Error, Result};
use crate::polytope::{IneqSystem, RatePoint, Row};
use crate::prob::JointPmf;

/// Largest conditional-independence residual accepted as a valid factorization.
pub const FACTORIZATION_TOL: f64 = 1e-9;

/// Coordinates of the five-message region.
pub const SPLIT_COORDS: [&str; 5] = ["R0", "R12", "R11", "R21", "R22"];
/// Coordinates of rate triples.
pub const TRIPLE_COORDS: [&str; 3] = ["R0", "R1", "R2"];
/// Split coordinates without a common message.
pub const CMG_COORDS: [&str; 4] = ["R12", "R11", "R21", "R22"];

/// Which region to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// Five-message region over `(R0, R12, R11, R21, R22)`.
    ImplicitM,
    /// Thirteen-row region over `(R0, R1, R2)`.
    Explicit,
    /// Strong-interference region.
    Sicc,
    /// The five-message region with `U1 = X1`, `U2 = X2`, in rate triples.
    SiccReduced,
    /// Split region without common information.
    Cmg,
    /// Asymmetric five-message region over `(R0, R21, R22)`.
    AiccM,
    /// Asymmetric region over `(R0, R2)`.
    Aicc,
    /// Deterministic-channel region of conditional entropies.
    Dicc,
}

impl RegionKind {
    pub const ALL: [RegionKind; 8] = [
        Self::ImplicitM,
        Self::Explicit,
        Self::Sicc,
        Self::SiccReduced,
        Self::Cmg,
        Self::AiccM,
        Self::Aicc,
        Self::Dicc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ImplicitM => "implicit",
            Self::Explicit => "explicit",
            Self::Sicc => "sicc",
            Self::SiccReduced => "sicc-reduced",
            Self::Cmg => "cmg",
            Self::AiccM => "aicc-m",
            Self::Aicc => "aicc",
            Self::Dicc => "dicc",
        }
    }

    /// The family a sampled distribution must come from.
    pub fn family(self) -> Family {
        match self {
            Self::ImplicitM | Self::Explicit => Family::General,
            Self::Sicc | Self::SiccReduced => Family::Sicc,
            Self::Cmg => Family::Timeshare,
            Self::AiccM | Self::Aicc => Family::Aicc,
            Self::Dicc => Family::Dicc,
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "implicit-m" | "implicit" => Some(Self::ImplicitM),
            "explicit" => Some(Self::Explicit),
            "sicc" => Some(Self::Sicc),
            "sicc-reduced" => Some(Self::SiccReduced),
            "cmg" => Some(Self::Cmg),
            "aicc-m" => Some(Self::AiccM),
            "aicc" => Some(Self::Aicc),
            "dicc" => Some(Self::Dicc),
            _ => None,
        };
        alias.ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Parse(format!("unknown region kind `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// An information term: `I(A;B|C)` or, with `b` empty, `H(A|C)`.
#[derive(Clone, Debug, PartialEq)]
struct Term {
    a: Vec<&'static str>,
    b: Vec<&'static str>,
    c: Vec<&'static str>,
}

fn mi(a: &'static str, b: &'static str, c: &'static str) -> Term {
    Term {
        a: a.split_whitespace().collect(),
        b: b.split_whitespace().collect(),
        c: c.split_whitespace().collect(),
    }
}

fn h(a: &'static str, c: &'static str) -> Term {
    Term {
        a: a.split_whitespace().collect(),
        b: Vec::new(),
        c: c.split_whitespace().collect(),
    }
}

impl Term {
    fn eval(&self, p: &JointPmf) -> Result<f64> {
        if self.b.is_empty() {
            p.cond_entropy(&self.a, &self.c)
        } else {
            p.cond_mutual_info(&self.a, &self.b, &self.c)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cond = if self.c.is_empty() {
            String::new()
        } else {
            format!("|{}", self.c.concat())
        };
        if self.b.is_empty() {
            write!(f, "H({}{cond})", self.a.concat())
        } else {
            write!(f, "I({};{}{cond})", self.a.concat(), self.b.concat())
        }
    }
}

fn lhs_text(coords: &[&str], coeffs: &[f64]) -> String {
    let mut out = String::new();
    for (name, &c) in coords.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        if !out.is_empty() {
            out.push('+');
        }
        if c != 1.0 {
            out.push_str(&crate::num::fmt_num(c));
        }
        out.push_str(name);
    }
    out
}

/// One row whose rhs is a sum of information terms.
fn bound(p: &JointPmf, coords: &[&str], coeffs: &[f64], terms: &[Term]) -> Result<Row> {
    let mut rhs = 0.0;
    for t in terms {
        rhs += t.eval(p)?;
    }
    let text: Vec<String> = terms.iter().map(Term::to_string).collect();
    Ok(Row::labeled(
        coeffs.to_vec(),
        rhs,
        format!("{} <= {}", lhs_text(coords, coeffs), text.join(" + ")),
    ))
}

fn system(coords: &[&str], rows: Vec<Row>) -> Result<IneqSystem> {
    IneqSystem::with_rows(coords, rows)
}

/// Checks that `p` factors as the layered family with common variable `common`.
pub fn validate_layered(p: &JointPmf, common: &str) -> Result<()> {
    let u0 = [common];
    let u0u1 = [common, "U1"];
    let u0u2 = [common, "U2"];
    let checks: [(&[&str], &[&str], &[&str]); 4] = [
        (&["U1"], &["U2"], &u0),
        (&["X1"], &["U2"], &u0u1),
        (&["X2"], &["U1", "X1"], &u0u2),
        (&[common, "U1", "U2"], &["Y1", "Y2"], &["X1", "X2"]),
    ];
    for (a, b, c) in checks {
        check_independence(p, a, b, c)?;
    }
    Ok(())
}

fn check_independence(p: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> Result<()> {
    let residual = p.cond_mutual_info(a, b, c)?;
    if residual >= FACTORIZATION_TOL {
        let cond = if c.is_empty() {
            String::new()
        } else {
            format!("|{}", c.concat())
        };
        return Err(Error::Factorization {
            constraint: format!("I({};{}{cond})", a.concat(), b.concat()),
            residual,
        });
    }
    Ok(())
}

/// The ten information terms bounding the five-message region, in row order:
/// receiver 1's five bounds followed by receiver 2's.
fn implicit_terms() -> [(&'static [f64; 5], Term); 10] {
    [
        (&[0., 0., 1., 0., 0.], mi("X1", "Y1", "U0 U1 U2")),
        (&[0., 1., 1., 0., 0.], mi("U1 X1", "Y1", "U0 U2")),
        (&[0., 0., 1., 1., 0.], mi("X1 U2", "Y1", "U0 U1")),
        (&[0., 1., 1., 1., 0.], mi("U1 X1 U2", "Y1", "U0")),
        (&[1., 1., 1., 1., 0.], mi("U0 U1 X1 U2", "Y1", "")),
        (&[0., 0., 0., 0., 1.], mi("X2", "Y2", "U0 U1 U2")),
        (&[0., 0., 0., 1., 1.], mi("U2 X2", "Y2", "U0 U1")),
        (&[0., 1., 0., 0., 1.], mi("X2 U1", "Y2", "U0 U2")),
        (&[0., 1., 0., 1., 1.], mi("U2 X2 U1", "Y2", "U0")),
        (&[1., 1., 0., 1., 1.], mi("U0 U2 X2 U1", "Y2", "")),
    ]
}

/// Right-hand sides of the ten five-message bounds, in row order.
pub fn implicit_rhs(p: &JointPmf) -> Result<[f64; 10]> {
    validate_layered(p, "U0")?;
    let mut out = [0.0; 10];
    for (slot, (_, t)) in out.iter_mut().zip(implicit_terms()) {
        *slot = t.eval(p)?;
    }
    Ok(out)
}

/// Five-message region over `(R0, R12, R11, R21, R22)`; ten rows.
pub fn implicit_region(p: &JointPmf) -> Result<IneqSystem> {
    validate_layered(p, "U0")?;
    let rows = implicit_terms()
        .into_iter()
        .map(|(c, t)| bound(p, &SPLIT_COORDS, c, &[t]))
        .collect::<Result<Vec<_>>>()?;
    system(&SPLIT_COORDS, rows)
}

/// The five-message region lifted to `(R0, R1, R2, R12, R11, R21, R22)` with
/// `R1 = R12 + R11` and `R2 = R21 + R22`, ready for elimination.
pub fn implicit_with_sums(p: &JointPmf) -> Result<IneqSystem> {
    implicit_region(p)?.with_sum_coords(&[("R1", &["R12", "R11"]), ("R2", &["R21", "R22"])])
}

/// Projection of the five-message region onto rate triples by elimination.
pub fn projected_region(p: &JointPmf) -> Result<IneqSystem> {
    Ok(implicit_with_sums(p)?
        .fourier_motzkin(&["R12", "R11", "R21", "R22"])?
        .reordered(&TRIPLE_COORDS)?)
}

fn explicit_terms() -> [(&'static [f64; 3], Vec<Term>); 13] {
    let i2 = || mi("X1", "Y1", "U0 U1 U2");
    let i3 = || mi("U1 X1", "Y1", "U0 U2");
    let i4 = || mi("X1 U2", "Y1", "U0 U1");
    let i5 = || mi("U1 X1 U2", "Y1", "U0");
    let i6 = || mi("U0 U1 X1 U2", "Y1", "");
    let i7 = || mi("X2", "Y2", "U0 U1 U2");
    let i8 = || mi("U2 X2", "Y2", "U0 U1");
    let i9 = || mi("X2 U1", "Y2", "U0 U2");
    let i10 = || mi("U2 X2 U1", "Y2", "U0");
    let i11 = || mi("U0 U2 X2 U1", "Y2", "");
    [
        (&[1., 0., 0.], vec![i6()]),
        (&[1., 0., 0.], vec![i11()]),
        (&[0., 1., 0.], vec![i3()]),
        (&[0., 0., 1.], vec![i8()]),
        (&[0., 1., 1.], vec![i4(), i9()]),
        (&[0., 1., 1.], vec![i5(), i7()]),
        (&[1., 1., 1.], vec![i6(), i7()]),
        (&[0., 1., 1.], vec![i2(), i10()]),
        (&[1., 1., 1.], vec![i2(), i11()]),
        (&[0., 2., 1.], vec![i5(), i2(), i9()]),
        (&[1., 2., 1.], vec![i6(), i2(), i9()]),
        (&[0., 1., 2.], vec![i10(), i7(), i4()]),
        (&[1., 1., 2.], vec![i11(), i7(), i4()]),
    ]
}

/// The thirteen-row rate-triple region, rows in their customary order.
pub fn explicit_region(p: &JointPmf) -> Result<IneqSystem> {
    validate_layered(p, "U0")?;
    let rows = explicit_terms()
        .iter()
        .map(|(c, t)| bound(p, &TRIPLE_COORDS, *c, t))
        .collect::<Result<Vec<_>>>()?;
    system(&TRIPLE_COORDS, rows)
}

/// Bounds implied by the five-message region that the thirteen-row list omits.
///
/// With them added the list is exactly the projection of the five-message
/// region for every distribution.
pub fn explicit_supplement(p: &JointPmf) -> Result<IneqSystem> {
    validate_layered(p, "U0")?;
    let terms: [(&[f64; 3], Vec<Term>); 4] = [
        (&[1., 1., 0.], vec![mi("U0 U1 X1 U2", "Y1", "")]),
        (&[1., 0., 1.], vec![mi("U0 U2 X2 U1", "Y2", "")]),
        (&[0., 1., 0.], vec![mi("X1", "Y1", "U0 U1 U2"), mi("X2 U1", "Y2", "U0 U2")]),
        (&[0., 0., 1.], vec![mi("X2", "Y2", "U0 U1 U2"), mi("X1 U2", "Y1", "U0 U1")]),
    ];
    let rows = terms
        .iter()
        .map(|(c, t)| bound(p, &TRIPLE_COORDS, *c, t))
        .collect::<Result<Vec<_>>>()?;
    system(&TRIPLE_COORDS, rows)
}

/// Thirteen rows plus [`explicit_supplement`].
pub fn explicit_complete(p: &JointPmf) -> Result<IneqSystem> {
    let mut s = explicit_region(p)?;
    for row in explicit_supplement(p)?.rows() {
        s.push(row.clone())?;
    }
    Ok(s)
}

fn push_min(
    rows: &mut Vec<Row>,
    p: &JointPmf,
    coords: &[&str],
    coeffs: &[f64],
    a: Vec<Term>,
    b: Vec<Term>,
) -> Result<()> {
    let ra = bound(p, coords, coeffs, &a)?;
    let rb = bound(p, coords, coeffs, &b)?;
    if (ra.rhs - rb.rhs).abs() <= crate::polytope::RHS_EQ_TOL {
        rows.push(ra);
    } else {
        rows.push(ra);
        rows.push(rb);
    }
    Ok(())
}

fn validate_common(p: &JointPmf, common: &str) -> Result<()> {
    check_independence(p, &["X1"], &["X2"], &[common])?;
    check_independence(p, &[common], &["Y1", "Y2"], &["X1", "X2"])
}

/// Strong-interference region over `(R0, R1, R2)`.
///
/// Each minimum becomes two rows, or one when both arguments agree.
pub fn sicc_region(p: &JointPmf) -> Result<IneqSystem> {
    validate_common(p, "U0")?;
    let c = &TRIPLE_COORDS;
    let mut rows = vec![
        bound(p, c, &[0., 1., 0.], &[mi("X1", "Y1", "X2 U0")])?,
        bound(p, c, &[0., 0., 1.], &[mi("X2", "Y2", "X1 U0")])?,
    ];
    push_min(
        &mut rows,
        p,
        c,
        &[0., 1., 1.],
        vec![mi("X1 X2", "Y1", "U0")],
        vec![mi("X2 X1", "Y2", "U0")],
    )?;
    push_min(
        &mut rows,
        p,
        c,
        &[1., 1., 1.],
        vec![mi("X1 X2", "Y1", "")],
        vec![mi("X2 X1", "Y2", "")],
    )?;
    system(c, rows)
}

/// The five-message region evaluated with `U1 = X1` and `U2 = X2`.
///
/// The private-only bounds are then zero, so `R11 = R22 = 0` and the remaining
/// eight rows are written over `(R0, R1, R2)` with `R1 = R12`, `R2 = R21`.
/// Rows are in the order: receiver 1's four bounds, then receiver 2's.
pub fn sicc_reduced_region(p: &JointPmf) -> Result<IneqSystem> {
    validate_common(p, "U0")?;
    let q = p.with_copy("X1", "U1")?.with_copy("X2", "U2")?;
    let rhs = implicit_rhs(&q)?;
    let layout: [(usize, [f64; 3], Term); 8] = [
        (1, [0., 1., 0.], mi("X1", "Y1", "U0 X2")),
        (2, [0., 0., 1.], mi("X2", "Y1", "U0 X1")),
        (3, [0., 1., 1.], mi("X1 X2", "Y1", "U0")),
        (4, [1., 1., 1.], mi("U0 X1 X2", "Y1", "")),
        (6, [0., 0., 1.], mi("X2", "Y2", "U0 X1")),
        (7, [0., 1., 0.], mi("X1", "Y2", "U0 X2")),
        (8, [0., 1., 1.], mi("X2 X1", "Y2", "U0")),
        (9, [1., 1., 1.], mi("U0 X2 X1", "Y2", "")),
    ];
    let rows = layout
        .into_iter()
        .map(|(i, c, t)| {
            Row::labeled(
                c.to_vec(),
                rhs[i],
                format!("{} <= {t}", lhs_text(&TRIPLE_COORDS, &c)),
            )
        })
        .collect();
    system(&TRIPLE_COORDS, rows)
}

/// Labels of the two reduced rows that strong interference makes redundant:
/// receiver 2's bound on `R1` and receiver 1's bound on `R2`.
pub const SICC_REDUNDANT_ROWS: [&str; 2] = ["R1 <= I(X1;Y2|U0X2)", "R2 <= I(X2;Y1|U0X1)"];

/// Split region without common information, in simplified and unsimplified form.
#[derive(Clone, Debug, PartialEq)]
pub struct CmgRegion {
    /// Eight rows over `(R12, R11, R21, R22)` after the Markov simplifications.
    pub split: IneqSystem,
    /// The same rows before simplification.
    pub unsimplified: IneqSystem,
}

impl CmgRegion {
    /// Projection onto `(R1, R2)`.
    pub fn rate_pairs(&self) -> Result<IneqSystem> {
        Ok(self
            .split
            .with_sum_coords(&[("R1", &["R12", "R11"]), ("R2", &["R21", "R22"])])?
            .fourier_motzkin(&CMG_COORDS)?
            .reordered(&["R1", "R2"])?)
    }
}

/// Split region for a time-sharing distribution over `Q U1 U2 X1 X2 Y1 Y2`.
pub fn cmg_region(p: &JointPmf) -> Result<CmgRegion> {
    validate_layered(p, "Q")?;
    let c = &CMG_COORDS;
    let simplified: [(&[f64; 4], Term); 8] = [
        (&[0., 1., 0., 0.], mi("X1", "Y1", "U1 U2 Q")),
        (&[1., 1., 0., 0.], mi("X1", "Y1", "U2 Q")),
        (&[0., 1., 1., 0.], mi("X1 U2", "Y1", "U1 Q")),
        (&[1., 1., 1., 0.], mi("X1 U2", "Y1", "Q")),
        (&[0., 0., 0., 1.], mi("X2", "Y2", "U2 U1 Q")),
        (&[0., 0., 1., 1.], mi("X2", "Y2", "U1 Q")),
        (&[1., 0., 0., 1.], mi("X2 U1", "Y2", "U2 Q")),
        (&[1., 0., 1., 1.], mi("X2 U1", "Y2", "Q")),
    ];
    let unsimplified: [(&[f64; 4], Term); 8] = [
        (&[0., 1., 0., 0.], mi("X1", "Y1", "U1 U2 Q")),
        (&[1., 1., 0., 0.], mi("U1 X1", "Y1", "U2 Q")),
        (&[0., 1., 1., 0.], mi("X1 U2", "Y1", "U1 Q")),
        (&[1., 1., 1., 0.], mi("U1 X1 U2", "Y1", "Q")),
        (&[0., 0., 0., 1.], mi("X2", "Y2", "U2 U1 Q")),
        (&[0., 0., 1., 1.], mi("U2 X2", "Y2", "U1 Q")),
        (&[1., 0., 0., 1.], mi("X2 U1", "Y2", "U2 Q")),
        (&[1., 0., 1., 1.], mi("U2 X2 U1", "Y2", "Q")),
    ];
    let build = |terms: [(&[f64; 4], Term); 8]| -> Result<IneqSystem> {
        let rows = terms
            .into_iter()
            .map(|(k, t)| bound(p, c, k, &[t]))
            .collect::<Result<Vec<_>>>()?;
        system(c, rows)
    };
    Ok(CmgRegion {
        split: build(simplified)?,
        unsimplified: build(unsimplified)?,
    })
}

/// Asymmetric regions for a distribution over `X1 U2 X2 Y1 Y2`: the
/// five-message form over `(R0, R21, R22)` and the rate-pair form over
/// `(R0, R2)`.
pub fn aicc_regions(p: &JointPmf) -> Result<(IneqSystem, IneqSystem)> {
    check_independence(p, &["U2"], &["Y1", "Y2"], &["X1", "X2"])?;
    let m = ["R0", "R21", "R22"];
    let modified = system(
        &m,
        vec![
            bound(p, &m, &[1., 1., 0.], &[mi("X1 U2", "Y1", "")])?,
            bound(p, &m, &[0., 0., 1.], &[mi("X2", "Y2", "U2 X1")])?,
            bound(p, &m, &[0., 1., 1.], &[mi("X2", "Y2", "X1")])?,
            bound(p, &m, &[1., 1., 1.], &[mi("X1 X2", "Y2", "")])?,
        ],
    )?;
    let r = ["R0", "R2"];
    let mut rows = vec![
        bound(p, &r, &[1., 0.], &[mi("X1 U2", "Y1", "")])?,
        bound(p, &r, &[0., 1.], &[mi("X2", "Y2", "X1")])?,
    ];
    push_min(
        &mut rows,
        p,
        &r,
        &[1., 1.],
        vec![mi("X1 X2", "Y2", "")],
        vec![mi("X1 U2", "Y1", ""), mi("X2", "Y2", "U2 X1")],
    )?;
    Ok((modified, system(&r, rows)?))
}

/// An asymmetric distribution viewed as a layered one with `U0 = U1 = X1`.
pub fn aicc_as_layered(p: &JointPmf) -> Result<JointPmf> {
    p.with_copy("X1", "U0")?.with_copy("X1", "U1")
}

/// Appends `V1 = k1(X1)` and `V2 = k2(X2)` to a joint over `V0 X1 X2 Y1 Y2`.
pub fn dicc_extend(d: &DeterministicSpec, p: &JointPmf) -> Result<JointPmf> {
    let ix1 = p.position("X1")?;
    let ix2 = p.position("X2")?;
    let ext = p.with_function(
        crate::prob::VarId::new("V1", d.v1_card()),
        |a| d.k1[a[ix1]],
    )?;
    ext.with_function(crate::prob::VarId::new("V2", d.v2_card()), |a| {
        d.k2[a[ix2]]
    })
}

/// Deterministic-channel region over `(R0, R1, R2)`, thirteen rows of
/// conditional entropies on the extended joint.
pub fn dicc_region(d: &DeterministicSpec, p: &JointPmf) -> Result<IneqSystem> {
    validate_common(p, "V0")?;
    let q = dicc_extend(d, p)?;
    let terms: [(&[f64; 3], Vec<Term>); 13] = [
        (&[1., 0., 0.], vec![h("Y1", "")]),
        (&[1., 0., 0.], vec![h("Y2", "")]),
        (&[0., 1., 0.], vec![h("Y1", "V0 V2")]),
        (&[0., 0., 1.], vec![h("Y2", "V0 V1")]),
        (&[0., 1., 1.], vec![h("Y1", "V0 V1"), h("Y2", "V0 V2")]),
        (&[0., 1., 1.], vec![h("Y1", "V0"), h("Y2", "V0 V1 V2")]),
        (&[1., 1., 1.], vec![h("Y1", ""), h("Y2", "V0 V1 V2")]),
        (&[0., 1., 1.], vec![h("Y1", "V0 V1 V2"), h("Y2", "V0")]),
        (&[1., 1., 1.], vec![h("Y1", "V0 V1 V2"), h("Y2", "")]),
        (&[0., 2., 1.], vec![h("Y1", "V0"), h("Y1", "V0 V1 V2"), h("Y2", "V0 V2")]),
        (&[1., 2., 1.], vec![h("Y1", ""), h("Y1", "V0 V1 V2"), h("Y2", "V0 V2")]),
        (&[0., 1., 2.], vec![h("Y2", "V0"), h("Y2", "V0 V1 V2"), h("Y1", "V0 V1")]),
        (&[1., 1., 2.], vec![h("Y2", ""), h("Y2", "V0 V1 V2"), h("Y1", "V0 V1")]),
    ];
    let rows = terms
        .iter()
        .map(|(c, t)| bound(&q, &TRIPLE_COORDS, *c, t))
        .collect::<Result<Vec<_>>>()?;
    system(&TRIPLE_COORDS, rows)
}

/// The extended deterministic joint relabelled as a layered one
/// (`U0 = V0`, `U1 = V1`, `U2 = V2`).
pub fn dicc_as_layered(d: &DeterministicSpec, p: &JointPmf) -> Result<JointPmf> {
    dicc_extend(d, p)?.renamed(&[("V0", "U0"), ("V1", "U1"), ("V2", "U2")])
}

/// Builds the region of `kind` for one distribution on one channel.
///
/// Deterministic regions need `det`; its kernel must equal `ch`.
pub fn region_of(
    kind: RegionKind,
    f: &InputFactorization,
    ch: &ChannelSpec,
    det: Option<&DeterministicSpec>,
) -> Result<IneqSystem> {
    let family = f.family();
    let wrong = || {
        Error::Config(format!(
            "region `{kind}` needs a `{:?}` distribution, got `{family:?}`",
            kind.family()
        ))
    };
    let layered = |p: JointPmf| -> Result<JointPmf> {
        match family {
            Family::General => Ok(p),
            Family::Timeshare => p.renamed(&[("Q", "U0")]),
            _ => Err(wrong()),
        }
    };
    let p = induce_joint(f, ch)?;
    match kind {
        RegionKind::ImplicitM => implicit_region(&layered(p)?),
        RegionKind::Explicit => explicit_region(&layered(p)?),
        RegionKind::Sicc if family == Family::Sicc => sicc_region(&p),
        RegionKind::SiccReduced if family == Family::Sicc => sicc_reduced_region(&p),
        RegionKind::Cmg => {
            let p = match family {
                Family::Timeshare => p,
                Family::General => p.renamed(&[("U0", "Q")])?,
                _ => return Err(wrong()),
            };
            Ok(cmg_region(&p)?.split)
        }
        RegionKind::AiccM if family == Family::Aicc => Ok(aicc_regions(&p)?.0),
        RegionKind::Aicc if family == Family::Aicc => Ok(aicc_regions(&p)?.1),
        RegionKind::Dicc if family == Family::Dicc => {
            let d = det.ok_or_else(|| {
                Error::Config("the dicc region needs a deterministic channel description".into())
            })?;
            if &d.lift()? != ch {
                return Err(Error::Config(
                    "channel kernel differs from the deterministic description".into(),
                ));
            }
            dicc_region(d, &p)
        }
        _ => Err(wrong()),
    }
}

/// Sampling parameters for [`union_region`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionConfig {
    pub samples: usize,
    pub seed: u64,
    pub cards: AuxCards,
}

impl Default for UnionConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            cards: AuxCards::default(),
        }
    }
}

/// Inner approximation of a union of regions by sampled distributions.
#[derive(Clone, Debug)]
pub struct UnionRegion {
    pub kind: RegionKind,
    pub members: Vec<(InputFactorization, IneqSystem)>,
}

impl UnionRegion {
    /// Index of the first sampled distribution whose region contains `point`.
    pub fn witness(&self, point: &RatePoint, tol: f64) -> Result<Option<usize>> {
        for (i, (_, s)) in self.members.iter().enumerate() {
            if s.member(point, tol)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn accepts(&self, point: &RatePoint, tol: f64) -> Result<bool> {
        Ok(self.witness(point, tol)?.is_some())
    }
}

/// Samples `cfg.samples` distributions of the family that `kind` needs and
/// keeps each one's region.
pub fn union_region(
    ch: &ChannelSpec,
    kind: RegionKind,
    cfg: &UnionConfig,
    det: Option<&DeterministicSpec>,
) -> Result<UnionRegion> {
    let mut rng = crate::rng_from_seed(cfg.seed);
    let dists: Vec<InputFactorization> = (0..cfg.samples)
        .map(|_| InputFactorization::random(kind.family(), cfg.cards, ch.x1_card, ch.x2_card, &mut rng))
        .collect();
    let members = dists
        .into_par_iter()
        .map(|f| {
            let s = region_of(kind, &f, ch, det)?;
            Ok((f, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UnionRegion { kind, members })
}

/// Layered distribution whose common variable also selects between `f1`
/// (with probability `alpha`) and `f2`.
///
/// The common alphabet is the disjoint union of the two common alphabets;
/// the other auxiliary alphabets are padded to the larger of the two.
pub fn timeshare_factorization(
    f1: &LayeredFactors,
    f2: &LayeredFactors,
    alpha: f64,
) -> Result<LayeredFactors> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let card = |rows: &[Vec<f64>]| rows.first().map_or(0, Vec::len);
    let (x1, x2) = (card(&f1.x1_given_u0u1), card(&f1.x2_given_u0u2));
    if x1 != card(&f2.x1_given_u0u1) || x2 != card(&f2.x2_given_u0u2) {
        return Err(Error::AlphabetMismatch {
            what: "time-shared inputs".into(),
            expected: x1,
            found: card(&f2.x1_given_u0u1),
        });
    }
    let u1 = card(&f1.u1_given_u0).max(card(&f2.u1_given_u0));
    let u2 = card(&f1.u2_given_u0).max(card(&f2.u2_given_u0));
    let pad = |row: &[f64], len: usize| {
        let mut r = row.to_vec();
        r.resize(len, 0.0);
        r
    };
    let mut out = LayeredFactors {
        u0: Vec::new(),
        u1_given_u0: Vec::new(),
        u2_given_u0: Vec::new(),
        x1_given_u0u1: Vec::new(),
        x2_given_u0u2: Vec::new(),
    };
    for (f, weight) in [(f1, alpha), (f2, 1.0 - alpha)] {
        let (fu1, fu2) = (card(&f.u1_given_u0), card(&f.u2_given_u0));
        for (u0, &pu0) in f.u0.iter().enumerate() {
            out.u0.push(weight * pu0);
            out.u1_given_u0.push(pad(&f.u1_given_u0[u0], u1));
            out.u2_given_u0.push(pad(&f.u2_given_u0[u0], u2));
            for a in 0..u1 {
                let src = if a < fu1 { a } else { 0 };
                out.x1_given_u0u1.push(f.x1_given_u0u1[u0 * fu1 + src].clone());
            }
            for b in 0..u2 {
                let src = if b < fu2 { b } else { 0 };
                out.x2_given_u0u2.push(f.x2_given_u0u2[u0 * fu2 + src].clone());
            }
        }
    }
    Ok(out)
}

/// Outcome of a time-sharing containment check.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimeshareReport {
    pub checked: usize,
    /// Indices of the pairs whose combination fell outside.
    pub failures: Vec<usize>,
    /// Largest row violation seen, in bits (zero or negative when all pass).
    pub max_violation: f64,
}

impl TimeshareReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn layered_of(f: &InputFactorization) -> Result<&LayeredFactors> {
    match f {
        InputFactorization::General(l) | InputFactorization::Timeshare(l) => Ok(l),
        other => Err(Error::Config(format!(
            "time sharing needs layered distributions, got {:?}",
            other.family()
        ))),
    }
}

/// Checks that `alpha * r1 + (1 - alpha) * r2` lies in the five-message
/// region of the time-shared distribution for every supplied pair.
pub fn timeshare_check(
    f1: &InputFactorization,
    f2: &InputFactorization,
    alpha: f64,
    ch: &ChannelSpec,
    pairs: &[(RatePoint, RatePoint)],
    tol: f64,
) -> Result<TimeshareReport> {
    let mixed = timeshare_factorization(layered_of(f1)?, layered_of(f2)?, alpha)?;
    let region = implicit_region(&induce_joint(&InputFactorization::General(mixed), ch)?)?;
    let mut report = TimeshareReport {
        checked: pairs.len(),
        failures: Vec::new(),
        max_violation: f64::NEG_INFINITY,
    };
    for (idx, (r1, r2)) in pairs.iter().enumerate() {
        let a = region.values_of(r1)?;
        let b = region.values_of(r2)?;
        let mix: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
            .collect();
        let worst = region
            .rows()
            .iter()
            .map(|r| r.lhs(&mix) - r.rhs)
            .fold(f64::NEG_INFINITY, f64::max);
        report.max_violation = report.max_violation.max(worst);
        if !region.contains(&mix, tol) {
            report.failures.push(idx);
        }
    }
    Ok(report)
}

/// Rejection-samples points of a bounded region uniformly from its bounding box.
pub fn sample_members(
    s: &IneqSystem,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<RatePoint>> {
    let maxima = s.coordinate_maxima();
    let mut upper = Vec::with_capacity(maxima.len());
    for (name, m) in s.coords().iter().zip(&maxima) {
        match m {
            Some(v) => upper.push(v.max(0.0)),
            None => {
                return Err(Error::InvalidSystem(format!(
                    "coordinate `{name}` is unbounded or the region is empty"
                )))
            }
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::ResourceCap(format!(
                "accepted {} of {count} points after {attempts} draws",
                out.len()
            )));
        }
        let v: Vec<f64> = upper.iter().map(|&u| rng.random::<f64>() * u).collect();
        if s.contains(&v, 0.0) {
            out.push(RatePoint(
                s.coords().iter().cloned().zip(v).collect(),
            ));
        }
    }
    Ok(out)
}
