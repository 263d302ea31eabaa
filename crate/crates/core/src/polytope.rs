//! Linear inequality systems over named rate coordinates.
//!
//! Each row reads `coeffs · r <= rhs`. Coordinates carry a nonnegativity flag
//! (set by default) that membership, projection and pruning all honor.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{fmt_num, round_sig};

/// Default membership tolerance in bits.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Right-hand sides closer than this are treated as equal when deduplicating.
pub const RHS_EQ_TOL: f64 = 1e-12;

/// Slack allowed when the feasibility check decides a row is implied.
pub const PRUNE_TOL: f64 = 1e-9;

/// One inequality `coeffs · r <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            rhs,
            label: None,
        }
    }

    pub fn labeled(coeffs: Vec<f64>, rhs: f64, label: impl Into<String>) -> Self {
        Self {
            coeffs,
            rhs,
            label: Some(label.into()),
        }
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().zip(values).map(|(a, x)| a * x).sum()
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Coefficients and rhs divided by the largest absolute coefficient.
    fn normalized(&self) -> (Vec<f64>, f64) {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return (self.coeffs.clone(), self.rhs);
        }
        (
            self.coeffs.iter().map(|c| c / scale).collect(),
            self.rhs / scale,
        )
    }
}

/// A rate tuple with named coordinates, in bits per channel use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint(pub Vec<(String, f64)>);

impl RatePoint {
    pub fn new(pairs: &[(&str, f64)]) -> Self {
        Self(pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(n, _)| n.as_str())
    }

    /// Parses `R0=0.1,R1=0.2`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected name=value, got `{part}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number in `{part}`")))?;
            pairs.push((name.trim().to_string(), value));
        }
        Ok(Self(pairs))
    }
}

/// Grid comparison of two regions.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiffReport {
    pub only_a: usize,
    pub only_b: usize,
    pub both: usize,
    pub neither: usize,
    /// First few points in exactly one of the regions.
    pub examples: Vec<Vec<f64>>,
}

impl DiffReport {
    pub fn equivalent(&self) -> bool {
        self.only_a == 0 && self.only_b == 0
    }
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    coords: Vec<String>,
    rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    free: Vec<String>,
}

/// A finite list of linear inequalities over named coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct IneqSystem {
    coords: Vec<String>,
    rows: Vec<Row>,
    nonneg: Vec<bool>,
}

impl IneqSystem {
    /// Empty (unconstrained apart from nonnegativity) system.
    pub fn new<S: AsRef<str>>(coords: &[S]) -> Result<Self> {
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        if coords.is_empty() {
            return Err(Error::InvalidSystem("no coordinates".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::InvalidSystem(format!("duplicate coordinate `{c}`")));
            }
        }
        let nonneg = vec![true; coords.len()];
        Ok(Self {
            coords,
            rows: Vec::new(),
            nonneg,
        })
    }

    pub fn with_rows<S: AsRef<str>>(coords: &[S], rows: Vec<Row>) -> Result<Self> {
        let mut s = Self::new(coords)?;
        for r in rows {
            s.push(r)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        if row.coeffs.len() != self.coords.len() {
            return Err(Error::InvalidSystem(format!(
                "row has {} coefficients for {} coordinates",
                row.coeffs.len(),
                self.coords.len()
            )));
        }
        if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSystem("non-finite coefficient or rhs".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Adds `Σ coeff·coord <= rhs` from named terms.
    pub fn push_terms(&mut self, terms: &[(&str, f64)], rhs: f64, label: &str) -> Result<()> {
        let mut coeffs = vec![0.0; self.coords.len()];
        for (name, c) in terms {
            coeffs[self.index(name)?] += c;
        }
        self.push(Row::labeled(coeffs, rhs, label))
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_nonneg(&self, coord: &str) -> Result<bool> {
        Ok(self.nonneg[self.index(coord)?])
    }

    /// Drops the implicit nonnegativity of `coord`.
    pub fn set_free(&mut self, coord: &str) -> Result<()> {
        let i = self.index(coord)?;
        self.nonneg[i] = false;
        Ok(())
    }

    pub fn index(&self, coord: &str) -> Result<usize> {
        self.coords
            .iter()
            .position(|c| c == coord)
            .ok_or_else(|| Error::CoordMismatch(format!("unknown coordinate `{coord}`")))
    }

    /// Row with the given label, if any.
    pub fn row_by_label(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label.as_deref() == Some(label))
    }

    /// Removes rows whose label is listed.
    pub fn without_labels(&self, labels: &[&str]) -> Self {
        let mut out = self.clone();
        out.rows
            .retain(|r| !r.label.as_deref().is_some_and(|l| labels.contains(&l)));
        out
    }

    /// Values of `point` in this system's coordinate order.
    pub fn values_of(&self, point: &RatePoint) -> Result<Vec<f64>> {
        if point.0.len() != self.coords.len() {
            return Err(Error::CoordMismatch(format!(
                "point has {} coordinates, system has {}",
                point.0.len(),
                self.coords.len()
            )));
        }
        self.coords
            .iter()
            .map(|c| {
                point
                    .get(c)
                    .ok_or_else(|| Error::CoordMismatch(format!("point lacks coordinate `{c}`")))
            })
            .collect()
    }

    /// Membership of a value vector given in coordinate order.
    pub fn contains(&self, values: &[f64], tol: f64) -> bool {
        values
            .iter()
            .zip(&self.nonneg)
            .all(|(&x, &nn)| !nn || x >= -tol)
            && self.rows.iter().all(|r| r.lhs(values) <= r.rhs + tol)
    }

    /// True iff every row holds within `tol` and nonnegative coordinates are
    /// at least `-tol`.
    pub fn member(&self, point: &RatePoint, tol: f64) -> Result<bool> {
        Ok(self.contains(&self.values_of(point)?, tol))
    }

    /// `rhs - lhs` for each row; negative means violated.
    pub fn slacks(&self, point: &RatePoint) -> Result<Vec<f64>> {
        let v = self.values_of(point)?;
        Ok(self.rows.iter().map(|r| r.rhs - r.lhs(&v)).collect())
    }

    /// Appends sum coordinates tied to existing ones by equalities,
    /// e.g. `("R1", ["R12", "R11"])` adds `R1` with `R1 = R12 + R11`.
    /// Each equality becomes two opposing inequalities.
    pub fn with_sum_coords(&self, sums: &[(&str, &[&str])]) -> Result<Self> {
        let mut coords = self.coords.clone();
        for (name, _) in sums {
            coords.push(name.to_string());
        }
        let extra = sums.len();
        let mut out = Self::new(&coords)?;
        out.nonneg[..self.nonneg.len()].copy_from_slice(&self.nonneg);
        for r in &self.rows {
            let mut coeffs = r.coeffs.clone();
            coeffs.extend(std::iter::repeat_n(0.0, extra));
            out.push(Row {
                coeffs,
                rhs: r.rhs,
                label: r.label.clone(),
            })?;
        }
        for (name, parts) in sums {
            let mut terms: Vec<(&str, f64)> = vec![(name, 1.0)];
            terms.extend(parts.iter().map(|p| (*p, -1.0)));
            out.push_terms(&terms, 0.0, &format!("{name}=sum"))?;
            let neg: Vec<(&str, f64)> = terms.iter().map(|(n, c)| (*n, -c)).collect();
            out.push_terms(&neg, 0.0, &format!("{name}=sum"))?;
        }
        Ok(out)
    }

    /// Restricts to the slice `coord = value` and drops that coordinate.
    pub fn slice(&self, coord: &str, value: f64) -> Result<Self> {
        let k = self.index(coord)?;
        if self.coords.len() == 1 {
            return Err(Error::InvalidSystem("cannot slice away the last coordinate".into()));
        }
        let coords: Vec<&str> = self
            .coords
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, c)| c.as_str())
            .collect();
        let mut out = Self::new(&coords)?;
        out.nonneg = self
            .nonneg
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, &n)| n)
            .collect();
        if self.nonneg[k] && value < 0.0 {
            out.rows.push(Row::new(vec![0.0; coords.len()], value));
        }
        for r in &self.rows {
            let mut coeffs = r.coeffs.clone();
            let c = coeffs.remove(k);
            out.rows.push(Row {
                coeffs,
                rhs: r.rhs - c * value,
                label: r.label.clone(),
            });
        }
        Ok(out)
    }

    /// Same system with coordinates permuted into `order`.
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.coords.len() {
            return Err(Error::CoordMismatch(format!(
                "cannot reorder {:?} into {} coordinates",
                self.coords,
                order.len()
            )));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|c| self.index(c.as_ref()))
            .collect::<Result<_>>()?;
        let mut out = Self::new(order)?;
        out.nonneg = perm.iter().map(|&p| self.nonneg[p]).collect();
        out.rows = self
            .rows
            .iter()
            .map(|r| Row {
                coeffs: perm.iter().map(|&p| r.coeffs[p]).collect(),
                rhs: r.rhs,
                label: r.label.clone(),
            })
            .collect();
        Ok(out)
    }

    /// Projects onto the coordinates not in `eliminate`.
    ///
    /// Coordinates are eliminated one at a time in the given order. The
    /// nonnegativity of an eliminated coordinate is added as an explicit row
    /// before it is removed. Between steps, parallel rows are merged keeping
    /// the tightest bound, and rows that are trivially true are dropped.
    pub fn fourier_motzkin<S: AsRef<str>>(&self, eliminate: &[S]) -> Result<Self> {
        let elim: Vec<usize> = eliminate
            .iter()
            .map(|c| self.index(c.as_ref()))
            .collect::<Result<_>>()?;
        let n = self.coords.len();
        let mut rows = self.rows.clone();
        for &k in &elim {
            if self.nonneg[k] {
                let mut coeffs = vec![0.0; n];
                coeffs[k] = -1.0;
                rows.push(Row::new(coeffs, 0.0));
            }
            let (mut keep, mut pos, mut neg) = (Vec::new(), Vec::new(), Vec::new());
            for r in rows {
                match r.coeffs[k] {
                    c if c > 0.0 => pos.push(r),
                    c if c < 0.0 => neg.push(r),
                    _ => keep.push(r),
                }
            }
            for p in &pos {
                for q in &neg {
                    let a = p.coeffs[k];
                    let b = -q.coeffs[k];
                    let mut coeffs: Vec<f64> = p
                        .coeffs
                        .iter()
                        .zip(&q.coeffs)
                        .map(|(x, y)| b * x + a * y)
                        .collect();
                    coeffs[k] = 0.0;
                    keep.push(Row::new(coeffs, b * p.rhs + a * q.rhs));
                }
            }
            rows = tighten(keep, &self.nonneg);
        }

        let remaining: Vec<usize> = (0..n).filter(|i| !elim.contains(i)).collect();
        if remaining.is_empty() {
            return Err(Error::InvalidSystem("cannot eliminate every coordinate".into()));
        }
        let coords: Vec<&str> = remaining.iter().map(|&i| self.coords[i].as_str()).collect();
        let mut out = Self::new(&coords)?;
        out.nonneg = remaining.iter().map(|&i| self.nonneg[i]).collect();
        out.rows = rows
            .into_iter()
            .map(|r| Row {
                coeffs: remaining.iter().map(|&i| r.coeffs[i]).collect(),
                rhs: r.rhs,
                label: r.label,
            })
            .collect();
        Ok(out)
    }

    /// Removes duplicate rows (same normalized coefficients, rhs within 1e-12),
    /// keeping the first occurrence.
    pub fn dedup(&self) -> Self {
        let mut out = self.clone();
        let mut seen: Vec<(Vec<f64>, f64)> = Vec::new();
        out.rows.retain(|r| {
            let (c, b) = r.normalized();
            if seen
                .iter()
                .any(|(sc, sb)| *sc == c && (sb - b).abs() <= RHS_EQ_TOL)
            {
                false
            } else {
                seen.push((c, b));
                true
            }
        });
        out
    }

    /// Removes every row implied by the remaining rows plus nonnegativity.
    ///
    /// Rows are visited in order; a row is dropped when maximizing its left
    /// side over the other surviving rows cannot exceed its rhs.
    pub fn prune(&self) -> Self {
        let mut out = self.dedup();
        let mut i = 0;
        while i < out.rows.len() {
            if out.row_implied(i) {
                out.rows.remove(i);
            } else {
                i += 1;
            }
        }
        out
    }

    fn row_implied(&self, target: usize) -> bool {
        let row = &self.rows[target];
        if row.is_zero() {
            return row.rhs >= 0.0 || self.rows.len() > 1 && self.infeasible_without(target);
        }
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = row
            .coeffs
            .iter()
            .zip(&self.nonneg)
            .map(|(&c, &nn)| {
                let lo = if nn { 0.0 } else { f64::NEG_INFINITY };
                lp.add_var(c, (lo, f64::INFINITY))
            })
            .collect();
        for (j, r) in self.rows.iter().enumerate() {
            if j == target {
                continue;
            }
            let terms: Vec<_> = vars
                .iter()
                .zip(&r.coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            if terms.is_empty() {
                if r.rhs < 0.0 {
                    return true;
                }
                continue;
            }
            lp.add_constraint(terms.as_slice(), ComparisonOp::Le, r.rhs);
        }
        match lp.solve() {
            Ok(sol) => sol.objective() <= row.rhs + PRUNE_TOL,
            Err(minilp::Error::Infeasible) => true,
            Err(minilp::Error::Unbounded) => false,
        }
    }

    fn infeasible_without(&self, target: usize) -> bool {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = self
            .nonneg
            .iter()
            .map(|&nn| lp.add_var(0.0, (if nn { 0.0 } else { f64::NEG_INFINITY }, f64::INFINITY)))
            .collect();
        for (j, r) in self.rows.iter().enumerate() {
            if j == target {
                continue;
            }
            let terms: Vec<_> = vars
                .iter()
                .zip(&r.coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            if terms.is_empty() {
                if r.rhs < 0.0 {
                    return true;
                }
                continue;
            }
            lp.add_constraint(terms.as_slice(), ComparisonOp::Le, r.rhs);
        }
        matches!(lp.solve(), Err(minilp::Error::Infeasible))
    }

    /// Grid values `lo + k·step` per coordinate, lexicographic with the first
    /// coordinate most significant.
    pub fn grid_values(&self, step: f64, bbox: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
        grid(self.coords.len(), step, bbox)
    }

    /// Members among the grid points of the box.
    pub fn grid_points(&self, step: f64, bbox: &[(f64, f64)], tol: f64) -> Result<Vec<RatePoint>> {
        Ok(self
            .grid_values(step, bbox)?
            .into_iter()
            .filter(|v| self.contains(v, tol))
            .map(|v| RatePoint(self.coords.iter().cloned().zip(v).collect()))
            .collect())
    }

    /// Compares membership of two systems over the same coordinates on a grid.
    pub fn grid_diff(
        &self,
        other: &IneqSystem,
        step: f64,
        bbox: &[(f64, f64)],
        tol: f64,
    ) -> Result<DiffReport> {
        let other = other.reordered(&self.coords)?;
        let points = self.grid_values(step, bbox)?;
        let flags: Vec<(bool, bool)> = points
            .par_iter()
            .map(|v| (self.contains(v, tol), other.contains(v, tol)))
            .collect();
        let mut report = DiffReport::default();
        for (v, (a, b)) in points.iter().zip(flags) {
            match (a, b) {
                (true, true) => report.both += 1,
                (false, false) => report.neither += 1,
                (true, false) => report.only_a += 1,
                (false, true) => report.only_b += 1,
            }
            if a != b && report.examples.len() < 8 {
                report.examples.push(v.clone());
            }
        }
        Ok(report)
    }

    /// Largest value each coordinate can take inside the region (by LP);
    /// `None` when unbounded.
    pub fn coordinate_maxima(&self) -> Vec<Option<f64>> {
        (0..self.coords.len())
            .map(|k| {
                let mut lp = Problem::new(OptimizationDirection::Maximize);
                let vars: Vec<_> = self
                    .nonneg
                    .iter()
                    .enumerate()
                    .map(|(i, &nn)| {
                        let lo = if nn { 0.0 } else { f64::NEG_INFINITY };
                        lp.add_var(if i == k { 1.0 } else { 0.0 }, (lo, f64::INFINITY))
                    })
                    .collect();
                for r in &self.rows {
                    let terms: Vec<_> = vars
                        .iter()
                        .zip(&r.coeffs)
                        .filter(|(_, &c)| c != 0.0)
                        .map(|(&v, &c)| (v, c))
                        .collect();
                    if !terms.is_empty() {
                        lp.add_constraint(terms.as_slice(), ComparisonOp::Le, r.rhs);
                    }
                }
                lp.solve().ok().map(|s| s.objective())
            })
            .collect()
    }

    /// CSV with header `coords...,rhs`, one inequality per line.
    pub fn to_csv(&self) -> String {
        let mut out = self.coords.join(",");
        out.push_str(",rhs\n");
        for r in &self.rows {
            let fields: Vec<String> = r
                .coeffs
                .iter()
                .chain(std::iter::once(&r.rhs))
                .map(|&x| fmt_num(x))
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty region CSV".into()))?;
        let mut cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.pop() != Some("rhs") {
            return Err(Error::Parse("region CSV header must end with `rhs`".into()));
        }
        let mut out = Self::new(&cols)?;
        for (line_no, line) in lines.enumerate() {
            let nums: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("bad number in CSV row {line_no}")))?;
            if nums.len() != cols.len() + 1 {
                return Err(Error::Parse(format!(
                    "CSV row {line_no} has {} fields, expected {}",
                    nums.len(),
                    cols.len() + 1
                )));
            }
            let (coeffs, rhs) = nums.split_at(cols.len());
            out.push(Row::new(coeffs.to_vec(), rhs[0]))?;
        }
        Ok(out)
    }

    /// JSON `{"coords": [...], "rows": [{"coeffs": [...], "rhs": x}]}`; numbers
    /// rounded to 12 significant digits. Coordinates without the
    /// nonnegativity constraint are listed under `"free"`.
    pub fn to_json(&self) -> String {
        let file = SystemFile {
            coords: self.coords.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    coeffs: r.coeffs.iter().map(|&c| round_sig(c)).collect(),
                    rhs: round_sig(r.rhs),
                    label: r.label.clone(),
                })
                .collect(),
            free: self
                .coords
                .iter()
                .zip(&self.nonneg)
                .filter(|(_, &nn)| !nn)
                .map(|(c, _)| c.clone())
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let mut out = Self::with_rows(&file.coords, file.rows)?;
        for c in &file.free {
            out.set_free(c)?;
        }
        Ok(out)
    }
}

/// Merges parallel rows (keeping the smallest normalized rhs) and drops rows
/// that hold for every point of the nonnegative orthant.
fn tighten(rows: Vec<Row>, nonneg: &[bool]) -> Vec<Row> {
    let mut out: Vec<(Vec<f64>, f64, Row)> = Vec::new();
    for r in rows {
        let trivially_true = r
            .coeffs
            .iter()
            .zip(nonneg)
            .all(|(&c, &nn)| c == 0.0 || (c < 0.0 && nn))
            && r.rhs >= 0.0;
        if trivially_true {
            continue;
        }
        let (c, b) = r.normalized();
        match out.iter_mut().find(|(oc, _, _)| *oc == c) {
            Some(entry) if b < entry.1 => *entry = (c, b, r),
            Some(_) => {}
            None => out.push((c, b, r)),
        }
    }
    out.into_iter().map(|(_, _, r)| r).collect()
}

fn grid(dims: usize, step: f64, bbox: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0) {
        return Err(Error::Config("grid step must be positive".into()));
    }
    let boxes: Vec<(f64, f64)> = match bbox.len() {
        1 => vec![bbox[0]; dims],
        n if n == dims => bbox.to_vec(),
        n => {
            return Err(Error::CoordMismatch(format!(
                "bounding box has {n} ranges for {dims} coordinates"
            )))
        }
    };
    let axes: Vec<Vec<f64>> = boxes
        .iter()
        .map(|&(lo, hi)| {
            let count = ((hi - lo) / step + 1e-9).floor().max(-1.0) as i64 + 1;
            (0..count).map(|k| lo + k as f64 * step).collect()
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let cards: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut odo = crate::prob::Odometer::new(&cards);
    while let Some(d) = odo.current() {
        out.push(d.iter().zip(&axes).map(|(&i, a)| a[i]).collect());
        odo.advance();
    }
    Ok(out)
}

/// Parses a bounding box `lo:hi` or `lo:hi,lo:hi,...`.
pub fn parse_bbox(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected lo:hi, got `{part}`")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| Error::Parse(format!("bad bound `{lo}`")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| Error::Parse(format!("bad bound `{hi}`")))?;
            Ok((lo, hi))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(coords: &[&str], rows: &[(&[f64], f64)]) -> IneqSystem {
        IneqSystem::with_rows(
            coords,
            rows.iter().map(|(c, b)| Row::new(c.to_vec(), *b)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn origin_is_member_when_rhs_nonnegative() {
        let s = sys(&["A", "B"], &[(&[1.0, 2.0], 0.5), (&[-1.0, 1.0], 0.0)]);
        assert!(s.member(&RatePoint::new(&[("A", 0.0), ("B", 0.0)]), 0.0).unwrap());
    }

    #[test]
    fn tolerance_semantics() {
        let s = sys(&["R1"], &[(&[1.0], 1.0)]);
        let p = RatePoint::new(&[("R1", 1.0 + 1e-12)]);
        assert!(s.member(&p, 1e-9).unwrap());
        assert!(!s.member(&p, 0.0).unwrap());
        let neg = RatePoint::new(&[("R1", -1e-3)]);
        assert!(!s.member(&neg, 1e-9).unwrap());
    }

    #[test]
    fn coordinate_mismatch_is_an_error() {
        let s = sys(&["R1", "R2"], &[]);
        assert!(s.member(&RatePoint::new(&[("R1", 0.0)]), 0.0).is_err());
        assert!(s
            .member(&RatePoint::new(&[("R1", 0.0), ("R3", 0.0)]), 0.0)
            .is_err());
    }

    #[test]
    fn eliminating_free_coordinate_leaves_rows() {
        let s = sys(&["x", "y"], &[(&[0.0, 1.0], 1.0)]);
        let p = s.fourier_motzkin(&["x"]).unwrap();
        assert_eq!(p.coords(), &["y".to_string()]);
        assert_eq!(p.rows(), &[Row::new(vec![1.0], 1.0)]);
    }

    #[test]
    fn two_row_pairing() {
        // x <= 1, y - x <= 0, x >= 0  ==>  y <= 1
        let s = sys(&["x", "y"], &[(&[1.0, 0.0], 1.0), (&[-1.0, 1.0], 0.0)]);
        let p = s.fourier_motzkin(&["x"]).unwrap().prune();
        assert_eq!(p.rows(), &[Row::new(vec![1.0], 1.0)]);
        assert!(p.is_nonneg("y").unwrap());
    }

    #[test]
    fn infeasible_projection_stays_infeasible() {
        // x <= -1 with x >= 0 has no solution.
        let s = sys(&["x", "y"], &[(&[1.0, 0.0], -1.0)]);
        let p = s.fourier_motzkin(&["x"]).unwrap();
        assert!(!p.contains(&[0.0], 1e-9));
    }

    #[test]
    fn prune_duplicates_and_dominated_rows() {
        let dup = sys(&["R1"], &[(&[1.0], 1.0), (&[2.0], 2.0)]);
        assert_eq!(dup.prune().len(), 1);
        let dom = sys(&["R1"], &[(&[1.0], 2.0), (&[1.0], 1.0)]);
        assert_eq!(dom.prune().rows(), &[Row::new(vec![1.0], 1.0)]);
        let sum = sys(
            &["a", "b"],
            &[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0), (&[1.0, 1.0], 3.0)],
        );
        assert_eq!(sum.prune().len(), 2);
    }

    #[test]
    fn prune_respects_free_coordinates() {
        // With a free, -a <= 5 is not implied by anything.
        let mut s = sys(&["a"], &[(&[-1.0], 5.0)]);
        assert_eq!(s.prune().len(), 0);
        s.set_free("a").unwrap();
        assert_eq!(s.prune().len(), 1);
    }

    #[test]
    fn grid_of_empty_system() {
        let s = sys(&["R1"], &[]);
        let pts = s.grid_points(0.5, &[(0.0, 1.0)], 1e-9).unwrap();
        let v: Vec<f64> = pts.iter().map(|p| p.get("R1").unwrap()).collect();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_face_only() {
        let s = sys(&["R1", "R2"], &[(&[1.0, 0.0], 0.0)]);
        let pts = s.grid_points(0.5, &[(0.0, 1.0)], 1e-9).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.get("R1") == Some(0.0)));
    }

    #[test]
    fn grid_is_lexicographic() {
        let s = sys(&["a", "b"], &[]);
        let v = s.grid_values(1.0, &[(0.0, 1.0)]).unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(s.grid_values(0.0, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn grid_diff_counts() {
        let a = sys(&["R1"], &[(&[1.0], 1.0)]);
        let b = sys(&["R1"], &[(&[1.0], 0.5)]);
        let d = a.grid_diff(&b, 0.25, &[(0.0, 1.0)], 1e-9).unwrap();
        assert_eq!((d.only_a, d.only_b, d.both), (2, 0, 3));
        assert!(a.grid_diff(&a, 0.25, &[(0.0, 1.0)], 1e-9).unwrap().equivalent());
    }

    #[test]
    fn sum_coords_and_slice() {
        let s = sys(&["a", "b"], &[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0)]);
        let lifted = s.with_sum_coords(&[("t", &["a", "b"])]).unwrap();
        let proj = lifted.fourier_motzkin(&["a", "b"]).unwrap().prune();
        assert_eq!(proj.rows(), &[Row::new(vec![1.0], 2.0)]);
        let sl = s.slice("a", 0.5).unwrap();
        assert_eq!(sl.coords(), &["b".to_string()]);
        assert!(sl.contains(&[1.0], 0.0));
        let bad = s.slice("a", 2.0).unwrap();
        assert!(!bad.contains(&[0.0], 0.0));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mut s = sys(&["R0", "R1"], &[(&[1.0, 2.0], 1.0 / 3.0), (&[0.0, 1.0], 0.25)]);
        s.set_free("R0").unwrap();
        let csv = s.to_csv();
        assert_eq!(csv, "R0,R1,rhs\n1,2,0.333333333333\n0,1,0.25\n");
        assert_eq!(IneqSystem::from_csv(&csv).unwrap().to_csv(), csv);
        let json = s.to_json();
        let back = IneqSystem::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert!(!back.is_nonneg("R0").unwrap());
    }

    #[test]
    fn bbox_parsing() {
        assert_eq!(parse_bbox("0:2").unwrap(), vec![(0.0, 2.0)]);
        assert_eq!(parse_bbox("0:1, 0.5:2").unwrap(), vec![(0.0, 1.0), (0.5, 2.0)]);
        assert!(parse_bbox("0-2").is_err());
    }
}
