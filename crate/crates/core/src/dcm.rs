//! Multirate zones represented as difference constraint matrices.
//!
//! Entry `(i, j)` of a DCM over variables `v₁ … vₙ` (with the zero
//! reference `v₀ = 0` at index 0) bounds the rate-scaled difference
//!
//! ```text
//! k_j·v_i − k_i·v_j ≺ c
//! ```
//!
//! where `k` is the rate vector (`k₀ = 1`). Because every variable flows at
//! its own rate, these scaled differences are invariant under time elapse,
//! which is what makes the representation closed under the elapse operator.
//! Only the bound `(c, ≺)` is stored per cell; the coefficient pair shown in
//! tables is recovered from the rate vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::linear::{LinearConstraint, Point, Polyhedron, Rel};
use crate::rational::{Bound, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DcmError {
    #[error("unsupported rate {rate} for variable `{var}`: rates must be strictly positive")]
    UnsupportedRate { var: String, rate: Rational },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("missing rate for variable `{0}`")]
    MissingRate(String),
    #[error("incompatible contexts: {0}")]
    IncompatibleContext(String),
    #[error("variable `{var}` changes rate from {from} to {to} without being reset")]
    InitializedViolation { var: String, from: Rational, to: Rational },
    #[error("coefficients of `{a}`/`{b}` do not match the rate-scaled form {expected_a}·{a} − {expected_b}·{b}")]
    NonZoneConstraint { a: String, b: String, expected_a: Rational, expected_b: Rational },
    #[error("cannot render an empty zone")]
    EmptyZone,
}

/// One conjunct of a multirate zone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZoneConstraint {
    /// `var ≻ c` (`Bound::Finite(c, strict)` means `var > c` when strict).
    LowerBound(String, Bound),
    /// `var ≺ c`.
    UpperBound(String, Bound),
    /// `lower ≤ coeff_a·var_a − coeff_b·var_b ≤ upper`, each side optional
    /// (`Bound::Infinity`). The lower bound reads `c ≺ …`.
    Relative { var_a: String, var_b: String, coeff_a: Rational, coeff_b: Rational, lower: Bound, upper: Bound },
}

impl ZoneConstraint {
    pub fn eq(var: &str, value: impl Into<Rational>) -> [ZoneConstraint; 2] {
        let v = value.into();
        [ZoneConstraint::LowerBound(var.into(), Bound::le(v.clone())), ZoneConstraint::UpperBound(var.into(), Bound::le(v))]
    }

    pub fn le(var: &str, value: impl Into<Rational>) -> ZoneConstraint {
        ZoneConstraint::UpperBound(var.into(), Bound::le(value))
    }

    pub fn ge(var: &str, value: impl Into<Rational>) -> ZoneConstraint {
        ZoneConstraint::LowerBound(var.into(), Bound::le(value))
    }

    /// The constraint as linear inequalities over variable names.
    pub fn to_linear(&self) -> Vec<LinearConstraint> {
        let rel = |b: &Bound| if b.is_strict() { Rel::Lt } else { Rel::Le };
        match self {
            ZoneConstraint::UpperBound(v, b) => match b.value() {
                Some(c) => vec![LinearConstraint::new([(v.clone(), Rational::one())], rel(b), c.clone())],
                None => vec![],
            },
            ZoneConstraint::LowerBound(v, b) => match b.value() {
                Some(c) => vec![LinearConstraint::new([(v.clone(), -Rational::one())], rel(b), -c)],
                None => vec![],
            },
            ZoneConstraint::Relative { var_a, var_b, coeff_a, coeff_b, lower, upper } => {
                let mut out = Vec::new();
                if let Some(c) = upper.value() {
                    out.push(LinearConstraint::new([(var_a.clone(), coeff_a.clone()), (var_b.clone(), -coeff_b)], rel(upper), c.clone()));
                }
                if let Some(c) = lower.value() {
                    out.push(LinearConstraint::new([(var_a.clone(), -coeff_a), (var_b.clone(), coeff_b.clone())], rel(lower), -c));
                }
                out
            }
        }
    }
}

fn fmt_lower(f: &mut fmt::Formatter<'_>, b: &Bound) -> fmt::Result {
    match b {
        Bound::Finite { value, strict } => write!(f, "{} {} ", value, if *strict { "<" } else { "≤" }),
        Bound::Infinity => Ok(()),
    }
}

fn fmt_upper(f: &mut fmt::Formatter<'_>, b: &Bound) -> fmt::Result {
    match b {
        Bound::Finite { value, strict } => write!(f, " {} {}", if *strict { "<" } else { "≤" }, value),
        Bound::Infinity => Ok(()),
    }
}

fn coeff_term(c: &Rational, v: &str) -> String {
    if *c == Rational::one() {
        v.to_string()
    } else {
        format!("{c}{v}")
    }
}

impl fmt::Display for ZoneConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZoneConstraint::UpperBound(v, b) => {
                write!(f, "{v}")?;
                fmt_upper(f, b)
            }
            ZoneConstraint::LowerBound(v, b) => {
                fmt_lower(f, b)?;
                write!(f, "{v}")
            }
            ZoneConstraint::Relative { var_a, var_b, coeff_a, coeff_b, lower, upper } => {
                fmt_lower(f, lower)?;
                write!(f, "{} − {}", coeff_term(coeff_a, var_a), coeff_term(coeff_b, var_b))?;
                fmt_upper(f, upper)
            }
        }
    }
}

/// Renders a constraint list in zone syntax, collapsing `c ≤ x ≤ c` to
/// `x = c` and pairing lower/upper bounds of the same variable.
pub fn render_zone(constraints: &[ZoneConstraint]) -> String {
    let mut lowers: BTreeMap<&str, &Bound> = BTreeMap::new();
    let mut uppers: BTreeMap<&str, &Bound> = BTreeMap::new();
    for c in constraints {
        match c {
            ZoneConstraint::LowerBound(v, b) => {
                lowers.insert(v, b);
            }
            ZoneConstraint::UpperBound(v, b) => {
                uppers.insert(v, b);
            }
            _ => {}
        }
    }
    let mut parts = Vec::new();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    for c in constraints {
        match c {
            ZoneConstraint::LowerBound(v, _) | ZoneConstraint::UpperBound(v, _) => {
                if !done.insert(v.as_str()) {
                    continue;
                }
                let lo = lowers.get(v.as_str()).copied().unwrap_or(&Bound::Infinity);
                let hi = uppers.get(v.as_str()).copied().unwrap_or(&Bound::Infinity);
                match (lo, hi) {
                    (Bound::Finite { value: a, strict: false }, Bound::Finite { value: b, strict: false }) if a == b => {
                        parts.push(format!("{v} = {a}"))
                    }
                    _ => {
                        let mut s = String::new();
                        if let Bound::Finite { value, strict } = lo {
                            s.push_str(&format!("{} {} ", value, if *strict { "<" } else { "≤" }));
                        }
                        s.push_str(v);
                        if let Bound::Finite { value, strict } = hi {
                            s.push_str(&format!(" {} {}", if *strict { "<" } else { "≤" }, value));
                        }
                        parts.push(s);
                    }
                }
            }
            rel => parts.push(rel.to_string()),
        }
    }
    if parts.is_empty() {
        "true".to_string()
    } else {
        parts.join(" ∧ ")
    }
}

/// A multirate zone: a closed difference constraint matrix plus its rate
/// vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dcm {
    vars: Vec<String>,
    /// `rates[0]` is the reference rate 1.
    rates: Vec<Rational>,
    bounds: Vec<Bound>,
    canonical: bool,
    empty: bool,
}

impl Dcm {
    /// The unconstrained zone over `vars` flowing at `rates`.
    pub fn universe(vars: &[String], rates: &BTreeMap<String, Rational>) -> Result<Dcm, DcmError> {
        let mut rv = vec![Rational::one()];
        for v in vars {
            let k = rates.get(v).ok_or_else(|| DcmError::MissingRate(v.clone()))?;
            if !k.is_positive() {
                return Err(DcmError::UnsupportedRate { var: v.clone(), rate: k.clone() });
            }
            rv.push(k.clone());
        }
        let n = vars.len() + 1;
        let mut bounds = vec![Bound::Infinity; n * n];
        for i in 0..n {
            bounds[i * n + i] = Bound::zero();
        }
        // Variables range over the reals; no implicit non-negativity.
        Ok(Dcm { vars: vars.to_vec(), rates: rv, bounds, canonical: true, empty: false })
    }

    /// Builds the canonical DCM of a conjunction of zone constraints.
    pub fn from_constraints(
        vars: &[String],
        rates: &BTreeMap<String, Rational>,
        constraints: &[ZoneConstraint],
    ) -> Result<Dcm, DcmError> {
        let mut d = Dcm::universe(vars, rates)?;
        for c in constraints {
            d.add_constraint(c)?;
        }
        d.canonical = false;
        d.canonicalize_in_place();
        Ok(d)
    }

    fn add_constraint(&mut self, c: &ZoneConstraint) -> Result<(), DcmError> {
        match c {
            ZoneConstraint::UpperBound(v, b) => {
                let i = self.index_of(v)?;
                self.tighten(i, 0, b.clone());
            }
            ZoneConstraint::LowerBound(v, b) => {
                let i = self.index_of(v)?;
                self.tighten(0, i, negate_lower(b));
            }
            ZoneConstraint::Relative { var_a, var_b, coeff_a, coeff_b, lower, upper } => {
                let i = self.index_of(var_a)?;
                let j = self.index_of(var_b)?;
                // coeff_a·a − coeff_b·b must be m·(k_b·a − k_a·b) for some m > 0.
                let m = coeff_a / &self.rates[j];
                let consistent = m.is_positive() && *coeff_b == &m * &self.rates[i];
                if !consistent {
                    return Err(DcmError::NonZoneConstraint {
                        a: var_a.clone(),
                        b: var_b.clone(),
                        expected_a: self.rates[j].clone(),
                        expected_b: self.rates[i].clone(),
                    });
                }
                let inv = m.recip();
                self.tighten(i, j, upper.scale(&inv));
                self.tighten(j, i, negate_lower(lower).scale(&inv));
            }
        }
        Ok(())
    }

    fn tighten(&mut self, i: usize, j: usize, b: Bound) {
        let n = self.dim();
        let cell = &mut self.bounds[i * n + j];
        if b < *cell {
            *cell = b;
            self.canonical = false;
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len() + 1
    }

    /// Rate of the variable at matrix index `i` (0 is the reference).
    pub fn rate_at(&self, i: usize) -> &Rational {
        &self.rates[i]
    }

    pub fn rate(&self, var: &str) -> Result<&Rational, DcmError> {
        Ok(&self.rates[self.index_of(var)?])
    }

    pub fn rates(&self) -> BTreeMap<String, Rational> {
        self.vars.iter().cloned().zip(self.rates[1..].iter().cloned()).collect()
    }

    pub fn index_of(&self, var: &str) -> Result<usize, DcmError> {
        self.vars.iter().position(|v| v == var).map(|p| p + 1).ok_or_else(|| DcmError::UnknownVariable(var.to_string()))
    }

    pub fn bound(&self, i: usize, j: usize) -> &Bound {
        &self.bounds[i * self.dim() + j]
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Upper bound of `var` (entry `(var, x₀)`).
    pub fn upper(&self, var: &str) -> Result<&Bound, DcmError> {
        Ok(self.bound(self.index_of(var)?, 0))
    }

    /// Lower bound of `var` as `(c, strict)` meaning `var ≥ c` / `var > c`.
    pub fn lower(&self, var: &str) -> Result<Option<(Rational, bool)>, DcmError> {
        Ok(match self.bound(0, self.index_of(var)?) {
            Bound::Infinity => None,
            Bound::Finite { value, strict } => Some((-value, *strict)),
        })
    }

    /// Composes `(i, j)` with `(j, l)` into a bound on `(i, l)`:
    /// `(k_l·c₁ + k_i·c₂) / k_j`, strict if either input is strict.
    fn chain(&self, i: usize, j: usize, l: usize) -> Bound {
        match (self.bound(i, j), self.bound(j, l)) {
            (Bound::Finite { value: c1, strict: s1 }, Bound::Finite { value: c2, strict: s2 }) => {
                let value = (&self.rates[l] * c1 + &self.rates[i] * c2) / &self.rates[j];
                Bound::Finite { value, strict: *s1 || *s2 }
            }
            _ => Bound::Infinity,
        }
    }

    fn canonicalize_in_place(&mut self) {
        if self.empty {
            self.canonical = true;
            return;
        }
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                if self.bound(i, j).is_infinite() {
                    continue;
                }
                for l in 0..n {
                    let b = self.chain(i, j, l);
                    if b < self.bounds[i * n + l] {
                        self.bounds[i * n + l] = b;
                    }
                }
            }
            if (0..n).any(|i| self.bound(i, i).is_negative()) {
                self.mark_empty();
                return;
            }
        }
        self.canonical = true;
    }

    fn mark_empty(&mut self) {
        let n = self.dim();
        self.bounds = vec![Bound::Infinity; n * n];
        for i in 0..n {
            self.bounds[i * n + i] = Bound::lt(Rational::zero());
        }
        self.empty = true;
        self.canonical = true;
    }

    /// The empty zone over the same variables and rates.
    pub fn empty_like(&self) -> Dcm {
        let mut d = self.clone();
        d.mark_empty();
        d
    }

    /// Tightest equivalent matrix (all-pairs closure).
    pub fn canonicalize(&self) -> Dcm {
        let mut d = self.clone();
        d.canonicalize_in_place();
        d
    }

    fn check_same_context(&self, other: &Dcm) -> Result<(), DcmError> {
        if self.vars != other.vars {
            return Err(DcmError::IncompatibleContext(format!("variables {:?} vs {:?}", self.vars, other.vars)));
        }
        if self.rates != other.rates {
            return Err(DcmError::IncompatibleContext("rate vectors differ".into()));
        }
        Ok(())
    }

    pub fn intersect(&self, other: &Dcm) -> Result<Dcm, DcmError> {
        self.check_same_context(other)?;
        if self.empty || other.empty {
            return Ok(self.empty_like());
        }
        let mut d = self.clone();
        for (a, b) in d.bounds.iter_mut().zip(&other.bounds) {
            if *b < *a {
                *a = b.clone();
            }
        }
        d.canonical = false;
        d.canonicalize_in_place();
        Ok(d)
    }

    /// Intersects with additional constraints (guards, invariants).
    pub fn constrain(&self, constraints: &[ZoneConstraint]) -> Result<Dcm, DcmError> {
        let other = Dcm::from_constraints(&self.vars, &self.rates(), constraints)?;
        self.intersect(&other)
    }

    /// Time successors: drops every upper bound `(v, x₀)`; lower bounds and
    /// rate-scaled differences are flow-invariant and stay.
    pub fn elapse(&self) -> Dcm {
        let mut d = if self.canonical { self.clone() } else { self.canonicalize() };
        if d.empty {
            return d;
        }
        let n = d.dim();
        for i in 1..n {
            d.bounds[i * n] = Bound::Infinity;
        }
        d.canonical = false;
        d.canonicalize_in_place();
        d
    }

    /// Resets every variable in `values` to its exact value and switches the
    /// rate vector to `new_rates`. A variable whose rate changes must be reset.
    pub fn reset(&self, values: &BTreeMap<String, Rational>, new_rates: &BTreeMap<String, Rational>) -> Result<Dcm, DcmError> {
        let mut reset_idx = BTreeSet::new();
        for v in values.keys() {
            reset_idx.insert(self.index_of(v)?);
        }
        let mut rates = vec![Rational::one()];
        for (i, v) in self.vars.iter().enumerate() {
            let k = new_rates.get(v).ok_or_else(|| DcmError::MissingRate(v.clone()))?;
            if !k.is_positive() {
                return Err(DcmError::UnsupportedRate { var: v.clone(), rate: k.clone() });
            }
            if *k != self.rates[i + 1] && !reset_idx.contains(&(i + 1)) {
                return Err(DcmError::InitializedViolation { var: v.clone(), from: self.rates[i + 1].clone(), to: k.clone() });
            }
            rates.push(k.clone());
        }
        let mut d = if self.canonical { self.clone() } else { self.canonicalize() };
        if d.empty {
            d.rates = rates;
            return Ok(d);
        }
        let n = d.dim();
        for &r in &reset_idx {
            for m in 0..n {
                if m != r {
                    d.bounds[r * n + m] = Bound::Infinity;
                    d.bounds[m * n + r] = Bound::Infinity;
                }
            }
        }
        d.rates = rates;
        for (v, value) in values {
            let r = d.index_of(v)?;
            d.bounds[r * n] = Bound::le(value.clone());
            d.bounds[r] = Bound::le(-value);
        }
        d.canonical = false;
        d.canonicalize_in_place();
        Ok(d)
    }

    /// Existentially eliminates `var`.
    pub fn project(&self, var: &str) -> Result<Dcm, DcmError> {
        let r = self.index_of(var)?;
        let d = if self.canonical { self.clone() } else { self.canonicalize() };
        let n = d.dim();
        let keep: Vec<usize> = (0..n).filter(|&i| i != r).collect();
        let mut bounds = Vec::with_capacity(keep.len() * keep.len());
        for &i in &keep {
            for &j in &keep {
                bounds.push(d.bounds[i * n + j].clone());
            }
        }
        let mut out = Dcm {
            vars: d.vars.iter().filter(|v| v.as_str() != var).cloned().collect(),
            rates: keep.iter().map(|&i| d.rates[i].clone()).collect(),
            bounds,
            canonical: true,
            empty: false,
        };
        if d.empty {
            out.mark_empty();
        }
        Ok(out)
    }

    /// Restricts to the listed variables (in the given order).
    pub fn project_onto(&self, keep: &[String]) -> Result<Dcm, DcmError> {
        let mut d = self.clone();
        for v in self.vars.iter().filter(|v| !keep.contains(v)) {
            d = d.project(v)?;
        }
        for v in keep {
            d.index_of(v)?;
        }
        if d.vars != keep {
            d = d.reorder(keep)?;
        }
        Ok(d)
    }

    fn reorder(&self, order: &[String]) -> Result<Dcm, DcmError> {
        let idx: Vec<usize> = std::iter::once(Ok(0)).chain(order.iter().map(|v| self.index_of(v))).collect::<Result<_, _>>()?;
        let n = self.dim();
        let mut bounds = Vec::with_capacity(n * n);
        for &i in &idx {
            for &j in &idx {
                bounds.push(self.bounds[i * n + j].clone());
            }
        }
        Ok(Dcm {
            vars: order.to_vec(),
            rates: idx.iter().map(|&i| self.rates[i].clone()).collect(),
            bounds,
            canonical: self.canonical,
            empty: self.empty,
        })
    }

    /// Whether `other`'s point set is contained in `self`'s.
    pub fn includes(&self, other: &Dcm) -> Result<bool, DcmError> {
        if self.vars != other.vars {
            return Err(DcmError::IncompatibleContext(format!("variables {:?} vs {:?}", self.vars, other.vars)));
        }
        let a = if self.canonical { self.clone() } else { self.canonicalize() };
        let b = if other.canonical { other.clone() } else { other.canonicalize() };
        if b.empty {
            return Ok(true);
        }
        if a.empty {
            return Ok(false);
        }
        if a.rates == b.rates {
            return Ok(a.bounds.iter().zip(&b.bounds).all(|(x, y)| y <= x));
        }
        let poly = b.to_polyhedron();
        Ok(a.cell_constraints().iter().all(|c| poly.entails(c)))
    }

    /// The constraint encoded by each finite off-diagonal cell.
    fn cell_constraints(&self) -> Vec<LinearConstraint> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(c) = self.cell_constraint(i, j) {
                    out.push(c);
                }
            }
        }
        out
    }

    fn cell_constraint(&self, i: usize, j: usize) -> Option<LinearConstraint> {
        let Bound::Finite { value, strict } = self.bound(i, j) else { return None };
        let mut terms = Vec::new();
        if i > 0 {
            terms.push((self.vars[i - 1].clone(), self.rates[j].clone()));
        }
        if j > 0 {
            terms.push((self.vars[j - 1].clone(), -&self.rates[i]));
        }
        Some(LinearConstraint::new(terms, if *strict { Rel::Lt } else { Rel::Le }, value.clone()))
    }

    /// The zone as a linear system over variable names.
    pub fn to_polyhedron(&self) -> Polyhedron {
        if self.empty {
            return Polyhedron::new(vec![LinearConstraint::falsum()]);
        }
        Polyhedron::new(self.cell_constraints())
    }

    /// Membership of a concrete valuation (all variables must be bound).
    pub fn contains_point(&self, point: &Point) -> Result<bool, DcmError> {
        for v in &self.vars {
            if !point.contains_key(v) {
                return Err(DcmError::UnknownVariable(v.clone()));
            }
        }
        if self.empty {
            return Ok(false);
        }
        Ok(self.cell_constraints().iter().all(|c| c.holds_at(point) == Some(true)))
    }

    /// Value of the scaled difference `k_j·v_i − k_i·v_j` at `point`.
    pub fn scaled_difference(&self, i: usize, j: usize, point: &Point) -> Rational {
        let vi = if i == 0 { Rational::zero() } else { point[&self.vars[i - 1]].clone() };
        let vj = if j == 0 { Rational::zero() } else { point[&self.vars[j - 1]].clone() };
        &self.rates[j] * vi - &self.rates[i] * vj
    }

    /// Renders the zone as bounds per variable followed by rate-scaled
    /// relative constraints. Relative constraints between two variables
    /// that are both fixed to a single value are implied and omitted.
    pub fn to_zone_constraints(&self) -> Result<Vec<ZoneConstraint>, DcmError> {
        let d = if self.canonical { self.clone() } else { self.canonicalize() };
        if d.empty {
            return Err(DcmError::EmptyZone);
        }
        let n = d.dim();
        let mut out = Vec::new();
        let is_point = |i: usize| match (d.bound(i, 0), d.bound(0, i)) {
            (Bound::Finite { value: hi, strict: false }, Bound::Finite { value: lo, strict: false }) => *hi == -lo,
            _ => false,
        };
        for i in 1..n {
            let v = &d.vars[i - 1];
            let lo = d.bound(0, i);
            if !lo.is_infinite() {
                out.push(ZoneConstraint::LowerBound(v.clone(), negate_lower(lo)));
            }
            let hi = d.bound(i, 0);
            if !hi.is_infinite() {
                out.push(ZoneConstraint::UpperBound(v.clone(), hi.clone()));
            }
        }
        for i in 1..n {
            for j in (i + 1)..n {
                if is_point(i) && is_point(j) {
                    continue;
                }
                // Lead with the variable that is not pinned to a point.
                let (a, b) = if is_point(i) && !is_point(j) { (j, i) } else { (i, j) };
                let upper = d.bound(a, b).clone();
                let lower = negate_lower(d.bound(b, a));
                if upper.is_infinite() && lower.is_infinite() {
                    continue;
                }
                out.push(ZoneConstraint::Relative {
                    var_a: d.vars[a - 1].clone(),
                    var_b: d.vars[b - 1].clone(),
                    coeff_a: d.rates[b].clone(),
                    coeff_b: d.rates[a].clone(),
                    lower,
                    upper,
                });
            }
        }
        Ok(out)
    }

    /// Renders one cell as `(a, b, c, ≺)` with `a = k_col`, `b = k_row`.
    pub fn cell_tuple(&self, i: usize, j: usize) -> String {
        if i == j {
            return format!("(1, 1, {})", self.bound(i, i));
        }
        format!("({}, {}, {})", self.rates[j], self.rates[i], self.bound(i, j))
    }
}

/// `v ≻ c` is stored as `−v ≺ −c`.
fn negate_lower(b: &Bound) -> Bound {
    match b {
        Bound::Infinity => Bound::Infinity,
        Bound::Finite { value, strict } => Bound::Finite { value: -value, strict: *strict },
    }
}

impl fmt::Display for Dcm {
    /// Tabular form: rows/columns ordered `x₀` first, cells as `(a, b, c, ≺)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        let names: Vec<String> = std::iter::once("x0".to_string()).chain(self.vars.iter().cloned()).collect();
        let cells: Vec<Vec<String>> = (0..n).map(|i| (0..n).map(|j| self.cell_tuple(i, j)).collect()).collect();
        let label_w = names.iter().map(|s| s.chars().count()).max().unwrap_or(2);
        let col_w: Vec<usize> = (0..n)
            .map(|j| cells.iter().map(|r| r[j].chars().count()).chain([names[j].chars().count()]).max().unwrap_or(0))
            .collect();
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
        write!(f, "{}", pad("", label_w))?;
        for j in 0..n {
            write!(f, "  {}", pad(&names[j], col_w[j]))?;
        }
        writeln!(f)?;
        for i in 0..n {
            write!(f, "{}", pad(&names[i], label_w))?;
            for j in 0..n {
                write!(f, "  {}", pad(&cells[i][j], col_w[j]))?;
            }
            writeln!(f)?;
        }
        if self.empty {
            writeln!(f, "(empty)")?;
        }
        Ok(())
    }
}
