//! Exact linear constraint reasoning over the rationals.
//!
//! Conjunctions of constraints `Σ aᵢ·vᵢ ⋈ c` with `⋈ ∈ {<, ≤, =}` are handled
//! by Fourier–Motzkin elimination. Systems produced by zones and schema
//! predicates are small, so redundant constraints are only pruned by keeping
//! the tightest bound per coefficient direction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rational::Rational;

pub type Point = BTreeMap<String, Rational>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

/// `Σ coeffs[v]·v rel rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<String, Rational>,
    pub rel: Rel,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn new(coeffs: impl IntoIterator<Item = (String, Rational)>, rel: Rel, rhs: Rational) -> Self {
        let mut map: BTreeMap<String, Rational> = BTreeMap::new();
        for (v, c) in coeffs {
            let e = map.entry(v).or_insert_with(Rational::zero);
            *e += &c;
        }
        map.retain(|_, c| !c.is_zero());
        LinearConstraint { coeffs: map, rel, rhs }
    }

    /// Constant constraint `0 rel rhs`, i.e. `true` or `false`.
    pub fn constant_truth(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        let zero = Rational::zero();
        Some(match self.rel {
            Rel::Le => zero <= self.rhs,
            Rel::Lt => zero < self.rhs,
            Rel::Eq => zero == self.rhs,
        })
    }

    pub fn falsum() -> Self {
        LinearConstraint { coeffs: BTreeMap::new(), rel: Rel::Lt, rhs: Rational::zero() }
    }

    pub fn lhs_at(&self, point: &Point) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (v, c) in &self.coeffs {
            acc += &(c * point.get(v)?);
        }
        Some(acc)
    }

    /// Evaluates the constraint at a point; `None` if a variable is unbound.
    pub fn holds_at(&self, point: &Point) -> Option<bool> {
        let lhs = self.lhs_at(point)?;
        Some(match self.rel {
            Rel::Le => lhs <= self.rhs,
            Rel::Lt => lhs < self.rhs,
            Rel::Eq => lhs == self.rhs,
        })
    }

    fn scaled(&self, k: &Rational) -> LinearConstraint {
        debug_assert!(k.is_positive());
        LinearConstraint {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            rel: self.rel,
            rhs: &self.rhs * k,
        }
    }

    fn negated_sides(&self) -> LinearConstraint {
        LinearConstraint {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            rel: self.rel,
            rhs: -&self.rhs,
        }
    }

    /// The complement as a disjunction of constraints.
    pub fn negate(&self) -> Vec<LinearConstraint> {
        let flipped = self.negated_sides();
        match self.rel {
            Rel::Le => vec![LinearConstraint { rel: Rel::Lt, ..flipped }],
            Rel::Lt => vec![LinearConstraint { rel: Rel::Le, ..flipped }],
            Rel::Eq => vec![
                LinearConstraint { rel: Rel::Lt, ..self.clone() },
                LinearConstraint { rel: Rel::Lt, ..flipped },
            ],
        }
    }

    /// Equalities become two inequalities.
    fn as_inequalities(&self) -> Vec<LinearConstraint> {
        match self.rel {
            Rel::Eq => vec![
                LinearConstraint { rel: Rel::Le, ..self.clone() },
                LinearConstraint { rel: Rel::Le, ..self.negated_sides() },
            ],
            _ => vec![self.clone()],
        }
    }

    /// Substitute `var := expr` where `expr` is `Σ coeffs + constant`.
    fn substitute(&self, var: &str, expr: &BTreeMap<String, Rational>, constant: &Rational) -> LinearConstraint {
        let Some(a) = self.coeffs.get(var).cloned() else {
            return self.clone();
        };
        let mut terms: Vec<(String, Rational)> =
            self.coeffs.iter().filter(|(v, _)| v.as_str() != var).map(|(v, c)| (v.clone(), c.clone())).collect();
        for (v, c) in expr {
            terms.push((v.clone(), &a * c));
        }
        LinearConstraint::new(terms, self.rel, &self.rhs - &(&a * constant))
    }

    /// Canonical key: coefficients divided by the absolute value of the
    /// first non-zero coefficient.
    fn direction_key(&self) -> Option<(Vec<(String, Rational)>, Rational)> {
        let first = self.coeffs.values().next()?.abs();
        Some((self.coeffs.iter().map(|(v, c)| (v.clone(), c / &first)).collect(), first))
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            write!(f, "0")?;
        }
        for (i, (v, c)) in self.coeffs.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mag == Rational::one() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}{v}")?;
            }
        }
        let op = match self.rel {
            Rel::Le => "≤",
            Rel::Lt => "<",
            Rel::Eq => "=",
        };
        write!(f, " {op} {}", self.rhs)
    }
}

/// A conjunction of linear constraints (a convex polyhedron).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polyhedron {
    pub constraints: Vec<LinearConstraint>,
}

impl Polyhedron {
    pub fn new(constraints: Vec<LinearConstraint>) -> Self {
        Polyhedron { constraints }
    }

    pub fn universe() -> Self {
        Polyhedron::default()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.constraints.iter().flat_map(|c| c.coeffs.keys().cloned()).collect()
    }

    pub fn and(&self, c: LinearConstraint) -> Polyhedron {
        let mut p = self.clone();
        p.constraints.push(c);
        p
    }

    pub fn conjoin(&self, other: &Polyhedron) -> Polyhedron {
        let mut p = self.clone();
        p.constraints.extend(other.constraints.iter().cloned());
        p
    }

    pub fn contains(&self, point: &Point) -> Option<bool> {
        for c in &self.constraints {
            if !c.holds_at(point)? {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Existentially eliminates one variable.
    pub fn eliminate(&self, var: &str) -> Polyhedron {
        // Prefer an equality: exact substitution keeps the system small.
        if let Some(eq) = self.constraints.iter().find(|c| c.rel == Rel::Eq && c.coeffs.contains_key(var)) {
            let a = eq.coeffs[var].clone();
            let expr: BTreeMap<String, Rational> =
                eq.coeffs.iter().filter(|(v, _)| v.as_str() != var).map(|(v, c)| (v.clone(), -(c / &a))).collect();
            let constant = &eq.rhs / &a;
            let rest = self.constraints.iter().filter(|c| !std::ptr::eq(*c, eq)).map(|c| c.substitute(var, &expr, &constant)).collect();
            return Polyhedron::new(rest).simplified();
        }
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut rest = Vec::new();
        for c in self.constraints.iter().flat_map(|c| c.as_inequalities()) {
            match c.coeffs.get(var) {
                Some(a) if a.is_positive() => upper.push(c),
                Some(_) => lower.push(c),
                None => rest.push(c),
            }
        }
        for u in &upper {
            for l in &lower {
                let a = u.coeffs[var].clone();
                let b = -&l.coeffs[var];
                let lu = u.scaled(&b);
                let ll = l.scaled(&a);
                let terms = lu.coeffs.into_iter().chain(ll.coeffs).filter(|(v, _)| v.as_str() != var);
                let rel = if u.rel == Rel::Lt || l.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                rest.push(LinearConstraint::new(terms, rel, lu.rhs + ll.rhs));
            }
        }
        Polyhedron::new(rest).simplified()
    }

    pub fn eliminate_all<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> Polyhedron {
        vars.into_iter().fold(self.clone(), |p, v| p.eliminate(v))
    }

    /// Projects onto `keep`, eliminating every other variable.
    pub fn project(&self, keep: &BTreeSet<String>) -> Polyhedron {
        let drop: Vec<String> = self.vars().into_iter().filter(|v| !keep.contains(v)).collect();
        self.eliminate_all(&drop)
    }

    /// Removes trivially true constraints, collapses a trivially false system
    /// to `0 < 0`, and keeps only the tightest inequality per direction.
    pub fn simplified(&self) -> Polyhedron {
        let mut best: BTreeMap<Vec<(String, Rational)>, (Rational, Rel)> = BTreeMap::new();
        let mut eqs: Vec<LinearConstraint> = Vec::new();
        for c in &self.constraints {
            if let Some(t) = c.constant_truth() {
                if t {
                    continue;
                }
                return Polyhedron::new(vec![LinearConstraint::falsum()]);
            }
            let (key, scale) = c.direction_key().expect("non-constant");
            let rhs = &c.rhs / &scale;
            if c.rel == Rel::Eq {
                let n = LinearConstraint::new(key.clone(), Rel::Eq, rhs);
                if !eqs.contains(&n) {
                    eqs.push(n);
                }
                continue;
            }
            let tighter = match best.get(&key) {
                None => true,
                Some((r, rel)) => rhs < *r || (rhs == *r && c.rel == Rel::Lt && *rel == Rel::Le),
            };
            if tighter {
                best.insert(key, (rhs, c.rel));
            }
        }
        let mut out = eqs;
        out.extend(best.into_iter().map(|(k, (rhs, rel))| LinearConstraint::new(k, rel, rhs)));
        Polyhedron::new(out)
    }

    pub fn is_trivially_false(&self) -> bool {
        self.constraints.iter().any(|c| c.constant_truth() == Some(false))
    }

    pub fn is_feasible(&self) -> bool {
        let vars = self.vars();
        !self.eliminate_all(&vars).is_trivially_false()
    }

    /// Whether every point of `self` satisfies `c`.
    pub fn entails(&self, c: &LinearConstraint) -> bool {
        c.negate().into_iter().all(|n| !self.and(n).is_feasible())
    }

    /// A satisfying rational point over `self.vars()`, or `None` if empty.
    pub fn sample(&self) -> Option<Point> {
        let order: Vec<String> = self.vars().into_iter().collect();
        let mut stages = vec![self.simplified()];
        for v in &order {
            let next = stages.last().unwrap().eliminate(v);
            stages.push(next);
        }
        if stages.last().unwrap().is_trivially_false() {
            return None;
        }
        let mut point = Point::new();
        // stage k still mentions order[k..]; choose them back to front.
        for k in (0..order.len()).rev() {
            let var = &order[k];
            let value = choose_value(&stages[k], var, &point)?;
            point.insert(var.clone(), value);
        }
        Some(point)
    }
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constraints.is_empty() {
            return write!(f, "true");
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Picks a value for `var` satisfying every constraint of `stage` once the
/// already-chosen variables are substituted.
fn choose_value(stage: &Polyhedron, var: &str, chosen: &Point) -> Option<Rational> {
    let mut lo: Option<(Rational, bool)> = None;
    let mut hi: Option<(Rational, bool)> = None;
    let mut exact: Option<Rational> = None;
    for c in &stage.constraints {
        let Some(a) = c.coeffs.get(var) else { continue };
        let mut rest = Rational::zero();
        for (v, k) in &c.coeffs {
            if v != var {
                rest += &(k * chosen.get(v)?);
            }
        }
        let bound = (&c.rhs - &rest) / a;
        let strict = c.rel == Rel::Lt;
        match c.rel {
            Rel::Eq => exact = Some(bound),
            _ if a.is_positive() => {
                if hi.as_ref().is_none_or(|(h, s)| bound < *h || (bound == *h && strict && !*s)) {
                    hi = Some((bound, strict));
                }
            }
            _ => {
                if lo.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !*s)) {
                    lo = Some((bound, strict));
                }
            }
        }
    }
    let fits = |x: &Rational| {
        lo.as_ref().is_none_or(|(l, s)| if *s { x > l } else { x >= l })
            && hi.as_ref().is_none_or(|(h, s)| if *s { x < h } else { x <= h })
    };
    if let Some(x) = exact {
        return fits(&x).then_some(x);
    }
    let one = Rational::one();
    let candidate = match (&lo, &hi) {
        (None, None) => Rational::zero(),
        (Some((l, s)), None) => {
            if *s {
                l.floor() + &one
            } else {
                l.clone()
            }
        }
        (None, Some((h, s))) => {
            let f = h.floor();
            if *s && f == *h {
                f - &one
            } else {
                f
            }
        }
        (Some((l, _)), Some((h, _))) => {
            let mid = (l + h) / Rational::from_int(2);
            let f = mid.floor();
            if fits(&f) {
                f
            } else if fits(&l.clone()) {
                l.clone()
            } else {
                mid
            }
        }
    };
    fits(&candidate).then_some(candidate)
}

/// Decides `p ⊆ ⋃ qs`. Returns a point of `p` outside every `qs[i]` when
/// the inclusion fails.
pub fn uncovered_point(p: &Polyhedron, qs: &[Polyhedron]) -> Option<Point> {
    if !p.is_feasible() {
        return None;
    }
    let Some((q, rest)) = qs.split_first() else {
        return p.sample();
    };
    // p \ q = ⋃ᵢ (p ∧ q₁ ∧ … ∧ qᵢ₋₁ ∧ ¬qᵢ)
    let mut acc = p.clone();
    for c in &q.constraints {
        for n in c.negate() {
            if let Some(pt) = uncovered_point(&acc.and(n), rest) {
                return Some(pt);
            }
        }
        acc = acc.and(c.clone());
        if !acc.is_feasible() {
            break;
        }
    }
    None
}
