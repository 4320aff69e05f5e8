//! Schema predicate expressions and their reduction to linear constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::linear::{LinearConstraint, Rel};
use crate::rational::Rational;

use super::{SchemaError, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Rational),
    Label(String),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// `⌊e⌋`
    Floor(Box<Expr>),
    /// Floored remainder on integers.
    Mod(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    fn holds(self, a: &Rational, b: &Rational) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

/// One conjunct of a schema predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    Cmp(Expr, CmpOp, Expr),
    Member(Expr, Vec<Expr>),
    Even(Expr),
    Odd(Expr),
    Bool(bool),
}

/// Result of reducing an expression once the discrete variables are fixed.
#[derive(Clone, Debug, PartialEq)]
pub enum Reduced {
    Label(String),
    Affine { coeffs: BTreeMap<String, Rational>, constant: Rational },
}

impl Reduced {
    fn constant(c: Rational) -> Reduced {
        Reduced::Affine { coeffs: BTreeMap::new(), constant: c }
    }

    fn as_constant(&self) -> Option<&Rational> {
        match self {
            Reduced::Affine { coeffs, constant } if coeffs.is_empty() => Some(constant),
            _ => None,
        }
    }
}

/// How an atom reads once discrete variables are fixed.
#[derive(Clone, Debug, PartialEq)]
pub enum AtomForm {
    Truth(bool),
    Linear(LinearConstraint),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn num(v: impl Into<Rational>) -> Expr {
        Expr::Num(v.into())
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Num(_) | Expr::Label(_) => {}
            Expr::Neg(e) | Expr::Floor(e) => e.vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Mod(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Reduces the expression; variables bound in `env` are substituted and
    /// the rest are kept symbolic as affine terms.
    pub fn reduce(&self, env: &dyn Fn(&str) -> Option<Value>) -> Result<Reduced, SchemaError> {
        let non_linear = || SchemaError::UndecidableFragment(format!("non-linear term `{self}`"));
        Ok(match self {
            Expr::Num(n) => Reduced::constant(n.clone()),
            Expr::Label(l) => Reduced::Label(l.clone()),
            Expr::Var(v) => match env(v) {
                Some(Value::Num(n)) => Reduced::constant(n),
                Some(Value::Label(l)) => Reduced::Label(l),
                None => Reduced::Affine { coeffs: BTreeMap::from([(v.clone(), Rational::one())]), constant: Rational::zero() },
            },
            Expr::Neg(e) => scale(e.reduce(env)?, &-Rational::one()).ok_or_else(|| type_error(self))?,
            Expr::Add(a, b) => add(a.reduce(env)?, b.reduce(env)?, false).ok_or_else(|| type_error(self))?,
            Expr::Sub(a, b) => add(a.reduce(env)?, b.reduce(env)?, true).ok_or_else(|| type_error(self))?,
            Expr::Mul(a, b) => {
                let (ra, rb) = (a.reduce(env)?, b.reduce(env)?);
                if let Some(k) = ra.as_constant() {
                    scale(rb, k).ok_or_else(|| type_error(self))?
                } else if let Some(k) = rb.as_constant() {
                    scale(ra, k).ok_or_else(|| type_error(self))?
                } else if matches!(ra, Reduced::Label(_)) || matches!(rb, Reduced::Label(_)) {
                    return Err(type_error(self));
                } else {
                    return Err(non_linear());
                }
            }
            Expr::Div(a, b) => {
                let rb = b.reduce(env)?;
                let k = rb.as_constant().ok_or_else(non_linear)?;
                if k.is_zero() {
                    return Err(SchemaError::Evaluation(format!("division by zero in `{self}`")));
                }
                scale(a.reduce(env)?, &k.recip()).ok_or_else(|| type_error(self))?
            }
            Expr::Floor(e) => {
                let r = e.reduce(env)?;
                Reduced::constant(r.as_constant().ok_or_else(non_linear)?.floor())
            }
            Expr::Mod(a, b) => {
                let (ra, rb) = (a.reduce(env)?, b.reduce(env)?);
                let (x, m) = (ra.as_constant().ok_or_else(non_linear)?, rb.as_constant().ok_or_else(non_linear)?);
                Reduced::constant(
                    x.rem_floor(m).ok_or_else(|| SchemaError::Evaluation(format!("`mod` needs non-zero integers in `{self}`")))?,
                )
            }
        })
    }

    /// Fully evaluates the expression under a complete assignment.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Value>) -> Result<Value, SchemaError> {
        match self.reduce(env)? {
            Reduced::Label(l) => Ok(Value::Label(l)),
            Reduced::Affine { coeffs, constant } if coeffs.is_empty() => Ok(Value::Num(constant)),
            Reduced::Affine { coeffs, .. } => {
                Err(SchemaError::MissingBinding(coeffs.keys().next().cloned().unwrap_or_default()))
            }
        }
    }
}

fn type_error(e: &Expr) -> SchemaError {
    SchemaError::Evaluation(format!("labels cannot take part in arithmetic: `{e}`"))
}

fn scale(r: Reduced, k: &Rational) -> Option<Reduced> {
    match r {
        Reduced::Label(_) => None,
        Reduced::Affine { coeffs, constant } => Some(Reduced::Affine {
            coeffs: coeffs.into_iter().map(|(v, c)| (v, c * k)).filter(|(_, c)| !c.is_zero()).collect(),
            constant: constant * k,
        }),
    }
}

fn add(a: Reduced, b: Reduced, subtract: bool) -> Option<Reduced> {
    let b = if subtract { scale(b, &-Rational::one())? } else { b };
    match (a, b) {
        (Reduced::Affine { coeffs: ca, constant: ka }, Reduced::Affine { coeffs: cb, constant: kb }) => {
            let mut coeffs = ca;
            for (v, c) in cb {
                let e = coeffs.entry(v).or_insert_with(Rational::zero);
                *e += &c;
            }
            coeffs.retain(|_, c| !c.is_zero());
            Some(Reduced::Affine { coeffs, constant: ka + kb })
        }
        _ => None,
    }
}

impl Atom {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            Atom::Cmp(a, _, b) => {
                a.vars(&mut out);
                b.vars(&mut out);
            }
            Atom::Member(e, set) => {
                e.vars(&mut out);
                for s in set {
                    s.vars(&mut out);
                }
            }
            Atom::Even(e) | Atom::Odd(e) => e.vars(&mut out),
            Atom::Bool(_) => {}
        }
        out
    }

    /// Reduces the atom with the bindings in `env`; unbound variables must
    /// occur linearly and only in comparisons.
    pub fn reduce(&self, env: &dyn Fn(&str) -> Option<Value>) -> Result<AtomForm, SchemaError> {
        match self {
            Atom::Bool(b) => Ok(AtomForm::Truth(*b)),
            Atom::Cmp(a, op, b) => {
                let (ra, rb) = (a.reduce(env)?, b.reduce(env)?);
                match (&ra, &rb) {
                    (Reduced::Label(x), Reduced::Label(y)) => match op {
                        CmpOp::Eq => Ok(AtomForm::Truth(x == y)),
                        CmpOp::Ne => Ok(AtomForm::Truth(x != y)),
                        _ => Err(SchemaError::Evaluation(format!("labels are only comparable with = and !=: `{self}`"))),
                    },
                    (Reduced::Label(_), _) | (_, Reduced::Label(_)) => match op {
                        // A label never equals a number.
                        CmpOp::Eq if ra.as_constant().is_some() || rb.as_constant().is_some() => Ok(AtomForm::Truth(false)),
                        CmpOp::Ne if ra.as_constant().is_some() || rb.as_constant().is_some() => Ok(AtomForm::Truth(true)),
                        _ => Err(SchemaError::Evaluation(format!("cannot compare a label with a number: `{self}`"))),
                    },
                    _ => {
                        let Some(Reduced::Affine { coeffs, constant }) = add(ra, rb, true) else { unreachable!() };
                        if coeffs.is_empty() {
                            return Ok(AtomForm::Truth(op.holds(&constant, &Rational::zero())));
                        }
                        // Σ coeffs + constant ⋈ 0
                        let lc = match op {
                            CmpOp::Le => LinearConstraint::new(coeffs, Rel::Le, -constant),
                            CmpOp::Lt => LinearConstraint::new(coeffs, Rel::Lt, -constant),
                            CmpOp::Eq => LinearConstraint::new(coeffs, Rel::Eq, -constant),
                            CmpOp::Ge => LinearConstraint::new(coeffs.into_iter().map(|(v, c)| (v, -c)), Rel::Le, constant),
                            CmpOp::Gt => LinearConstraint::new(coeffs.into_iter().map(|(v, c)| (v, -c)), Rel::Lt, constant),
                            CmpOp::Ne => {
                                return Err(SchemaError::UndecidableFragment(format!(
                                    "disequality over continuous variables in `{self}`"
                                )))
                            }
                        };
                        Ok(AtomForm::Linear(lc))
                    }
                }
            }
            Atom::Member(e, set) => {
                let v = e.eval(env).map_err(|_| fragment_error(self))?;
                for s in set {
                    if s.eval(env).map_err(|_| fragment_error(self))? == v {
                        return Ok(AtomForm::Truth(true));
                    }
                }
                Ok(AtomForm::Truth(false))
            }
            Atom::Even(e) | Atom::Odd(e) => {
                let v = e.eval(env).map_err(|_| fragment_error(self))?;
                let Value::Num(n) = v else {
                    return Err(SchemaError::Evaluation(format!("parity of a label in `{self}`")));
                };
                let r = n
                    .rem_floor(&Rational::from_int(2))
                    .ok_or_else(|| SchemaError::Evaluation(format!("parity of a non-integer in `{self}`")))?;
                Ok(AtomForm::Truth(r.is_zero() == matches!(self, Atom::Even(_))))
            }
        }
    }

    /// Truth value under a complete assignment.
    pub fn holds(&self, env: &dyn Fn(&str) -> Option<Value>) -> Result<bool, SchemaError> {
        match self.reduce(env)? {
            AtomForm::Truth(b) => Ok(b),
            AtomForm::Linear(c) => Err(SchemaError::MissingBinding(c.coeffs.keys().next().cloned().unwrap_or_default())),
        }
    }

    /// Builds `Σ coeffs·v ⋈ rhs` as an atom.
    pub fn from_linear(c: &LinearConstraint) -> Atom {
        let mut lhs: Option<Expr> = None;
        for (v, k) in &c.coeffs {
            let term = if *k == Rational::one() {
                Expr::Var(v.clone())
            } else if *k == -Rational::one() {
                Expr::Neg(Box::new(Expr::Var(v.clone())))
            } else {
                Expr::Mul(Box::new(Expr::Num(k.clone())), Box::new(Expr::Var(v.clone())))
            };
            lhs = Some(match lhs {
                None => term,
                Some(acc) => Expr::Add(Box::new(acc), Box::new(term)),
            });
        }
        let lhs = lhs.unwrap_or(Expr::Num(Rational::zero()));
        let op = match c.rel {
            Rel::Le => CmpOp::Le,
            Rel::Lt => CmpOp::Lt,
            Rel::Eq => CmpOp::Eq,
        };
        Atom::Cmp(lhs, op, Expr::Num(c.rhs.clone()))
    }

    /// Renames variables according to `map` (unmapped names are kept).
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Atom {
        match self {
            Atom::Cmp(a, op, b) => Atom::Cmp(a.rename(map), *op, b.rename(map)),
            Atom::Member(e, set) => Atom::Member(e.rename(map), set.iter().map(|s| s.rename(map)).collect()),
            Atom::Even(e) => Atom::Even(e.rename(map)),
            Atom::Odd(e) => Atom::Odd(e.rename(map)),
            Atom::Bool(b) => Atom::Bool(*b),
        }
    }
}

fn fragment_error(a: &Atom) -> SchemaError {
    SchemaError::UndecidableFragment(format!("membership/parity over a continuous variable in `{a}`"))
}

impl Expr {
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Expr {
        let r = |e: &Expr| Box::new(e.rename(map));
        match self {
            Expr::Var(v) => Expr::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Expr::Num(_) | Expr::Label(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(r(e)),
            Expr::Floor(e) => Expr::Floor(r(e)),
            Expr::Add(a, b) => Expr::Add(r(a), r(b)),
            Expr::Sub(a, b) => Expr::Sub(r(a), r(b)),
            Expr::Mul(a, b) => Expr::Mul(r(a), r(b)),
            Expr::Div(a, b) => Expr::Div(r(a), r(b)),
            Expr::Mod(a, b) => Expr::Mod(r(a), r(b)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) | Expr::Mod(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(n) if n.is_negative() || !n.is_integer() => 2,
            _ => 4,
        }
    }

    /// Writes the expression, decorating variable names through `name`.
    pub fn write_with(&self, f: &mut dyn fmt::Write, name: &dyn Fn(&str) -> String) -> fmt::Result {
        let child = |f: &mut dyn fmt::Write, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "(")?;
                e.write_with(f, name)?;
                write!(f, ")")
            } else {
                e.write_with(f, name)
            }
        };
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Label(l) => write!(f, "{l}"),
            Expr::Var(v) => write!(f, "{}", name(v)),
            Expr::Neg(e) => {
                write!(f, "-")?;
                child(f, e, 3)
            }
            Expr::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, " * ")?;
                child(f, b, 3)
            }
            Expr::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, " / ")?;
                child(f, b, 3)
            }
            Expr::Mod(a, b) => {
                child(f, a, 2)?;
                write!(f, " mod ")?;
                child(f, b, 3)
            }
            Expr::Floor(e) => {
                write!(f, "floor(")?;
                e.write_with(f, name)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, &|v| v.to_string())
    }
}

impl Atom {
    pub fn write_with(&self, f: &mut dyn fmt::Write, name: &dyn Fn(&str) -> String) -> fmt::Result {
        match self {
            Atom::Bool(b) => write!(f, "{b}"),
            Atom::Cmp(a, op, b) => {
                a.write_with(f, name)?;
                write!(f, " {} ", op.symbol())?;
                b.write_with(f, name)
            }
            Atom::Member(e, set) => {
                e.write_with(f, name)?;
                write!(f, " in {{")?;
                for (i, s) in set.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    s.write_with(f, name)?;
                }
                write!(f, "}}")
            }
            Atom::Even(e) => {
                write!(f, "even(")?;
                e.write_with(f, name)?;
                write!(f, ")")
            }
            Atom::Odd(e) => {
                write!(f, "odd(")?;
                e.write_with(f, name)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, &|v| v.to_string())
    }
}
