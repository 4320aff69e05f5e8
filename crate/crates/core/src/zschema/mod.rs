//! Z schemas over finite discrete domains and zone-constrained continuous
//! variables.
//!
//! A schema is a list of typed declarations plus a conjunctive predicate.
//! Hiding moves declarations into an existentially quantified block; blocks
//! that can be eliminated exactly (closed sub-formulas, purely linear
//! continuous variables) are eliminated on the spot.

mod expr;
mod oracle;
mod refine;
mod tv;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::linear::{LinearConstraint, Polyhedron};
use crate::rational::Rational;

pub use expr::{Atom, AtomForm, CmpOp, Expr, Reduced};
pub use oracle::{geq_bruteforce, OracleConfig};
pub use refine::{rcl, rcl_detailed, rcz, rcz_detailed, RclCase, RclOutcome};
pub use tv::{tv, Implication, TvConfig, TvOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("variable `{0}` is not declared")]
    Undeclared(String),
    #[error("variable `{0}` is declared twice")]
    Duplicate(String),
    #[error("no value bound for `{0}`")]
    MissingBinding(String),
    #[error("value {value} does not fit the type of `{var}`")]
    IllTyped { var: String, value: String },
    #[error("`{0}` is declared with conflicting types")]
    TypeConflict(String),
    #[error("outside the decidable fragment: {0}")]
    UndecidableFragment(String),
    #[error("enumeration of {0} assignments exceeds the configured limit")]
    TooManyAssignments(u128),
    #[error("oracle capacity exceeded: {0}")]
    OracleCapacity(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ZType {
    Enum(Vec<String>),
    IntRange(i64, i64),
    /// Unbounded integers; parsed but rejected by the decision procedures.
    Int,
    Real,
}

impl ZType {
    pub fn is_continuous(&self) -> bool {
        matches!(self, ZType::Real)
    }

    /// Finite value list of a discrete type.
    pub fn values(&self) -> Option<Vec<Value>> {
        match self {
            ZType::Enum(labels) => Some(labels.iter().map(|l| Value::Label(l.clone())).collect()),
            ZType::IntRange(lo, hi) => Some((*lo..=*hi).map(|i| Value::Num(Rational::from_int(i))).collect()),
            ZType::Int | ZType::Real => None,
        }
    }

    pub fn cardinality(&self) -> Option<u128> {
        match self {
            ZType::Enum(labels) => Some(labels.len() as u128),
            ZType::IntRange(lo, hi) => Some((*hi as i128 - *lo as i128 + 1).max(0) as u128),
            _ => None,
        }
    }

    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (ZType::Enum(labels), Value::Label(l)) => labels.contains(l),
            (ZType::IntRange(lo, hi), Value::Num(n)) => {
                n.is_integer() && *n >= Rational::from_int(*lo) && *n <= Rational::from_int(*hi)
            }
            (ZType::Int, Value::Num(n)) => n.is_integer(),
            (ZType::Real, Value::Num(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for ZType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZType::Enum(labels) => write!(f, "{{{}}}", labels.join(", ")),
            ZType::IntRange(lo, hi) => write!(f, "int {lo}..{hi}"),
            ZType::Int => write!(f, "int"),
            ZType::Real => write!(f, "real"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Decoration {
    Input,
    Output,
    Internal,
}

impl Decoration {
    pub fn suffix(self) -> &'static str {
        match self {
            Decoration::Input => "?",
            Decoration::Output => "!",
            Decoration::Internal => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub decoration: Decoration,
    pub ty: ZType,
}

impl VarDecl {
    pub fn new(name: &str, decoration: Decoration, ty: ZType) -> Self {
        VarDecl { name: name.to_string(), decoration, ty }
    }

    pub fn decorated(&self) -> String {
        format!("{}{}", self.name, self.decoration.suffix())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Num(Rational),
    Label(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Label(l) => write!(f, "{l}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Num(Rational::from_int(v))
    }
}

impl From<Rational> for Value {
    fn from(v: Rational) -> Self {
        Value::Num(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Label(v.to_string())
    }
}

pub type Assignment = BTreeMap<String, Value>;

/// How the mixed input/output case of schema refinement is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaMode {
    /// Output implication restricted to inputs in the refined schema's
    /// domain, plus domain inclusion.
    #[default]
    Guarded,
    /// Both quantified implications read literally (schema equivalence).
    Strict,
}

impl std::str::FromStr for SchemaMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "guarded" => Ok(SchemaMode::Guarded),
            "strict" => Ok(SchemaMode::Strict),
            other => Err(format!("unknown mode `{other}` (expected guarded|strict)")),
        }
    }
}

impl fmt::Display for SchemaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemaMode::Guarded => "guarded",
            SchemaMode::Strict => "strict",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ZSchema {
    pub decls: Vec<VarDecl>,
    /// Existentially quantified declarations.
    pub hidden: Vec<VarDecl>,
    pub predicate: Vec<Atom>,
}

impl ZSchema {
    pub fn new(decls: Vec<VarDecl>, predicate: Vec<Atom>) -> Result<Self, SchemaError> {
        let s = ZSchema { decls, hidden: Vec::new(), predicate };
        s.check_well_formed()?;
        Ok(s)
    }

    /// Schema with no variables and a true predicate.
    pub fn trivial() -> Self {
        ZSchema::default()
    }

    pub fn check_well_formed(&self) -> Result<(), SchemaError> {
        let mut seen = BTreeSet::new();
        for d in self.decls.iter().chain(&self.hidden) {
            if !seen.insert(d.name.as_str()) {
                return Err(SchemaError::Duplicate(d.name.clone()));
            }
        }
        for a in &self.predicate {
            for v in a.vars() {
                if !seen.contains(v.as_str()) {
                    return Err(SchemaError::Undeclared(v));
                }
            }
        }
        Ok(())
    }

    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    fn any_decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().chain(&self.hidden).find(|d| d.name == name)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.decls.iter().map(|d| d.name.clone()).collect()
    }

    pub fn vars_with(&self, decoration: Decoration) -> BTreeSet<String> {
        self.decls.iter().filter(|d| d.decoration == decoration).map(|d| d.name.clone()).collect()
    }

    pub fn inputs(&self) -> BTreeSet<String> {
        self.vars_with(Decoration::Input)
    }

    pub fn outputs(&self) -> BTreeSet<String> {
        self.vars_with(Decoration::Output)
    }

    /// Conjunction; shared names must agree on declarations.
    pub fn conjoin(&self, other: &ZSchema) -> Result<ZSchema, SchemaError> {
        let mut out = self.clone();
        for d in &other.decls {
            match out.decl(&d.name) {
                Some(existing) if existing.ty != d.ty => return Err(SchemaError::TypeConflict(d.name.clone())),
                Some(_) => {}
                None => out.decls.push(d.clone()),
            }
        }
        let taken: BTreeSet<String> = out.decls.iter().chain(&out.hidden).map(|d| d.name.clone()).collect();
        let other = other.with_fresh_hidden(&taken);
        out.hidden.extend(other.hidden);
        out.predicate.extend(other.predicate);
        Ok(out)
    }

    /// Renames hidden variables so that none collides with `taken`.
    pub(crate) fn with_fresh_hidden(&self, taken: &BTreeSet<String>) -> ZSchema {
        let mut map = BTreeMap::new();
        let mut used = taken.clone();
        used.extend(self.decls.iter().map(|d| d.name.clone()));
        for h in &self.hidden {
            if used.contains(&h.name) {
                let mut k = 1;
                let fresh = loop {
                    let c = format!("{}#{k}", h.name);
                    if !used.contains(&c) && self.any_decl(&c).is_none() {
                        break c;
                    }
                    k += 1;
                };
                used.insert(fresh.clone());
                map.insert(h.name.clone(), fresh);
            } else {
                used.insert(h.name.clone());
            }
        }
        if map.is_empty() {
            return self.clone();
        }
        ZSchema {
            decls: self.decls.clone(),
            hidden: self
                .hidden
                .iter()
                .map(|h| VarDecl { name: map.get(&h.name).cloned().unwrap_or_else(|| h.name.clone()), ..h.clone() })
                .collect(),
            predicate: self.predicate.iter().map(|a| a.rename(&map)).collect(),
        }
    }

    /// Moves the named declarations into the existential block without
    /// simplifying.
    pub fn existentially_quantify(&self, vars: &BTreeSet<String>) -> Result<ZSchema, SchemaError> {
        for v in vars {
            if self.decl(v).is_none() {
                return Err(SchemaError::Undeclared(v.clone()));
            }
        }
        let mut out = self.clone();
        let (moved, kept): (Vec<VarDecl>, Vec<VarDecl>) = out.decls.into_iter().partition(|d| vars.contains(&d.name));
        out.decls = kept;
        out.hidden.extend(moved);
        Ok(out)
    }

    /// Schema hiding `S \ (v₁, …, vₘ)`.
    pub fn hide(&self, vars: &BTreeSet<String>) -> Result<ZSchema, SchemaError> {
        if vars.is_empty() {
            return Ok(self.clone());
        }
        self.existentially_quantify(vars)?.simplify_hidden()
    }

    /// Eliminates hidden variables wherever this can be done exactly:
    /// unused hidden variables are dropped, groups of atoms mentioning only
    /// hidden variables are decided, and purely linear continuous hidden
    /// variables are projected away by Fourier–Motzkin.
    pub fn simplify_hidden(&self) -> Result<ZSchema, SchemaError> {
        let hidden: BTreeMap<String, VarDecl> = self.hidden.iter().map(|d| (d.name.clone(), d.clone())).collect();
        let atom_hidden: Vec<BTreeSet<String>> =
            self.predicate.iter().map(|a| a.vars().into_iter().filter(|v| hidden.contains_key(v)).collect()).collect();

        // Union atoms that share hidden variables.
        let n = self.predicate.len();
        let mut component: Vec<usize> = (0..n).collect();
        fn root(c: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while c[r] != r {
                r = c[r];
            }
            c[i] = r;
            r
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !atom_hidden[i].is_disjoint(&atom_hidden[j]) {
                    let (ri, rj) = (root(&mut component, i), root(&mut component, j));
                    component[ri] = rj;
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            if !atom_hidden[i].is_empty() {
                let r = root(&mut component, i);
                groups.entry(r).or_default().push(i);
            }
        }

        let mut keep_atoms: Vec<Atom> =
            (0..n).filter(|&i| atom_hidden[i].is_empty()).map(|i| self.predicate[i].clone()).collect();
        let mut keep_hidden: BTreeSet<String> = BTreeSet::new();
        for members in groups.values() {
            let atoms: Vec<&Atom> = members.iter().map(|&i| &self.predicate[i]).collect();
            let hvars: BTreeSet<String> = members.iter().flat_map(|&i| atom_hidden[i].iter().cloned()).collect();
            let visible: BTreeSet<String> =
                atoms.iter().flat_map(|a| a.vars()).filter(|v| !hidden.contains_key(v)).collect();
            let hdecls: Vec<&VarDecl> = hvars.iter().map(|v| &hidden[v]).collect();

            if visible.is_empty() {
                if closed_satisfiable(&atoms, &hdecls)? {
                    continue;
                }
                return Ok(ZSchema { decls: self.decls.clone(), hidden: vec![], predicate: vec![Atom::Bool(false)] });
            }
            let all_continuous = hdecls.iter().all(|d| d.ty.is_continuous())
                && visible.iter().all(|v| self.decl(v).is_some_and(|d| d.ty.is_continuous()));
            if all_continuous {
                if let Some(projected) = project_linear(&atoms, &hvars)? {
                    keep_atoms.extend(projected);
                    continue;
                }
            }
            keep_atoms.extend(atoms.into_iter().cloned());
            keep_hidden.extend(hvars);
        }
        Ok(ZSchema {
            decls: self.decls.clone(),
            hidden: self.hidden.iter().filter(|d| keep_hidden.contains(&d.name)).cloned().collect(),
            predicate: keep_atoms,
        })
    }

    /// `σ ⊨ S`: every declared variable must be bound to a value of its type.
    /// Hidden variables are decided existentially.
    pub fn evaluate(&self, sigma: &Assignment) -> Result<bool, SchemaError> {
        for d in &self.decls {
            let v = sigma.get(&d.name).ok_or_else(|| SchemaError::MissingBinding(d.name.clone()))?;
            if !d.ty.admits(v) {
                return Err(SchemaError::IllTyped { var: d.name.clone(), value: v.to_string() });
            }
        }
        let hidden: Vec<&VarDecl> = self.hidden.iter().collect();
        let visible = |name: &str| if self.decl(name).is_some() { sigma.get(name).cloned() } else { None };
        let discrete: Vec<&VarDecl> = hidden.iter().copied().filter(|d| !d.ty.is_continuous()).collect();
        let mut found = false;
        for_each_assignment(&discrete, u128::MAX, &mut |h: &Assignment| {
            let env = |name: &str| visible(name).or_else(|| h.get(name).cloned());
            let mut cons = Vec::new();
            for a in &self.predicate {
                match a.reduce(&env)? {
                    AtomForm::Truth(true) => {}
                    AtomForm::Truth(false) => return Ok(true),
                    AtomForm::Linear(c) => cons.push(c),
                }
            }
            if Polyhedron::new(cons).is_feasible() {
                found = true;
                return Ok(false);
            }
            Ok(true)
        })?;
        Ok(found)
    }

    /// Writes the schema in the model language's concrete syntax.
    pub fn write_literal(&self, f: &mut dyn fmt::Write) -> fmt::Result {
        let deco: BTreeMap<&str, String> =
            self.decls.iter().chain(&self.hidden).map(|d| (d.name.as_str(), d.decorated())).collect();
        let name = |v: &str| deco.get(v).cloned().unwrap_or_else(|| v.to_string());
        write!(f, "[")?;
        for (i, d) in self.decls.iter().enumerate() {
            write!(f, "{}{} : {}", if i == 0 { " " } else { "; " }, d.decorated(), d.ty)?;
        }
        write!(f, " |")?;
        let mut first = true;
        if !self.hidden.is_empty() {
            write!(f, " exists")?;
            for (i, d) in self.hidden.iter().enumerate() {
                write!(f, "{} {} : {}", if i == 0 { "" } else { "," }, d.decorated(), d.ty)?;
            }
            write!(f, " •")?;
        }
        for a in &self.predicate {
            write!(f, "{}", if first { " " } else { "; " })?;
            first = false;
            a.write_with(f, &name)?;
        }
        write!(f, " ]")
    }
}

impl fmt::Display for ZSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_literal(f)
    }
}

/// Calls `visit` on every assignment of the given discrete declarations
/// (in lexicographic order) until it returns `Ok(false)`.
pub(crate) fn for_each_assignment(
    decls: &[&VarDecl],
    cap: u128,
    visit: &mut dyn FnMut(&Assignment) -> Result<bool, SchemaError>,
) -> Result<(), SchemaError> {
    let mut domains = Vec::with_capacity(decls.len());
    let mut total: u128 = 1;
    for d in decls {
        let vals = d.ty.values().ok_or_else(|| {
            SchemaError::UndecidableFragment(format!("variable `{}` has the infinite type {}", d.name, d.ty))
        })?;
        total = total.saturating_mul(vals.len() as u128);
        domains.push(vals);
    }
    if total > cap {
        return Err(SchemaError::TooManyAssignments(total));
    }
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(());
    }
    let mut idx = vec![0usize; decls.len()];
    let mut current: Assignment = decls.iter().zip(&domains).map(|(d, vals)| (d.name.clone(), vals[0].clone())).collect();
    loop {
        if !visit(&current)? {
            return Ok(());
        }
        let mut k = decls.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                current.insert(decls[k].name.clone(), domains[k][idx[k]].clone());
                break;
            }
            idx[k] = 0;
            current.insert(decls[k].name.clone(), domains[k][0].clone());
        }
    }
}

fn closed_satisfiable(atoms: &[&Atom], hdecls: &[&VarDecl]) -> Result<bool, SchemaError> {
    let discrete: Vec<&VarDecl> = hdecls.iter().copied().filter(|d| !d.ty.is_continuous()).collect();
    let mut sat = false;
    for_each_assignment(&discrete, u128::MAX, &mut |h: &Assignment| {
        let env = |name: &str| h.get(name).cloned();
        let mut cons = Vec::new();
        for a in atoms {
            match a.reduce(&env)? {
                AtomForm::Truth(true) => {}
                AtomForm::Truth(false) => return Ok(true),
                AtomForm::Linear(c) => cons.push(c),
            }
        }
        if Polyhedron::new(cons).is_feasible() {
            sat = true;
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(sat)
}

/// Projects `hvars` out of atoms that are linear without any discrete
/// binding; `None` if some atom is not of that form.
fn project_linear(atoms: &[&Atom], hvars: &BTreeSet<String>) -> Result<Option<Vec<Atom>>, SchemaError> {
    let mut cons: Vec<LinearConstraint> = Vec::new();
    for a in atoms {
        match a.reduce(&|_| None) {
            Ok(AtomForm::Linear(c)) => cons.push(c),
            Ok(AtomForm::Truth(true)) => {}
            Ok(AtomForm::Truth(false)) => return Ok(Some(vec![Atom::Bool(false)])),
            Err(_) => return Ok(None),
        }
    }
    let projected = Polyhedron::new(cons).eliminate_all(hvars);
    if projected.is_trivially_false() {
        return Ok(Some(vec![Atom::Bool(false)]));
    }
    Ok(Some(projected.constraints.iter().map(Atom::from_linear).collect()))
}
