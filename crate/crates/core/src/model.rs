//! The automaton data model and its structural validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dcm::ZoneConstraint;
use crate::rational::{Bound, Rational};
use crate::zschema::{tv, Atom, CmpOp, Decoration, Expr, Implication, TvConfig, VarDecl, ZSchema, ZType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Input,
    Output,
    Internal,
}

impl ActionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ActionKind::Input => "input",
            ActionKind::Output => "output",
            ActionKind::Internal => "internal",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionDecl {
    pub name: String,
    pub kind: ActionKind,
    pub schema: ZSchema,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RectOp {
    Lt,
    Le,
    Ge,
    Gt,
}

impl RectOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RectOp::Lt => "<",
            RectOp::Le => "<=",
            RectOp::Ge => ">=",
            RectOp::Gt => ">",
        }
    }
}

/// `var op value`, one side of a rectangle.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RectConstraint {
    pub var: String,
    pub op: RectOp,
    pub value: Rational,
}

impl RectConstraint {
    pub fn new(var: &str, op: RectOp, value: impl Into<Rational>) -> Self {
        RectConstraint { var: var.to_string(), op, value: value.into() }
    }

    pub fn to_zone(&self) -> ZoneConstraint {
        let v = self.value.clone();
        match self.op {
            RectOp::Le => ZoneConstraint::UpperBound(self.var.clone(), Bound::le(v)),
            RectOp::Lt => ZoneConstraint::UpperBound(self.var.clone(), Bound::lt(v)),
            RectOp::Ge => ZoneConstraint::LowerBound(self.var.clone(), Bound::le(v)),
            RectOp::Gt => ZoneConstraint::LowerBound(self.var.clone(), Bound::lt(v)),
        }
    }

    pub fn holds(&self, x: &Rational) -> bool {
        match self.op {
            RectOp::Le => *x <= self.value,
            RectOp::Lt => *x < self.value,
            RectOp::Ge => *x >= self.value,
            RectOp::Gt => *x > self.value,
        }
    }

    pub fn to_atom(&self) -> Atom {
        let op = match self.op {
            RectOp::Le => CmpOp::Le,
            RectOp::Lt => CmpOp::Lt,
            RectOp::Ge => CmpOp::Ge,
            RectOp::Gt => CmpOp::Gt,
        };
        Atom::Cmp(Expr::Var(self.var.clone()), op, Expr::Num(self.value.clone()))
    }
}

impl fmt::Display for RectConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op.symbol(), self.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Location {
    pub name: String,
    /// Flow rate per continuous variable; the clock always flows at 1.
    pub rates: BTreeMap<String, Rational>,
    pub invariant: Vec<RectConstraint>,
    /// Overrides the default discrete template `l = name`.
    pub template: Option<ZSchema>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDecl {
    pub source: String,
    pub action: String,
    pub guard: Vec<RectConstraint>,
    /// `λ` with the reset values `ξ`.
    pub resets: BTreeMap<String, Rational>,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitDecl {
    pub location: String,
    pub point: BTreeMap<String, Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mzia {
    pub name: String,
    /// All declared variables; `Real` ones are the continuous set.
    pub variables: Vec<VarDecl>,
    pub clock: String,
    /// Discrete variable ranging over location names in state schemas.
    pub location_var: String,
    pub actions: Vec<ActionDecl>,
    pub locations: Vec<Location>,
    pub initial: InitDecl,
    pub transitions: Vec<TransitionDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub rule: &'static str,
    pub context: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.context, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, rule: &'static str, context: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue { rule, context: context.into(), message: message.into() });
    }

    fn warn(&mut self, rule: &'static str, context: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue { rule, context: context.into(), message: message.into() });
    }

    pub fn has_error(&self, rule: &str) -> bool {
        self.errors.iter().any(|i| i.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning {w}")?;
        }
        Ok(())
    }
}

impl Mzia {
    /// Continuous variables in declaration order.
    pub fn continuous_vars(&self) -> Vec<String> {
        self.variables.iter().filter(|d| d.ty.is_continuous()).map(|d| d.name.clone()).collect()
    }

    /// Variables of every zone: the continuous ones, then the clock.
    pub fn zone_vars(&self) -> Vec<String> {
        let mut v = self.continuous_vars();
        v.push(self.clock.clone());
        v
    }

    pub fn location(&self, name: &str) -> Result<&Location, ModelError> {
        self.locations.iter().find(|l| l.name == name).ok_or_else(|| ModelError::UnknownLocation(name.to_string()))
    }

    pub fn action(&self, name: &str) -> Result<&ActionDecl, ModelError> {
        self.actions.iter().find(|a| a.name == name).ok_or_else(|| ModelError::UnknownAction(name.to_string()))
    }

    pub fn action_schema(&self, name: &str) -> Result<&ZSchema, ModelError> {
        Ok(&self.action(name)?.schema)
    }

    /// Rates of a location including the clock.
    pub fn zone_rates(&self, loc: &Location) -> BTreeMap<String, Rational> {
        let mut r = loc.rates.clone();
        r.insert(self.clock.clone(), Rational::one());
        r
    }

    /// `A(l)`: labels of outgoing transitions.
    pub fn enabled_actions(&self, loc: &str) -> Result<BTreeSet<String>, ModelError> {
        self.location(loc)?;
        Ok(self.transitions.iter().filter(|t| t.source == loc).map(|t| t.action.clone()).collect())
    }

    pub fn location_type(&self) -> ZType {
        ZType::Enum(self.locations.iter().map(|l| l.name.clone()).collect())
    }

    /// Declarations shared by every state schema: the location variable,
    /// every model variable, and the clock.
    pub fn state_decls(&self) -> Vec<VarDecl> {
        let mut decls = vec![VarDecl::new(&self.location_var, Decoration::Internal, self.location_type())];
        decls.extend(self.variables.iter().cloned());
        decls.push(VarDecl::new(&self.clock, Decoration::Internal, ZType::Real));
        decls
    }

    /// The discrete template of a location's state schema.
    pub fn template_atoms(&self, loc: &Location) -> Vec<Atom> {
        match &loc.template {
            Some(t) => t.predicate.clone(),
            None => vec![Atom::Cmp(Expr::Var(self.location_var.clone()), CmpOp::Eq, Expr::Label(loc.name.clone()))],
        }
    }

    /// Location-level state schema: template and invariant, plus the initial
    /// valuation for the initial location.
    pub fn location_schema(&self, loc: &Location) -> ZSchema {
        let mut predicate = self.template_atoms(loc);
        predicate.extend(loc.invariant.iter().map(RectConstraint::to_atom));
        if loc.name == self.initial.location {
            for (v, c) in &self.initial.point {
                predicate.push(Atom::Cmp(Expr::Var(v.clone()), CmpOp::Eq, Expr::Num(c.clone())));
            }
            predicate.push(Atom::Cmp(Expr::Var(self.clock.clone()), CmpOp::Eq, Expr::num(0)));
        }
        ZSchema { decls: self.state_decls(), hidden: vec![], predicate }
    }
}

/// Checks the structural conditions on a model. Never fails: every finding
/// lands in the report.
pub fn validate_model(m: &Mzia) -> ValidationReport {
    let mut r = ValidationReport::default();

    let mut seen_vars: BTreeMap<&str, Decoration> = BTreeMap::new();
    for d in &m.variables {
        if let Some(prev) = seen_vars.insert(d.name.as_str(), d.decoration) {
            r.error(
                "variable-kind-disjointness",
                format!("variable {}", d.name),
                format!("declared as {:?} and as {:?}", prev, d.decoration),
            );
        }
        if let ZType::Enum(labels) = &d.ty {
            if labels.is_empty() {
                r.error("finite-domain", format!("variable {}", d.name), "empty enumeration type");
            }
        }
        if let ZType::IntRange(lo, hi) = d.ty {
            if lo > hi {
                r.error("finite-domain", format!("variable {}", d.name), format!("empty range {lo}..{hi}"));
            }
        }
    }
    if seen_vars.contains_key(m.clock.as_str()) {
        r.error("clock-not-variable", format!("clock {}", m.clock), "the clock must not be a model variable");
    }
    if seen_vars.contains_key(m.location_var.as_str()) || m.location_var == m.clock {
        r.error("location-variable", format!("variable {}", m.location_var), "the location variable clashes with a declared variable");
    }
    let continuous: BTreeSet<String> = m.continuous_vars().into_iter().collect();

    let mut seen_actions: BTreeMap<&str, ActionKind> = BTreeMap::new();
    for a in &m.actions {
        if let Some(prev) = seen_actions.insert(a.name.as_str(), a.kind) {
            let rule = if prev == a.kind { "duplicate-action" } else { "action-kind-disjointness" };
            r.error(rule, format!("action {}", a.name), format!("declared as {} and as {}", prev.keyword(), a.kind.keyword()));
        }
        if let Err(e) = a.schema.check_well_formed() {
            r.error("schema-well-formed", format!("action {}", a.name), e.to_string());
        }
    }

    let mut seen_locs = BTreeSet::new();
    for loc in &m.locations {
        let ctx = format!("location {}", loc.name);
        if !seen_locs.insert(loc.name.as_str()) {
            r.error("duplicate-location", &ctx, "declared twice");
        }
        for (v, k) in &loc.rates {
            if *v == m.clock {
                if *k != Rational::one() {
                    r.error("clock-rate", &ctx, format!("the clock flows at rate 1, not {k}"));
                }
                continue;
            }
            if !continuous.contains(v) {
                r.error("unknown-variable", &ctx, format!("rate for undeclared continuous variable `{v}`"));
            } else if !k.is_positive() {
                r.error("positive-rate", &ctx, format!("rate of `{v}` is {k}; rates must be strictly positive"));
            }
        }
        for v in &continuous {
            if !loc.rates.contains_key(v) {
                r.error("missing-rate", &ctx, format!("no rate given for `{v}`"));
            }
        }
        check_rectangle(&mut r, &ctx, "invariant", &loc.invariant, &continuous);
        if let Some(t) = &loc.template {
            if let Err(e) = t.check_well_formed() {
                r.error("schema-well-formed", &ctx, e.to_string());
            }
        }
    }

    match m.location(&m.initial.location) {
        Err(_) => r.error("initial-location", "init", format!("unknown initial location `{}`", m.initial.location)),
        Ok(loc) => {
            for v in m.initial.point.keys() {
                if !continuous.contains(v) {
                    r.error("unknown-variable", "init", format!("initial value for undeclared continuous variable `{v}`"));
                }
            }
            for v in &continuous {
                if !m.initial.point.contains_key(v) {
                    r.error("init-incomplete", "init", format!("no initial value for `{v}`"));
                }
            }
            for c in &loc.invariant {
                if let Some(x) = m.initial.point.get(&c.var) {
                    if !c.holds(x) {
                        r.error("init-invariant", "init", format!("initial value {} = {x} violates invariant {c}", c.var));
                    }
                }
            }
        }
    }

    for (idx, t) in m.transitions.iter().enumerate() {
        let ctx = format!("transition #{idx} {} -{}-> {}", t.source, t.action, t.target);
        let src = m.location(&t.source);
        let tgt = m.location(&t.target);
        if src.is_err() {
            r.error("unknown-location", &ctx, format!("unknown source `{}`", t.source));
        }
        if tgt.is_err() {
            r.error("unknown-location", &ctx, format!("unknown target `{}`", t.target));
        }
        if m.action(&t.action).is_err() {
            r.error("unknown-action", &ctx, format!("undeclared action `{}`", t.action));
        }
        check_rectangle(&mut r, &ctx, "guard", &t.guard, &continuous);
        for v in t.resets.keys() {
            if *v == m.clock {
                r.error("clock-reset", &ctx, "the global clock is never reset");
            } else if !continuous.contains(v) {
                r.error("unknown-variable", &ctx, format!("reset of undeclared continuous variable `{v}`"));
            }
        }
        if let (Ok(s), Ok(d)) = (src, tgt) {
            for v in &continuous {
                let (ks, kd) = (s.rates.get(v), d.rates.get(v));
                if let (Some(ks), Some(kd)) = (ks, kd) {
                    if ks != kd && !t.resets.contains_key(v) {
                        r.error(
                            "initialized-rate",
                            &ctx,
                            format!("rate of `{v}` changes from {ks} to {kd} but `{v}` is not reset"),
                        );
                    }
                }
            }
        }
    }

    if r.errors.is_empty() {
        check_schema_compatibility(m, &mut r);
    }
    r
}

fn check_rectangle(r: &mut ValidationReport, ctx: &str, what: &str, rect: &[RectConstraint], continuous: &BTreeSet<String>) {
    let mut lo: BTreeMap<&str, (Rational, bool)> = BTreeMap::new();
    let mut hi: BTreeMap<&str, (Rational, bool)> = BTreeMap::new();
    for c in rect {
        if !continuous.contains(&c.var) {
            r.error("unknown-variable", ctx, format!("{what} mentions undeclared continuous variable `{}`", c.var));
            continue;
        }
        let strict = matches!(c.op, RectOp::Lt | RectOp::Gt);
        let slot = match c.op {
            RectOp::Ge | RectOp::Gt => lo.entry(&c.var).or_insert((c.value.clone(), strict)),
            RectOp::Le | RectOp::Lt => hi.entry(&c.var).or_insert((c.value.clone(), strict)),
        };
        let tighter = match c.op {
            RectOp::Ge | RectOp::Gt => c.value > slot.0 || (c.value == slot.0 && strict),
            RectOp::Le | RectOp::Lt => c.value < slot.0 || (c.value == slot.0 && strict),
        };
        if tighter {
            *slot = (c.value.clone(), strict);
        }
    }
    for (v, (l, ls)) in &lo {
        if let Some((h, hs)) = hi.get(v) {
            if l > h || (l == h && (*ls || *hs)) {
                r.error("rectangle-well-formed", ctx, format!("{what} interval for `{v}` is empty ({l} .. {h})"));
            }
        }
    }
}

/// Per transition `(s, a, …, t)`: `(F(s) ∧ F(a)) \ vars(F(s))` must be
/// equivalent to `F(t)`. Violations are warnings only.
fn check_schema_compatibility(m: &Mzia, r: &mut ValidationReport) {
    let cfg = TvConfig::default();
    for (idx, t) in m.transitions.iter().enumerate() {
        let ctx = format!("transition #{idx} {} -{}-> {}", t.source, t.action, t.target);
        let (Ok(src), Ok(tgt), Ok(act)) = (m.location(&t.source), m.location(&t.target), m.action(&t.action)) else {
            continue;
        };
        let src_schema = m.location_schema(src);
        let joined = match src_schema.conjoin(&act.schema) {
            Ok(j) => j,
            Err(e) => {
                r.warn("schema-compatibility", &ctx, e.to_string());
                continue;
            }
        };
        let lhs = match joined.hide(&src_schema.vars()) {
            Ok(h) => h,
            Err(e) => {
                r.warn("schema-compatibility", &ctx, e.to_string());
                continue;
            }
        };
        if lhs.predicate.contains(&Atom::Bool(false)) {
            r.warn(
                "schema-compatibility",
                &ctx,
                format!("state schema of `{}` and action schema of `{}` are jointly unsatisfiable", t.source, t.action),
            );
            continue;
        }
        let primed = prime(&m.location_schema(tgt));
        let forward = tv(&Implication::new(lhs.clone(), primed.clone()), &cfg);
        let backward = tv(&Implication::new(primed, lhs), &cfg);
        match (forward, backward) {
            (Ok(f), Ok(b)) if f.valid && b.valid => {}
            (Ok(_), Ok(_)) => r.warn(
                "schema-compatibility",
                &ctx,
                format!("post-state of `{}` under `{}` is not equivalent to the state schema of `{}`", t.source, t.action, t.target),
            ),
            (Err(e), _) | (_, Err(e)) => r.warn("schema-compatibility", &ctx, e.to_string()),
        }
    }
}

fn prime(s: &ZSchema) -> ZSchema {
    let map: BTreeMap<String, String> = s.decls.iter().map(|d| (d.name.clone(), format!("{}'", d.name))).collect();
    ZSchema {
        decls: s.decls.iter().map(|d| VarDecl { name: map[&d.name].clone(), ..d.clone() }).collect(),
        hidden: s.hidden.clone(),
        predicate: s.predicate.iter().map(|a| a.rename(&map)).collect(),
    }
}
