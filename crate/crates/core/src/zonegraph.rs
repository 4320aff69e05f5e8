//! Concrete semantics and the finite zone automaton.
//!
//! Symbolic states pair a location with a zone over the continuous
//! variables and the clock. Successors follow the pipeline
//! `reset(((Z ∧ inv)↑ ∧ inv ∧ guard), λ, ξ) ∧ inv(target)`, and a successor
//! whose zone is contained in an existing state of the same location ends
//! exploration along that branch.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dcm::{render_zone, Dcm, DcmError, ZoneConstraint};
use crate::linear::Point;
use crate::model::{Location, ModelError, Mzia, RectConstraint, RectOp, TransitionDecl};
use crate::rational::{Bound, Rational};
use crate::zschema::{Atom, CmpOp, Expr, ZSchema};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZoneError {
    #[error(transparent)]
    Dcm(#[from] DcmError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("initial valuation violates the invariant of `{0}`")]
    InitViolatesInvariant(String),
    #[error("initial valuation does not bind `{0}`")]
    InitIncomplete(String),
    #[error("zone graph exceeds {0} states")]
    Capacity(usize),
}

/// What happens to a successor that is contained in an existing state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsumptionMode {
    /// Keep it as a state without outgoing edges.
    #[default]
    Leaf,
    /// Point the edge at the covering state instead.
    Redirect,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub max_states: usize,
    pub subsumption: SubsumptionMode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_states: 10_000, subsumption: SubsumptionMode::Leaf }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymState {
    pub location: String,
    pub zone: Dcm,
}

impl SymState {
    /// The zone without the clock.
    pub fn data_zone(&self, clock: &str) -> Result<Dcm, DcmError> {
        self.zone.project(clock)
    }

    pub fn render(&self, clock: &str) -> Result<String, DcmError> {
        Ok(render_zone(&self.data_zone(clock)?.to_zone_constraints()?))
    }
}

#[derive(Clone, Debug)]
pub struct ZoneState {
    pub id: usize,
    pub sym: SymState,
    pub schema: ZSchema,
    /// Whether some point of the zone can let a positive amount of time pass.
    pub can_delay: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZoneEdge {
    pub source: usize,
    pub action: String,
    pub target: usize,
    /// Index of the model transition that produced the edge.
    pub transition: usize,
    /// Set when the target is a covering state rather than the successor.
    pub redirected: bool,
}

#[derive(Clone, Debug)]
pub struct ZoneAutomaton {
    pub name: String,
    pub clock: String,
    pub continuous_vars: Vec<String>,
    pub states: Vec<ZoneState>,
    pub initial: Vec<usize>,
    pub transitions: Vec<ZoneEdge>,
    /// Leaf state → the state whose zone contains it.
    pub subsumed: BTreeMap<usize, usize>,
    pub action_schemas: BTreeMap<String, ZSchema>,
}

impl ZoneAutomaton {
    pub fn state(&self, id: usize) -> &ZoneState {
        &self.states[id]
    }

    pub fn successors<'a>(&'a self, id: usize, action: &'a str) -> impl Iterator<Item = usize> + 'a {
        self.transitions.iter().filter(move |e| e.source == id && e.action == action).map(|e| e.target)
    }

    /// `A(p)`: labels of outgoing edges.
    pub fn enabled(&self, id: usize) -> BTreeSet<String> {
        self.transitions.iter().filter(|e| e.source == id).map(|e| e.action.clone()).collect()
    }

    pub fn has_edge(&self, source: usize, action: &str, target: usize) -> bool {
        self.transitions.iter().any(|e| e.source == source && e.action == action && e.target == target)
    }
}

impl fmt::Display for ZoneAutomaton {
    /// One line per state, then the edge list.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.states {
            let zone = s.sym.render(&self.clock).map_err(|_| fmt::Error)?;
            write!(f, "s{} {} {{ {} }}", s.id, s.sym.location, zone)?;
            if let Some(by) = self.subsumed.get(&s.id) {
                write!(f, " subsumed by s{by}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "transitions:")?;
        for e in &self.transitions {
            writeln!(f, "  s{} --{}--> s{}", e.source, e.action, e.target)?;
        }
        Ok(())
    }
}

fn rect_zone(rects: &[RectConstraint]) -> Vec<ZoneConstraint> {
    rects.iter().map(RectConstraint::to_zone).collect()
}

/// `(l₀, init ∧ clock = 0)`.
pub fn initial_symstate(m: &Mzia) -> Result<SymState, ZoneError> {
    let loc = m.location(&m.initial.location)?;
    let mut cs = Vec::new();
    for v in m.continuous_vars() {
        let c = m.initial.point.get(&v).ok_or_else(|| ZoneError::InitIncomplete(v.clone()))?;
        cs.extend(ZoneConstraint::eq(&v, c.clone()));
    }
    cs.extend(ZoneConstraint::eq(&m.clock, 0));
    let zone = Dcm::from_constraints(&m.zone_vars(), &m.zone_rates(loc), &cs)?;
    let inside = zone.constrain(&rect_zone(&loc.invariant))?;
    if inside.is_empty() || inside != zone {
        return Err(ZoneError::InitViolatesInvariant(loc.name.clone()));
    }
    Ok(SymState { location: loc.name.clone(), zone })
}

/// Intermediate matrices of one successor computation.
#[derive(Clone, Debug)]
pub struct PostTrace {
    pub steps: Vec<(String, Dcm)>,
}

fn post_inner(m: &Mzia, s: &SymState, t: &TransitionDecl, mut trace: Option<&mut PostTrace>) -> Result<Option<SymState>, ZoneError> {
    let src = m.location(&t.source)?;
    let tgt = m.location(&t.target)?;
    let tracing = trace.is_some();
    let mut record = |label: String, d: &Dcm| {
        if let Some(tr) = trace.as_deref_mut() {
            tr.steps.push((label, d.clone()));
        }
    };
    let inv = rect_zone(&src.invariant);
    if tracing {
        record(format!("inv({})", src.name), &Dcm::from_constraints(s.zone.vars(), &s.zone.rates(), &inv)?);
    }
    let z = s.zone.constrain(&inv)?;
    record(format!("zone ∧ inv({})", src.name), &z);
    let z = z.elapse();
    record("elapse".into(), &z);
    let z = z.constrain(&inv)?;
    let guard_zone = Dcm::from_constraints(z.vars(), &z.rates(), &rect_zone(&t.guard))?;
    record(format!("guard of {}", t.action), &guard_zone);
    let z = z.intersect(&guard_zone)?;
    record(format!("∧ inv({}) ∧ guard", src.name), &z);
    if z.is_empty() {
        return Ok(None);
    }
    let z = z.reset(&t.resets, &m.zone_rates(tgt))?;
    record("reset".into(), &z);
    let z = z.constrain(&rect_zone(&tgt.invariant))?;
    record(format!("∧ inv({})", tgt.name), &z);
    if z.is_empty() {
        return Ok(None);
    }
    Ok(Some(SymState { location: tgt.name.clone(), zone: z }))
}

/// Symbolic successor along `t`, or `None` when it is empty.
pub fn post(m: &Mzia, s: &SymState, t: &TransitionDecl) -> Result<Option<SymState>, ZoneError> {
    post_inner(m, s, t, None)
}

/// [`post`] that also returns every intermediate matrix.
pub fn post_traced(m: &Mzia, s: &SymState, t: &TransitionDecl) -> Result<(Option<SymState>, PostTrace), ZoneError> {
    let mut trace = PostTrace { steps: Vec::new() };
    let out = post_inner(m, s, t, Some(&mut trace))?;
    Ok((out, trace))
}

fn can_delay(m: &Mzia, s: &SymState) -> Result<bool, ZoneError> {
    let inv = rect_zone(&m.location(&s.location)?.invariant);
    let z = s.zone.constrain(&inv)?;
    let later = z.elapse().constrain(&inv)?;
    Ok(!z.includes(&later)?)
}

pub fn build_zone_automaton(m: &Mzia) -> Result<ZoneAutomaton, ZoneError> {
    build_zone_automaton_with(m, &BuildOptions::default())
}

/// Worklist exploration from the initial state. Containment is decided on
/// zones without the clock, which grows without bound along cycles.
pub fn build_zone_automaton_with(m: &Mzia, opts: &BuildOptions) -> Result<ZoneAutomaton, ZoneError> {
    let mut za = ZoneAutomaton {
        name: m.name.clone(),
        clock: m.clock.clone(),
        continuous_vars: m.continuous_vars(),
        states: Vec::new(),
        initial: Vec::new(),
        transitions: Vec::new(),
        subsumed: BTreeMap::new(),
        action_schemas: m.actions.iter().map(|a| (a.name.clone(), a.schema.clone())).collect(),
    };
    // Data-only zones of states that may cover later ones.
    let mut covers: Vec<(usize, Dcm)> = Vec::new();
    let mut queue = VecDeque::new();

    let init = initial_symstate(m)?;
    let id = push_state(m, &mut za, init, opts)?;
    covers.push((id, za.states[id].sym.data_zone(&m.clock)?));
    za.initial.push(id);
    queue.push_back(id);

    while let Some(id) = queue.pop_front() {
        let current = za.states[id].sym.clone();
        for (ti, t) in m.transitions.iter().enumerate() {
            if t.source != current.location {
                continue;
            }
            let Some(next) = post(m, &current, t)? else { continue };
            let data = next.data_zone(&m.clock)?;
            let mut cover = None;
            for (cid, cz) in &covers {
                if za.states[*cid].sym.location == next.location && cz.includes(&data)? {
                    cover = Some(*cid);
                    break;
                }
            }
            let redirected = cover.is_some() && opts.subsumption == SubsumptionMode::Redirect;
            let target = match (cover, opts.subsumption) {
                (Some(c), SubsumptionMode::Redirect) => c,
                (Some(c), SubsumptionMode::Leaf) => {
                    let leaf = push_state(m, &mut za, next, opts)?;
                    za.subsumed.insert(leaf, c);
                    leaf
                }
                (None, _) => {
                    let nid = push_state(m, &mut za, next, opts)?;
                    covers.push((nid, data));
                    queue.push_back(nid);
                    nid
                }
            };
            za.transitions.push(ZoneEdge { source: id, action: t.action.clone(), target, transition: ti, redirected });
        }
    }
    Ok(za)
}

fn push_state(m: &Mzia, za: &mut ZoneAutomaton, sym: SymState, opts: &BuildOptions) -> Result<usize, ZoneError> {
    if za.states.len() >= opts.max_states {
        return Err(ZoneError::Capacity(opts.max_states));
    }
    let loc = m.location(&sym.location)?;
    let within = sym.zone.constrain(&rect_zone(&loc.invariant))?;
    assert!(!sym.zone.is_empty() && within == sym.zone, "stored zone must satisfy its invariant");
    let id = za.states.len();
    let schema = synthesize_state_schema(m, &sym)?;
    let can_delay = can_delay(m, &sym)?;
    za.states.push(ZoneState { id, sym, schema, can_delay });
    Ok(id)
}

fn bound_atoms(var: &Expr, lower: &Bound, upper: &Bound, out: &mut Vec<Atom>) {
    let op = |b: &Bound| if b.is_strict() { CmpOp::Lt } else { CmpOp::Le };
    match (lower.value(), upper.value()) {
        (Some(lo), Some(hi)) if lo == hi && !lower.is_strict() && !upper.is_strict() => {
            out.push(Atom::Cmp(var.clone(), CmpOp::Eq, Expr::Num(lo.clone())));
        }
        (lo, hi) => {
            if let Some(lo) = lo {
                out.push(Atom::Cmp(Expr::Num(lo.clone()), op(lower), var.clone()));
            }
            if let Some(hi) = hi {
                out.push(Atom::Cmp(var.clone(), op(upper), Expr::Num(hi.clone())));
            }
        }
    }
}

fn scaled(k: &Rational, v: &str) -> Expr {
    if *k == Rational::one() {
        Expr::var(v)
    } else {
        Expr::Mul(Box::new(Expr::Num(k.clone())), Box::new(Expr::var(v)))
    }
}

/// Schema atoms for a rendered zone.
pub fn zone_atoms(constraints: &[ZoneConstraint]) -> Vec<Atom> {
    let mut lowers: BTreeMap<&str, Bound> = BTreeMap::new();
    let mut uppers: BTreeMap<&str, Bound> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    let mut out = Vec::new();
    let mut relatives = Vec::new();
    for c in constraints {
        match c {
            ZoneConstraint::LowerBound(v, b) => {
                if !order.contains(&v.as_str()) {
                    order.push(v);
                }
                lowers.insert(v, b.clone());
            }
            ZoneConstraint::UpperBound(v, b) => {
                if !order.contains(&v.as_str()) {
                    order.push(v);
                }
                uppers.insert(v, b.clone());
            }
            ZoneConstraint::Relative { var_a, var_b, coeff_a, coeff_b, lower, upper } => {
                let e = Expr::Sub(Box::new(scaled(coeff_a, var_a)), Box::new(scaled(coeff_b, var_b)));
                relatives.push((e, lower.clone(), upper.clone()));
            }
        }
    }
    for v in order {
        let lo = lowers.get(v).cloned().unwrap_or(Bound::Infinity);
        let hi = uppers.get(v).cloned().unwrap_or(Bound::Infinity);
        bound_atoms(&Expr::var(v), &lo, &hi, &mut out);
    }
    for (e, lo, hi) in relatives {
        bound_atoms(&e, &lo, &hi, &mut out);
    }
    out
}

/// `F^S(s)`: the location template, the zone over the continuous variables,
/// and the clock's bounds.
pub fn synthesize_state_schema(m: &Mzia, s: &SymState) -> Result<ZSchema, ZoneError> {
    let loc = m.location(&s.location)?;
    let mut predicate = m.template_atoms(loc);
    let data = s.data_zone(&m.clock)?;
    predicate.extend(zone_atoms(&data.to_zone_constraints()?));
    let ci = s.zone.index_of(&m.clock)?;
    let lower = match s.zone.bound(0, ci) {
        Bound::Infinity => Bound::Infinity,
        Bound::Finite { value, strict } => Bound::Finite { value: -value, strict: *strict },
    };
    bound_atoms(&Expr::var(&m.clock), &lower, s.zone.bound(ci, 0), &mut predicate);
    Ok(ZSchema { decls: m.state_decls(), hidden: vec![], predicate })
}

/// A concrete state: location plus values of every continuous variable and
/// the clock.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConcreteState {
    pub location: String,
    pub values: Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Step {
    Delay { duration: Rational, state: ConcreteState },
    Action { action: String, transition: usize, state: ConcreteState },
}

impl Step {
    pub fn state(&self) -> &ConcreteState {
        match self {
            Step::Delay { state, .. } | Step::Action { state, .. } => state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    pub start: ConcreteState,
    pub steps: Vec<Step>,
    /// Set when the run stopped because nothing was possible.
    pub deadlock: bool,
}

/// Longest admissible delay from `values` in `loc`: `None` if unbounded,
/// with a flag telling whether the bound itself is excluded.
fn max_delay(m: &Mzia, loc: &Location, values: &Point) -> Option<(Rational, bool)> {
    let mut best: Option<(Rational, bool)> = None;
    for r in &loc.invariant {
        let strict = match r.op {
            RectOp::Le => false,
            RectOp::Lt => true,
            _ => continue,
        };
        let k = &m.zone_rates(loc)[&r.var];
        let d = (&r.value - &values[&r.var]) / k;
        best = match best {
            Some((b, s)) if b < d || (b == d && s) => Some((b, s)),
            _ => Some((d, strict)),
        };
    }
    best
}

fn flow(m: &Mzia, loc: &Location, values: &Point, d: &Rational) -> Point {
    let rates = m.zone_rates(loc);
    values.iter().map(|(v, x)| (v.clone(), x + &(&rates[v] * d))).collect()
}

/// Whether a delay of `d` keeps the invariant throughout.
pub fn delay_allowed(m: &Mzia, loc: &Location, values: &Point, d: &Rational) -> bool {
    if d.is_negative() {
        return false;
    }
    match max_delay(m, loc, values) {
        None => true,
        Some((b, strict)) => d < &b || (d == &b && !strict),
    }
}

/// Target state of `t` from `values`, if the guard holds and the reset
/// point satisfies the target invariant.
pub fn fire(m: &Mzia, t: &TransitionDecl, values: &Point) -> Option<ConcreteState> {
    if !t.guard.iter().all(|g| g.holds(&values[&g.var])) {
        return None;
    }
    let mut next = values.clone();
    for (v, c) in &t.resets {
        next.insert(v.clone(), c.clone());
    }
    let tgt = m.location(&t.target).ok()?;
    if !tgt.invariant.iter().all(|g| g.holds(&next[&g.var])) {
        return None;
    }
    Some(ConcreteState { location: t.target.clone(), values: next })
}

/// Initial concrete state.
pub fn initial_state(m: &Mzia) -> ConcreteState {
    let mut values: Point = m.initial.point.clone();
    values.insert(m.clock.clone(), Rational::zero());
    ConcreteState { location: m.initial.location.clone(), values }
}

/// A seeded random run of at most `steps` steps. Delays are drawn from the
/// times at which some guard becomes true, the invariant limit, and random
/// fractions of that limit.
pub fn simulate(m: &Mzia, seed: u64, steps: usize) -> Result<Trajectory, ZoneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = initial_state(m);
    let mut cur = start.clone();
    let mut out = Vec::new();
    let mut deadlock = false;
    for _ in 0..steps {
        let loc = m.location(&cur.location)?;
        let fireable: Vec<(usize, ConcreteState)> = m
            .transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.source == cur.location)
            .filter_map(|(i, t)| fire(m, t, &cur.values).map(|s| (i, s)))
            .collect();
        let delays = delay_candidates(m, loc, &cur.values, &mut rng);
        if fireable.is_empty() && delays.is_empty() {
            deadlock = true;
            break;
        }
        let take_action = !fireable.is_empty() && (delays.is_empty() || rng.gen_bool(0.5));
        if take_action {
            let (i, next) = fireable[rng.gen_range(0..fireable.len())].clone();
            out.push(Step::Action { action: m.transitions[i].action.clone(), transition: i, state: next.clone() });
            cur = next;
        } else {
            let d = delays[rng.gen_range(0..delays.len())].clone();
            let next = ConcreteState { location: cur.location.clone(), values: flow(m, loc, &cur.values, &d) };
            out.push(Step::Delay { duration: d, state: next.clone() });
            cur = next;
        }
    }
    Ok(Trajectory { start, steps: out, deadlock })
}

/// Positive admissible delays worth trying.
fn delay_candidates(m: &Mzia, loc: &Location, values: &Point, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let limit = max_delay(m, loc, values);
    let cap = match &limit {
        Some((b, _)) => b.clone(),
        None => Rational::from_int(100),
    };
    if !cap.is_positive() {
        return Vec::new();
    }
    let rates = m.zone_rates(loc);
    let mut out = BTreeSet::new();
    for t in m.transitions.iter().filter(|t| t.source == loc.name) {
        for g in &t.guard {
            if matches!(g.op, RectOp::Ge | RectOp::Gt) {
                let d = (&g.value - &values[&g.var]) / &rates[&g.var];
                if d.is_positive() {
                    out.insert(d);
                }
            }
        }
    }
    if !matches!(limit, Some((_, true))) {
        out.insert(cap.clone());
    }
    let k = rng.gen_range(1..16i64);
    out.insert(&cap * &Rational::new(k, 16));
    out.into_iter().filter(|d| delay_allowed(m, loc, values, d)).collect()
}

fn zone_contains(z: &Dcm, values: &Point, clock: &str, with_clock: bool) -> bool {
    if with_clock {
        z.contains_point(values).unwrap_or(false)
    } else {
        match z.project(clock) {
            Ok(d) => d.contains_point(values).unwrap_or(false),
            Err(_) => false,
        }
    }
}

/// Whether some path of `za` contains the state after every action of `t`.
/// After passing through a subsumed leaf the path continues from the
/// covering state, whose clock values no longer correspond, so membership
/// from there on ignores the clock.
pub fn trajectory_covered(za: &ZoneAutomaton, t: &Trajectory) -> bool {
    let here = |id: usize, s: &ConcreteState, exact: bool| {
        let st = &za.states[id];
        st.sym.location == s.location && zone_contains(&st.sym.zone, &s.values, &za.clock, exact)
    };
    // (state id, clock still exact)
    let mut current: BTreeSet<(usize, bool)> =
        za.initial.iter().copied().filter(|&i| here(i, &t.start, true)).map(|i| (i, true)).collect();
    let expand = |set: BTreeSet<(usize, bool)>| -> BTreeSet<(usize, bool)> {
        let mut out = set.clone();
        for (id, _) in set {
            if let Some(&c) = za.subsumed.get(&id) {
                out.insert((c, false));
            }
        }
        out
    };
    current = expand(current);
    for step in &t.steps {
        if current.is_empty() {
            return false;
        }
        let Step::Action { action, state, .. } = step else { continue };
        let mut next = BTreeSet::new();
        for &(id, exact) in &current {
            for e in za.transitions.iter().filter(|e| e.source == id && &e.action == action) {
                let exact = exact && !e.redirected;
                if here(e.target, state, exact) {
                    next.insert((e.target, exact));
                }
            }
        }
        current = expand(next);
    }
    !current.is_empty()
}
