//! Refinement checking between two zone automata.
//!
//! A pair `(p, q)` is related when `F(p) ⊒ F(q)` and, for every action `a`
//! enabled on either side, every `a`-successor `q'` of `q` is matched by an
//! `a`-successor `p'` of `p` with `F^A_P(a) ⊒ F^A_Q(a)`, `F(p') ⊒ F(q')`
//! and `(p', q')` related in turn.
//!
//! The local part of every reachable pair is evaluated exactly once; the
//! recursive part is then resolved as a greatest fixpoint, so cycles in
//! either automaton are handled coinductively.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::zonegraph::ZoneAutomaton;
use crate::zschema::{rcz_detailed, Assignment, SchemaError, SchemaMode, TvConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("action `{0}` is not declared in both automata")]
    UnknownAction(String),
}

/// Which side's moves must be answered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Every move of the refined automaton `Q` is matched by `P`.
    #[default]
    Algorithm,
    /// Every move of `P` is matched by `Q`.
    Literal,
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "algorithm" => Ok(Direction::Algorithm),
            "literal" => Ok(Direction::Literal),
            other => Err(format!("unknown direction `{other}` (expected algorithm|literal)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RefinementOptions {
    pub mode: SchemaMode,
    /// Also require `q` to let time pass whenever `p` can.
    pub strict_delay: bool,
    pub direction: Direction,
    pub tv: TvConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailedCheck {
    #[serde(rename = "RCZ-state")]
    RczState,
    #[serde(rename = "RCZ-action")]
    RczAction,
    #[serde(rename = "missing-transition")]
    MissingTransition,
    #[serde(rename = "delay")]
    Delay,
}

impl fmt::Display for FailedCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailedCheck::RczState => "RCZ-state",
            FailedCheck::RczAction => "RCZ-action",
            FailedCheck::MissingTransition => "missing-transition",
            FailedCheck::Delay => "delay",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub p: usize,
    pub q: usize,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// Pairs from an initial pair up to (excluding) the failing pair, each
    /// with the action taken on both sides.
    pub path: Vec<WitnessStep>,
    pub failing_pair: (usize, usize),
    pub check: FailedCheck,
    /// The action involved in an action-level failure.
    pub action: Option<String>,
    /// Visible variable values at which a schema check fails.
    pub counterexample: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    /// Distinct pairs whose local conditions were evaluated.
    pub pairs_evaluated: usize,
    pub rcz_calls: usize,
    pub fixpoint_rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub refines: bool,
    pub mode: SchemaMode,
    pub direction: Direction,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

/// `P ⪰ Q`: some pair of initial states is related.
pub fn rc(p: &ZoneAutomaton, q: &ZoneAutomaton, opts: &RefinementOptions) -> Result<Verdict, RefineError> {
    let mut c = Checker::new(p, q, *opts);
    let inits: Vec<(usize, usize)> =
        p.initial.iter().flat_map(|&i| q.initial.iter().map(move |&j| (i, j))).collect();
    for &pair in &inits {
        c.explore(pair)?;
    }
    c.solve();
    let refines = inits.iter().any(|pair| c.alive[pair]);
    let witness = if refines { None } else { inits.first().map(|&pair| c.witness(pair)) };
    Ok(Verdict { refines, mode: opts.mode, direction: opts.direction, witness, stats: c.stats.clone() })
}

#[derive(Clone, Debug)]
struct Obligation {
    action: String,
    /// Pairs any one of which discharges the obligation (`F(p') ⊒ F(q')`
    /// already holds for each).
    candidates: Vec<(usize, usize)>,
    /// When no candidate passed the state check: the pair that failed it.
    rejected: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
struct LocalFailure {
    pair: (usize, usize),
    check: FailedCheck,
    action: Option<String>,
    counterexample: Option<Assignment>,
}

#[derive(Clone, Debug)]
struct PairInfo {
    local: Option<LocalFailure>,
    obligations: Vec<Obligation>,
}

/// Per-invocation state: pair bodies, schema-check cache and the fixpoint.
pub struct Checker<'a> {
    p: &'a ZoneAutomaton,
    q: &'a ZoneAutomaton,
    opts: RefinementOptions,
    pairs: BTreeMap<(usize, usize), PairInfo>,
    state_rcz: BTreeMap<(usize, usize), Option<Assignment>>,
    action_rcz: BTreeMap<String, bool>,
    alive: BTreeMap<(usize, usize), bool>,
    /// Round in which a pair was found unrelated.
    died: BTreeMap<(usize, usize), usize>,
    pub stats: Stats,
}

impl<'a> Checker<'a> {
    pub fn new(p: &'a ZoneAutomaton, q: &'a ZoneAutomaton, opts: RefinementOptions) -> Self {
        Checker {
            p,
            q,
            opts,
            pairs: BTreeMap::new(),
            state_rcz: BTreeMap::new(),
            action_rcz: BTreeMap::new(),
            alive: BTreeMap::new(),
            died: BTreeMap::new(),
            stats: Stats::default(),
        }
    }

    /// `RCZ(F(p), F(q))`, with the failing assignment when it does not hold.
    fn rcz_states(&mut self, pi: usize, qj: usize) -> Result<Option<Assignment>, RefineError> {
        if let Some(r) = self.state_rcz.get(&(pi, qj)) {
            return Ok(r.clone());
        }
        self.stats.rcz_calls += 1;
        let out = rcz_detailed(&self.p.states[pi].schema, &self.q.states[qj].schema, self.opts.mode, &self.opts.tv)?;
        let r = if out.holds { None } else { Some(out.counterexample.unwrap_or_default()) };
        self.state_rcz.insert((pi, qj), r.clone());
        Ok(r)
    }

    fn rcz_action(&mut self, a: &str) -> Result<bool, RefineError> {
        if let Some(&r) = self.action_rcz.get(a) {
            return Ok(r);
        }
        let (Some(sp), Some(sq)) = (self.p.action_schemas.get(a), self.q.action_schemas.get(a)) else {
            return Err(RefineError::UnknownAction(a.to_string()));
        };
        self.stats.rcz_calls += 1;
        let r = rcz_detailed(sp, sq, self.opts.mode, &self.opts.tv)?.holds;
        self.action_rcz.insert(a.to_string(), r);
        Ok(r)
    }

    /// Evaluates the local conditions of every pair reachable from `start`.
    pub fn explore(&mut self, start: (usize, usize)) -> Result<(), RefineError> {
        let mut stack = vec![start];
        while let Some(pair) = stack.pop() {
            if self.pairs.contains_key(&pair) {
                continue;
            }
            let info = self.evaluate(pair)?;
            for ob in &info.obligations {
                for &c in &ob.candidates {
                    if !self.pairs.contains_key(&c) {
                        stack.push(c);
                    }
                }
            }
            self.pairs.insert(pair, info);
        }
        Ok(())
    }

    fn evaluate(&mut self, (pi, qj): (usize, usize)) -> Result<PairInfo, RefineError> {
        self.stats.pairs_evaluated += 1;
        let fail = |check, action: Option<&str>, cex| PairInfo {
            local: Some(LocalFailure { pair: (pi, qj), check, action: action.map(str::to_string), counterexample: cex }),
            obligations: vec![],
        };
        if let Some(cex) = self.rcz_states(pi, qj)? {
            return Ok(fail(FailedCheck::RczState, None, Some(cex)));
        }
        if self.opts.strict_delay && self.p.states[pi].can_delay && !self.q.states[qj].can_delay {
            return Ok(fail(FailedCheck::Delay, None, None));
        }
        let actions: BTreeSet<String> = self.p.enabled(pi).into_iter().chain(self.q.enabled(qj)).collect();
        let mut obligations = Vec::new();
        for a in &actions {
            let ps: Vec<usize> = self.p.successors(pi, a).collect();
            let qs: Vec<usize> = self.q.successors(qj, a).collect();
            // The side whose moves must be answered, and the answering side.
            let (movers, answers) = match self.opts.direction {
                Direction::Algorithm => (&qs, &ps),
                Direction::Literal => (&ps, &qs),
            };
            if movers.is_empty() {
                continue;
            }
            if answers.is_empty() {
                return Ok(fail(FailedCheck::MissingTransition, Some(a), None));
            }
            if !self.rcz_action(a)? {
                return Ok(fail(FailedCheck::RczAction, Some(a), None));
            }
            for &m in movers {
                let mut candidates = Vec::new();
                let mut rejected = None;
                for &r in answers {
                    let pair = match self.opts.direction {
                        Direction::Algorithm => (r, m),
                        Direction::Literal => (m, r),
                    };
                    if self.rcz_states(pair.0, pair.1)?.is_none() {
                        candidates.push(pair);
                    } else if rejected.is_none() {
                        rejected = Some(pair);
                    }
                }
                obligations.push(Obligation { action: a.clone(), candidates, rejected });
            }
        }
        Ok(PairInfo { local: None, obligations })
    }

    /// Greatest fixpoint over the explored pairs.
    fn solve(&mut self) {
        self.alive = self.pairs.iter().map(|(k, v)| (*k, v.local.is_none())).collect();
        self.died = self.pairs.iter().filter(|(_, v)| v.local.is_some()).map(|(k, _)| (*k, 0)).collect();
        let mut round = 0;
        loop {
            round += 1;
            let newly_dead: Vec<(usize, usize)> = self
                .pairs
                .iter()
                .filter(|(k, _)| self.alive[*k])
                .filter(|(_, v)| v.obligations.iter().any(|ob| !ob.candidates.iter().any(|c| self.alive[c])))
                .map(|(k, _)| *k)
                .collect();
            if newly_dead.is_empty() {
                break;
            }
            for k in newly_dead {
                self.alive.insert(k, false);
                self.died.insert(k, round);
            }
        }
        self.stats.fixpoint_rounds = round;
    }

    /// Whether `p` refines `q` as a pair (RCS).
    pub fn rcs(&mut self, p: usize, q: usize) -> Result<bool, RefineError> {
        self.explore((p, q))?;
        self.solve();
        Ok(self.alive[&(p, q)])
    }

    /// The matching condition for one action at `(p, q)`.
    pub fn match_action(&mut self, p: usize, q: usize, a: &str) -> Result<bool, RefineError> {
        if !self.p.action_schemas.contains_key(a) || !self.q.action_schemas.contains_key(a) {
            return Err(RefineError::UnknownAction(a.to_string()));
        }
        self.explore((p, q))?;
        self.solve();
        let ps: Vec<usize> = self.p.successors(p, a).collect();
        let qs: Vec<usize> = self.q.successors(q, a).collect();
        let (movers, answers) = match self.opts.direction {
            Direction::Algorithm => (qs, ps),
            Direction::Literal => (ps, qs),
        };
        if movers.is_empty() {
            return Ok(true);
        }
        if answers.is_empty() || !self.rcz_action(a)? {
            return Ok(false);
        }
        for m in movers {
            let mut found = false;
            for &r in &answers {
                let pair = match self.opts.direction {
                    Direction::Algorithm => (r, m),
                    Direction::Literal => (m, r),
                };
                if self.rcz_states(pair.0, pair.1)?.is_none() {
                    self.explore(pair)?;
                    self.solve();
                    if self.alive[&pair] {
                        found = true;
                        break;
                    }
                }
            }
            if !found {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Follows the earliest-refuted candidates from a dead pair down to a
    /// local failure.
    fn witness(&self, start: (usize, usize)) -> Witness {
        let mut path = Vec::new();
        let mut pair = start;
        loop {
            let info = &self.pairs[&pair];
            if let Some(f) = &info.local {
                return Witness {
                    path,
                    failing_pair: f.pair,
                    check: f.check,
                    action: f.action.clone(),
                    counterexample: f.counterexample.as_ref().map(render_assignment),
                };
            }
            let ob = info
                .obligations
                .iter()
                .find(|ob| ob.candidates.iter().all(|c| self.died.get(c).is_some_and(|&r| r < self.died[&pair])))
                .expect("a dead pair has a refuted obligation");
            path.push(WitnessStep { p: pair.0, q: pair.1, action: ob.action.clone() });
            match ob.candidates.iter().min_by_key(|c| self.died[*c]) {
                Some(&next) => pair = next,
                None => {
                    let failing = ob.rejected.expect("an answering move was rejected");
                    let cex = self.state_rcz.get(&failing).cloned().flatten();
                    return Witness {
                        path,
                        failing_pair: failing,
                        check: FailedCheck::RczState,
                        action: None,
                        counterexample: cex.as_ref().map(render_assignment),
                    };
                }
            }
        }
    }
}

fn render_assignment(a: &Assignment) -> BTreeMap<String, String> {
    a.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (mode {})", if self.refines { "refines" } else { "does not refine" }, self.mode)?;
        if let Some(w) = &self.witness {
            for s in &w.path {
                writeln!(f, "  (s{}, s{}) --{}-->", s.p, s.q, s.action)?;
            }
            write!(f, "  (s{}, s{}) fails {}", w.failing_pair.0, w.failing_pair.1, w.check)?;
            if let Some(a) = &w.action {
                write!(f, " on {a}")?;
            }
            writeln!(f)?;
            if let Some(cex) = &w.counterexample {
                let parts: Vec<String> = cex.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                writeln!(f, "  counterexample: {}", parts.join(", "))?;
            }
        }
        Ok(())
    }
}
