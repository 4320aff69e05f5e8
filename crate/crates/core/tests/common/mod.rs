#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mzia::dcm::{Dcm, ZoneConstraint};
use mzia::dsl::parse_model;
use mzia::linear::Point;
use mzia::model::Mzia;
use mzia::refinement::{rc, Direction, FailedCheck, RefinementOptions, Verdict};
use mzia::zonegraph::{
    build_zone_automaton, build_zone_automaton_with, delay_allowed, fire, initial_state, simulate, trajectory_covered,
    BuildOptions, Step, SymState, ZoneAutomaton, ZoneEdge, ZoneError, ZoneState,
};
use mzia::zschema::{geq_bruteforce, OracleConfig};
use mzia::zschema::{
    rcl_detailed, rcz, tv, Assignment, Atom, CmpOp, Decoration, Expr, Implication, SchemaMode, TvConfig, VarDecl,
    ZSchema, ZType,
};
use mzia::{Bound, Rational};

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn load(file: &str) -> Mzia {
    let text = std::fs::read_to_string(models_dir().join(file)).expect("fixture readable");
    parse_model(&text).expect("fixture parses")
}

pub fn boiler_p() -> Mzia {
    load("boiler_p.mzia")
}

pub fn boiler_q() -> Mzia {
    load("boiler_q.mzia")
}

pub fn r(n: i64) -> Rational {
    Rational::from_int(n)
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn rate_map(pairs: &[(&str, i64)]) -> BTreeMap<String, Rational> {
    pairs.iter().map(|(v, k)| (v.to_string(), r(*k))).collect()
}

pub fn point(pairs: &[(&str, Rational)]) -> Point {
    pairs.iter().map(|(v, x)| (v.to_string(), x.clone())).collect()
}

/// Text with `−` and whitespace normalized, for comparing rendered zones.
pub fn normalize(s: &str) -> String {
    s.replace('−', "-").split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn rendered_states(za: &ZoneAutomaton) -> Vec<(String, String)> {
    za.states.iter().map(|s| (s.sym.location.clone(), normalize(&s.sym.render(&za.clock).unwrap()))).collect()
}

/// `(lower, upper)` of the clock in a state's zone.
pub fn clock_range(za: &ZoneAutomaton, id: usize) -> (Rational, Rational) {
    let z = &za.states[id].sym.zone;
    let c = z.index_of(&za.clock).unwrap();
    let lo = match z.bound(0, c) {
        Bound::Finite { value, .. } => -value.clone(),
        Bound::Infinity => panic!("clock unbounded below"),
    };
    let hi = match z.bound(c, 0) {
        Bound::Finite { value, .. } => value.clone(),
        Bound::Infinity => panic!("clock unbounded above"),
    };
    (lo, hi)
}

// ---------------------------------------------------------------- zones

/// Direct reading of one zone constraint at a point.
pub fn constraint_holds(c: &ZoneConstraint, p: &Point) -> bool {
    let le = |x: &Rational, b: &Bound| match b {
        Bound::Infinity => true,
        Bound::Finite { value, strict: true } => x < value,
        Bound::Finite { value, strict: false } => x <= value,
    };
    match c {
        ZoneConstraint::UpperBound(v, b) => le(&p[v], b),
        ZoneConstraint::LowerBound(v, b) => le(&-p[v].clone(), &neg(b)),
        ZoneConstraint::Relative { var_a, var_b, coeff_a, coeff_b, lower, upper } => {
            let d = coeff_a * &p[var_a] - coeff_b * &p[var_b];
            le(&d, upper) && le(&-d, &neg(lower))
        }
    }
}

fn neg(b: &Bound) -> Bound {
    match b {
        Bound::Infinity => Bound::Infinity,
        Bound::Finite { value, strict } => Bound::Finite { value: -value.clone(), strict: *strict },
    }
}

pub struct RandomZone {
    pub vars: Vec<String>,
    pub rates: BTreeMap<String, Rational>,
    pub constraints: Vec<ZoneConstraint>,
}

impl RandomZone {
    pub fn dcm(&self) -> Dcm {
        Dcm::from_constraints(&self.vars, &self.rates, &self.constraints).unwrap()
    }

    pub fn holds(&self, p: &Point) -> bool {
        self.constraints.iter().all(|c| constraint_holds(c, p))
    }
}

fn random_bound(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Bound {
    let v = q(rng.gen_range(lo * 2..=hi * 2), 2);
    if rng.gen_bool(0.3) {
        Bound::lt(v)
    } else {
        Bound::le(v)
    }
}

pub fn random_context(rng: &mut ChaCha8Rng) -> (Vec<String>, BTreeMap<String, Rational>) {
    let n = rng.gen_range(1..=3);
    let vars: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let rates = vars.iter().map(|v| (v.clone(), r(rng.gen_range(1..=3)))).collect();
    (vars, rates)
}

/// A random zone over a given context. Constants stay in `[-5, 5]` so the
/// sampling grid sees every corner.
pub fn random_zone_in(rng: &mut ChaCha8Rng, vars: &[String], rates: &BTreeMap<String, Rational>) -> RandomZone {
    let mut constraints = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let v = vars.choose(rng).unwrap().clone();
        match rng.gen_range(0..3) {
            0 => constraints.push(ZoneConstraint::UpperBound(v, random_bound(rng, -2, 5))),
            1 => constraints.push(ZoneConstraint::LowerBound(v, random_bound(rng, -5, 2))),
            _ => {
                let w = vars.choose(rng).unwrap().clone();
                if w == v {
                    continue;
                }
                let (ka, kb) = (rates[&w].clone(), rates[&v].clone());
                let span = ka.to_i64().unwrap() + kb.to_i64().unwrap();
                let lower = if rng.gen_bool(0.5) { random_bound(rng, -2 * span, 0) } else { Bound::Infinity };
                let upper = if rng.gen_bool(0.7) { random_bound(rng, 0, 2 * span) } else { Bound::Infinity };
                constraints.push(ZoneConstraint::Relative { var_a: v, var_b: w, coeff_a: ka, coeff_b: kb, lower, upper });
            }
        }
    }
    RandomZone { vars: vars.to_vec(), rates: rates.clone(), constraints }
}

/// Every point of the `[-6, 6]` half-integer grid (quarter steps in one
/// dimension) over `vars`.
pub fn grid(vars: &[String]) -> Vec<Point> {
    let step = if vars.len() == 1 { 4 } else { 2 };
    let axis: Vec<Rational> = (-6 * step..=6 * step).map(|i| q(i, step)).collect();
    let mut out = vec![Point::new()];
    for v in vars {
        let mut next = Vec::new();
        for p in &out {
            for x in &axis {
                let mut p = p.clone();
                p.insert(v.clone(), x.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn flow(p: &Point, rates: &BTreeMap<String, Rational>, d: &Rational) -> Point {
    p.iter().map(|(v, x)| (v.clone(), x + &(&rates[v] * d))).collect()
}

fn grid_for(vars: &[String]) -> Vec<Point> {
    // Three variables on the full grid is too many points; thin it out.
    let g = grid(vars);
    if vars.len() < 3 {
        g
    } else {
        g.into_iter().step_by(7).collect()
    }
}

/// Canonical form is idempotent; `includes` is reflexive, antisymmetric
/// and transitive; intersection and inclusion agree with direct
/// evaluation of the constraints on a sampling grid.
pub fn suite_dcm_laws(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let (vars, rates) = random_context(&mut rng);
        let za = random_zone_in(&mut rng, &vars, &rates);
        let zb = random_zone_in(&mut rng, &vars, &rates);
        let zc = random_zone_in(&mut rng, &vars, &rates);
        let (a, b, c) = (za.dcm(), zb.dcm(), zc.dcm());
        let ctx = || format!("case {case}: A = {:?}, B = {:?}", za.constraints, zb.constraints);
        if a.canonicalize() != a.canonicalize().canonicalize() || a != a.canonicalize() {
            return Err(format!("canonicalize not idempotent, {}", ctx()));
        }
        if !a.includes(&a).unwrap() {
            return Err(format!("includes not reflexive, {}", ctx()));
        }
        let ab = a.intersect(&b).unwrap();
        let abc = ab.intersect(&c).unwrap();
        if !a.includes(&ab).unwrap() || !ab.includes(&abc).unwrap() || !a.includes(&abc).unwrap() {
            return Err(format!("intersection not below its operands, {}", ctx()));
        }
        let (ia, ib, ic) = (a.includes(&b).unwrap(), b.includes(&a).unwrap(), b.includes(&c).unwrap());
        if ia && ib && a != b {
            return Err(format!("includes not antisymmetric, {}", ctx()));
        }
        if ia && ic && !a.includes(&c).unwrap() {
            return Err(format!("includes not transitive, {}", ctx()));
        }
        for p in grid_for(&vars) {
            let (in_a, in_b) = (za.holds(&p), zb.holds(&p));
            if a.contains_point(&p).unwrap() != in_a {
                return Err(format!("membership differs at {p:?}, {}", ctx()));
            }
            if ab.contains_point(&p).unwrap() != (in_a && in_b) {
                return Err(format!("intersection differs at {p:?}, {}", ctx()));
            }
            if ia && in_b && !in_a {
                return Err(format!("A includes B but {p:?} is only in B, {}", ctx()));
            }
            if ab.is_empty() && in_a && in_b {
                return Err(format!("intersection reported empty but holds at {p:?}, {}", ctx()));
            }
        }
    }
    Ok(())
}

/// Rate-scaled relative entries and lower bounds survive elapse unchanged,
/// the scaled differences are constant along flows, and flowing any point
/// of a zone stays inside its elapse.
pub fn suite_flow_invariance(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delays = [q(0, 1), q(1, 3), q(1, 1), q(7, 2), q(40, 1)];
    for case in 0..cases {
        let (vars, rates) = random_context(&mut rng);
        let z = random_zone_in(&mut rng, &vars, &rates);
        let d = z.dcm();
        if d.is_empty() {
            continue;
        }
        let up = d.elapse();
        let n = d.dim();
        for i in 0..n {
            for j in 1..n {
                if i != j && d.bound(i, j) != up.bound(i, j) {
                    return Err(format!("case {case}: cell ({i},{j}) changed under elapse for {:?}", z.constraints));
                }
            }
        }
        for j in 1..n {
            if !up.bound(j, 0).is_infinite() {
                return Err(format!("case {case}: upper bound of cell ({j},0) survives elapse"));
            }
        }
        let inside: Vec<Point> = grid_for(&vars).into_iter().filter(|p| z.holds(p)).collect();
        for p in inside.iter().step_by(inside.len() / 24 + 1) {
            for t in &delays {
                let p2 = flow(p, &rates, t);
                if !up.contains_point(&p2).unwrap() {
                    return Err(format!("case {case}: {p:?} flowed by {t} leaves the elapsed zone"));
                }
                for i in 1..n {
                    for j in 1..n {
                        if d.scaled_difference(i, j, p) != d.scaled_difference(i, j, &p2) {
                            return Err(format!("case {case}: scaled difference ({i},{j}) drifts along the flow"));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- models

/// Source text of a random valid model: 1 to 3 locations, 1 or 2
/// variables, integer rates in 1..4, an upper-bound invariant on every
/// variable, and resets wherever a rate changes.
pub fn random_model_source(rng: &mut ChaCha8Rng) -> String {
    let nloc = rng.gen_range(1..=3);
    let nvar = rng.gen_range(1..=2);
    let vars: Vec<String> = (0..nvar).map(|i| format!("v{i}")).collect();
    let rates: Vec<Vec<i64>> = (0..nloc).map(|_| (0..nvar).map(|_| rng.gen_range(1..=4)).collect()).collect();
    let ub: Vec<Vec<i64>> = (0..nloc).map(|_| (0..nvar).map(|_| rng.gen_range(10..=60)).collect()).collect();
    let mut s = String::from("automaton rnd {\n");
    for v in &vars {
        s += &format!("  continuous {v}! ;\n");
    }
    s += "  output a0, a1, a2;\n";
    for l in 0..nloc {
        s += &format!("  location L{l} {{");
        for (k, v) in vars.iter().enumerate() {
            s += &format!(" rate {v} = {};", rates[l][k]);
        }
        let inv: Vec<String> = vars.iter().enumerate().map(|(k, v)| format!("{v} <= {}", ub[l][k])).collect();
        s += &format!(" inv {}; }}\n", inv.join(", "));
    }
    for _ in 0..rng.gen_range(1..=4) {
        let (src, tgt) = (rng.gen_range(0..nloc), rng.gen_range(0..nloc));
        s += &format!("  trans L{src} -> L{tgt} on a{}", rng.gen_range(0..3));
        let mut guards = Vec::new();
        for (k, v) in vars.iter().enumerate() {
            if rng.gen_bool(0.5) {
                let op = if rng.gen_bool(0.5) { ">=" } else { ">" };
                guards.push(format!("{v} {op} {}", rng.gen_range(0..ub[src][k])));
            }
        }
        if !guards.is_empty() {
            s += &format!(" when {}", guards.join(", "));
        }
        let mut resets = Vec::new();
        for (k, v) in vars.iter().enumerate() {
            if rates[src][k] != rates[tgt][k] || rng.gen_bool(0.3) {
                resets.push(format!("{v} := {}", rng.gen_range(0..=ub[tgt][k])));
            }
        }
        if !resets.is_empty() {
            s += &format!(" reset {}", resets.join(", "));
        }
        s += ";\n";
    }
    let init: Vec<String> = vars.iter().map(|v| format!(" {v} = {};", rng.gen_range(0..=5))).collect();
    s += &format!("  init L0 {{{} }}\n}}\n", init.concat());
    s
}

/// A random model together with its zone automaton; models whose graph
/// grows past a few hundred states are redrawn.
pub fn random_model(rng: &mut ChaCha8Rng) -> (Mzia, ZoneAutomaton) {
    let opts = BuildOptions { max_states: 300, ..BuildOptions::default() };
    loop {
        let src = random_model_source(rng);
        let m = parse_model(&src).unwrap_or_else(|e| panic!("generated model rejected: {e:?}\n{src}"));
        match build_zone_automaton_with(&m, &opts) {
            Ok(za) => return (m, za),
            Err(ZoneError::Capacity(_)) => continue,
            Err(e) => panic!("zone construction failed: {e}\n{src}"),
        }
    }
}

/// Replays a trajectory against the concrete semantics.
pub fn replay(m: &Mzia, t: &mzia::zonegraph::Trajectory) -> Result<(), String> {
    let start = initial_state(m);
    if t.start != start {
        return Err("trajectory does not start in the initial state".into());
    }
    let mut cur = start;
    for (k, step) in t.steps.iter().enumerate() {
        match step {
            Step::Delay { duration, state } => {
                let loc = m.location(&cur.location).unwrap();
                if !duration.is_positive() || !delay_allowed(m, loc, &cur.values, duration) {
                    return Err(format!("step {k}: delay {duration} not admissible"));
                }
                let mut rates = m.zone_rates(loc);
                rates.insert(m.clock.clone(), r(1));
                let expect = flow(&cur.values, &rates, duration);
                if state.location != cur.location || state.values != expect {
                    return Err(format!("step {k}: delay lands at the wrong valuation"));
                }
                if !loc.invariant.iter().all(|c| c.holds(&state.values[&c.var])) {
                    return Err(format!("step {k}: delay breaks the invariant"));
                }
            }
            Step::Action { action, transition, state } => {
                let tr = &m.transitions[*transition];
                if tr.source != cur.location || &tr.action != action {
                    return Err(format!("step {k}: transition {transition} does not start here"));
                }
                if fire(m, tr, &cur.values).as_ref() != Some(state) {
                    return Err(format!("step {k}: action result differs from the semantics"));
                }
            }
        }
        cur = step.state().clone();
    }
    Ok(())
}

fn check_runs(m: &Mzia, za: &ZoneAutomaton, seeds: impl Iterator<Item = u64>, steps: usize) -> Result<(), String> {
    for seed in seeds {
        let t = simulate(m, seed, steps).map_err(|e| e.to_string())?;
        replay(m, &t).map_err(|e| format!("{} seed {seed}: {e}", m.name))?;
        if !trajectory_covered(za, &t) {
            return Err(format!("{} seed {seed}: run leaves the zone automaton", m.name));
        }
    }
    Ok(())
}

/// Seeded runs replay under the concrete semantics and stay inside the
/// zone automaton: `seeds` runs on each fixture and `seeds` runs spread
/// over random models.
pub fn suite_simulation_soundness(seeds: u64) -> Result<(), String> {
    for m in [boiler_p(), boiler_q()] {
        let za = build_zone_automaton(&m).unwrap();
        check_runs(&m, &za, 0..seeds, 25)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let per_model = 4;
    for k in 0..seeds / per_model {
        let (m, za) = random_model(&mut rng);
        check_runs(&m, &za, (k * per_model)..(k + 1) * per_model, 20)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- schemas

fn v(name: &str) -> Expr {
    Expr::var(name)
}

fn n(x: i64) -> Expr {
    Expr::num(r(x))
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::Add(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Mul(Box::new(a), Box::new(b))
}

fn random_cmp(rng: &mut ChaCha8Rng) -> CmpOp {
    *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt].choose(rng).unwrap()
}

/// Discrete variables used by the validity suite.
pub fn discrete_pool() -> Vec<VarDecl> {
    vec![
        VarDecl::new("a", Decoration::Input, ZType::IntRange(0, 9)),
        VarDecl::new("b", Decoration::Input, ZType::IntRange(0, 9)),
        VarDecl::new("c", Decoration::Output, ZType::IntRange(-2, 2)),
        VarDecl::new("e", Decoration::Output, ZType::Enum(names(&["red", "green", "blue"]))),
    ]
}

fn random_discrete_atom(rng: &mut ChaCha8Rng, ints: &[&str]) -> Atom {
    let pick = |rng: &mut ChaCha8Rng| v(ints.choose(rng).unwrap());
    match rng.gen_range(0..7) {
        0 | 1 => {
            let lhs = add(mul(n(rng.gen_range(-2..=2)), pick(rng)), pick(rng));
            Atom::Cmp(lhs, random_cmp(rng), n(rng.gen_range(-6..=12)))
        }
        2 => Atom::Even(add(pick(rng), pick(rng))),
        3 => Atom::Odd(pick(rng)),
        4 => Atom::Cmp(Expr::Mod(Box::new(pick(rng)), Box::new(n(3))), CmpOp::Eq, n(rng.gen_range(0..3))),
        5 => Atom::Member(pick(rng), (0..rng.gen_range(1..4)).map(|_| n(rng.gen_range(-3..10))).collect()),
        _ => {
            let label = ["red", "green", "blue"].choose(rng).unwrap();
            let op = if rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
            Atom::Cmp(v("e"), op, Expr::Label(label.to_string()))
        }
    }
}

fn schema_over(pool: &[VarDecl], predicate: Vec<Atom>, hidden: Vec<VarDecl>) -> ZSchema {
    let mut used = BTreeSet::new();
    for a in &predicate {
        used.extend(a.vars());
    }
    let decls = pool.iter().filter(|d| used.contains(&d.name)).cloned().collect();
    ZSchema { decls, hidden, predicate }
}

pub fn random_discrete_schema(rng: &mut ChaCha8Rng, with_hidden: bool) -> ZSchema {
    let pool = discrete_pool();
    let mut ints = vec!["a", "b", "c"];
    let hidden = if with_hidden {
        ints.push("h");
        vec![VarDecl::new("h", Decoration::Internal, ZType::IntRange(0, 4))]
    } else {
        Vec::new()
    };
    let atoms = (0..rng.gen_range(1..=3)).map(|_| random_discrete_atom(rng, &ints)).collect();
    schema_over(&pool, atoms, hidden)
}

fn holds_all(atoms: &[Atom], env: &Assignment) -> bool {
    let look = |name: &str| env.get(name).cloned();
    atoms.iter().all(|a| a.holds(&look).unwrap())
}

/// Direct enumeration of an implication over discrete schemas.
pub fn brute_valid(f: &Implication) -> bool {
    let pool = discrete_pool();
    let mut free = BTreeSet::new();
    for s in f.antecedents.iter().chain([&f.consequent]) {
        free.extend(s.decls.iter().map(|d| d.name.clone()));
    }
    let decls: Vec<&VarDecl> = pool.iter().filter(|d| free.contains(&d.name)).collect();
    let mut all = vec![Assignment::new()];
    for d in decls {
        let mut next = Vec::new();
        for a in &all {
            for val in d.ty.values().unwrap() {
                let mut a = a.clone();
                a.insert(d.name.clone(), val);
                next.push(a);
            }
        }
        all = next;
    }
    all.iter().all(|env| {
        if !f.antecedents.iter().all(|s| holds_all(&s.predicate, env)) {
            return true;
        }
        let c = &f.consequent;
        match c.hidden.first() {
            None => holds_all(&c.predicate, env),
            Some(h) => h.ty.values().unwrap().into_iter().any(|val| {
                let mut env = env.clone();
                env.insert(h.name.clone(), val);
                holds_all(&c.predicate, &env)
            }),
        }
    })
}

/// TV agrees with direct enumeration on purely discrete implications, and
/// every reported counterexample really falsifies the implication.
pub fn suite_tv_vs_bruteforce(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = TvConfig { max_assignments: 10_000 };
    for case in 0..cases {
        let antecedents = (0..rng.gen_range(1..=2)).map(|_| random_discrete_schema(&mut rng, false)).collect();
        let hide = rng.gen_bool(0.4);
        let consequent = random_discrete_schema(&mut rng, hide);
        let f = Implication { antecedents, consequent };
        let got = tv(&f, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let want = brute_valid(&f);
        if got.valid != want {
            return Err(format!("case {case}: tv says {} but enumeration says {want} for {f:?}", got.valid));
        }
        if let Some(cex) = got.counterexample {
            let holds_ante = f.antecedents.iter().all(|s| holds_all(&s.predicate, &cex));
            let c = &f.consequent;
            let holds_cons = match c.hidden.first() {
                None => holds_all(&c.predicate, &cex),
                Some(h) => h.ty.values().unwrap().into_iter().any(|val| {
                    let mut env = cex.clone();
                    env.insert(h.name.clone(), val);
                    holds_all(&c.predicate, &env)
                }),
            };
            if !holds_ante || holds_cons {
                return Err(format!("case {case}: counterexample {cex:?} does not falsify {f:?}"));
            }
        }
    }
    Ok(())
}

/// Interface of a random schema pair for the RCL suite.
pub fn random_interface(rng: &mut ChaCha8Rng) -> Vec<VarDecl> {
    let mut out = Vec::new();
    if rng.gen_bool(0.6) {
        out.push(VarDecl::new("i", Decoration::Input, ZType::IntRange(0, 3)));
    }
    if rng.gen_bool(0.5) {
        out.push(VarDecl::new("u", Decoration::Input, ZType::Real));
    }
    if rng.gen_bool(0.8) {
        out.push(VarDecl::new("o", Decoration::Output, ZType::Real));
    }
    if rng.gen_bool(0.3) {
        out.push(VarDecl::new("w", Decoration::Output, ZType::IntRange(0, 2)));
    }
    out
}

fn half(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Expr {
    Expr::num(q(rng.gen_range(lo * 2..=hi * 2), 2))
}

/// An atom mentioning at most one continuous variable, with every boundary
/// inside `[-3, 3]` on the half-integer lattice.
fn random_rcl_atom(rng: &mut ChaCha8Rng, iface: &[VarDecl]) -> Atom {
    let conts: Vec<&str> = iface.iter().filter(|d| d.ty.is_continuous()).map(|d| d.name.as_str()).collect();
    let discs: Vec<&str> = iface.iter().filter(|d| !d.ty.is_continuous()).map(|d| d.name.as_str()).collect();
    let has_i = discs.contains(&"i");
    if !conts.is_empty() && (discs.is_empty() || rng.gen_bool(0.7)) {
        let x = v(conts.choose(rng).unwrap());
        let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt].choose(rng).unwrap();
        let rhs = if has_i && rng.gen_bool(0.5) { add(half(rng, -3, 0), v("i")) } else { half(rng, -3, 3) };
        return Atom::Cmp(x, op, rhs);
    }
    if discs.is_empty() {
        return Atom::Bool(rng.gen_bool(0.8));
    }
    let d = v(discs.choose(rng).unwrap());
    match rng.gen_range(0..3) {
        0 => Atom::Even(d),
        1 => Atom::Cmp(d, random_cmp(rng), n(rng.gen_range(0..=3))),
        _ => Atom::Member(d, vec![n(rng.gen_range(0..=3)), n(rng.gen_range(0..=3))]),
    }
}

pub fn random_rcl_schema(rng: &mut ChaCha8Rng, iface: &[VarDecl]) -> ZSchema {
    let predicate = (0..rng.gen_range(1..=3)).map(|_| random_rcl_atom(rng, iface)).collect();
    ZSchema { decls: iface.to_vec(), hidden: Vec::new(), predicate }
}

pub fn small_oracle() -> OracleConfig {
    OracleConfig { box_lo: r(-5), box_hi: r(5), step: q(1, 2), max_evaluations: 50_000_000 }
}

/// The symbolic `M ≥ N` agrees with the enumeration oracle in both modes.
pub fn suite_rcl_vs_oracle(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = small_oracle();
    for case in 0..cases {
        let iface = random_interface(&mut rng);
        let a = random_rcl_schema(&mut rng, &iface);
        let b = if rng.gen_bool(0.3) {
            let mut b = a.clone();
            b.predicate.push(random_rcl_atom(&mut rng, &iface));
            b
        } else {
            random_rcl_schema(&mut rng, &iface)
        };
        for mode in [SchemaMode::Guarded, SchemaMode::Strict] {
            let got = rcl_detailed(&a, &b, mode, &TvConfig::default()).map_err(|e| format!("case {case}: {e}"))?;
            let want = geq_bruteforce(&a, &b, mode, &cfg).map_err(|e| format!("case {case}: oracle {e}"))?;
            if got.holds != want {
                return Err(format!("case {case} ({mode}): rcl {} vs oracle {want}\n  M = {a}\n  N = {b}", got.holds));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- refinement

/// A finite labelled transition system dressed as a zone automaton with
/// trivial schemas and empty zones over no variables.
pub fn lts(name: &str, n: usize, edges: &[(usize, &str, usize)]) -> ZoneAutomaton {
    let zone = Dcm::universe(&[], &BTreeMap::new()).unwrap();
    let states = (0..n)
        .map(|id| ZoneState {
            id,
            sym: SymState { location: format!("q{id}"), zone: zone.clone() },
            schema: ZSchema::trivial(),
            can_delay: false,
        })
        .collect();
    let transitions = edges
        .iter()
        .map(|&(source, a, target)| ZoneEdge { source, action: a.to_string(), target, transition: 0, redirected: false })
        .collect();
    let action_schemas = ["a", "b", "c"].iter().map(|a| (a.to_string(), ZSchema::trivial())).collect();
    ZoneAutomaton {
        name: name.to_string(),
        clock: "clock".to_string(),
        continuous_vars: Vec::new(),
        states,
        initial: vec![0],
        transitions,
        subsumed: BTreeMap::new(),
        action_schemas,
    }
}

pub fn random_lts(rng: &mut ChaCha8Rng, name: &str) -> ZoneAutomaton {
    let n = rng.gen_range(1..=8);
    let labels = ["a", "b", "c"];
    let mut edges = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=2 * n) {
        edges.insert((rng.gen_range(0..n), *labels[..2].choose(rng).unwrap(), rng.gen_range(0..n)));
    }
    if rng.gen_bool(0.2) {
        edges.insert((rng.gen_range(0..n), "c", rng.gen_range(0..n)));
    }
    let edges: Vec<(usize, &str, usize)> = edges.into_iter().collect();
    lts(name, n, &edges)
}

/// Greatest simulation: `(p, q)` stays related while every move of `q` is
/// answered by an equally labelled move of `p` into a related pair.
pub fn simulation_oracle(p: &ZoneAutomaton, q: &ZoneAutomaton) -> bool {
    let mut rel: BTreeSet<(usize, usize)> =
        (0..p.states.len()).flat_map(|i| (0..q.states.len()).map(move |j| (i, j))).collect();
    loop {
        let dead: Vec<(usize, usize)> = rel
            .iter()
            .copied()
            .filter(|&(i, j)| {
                !q.transitions.iter().filter(|e| e.source == j).all(|qe| {
                    p.transitions
                        .iter()
                        .any(|pe| pe.source == i && pe.action == qe.action && rel.contains(&(pe.target, qe.target)))
                })
            })
            .collect();
        if dead.is_empty() {
            break;
        }
        for d in dead {
            rel.remove(&d);
        }
    }
    p.initial.iter().any(|&i| q.initial.iter().any(|&j| rel.contains(&(i, j))))
}

/// Checks that a negative verdict's witness is a real path in both
/// automata ending at a check that fails when run on its own.
pub fn replay_witness(p: &ZoneAutomaton, q: &ZoneAutomaton, v: &Verdict, mode: SchemaMode) -> Result<(), String> {
    let w = v.witness.as_ref().ok_or("negative verdict without witness")?;
    let mut pairs: Vec<(usize, usize)> = w.path.iter().map(|s| (s.p, s.q)).collect();
    pairs.push(w.failing_pair);
    if !p.initial.contains(&pairs[0].0) || !q.initial.contains(&pairs[0].1) {
        return Err(format!("witness starts at {:?}, not an initial pair", pairs[0]));
    }
    for (k, step) in w.path.iter().enumerate() {
        let next = pairs[k + 1];
        if !p.has_edge(step.p, &step.action, next.0) || !q.has_edge(step.q, &step.action, next.1) {
            return Err(format!("witness step {k} ({:?} --{}--> {next:?}) is not an edge", (step.p, step.q), step.action));
        }
    }
    let (fp, fq) = w.failing_pair;
    let fails = match w.check {
        FailedCheck::RczState => !rcz(&p.states[fp].schema, &q.states[fq].schema, mode).unwrap(),
        FailedCheck::RczAction => {
            let a = w.action.as_deref().ok_or("action failure without action")?;
            !rcz(&p.action_schemas[a], &q.action_schemas[a], mode).unwrap()
        }
        FailedCheck::MissingTransition => {
            let a = w.action.as_deref().ok_or("missing-transition without action")?;
            q.successors(fq, a).next().is_some() && p.successors(fp, a).next().is_none()
        }
        FailedCheck::Delay => p.states[fp].can_delay && !q.states[fq].can_delay,
    };
    if fails {
        Ok(())
    } else {
        Err(format!("terminal check {} at {:?} passes when re-run", w.check, w.failing_pair))
    }
}

/// `rc` agrees with the greatest-simulation oracle on random transition
/// systems; false verdicts carry replayable witnesses; `rc(X, X)` holds.
pub fn suite_rc_vs_simulation(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = RefinementOptions::default();
    for case in 0..cases {
        let p = random_lts(&mut rng, "P");
        let q = if rng.gen_bool(0.3) { p.clone() } else { random_lts(&mut rng, "Q") };
        let v = rc(&p, &q, &opts).map_err(|e| e.to_string())?;
        let want = simulation_oracle(&p, &q);
        if v.refines != want {
            return Err(format!("case {case}: rc {} vs oracle {want}\n  P: {:?}\n  Q: {:?}", v.refines, p.transitions, q.transitions));
        }
        if !v.refines {
            replay_witness(&p, &q, &v, opts.mode).map_err(|e| format!("case {case}: {e}"))?;
        }
        if !rc(&p, &p, &opts).unwrap().refines {
            return Err(format!("case {case}: rc(P, P) is false"));
        }
    }
    Ok(())
}

/// The number of evaluated pairs never exceeds `|P|·|Q|`, on random
/// transition systems and on zone automata of random models.
pub fn suite_pair_bound(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let (p, q) = if case % 2 == 0 {
            (random_lts(&mut rng, "P"), random_lts(&mut rng, "Q"))
        } else {
            let (_, p) = random_model(&mut rng);
            let (_, q) = random_model(&mut rng);
            (p, q)
        };
        for direction in [Direction::Algorithm, Direction::Literal] {
            let opts = RefinementOptions { direction, ..RefinementOptions::default() };
            let v = rc(&p, &q, &opts).map_err(|e| format!("case {case}: {e}"))?;
            let bound = p.states.len() * q.states.len();
            if v.stats.pairs_evaluated > bound {
                return Err(format!("case {case}: {} pairs evaluated, bound {bound}", v.stats.pairs_evaluated));
            }
        }
    }
    Ok(())
}

/// Removing one transition of `Q` never turns a positive verdict negative.
pub fn suite_monotonicity(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = RefinementOptions::default();
    let mut checked = 0;
    while checked < cases {
        let p = random_lts(&mut rng, "P");
        let q = if rng.gen_bool(0.5) { p.clone() } else { random_lts(&mut rng, "Q") };
        if q.transitions.is_empty() || !rc(&p, &q, &opts).unwrap().refines {
            continue;
        }
        let mut smaller = q.clone();
        smaller.transitions.remove(rng.gen_range(0..q.transitions.len()));
        if !rc(&p, &smaller, &opts).unwrap().refines {
            return Err(format!("removing a Q edge broke refinement: P {:?}, Q {:?}", p.transitions, q.transitions));
        }
        checked += 1;
    }
    Ok(())
}
