//! Validity of schema implications over finite discrete domains.

use std::collections::{BTreeMap, BTreeSet};

use crate::linear::{uncovered_point, LinearConstraint, Polyhedron};

use super::{for_each_assignment, Assignment, AtomForm, SchemaError, VarDecl, ZSchema};

/// `A₁ ∧ … ∧ Aₙ ⇒ C`, universally closed over every visible variable.
/// Hidden variables of the antecedents behave universally, those of the
/// consequent existentially.
#[derive(Clone, Debug)]
pub struct Implication {
    pub antecedents: Vec<ZSchema>,
    pub consequent: ZSchema,
}

impl Implication {
    pub fn new(antecedent: ZSchema, consequent: ZSchema) -> Self {
        Implication { antecedents: vec![antecedent], consequent }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TvConfig {
    /// Upper bound on enumerated discrete assignments.
    pub max_assignments: u128,
}

impl Default for TvConfig {
    fn default() -> Self {
        TvConfig { max_assignments: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TvOutcome {
    pub valid: bool,
    /// Values for every visible variable at which the implication fails.
    pub counterexample: Option<Assignment>,
}

/// Decides validity: discrete variables are enumerated, and for each
/// discrete case the continuous antecedent polyhedron must be covered by
/// the union of the consequent's (projected) polyhedra.
pub fn tv(formula: &Implication, cfg: &TvConfig) -> Result<TvOutcome, SchemaError> {
    let mut free: BTreeMap<String, VarDecl> = BTreeMap::new();
    for s in formula.antecedents.iter().chain([&formula.consequent]) {
        s.check_well_formed()?;
        for d in &s.decls {
            match free.get(&d.name) {
                Some(existing) if existing.ty != d.ty => return Err(SchemaError::TypeConflict(d.name.clone())),
                Some(_) => {}
                None => {
                    free.insert(d.name.clone(), d.clone());
                }
            }
        }
    }
    // Give every hidden block its own names.
    let mut taken: BTreeSet<String> = free.keys().cloned().collect();
    let mut antecedents = Vec::new();
    for a in &formula.antecedents {
        let a = a.with_fresh_hidden(&taken);
        taken.extend(a.hidden.iter().map(|d| d.name.clone()));
        antecedents.push(a);
    }
    let consequent = formula.consequent.with_fresh_hidden(&taken);

    let universal: Vec<VarDecl> =
        free.values().cloned().chain(antecedents.iter().flat_map(|a| a.hidden.iter().cloned())).collect();
    let discrete_u: Vec<&VarDecl> = universal.iter().filter(|d| !d.ty.is_continuous()).collect();
    let discrete_e: Vec<&VarDecl> = consequent.hidden.iter().filter(|d| !d.ty.is_continuous()).collect();
    let continuous_e: Vec<String> =
        consequent.hidden.iter().filter(|d| d.ty.is_continuous()).map(|d| d.name.clone()).collect();

    let outer: u128 = discrete_u.iter().map(|d| cardinality(d)).product::<Result<u128, _>>()?;
    let inner: u128 = discrete_e.iter().map(|d| cardinality(d)).product::<Result<u128, _>>()?;
    let total = outer.saturating_mul(inner.max(1));
    if total > cfg.max_assignments {
        return Err(SchemaError::TooManyAssignments(total));
    }

    let mut counterexample: Option<Assignment> = None;
    for_each_assignment(&discrete_u, u128::MAX, &mut |alpha: &Assignment| {
        let env = |name: &str| alpha.get(name).cloned();
        let mut ante = Vec::new();
        for s in &antecedents {
            for atom in &s.predicate {
                match atom.reduce(&env)? {
                    AtomForm::Truth(true) => {}
                    AtomForm::Truth(false) => return Ok(true),
                    AtomForm::Linear(c) => ante.push(c),
                }
            }
        }
        let ante = Polyhedron::new(ante);
        if !ante.is_feasible() {
            return Ok(true);
        }
        let mut cases: Vec<Polyhedron> = Vec::new();
        let mut covered = false;
        for_each_assignment(&discrete_e, u128::MAX, &mut |beta: &Assignment| {
            let env = |name: &str| alpha.get(name).cloned().or_else(|| beta.get(name).cloned());
            let mut cons: Vec<LinearConstraint> = Vec::new();
            for atom in &consequent.predicate {
                match atom.reduce(&env)? {
                    AtomForm::Truth(true) => {}
                    AtomForm::Truth(false) => return Ok(true),
                    AtomForm::Linear(c) => cons.push(c),
                }
            }
            let q = Polyhedron::new(cons).eliminate_all(&continuous_e);
            if q.constraints.is_empty() {
                covered = true;
                return Ok(false);
            }
            if !q.is_trivially_false() {
                cases.push(q);
            }
            Ok(true)
        })?;
        if covered {
            return Ok(true);
        }
        if let Some(point) = uncovered_point(&ante, &cases) {
            let mut cex = Assignment::new();
            for d in free.values() {
                let v = if d.ty.is_continuous() {
                    super::Value::Num(point.get(&d.name).cloned().unwrap_or_default())
                } else {
                    alpha[&d.name].clone()
                };
                cex.insert(d.name.clone(), v);
            }
            counterexample = Some(cex);
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(TvOutcome { valid: counterexample.is_none(), counterexample })
}

fn cardinality(d: &VarDecl) -> Result<u128, SchemaError> {
    d.ty.cardinality()
        .ok_or_else(|| SchemaError::UndecidableFragment(format!("variable `{}` has the unbounded type {}", d.name, d.ty)))
}
