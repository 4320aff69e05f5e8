//! Brute-force decision of `A ≥ B` straight from the quantifier structure,
//! by enumerating discrete values and sampling continuous ones.
//!
//! Continuous candidates are a regular grid over a test box, plus the points
//! where some atom becomes tight once the other variables are fixed (so
//! equalities such as `y = π·x` are hit exactly). No linear elimination is
//! involved, which keeps this an independent check of the symbolic path.

use std::cell::Cell;
use std::collections::BTreeSet;

use crate::rational::Rational;

use super::{Assignment, Atom, SchemaError, SchemaMode, Value, VarDecl, ZSchema};

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub box_lo: Rational,
    pub box_hi: Rational,
    pub step: Rational,
    /// Maximum number of ground atom evaluations.
    pub max_evaluations: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            box_lo: Rational::from_int(-8),
            box_hi: Rational::from_int(8),
            step: Rational::new(1, 4),
            max_evaluations: 200_000_000,
        }
    }
}

struct Sampler<'a> {
    cfg: &'a OracleConfig,
    atoms: Vec<Atom>,
    evaluations: Cell<u64>,
}

impl Sampler<'_> {
    fn grid(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        let mut x = self.cfg.box_lo.clone();
        while x <= self.cfg.box_hi {
            out.push(x.clone());
            x += &self.cfg.step;
        }
        out
    }

    /// Values of `var` at which some atom is tight, given `fixed`.
    fn tight_points(&self, var: &str, fixed: &Assignment) -> Vec<Rational> {
        let mut out = Vec::new();
        let quarter = &self.cfg.step / Rational::from_int(4);
        for atom in &self.atoms {
            let Atom::Cmp(lhs, _, rhs) = atom else { continue };
            if !atom.vars().contains(var) {
                continue;
            }
            let at = |x: i64| -> Option<Rational> {
                let env = |n: &str| if n == var { Some(Value::Num(Rational::from_int(x))) } else { fixed.get(n).cloned() };
                match (lhs.eval(&env).ok()?, rhs.eval(&env).ok()?) {
                    (Value::Num(a), Value::Num(b)) => Some(a - b),
                    _ => None,
                }
            };
            let (Some(f0), Some(f1)) = (at(0), at(1)) else { continue };
            let slope = &f1 - &f0;
            if slope.is_zero() {
                continue;
            }
            let root = -(f0 / slope);
            out.push(&root - &quarter);
            out.push(&root + &quarter);
            out.push(root);
        }
        out
    }

    fn candidates(&self, decl: &VarDecl, fixed: &Assignment) -> Result<Vec<Value>, SchemaError> {
        if let Some(vals) = decl.ty.values() {
            return Ok(vals);
        }
        if !decl.ty.is_continuous() {
            return Err(SchemaError::OracleCapacity(format!("`{}` has an unbounded type", decl.name)));
        }
        let mut set: BTreeSet<Rational> = self.grid().into_iter().collect();
        set.extend(self.tight_points(&decl.name, fixed));
        Ok(set.into_iter().map(Value::Num).collect())
    }

    fn tick(&self, n: usize) -> Result<(), SchemaError> {
        let e = self.evaluations.get() + n as u64;
        self.evaluations.set(e);
        if e > self.cfg.max_evaluations {
            return Err(SchemaError::OracleCapacity(format!("more than {} evaluations", self.cfg.max_evaluations)));
        }
        Ok(())
    }

    /// Calls `visit` on extensions of `base` over `decls` until it returns
    /// `Ok(true)`; reports whether that happened.
    fn any_extension(
        &self,
        decls: &[VarDecl],
        base: &Assignment,
        visit: &mut dyn FnMut(&Assignment) -> Result<bool, SchemaError>,
    ) -> Result<bool, SchemaError> {
        let Some((first, rest)) = decls.split_first() else {
            return visit(base);
        };
        for v in self.candidates(first, base)? {
            let mut next = base.clone();
            next.insert(first.name.clone(), v);
            if self.any_extension(rest, &next, visit)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn every_extension(
        &self,
        decls: &[VarDecl],
        base: &Assignment,
        visit: &mut dyn FnMut(&Assignment) -> Result<bool, SchemaError>,
    ) -> Result<bool, SchemaError> {
        Ok(!self.any_extension(decls, base, &mut |a| Ok(!visit(a)?))?)
    }

    /// Ground satisfaction; hidden variables are searched for a witness.
    fn sat(&self, s: &ZSchema, a: &Assignment) -> Result<bool, SchemaError> {
        self.any_extension(&s.hidden, a, &mut |full| {
            self.tick(s.predicate.len())?;
            let env = |n: &str| full.get(n).cloned();
            for atom in &s.predicate {
                if !atom.holds(&env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })
    }
}

fn decls_of(s: &ZSchema, names: &BTreeSet<String>) -> Vec<VarDecl> {
    names.iter().filter_map(|n| s.decl(n).cloned()).collect()
}

/// Decides `A ≥ B` by enumeration over the test box. Schemas with unequal
/// interfaces are unrelated.
pub fn geq_bruteforce(a: &ZSchema, b: &ZSchema, mode: SchemaMode, cfg: &OracleConfig) -> Result<bool, SchemaError> {
    let (inputs, outputs) = (a.inputs(), a.outputs());
    if inputs != b.inputs() || outputs != b.outputs() {
        return Ok(false);
    }
    let atoms: Vec<Atom> = a.predicate.iter().chain(&b.predicate).cloned().collect();
    let sampler = Sampler { cfg, atoms, evaluations: Cell::new(0) };
    let ins = decls_of(a, &inputs);
    let outs = decls_of(a, &outputs);
    let empty = Assignment::new();
    match (ins.is_empty(), outs.is_empty()) {
        (true, true) => Ok(true),
        // ∀ρ. ρ ⊨ A ⇒ ρ ⊨ B
        (false, true) => sampler.every_extension(&ins, &empty, &mut |r| Ok(!sampler.sat(a, r)? || sampler.sat(b, r)?)),
        // ∀σ. σ ⊨ B ⇒ σ ⊨ A
        (true, false) => sampler.every_extension(&outs, &empty, &mut |s| Ok(!sampler.sat(b, s)? || sampler.sat(a, s)?)),
        (false, false) => match mode {
            // Both universal prefixes commute, so one nesting order covers them.
            SchemaMode::Strict => sampler.every_extension(&ins, &empty, &mut |r| {
                sampler.every_extension(&outs, r, &mut |rs| {
                    let (in_a, in_b) = (sampler.sat(a, rs)?, sampler.sat(b, rs)?);
                    Ok(in_a == in_b)
                })
            }),
            SchemaMode::Guarded => sampler.every_extension(&ins, &empty, &mut |r| {
                let in_dom_a = sampler.any_extension(&outs, r, &mut |rs| sampler.sat(a, rs))?;
                if !in_dom_a {
                    return Ok(true);
                }
                let in_dom_b = sampler.any_extension(&outs, r, &mut |rs| sampler.sat(b, rs))?;
                if !in_dom_b {
                    return Ok(false);
                }
                sampler.every_extension(&outs, r, &mut |rs| Ok(!sampler.sat(b, rs)? || sampler.sat(a, rs)?))
            }),
        },
    }
}
