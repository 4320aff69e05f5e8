//! Schema refinement: `M ≥ N` on hidden schemas (RCL) and `S ⊒ T` (RCZ).

use std::collections::BTreeSet;

use serde::Serialize;

use super::tv::{tv, Implication, TvConfig};
use super::{Assignment, SchemaError, SchemaMode, ZSchema};

/// Which case of the input/output split decided the relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RclCase {
    OutputMismatch,
    NoVariables,
    OutputOnly,
    InputOnly,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RclOutcome {
    pub holds: bool,
    pub case: RclCase,
    /// A failing assignment over the visible variables, when one exists.
    pub counterexample: Option<Assignment>,
}

impl RclOutcome {
    fn decided(holds: bool, case: RclCase) -> Self {
        RclOutcome { holds, case, counterexample: None }
    }
}

/// `M ≥ N`: `N` accepts at least `M`'s inputs and produces no outputs that
/// `M` would not.
pub fn rcl(m: &ZSchema, n: &ZSchema, mode: SchemaMode) -> Result<bool, SchemaError> {
    Ok(rcl_detailed(m, n, mode, &TvConfig::default())?.holds)
}

pub fn rcl_detailed(m: &ZSchema, n: &ZSchema, mode: SchemaMode, cfg: &TvConfig) -> Result<RclOutcome, SchemaError> {
    let (mi, mo) = (m.inputs(), m.outputs());
    if mo != n.outputs() {
        return Ok(RclOutcome::decided(false, RclCase::OutputMismatch));
    }
    let check = |ante: Vec<ZSchema>, cons: ZSchema| -> Result<Option<Assignment>, SchemaError> {
        let out = tv(&Implication { antecedents: ante, consequent: cons }, cfg)?;
        Ok(out.counterexample)
    };
    let finish = |cex: Option<Assignment>, case| RclOutcome { holds: cex.is_none(), case, counterexample: cex };
    match (mi.is_empty(), mo.is_empty()) {
        (true, true) => Ok(RclOutcome::decided(true, RclCase::NoVariables)),
        (true, false) => Ok(finish(check(vec![n.clone()], m.clone())?, RclCase::OutputOnly)),
        (false, true) => Ok(finish(check(vec![m.clone()], n.clone())?, RclCase::InputOnly)),
        (false, false) => {
            let cex = match mode {
                SchemaMode::Strict => match check(vec![n.clone()], m.clone())? {
                    Some(c) => Some(c),
                    None => check(vec![m.clone()], n.clone())?,
                },
                SchemaMode::Guarded => {
                    // dom(M) ⊆ dom(N): M(i, o) ⇒ ∃o'. N(i, o')
                    let n_dom = n.existentially_quantify(&mo)?;
                    match check(vec![m.clone()], n_dom)? {
                        Some(c) => Some(c),
                        None => {
                            // i ∈ dom(M) ∧ N(i, o) ⇒ M(i, o)
                            let m_dom = m.existentially_quantify(&mo)?;
                            check(vec![m_dom, n.clone()], m.clone())?
                        }
                    }
                }
            };
            Ok(finish(cex, RclCase::Mixed))
        }
    }
}

/// `S ⊒ T`.
pub fn rcz(s: &ZSchema, t: &ZSchema, mode: SchemaMode) -> Result<bool, SchemaError> {
    Ok(rcz_detailed(s, t, mode, &TvConfig::default())?.holds)
}

pub fn rcz_detailed(s: &ZSchema, t: &ZSchema, mode: SchemaMode, cfg: &TvConfig) -> Result<RclOutcome, SchemaError> {
    let (si, so) = (s.inputs(), s.outputs());
    if !si.is_subset(&t.inputs()) || !so.is_subset(&t.outputs()) {
        return Ok(RclOutcome::decided(false, RclCase::OutputMismatch));
    }
    let interface: BTreeSet<String> = si.union(&so).cloned().collect();
    let hide_s: BTreeSet<String> = s.vars().difference(&interface).cloned().collect();
    let hide_t: BTreeSet<String> = t.vars().difference(&interface).cloned().collect();
    rcl_detailed(&s.hide(&hide_s)?, &t.hide(&hide_t)?, mode, cfg)
}
