//! Verifier for multirate hybrid interface automata whose states and actions
//! carry Z schemas.
//!
//! The crate is layered bottom-up:
//!
//! * [`rational`] – exact rationals and constraint bounds,
//! * [`linear`] – Fourier–Motzkin reasoning over rational linear constraints,
//! * [`dcm`] – multirate zones as difference constraint matrices,
//! * [`zschema`] – finite-domain Z schemas, hiding, validity and schema refinement,
//! * [`model`] – the automaton data model and its structural validation,
//! * [`zonegraph`] – concrete semantics and the finite zone automaton,
//! * [`refinement`] – the simulation-based refinement check with witnesses,
//! * [`dsl`] – the `.mzia` model description language.

pub mod dcm;
pub mod dsl;
pub mod linear;
pub mod model;
pub mod rational;
pub mod refinement;
pub mod zonegraph;
pub mod zschema;

pub use dcm::{Dcm, DcmError, ZoneConstraint};
pub use model::{Mzia, ValidationReport};
pub use rational::{Bound, Rational};
pub use refinement::{rc, RefinementOptions, Verdict};
pub use zonegraph::{build_zone_automaton, ZoneAutomaton};
pub use zschema::{SchemaMode, ZSchema};
