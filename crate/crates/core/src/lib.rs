//! Inquisitive modal logic over finite (pseudo-)models.
//!
//! The crate evaluates support semantics, compiles formulas into two-sorted
//! first-order logic over relational encodings, and decides the finite
//! levels of inquisitive bisimulation. Everything is exact and finite; the
//! [`fuzz`] module ties the pieces together as differential oracles.

pub mod bisim;
pub mod distinguish;
pub mod fo;
pub mod fuzz;
pub mod limits;
pub mod model;
pub mod mutation;
pub mod parser;
pub mod relational;
pub mod semantics;
pub mod state;
pub mod syntax;

pub use limits::Limits;
pub use model::{inquisitive_closure, InqModel, ModelKind, PointedModel, Verdict};
pub use mutation::{Faults, Mutant};
pub use parser::{parse, ParseError};
pub use relational::{decode, encode, state_closure, validate_relational, Policy, RelStruct, RelVerdict};
pub use semantics::{supports, supports_graded, Strategy};
pub use state::InfoState;
pub use syntax::{flatness_grade, modal_depth, print, Formula, PropId, Signature};
