//! Symbolic bracket engine over formal loops.

pub mod bracket;
pub mod canon;
pub mod closure;
pub mod expr;
pub mod golden;
pub mod parse;
pub mod signature;

pub use bracket::{bracket, bracket_raw, equivalent, BracketConfig};
pub use canon::{canonical_form, simplify};
pub use closure::{closure_check, ClosureOptions, ClosureReport, TermCheck};
pub use expr::{CoeffAtom, Expression, Idx, Loop, Term, TraceAtom};
pub use golden::{reproduce_examples, ExampleReport};
pub use parse::parse_expr;
pub use signature::{normalize, recognize, spec_expression, spec_term, Normalized, Signature};
