//! Hereditarily finite list values, document theories, and the chase
//! engine over them, together with the static analysis that predicts
//! whether a theory's transactions terminate.

pub mod analysis;
pub mod ast;
pub mod chase;
pub mod theory;
pub mod docmodel;
pub mod dsl;
pub mod eval;
pub mod numerics;
pub mod reductions;
pub mod sampling;
pub mod value;

pub use ast::{BoundKind, Cardinality, FormulaAst, TermAst};
pub use eval::{Env, EvalContext, EvalError};
pub use numerics::{Comparison, NumericConfig, RealParseError};
pub use value::{HfList, Value};
