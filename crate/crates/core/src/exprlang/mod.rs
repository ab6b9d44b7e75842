//! Analytic coordinate expressions: parsing, printing and jet evaluation.

mod ast;
mod eval;
pub mod jet;
mod parser;

pub use ast::{BinOp, Expr, Func};
pub use eval::{evaluate_jet, EvalError, JetEnv};
pub use jet::{Jet, JetLayout, MAX_ORDER, MAX_VARS};
pub use parser::{parse, SyntaxError};
