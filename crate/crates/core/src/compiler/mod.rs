//! Expression language and compilation to flattened module circuits.

mod circuit;
mod expr;
mod init;
mod parse;
mod signs;

pub use circuit::{
    compile, compile_str, CircuitInstance, CompileOptions, InputBinding, InputSignal, LogSystem, RosterEntry, Setup,
};
pub use expr::Expr;
pub use init::{evaluate_init_rules, InitOptions, INIT_TOLERANCE};
pub use parse::{parse, SyntaxError};
pub use signs::{infer_signs, Decl, Decls, Interval, SignTag, Signed};

use thiserror::Error;

use crate::library::ModuleError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bad input declaration {0}")]
    Decl(String),
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error("initial values depend on each other cyclically at `{0}`")]
    CyclicInit(String),
    #[error("no initial value for `{0}`")]
    MissingInit(String),
    #[error("no value given for input `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not an input of this circuit")]
    UnknownInput(String),
}
