//! Frontend for the imperative probabilistic language: parsing into an AST
//! and compilation to a probabilistic transition system.

pub mod ast;
mod compile;
mod parse;

pub use ast::{AstInit, BranchCond, Cond, ProgramAst, Stmt, StmtKind};
pub use compile::{compile_to_pts, split_condition};
pub use parse::parse_program;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum PplError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("variable '{var}' has no init entry")]
    Uninitialized { var: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] pts_core::PtsError),
}

/// Parse and compile in one step.
pub fn load_program(source: &str) -> Result<(ProgramAst, pts_core::Pts), PplError> {
    let ast = parse_program(source)?;
    let pts = compile_to_pts(&ast)?;
    Ok((ast, pts))
}
