//! Abstract syntax of the imperative probabilistic language.

use pts_core::{BoolExpr, Constraint, Distribution, Poly, Predicate, Rat};

/// Boolean condition over program variables: comparisons combined with
/// and/or/not. Atoms are normalized against zero.
pub type Cond = BoolExpr<Constraint>;

/// Condition position of `if`/`while`: either a boolean condition or a
/// coin (`prob(p)`, `flip(p)`, `bernoulli(p)` are accepted spellings).
#[derive(Clone, PartialEq, Debug)]
pub enum BranchCond {
    Bool(Cond),
    Coin(Rat),
}

#[derive(Clone, PartialEq, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, PartialEq, Debug)]
pub enum StmtKind {
    Skip,
    /// `x := e` with a polynomial right-hand side over program variables.
    Assign { var: usize, expr: Poly },
    /// `x ~ D`: draws a fresh sample and assigns it.
    Sample { var: usize, dist: Distribution },
    If {
        cond: BranchCond,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    While {
        cond: BranchCond,
        body: Box<Stmt>,
        /// Position among the program's loops in source order; loop
        /// invariant annotations refer to this index (1-based).
        loop_index: usize,
    },
    Seq(Vec<Stmt>),
}

/// Initial value of one program variable in the `init:` block.
#[derive(Clone, PartialEq, Debug)]
pub enum AstInit {
    Const(Rat),
    Dist(Distribution),
}

#[derive(Clone, PartialEq, Debug)]
pub struct ProgramAst {
    pub var_names: Vec<String>,
    /// Integer-valuedness marker per variable (`x: int` in the vars
    /// section), consumed by the premise closure of strict guards.
    pub var_ints: Vec<bool>,
    /// One entry per variable, aligned with `var_names`.
    pub init: Vec<AstInit>,
    /// Optional explicit support polytope for the initial distribution.
    pub support_override: Option<Predicate>,
    /// Invariant attached to every location.
    pub global_invariant: Predicate,
    /// Invariants attached to loop heads, keyed by 1-based loop index.
    pub loop_invariants: Vec<(usize, Predicate)>,
    pub body: Stmt,
    pub n_loops: usize,
}

impl Stmt {
    pub fn seq(stmts: Vec<Stmt>) -> Stmt {
        if stmts.len() == 1 {
            return stmts.into_iter().next().unwrap();
        }
        let (line, col) = stmts.first().map(|s| (s.line, s.col)).unwrap_or((0, 0));
        Stmt {
            kind: StmtKind::Seq(stmts),
            line,
            col,
        }
    }
}
