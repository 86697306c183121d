//! Recursive-descent parser for the probabilistic language.
//!
//! A program is a `vars:` section, an `init:` section, optional `support:`
//! and `invariant:`/`invariant(<loop>):` sections, then the statement body.
//! `#` starts a line comment. `flip(p)`, `prob(p)` and `bernoulli(p)` are
//! interchangeable coin spellings; loops close with `od` or `done`; `fi`
//! may be omitted directly before another block terminator.

use num_traits::{One, Signed};
use pts_core::text::{parse_distribution, parse_poly, Cursor, Lexer, Tok};
use pts_core::{rat_int, BoolExpr, Constraint, Distribution, Poly, Predicate, Rat};

use crate::ast::{AstInit, BranchCond, Cond, ProgramAst, Stmt, StmtKind};
use crate::PplError;

const STMT_KEYWORDS: &[&str] = &[
    "skip", "if", "then", "else", "fi", "while", "do", "od", "done",
];

pub fn parse_program(source: &str) -> Result<ProgramAst, PplError> {
    let toks = Lexer::new(source).tokenize().map_err(cvt)?;
    let mut cur = Cursor::new(toks);
    let mut p = Parser {
        cur: &mut cur,
        var_names: Vec::new(),
        loop_count: 0,
    };
    p.program()
}

struct Parser<'a> {
    cur: &'a mut Cursor,
    var_names: Vec<String>,
    loop_count: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> PplError {
        let (line, col) = self.cur.here();
        PplError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.cur.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.cur.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), PplError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{kw}', found {:?}", self.cur.peek())))
        }
    }

    fn program(&mut self) -> Result<ProgramAst, PplError> {
        // vars: a, b, c
        self.expect_kw("vars")?;
        self.cur.expect(&Tok::Colon, "':'").map_err(cvt)?;
        let mut var_ints = Vec::new();
        loop {
            let name = self.cur.expect_ident("variable name").map_err(cvt)?;
            if self.var_names.contains(&name) {
                return Err(self.err(format!("duplicate variable '{name}'")));
            }
            if STMT_KEYWORDS.contains(&name.as_str()) {
                return Err(self.err(format!("'{name}' is a reserved word")));
            }
            self.var_names.push(name);
            if self.cur.eat(&Tok::Colon) {
                let kind = self.cur.expect_ident("variable kind").map_err(cvt)?;
                match kind.as_str() {
                    "int" => var_ints.push(true),
                    "real" => var_ints.push(false),
                    other => {
                        return Err(self.err(format!("unknown variable kind '{other}'")))
                    }
                }
            } else {
                var_ints.push(false);
            }
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }

        // init: x := 0, y ~ bernoulli(1/2)
        self.expect_kw("init")?;
        self.cur.expect(&Tok::Colon, "':'").map_err(cvt)?;
        let mut init: Vec<Option<AstInit>> = vec![None; self.var_names.len()];
        loop {
            let name = self.cur.expect_ident("variable name").map_err(cvt)?;
            let idx = self
                .var_index(&name)
                .ok_or_else(|| self.err(format!("undeclared variable '{name}' in init")))?;
            if init[idx].is_some() {
                return Err(self.err(format!("variable '{name}' initialized twice")));
            }
            if self.cur.eat(&Tok::Assign) {
                let e = parse_poly(self.cur, &self.var_names).map_err(cvt)?;
                if e.degree() != 0 {
                    return Err(self.err("init constants must not reference variables"));
                }
                init[idx] = Some(AstInit::Const(e.constant_term()));
            } else if self.cur.eat(&Tok::Tilde) {
                init[idx] = Some(AstInit::Dist(parse_distribution(self.cur).map_err(cvt)?));
            } else {
                return Err(self.err("expected ':=' or '~' in init entry"));
            }
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }
        let init: Vec<AstInit> = init
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| PplError::Uninitialized {
                    var: self.var_names[i].clone(),
                })
            })
            .collect::<Result<_, _>>()?;

        // optional support / invariant sections, any order
        let mut support_override = None;
        let mut global_invariant = Vec::new();
        let mut loop_invariants = Vec::new();
        loop {
            if self.peek_kw("support") {
                self.cur.bump();
                self.cur.expect(&Tok::Colon, "':'").map_err(cvt)?;
                support_override = Some(self.conjunction()?);
            } else if self.peek_kw("invariant") {
                self.cur.bump();
                if self.cur.eat(&Tok::LParen) {
                    let n = match self.cur.bump() {
                        Some(Tok::Num(n)) if n.is_integer() && n.is_positive() => {
                            use num_traits::ToPrimitive;
                            n.to_integer().to_usize().unwrap()
                        }
                        _ => return Err(self.err("expected loop index in invariant(...)")),
                    };
                    self.cur.expect(&Tok::RParen, "')'").map_err(cvt)?;
                    self.cur.expect(&Tok::Colon, "':'").map_err(cvt)?;
                    loop_invariants.push((n, self.conjunction()?));
                } else {
                    self.cur.expect(&Tok::Colon, "':'").map_err(cvt)?;
                    let inv = self.conjunction()?;
                    global_invariant.extend(inv);
                }
            } else {
                break;
            }
        }

        let body = self.stmt_seq(&[])?;
        if !self.cur.at_end() {
            return Err(self.err(format!("unexpected trailing input {:?}", self.cur.peek())));
        }
        let n_loops = self.loop_count;
        for (idx, _) in &loop_invariants {
            if *idx == 0 || *idx > n_loops {
                return Err(PplError::Validation(format!(
                    "invariant({idx}) does not match any loop (program has {n_loops})"
                )));
            }
        }
        Ok(ProgramAst {
            var_names: std::mem::take(&mut self.var_names),
            var_ints,
            init,
            support_override,
            global_invariant,
            loop_invariants,
            body,
            n_loops,
        })
    }

    fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    /// Conjunction of comparisons: `cmp (and cmp)*`.
    fn conjunction(&mut self) -> Result<Predicate, PplError> {
        let mut atoms = vec![self.comparison()?];
        while self.eat_kw("and") || self.cur.eat(&Tok::Amp) {
            atoms.push(self.comparison()?);
        }
        Ok(atoms)
    }

    fn comparison(&mut self) -> Result<Constraint, PplError> {
        let lhs = parse_poly(self.cur, &self.var_names).map_err(cvt)?;
        let op = match self.cur.bump() {
            Some(Tok::Cmp(op)) => op,
            other => return Err(self.err(format!("expected comparison, found {other:?}"))),
        };
        let rhs = parse_poly(self.cur, &self.var_names).map_err(cvt)?;
        pts_core::text::normalize_comparison(lhs, op, rhs).map_err(|m| self.err(m))
    }

    fn stmt_seq(&mut self, terminators: &[&str]) -> Result<Stmt, PplError> {
        let mut stmts = Vec::new();
        loop {
            if self.cur.at_end() || self.at_terminator(terminators) {
                break;
            }
            stmts.push(self.stmt(terminators)?);
            if !self.cur.eat(&Tok::Semi) {
                break;
            }
        }
        if stmts.is_empty() {
            return Err(self.err("expected a statement"));
        }
        Ok(Stmt::seq(stmts))
    }

    fn at_terminator(&self, terminators: &[&str]) -> bool {
        match self.cur.peek() {
            Some(Tok::Ident(s)) => terminators.contains(&s.as_str()),
            _ => false,
        }
    }

    fn stmt(&mut self, terminators: &[&str]) -> Result<Stmt, PplError> {
        let (line, col) = self.cur.here();
        let kind = if self.eat_kw("skip") {
            StmtKind::Skip
        } else if self.eat_kw("if") {
            let cond = self.branch_cond()?;
            self.expect_kw("then")?;
            let mut inner_terms: Vec<&str> = vec!["else", "fi"];
            inner_terms.extend_from_slice(terminators);
            let then_branch = Box::new(self.stmt_seq(&inner_terms)?);
            let else_branch = if self.eat_kw("else") {
                let mut else_terms: Vec<&str> = vec!["fi"];
                else_terms.extend_from_slice(terminators);
                Some(Box::new(self.stmt_seq(&else_terms)?))
            } else {
                None
            };
            // fi may be elided just before another closing keyword
            self.eat_kw("fi");
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            }
        } else if self.eat_kw("while") {
            let cond = self.branch_cond()?;
            self.expect_kw("do")?;
            self.loop_count += 1;
            let loop_index = self.loop_count;
            let body = Box::new(self.stmt_seq(&["od", "done"])?);
            if !(self.eat_kw("od") || self.eat_kw("done")) {
                return Err(self.err("expected 'od' or 'done' to close the loop"));
            }
            StmtKind::While {
                cond,
                body,
                loop_index,
            }
        } else {
            // assignment or sampling assignment
            let name = match self.cur.bump() {
                Some(Tok::Ident(s)) => s,
                other => return Err(self.err(format!("expected statement, found {other:?}"))),
            };
            let var = self
                .var_index(&name)
                .ok_or_else(|| self.err(format!("undeclared variable '{name}'")))?;
            if self.cur.eat(&Tok::Assign) {
                let expr = parse_poly(self.cur, &self.var_names).map_err(cvt)?;
                StmtKind::Assign { var, expr }
            } else if self.cur.eat(&Tok::Tilde) {
                let dist = parse_distribution(self.cur).map_err(cvt)?;
                StmtKind::Sample { var, dist }
            } else {
                return Err(self.err("expected ':=' or '~' after variable"));
            }
        };
        Ok(Stmt { kind, line, col })
    }

    fn branch_cond(&mut self) -> Result<BranchCond, PplError> {
        if let Some(Tok::Ident(name)) = self.cur.peek() {
            let lowered = name.to_lowercase();
            if matches!(lowered.as_str(), "prob" | "flip" | "bernoulli")
                && self.cur.peek2() == Some(&Tok::LParen)
            {
                let dist = parse_distribution(self.cur).map_err(cvt)?;
                return match dist {
                    Distribution::Bernoulli(p) => {
                        if p.is_negative() || p > Rat::one() {
                            Err(self.err("branch probability outside [0,1]"))
                        } else {
                            Ok(BranchCond::Coin(p))
                        }
                    }
                    _ => Err(self.err("only a coin may appear in branch position")),
                };
            }
        }
        Ok(BranchCond::Bool(self.bool_or()?))
    }

    fn bool_or(&mut self) -> Result<Cond, PplError> {
        let mut parts = vec![self.bool_and()?];
        while self.eat_kw("or") || self.cur.eat(&Tok::Pipe) {
            parts.push(self.bool_and()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            BoolExpr::Or(parts)
        })
    }

    fn bool_and(&mut self) -> Result<Cond, PplError> {
        let mut parts = vec![self.bool_atom()?];
        while self.eat_kw("and") || self.cur.eat(&Tok::Amp) {
            parts.push(self.bool_atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            BoolExpr::And(parts)
        })
    }

    fn bool_atom(&mut self) -> Result<Cond, PplError> {
        if let Some(Tok::Ident(s)) = self.cur.peek() {
            if STMT_KEYWORDS.contains(&s.as_str()) {
                return Err(self.err(format!("expected a condition before '{s}'")));
            }
        }
        if self.eat_kw("true") {
            return Ok(BoolExpr::True);
        }
        if self.eat_kw("false") {
            return Ok(BoolExpr::False);
        }
        if self.eat_kw("not") || self.cur.eat(&Tok::Bang) {
            return Ok(BoolExpr::not(self.bool_atom()?));
        }
        // try a comparison first; on failure reparse as a parenthesized
        // boolean formula
        let mark = self.cur.mark();
        match self.try_comparison() {
            Ok(c) => Ok(c),
            Err(cmp_err) => {
                self.cur.rewind(mark);
                if self.cur.eat(&Tok::LParen) {
                    let inner = self.bool_or()?;
                    self.cur.expect(&Tok::RParen, "')'").map_err(cvt)?;
                    Ok(inner)
                } else {
                    Err(cmp_err)
                }
            }
        }
    }

    /// Comparison that may expand: `a != b` becomes a disjunction of the
    /// two strict sides.
    fn try_comparison(&mut self) -> Result<Cond, PplError> {
        let lhs = parse_poly(self.cur, &self.var_names).map_err(cvt)?;
        let op = match self.cur.bump() {
            Some(Tok::Cmp(op)) => op,
            other => return Err(self.err(format!("expected comparison, found {other:?}"))),
        };
        let rhs = parse_poly(self.cur, &self.var_names).map_err(cvt)?;
        if op == pts_core::text::CmpOp::Ne {
            let d = lhs.sub(&rhs);
            return Ok(BoolExpr::Or(vec![
                BoolExpr::Atom(Constraint::gt(d.clone())),
                BoolExpr::Atom(Constraint::gt(d.scale(&-rat_int(1)))),
            ]));
        }
        let c = pts_core::text::normalize_comparison(lhs, op, rhs).map_err(|m| self.err(m))?;
        Ok(BoolExpr::Atom(c))
    }
}

fn cvt(e: pts_core::PtsError) -> PplError {
    match e {
        pts_core::PtsError::Parse { line, col, msg } => PplError::Parse { line, col, msg },
        other => PplError::Model(other),
    }
}

#[allow(dead_code)]
fn poly_display(p: &Poly, names: &[String]) -> String {
    p.display(names)
}
