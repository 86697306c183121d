//! Text syntax shared by the model file formats: polynomial expressions,
//! comparisons, distributions, and a line-oriented PTS debug format that
//! round-trips through the printer.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dist::Distribution;
use crate::expr::{format_rat, Constraint, Poly, Predicate, Rat};
use crate::pts::{Fork, InitSpec, InitValue, Pts, Transition};
use crate::PtsError;

#[derive(Clone, PartialEq, Debug)]
pub enum Tok {
    Ident(String),
    Num(Rat),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Assign,   // :=
    Tilde,    // ~
    Arrow,    // ->
    Question, // ?
    Amp,      // &
    Pipe,     // |
    Bang,     // !
    Cmp(CmpOp),
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

/// Position-tracking tokenizer for the model text formats.
pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    pub line: usize,
    pub col: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws_and_comments(&mut self) {
        loop {
            match self.peek() {
                Some(b'#') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                _ => return,
            }
        }
    }

    pub fn next_tok(&mut self) -> Result<Option<(Tok, usize, usize)>, PtsError> {
        self.skip_ws_and_comments();
        let (line, col) = (self.line, self.col);
        let c = match self.peek() {
            Some(c) => c,
            None => return Ok(None),
        };
        let tok = match c {
            b'+' => {
                self.bump();
                Tok::Plus
            }
            b'-' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            b'*' => {
                self.bump();
                Tok::Star
            }
            b'/' => {
                self.bump();
                Tok::Slash
            }
            b'^' => {
                self.bump();
                Tok::Caret
            }
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b'{' => {
                self.bump();
                Tok::LBrace
            }
            b'}' => {
                self.bump();
                Tok::RBrace
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b';' => {
                self.bump();
                Tok::Semi
            }
            b'~' => {
                self.bump();
                Tok::Tilde
            }
            b'?' => {
                self.bump();
                Tok::Question
            }
            b'&' => {
                self.bump();
                Tok::Amp
            }
            b'|' => {
                self.bump();
                Tok::Pipe
            }
            b':' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Cmp(CmpOp::Le)
                } else {
                    Tok::Cmp(CmpOp::Lt)
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Cmp(CmpOp::Ge)
                } else {
                    Tok::Cmp(CmpOp::Gt)
                }
            }
            b'=' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                }
                Tok::Cmp(CmpOp::Eq)
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::Cmp(CmpOp::Ne)
                } else {
                    Tok::Bang
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if self.peek() == Some(b'.') {
                    s.push('.');
                    self.bump();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            s.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                Tok::Num(parse_decimal(&s).ok_or_else(|| PtsError::Parse {
                    line,
                    col,
                    msg: format!("bad numeric literal '{s}'"),
                })?)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                return Err(PtsError::Parse {
                    line,
                    col,
                    msg: format!("unexpected character '{}'", other as char),
                })
            }
        };
        Ok(Some((tok, line, col)))
    }

    pub fn tokenize(mut self) -> Result<Vec<(Tok, usize, usize)>, PtsError> {
        let mut out = Vec::new();
        while let Some(t) = self.next_tok()? {
            out.push(t);
        }
        Ok(out)
    }
}

/// Exact rational from a decimal literal like "0.25".
pub fn parse_decimal(s: &str) -> Option<Rat> {
    if let Some(dot) = s.find('.') {
        let int_part = &s[..dot];
        let frac_part = &s[dot + 1..];
        if frac_part.is_empty() {
            let n: num_bigint::BigInt = int_part.parse().ok()?;
            return Some(BigRational::from_integer(n));
        }
        let digits: String = format!("{int_part}{frac_part}");
        let numer: num_bigint::BigInt = digits.parse().ok()?;
        let denom = num_bigint::BigInt::from(10u32).pow(frac_part.len() as u32);
        Some(Rat::new(numer, denom))
    } else {
        let n: num_bigint::BigInt = s.parse().ok()?;
        Some(Rat::from_integer(n))
    }
}

/// Token cursor used by the recursive-descent parsers.
pub struct Cursor {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<(Tok, usize, usize)>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn from_str(src: &str) -> Result<Self, PtsError> {
        Ok(Cursor::new(Lexer::new(src).tokenize()?))
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    /// Save/restore points for backtracking parsers.
    pub fn mark(&self) -> usize {
        self.pos
    }

    pub fn rewind(&mut self, mark: usize) {
        self.pos = mark;
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _, _)| t)
    }

    pub fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|&(_, l, c)| (l, c + 1))
                    .unwrap_or((1, 1))
            })
    }

    pub fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok, what: &str) -> Result<(), PtsError> {
        let (line, col) = self.here();
        if self.eat(t) {
            Ok(())
        } else {
            Err(PtsError::Parse {
                line,
                col,
                msg: format!("expected {what}, found {:?}", self.peek()),
            })
        }
    }

    pub fn err(&self, msg: impl Into<String>) -> PtsError {
        let (line, col) = self.here();
        PtsError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<String, PtsError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected {what}, found {other:?}"))),
        }
    }
}

/// Parse a polynomial expression over the given variable names.
/// `extra_names` (sample variables) follow the program variables in the
/// output arity.
pub fn parse_poly(cur: &mut Cursor, names: &[String]) -> Result<Poly, PtsError> {
    let arity = names.len();
    parse_sum(cur, names, arity)
}

fn parse_sum(cur: &mut Cursor, names: &[String], arity: usize) -> Result<Poly, PtsError> {
    let mut acc = parse_product(cur, names, arity)?;
    loop {
        if cur.eat(&Tok::Plus) {
            acc = acc.add(&parse_product(cur, names, arity)?);
        } else if cur.eat(&Tok::Minus) {
            acc = acc.sub(&parse_product(cur, names, arity)?);
        } else {
            return Ok(acc);
        }
    }
}

fn parse_product(cur: &mut Cursor, names: &[String], arity: usize) -> Result<Poly, PtsError> {
    let mut acc = parse_atom(cur, names, arity)?;
    loop {
        if cur.eat(&Tok::Star) {
            acc = acc.mul(&parse_atom(cur, names, arity)?);
        } else if cur.eat(&Tok::Slash) {
            let denom = parse_atom(cur, names, arity)?;
            if denom.degree() != 0 {
                return Err(cur.err("division by a non-constant is not polynomial"));
            }
            let c = denom.constant_term();
            if c.is_zero() {
                return Err(cur.err("division by zero"));
            }
            acc = acc.scale(&(Rat::one() / c));
        } else {
            return Ok(acc);
        }
    }
}

fn parse_atom(cur: &mut Cursor, names: &[String], arity: usize) -> Result<Poly, PtsError> {
    let base = match cur.bump() {
        Some(Tok::Num(n)) => Poly::constant(arity, n),
        Some(Tok::Minus) => {
            let inner = parse_atom(cur, names, arity)?;
            inner.scale(&-Rat::one())
        }
        Some(Tok::LParen) => {
            let inner = parse_sum(cur, names, arity)?;
            cur.expect(&Tok::RParen, "')'")?;
            inner
        }
        Some(Tok::Ident(name)) => {
            let idx = names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| cur.err(format!("unknown variable '{name}'")))?;
            Poly::var(arity, idx)
        }
        other => return Err(cur.err(format!("expected expression, found {other:?}"))),
    };
    if cur.eat(&Tok::Caret) {
        match cur.bump() {
            Some(Tok::Num(n)) if n.is_integer() && !n.numer().sign().eq(&num_bigint::Sign::Minus) => {
                use num_traits::ToPrimitive;
                let e = n.to_integer().to_u32().ok_or_else(|| cur.err("exponent too large"))?;
                return Ok(base.pow(e));
            }
            _ => return Err(cur.err("expected nonnegative integer exponent")),
        }
    }
    Ok(base)
}

/// Parse `expr OP expr` into a normalized comparison against zero.
pub fn parse_comparison(cur: &mut Cursor, names: &[String]) -> Result<Constraint, PtsError> {
    let lhs = parse_poly(cur, names)?;
    let op = match cur.bump() {
        Some(Tok::Cmp(op)) => op,
        other => return Err(cur.err(format!("expected comparison operator, found {other:?}"))),
    };
    let rhs = parse_poly(cur, names)?;
    normalize_comparison(lhs, op, rhs).map_err(|msg| cur.err(msg))
}

/// Rewrite `lhs OP rhs` to a `poly (sense) 0` constraint. `!=` has no
/// single-constraint normal form and is rejected here; condition parsers
/// that support it expand the disjunction themselves.
pub fn normalize_comparison(lhs: Poly, op: CmpOp, rhs: Poly) -> Result<Constraint, String> {
    let diff = lhs.sub(&rhs);
    Ok(match op {
        CmpOp::Ge => Constraint::ge(diff),
        CmpOp::Gt => Constraint::gt(diff),
        CmpOp::Le => Constraint::ge(diff.scale(&-Rat::one())),
        CmpOp::Lt => Constraint::gt(diff.scale(&-Rat::one())),
        CmpOp::Eq => Constraint::eq(diff),
        CmpOp::Ne => return Err("'!=' is not a conjunctive comparison".into()),
    })
}

/// Parse a conjunction `cmp & cmp & ...` (also accepting the keyword `and`).
pub fn parse_predicate(cur: &mut Cursor, names: &[String]) -> Result<Predicate, PtsError> {
    if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "true") {
        cur.bump();
        return Ok(Vec::new());
    }
    let mut atoms = vec![parse_comparison(cur, names)?];
    loop {
        let more = cur.eat(&Tok::Amp)
            || matches!(cur.peek(), Some(Tok::Ident(s)) if s == "and") && cur.bump().is_some();
        if !more {
            return Ok(atoms);
        }
        atoms.push(parse_comparison(cur, names)?);
    }
}

/// Parse `name(args)` distribution syntax. `flip` and `prob` are accepted
/// as bernoulli spellings.
pub fn parse_distribution(cur: &mut Cursor) -> Result<Distribution, PtsError> {
    let name = cur.expect_ident("distribution name")?.to_lowercase();
    cur.expect(&Tok::LParen, "'('")?;
    let d = match name.as_str() {
        "bernoulli" | "flip" | "prob" => {
            let p = parse_const(cur)?;
            Distribution::Bernoulli(p)
        }
        "uniform" => {
            let a = parse_const(cur)?;
            cur.expect(&Tok::Comma, "','")?;
            let b = parse_const(cur)?;
            Distribution::Uniform(a, b)
        }
        "discrete" => {
            let mut items = Vec::new();
            loop {
                let v = parse_const(cur)?;
                cur.expect(&Tok::Colon, "':'")?;
                let p = parse_const(cur)?;
                items.push((v, p));
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            Distribution::Discrete(items)
        }
        other => return Err(cur.err(format!("unknown distribution '{other}'"))),
    };
    cur.expect(&Tok::RParen, "')'")?;
    d.validate()?;
    Ok(d)
}

/// Constant expression: number, fraction, or negation thereof.
pub fn parse_const(cur: &mut Cursor) -> Result<Rat, PtsError> {
    let p = parse_poly(cur, &[])?;
    if p.degree() != 0 {
        return Err(cur.err("expected a constant"));
    }
    Ok(p.constant_term())
}

// ---------------------------------------------------------------------------
// PTS text format
// ---------------------------------------------------------------------------

/// Print a PTS in the line-oriented debug format. `parse_pts` inverts this.
pub fn print_pts(pts: &Pts) -> String {
    let mut out = String::from("pts\n");
    let var_decls: Vec<String> = pts
        .var_names
        .iter()
        .zip(&pts.var_ints)
        .map(|(n, is_int)| {
            if *is_int {
                format!("{n}:int")
            } else {
                n.clone()
            }
        })
        .collect();
    out.push_str(&format!("vars {}\n", var_decls.join(" ")));
    let all_names = update_names(pts);
    for (name, d) in &pts.sample_vars {
        out.push_str(&format!("sample {} ~ {}\n", name, d.display()));
    }
    out.push_str(&format!("locs {}\n", pts.loc_names.join(" ")));
    out.push_str(&format!("init-loc {}\n", pts.loc_names[pts.l_init]));
    out.push_str(&format!("out-loc {}\n", pts.loc_names[pts.l_out]));
    for (i, inv) in pts.invariants.iter().enumerate() {
        if !inv.is_empty() {
            out.push_str(&format!(
                "invariant {} : {}\n",
                pts.loc_names[i],
                display_predicate(inv, &pts.var_names)
            ));
        }
    }
    for (i, v) in pts.init.values.iter().enumerate() {
        match v {
            InitValue::Const(c) => {
                out.push_str(&format!("init {} := {}\n", pts.var_names[i], format_rat(c)))
            }
            InitValue::Dist(d) => {
                out.push_str(&format!("init {} ~ {}\n", pts.var_names[i], d.display()))
            }
        }
    }
    if pts.init.support_overridden {
        out.push_str(&format!(
            "support : {}\n",
            display_predicate(&pts.init.support, &pts.var_names)
        ));
    }
    for t in &pts.transitions {
        let guard = if t.guard.is_empty() {
            "true".to_string()
        } else {
            display_predicate(&t.guard, &pts.var_names)
        };
        let forks: Vec<String> = t
            .forks
            .iter()
            .map(|f| {
                let updates: Vec<String> = f
                    .update
                    .iter()
                    .enumerate()
                    .filter(|(i, p)| **p != Poly::var(pts.update_arity(), *i))
                    .map(|(i, p)| format!("{} := {}", pts.var_names[i], p.display(&all_names)))
                    .collect();
                let upd = if updates.is_empty() {
                    "skip".to_string()
                } else {
                    updates.join(", ")
                };
                format!(
                    "{} -> {} : {}",
                    format_rat(&f.prob),
                    pts.loc_names[f.dest],
                    upd
                )
            })
            .collect();
        out.push_str(&format!(
            "trans {} : {} ? {}\n",
            pts.loc_names[t.source],
            guard,
            forks.join(" ; ")
        ));
    }
    out
}

pub fn display_predicate(pred: &Predicate, names: &[String]) -> String {
    if pred.is_empty() {
        return "true".to_string();
    }
    pred.iter()
        .map(|c| c.display(names))
        .collect::<Vec<_>>()
        .join(" & ")
}

fn update_names(pts: &Pts) -> Vec<String> {
    let mut names = pts.var_names.clone();
    names.extend(pts.sample_vars.iter().map(|(n, _)| n.clone()));
    names
}

/// Parse the PTS debug format produced by `print_pts`.
pub fn parse_pts(src: &str) -> Result<Pts, PtsError> {
    let mut cur = Cursor::from_str(src)?;
    match cur.bump() {
        Some(Tok::Ident(s)) if s == "pts" => {}
        _ => return Err(cur.err("expected 'pts' header")),
    }
    // vars
    match cur.bump() {
        Some(Tok::Ident(s)) if s == "vars" => {}
        _ => return Err(cur.err("expected 'vars'")),
    }
    let mut var_names = Vec::new();
    let mut var_ints = Vec::new();
    while let Some(Tok::Ident(s)) = cur.peek() {
        if matches!(s.as_str(), "sample" | "locs") {
            break;
        }
        var_names.push(s.clone());
        cur.bump();
        if cur.peek() == Some(&Tok::Colon) {
            cur.bump();
            let kind = cur.expect_ident("variable kind")?;
            match kind.as_str() {
                "int" => var_ints.push(true),
                "real" => var_ints.push(false),
                other => return Err(cur.err(format!("unknown variable kind '{other}'"))),
            }
        } else {
            var_ints.push(false);
        }
    }
    let mut sample_vars = Vec::new();
    while matches!(cur.peek(), Some(Tok::Ident(s)) if s == "sample") {
        cur.bump();
        let name = cur.expect_ident("sample variable name")?;
        cur.expect(&Tok::Tilde, "'~'")?;
        sample_vars.push((name, parse_distribution(&mut cur)?));
    }
    match cur.bump() {
        Some(Tok::Ident(s)) if s == "locs" => {}
        _ => return Err(cur.err("expected 'locs'")),
    }
    let mut loc_names: Vec<String> = Vec::new();
    while let Some(Tok::Ident(s)) = cur.peek() {
        if s == "init_loc" || s == "init" {
            break;
        }
        if let Some(Tok::Minus) = cur.peek2() {
            // 'init-loc' begins here
            if s == "init" || s == "out" {
                break;
            }
        }
        loc_names.push(s.clone());
        cur.bump();
    }
    let find_loc = |cur: &Cursor, name: &str, locs: &[String]| -> Result<usize, PtsError> {
        locs.iter()
            .position(|l| l == name)
            .ok_or_else(|| cur.err(format!("unknown location '{name}'")))
    };
    expect_kw2(&mut cur, "init", "loc")?;
    let init_name = cur.expect_ident("location")?;
    let l_init = find_loc(&cur, &init_name, &loc_names)?;
    expect_kw2(&mut cur, "out", "loc")?;
    let out_name = cur.expect_ident("location")?;
    let l_out = find_loc(&cur, &out_name, &loc_names)?;

    let mut invariants = vec![Vec::new(); loc_names.len()];
    let mut init_values: Vec<Option<InitValue>> = vec![None; var_names.len()];
    let mut support: Option<Predicate> = None;
    let mut transitions = Vec::new();
    let all_names: Vec<String> = var_names
        .iter()
        .cloned()
        .chain(sample_vars.iter().map(|(n, _)| n.clone()))
        .collect();

    while let Some(tok) = cur.peek().cloned() {
        let kw = match tok {
            Tok::Ident(s) => s,
            _ => return Err(cur.err("expected section keyword")),
        };
        cur.bump();
        match kw.as_str() {
            "invariant" => {
                let loc = cur.expect_ident("location")?;
                let idx = find_loc(&cur, &loc, &loc_names)?;
                cur.expect(&Tok::Colon, "':'")?;
                invariants[idx] = parse_predicate(&mut cur, &var_names)?;
            }
            "init" => {
                let var = cur.expect_ident("variable")?;
                let idx = var_names
                    .iter()
                    .position(|v| *v == var)
                    .ok_or_else(|| cur.err(format!("unknown variable '{var}'")))?;
                if cur.eat(&Tok::Assign) {
                    init_values[idx] = Some(InitValue::Const(parse_const(&mut cur)?));
                } else {
                    cur.expect(&Tok::Tilde, "':=' or '~'")?;
                    init_values[idx] = Some(InitValue::Dist(parse_distribution(&mut cur)?));
                }
            }
            "support" => {
                cur.expect(&Tok::Colon, "':'")?;
                support = Some(parse_predicate(&mut cur, &var_names)?);
            }
            "trans" => {
                let src = cur.expect_ident("location")?;
                let source = find_loc(&cur, &src, &loc_names)?;
                cur.expect(&Tok::Colon, "':'")?;
                let guard = parse_predicate(&mut cur, &var_names)?;
                cur.expect(&Tok::Question, "'?'")?;
                let mut forks = Vec::new();
                loop {
                    let prob = parse_const(&mut cur)?;
                    cur.expect(&Tok::Arrow, "'->'")?;
                    let dest_name = cur.expect_ident("location")?;
                    let dest = find_loc(&cur, &dest_name, &loc_names)?;
                    cur.expect(&Tok::Colon, "':'")?;
                    let mut update: Vec<Poly> = (0..var_names.len())
                        .map(|i| Poly::var(all_names.len(), i))
                        .collect();
                    if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "skip") {
                        cur.bump();
                    } else {
                        loop {
                            let var = cur.expect_ident("variable")?;
                            let idx = var_names
                                .iter()
                                .position(|v| *v == var)
                                .ok_or_else(|| cur.err(format!("unknown variable '{var}'")))?;
                            cur.expect(&Tok::Assign, "':='")?;
                            update[idx] = parse_poly(&mut cur, &all_names)?;
                            if !cur.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    forks.push(Fork { prob, update, dest });
                    if !cur.eat(&Tok::Semi) {
                        break;
                    }
                }
                transitions.push(Transition {
                    source,
                    guard,
                    forks,
                });
            }
            other => return Err(cur.err(format!("unknown section '{other}'"))),
        }
    }

    let values: Vec<InitValue> = init_values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| {
                PtsError::Malformed(format!("variable '{}' has no init entry", var_names[i]))
            })
        })
        .collect::<Result<_, _>>()?;
    let support_overridden = support.is_some();
    let support =
        support.unwrap_or_else(|| InitSpec::derived_support(&values, var_names.len()));
    let pts = Pts {
        var_names,
        var_ints,
        sample_vars,
        loc_names,
        l_init,
        l_out,
        transitions,
        invariants,
        init: InitSpec {
            values,
            support,
            support_overridden,
        },
    };
    pts.validate()?;
    Ok(pts)
}

fn expect_kw2(cur: &mut Cursor, a: &str, b: &str) -> Result<(), PtsError> {
    match cur.bump() {
        Some(Tok::Ident(s)) if s == a => {}
        other => return Err(cur.err(format!("expected '{a}-{b}', found {other:?}"))),
    }
    cur.expect(&Tok::Minus, "'-'")?;
    match cur.bump() {
        Some(Tok::Ident(s)) if s == b => Ok(()),
        other => Err(cur.err(format!("expected '{a}-{b}', found {other:?}"))),
    }
}
