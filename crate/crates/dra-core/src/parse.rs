//! Line-oriented DRA file format.
//!
//! ```text
//! # comment
//! property: F(x=1) & F(y>0);
//! ap xe := x = 1;
//! ap yp := y > 0;
//! states 4;
//! initial 0;
//! edge 0 : !xe & !yp -> 0;
//! edge 0 : xe & yp -> 3;
//! ...
//! pair E={} F={3};
//! ```
//!
//! The printer emits the same format canonically; printing a parsed
//! automaton and parsing it again is the identity.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use pts_core::text::{normalize_comparison, Cursor, Tok};
use pts_core::{BoolExpr, Constraint, Sense};

use crate::{ApLit, AtomicProposition, Dra, DraEdge, DraError, RabinPair};

/// Parse and validate a DRA file against the given program-variable
/// vocabulary.
pub fn parse_dra(source: &str, vocabulary: &[String]) -> Result<Dra, DraError> {
    // the property line is free-form documentation; strip it before lexing
    let mut property_doc = None;
    let mut body = String::new();
    for line in source.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("property:") {
            property_doc = Some(rest.trim().trim_end_matches(';').trim().to_string());
            body.push('\n');
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut cur = Cursor::from_str(&body).map_err(cvt)?;

    let mut aps: Vec<AtomicProposition> = Vec::new();
    let mut n_states: Option<usize> = None;
    let mut initial: Option<usize> = None;
    let mut raw_edges: Vec<(usize, BoolExpr<ApLit>, usize)> = Vec::new();
    let mut pairs: Vec<RabinPair> = Vec::new();

    while !cur.at_end() {
        let kw = cur.expect_ident("section keyword").map_err(cvt)?;
        match kw.as_str() {
            "ap" => {
                let name = cur.expect_ident("proposition name").map_err(cvt)?;
                if aps.iter().any(|a| a.name == name) {
                    return Err(err_at(&cur, format!("duplicate proposition '{name}'")));
                }
                cur.expect(&Tok::Assign, "':='").map_err(cvt)?;
                let c = parse_ap_comparison(&mut cur, vocabulary)?;
                aps.push(AtomicProposition {
                    name,
                    poly: c.poly,
                    sense: c.sense,
                });
                cur.expect(&Tok::Semi, "';'").map_err(cvt)?;
            }
            "states" => {
                n_states = Some(parse_usize(&mut cur)?);
                cur.expect(&Tok::Semi, "';'").map_err(cvt)?;
            }
            "initial" => {
                initial = Some(parse_usize(&mut cur)?);
                cur.expect(&Tok::Semi, "';'").map_err(cvt)?;
            }
            "edge" => {
                let src = parse_usize(&mut cur)?;
                cur.expect(&Tok::Colon, "':'").map_err(cvt)?;
                let guard = parse_guard_or(&mut cur, &aps)?;
                cur.expect(&Tok::Arrow, "'->'").map_err(cvt)?;
                let dest = parse_usize(&mut cur)?;
                cur.expect(&Tok::Semi, "';'").map_err(cvt)?;
                raw_edges.push((src, guard, dest));
            }
            "pair" => {
                let e = parse_state_set(&mut cur, "E")?;
                let f = parse_state_set(&mut cur, "F")?;
                cur.expect(&Tok::Semi, "';'").map_err(cvt)?;
                pairs.push(RabinPair { e, f });
            }
            other => return Err(err_at(&cur, format!("unknown section '{other}'"))),
        }
    }

    let n_states = n_states.ok_or_else(|| DraError::Malformed("missing 'states'".into()))?;
    let initial = initial.ok_or_else(|| DraError::Malformed("missing 'initial'".into()))?;
    let mut edges: Vec<Vec<DraEdge>> = vec![Vec::new(); n_states];
    for (src, guard, dest) in raw_edges {
        if src >= n_states {
            return Err(DraError::Malformed(format!("edge from undeclared state {src}")));
        }
        edges[src].push(DraEdge { guard, dest });
    }
    let dra = Dra {
        aps,
        n_states,
        initial,
        edges,
        pairs,
        property_doc,
    };
    dra.validate()?;
    Ok(dra)
}

/// Canonical printer; `parse_dra(print_dra(d))` reproduces `d`.
pub fn print_dra(dra: &Dra, vocabulary: &[String]) -> String {
    let mut out = String::new();
    if let Some(doc) = &dra.property_doc {
        out.push_str(&format!("property: {doc};\n"));
    }
    for ap in &dra.aps {
        let op = match ap.sense {
            Sense::Ge => ">=",
            Sense::Gt => ">",
            Sense::Eq => "=",
        };
        out.push_str(&format!(
            "ap {} := {} {} 0;\n",
            ap.name,
            ap.poly.display(vocabulary),
            op
        ));
    }
    out.push_str(&format!("states {};\n", dra.n_states));
    out.push_str(&format!("initial {};\n", dra.initial));
    for (q, edges) in dra.edges.iter().enumerate() {
        for e in edges {
            out.push_str(&format!(
                "edge {} : {} -> {};\n",
                q,
                print_guard(&e.guard, &dra.aps, 0),
                e.dest
            ));
        }
    }
    for p in &dra.pairs {
        let fmt_set = |s: &BTreeSet<usize>| {
            s.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        out.push_str(&format!(
            "pair E={{{}}} F={{{}}};\n",
            fmt_set(&p.e),
            fmt_set(&p.f)
        ));
    }
    out
}

// precedence levels: 0 = or, 1 = and, 2 = literal
fn print_guard(g: &BoolExpr<ApLit>, aps: &[AtomicProposition], level: u8) -> String {
    match g {
        BoolExpr::True => "true".into(),
        BoolExpr::False => "false".into(),
        BoolExpr::Atom(lit) => {
            let name = &aps[lit.ap].name;
            if lit.negated {
                format!("!{name}")
            } else {
                name.clone()
            }
        }
        BoolExpr::Not(inner) => format!("!({})", print_guard(inner, aps, 0)),
        BoolExpr::And(parts) => {
            let body = parts
                .iter()
                .map(|p| print_guard(p, aps, 1))
                .collect::<Vec<_>>()
                .join(" & ");
            if level > 1 {
                format!("({body})")
            } else {
                body
            }
        }
        BoolExpr::Or(parts) => {
            let body = parts
                .iter()
                .map(|p| print_guard(p, aps, 0))
                .collect::<Vec<_>>()
                .join(" | ");
            if level > 0 {
                format!("({body})")
            } else {
                body
            }
        }
    }
}

/// Parse a standalone boolean formula over the automaton's AP names, e.g.
/// for event flags on the command line.
pub fn parse_guard_formula(
    src: &str,
    aps: &[AtomicProposition],
) -> Result<BoolExpr<ApLit>, DraError> {
    let mut cur = Cursor::from_str(src).map_err(cvt)?;
    let g = parse_guard_or(&mut cur, aps)?;
    if !cur.at_end() {
        return Err(err_at(&cur, "trailing input after formula"));
    }
    Ok(g)
}

fn parse_guard_or(cur: &mut Cursor, aps: &[AtomicProposition]) -> Result<BoolExpr<ApLit>, DraError> {
    let mut parts = vec![parse_guard_and(cur, aps)?];
    while cur.eat(&Tok::Pipe) {
        parts.push(parse_guard_and(cur, aps)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        BoolExpr::Or(parts)
    })
}

fn parse_guard_and(cur: &mut Cursor, aps: &[AtomicProposition]) -> Result<BoolExpr<ApLit>, DraError> {
    let mut parts = vec![parse_guard_atom(cur, aps)?];
    while cur.eat(&Tok::Amp) {
        parts.push(parse_guard_atom(cur, aps)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        BoolExpr::And(parts)
    })
}

fn parse_guard_atom(cur: &mut Cursor, aps: &[AtomicProposition]) -> Result<BoolExpr<ApLit>, DraError> {
    if cur.eat(&Tok::Bang) {
        // a bare negated name stays a literal; a parenthesized formula nests
        if let Some(Tok::Ident(name)) = cur.peek().cloned() {
            if let Some(ap) = aps.iter().position(|a| a.name == name) {
                cur.bump();
                return Ok(BoolExpr::Atom(ApLit { ap, negated: true }));
            }
        }
        let inner = parse_guard_atom(cur, aps)?;
        return Ok(BoolExpr::not(inner));
    }
    if cur.eat(&Tok::LParen) {
        let inner = parse_guard_or(cur, aps)?;
        cur.expect(&Tok::RParen, "')'").map_err(cvt)?;
        return Ok(inner);
    }
    match cur.bump() {
        Some(Tok::Ident(name)) => match name.as_str() {
            "true" => Ok(BoolExpr::True),
            "false" => Ok(BoolExpr::False),
            _ => {
                let ap = aps
                    .iter()
                    .position(|a| a.name == name)
                    .ok_or_else(|| err_at(cur, format!("unknown proposition '{name}'")))?;
                Ok(BoolExpr::Atom(ApLit { ap, negated: false }))
            }
        },
        // figures write the always-true guard as the numeral 1
        Some(Tok::Num(n)) if n.to_integer().to_u8() == Some(1) && n.is_integer() => {
            Ok(BoolExpr::True)
        }
        Some(Tok::Num(n)) if n.to_integer().to_u8() == Some(0) && n.is_integer() => {
            Ok(BoolExpr::False)
        }
        other => Err(err_at(cur, format!("expected guard, found {other:?}"))),
    }
}

fn parse_ap_comparison(cur: &mut Cursor, vocabulary: &[String]) -> Result<Constraint, DraError> {
    use pts_core::text::parse_poly;
    let lhs = parse_poly(cur, vocabulary).map_err(cvt)?;
    let op = match cur.bump() {
        Some(Tok::Cmp(op)) => op,
        other => {
            return Err(err_at(
                cur,
                format!("expected comparison operator, found {other:?}"),
            ))
        }
    };
    let rhs = parse_poly(cur, vocabulary).map_err(cvt)?;
    normalize_comparison(lhs, op, rhs).map_err(|msg| err_at(cur, msg))
}

fn parse_usize(cur: &mut Cursor) -> Result<usize, DraError> {
    match cur.bump() {
        Some(Tok::Num(n)) if n.is_integer() => n
            .to_integer()
            .to_usize()
            .ok_or_else(|| err_at(cur, "state index out of range")),
        other => Err(err_at(cur, format!("expected state index, found {other:?}"))),
    }
}

fn parse_state_set(cur: &mut Cursor, name: &str) -> Result<BTreeSet<usize>, DraError> {
    match cur.bump() {
        Some(Tok::Ident(s)) if s == name => {}
        other => return Err(err_at(cur, format!("expected '{name}=', found {other:?}"))),
    }
    match cur.bump() {
        Some(Tok::Cmp(pts_core::text::CmpOp::Eq)) => {}
        other => return Err(err_at(cur, format!("expected '=', found {other:?}"))),
    }
    cur.expect(&Tok::LBrace, "'{'").map_err(cvt)?;
    let mut set = BTreeSet::new();
    if !cur.eat(&Tok::RBrace) {
        loop {
            set.insert(parse_usize(cur)?);
            if cur.eat(&Tok::RBrace) {
                break;
            }
            cur.expect(&Tok::Comma, "','").map_err(cvt)?;
        }
    }
    Ok(set)
}

fn err_at(cur: &Cursor, msg: impl Into<String>) -> DraError {
    let (line, col) = cur.here();
    DraError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn cvt(e: pts_core::PtsError) -> DraError {
    match e {
        pts_core::PtsError::Parse { line, col, msg } => DraError::Parse { line, col, msg },
        other => DraError::Expr(other),
    }
}
