//! Compilation of the AST into a probabilistic transition system.
//!
//! Each control point becomes a location. Boolean conditions split into
//! sign-pattern guards that are mutually exclusive and exhaustive by
//! construction (the implicit else-guard is always emitted); probabilistic
//! branches become one transition with a fork per outcome. A branch whose
//! body is a single atomic statement folds its update onto the fork.

use num_traits::{One, Zero};
use pts_core::{
    BoolExpr, Constraint, Fork, InitSpec, InitValue, LocId, Poly, Predicate, Pts, Rat, Sense,
    Transition,
};

use crate::ast::{AstInit, BranchCond, Cond, ProgramAst, Stmt, StmtKind};
use crate::PplError;

pub fn compile_to_pts(ast: &ProgramAst) -> Result<Pts, PplError> {
    let n = ast.var_names.len();
    let mut samples = Vec::new();
    collect_samples(&ast.body, &ast.var_names, &mut samples);
    let arity = n + samples.len();

    let mut c = Compiler {
        n,
        arity,
        loc_names: vec!["l0".into(), "out".into()],
        transitions: Vec::new(),
        loop_heads: vec![0; ast.n_loops + 1],
        next_sample: 0,
        next_loc: 1,
    };
    let l_init = 0;
    let l_out = 1;
    c.compile(&ast.body, l_init, l_out)?;

    // invariants: the global conjunction everywhere, loop annotations at
    // their heads
    let mut invariants = vec![ast.global_invariant.clone(); c.loc_names.len()];
    for (loop_idx, inv) in &ast.loop_invariants {
        let head = c.loop_heads[*loop_idx];
        invariants[head].extend(inv.iter().cloned());
    }

    let values: Vec<InitValue> = ast
        .init
        .iter()
        .map(|v| match v {
            AstInit::Const(r) => InitValue::Const(r.clone()),
            AstInit::Dist(d) => InitValue::Dist(d.clone()),
        })
        .collect();
    let support = match &ast.support_override {
        Some(p) => p.clone(),
        None => InitSpec::derived_support(&values, n),
    };

    let pts = Pts {
        var_names: ast.var_names.clone(),
        var_ints: ast.var_ints.clone(),
        sample_vars: samples,
        loc_names: c.loc_names,
        l_init,
        l_out,
        transitions: c.transitions,
        invariants,
        init: InitSpec {
            values,
            support,
            support_overridden: ast.support_override.is_some(),
        },
    };
    pts.validate().map_err(PplError::Model)?;
    Ok(pts)
}

fn collect_samples(stmt: &Stmt, var_names: &[String], out: &mut Vec<(String, pts_core::Distribution)>) {
    match &stmt.kind {
        StmtKind::Sample { var, dist } => {
            let mut name = format!("r{}", out.len());
            while var_names.contains(&name) {
                name.push('_');
            }
            let _ = var;
            out.push((name, dist.clone()));
        }
        StmtKind::Seq(ss) => {
            for s in ss {
                collect_samples(s, var_names, out);
            }
        }
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            collect_samples(then_branch, var_names, out);
            if let Some(e) = else_branch {
                collect_samples(e, var_names, out);
            }
        }
        StmtKind::While { body, .. } => collect_samples(body, var_names, out),
        _ => {}
    }
}

struct Compiler {
    n: usize,
    arity: usize,
    loc_names: Vec<String>,
    transitions: Vec<Transition>,
    loop_heads: Vec<LocId>,
    next_sample: usize,
    next_loc: usize,
}

impl Compiler {
    fn fresh_loc(&mut self) -> LocId {
        self.next_loc += 1;
        self.loc_names.push(format!("l{}", self.next_loc - 1));
        self.loc_names.len() - 1
    }

    fn identity(&self) -> Vec<Poly> {
        (0..self.n).map(|i| Poly::var(self.arity, i)).collect()
    }

    fn add(&mut self, source: LocId, guard: Predicate, forks: Vec<Fork>) {
        self.transitions.push(Transition {
            source,
            guard,
            forks,
        });
    }

    /// Update vector of an atomic statement, or None if compound.
    fn atomic_update(&mut self, stmt: &Stmt) -> Option<Vec<Poly>> {
        match &stmt.kind {
            StmtKind::Skip => Some(self.identity()),
            StmtKind::Assign { var, expr } => {
                let mut u = self.identity();
                u[*var] = expr.extend_arity(self.arity);
                Some(u)
            }
            StmtKind::Sample { var, .. } => {
                let mut u = self.identity();
                u[*var] = Poly::var(self.arity, self.n + self.next_sample);
                self.next_sample += 1;
                Some(u)
            }
            _ => None,
        }
    }

    fn compile(&mut self, stmt: &Stmt, entry: LocId, exit: LocId) -> Result<(), PplError> {
        match &stmt.kind {
            StmtKind::Skip | StmtKind::Assign { .. } | StmtKind::Sample { .. } => {
                let update = self.atomic_update(stmt).unwrap();
                self.add(
                    entry,
                    Vec::new(),
                    vec![Fork {
                        prob: Rat::one(),
                        update,
                        dest: exit,
                    }],
                );
                Ok(())
            }
            StmtKind::Seq(ss) => {
                let mut from = entry;
                for (i, s) in ss.iter().enumerate() {
                    let to = if i + 1 == ss.len() {
                        exit
                    } else {
                        self.fresh_loc()
                    };
                    self.compile(s, from, to)?;
                    from = to;
                }
                Ok(())
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => match cond {
                BranchCond::Coin(p) => self.compile_coin_if(p, then_branch, else_branch.as_deref(), entry, exit),
                BranchCond::Bool(b) => self.compile_bool_if(b, then_branch, else_branch.as_deref(), entry, exit),
            },
            StmtKind::While {
                cond,
                body,
                loop_index,
            } => {
                self.loop_heads[*loop_index] = entry;
                match cond {
                    BranchCond::Coin(p) => {
                        let body_entry = self.fresh_loc();
                        let mut forks = Vec::new();
                        if !p.is_zero() {
                            forks.push(Fork {
                                prob: p.clone(),
                                update: self.identity(),
                                dest: body_entry,
                            });
                        }
                        let q = Rat::one() - p;
                        if !q.is_zero() {
                            forks.push(Fork {
                                prob: q,
                                update: self.identity(),
                                dest: exit,
                            });
                        }
                        self.add(entry, Vec::new(), forks);
                        self.compile(body, body_entry, entry)
                    }
                    BranchCond::Bool(b) => {
                        let (true_guards, false_guards) = split_condition(b, self.n)?;
                        let body_entry = self.fresh_loc();
                        for g in true_guards {
                            self.add(
                                entry,
                                g,
                                vec![Fork {
                                    prob: Rat::one(),
                                    update: self.identity(),
                                    dest: body_entry,
                                }],
                            );
                        }
                        for g in false_guards {
                            self.add(
                                entry,
                                g,
                                vec![Fork {
                                    prob: Rat::one(),
                                    update: self.identity(),
                                    dest: exit,
                                }],
                            );
                        }
                        self.compile(body, body_entry, entry)
                    }
                }
            }
        }
    }

    fn compile_coin_if(
        &mut self,
        p: &Rat,
        then_branch: &Stmt,
        else_branch: Option<&Stmt>,
        entry: LocId,
        exit: LocId,
    ) -> Result<(), PplError> {
        // fold atomic branch bodies straight onto the forks
        let then_atomic = self.atomic_update(then_branch);
        let else_atomic = match else_branch {
            Some(e) => match self.atomic_update(e) {
                Some(u) => Some(u),
                None => None,
            },
            None => Some(self.identity()),
        };
        if let (Some(then_upd), Some(else_upd)) = (&then_atomic, &else_atomic) {
            let mut forks = Vec::new();
            if !p.is_zero() {
                forks.push(Fork {
                    prob: p.clone(),
                    update: then_upd.clone(),
                    dest: exit,
                });
            }
            let q = Rat::one() - p;
            if !q.is_zero() {
                forks.push(Fork {
                    prob: q,
                    update: else_upd.clone(),
                    dest: exit,
                });
            }
            self.add(entry, Vec::new(), forks);
            return Ok(());
        }
        // compound branches: fork to per-branch entry locations
        // (sample numbering above consumed nothing for compound branches)
        let then_entry = self.fresh_loc();
        let else_entry = match else_branch {
            Some(_) => self.fresh_loc(),
            None => exit,
        };
        let mut forks = Vec::new();
        if !p.is_zero() {
            forks.push(Fork {
                prob: p.clone(),
                update: self.identity(),
                dest: then_entry,
            });
        }
        let q = Rat::one() - p;
        if !q.is_zero() {
            forks.push(Fork {
                prob: q,
                update: self.identity(),
                dest: else_entry,
            });
        }
        self.add(entry, Vec::new(), forks);
        self.compile(then_branch, then_entry, exit)?;
        if let Some(e) = else_branch {
            self.compile(e, else_entry, exit)?;
        }
        Ok(())
    }

    fn compile_bool_if(
        &mut self,
        cond: &Cond,
        then_branch: &Stmt,
        else_branch: Option<&Stmt>,
        entry: LocId,
        exit: LocId,
    ) -> Result<(), PplError> {
        let (true_guards, false_guards) = split_condition(cond, self.n)?;
        let then_atomic = self.atomic_update(then_branch);
        match then_atomic {
            Some(u) => {
                for g in true_guards {
                    self.add(
                        entry,
                        g,
                        vec![Fork {
                            prob: Rat::one(),
                            update: u.clone(),
                            dest: exit,
                        }],
                    );
                }
            }
            None => {
                let then_entry = self.fresh_loc();
                for g in true_guards {
                    self.add(
                        entry,
                        g,
                        vec![Fork {
                            prob: Rat::one(),
                            update: self.identity(),
                            dest: then_entry,
                        }],
                    );
                }
                self.compile(then_branch, then_entry, exit)?;
            }
        }
        match else_branch {
            None => {
                for g in false_guards {
                    self.add(
                        entry,
                        g,
                        vec![Fork {
                            prob: Rat::one(),
                            update: self.identity(),
                            dest: exit,
                        }],
                    );
                }
            }
            Some(e) => {
                let else_atomic = self.atomic_update(e);
                match else_atomic {
                    Some(u) => {
                        for g in false_guards {
                            self.add(
                                entry,
                                g,
                                vec![Fork {
                                    prob: Rat::one(),
                                    update: u.clone(),
                                    dest: exit,
                                }],
                            );
                        }
                    }
                    None => {
                        let else_entry = self.fresh_loc();
                        for g in false_guards {
                            self.add(
                                entry,
                                g,
                                vec![Fork {
                                    prob: Rat::one(),
                                    update: self.identity(),
                                    dest: else_entry,
                                }],
                            );
                        }
                        self.compile(e, else_entry, exit)?;
                    }
                }
            }
        }
        Ok(())
    }
}

// --- condition splitting ----------------------------------------------------

// sign-set masks over {negative, zero, positive}
const LT: u8 = 0b001;
const EQZ: u8 = 0b010;
const GT: u8 = 0b100;

fn mask_is_guard(mask: u8) -> bool {
    // every mask except {neg, pos} (a disequality) and the empty mask
    mask != 0 && mask != LT | GT
}

/// Split a boolean condition into mutually exclusive, exhaustive guard
/// lists: (guards where it holds, guards where it fails). Guards are
/// conjunctions of comparisons on the condition's distinct polynomials.
pub fn split_condition(cond: &Cond, n_vars: usize) -> Result<(Vec<Predicate>, Vec<Predicate>), PplError> {
    // canonical polynomial table; each atom maps to (index, flipped)
    let mut polys: Vec<Poly> = Vec::new();
    let mut atom_refs: Vec<(Constraint, usize, bool)> = Vec::new();
    collect_atoms(cond, &mut polys, &mut atom_refs)?;
    if polys.len() > 6 {
        return Err(PplError::Validation(format!(
            "condition with {} distinct polynomials is too complex to split",
            polys.len()
        )));
    }

    let lookup = |c: &Constraint| -> (usize, bool) {
        atom_refs
            .iter()
            .find(|(a, _, _)| a == c)
            .map(|&(_, i, f)| (i, f))
            .expect("atom was collected")
    };

    let mut true_patterns: Vec<Vec<u8>> = Vec::new();
    let mut false_patterns: Vec<Vec<u8>> = Vec::new();
    let mut pattern = vec![LT; polys.len()];
    'outer: loop {
        let truth = cond.eval(&|c: &Constraint| {
            let (idx, flipped) = lookup(c);
            let sign = pattern[idx];
            let sign = if flipped { flip_mask(sign) } else { sign };
            match c.sense {
                Sense::Ge => sign & (EQZ | GT) != 0,
                Sense::Gt => sign & GT != 0,
                Sense::Eq => sign & EQZ != 0,
            }
        });
        if truth {
            true_patterns.push(pattern.clone());
        } else {
            false_patterns.push(pattern.clone());
        }
        for slot in pattern.iter_mut() {
            *slot = match *slot {
                LT => EQZ,
                EQZ => GT,
                _ => {
                    *slot = LT;
                    continue;
                }
            };
            continue 'outer;
        }
        break;
    }

    let to_guards = |mut patterns: Vec<Vec<u8>>| -> Vec<Predicate> {
        merge_patterns(&mut patterns);
        patterns
            .iter()
            .map(|pat| {
                pat.iter()
                    .enumerate()
                    .filter_map(|(i, &mask)| mask_constraint(&polys[i], mask))
                    .collect()
            })
            .collect()
    };
    let _ = n_vars;
    Ok((to_guards(true_patterns), to_guards(false_patterns)))
}

fn flip_mask(m: u8) -> u8 {
    let mut out = 0;
    if m & LT != 0 {
        out |= GT;
    }
    if m & GT != 0 {
        out |= LT;
    }
    if m & EQZ != 0 {
        out |= EQZ;
    }
    out
}

fn mask_constraint(p: &Poly, mask: u8) -> Option<Constraint> {
    let neg = p.scale(&-Rat::one());
    match mask {
        m if m == LT => Some(Constraint::gt(neg)),
        m if m == EQZ => Some(Constraint::eq(p.clone())),
        m if m == GT => Some(Constraint::gt(p.clone())),
        m if m == LT | EQZ => Some(Constraint::ge(neg)),
        m if m == EQZ | GT => Some(Constraint::ge(p.clone())),
        m if m == LT | EQZ | GT => None,
        _ => unreachable!("invalid guard mask"),
    }
}

/// Greedy pairwise merging of sign patterns: two patterns differing in one
/// coordinate merge when the combined sign set is still a single
/// comparison.
fn merge_patterns(patterns: &mut Vec<Vec<u8>>) {
    loop {
        let mut merged = false;
        'search: for i in 0..patterns.len() {
            for j in i + 1..patterns.len() {
                let diff: Vec<usize> = (0..patterns[i].len())
                    .filter(|&k| patterns[i][k] != patterns[j][k])
                    .collect();
                if diff.len() == 1 {
                    let k = diff[0];
                    let union = patterns[i][k] | patterns[j][k];
                    if mask_is_guard(union) {
                        patterns[i][k] = union;
                        patterns.remove(j);
                        merged = true;
                        break 'search;
                    }
                }
                if diff.is_empty() {
                    patterns.remove(j);
                    merged = true;
                    break 'search;
                }
            }
        }
        if !merged {
            return;
        }
    }
}

fn collect_atoms(
    cond: &Cond,
    polys: &mut Vec<Poly>,
    atom_refs: &mut Vec<(Constraint, usize, bool)>,
) -> Result<(), PplError> {
    match cond {
        BoolExpr::True | BoolExpr::False => Ok(()),
        BoolExpr::Atom(c) => {
            if atom_refs.iter().any(|(a, _, _)| a == c) {
                return Ok(());
            }
            let neg = c.poly.scale(&-Rat::one());
            let (idx, flipped) = if let Some(i) = polys.iter().position(|p| *p == c.poly) {
                (i, false)
            } else if let Some(i) = polys.iter().position(|p| *p == neg) {
                (i, true)
            } else {
                polys.push(c.poly.clone());
                (polys.len() - 1, false)
            };
            atom_refs.push((c.clone(), idx, flipped));
            Ok(())
        }
        BoolExpr::Not(e) => collect_atoms(e, polys, atom_refs),
        BoolExpr::And(es) | BoolExpr::Or(es) => {
            for e in es {
                collect_atoms(e, polys, atom_refs)?;
            }
            Ok(())
        }
    }
}
