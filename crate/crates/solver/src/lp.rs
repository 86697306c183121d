//! Linear program assembly and the solving backend.
//!
//! Decision variables are the symbols of the problem pool: template
//! coefficients (free), the bound level gamma (boxed to [0,1]), and the
//! elimination multipliers (nonnegative). Lower modes minimize gamma,
//! maximizing the certified bound 1 - gamma; upper modes maximize gamma.

use std::collections::BTreeMap;

use certgen::{Lin, SymId, SymbolPool, TheoremMode};
use pts_core::rat_to_f64;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConstraintOp {
    /// expr = 0
    Eq,
    /// expr >= 0
    Ge,
}

/// One linear constraint over the unknowns.
#[derive(Clone, Debug)]
pub struct LinConstraint {
    pub expr: Lin,
    pub op: ConstraintOp,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Stable symbol names, indexed by SymId.
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    /// Objective coefficient per symbol (sparse).
    pub objective: BTreeMap<SymId, f64>,
    pub maximize: bool,
    pub constraints: Vec<LinConstraint>,
}

/// Snapshot the pool into a concrete LP.
pub fn assemble(
    pool: &SymbolPool,
    gamma: SymId,
    kappas: &[SymId],
    mode: TheoremMode,
    constraints: Vec<LinConstraint>,
) -> LinearProgram {
    let n = pool.len();
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
    bounds[gamma.0 as usize] = (0.0, 1.0);
    for k in kappas {
        bounds[k.0 as usize] = (0.0, f64::INFINITY);
    }
    let mut objective = BTreeMap::new();
    objective.insert(gamma, if mode.is_lower() { -1.0 } else { 1.0 });
    LinearProgram {
        names: pool.ids().map(|id| pool.name(id).to_string()).collect(),
        bounds,
        objective,
        maximize: true,
        constraints,
    }
}

/// A primal solution: one value per symbol.
#[derive(Clone, Debug)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl Solution {
    pub fn value(&self, id: SymId) -> f64 {
        self.values[id.0 as usize]
    }
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
    NumericFailure(String),
}

impl SolveOutcome {
    pub fn status_str(&self) -> &'static str {
        match self {
            SolveOutcome::Optimal(_) => "optimal",
            SolveOutcome::Infeasible => "infeasible",
            SolveOutcome::Unbounded => "unbounded",
            SolveOutcome::NumericFailure(_) => "numeric-failure",
        }
    }
}

/// Solve with the bundled simplex backend. Deterministic for identical
/// inputs. Numeric failures are reported distinctly from infeasibility.
pub fn solve(lp: &LinearProgram) -> SolveOutcome {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let direction = if lp.maximize {
        OptimizationDirection::Maximize
    } else {
        OptimizationDirection::Minimize
    };
    let mut prob = Problem::new(direction);
    let vars: Vec<microlp::Variable> = (0..lp.names.len())
        .map(|i| {
            let obj = lp
                .objective
                .get(&SymId(i as u32))
                .copied()
                .unwrap_or(0.0);
            prob.add_var(obj, lp.bounds[i])
        })
        .collect();
    for c in &lp.constraints {
        let terms: Vec<(microlp::Variable, f64)> = c
            .expr
            .terms
            .iter()
            .map(|(id, coef)| (vars[id.0 as usize], rat_to_f64(coef)))
            .collect();
        let rhs = -rat_to_f64(&c.expr.constant);
        let op = match c.op {
            ConstraintOp::Eq => ComparisonOp::Eq,
            ConstraintOp::Ge => ComparisonOp::Ge,
        };
        prob.add_constraint(&terms, op, rhs);
    }
    match prob.solve() {
        Ok(sol) => {
            let values: Vec<f64> = vars.iter().map(|v| sol[*v]).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return SolveOutcome::NumericFailure("non-finite solution values".into());
            }
            SolveOutcome::Optimal(Solution {
                values,
                objective: sol.objective(),
            })
        }
        Err(microlp::Error::Infeasible) => SolveOutcome::Infeasible,
        Err(microlp::Error::Unbounded) => SolveOutcome::Unbounded,
        Err(other) => SolveOutcome::NumericFailure(other.to_string()),
    }
}

/// Export in the standard LP text format for cross-checking with external
/// solvers. Output is byte-stable for identical inputs.
pub fn export_lp_text(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("\\ {name}\n"));
    out.push_str(if lp.maximize { "Maximize\n" } else { "Minimize\n" });
    let mut obj_terms = String::new();
    for (id, c) in &lp.objective {
        push_term(&mut obj_terms, *c, &lp.names[id.0 as usize]);
    }
    out.push_str(&format!(" obj:{obj_terms}\n"));
    out.push_str("Subject To\n");
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut terms = String::new();
        for (id, coef) in &c.expr.terms {
            push_term(&mut terms, rat_to_f64(coef), &lp.names[id.0 as usize]);
        }
        if c.expr.terms.is_empty() {
            terms.push_str(" 0");
        }
        let rhs = -rat_to_f64(&c.expr.constant);
        let op = match c.op {
            ConstraintOp::Eq => "=",
            ConstraintOp::Ge => ">=",
        };
        out.push_str(&format!(" e{i}:{terms} {op} {rhs}\n"));
    }
    out.push_str("Bounds\n");
    for (i, (lo, hi)) in lp.bounds.iter().enumerate() {
        let name = &lp.names[i];
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => out.push_str(&format!(" {name} free\n")),
            (true, false) => {
                if *lo != 0.0 {
                    out.push_str(&format!(" {name} >= {lo}\n"));
                }
                // the default lower bound 0 needs no line
            }
            (true, true) => out.push_str(&format!(" {lo} <= {name} <= {hi}\n")),
            (false, true) => out.push_str(&format!(" -inf <= {name} <= {hi}\n")),
        }
    }
    out.push_str("End\n");
    out
}

fn push_term(buf: &mut String, c: f64, name: &str) {
    if c >= 0.0 && !buf.is_empty() {
        buf.push_str(&format!(" + {c} {name}"));
    } else if c < 0.0 {
        buf.push_str(&format!(" - {} {name}", -c));
    } else {
        buf.push_str(&format!(" {c} {name}"));
    }
}
