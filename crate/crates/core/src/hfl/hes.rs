//! Conversions between equation systems and closed formulas, normalization,
//! De Morgan duals and quantifier encodings.

use super::{substitute, Fix, Formula, Hes, HesEq, HflType};
use crate::ops::IntOp;

/// Inlines an equation system into a single formula: the last equation is
/// closed under its own fixpoint and substituted into all earlier equations
/// and the main formula, repeatedly.
pub fn hes_to_formula(hes: &Hes) -> Formula {
    let mut eqs = hes.eqs.clone();
    let mut main = hes.main.clone();
    while let Some(eq) = eqs.pop() {
        let closed = match eq.fix {
            Fix::Mu => Formula::mu(eq.var.clone(), eq.ty.clone(), eq.rhs.clone()),
            Fix::Nu => Formula::nu(eq.var.clone(), eq.ty.clone(), eq.rhs.clone()),
        };
        for earlier in &mut eqs {
            earlier.rhs = substitute(&earlier.rhs, &eq.var, &closed);
        }
        main = substitute(&main, &eq.var, &closed);
    }
    main
}

/// Extracts every fixpoint subformula into an equation, outermost first.
/// Inlining the result (`hes_to_formula`) reproduces the input up to alpha
/// renaming of duplicated binder names.
pub fn formula_to_hes(f: &Formula) -> Hes {
    let mut eqs: Vec<HesEq> = Vec::new();
    let mut used: std::collections::BTreeSet<String> = f.free_vars();
    let main = extract(f, &mut eqs, &mut used);
    Hes { eqs, main }
}

fn extract(
    f: &Formula,
    eqs: &mut Vec<HesEq>,
    used: &mut std::collections::BTreeSet<String>,
) -> Formula {
    use Formula::*;
    match f {
        True | False | Int(_) | Var(_) => f.clone(),
        Op(op, a, b) => Formula::op(*op, extract(a, eqs, used), extract(b, eqs, used)),
        Pred(op, a, b) => Formula::pred(*op, extract(a, eqs, used), extract(b, eqs, used)),
        Or(a, b) => Formula::or(extract(a, eqs, used), extract(b, eqs, used)),
        And(a, b) => Formula::and(extract(a, eqs, used), extract(b, eqs, used)),
        App(a, b) => Formula::app(extract(a, eqs, used), extract(b, eqs, used)),
        Diamond(l, a) => Formula::diamond(l.clone(), extract(a, eqs, used)),
        Boxm(l, a) => Formula::boxm(l.clone(), extract(a, eqs, used)),
        Abs(x, ty, a) => Formula::abs(x.clone(), ty.clone(), extract(a, eqs, used)),
        Mu(x, ty, body) | Nu(x, ty, body) => {
            let fix = if matches!(f, Mu(..)) { Fix::Mu } else { Fix::Nu };
            // Rename to keep equation variables distinct.
            let (name, body) = if used.contains(x) {
                let fresh = fresh_name(x, used);
                let renamed = substitute(body, x, &Formula::Var(fresh.clone()));
                (fresh, renamed)
            } else {
                (x.clone(), (**body).clone())
            };
            used.insert(name.clone());
            // Reserve the slot so outer fixpoints precede inner ones.
            let index = eqs.len();
            eqs.push(HesEq {
                var: name.clone(),
                ty: ty.clone(),
                fix,
                rhs: Formula::True,
            });
            let rhs = extract(&body, eqs, used);
            eqs[index].rhs = rhs;
            Formula::Var(name)
        }
    }
}

fn fresh_name(stem: &str, used: &std::collections::BTreeSet<String>) -> String {
    for n in 0.. {
        let candidate = format!("{stem}_{n}");
        if !used.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}

/// Ensures the main formula is a bare variable bound by a leading nu
/// equation; already-normalized systems are returned unchanged.
pub fn normalize_hes(hes: &Hes) -> Hes {
    if let Formula::Var(x) = &hes.main {
        if hes.eq_index(x) == Some(0) {
            return hes.clone();
        }
    }
    let mut used: std::collections::BTreeSet<String> =
        hes.eqs.iter().map(|e| e.var.clone()).collect();
    used.extend(hes.main.free_vars());
    let name = if used.contains("entry") {
        fresh_name("entry", &used)
    } else {
        "entry".to_string()
    };
    let ty = super::typecheck::typecheck_hes(hes).unwrap_or(HflType::Prop);
    let mut eqs = Vec::with_capacity(hes.eqs.len() + 1);
    eqs.push(HesEq {
        var: name.clone(),
        ty,
        fix: Fix::Nu,
        rhs: hes.main.clone(),
    });
    eqs.extend(hes.eqs.iter().cloned());
    Hes { eqs, main: Formula::Var(name) }
}

/// The De Morgan dual of a formula: swaps and/or, true/false, diamond/box
/// and each predicate with its negation. Integer expressions, variables,
/// lambdas and applications are untouched.
pub fn dual_formula(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        True => False,
        False => True,
        Int(_) | Var(_) => f.clone(),
        Op(op, a, b) => Formula::op(*op, dual_formula(a), dual_formula(b)),
        Pred(op, a, b) => Formula::pred(op.negate(), dual_formula(a), dual_formula(b)),
        Or(a, b) => Formula::and(dual_formula(a), dual_formula(b)),
        And(a, b) => Formula::or(dual_formula(a), dual_formula(b)),
        Diamond(l, a) => Formula::boxm(l.clone(), dual_formula(a)),
        Boxm(l, a) => Formula::diamond(l.clone(), dual_formula(a)),
        Mu(x, ty, a) => Formula::nu(x.clone(), ty.clone(), dual_formula(a)),
        Nu(x, ty, a) => Formula::mu(x.clone(), ty.clone(), dual_formula(a)),
        Abs(x, ty, a) => Formula::abs(x.clone(), ty.clone(), dual_formula(a)),
        App(a, b) => Formula::app(dual_formula(a), dual_formula(b)),
    }
}

/// Pointwise dual of an equation system: every connective, constant, modal
/// operator, predicate and fixpoint tag is swapped. Types are preserved and
/// the operation is an involution.
pub fn dual_hes(hes: &Hes) -> Hes {
    Hes {
        eqs: hes
            .eqs
            .iter()
            .map(|eq| HesEq {
                var: eq.var.clone(),
                ty: eq.ty.clone(),
                fix: eq.fix.flip(),
                rhs: dual_formula(&eq.rhs),
            })
            .collect(),
        main: dual_formula(&hes.main),
    }
}

/// `exists x. body(x)` for `body : int -> prop`, encoded as
/// `(mu X. \x. body(x) \/ X(x-1) \/ X(x+1)) 0`.
pub fn encode_exists(var: &str, body: Formula) -> Formula {
    encode_quantifier(Fix::Mu, var, body)
}

/// `forall x. body(x)` for `body : int -> prop`, encoded as
/// `(nu X. \x. body(x) /\ X(x-1) /\ X(x+1)) 0`.
pub fn encode_forall(var: &str, body: Formula) -> Formula {
    encode_quantifier(Fix::Nu, var, body)
}

fn encode_quantifier(fix: Fix, var: &str, body: Formula) -> Formula {
    let ty = HflType::arrow(HflType::Int, HflType::Prop);
    let mut used = body.free_vars();
    used.insert(var.to_string());
    let rec = fresh_name("walk", &used);
    let step = |delta: i32| {
        Formula::app(
            Formula::var(rec.clone()),
            Formula::op(
                if delta < 0 { IntOp::Sub } else { IntOp::Add },
                Formula::var(var),
                Formula::Int(1.into()),
            ),
        )
    };
    let applied = Formula::app(body, Formula::var(var));
    let combined = match fix {
        Fix::Mu => Formula::or(Formula::or(applied, step(-1)), step(1)),
        Fix::Nu => Formula::and(Formula::and(applied, step(-1)), step(1)),
    };
    let inner = Formula::abs(var, HflType::Int, combined);
    let closed = match fix {
        Fix::Mu => Formula::mu(rec, ty, inner),
        Fix::Nu => Formula::nu(rec, ty, inner),
    };
    Formula::app(closed, Formula::Int(0.into()))
}
