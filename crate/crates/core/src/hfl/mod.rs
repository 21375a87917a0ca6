//! Fixpoint formulas over labeled transition systems, extended with integer
//! arithmetic, and hierarchical equation systems (ordered lists of mu/nu
//! equations with fixpoint-free right-hand sides).

mod hes;
mod parser;
mod print;
mod typecheck;

pub use hes::{dual_hes, encode_exists, encode_forall, formula_to_hes, hes_to_formula, normalize_hes};
pub use parser::{parse_formula, parse_hes};
pub use print::{print_formula, print_hes};
pub use typecheck::{typecheck_formula, typecheck_hes};

use crate::ops::{CmpOp, IntOp};
use num_bigint::BigInt;
use std::fmt;
use thiserror::Error;

/// Types of formulas: propositions, integers (argument positions only) and
/// monotone functions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HflType {
    Prop,
    Int,
    Arrow(Box<HflType>, Box<HflType>),
}

impl HflType {
    pub fn arrow(arg: HflType, res: HflType) -> HflType {
        HflType::Arrow(Box::new(arg), Box::new(res))
    }

    pub fn uncurry(&self) -> (Vec<&HflType>, &HflType) {
        let mut args = Vec::new();
        let mut cur = self;
        while let HflType::Arrow(a, r) = cur {
            args.push(a.as_ref());
            cur = r;
        }
        (args, cur)
    }

    /// Order of the type: 0 for prop/int, else the usual arrow order.
    pub fn order(&self) -> usize {
        match self {
            HflType::Prop | HflType::Int => 0,
            HflType::Arrow(a, r) => r.order().max(a.order() + 1),
        }
    }

    pub fn contains_int(&self) -> bool {
        match self {
            HflType::Int => true,
            HflType::Prop => false,
            HflType::Arrow(a, r) => a.contains_int() || r.contains_int(),
        }
    }
}

impl fmt::Display for HflType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HflType::Prop => f.write_str("prop"),
            HflType::Int => f.write_str("int"),
            HflType::Arrow(a, r) => {
                if matches!(a.as_ref(), HflType::Arrow(..)) {
                    write!(f, "({a}) -> {r}")
                } else {
                    write!(f, "{a} -> {r}")
                }
            }
        }
    }
}

/// Negation-free formulas. Integer expressions (`Int`, `Op`) inhabit type
/// `int` and may appear only below predicates, operators and applications.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Int(BigInt),
    Op(IntOp, Box<Formula>, Box<Formula>),
    Pred(CmpOp, Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Var(String),
    Diamond(String, Box<Formula>),
    Boxm(String, Box<Formula>),
    Mu(String, HflType, Box<Formula>),
    Nu(String, HflType, Box<Formula>),
    Abs(String, HflType, Box<Formula>),
    App(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn pred(op: CmpOp, a: Formula, b: Formula) -> Formula {
        Formula::Pred(op, Box::new(a), Box::new(b))
    }

    pub fn op(op: IntOp, a: Formula, b: Formula) -> Formula {
        Formula::Op(op, Box::new(a), Box::new(b))
    }

    pub fn diamond(label: impl Into<String>, body: Formula) -> Formula {
        Formula::Diamond(label.into(), Box::new(body))
    }

    pub fn boxm(label: impl Into<String>, body: Formula) -> Formula {
        Formula::Boxm(label.into(), Box::new(body))
    }

    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }

    pub fn app(fun: Formula, arg: Formula) -> Formula {
        Formula::App(Box::new(fun), Box::new(arg))
    }

    pub fn apps(fun: Formula, args: impl IntoIterator<Item = Formula>) -> Formula {
        args.into_iter().fold(fun, Formula::app)
    }

    pub fn abs(param: impl Into<String>, ty: HflType, body: Formula) -> Formula {
        Formula::Abs(param.into(), ty, Box::new(body))
    }

    pub fn mu(var: impl Into<String>, ty: HflType, body: Formula) -> Formula {
        Formula::Mu(var.into(), ty, Box::new(body))
    }

    pub fn nu(var: impl Into<String>, ty: HflType, body: Formula) -> Formula {
        Formula::Nu(var.into(), ty, Box::new(body))
    }

    /// `p(a, b) => then` rendered as `not-p(a, b) \/ then`.
    pub fn implies(op: CmpOp, a: Formula, b: Formula, then: Formula) -> Formula {
        Formula::or(Formula::pred(op.negate(), a, b), then)
    }

    pub fn spine(&self) -> (&Formula, Vec<&Formula>) {
        let mut head = self;
        let mut args = Vec::new();
        while let Formula::App(f, a) = head {
            args.push(a.as_ref());
            head = f;
        }
        args.reverse();
        (head, args)
    }

    pub fn contains_fixpoint(&self) -> bool {
        match self {
            Formula::Mu(..) | Formula::Nu(..) => true,
            Formula::True | Formula::False | Formula::Int(_) | Formula::Var(_) => false,
            Formula::Op(_, a, b)
            | Formula::Pred(_, a, b)
            | Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::App(a, b) => a.contains_fixpoint() || b.contains_fixpoint(),
            Formula::Diamond(_, a) | Formula::Boxm(_, a) => a.contains_fixpoint(),
            Formula::Abs(_, _, a) => a.contains_fixpoint(),
        }
    }

    pub fn free_vars(&self) -> std::collections::BTreeSet<String> {
        let mut acc = std::collections::BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut acc);
        acc
    }

    fn free_vars_into(
        &self,
        bound: &mut Vec<String>,
        acc: &mut std::collections::BTreeSet<String>,
    ) {
        match self {
            Formula::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    acc.insert(x.clone());
                }
            }
            Formula::True | Formula::False | Formula::Int(_) => {}
            Formula::Op(_, a, b)
            | Formula::Pred(_, a, b)
            | Formula::Or(a, b)
            | Formula::And(a, b)
            | Formula::App(a, b) => {
                a.free_vars_into(bound, acc);
                b.free_vars_into(bound, acc);
            }
            Formula::Diamond(_, a) | Formula::Boxm(_, a) => a.free_vars_into(bound, acc),
            Formula::Mu(x, _, a) | Formula::Nu(x, _, a) | Formula::Abs(x, _, a) => {
                bound.push(x.clone());
                a.free_vars_into(bound, acc);
                bound.pop();
            }
        }
    }
}

impl Default for Formula {
    fn default() -> Self {
        Formula::True
    }
}

/// Capture-avoiding substitution `[value/var]formula`. Binders shadow; bound
/// variables that would capture free variables of `value` are renamed.
pub fn substitute(formula: &Formula, var: &str, value: &Formula) -> Formula {
    let free_in_value = value.free_vars();
    let mut counter = 0usize;
    subst_inner(formula, var, value, &free_in_value, &mut counter)
}

fn subst_inner(
    f: &Formula,
    var: &str,
    value: &Formula,
    avoid: &std::collections::BTreeSet<String>,
    counter: &mut usize,
) -> Formula {
    use Formula::*;
    match f {
        Var(x) if x == var => value.clone(),
        True | False | Int(_) | Var(_) => f.clone(),
        Op(op, a, b) => Formula::op(
            *op,
            subst_inner(a, var, value, avoid, counter),
            subst_inner(b, var, value, avoid, counter),
        ),
        Pred(op, a, b) => Formula::pred(
            *op,
            subst_inner(a, var, value, avoid, counter),
            subst_inner(b, var, value, avoid, counter),
        ),
        Or(a, b) => Formula::or(
            subst_inner(a, var, value, avoid, counter),
            subst_inner(b, var, value, avoid, counter),
        ),
        And(a, b) => Formula::and(
            subst_inner(a, var, value, avoid, counter),
            subst_inner(b, var, value, avoid, counter),
        ),
        App(a, b) => Formula::app(
            subst_inner(a, var, value, avoid, counter),
            subst_inner(b, var, value, avoid, counter),
        ),
        Diamond(l, a) => Formula::diamond(l.clone(), subst_inner(a, var, value, avoid, counter)),
        Boxm(l, a) => Formula::boxm(l.clone(), subst_inner(a, var, value, avoid, counter)),
        Mu(x, ty, body) | Nu(x, ty, body) | Abs(x, ty, body) => {
            let rebuild = |x: String, ty: HflType, body: Formula| match f {
                Mu(..) => Formula::mu(x, ty, body),
                Nu(..) => Formula::nu(x, ty, body),
                _ => Formula::abs(x, ty, body),
            };
            if x == var {
                return f.clone();
            }
            if avoid.contains(x) {
                // rename the binder before substituting underneath
                let fresh = loop {
                    let candidate = format!("{x}'{counter}");
                    *counter += 1;
                    if !avoid.contains(&candidate) && !body.free_vars().contains(&candidate) {
                        break candidate;
                    }
                };
                let renamed = substitute(body, x, &Formula::Var(fresh.clone()));
                rebuild(
                    fresh,
                    ty.clone(),
                    subst_inner(&renamed, var, value, avoid, counter),
                )
            } else {
                rebuild(
                    x.clone(),
                    ty.clone(),
                    subst_inner(body, var, value, avoid, counter),
                )
            }
        }
    }
}

/// Alpha-equivalence of formulas under an initial pairing of free variables.
pub fn alpha_eq_under(a: &Formula, b: &Formula, pairing: &[(String, String)]) -> bool {
    fn go(a: &Formula, b: &Formula, env: &mut Vec<(String, String)>) -> bool {
        use Formula::*;
        match (a, b) {
            (True, True) | (False, False) => true,
            (Int(m), Int(n)) => m == n,
            (Op(o1, a1, b1), Op(o2, a2, b2)) => o1 == o2 && go(a1, a2, env) && go(b1, b2, env),
            (Pred(o1, a1, b1), Pred(o2, a2, b2)) => {
                o1 == o2 && go(a1, a2, env) && go(b1, b2, env)
            }
            (Or(a1, b1), Or(a2, b2)) | (And(a1, b1), And(a2, b2)) | (App(a1, b1), App(a2, b2)) => {
                go(a1, a2, env) && go(b1, b2, env)
            }
            (Diamond(l1, a1), Diamond(l2, a2)) | (Boxm(l1, a1), Boxm(l2, a2)) => {
                l1 == l2 && go(a1, a2, env)
            }
            (Var(x), Var(y)) => env
                .iter()
                .rev()
                .find(|(l, r)| l == x || r == y)
                .map(|(l, r)| l == x && r == y)
                .unwrap_or(x == y),
            (Mu(x, t1, a1), Mu(y, t2, a2))
            | (Nu(x, t1, a1), Nu(y, t2, a2))
            | (Abs(x, t1, a1), Abs(y, t2, a2)) => {
                if t1 != t2 {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(a1, a2, env);
                env.pop();
                r
            }
            _ => false,
        }
    }
    let mut env = pairing.to_vec();
    go(a, b, &mut env)
}

pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    alpha_eq_under(a, b, &[])
}

/// Tag of a fixpoint equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fix {
    Mu,
    Nu,
}

impl Fix {
    pub fn flip(self) -> Fix {
        match self {
            Fix::Mu => Fix::Nu,
            Fix::Nu => Fix::Mu,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Fix::Mu => "mu",
            Fix::Nu => "nu",
        }
    }
}

/// One equation `var =fix rhs`. The right-hand side is fixpoint-free;
/// parameters are leading lambdas of `rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HesEq {
    pub var: String,
    pub ty: HflType,
    pub fix: Fix,
    pub rhs: Formula,
}

/// A hierarchical equation system: equations in order of significance
/// (first equation outermost) plus a fixpoint-free main formula.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Hes {
    pub eqs: Vec<HesEq>,
    pub main: Formula,
}

impl Hes {
    pub fn eq_index(&self, var: &str) -> Option<usize> {
        self.eqs.iter().position(|e| e.var == var)
    }

    /// Game priority of each equation: `2(n-i)` for nu, `2(n-i)+1` for mu,
    /// counting equations 1-based from the front (outermost first).
    pub fn priorities(&self) -> Vec<u32> {
        let n = self.eqs.len() as u32;
        self.eqs
            .iter()
            .enumerate()
            .map(|(i, eq)| {
                let base = 2 * (n - 1 - i as u32);
                match eq.fix {
                    Fix::Nu => base,
                    Fix::Mu => base + 1,
                }
            })
            .collect()
    }
}

/// Alpha-equivalence of equation systems: equation variables are paired
/// positionally, so names may differ but order, tags and types must agree.
pub fn hes_alpha_eq(a: &Hes, b: &Hes) -> bool {
    if a.eqs.len() != b.eqs.len() {
        return false;
    }
    let pairing: Vec<(String, String)> = a
        .eqs
        .iter()
        .zip(&b.eqs)
        .map(|(x, y)| (x.var.clone(), y.var.clone()))
        .collect();
    for (x, y) in a.eqs.iter().zip(&b.eqs) {
        if x.fix != y.fix || x.ty != y.ty {
            return false;
        }
        if !alpha_eq_under(&x.rhs, &y.rhs, &pairing) {
            return false;
        }
    }
    alpha_eq_under(&a.main, &b.main, &pairing)
}

#[derive(Debug, Error)]
pub enum HflError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("ill-typed formula at `{at}`: expected {expected}, found {found}")]
    IllTyped {
        at: String,
        expected: String,
        found: String,
    },
    #[error("integer type in result position at `{0}`")]
    IntResult(String),
    #[error("cannot infer types in equation system: {0}")]
    Inference(String),
    #[error("equation right-hand sides must be fixpoint-free (`{0}`)")]
    FixpointInRhs(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_avoids_capture() {
        // [x := y] in (\y. x) must not capture
        let f = Formula::abs("y", HflType::Prop, Formula::var("x"));
        let result = substitute(&f, "x", &Formula::var("y"));
        let Formula::Abs(binder, _, body) = &result else {
            panic!("expected lambda")
        };
        assert_ne!(binder, "y");
        assert_eq!(**body, Formula::var("y"));
    }

    #[test]
    fn alpha_equivalence_ignores_binder_names() {
        let a = Formula::mu(
            "x",
            HflType::Prop,
            Formula::or(Formula::var("x"), Formula::diamond("a", Formula::var("x"))),
        );
        let b = Formula::mu(
            "z",
            HflType::Prop,
            Formula::or(Formula::var("z"), Formula::diamond("a", Formula::var("z"))),
        );
        assert!(alpha_eq(&a, &b));
        let c = Formula::nu(
            "z",
            HflType::Prop,
            Formula::or(Formula::var("z"), Formula::diamond("a", Formula::var("z"))),
        );
        assert!(!alpha_eq(&a, &c));
    }

    #[test]
    fn priorities_follow_order_and_tags() {
        let hes = Hes {
            eqs: vec![
                HesEq {
                    var: "x".into(),
                    ty: HflType::Prop,
                    fix: Fix::Nu,
                    rhs: Formula::var("y"),
                },
                HesEq {
                    var: "y".into(),
                    ty: HflType::Prop,
                    fix: Fix::Mu,
                    rhs: Formula::var("x"),
                },
            ],
            main: Formula::var("x"),
        };
        assert_eq!(hes.priorities(), vec![2, 1]);
    }
}
