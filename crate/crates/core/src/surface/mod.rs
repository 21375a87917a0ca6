//! The source language: a call-by-name higher-order functional language with
//! integers, events and non-deterministic choice.

mod normalize;
mod parser;
mod print;
pub(crate) mod typecheck;

pub use normalize::{instrument_total, lift_lambdas, normalize_program, totality_check};
pub use parser::parse_program;
pub use print::{print_program, print_term};
pub use typecheck::{typecheck_program, TypeEnv};

use crate::ops::{CmpOp, IntOp};
use indexmap::IndexMap;
use num_bigint::BigInt;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Terms of the source language. Abstractions are permitted syntactically
/// anywhere but only ever reach the head of a redex through full application;
/// `normalize_program` lifts them to top-level definitions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Unit,
    Var(String),
    Int(BigInt),
    Op(IntOp, Box<Term>, Box<Term>),
    If(Cond, Box<Term>, Box<Term>),
    Event(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    NonDet(Box<Term>, Box<Term>),
    Abs(Vec<String>, Box<Term>),
}

/// Guards of conditionals: boolean combinations of integer comparisons.
/// Negation is structural (De Morgan plus complementary comparison), matching
/// the requirement that every predicate comes with its negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cond {
    Cmp(CmpOp, Box<Term>, Box<Term>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    pub fn cmp(op: CmpOp, lhs: Term, rhs: Term) -> Cond {
        Cond::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn negate(&self) -> Cond {
        match self {
            Cond::Cmp(op, a, b) => Cond::Cmp(op.negate(), a.clone(), b.clone()),
            Cond::And(a, b) => Cond::Or(Box::new(a.negate()), Box::new(b.negate())),
            Cond::Or(a, b) => Cond::And(Box::new(a.negate()), Box::new(b.negate())),
        }
    }
}

impl Term {
    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// Applies `fun` to the arguments in order.
    pub fn apps(fun: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(fun, Term::app)
    }

    /// Splits an application spine into its head and argument list.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut head = self;
        let mut args = Vec::new();
        while let Term::App(f, a) = head {
            args.push(a.as_ref());
            head = f;
        }
        args.reverse();
        (head, args)
    }
}

/// A single function definition `f x1 .. xk = body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub params: Vec<String>,
    pub body: Term,
}

/// A program: named definitions plus the name of the main function.
/// Definition order is preserved; it determines equation order in the
/// translations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub defs: IndexMap<String, Def>,
    pub main: String,
}

impl Program {
    pub fn main_def(&self) -> &Def {
        &self.defs[&self.main]
    }

    /// Event labels occurring anywhere in the program.
    pub fn event_alphabet(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        for def in self.defs.values() {
            collect_events(&def.body, &mut acc);
        }
        acc
    }

    /// True when the main definition is nullary and present. Programs in this
    /// form are accepted by the translators.
    pub fn is_normalized(&self) -> bool {
        self.defs
            .get(&self.main)
            .is_some_and(|d| d.params.is_empty())
    }

    /// Picks an identifier not used by any definition or binder.
    pub fn fresh_name(&self, stem: &str) -> String {
        let mut used: BTreeSet<String> = self.defs.keys().cloned().collect();
        for def in self.defs.values() {
            used.extend(def.params.iter().cloned());
            collect_names(&def.body, &mut used);
        }
        if !used.contains(stem) {
            return stem.to_string();
        }
        for n in 0.. {
            let candidate = format!("{stem}{n}");
            if !used.contains(&candidate) {
                return candidate;
            }
        }
        unreachable!()
    }
}

fn collect_events(t: &Term, acc: &mut BTreeSet<String>) {
    match t {
        Term::Event(l, body) => {
            acc.insert(l.clone());
            collect_events(body, acc);
        }
        Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
            collect_events(a, acc);
            collect_events(b, acc);
        }
        Term::If(c, a, b) => {
            collect_cond_events(c, acc);
            collect_events(a, acc);
            collect_events(b, acc);
        }
        Term::Abs(_, body) => collect_events(body, acc),
        Term::Unit | Term::Var(_) | Term::Int(_) => {}
    }
}

fn collect_cond_events(c: &Cond, acc: &mut BTreeSet<String>) {
    match c {
        Cond::Cmp(_, a, b) => {
            collect_events(a, acc);
            collect_events(b, acc);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            collect_cond_events(a, acc);
            collect_cond_events(b, acc);
        }
    }
}

pub(crate) fn collect_names(t: &Term, acc: &mut BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            acc.insert(x.clone());
        }
        Term::Event(_, body) => collect_names(body, acc),
        Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
            collect_names(a, acc);
            collect_names(b, acc);
        }
        Term::If(c, a, b) => {
            collect_cond_names(c, acc);
            collect_names(a, acc);
            collect_names(b, acc);
        }
        Term::Abs(xs, body) => {
            acc.extend(xs.iter().cloned());
            collect_names(body, acc);
        }
        Term::Unit | Term::Int(_) => {}
    }
}

fn collect_cond_names(c: &Cond, acc: &mut BTreeSet<String>) {
    match c {
        Cond::Cmp(_, a, b) => {
            collect_names(a, acc);
            collect_names(b, acc);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            collect_cond_names(a, acc);
            collect_cond_names(b, acc);
        }
    }
}

/// Simple types of the source language. `Int` may appear only in argument
/// positions; results are `Unit` or arrows.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimpleType {
    Unit,
    Int,
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn arrow(arg: SimpleType, res: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(arg), Box::new(res))
    }

    /// Argument types of a fully uncurried arrow, with the final result.
    pub fn uncurry(&self) -> (Vec<&SimpleType>, &SimpleType) {
        let mut args = Vec::new();
        let mut cur = self;
        while let SimpleType::Arrow(a, r) = cur {
            args.push(a.as_ref());
            cur = r;
        }
        (args, cur)
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Unit => f.write_str("unit"),
            SimpleType::Int => f.write_str("int"),
            SimpleType::Arrow(a, r) => {
                if matches!(a.as_ref(), SimpleType::Arrow(..)) {
                    write!(f, "({a}) -> {r}")
                } else {
                    write!(f, "{a} -> {r}")
                }
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("duplicate definition of `{0}`")]
    DuplicateDef(String),
    #[error("no `main` definition")]
    NoMain,
    #[error("`main` must take no parameters")]
    MainHasParams,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type mismatch at `{at}`: expected {expected}, found {found}")]
    TypeMismatch {
        at: String,
        expected: String,
        found: String,
    },
    #[error("recursive type constraint at `{0}`")]
    RecursiveType(String),
    #[error("event `{0}` already occurs in the program")]
    EventInUse(String),
    #[error(
        "program may terminate or starve events ({0}); apply instrument_total first"
    )]
    NotTotal(String),
}
