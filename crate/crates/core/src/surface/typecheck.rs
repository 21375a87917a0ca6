//! Simple-type reconstruction for programs.
//!
//! Definitions carry no annotations, so checking is unification-based
//! inference: every definition body must have type `unit`, guard operands are
//! `int`, and `int` may appear only in argument positions. Unconstrained
//! parameters default to `unit`.

use super::{Cond, Program, SimpleType, SurfaceError, Term};
use std::collections::HashMap;
use std::fmt;

/// Maps each function name to its inferred simple type.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeEnv {
    pub bindings: indexmap::IndexMap<String, SimpleType>,
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ty) in &self.bindings {
            writeln!(f, "{name} : {ty}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Var(usize),
    Unit,
    Int,
    Arrow(Box<Ty>, Box<Ty>),
}

struct Infer {
    subst: Vec<Option<Ty>>,
}

impl Infer {
    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Var(self.subst.len() - 1)
    }

    fn resolve(&self, ty: &Ty) -> Ty {
        match ty {
            Ty::Var(v) => match &self.subst[*v] {
                Some(t) => self.resolve(&t.clone()),
                None => Ty::Var(*v),
            },
            Ty::Arrow(a, r) => Ty::Arrow(Box::new(self.resolve(a)), Box::new(self.resolve(r))),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: usize, ty: &Ty) -> bool {
        match self.resolve(ty) {
            Ty::Var(w) => v == w,
            Ty::Arrow(a, r) => self.occurs(v, &a) || self.occurs(v, &r),
            _ => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty, at: &dyn fmt::Display) -> Result<(), SurfaceError> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (a, b) {
            (Ty::Var(v), t) | (t, Ty::Var(v)) => {
                if let Ty::Var(w) = t {
                    if v == w {
                        return Ok(());
                    }
                }
                if self.occurs(v, &t) {
                    return Err(SurfaceError::RecursiveType(at.to_string()));
                }
                self.subst[v] = Some(t);
                Ok(())
            }
            (Ty::Unit, Ty::Unit) | (Ty::Int, Ty::Int) => Ok(()),
            (Ty::Arrow(a1, r1), Ty::Arrow(a2, r2)) => {
                self.unify(&a1, &a2, at)?;
                self.unify(&r1, &r2, at)
            }
            (found, expected) => Err(SurfaceError::TypeMismatch {
                at: at.to_string(),
                expected: self.show(&expected),
                found: self.show(&found),
            }),
        }
    }

    fn show(&self, ty: &Ty) -> String {
        match self.resolve(ty) {
            Ty::Var(_) => "_".into(),
            Ty::Unit => "unit".into(),
            Ty::Int => "int".into(),
            Ty::Arrow(a, r) => format!("({} -> {})", self.show(&a), self.show(&r)),
        }
    }

    /// Defaults unresolved variables to `unit`.
    fn finalize(&self, ty: &Ty) -> SimpleType {
        match self.resolve(ty) {
            Ty::Var(_) | Ty::Unit => SimpleType::Unit,
            Ty::Int => SimpleType::Int,
            Ty::Arrow(a, r) => SimpleType::arrow(self.finalize(&a), self.finalize(&r)),
        }
    }
}

struct Display2<'a>(&'a Term);

impl fmt::Display for Display2<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::show_term(self.0))
    }
}

fn check_term(
    inf: &mut Infer,
    env: &HashMap<String, Ty>,
    term: &Term,
) -> Result<Ty, SurfaceError> {
    match term {
        Term::Unit => Ok(Ty::Unit),
        Term::Int(_) => Ok(Ty::Int),
        Term::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| SurfaceError::Unbound(x.clone())),
        Term::Op(_, a, b) => {
            let ta = check_term(inf, env, a)?;
            inf.unify(&ta, &Ty::Int, &Display2(a))?;
            let tb = check_term(inf, env, b)?;
            inf.unify(&tb, &Ty::Int, &Display2(b))?;
            Ok(Ty::Int)
        }
        Term::If(c, t1, t2) => {
            check_cond(inf, env, c)?;
            let ty1 = check_term(inf, env, t1)?;
            inf.unify(&ty1, &Ty::Unit, &Display2(t1))?;
            let ty2 = check_term(inf, env, t2)?;
            inf.unify(&ty2, &Ty::Unit, &Display2(t2))?;
            Ok(Ty::Unit)
        }
        Term::Event(_, body) => {
            let ty = check_term(inf, env, body)?;
            inf.unify(&ty, &Ty::Unit, &Display2(body))?;
            Ok(Ty::Unit)
        }
        Term::NonDet(a, b) => {
            let ta = check_term(inf, env, a)?;
            inf.unify(&ta, &Ty::Unit, &Display2(a))?;
            let tb = check_term(inf, env, b)?;
            inf.unify(&tb, &Ty::Unit, &Display2(b))?;
            Ok(Ty::Unit)
        }
        Term::App(f, a) => {
            let tf = check_term(inf, env, f)?;
            let ta = check_term(inf, env, a)?;
            let res = inf.fresh();
            inf.unify(
                &tf,
                &Ty::Arrow(Box::new(ta), Box::new(res.clone())),
                &Display2(term),
            )?;
            Ok(res)
        }
        Term::Abs(params, body) => {
            let mut inner = env.clone();
            let mut tys = Vec::new();
            for p in params {
                let tv = inf.fresh();
                inner.insert(p.clone(), tv.clone());
                tys.push(tv);
            }
            let tbody = check_term(inf, &inner, body)?;
            Ok(tys
                .into_iter()
                .rev()
                .fold(tbody, |acc, t| Ty::Arrow(Box::new(t), Box::new(acc))))
        }
    }
}

fn check_cond(inf: &mut Infer, env: &HashMap<String, Ty>, cond: &Cond) -> Result<(), SurfaceError> {
    match cond {
        Cond::Cmp(_, a, b) => {
            let ta = check_term(inf, env, a)?;
            inf.unify(&ta, &Ty::Int, &Display2(a))?;
            let tb = check_term(inf, env, b)?;
            inf.unify(&tb, &Ty::Int, &Display2(b))?;
            Ok(())
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            check_cond(inf, env, a)?;
            check_cond(inf, env, b)
        }
    }
}

/// Validates that `int` appears only in argument positions (results are
/// `unit` or arrows by construction of the type grammar, so it suffices to
/// check the final result of each definition).
fn validate_result(ty: &SimpleType) -> bool {
    match ty {
        SimpleType::Int => false,
        SimpleType::Unit => true,
        SimpleType::Arrow(_, r) => validate_result(r),
    }
}

/// Infers the simple types of every definition. Each body must have type
/// `unit`; the main definition must be nullary `unit`.
pub fn typecheck_program(program: &Program) -> Result<TypeEnv, SurfaceError> {
    let mut inf = Infer { subst: Vec::new() };
    let mut env: HashMap<String, Ty> = HashMap::new();
    let mut fn_tys: Vec<(String, Ty)> = Vec::new();
    for (name, def) in &program.defs {
        let mut ty = Ty::Unit;
        let mut params = Vec::new();
        for _ in &def.params {
            params.push(inf.fresh());
        }
        for p in params.iter().rev() {
            ty = Ty::Arrow(Box::new(p.clone()), Box::new(ty));
        }
        env.insert(name.clone(), ty.clone());
        fn_tys.push((name.clone(), ty));
    }
    for (name, def) in &program.defs {
        let mut inner = env.clone();
        let fn_ty = inf.resolve(&env[name]);
        let mut cur = fn_ty;
        for p in &def.params {
            let Ty::Arrow(a, r) = cur else { unreachable!() };
            inner.insert(p.clone(), *a);
            cur = *r;
        }
        let tbody = check_term(&mut inf, &inner, &def.body)?;
        inf.unify(&tbody, &Ty::Unit, &Display2(&def.body))?;
    }
    let mut bindings = indexmap::IndexMap::new();
    for (name, ty) in fn_tys {
        let simple = inf.finalize(&ty);
        if !validate_result(&simple) {
            return Err(SurfaceError::TypeMismatch {
                at: name.clone(),
                expected: "a result of type unit".into(),
                found: simple.to_string(),
            });
        }
        bindings.insert(name, simple);
    }
    Ok(TypeEnv { bindings })
}

/// Infers the simple type of a single term whose free variables have known
/// (rigid) types: definitions from `env`, locals from `locals`. Lambda
/// parameters get fresh variables resolved by the body's constraints and
/// default to `unit` when unconstrained.
pub(crate) fn infer_term_type(
    env: &TypeEnv,
    locals: &[(String, SimpleType)],
    term: &Term,
) -> Result<SimpleType, SurfaceError> {
    fn rigid(ty: &SimpleType) -> Ty {
        match ty {
            SimpleType::Unit => Ty::Unit,
            SimpleType::Int => Ty::Int,
            SimpleType::Arrow(a, r) => Ty::Arrow(Box::new(rigid(a)), Box::new(rigid(r))),
        }
    }
    let mut inf = Infer { subst: Vec::new() };
    let mut scope: HashMap<String, Ty> = env
        .bindings
        .iter()
        .map(|(n, t)| (n.clone(), rigid(t)))
        .collect();
    for (n, t) in locals {
        scope.insert(n.clone(), rigid(t));
    }
    let ty = check_term(&mut inf, &scope, term)?;
    Ok(inf.finalize(&ty))
}

/// Computes the simple type of a term under known definition and variable
/// types. Used by the translators after whole-program inference; panics on
/// ill-typed input, which inference has already ruled out.
pub(crate) fn type_of_term(
    env: &TypeEnv,
    locals: &HashMap<String, SimpleType>,
    term: &Term,
) -> SimpleType {
    match term {
        Term::Unit => SimpleType::Unit,
        Term::Int(_) | Term::Op(..) => SimpleType::Int,
        Term::Var(x) => locals
            .get(x)
            .or_else(|| env.bindings.get(x))
            .unwrap_or_else(|| panic!("unbound variable `{x}` after typechecking"))
            .clone(),
        Term::If(..) | Term::Event(..) | Term::NonDet(..) => SimpleType::Unit,
        Term::App(f, _) => match type_of_term(env, locals, f) {
            SimpleType::Arrow(_, r) => *r,
            other => panic!("applied non-function of type {other}"),
        },
        Term::Abs(params, _) => {
            // Parameter types are not recoverable without inference; callers
            // lift lambdas before asking for their types.
            panic!("type_of_term on unlifted lambda (\\{} ...)", params.join(" "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_program;

    #[test]
    fn loop_gets_unit_arrow() {
        let p = parse_program("loop x = loop x; main = loop (event a; ())").unwrap();
        let env = typecheck_program(&p).unwrap();
        assert_eq!(
            env.bindings["loop"],
            SimpleType::arrow(SimpleType::Unit, SimpleType::Unit)
        );
        assert_eq!(env.bindings["main"], SimpleType::Unit);
    }

    #[test]
    fn sum_in_continuation_style() {
        let p = parse_program(
            "main = sum 3 (\\r. assert(r >= 3));\n\
             sum x k = if x = 0 then k 0 else sum (x - 1) (\\r. k (x + r))",
        )
        .unwrap();
        let env = typecheck_program(&p).unwrap();
        assert_eq!(env.bindings["main"], SimpleType::Unit);
        assert_eq!(
            env.bindings["sum"],
            SimpleType::arrow(
                SimpleType::Int,
                SimpleType::arrow(
                    SimpleType::arrow(SimpleType::Int, SimpleType::Unit),
                    SimpleType::Unit
                )
            )
        );
    }

    #[test]
    fn ill_typed_operand_rejected() {
        let p = parse_program("f = 1 + (); main = ()").unwrap();
        assert!(matches!(
            typecheck_program(&p),
            Err(SurfaceError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn unbound_variable_rejected() {
        let p = parse_program("main = g 1").unwrap();
        assert!(matches!(typecheck_program(&p), Err(SurfaceError::Unbound(_))));
    }

    #[test]
    fn self_application_rejected() {
        let p = parse_program("f x = x x; main = ()").unwrap();
        assert!(matches!(
            typecheck_program(&p),
            Err(SurfaceError::RecursiveType(_))
        ));
    }

    #[test]
    fn higher_order_program_types() {
        let p = parse_program(
            "app h x = h x;\n\
             f_b x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             f_a x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             main = f_b 5",
        )
        .unwrap();
        let env = typecheck_program(&p).unwrap();
        let int_unit = SimpleType::arrow(SimpleType::Int, SimpleType::Unit);
        assert_eq!(env.bindings["f_a"], int_unit);
        assert_eq!(
            env.bindings["app"],
            SimpleType::arrow(int_unit.clone(), int_unit)
        );
    }
}
