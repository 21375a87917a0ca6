//! Reductions from programs to equation systems: may-reachability,
//! must-reachability, trace-language containment, and call-sequence analysis
//! under a priority assignment. The intersection-type transformation lives in
//! [`intersection`].

pub mod intersection;

pub use intersection::{
    canonical_transform, env_raise, infer_intersection_transform, prune_environment,
    temporal_pipeline, transform_term, ArgType, InterType, InterTypeEnv, Mangler, TopLevelEnv,
    TransformOutput,
};

use crate::hfl::{Fix, Formula, Hes, HesEq, HflType};
use crate::surface::{Cond, Program, SimpleType, Term, TypeEnv};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("priority assignment missing function `{0}`")]
    MissingPriority(String),
    #[error("priority order inconsistent: `{0}` listed out of order")]
    BadOrder(String),
    #[error(transparent)]
    Surface(#[from] crate::surface::SurfaceError),
    #[error("{0}")]
    Totality(String),
}

/// Assigns a natural-number priority to every function of a program.
pub type PriorityAssignment = BTreeMap<String, u32>;

fn simple_to_hfl(ty: &SimpleType) -> HflType {
    match ty {
        SimpleType::Unit => HflType::Prop,
        SimpleType::Int => HflType::Int,
        SimpleType::Arrow(a, r) => HflType::arrow(simple_to_hfl(a), simple_to_hfl(r)),
    }
}

/// How each translation renders the unit value, events, choices and guards.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Flavor {
    /// Some execution raises the event: `()` is false, events are true,
    /// choice is disjunction, guards split disjunctively.
    May,
    /// Every execution raises the event: `()` is false, events are true,
    /// choice is conjunction, guards split by implication.
    Must,
    /// All finite traces stay in the property language: `()` is true, events
    /// become diamonds, choice is conjunction.
    Path,
    /// Call-sequence analysis: events are erased entirely, `()` is true,
    /// choice is conjunction.
    Csa,
}

fn cond_formula(c: &Cond) -> Formula {
    match c {
        Cond::Cmp(op, a, b) => Formula::pred(*op, term_int(a), term_int(b)),
        Cond::And(a, b) => Formula::and(cond_formula(a), cond_formula(b)),
        Cond::Or(a, b) => Formula::or(cond_formula(a), cond_formula(b)),
    }
}

fn term_int(t: &Term) -> Formula {
    match t {
        Term::Int(n) => Formula::Int(n.clone()),
        Term::Var(x) => Formula::var(x.clone()),
        Term::Op(op, a, b) => Formula::op(*op, term_int(a), term_int(b)),
        other => unreachable!("guard operand is not arithmetic: {other:?}"),
    }
}

fn translate_term(flavor: Flavor, t: &Term) -> Formula {
    match t {
        Term::Unit => match flavor {
            Flavor::May | Flavor::Must => Formula::False,
            Flavor::Path | Flavor::Csa => Formula::True,
        },
        Term::Var(x) => Formula::var(x.clone()),
        Term::Int(n) => Formula::Int(n.clone()),
        Term::Op(op, a, b) => {
            Formula::op(*op, translate_term(flavor, a), translate_term(flavor, b))
        }
        Term::If(c, a, b) => {
            let ta = translate_term(flavor, a);
            let tb = translate_term(flavor, b);
            match flavor {
                // (p /\ a) \/ (not-p /\ b)
                Flavor::May => Formula::or(
                    Formula::and(cond_formula(c), ta),
                    Formula::and(cond_formula(&c.negate()), tb),
                ),
                // (p => a) /\ (not-p => b)
                Flavor::Must | Flavor::Path | Flavor::Csa => Formula::and(
                    Formula::or(cond_formula(&c.negate()), ta),
                    Formula::or(cond_formula(c), tb),
                ),
            }
        }
        Term::Event(label, body) => match flavor {
            Flavor::May | Flavor::Must => Formula::True,
            Flavor::Path => Formula::diamond(label.clone(), translate_term(flavor, body)),
            Flavor::Csa => translate_term(flavor, body),
        },
        Term::App(f, a) => {
            Formula::app(translate_term(flavor, f), translate_term(flavor, a))
        }
        Term::NonDet(a, b) => {
            let ta = translate_term(flavor, a);
            let tb = translate_term(flavor, b);
            match flavor {
                Flavor::May => Formula::or(ta, tb),
                Flavor::Must | Flavor::Path | Flavor::Csa => Formula::and(ta, tb),
            }
        }
        Term::Abs(params, _) => {
            // Lambdas need type context; the typed wrapper handles them.
            unreachable!(
                "translate_term on bare lambda (\\{} ...); use translate_term_typed",
                params.join(" ")
            )
        }
    }
}

/// Translation that consults simple types to annotate inline lambdas.
fn translate_term_typed(
    flavor: Flavor,
    env: &TypeEnv,
    locals: &mut Vec<(String, SimpleType)>,
    t: &Term,
) -> Formula {
    match t {
        Term::Abs(params, body) => {
            let ty = abs_type(env, locals, t);
            let (arg_tys, _) = ty.uncurry();
            let arg_tys: Vec<SimpleType> = arg_tys.into_iter().cloned().collect();
            for (p, pt) in params.iter().zip(&arg_tys) {
                locals.push((p.clone(), pt.clone()));
            }
            let inner = translate_term_typed(flavor, env, locals, body);
            for _ in params {
                locals.pop();
            }
            params
                .iter()
                .zip(&arg_tys)
                .rev()
                .fold(inner, |acc, (p, pt)| {
                    Formula::abs(p.clone(), simple_to_hfl(pt), acc)
                })
        }
        Term::If(c, a, b) => {
            let ta = translate_term_typed(flavor, env, locals, a);
            let tb = translate_term_typed(flavor, env, locals, b);
            match flavor {
                Flavor::May => Formula::or(
                    Formula::and(cond_formula(c), ta),
                    Formula::and(cond_formula(&c.negate()), tb),
                ),
                Flavor::Must | Flavor::Path | Flavor::Csa => Formula::and(
                    Formula::or(cond_formula(&c.negate()), ta),
                    Formula::or(cond_formula(c), tb),
                ),
            }
        }
        Term::Event(label, body) => match flavor {
            Flavor::May | Flavor::Must => Formula::True,
            Flavor::Path => {
                Formula::diamond(label.clone(), translate_term_typed(flavor, env, locals, body))
            }
            Flavor::Csa => translate_term_typed(flavor, env, locals, body),
        },
        Term::App(f, a) => Formula::app(
            translate_term_typed(flavor, env, locals, f),
            translate_term_typed(flavor, env, locals, a),
        ),
        Term::NonDet(a, b) => {
            let ta = translate_term_typed(flavor, env, locals, a);
            let tb = translate_term_typed(flavor, env, locals, b);
            match flavor {
                Flavor::May => Formula::or(ta, tb),
                Flavor::Must | Flavor::Path | Flavor::Csa => Formula::and(ta, tb),
            }
        }
        _ => translate_term(flavor, t),
    }
}

/// Infers the simple type of an inline lambda from its body's constraints,
/// given the (already inferred) types of definitions and in-scope variables.
/// Parameters left unconstrained by the body default to `unit`.
fn abs_type(env: &TypeEnv, locals: &[(String, SimpleType)], t: &Term) -> SimpleType {
    crate::surface::typecheck::infer_term_type(env, locals, t)
        .expect("lambda retyping after whole-program inference")
}

/// Keeps only the watched event: other labels are erased (their wrapper
/// dropped), preserving reductions and occurrences of `keep`.
fn erase_other_events(t: &Term, keep: &str) -> Term {
    match t {
        Term::Event(l, body) if l != keep => erase_other_events(body, keep),
        Term::Event(l, body) => Term::Event(l.clone(), Box::new(erase_other_events(body, keep))),
        Term::Unit | Term::Var(_) | Term::Int(_) => t.clone(),
        Term::Op(op, a, b) => Term::Op(
            *op,
            Box::new(erase_other_events(a, keep)),
            Box::new(erase_other_events(b, keep)),
        ),
        Term::If(c, a, b) => Term::If(
            c.clone(),
            Box::new(erase_other_events(a, keep)),
            Box::new(erase_other_events(b, keep)),
        ),
        Term::App(f, a) => Term::app(erase_other_events(f, keep), erase_other_events(a, keep)),
        Term::NonDet(a, b) => Term::NonDet(
            Box::new(erase_other_events(a, keep)),
            Box::new(erase_other_events(b, keep)),
        ),
        Term::Abs(params, body) => {
            Term::Abs(params.clone(), Box::new(erase_other_events(body, keep)))
        }
    }
}

/// Equations for all definitions except `main` when `main` is referenced by
/// nothing; the main definition's body becomes the main formula. A
/// self-referential `main` keeps its equation.
fn build_hes(
    flavor: Flavor,
    p: &Program,
    env: &TypeEnv,
    fix_of: impl Fn(&str) -> Fix,
    order: &[String],
) -> Hes {
    let main_referenced = p.defs.values().any(|def| {
        let mut names = std::collections::BTreeSet::new();
        crate::surface::collect_names(&def.body, &mut names);
        names.contains(&p.main)
    });
    let mut eqs = Vec::new();
    for name in order {
        if name == &p.main && !main_referenced {
            continue;
        }
        let def = &p.defs[name];
        let ty = simple_to_hfl(&env.bindings[name]);
        let (arg_tys, _) = env.bindings[name].uncurry();
        let mut locals: Vec<(String, SimpleType)> = def
            .params
            .iter()
            .cloned()
            .zip(arg_tys.iter().map(|t| (*t).clone()))
            .collect();
        let body = translate_term_typed(flavor, env, &mut locals, &def.body);
        let rhs = def
            .params
            .iter()
            .zip(arg_tys.iter())
            .rev()
            .fold(body, |acc, (x, t)| {
                Formula::abs(x.clone(), simple_to_hfl(t), acc)
            });
        eqs.push(HesEq { var: name.clone(), ty, fix: fix_of(name), rhs });
    }
    let main = if main_referenced {
        Formula::var(p.main.clone())
    } else {
        let mut locals = Vec::new();
        translate_term_typed(flavor, env, &mut locals, &p.main_def().body)
    };
    Hes { eqs, main }
}

fn prepare(p: &Program, watched: Option<&str>) -> Result<(Program, TypeEnv), TranslateError> {
    let q = match watched {
        Some(event) => {
            let mut q = p.clone();
            for def in q.defs.values_mut() {
                def.body = erase_other_events(&def.body, event);
            }
            q
        }
        None => p.clone(),
    };
    let env = crate::surface::typecheck_program(&q)?;
    Ok((q, env))
}

/// Characterizes "some trace raises `event`" over the trivial LTS: all
/// equations are least fixpoints, `()` is false, the watched event is true,
/// choice is disjunction.
pub fn translate_may(p: &Program, event: &str) -> Result<Hes, TranslateError> {
    let (q, env) = prepare(p, Some(event))?;
    let order: Vec<String> = q.defs.keys().cloned().collect();
    Ok(build_hes(Flavor::May, &q, &env, |_| Fix::Mu, &order))
}

/// Characterizes "every full trace raises `event`": as may-reachability but
/// with choice and guard splitting conjunctive.
pub fn translate_must(p: &Program, event: &str) -> Result<Hes, TranslateError> {
    let (q, env) = prepare(p, Some(event))?;
    let order: Vec<String> = q.defs.keys().cloned().collect();
    Ok(build_hes(Flavor::Must, &q, &env, |_| Fix::Mu, &order))
}

/// Characterizes "every finite trace belongs to the prefix-closed language"
/// over the language's LTS: events become diamonds, all equations are
/// greatest fixpoints.
pub fn translate_path(p: &Program) -> Result<Hes, TranslateError> {
    let (q, env) = prepare(p, None)?;
    let order: Vec<String> = q.defs.keys().cloned().collect();
    Ok(build_hes(Flavor::Path, &q, &env, |_| Fix::Nu, &order))
}

/// Normalizes a priority assignment to the range `{2(n-i), 2(n-i)+1}`
/// preserving each function's parity; `order` must list the functions in
/// non-increasing priority order.
pub fn normalize_priorities(
    omega: &PriorityAssignment,
    order: &[String],
) -> Result<PriorityAssignment, TranslateError> {
    let n = order.len() as u32;
    let mut last: Option<u32> = None;
    let mut out = PriorityAssignment::new();
    for (i, f) in order.iter().enumerate() {
        let p = *omega
            .get(f)
            .ok_or_else(|| TranslateError::MissingPriority(f.clone()))?;
        if let Some(prev) = last {
            if p > prev {
                return Err(TranslateError::BadOrder(f.clone()));
            }
        }
        last = Some(p);
        let base = 2 * (n - 1 - i as u32);
        out.insert(f.clone(), if p % 2 == 0 { base } else { base + 1 });
    }
    if out.len() != order.len() {
        // duplicate names in `order`
        return Err(TranslateError::BadOrder("duplicate entries".into()));
    }
    Ok(out)
}

/// Call-sequence analysis: equations sorted by non-increasing priority, each
/// bound by nu when its priority is even and mu otherwise; events are
/// dropped, choice is conjunction. The system is valid on the trivial LTS
/// exactly when every infinite call sequence satisfies the parity condition.
pub fn translate_csa(p: &Program, omega: &PriorityAssignment) -> Result<Hes, TranslateError> {
    let (q, env) = prepare(p, None)?;
    let main_referenced = q.defs.values().any(|def| {
        let mut names = std::collections::BTreeSet::new();
        crate::surface::collect_names(&def.body, &mut names);
        names.contains(&q.main)
    });
    let mut order: Vec<String> = q
        .defs
        .keys()
        .filter(|name| main_referenced || *name != &q.main)
        .cloned()
        .collect();
    for f in &order {
        if !omega.contains_key(f) {
            return Err(TranslateError::MissingPriority(f.clone()));
        }
    }
    let positions: BTreeMap<&String, usize> =
        q.defs.keys().enumerate().map(|(i, k)| (k, i)).collect();
    order.sort_by_key(|f| (std::cmp::Reverse(omega[f]), positions[f]));
    Ok(build_hes(
        Flavor::Csa,
        &q,
        &env,
        |f| {
            if omega[f] % 2 == 0 {
                Fix::Nu
            } else {
                Fix::Mu
            }
        },
        &order,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfl::{hes_alpha_eq, parse_hes};
    use crate::surface::parse_program;

    fn assert_hes_eq(actual: &Hes, expected_src: &str) {
        let expected = parse_hes(expected_src).unwrap();
        assert!(
            hes_alpha_eq(actual, &expected),
            "expected:\n{}\nactual:\n{}",
            crate::hfl::print_hes(&expected),
            crate::hfl::print_hes(actual),
        );
    }

    #[test]
    fn may_of_looping_program() {
        let p = parse_program("loop x = loop x; main = loop (event a; ())").unwrap();
        let hes = translate_may(&p, "a").unwrap();
        assert_hes_eq(&hes, "loop (x:prop) =mu loop x;\nmain: loop true;\n");
    }

    #[test]
    fn may_of_summation_program() {
        let p = parse_program(
            "main = sum 3 (\\r. assert(r >= 3)); \
             sum x k = if x = 0 then k 0 else sum (x - 1) (\\r. k (x + r))",
        )
        .unwrap();
        let hes = translate_may(&p, "fail").unwrap();
        assert_hes_eq(
            &hes,
            "sum (x:int) (k:int -> prop) =mu (x = 0 /\\ k 0) \\/ (x != 0 /\\ sum (x - 1) (\\r:int. k (x + r)));\n\
             omega =mu omega;\n\
             main: sum 3 (\\r:int. (r >= 3 /\\ false) \\/ (r < 3 /\\ true));\n",
        );
    }

    #[test]
    fn may_of_unit_main() {
        let p = parse_program("main = ()").unwrap();
        let hes = translate_may(&p, "a").unwrap();
        assert!(hes.eqs.is_empty());
        assert_eq!(hes.main, Formula::False);
    }

    #[test]
    fn must_of_nondet_loop() {
        let p = parse_program(
            "loop x y = if x <= 0 \\/ y <= 0 then (event end; ()) \
             else (loop (x - 1) (y * y)) <> (loop x (y - 1)); main = loop 2 2",
        )
        .unwrap();
        let hes = translate_must(&p, "end").unwrap();
        assert_hes_eq(
            &hes,
            "loop (x:int) (y:int) =mu ((x > 0 /\\ y > 0) \\/ true) /\\ ((x <= 0 \\/ y <= 0) \\/ (loop (x - 1) (y * y) /\\ loop x (y - 1)));\n\
             main: loop 2 2;\n",
        );
    }

    #[test]
    fn must_trivial_cases() {
        let p = parse_program("main = event end; ()").unwrap();
        let hes = translate_must(&p, "end").unwrap();
        assert!(hes.eqs.is_empty());
        assert_eq!(hes.main, Formula::True);

        let p = parse_program("main = () <> (event end; ())").unwrap();
        let hes = translate_must(&p, "end").unwrap();
        assert_eq!(hes.main, Formula::and(Formula::False, Formula::True));
    }

    #[test]
    fn path_of_file_reader() {
        let p = parse_program(
            "f y k = if y = 0 then (event close; k ()) else (event read; f (y - 1) k);\n\
             g r = event end; ();\n\
             main = f 2 g",
        )
        .unwrap();
        let hes = translate_path(&p).unwrap();
        assert_hes_eq(
            &hes,
            "f (y:int) (k:prop -> prop) =nu (y != 0 \\/ <close> (k true)) /\\ (y = 0 \\/ <read> (f (y - 1) k));\n\
             g (r:prop) =nu <end> true;\n\
             main: f 2 g;\n",
        );
    }

    #[test]
    fn path_of_exception_style_reader() {
        let p = parse_program(
            "readex x h k = event read; (k () <> h ());\n\
             f x h k = readex x h (\\r. f x h k);\n\
             main = f () (\\r. event close; ()) (\\r. ())",
        )
        .unwrap();
        let hes = translate_path(&p).unwrap();
        let readex = &hes.eqs[0];
        assert_eq!(readex.var, "readex");
        assert_hes_eq(
            &Hes { eqs: vec![readex.clone()], main: Formula::True },
            "readex (x:prop) (h:prop -> prop) (k:prop -> prop) =nu <read> (k true /\\ h true);\nmain: true;\n",
        );
    }

    #[test]
    fn priority_normalization_formula() {
        let omega: PriorityAssignment = [
            ("app".to_string(), 3),
            ("f_a".to_string(), 1),
            ("f_b".to_string(), 2),
        ]
        .into_iter()
        .collect();
        let order = vec!["app".to_string(), "f_b".to_string(), "f_a".to_string()];
        let normalized = normalize_priorities(&omega, &order).unwrap();
        assert_eq!(normalized["app"], 5);
        assert_eq!(normalized["f_b"], 2);
        assert_eq!(normalized["f_a"], 1);
    }

    #[test]
    fn priority_normalization_preserves_parity() {
        let omega: PriorityAssignment =
            [("f".to_string(), 4), ("g".to_string(), 2)].into_iter().collect();
        let order = vec!["f".to_string(), "g".to_string()];
        let normalized = normalize_priorities(&omega, &order).unwrap();
        assert!(normalized.values().all(|p| p % 2 == 0));

        let single: PriorityAssignment = [("f".to_string(), 0)].into_iter().collect();
        let normalized = normalize_priorities(&single, &["f".to_string()]).unwrap();
        assert_eq!(normalized["f"], 0);
    }

    #[test]
    fn priority_normalization_rejects_bad_order() {
        let omega: PriorityAssignment =
            [("f".to_string(), 1), ("g".to_string(), 2)].into_iter().collect();
        assert!(matches!(
            normalize_priorities(&omega, &["f".to_string(), "g".to_string()]),
            Err(TranslateError::BadOrder(_))
        ));
    }

    #[test]
    fn csa_of_app_program_matches_published_system() {
        let p = parse_program(
            "app h x = h x;\n\
             f_b x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             f_a x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             main = f_b 5",
        )
        .unwrap();
        let omega: PriorityAssignment = [
            ("app".to_string(), 3),
            ("f_a".to_string(), 1),
            ("f_b".to_string(), 2),
        ]
        .into_iter()
        .collect();
        let hes = translate_csa(&p, &omega).unwrap();
        // sorted by non-increasing priority: app (mu), f_b (nu), f_a (mu)
        assert_eq!(
            hes.eqs.iter().map(|e| e.var.as_str()).collect::<Vec<_>>(),
            vec!["app", "f_b", "f_a"]
        );
        assert_eq!(hes.eqs[0].fix, Fix::Mu);
        assert_eq!(hes.eqs[1].fix, Fix::Nu);
        assert_eq!(hes.eqs[2].fix, Fix::Mu);
        assert_hes_eq(
            &hes,
            "app (h:int -> prop) (x:int) =mu h x;\n\
             f_b (x:int) =nu (x <= 0 \\/ app f_a (x - 1)) /\\ (x > 0 \\/ app f_b 5);\n\
             f_a (x:int) =mu (x <= 0 \\/ app f_a (x - 1)) /\\ (x > 0 \\/ app f_b 5);\n\
             main: f_b 5;\n",
        );
    }

    #[test]
    fn csa_with_all_even_assignment_is_nu_shaped_must() {
        let p = parse_program("f x = f x <> f (x + 1); main = f 0").unwrap();
        let omega: PriorityAssignment = [("f".to_string(), 2)].into_iter().collect();
        let hes = translate_csa(&p, &omega).unwrap();
        assert_eq!(hes.eqs[0].fix, Fix::Nu);
        assert_hes_eq(
            &hes,
            "f (x:int) =nu f x /\\ f (x + 1);\nmain: f 0;\n",
        );
    }

    #[test]
    fn csa_missing_priority_is_an_error() {
        let p = parse_program("f x = f x; main = f 0").unwrap();
        let empty = PriorityAssignment::new();
        assert!(matches!(
            translate_csa(&p, &empty),
            Err(TranslateError::MissingPriority(_))
        ));
    }

    #[test]
    fn event_erasure_keeps_watched_event_only() {
        let p = parse_program("main = event a; event b; event a; ()").unwrap();
        let hes = translate_may(&p, "b").unwrap();
        // first `a` erased, so the body reduces to `true` at the `b`
        assert_eq!(hes.main, Formula::True);
    }
}
