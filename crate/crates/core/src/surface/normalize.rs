//! Normalization, lambda lifting and totality instrumentation.

use super::{Cond, Def, Program, SurfaceError, Term};
use std::collections::BTreeSet;

/// Brings a program into the form the translators expect: `main` is a nullary
/// definition and every abstraction is a top-level definition. Idempotent and
/// trace-preserving.
pub fn normalize_program(p: &Program) -> Program {
    let mut q = p.clone();
    // Absorb a top-level lambda into the parameter list: `f = \x. t` becomes
    // `f x = t`.
    for def in q.defs.values_mut() {
        while let Term::Abs(params, body) = def.body.clone() {
            def.params.extend(params);
            def.body = *body;
        }
    }
    lift_lambdas(&mut q);
    q
}

/// Replaces every remaining abstraction with a call to a fresh top-level
/// definition closed over the abstraction's free variables.
pub fn lift_lambdas(p: &mut Program) {
    let def_names: BTreeSet<String> = p.defs.keys().cloned().collect();
    let mut used: BTreeSet<String> = def_names.clone();
    for def in p.defs.values() {
        used.extend(def.params.iter().cloned());
        super::collect_names(&def.body, &mut used);
    }
    let mut lifter = Lifter { def_names, used, counter: 0, new_defs: Vec::new() };
    let names: Vec<String> = p.defs.keys().cloned().collect();
    for name in names {
        let mut body = p.defs[&name].body.clone();
        lifter.term(&mut body);
        p.defs[&name].body = body;
    }
    for (name, def) in lifter.new_defs {
        p.defs.insert(name, def);
    }
}

struct Lifter {
    def_names: BTreeSet<String>,
    used: BTreeSet<String>,
    counter: usize,
    new_defs: Vec<(String, Def)>,
}

impl Lifter {
    fn fresh(&mut self) -> String {
        loop {
            let candidate = format!("lam{}", self.counter);
            self.counter += 1;
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }

    fn term(&mut self, t: &mut Term) {
        match t {
            Term::Unit | Term::Var(_) | Term::Int(_) => {}
            Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
                self.term(a);
                self.term(b);
            }
            Term::If(c, a, b) => {
                self.cond(c);
                self.term(a);
                self.term(b);
            }
            Term::Event(_, body) => self.term(body),
            Term::Abs(params, body) => {
                self.term(body);
                // Captured variables, in first-occurrence order.
                let mut captured = Vec::new();
                let mut seen = BTreeSet::new();
                free_vars(body, &mut |x| {
                    if !params.iter().any(|p| p == x)
                        && !self.def_names.contains(x)
                        && !self.new_defs.iter().any(|(n, _)| n == x)
                        && seen.insert(x.to_string())
                    {
                        captured.push(x.to_string());
                    }
                });
                let name = self.fresh();
                let mut all_params = captured.clone();
                all_params.extend(params.iter().cloned());
                self.new_defs.push((
                    name.clone(),
                    Def { params: all_params, body: (**body).clone() },
                ));
                *t = Term::apps(Term::Var(name), captured.into_iter().map(Term::Var));
            }
        }
    }

    fn cond(&mut self, c: &mut Cond) {
        match c {
            Cond::Cmp(_, a, b) => {
                self.term(a);
                self.term(b);
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                self.cond(a);
                self.cond(b);
            }
        }
    }
}

fn free_vars(t: &Term, f: &mut dyn FnMut(&str)) {
    match t {
        Term::Var(x) => f(x),
        Term::Unit | Term::Int(_) => {}
        Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
            free_vars(a, f);
            free_vars(b, f);
        }
        Term::If(c, a, b) => {
            free_cond_vars(c, f);
            free_vars(a, f);
            free_vars(b, f);
        }
        Term::Event(_, body) => free_vars(body, f),
        Term::Abs(params, body) => {
            free_vars(body, &mut |x| {
                if !params.iter().any(|p| p == x) {
                    f(x)
                }
            });
        }
    }
}

fn free_cond_vars(c: &Cond, f: &mut dyn FnMut(&str)) {
    match c {
        Cond::Cmp(_, a, b) => {
            free_vars(a, f);
            free_vars(b, f);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            free_cond_vars(a, f);
            free_cond_vars(b, f);
        }
    }
}

/// Checks, conservatively, that no reduction of the program terminates and
/// that every infinite reduction produces infinitely many events:
///
/// * no `()` may occur in tail position (definition bodies, branches, choice
///   operands, event bodies) — arguments are exempt;
/// * every cycle in the call graph must pass through an event.
///
/// The check is a heuristic: it may accept programs that still terminate
/// through unit-valued arguments, but it never rejects an instrumented
/// program.
pub fn totality_check(p: &Program) -> Result<(), SurfaceError> {
    for (name, def) in &p.defs {
        if tail_unit(&def.body) {
            return Err(SurfaceError::NotTotal(format!(
                "`()` in tail position of `{name}`"
            )));
        }
    }
    // Unguarded call graph: f -> g when g occurs in f's body outside any event.
    let names: Vec<&String> = p.defs.keys().collect();
    let mut edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); names.len()];
    for (i, def) in p.defs.values().enumerate() {
        let mut targets = BTreeSet::new();
        unguarded_calls(&def.body, &mut targets);
        for t in targets {
            if let Some(j) = names.iter().position(|n| **n == t) {
                edges[i].insert(j);
            }
        }
    }
    if let Some(cycle_start) = find_cycle(&edges) {
        return Err(SurfaceError::NotTotal(format!(
            "event-free recursion through `{}`",
            names[cycle_start]
        )));
    }
    Ok(())
}

fn tail_unit(t: &Term) -> bool {
    match t {
        Term::Unit => true,
        Term::Event(_, body) => tail_unit(body),
        Term::If(_, a, b) | Term::NonDet(a, b) => tail_unit(a) || tail_unit(b),
        _ => false,
    }
}

/// Symbols that can reach the head of a redex before any event fires:
/// application heads and bare variables in evaluation positions. Occurrences
/// inside arguments are the callee's responsibility and are not recorded.
fn unguarded_calls(t: &Term, acc: &mut BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            acc.insert(x.clone());
        }
        Term::Event(..) => {}
        Term::App(..) => {
            if let (Term::Var(x), _) = t.spine() {
                acc.insert(x.clone());
            }
        }
        Term::If(_, a, b) | Term::NonDet(a, b) => {
            unguarded_calls(a, acc);
            unguarded_calls(b, acc);
        }
        Term::Unit | Term::Int(_) | Term::Op(..) | Term::Abs(..) => {}
    }
}

fn find_cycle(edges: &[BTreeSet<usize>]) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    fn visit(v: usize, edges: &[BTreeSet<usize>], marks: &mut [Mark]) -> Option<usize> {
        marks[v] = Mark::Grey;
        for &w in &edges[v] {
            match marks[w] {
                Mark::Grey => return Some(w),
                Mark::White => {
                    if let Some(c) = visit(w, edges, marks) {
                        return Some(c);
                    }
                }
                Mark::Black => {}
            }
        }
        marks[v] = Mark::Black;
        None
    }
    let mut marks = vec![Mark::White; edges.len()];
    (0..edges.len()).find_map(|v| {
        if marks[v] == Mark::White {
            visit(v, edges, &mut marks)
        } else {
            None
        }
    })
}

/// Makes every reduction infinite and infinitely eventful: wraps each
/// definition body in `event dummy; ...` and replaces every `()` leaf with a
/// call to a fresh diverging looper that emits `dummy` forever.
pub fn instrument_total(p: &Program, dummy: &str) -> Result<Program, SurfaceError> {
    if p.event_alphabet().contains(dummy) {
        return Err(SurfaceError::EventInUse(dummy.to_string()));
    }
    let looper = p.fresh_name("spin");
    let mut q = p.clone();
    for def in q.defs.values_mut() {
        let mut body = def.body.clone();
        replace_units(&mut body, &looper);
        def.body = Term::Event(dummy.to_string(), Box::new(body));
    }
    q.defs.insert(
        looper.clone(),
        Def {
            params: vec!["x".into()],
            body: Term::Event(
                dummy.to_string(),
                Box::new(Term::app(Term::Var(looper), Term::Var("x".into()))),
            ),
        },
    );
    Ok(q)
}

fn replace_units(t: &mut Term, looper: &str) {
    match t {
        Term::Unit => *t = Term::app(Term::Var(looper.to_string()), Term::Unit),
        Term::Var(_) | Term::Int(_) => {}
        Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
            replace_units(a, looper);
            replace_units(b, looper);
        }
        Term::If(_, a, b) => {
            replace_units(a, looper);
            replace_units(b, looper);
        }
        Term::Event(_, body) => replace_units(body, looper),
        Term::Abs(_, body) => replace_units(body, looper),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_program, typecheck_program};

    #[test]
    fn normalize_is_idempotent() {
        let p = parse_program(
            "main = sum 3 (\\r. assert(r >= 3)); \
             sum x k = if x = 0 then k 0 else sum (x - 1) (\\r. k (x + r))",
        )
        .unwrap();
        let n1 = normalize_program(&p);
        let n2 = normalize_program(&n1);
        assert_eq!(n1, n2);
        // all lambdas gone
        for def in n1.defs.values() {
            assert!(!contains_abs(&def.body));
        }
        // typeability preserved
        typecheck_program(&p).unwrap();
        typecheck_program(&n1).unwrap();
    }

    fn contains_abs(t: &Term) -> bool {
        match t {
            Term::Abs(..) => true,
            Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
                contains_abs(a) || contains_abs(b)
            }
            Term::If(_, a, b) => contains_abs(a) || contains_abs(b),
            Term::Event(_, body) => contains_abs(body),
            _ => false,
        }
    }

    #[test]
    fn lifted_lambda_captures_environment() {
        let p = parse_program(
            "sum x k = if x = 0 then k 0 else sum (x - 1) (\\r. k (x + r)); main = sum 3 g; g r = ()",
        )
        .unwrap();
        let n = normalize_program(&p);
        let lam = n
            .defs
            .iter()
            .find(|(name, _)| name.starts_with("lam"))
            .expect("a lifted definition");
        // captured k and x plus the original parameter r
        assert_eq!(lam.1.params.len(), 3);
        assert!(lam.1.params.contains(&"r".to_string()));
    }

    #[test]
    fn instrument_total_makes_programs_total() {
        let p = parse_program("main = ()").unwrap();
        let q = instrument_total(&p, "tick").unwrap();
        totality_check(&q).unwrap();
        // main now calls the looper under a dummy event
        let Term::Event(l, inner) = &q.main_def().body else {
            panic!("expected event")
        };
        assert_eq!(l, "tick");
        let (head, args) = inner.spine();
        assert!(matches!(head, Term::Var(_)));
        assert_eq!(args, vec![&Term::Unit]);
    }

    #[test]
    fn instrument_rejects_used_event() {
        let p = parse_program("main = event a; ()").unwrap();
        assert!(matches!(
            instrument_total(&p, "a"),
            Err(SurfaceError::EventInUse(_))
        ));
    }

    #[test]
    fn totality_check_flags_terminating_and_silent_programs() {
        let ok = parse_program(
            "f = if 0 = 0 then (event a; f) else (event b; f); main = f",
        )
        .unwrap();
        totality_check(&ok).unwrap();

        let terminating = parse_program("main = event a; ()").unwrap();
        assert!(totality_check(&terminating).is_err());

        let silent = parse_program("g = g; main = event a; g").unwrap();
        assert!(totality_check(&silent).is_err());
    }

    #[test]
    fn app_style_program_passes_totality() {
        let p = parse_program(
            "app h x = h x;\n\
             f_b x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             f_a x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             main = f_b 5",
        )
        .unwrap();
        totality_check(&p).unwrap();
    }
}
