//! Labeled transition semantics of programs: single steps, bounded trace
//! enumeration, choice-directed reduction, call-sequence extraction and a
//! bounded must-reachability oracle.
//!
//! Everything here is exhaustive and bounded; the translators are tested
//! against these functions.

use crate::surface::{Cond, Program, Term};
use num_bigint::BigInt;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("stuck term `{0}`: head is not a fully applied function")]
    Stuck(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("non-integer operand in guard: `{0}`")]
    BadGuard(String),
}

/// Label of a single reduction step: an event name or the silent step.
pub type Label = Option<String>;

/// Evaluates a closed arithmetic term.
pub fn eval_int(t: &Term) -> Result<BigInt, SemanticsError> {
    match t {
        Term::Int(n) => Ok(n.clone()),
        Term::Op(op, a, b) => Ok(op.apply(&eval_int(a)?, &eval_int(b)?)),
        other => Err(SemanticsError::BadGuard(crate::surface::print_term(other))),
    }
}

/// Evaluates a closed guard.
pub fn eval_cond(c: &Cond) -> Result<bool, SemanticsError> {
    match c {
        Cond::Cmp(op, a, b) => Ok(op.holds(&eval_int(a)?, &eval_int(b)?)),
        Cond::And(a, b) => Ok(eval_cond(a)? && eval_cond(b)?),
        Cond::Or(a, b) => Ok(eval_cond(a)? || eval_cond(b)?),
    }
}

fn subst(t: &Term, bindings: &[(String, Term)]) -> Term {
    match t {
        Term::Unit | Term::Int(_) => t.clone(),
        Term::Var(x) => bindings
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| t.clone()),
        Term::Op(op, a, b) => Term::Op(*op, Box::new(subst(a, bindings)), Box::new(subst(b, bindings))),
        Term::If(c, a, b) => Term::If(
            subst_cond(c, bindings),
            Box::new(subst(a, bindings)),
            Box::new(subst(b, bindings)),
        ),
        Term::Event(l, body) => Term::Event(l.clone(), Box::new(subst(body, bindings))),
        Term::App(f, a) => Term::app(subst(f, bindings), subst(a, bindings)),
        Term::NonDet(a, b) => {
            Term::NonDet(Box::new(subst(a, bindings)), Box::new(subst(b, bindings)))
        }
        Term::Abs(params, body) => {
            // Terms substituted in are closed, so shadowing is the only concern.
            let inner: Vec<(String, Term)> = bindings
                .iter()
                .filter(|(n, _)| !params.contains(n))
                .cloned()
                .collect();
            Term::Abs(params.clone(), Box::new(subst(body, &inner)))
        }
    }
}

fn subst_cond(c: &Cond, bindings: &[(String, Term)]) -> Cond {
    match c {
        Cond::Cmp(op, a, b) => Cond::cmp(*op, subst(a, bindings), subst(b, bindings)),
        Cond::And(a, b) => Cond::And(
            Box::new(subst_cond(a, bindings)),
            Box::new(subst_cond(b, bindings)),
        ),
        Cond::Or(a, b) => Cond::Or(
            Box::new(subst_cond(a, bindings)),
            Box::new(subst_cond(b, bindings)),
        ),
    }
}

/// One-step successors of a closed unit-typed term: event unwrapping,
/// beta-expansion of fully applied heads, choice splitting and guard
/// resolution. `()` has no successors.
pub fn step(p: &Program, t: &Term) -> Result<Vec<(Label, Term)>, SemanticsError> {
    match t {
        Term::Unit => Ok(vec![]),
        Term::Event(l, body) => Ok(vec![(Some(l.clone()), (**body).clone())]),
        Term::NonDet(a, b) => Ok(vec![(None, (**a).clone()), (None, (**b).clone())]),
        Term::If(c, a, b) => {
            if eval_cond(c)? {
                Ok(vec![(None, (**a).clone())])
            } else {
                Ok(vec![(None, (**b).clone())])
            }
        }
        Term::Var(_) | Term::App(..) => {
            let (head, args) = t.spine();
            match head {
                Term::Var(f) => {
                    let def = p
                        .defs
                        .get(f)
                        .ok_or_else(|| SemanticsError::UnknownFunction(f.clone()))?;
                    if args.len() != def.params.len() {
                        return Err(SemanticsError::Stuck(crate::surface::print_term(t)));
                    }
                    let bindings: Vec<(String, Term)> = def
                        .params
                        .iter()
                        .cloned()
                        .zip(args.into_iter().cloned())
                        .collect();
                    Ok(vec![(None, subst(&def.body, &bindings))])
                }
                Term::Abs(params, body) => {
                    if args.len() != params.len() {
                        return Err(SemanticsError::Stuck(crate::surface::print_term(t)));
                    }
                    let bindings: Vec<(String, Term)> = params
                        .iter()
                        .cloned()
                        .zip(args.into_iter().cloned())
                        .collect();
                    Ok(vec![(None, subst(body, &bindings))])
                }
                other => Err(SemanticsError::Stuck(crate::surface::print_term(other))),
            }
        }
        other => Err(SemanticsError::Stuck(crate::surface::print_term(other))),
    }
}

/// Event strings observed in a bounded exploration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceSet {
    /// All event strings of explored paths (prefix-closed).
    pub finite: BTreeSet<Vec<String>>,
    /// Event strings of paths that reached `()` within the bound.
    pub maximal_finite: BTreeSet<Vec<String>>,
    /// Unfinished paths at the depth bound: their event string and live term.
    pub frontier: BTreeSet<(Vec<String>, Term)>,
}

/// Explores all reductions of `main` breadth-first up to `depth` steps.
/// States identical in both accumulated trace and term are merged per level.
pub fn enumerate_traces(p: &Program, depth: usize) -> Result<TraceSet, SemanticsError> {
    let mut out = TraceSet::default();
    let start = Term::Var(p.main.clone());
    let mut level: BTreeSet<(Vec<String>, Term)> = BTreeSet::new();
    level.insert((Vec::new(), start));
    out.finite.insert(Vec::new());
    for _ in 0..depth {
        let mut next: BTreeSet<(Vec<String>, Term)> = BTreeSet::new();
        for (trace, term) in &level {
            if *term == Term::Unit {
                out.maximal_finite.insert(trace.clone());
                continue;
            }
            for (label, succ) in step(p, term)? {
                let mut t2 = trace.clone();
                if let Some(l) = label {
                    t2.push(l);
                    out.finite.insert(t2.clone());
                }
                next.insert((t2, succ));
            }
        }
        level = next;
        if level.is_empty() {
            break;
        }
    }
    for (trace, term) in level {
        if term == Term::Unit {
            out.maximal_finite.insert(trace);
        } else {
            out.frontier.insert((trace, term));
        }
    }
    Ok(out)
}

/// A finite sequence of left/right choices resolving non-determinism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSeq(pub Vec<Choice>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    L,
    R,
}

impl ChoiceSeq {
    pub fn parse(s: &str) -> Option<ChoiceSeq> {
        s.chars()
            .map(|c| match c {
                'L' | 'l' => Some(Choice::L),
                'R' | 'r' => Some(Choice::R),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(ChoiceSeq)
    }
}

/// Why a choice-directed reduction stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReduceOutcome {
    /// Reached `()`.
    Finished,
    /// Hit a non-deterministic choice with no choices left.
    ChoicesExhausted,
    /// Used up the step bound.
    BoundReached,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReduceResult {
    pub events: Vec<String>,
    pub term: Term,
    pub remaining: ChoiceSeq,
    pub outcome: ReduceOutcome,
}

/// The unique reduction of `t` following `pi`: deterministic steps are taken
/// as-is, each choice consumes the next element of `pi`. Stops on normal
/// form, exhausted choices, or after `max_steps` steps.
pub fn reduce_with_choice(
    p: &Program,
    t: &Term,
    pi: &ChoiceSeq,
    max_steps: usize,
) -> Result<ReduceResult, SemanticsError> {
    let mut term = t.clone();
    let mut events = Vec::new();
    let mut rest = pi.0.as_slice();
    for _ in 0..max_steps {
        if term == Term::Unit {
            return Ok(ReduceResult {
                events,
                term,
                remaining: ChoiceSeq(rest.to_vec()),
                outcome: ReduceOutcome::Finished,
            });
        }
        if let Term::NonDet(a, b) = &term {
            match rest.split_first() {
                Some((Choice::L, tail)) => {
                    term = (**a).clone();
                    rest = tail;
                }
                Some((Choice::R, tail)) => {
                    term = (**b).clone();
                    rest = tail;
                }
                None => {
                    return Ok(ReduceResult {
                        events,
                        term,
                        remaining: ChoiceSeq(vec![]),
                        outcome: ReduceOutcome::ChoicesExhausted,
                    })
                }
            }
            continue;
        }
        let succs = step(p, &term)?;
        debug_assert_eq!(succs.len(), 1);
        let (label, next) = succs.into_iter().next().expect("deterministic step");
        if let Some(l) = label {
            events.push(l);
        }
        term = next;
    }
    let outcome = if term == Term::Unit {
        ReduceOutcome::Finished
    } else {
        ReduceOutcome::BoundReached
    };
    Ok(ReduceResult { events, term, remaining: ChoiceSeq(rest.to_vec()), outcome })
}

/// A chain of function symbols related by the marked-reduction relation,
/// with the step count of each link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CallSequence {
    pub symbols: Vec<String>,
    pub steps: Vec<usize>,
}

const MARK: char = '#';

fn mark_name(f: &str) -> String {
    format!("{f}{MARK}")
}

fn unmark_name(f: &str) -> Option<&str> {
    f.strip_suffix(MARK)
}

fn mark_term(t: &Term, defs: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(x) if defs.contains(x) => Term::Var(mark_name(x)),
        Term::Unit | Term::Var(_) | Term::Int(_) => t.clone(),
        Term::Op(op, a, b) => {
            Term::Op(*op, Box::new(mark_term(a, defs)), Box::new(mark_term(b, defs)))
        }
        Term::If(c, a, b) => Term::If(
            mark_cond(c, defs),
            Box::new(mark_term(a, defs)),
            Box::new(mark_term(b, defs)),
        ),
        Term::Event(l, body) => Term::Event(l.clone(), Box::new(mark_term(body, defs))),
        Term::App(f, a) => Term::app(mark_term(f, defs), mark_term(a, defs)),
        Term::NonDet(a, b) => {
            Term::NonDet(Box::new(mark_term(a, defs)), Box::new(mark_term(b, defs)))
        }
        Term::Abs(params, body) => {
            // Definition names and binders never collide after normalization.
            Term::Abs(params.clone(), Box::new(mark_term(body, defs)))
        }
    }
}

fn mark_cond(c: &Cond, defs: &BTreeSet<String>) -> Cond {
    match c {
        Cond::Cmp(op, a, b) => Cond::cmp(*op, mark_term(a, defs), mark_term(b, defs)),
        Cond::And(a, b) => {
            Cond::And(Box::new(mark_cond(a, defs)), Box::new(mark_cond(b, defs)))
        }
        Cond::Or(a, b) => Cond::Or(Box::new(mark_cond(a, defs)), Box::new(mark_cond(b, defs))),
    }
}

fn unmark_term(t: &Term) -> Term {
    match t {
        Term::Var(x) => match unmark_name(x) {
            Some(base) => Term::Var(base.to_string()),
            None => t.clone(),
        },
        Term::Unit | Term::Int(_) => t.clone(),
        Term::Op(op, a, b) => Term::Op(*op, Box::new(unmark_term(a)), Box::new(unmark_term(b))),
        Term::If(c, a, b) => {
            Term::If(unmark_cond(c), Box::new(unmark_term(a)), Box::new(unmark_term(b)))
        }
        Term::Event(l, body) => Term::Event(l.clone(), Box::new(unmark_term(body))),
        Term::App(f, a) => Term::app(unmark_term(f), unmark_term(a)),
        Term::NonDet(a, b) => Term::NonDet(Box::new(unmark_term(a)), Box::new(unmark_term(b))),
        Term::Abs(params, body) => Term::Abs(params.clone(), Box::new(unmark_term(body))),
    }
}

fn unmark_cond(c: &Cond) -> Cond {
    match c {
        Cond::Cmp(op, a, b) => Cond::cmp(*op, unmark_term(a), unmark_term(b)),
        Cond::And(a, b) => Cond::And(Box::new(unmark_cond(a)), Box::new(unmark_cond(b))),
        Cond::Or(a, b) => Cond::Or(Box::new(unmark_cond(a)), Box::new(unmark_cond(b))),
    }
}

/// Builds the program with a marked copy of every definition. Marked copies
/// share the original (unmarked) bodies.
fn marked_program(p: &Program) -> Program {
    let mut q = p.clone();
    for (name, def) in p.defs.clone() {
        q.defs.insert(mark_name(&name), def);
    }
    q
}

/// One call edge discovered by the marked reduction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CallEdge {
    pub callee: String,
    pub args: Vec<Term>,
    pub steps: usize,
    pub events: Vec<String>,
}

/// All callees reachable from the call state `(f, args)` within `depth`
/// marked-reduction steps: the body of `f` is instantiated with its
/// definition symbols marked, then reduced; every time the root becomes a
/// fully applied marked symbol a call edge is recorded (and exploration
/// continues past it).
pub fn call_edges(
    p: &Program,
    f: &str,
    args: &[Term],
    depth: usize,
) -> Result<Vec<CallEdge>, SemanticsError> {
    let def_names: BTreeSet<String> = p.defs.keys().cloned().collect();
    let marked = marked_program(p);
    let def = p
        .defs
        .get(f)
        .ok_or_else(|| SemanticsError::UnknownFunction(f.to_string()))?;
    if def.params.len() != args.len() {
        return Err(SemanticsError::Stuck(format!("{f} applied to {} args", args.len())));
    }
    let marked_body = mark_term(&def.body, &def_names);
    let bindings: Vec<(String, Term)> = def
        .params
        .iter()
        .cloned()
        .zip(args.iter().cloned())
        .collect();
    let start = subst(&marked_body, &bindings);

    let mut out = Vec::new();
    let mut level: BTreeSet<(Vec<String>, Term)> = BTreeSet::new();
    level.insert((Vec::new(), start));
    for used in 0..=depth {
        let mut next = BTreeSet::new();
        for (events, term) in &level {
            let (head, spine_args) = term.spine();
            if let Term::Var(x) = head {
                if let Some(base) = unmark_name(x) {
                    if p.defs.get(base).is_some_and(|d| d.params.len() == spine_args.len()) {
                        out.push(CallEdge {
                            callee: base.to_string(),
                            args: spine_args.iter().map(|a| unmark_term(a)).collect(),
                            steps: used + 1,
                            events: events.clone(),
                        });
                    }
                }
            }
            if used == depth {
                continue;
            }
            if *term == Term::Unit {
                continue;
            }
            for (label, succ) in step(&marked, term)? {
                let mut evs = events.clone();
                if let Some(l) = label {
                    evs.push(l);
                }
                next.insert((evs, succ));
            }
        }
        if used == depth {
            break;
        }
        level = next;
        if level.is_empty() {
            break;
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// All prefixes of the program's call sequences witnessable within `depth`
/// total reduction steps.
pub fn call_sequence_prefixes(
    p: &Program,
    depth: usize,
) -> Result<BTreeSet<CallSequence>, SemanticsError> {
    let mut out: BTreeSet<CallSequence> = BTreeSet::new();
    let root = CallSequence { symbols: vec![p.main.clone()], steps: vec![] };
    out.insert(root.clone());
    // Worklist of (sequence so far, current call state, steps used). The
    // visited set keys on the argument values too: distinct call states can
    // share a symbol history.
    let mut visited: BTreeSet<(CallSequence, Vec<Term>)> = BTreeSet::new();
    let mut work: Vec<(CallSequence, String, Vec<Term>, usize)> =
        vec![(root, p.main.clone(), Vec::new(), 0)];
    while let Some((seq, f, args, used)) = work.pop() {
        if used >= depth {
            continue;
        }
        for edge in call_edges(p, &f, &args, depth - used)? {
            let mut seq2 = seq.clone();
            seq2.symbols.push(edge.callee.clone());
            seq2.steps.push(edge.steps);
            out.insert(seq2.clone());
            if visited.insert((seq2.clone(), edge.args.clone())) {
                work.push((seq2, edge.callee, edge.args, used + edge.steps));
            }
        }
    }
    Ok(out)
}

/// Bounded must-reachability of event `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MustVerdict {
    Yes,
    No,
    Unknown,
}

/// `Yes` when every maximal explored path emits `a` within the bound and
/// every unfinished path has already emitted `a`; `No` when some terminated
/// path lacks `a`; `Unknown` otherwise.
pub fn must_reach_bounded(
    p: &Program,
    a: &str,
    depth: usize,
) -> Result<MustVerdict, SemanticsError> {
    let traces = enumerate_traces(p, depth)?;
    let has_a = |t: &[String]| t.iter().any(|l| l == a);
    if traces.maximal_finite.iter().any(|t| !has_a(t)) {
        return Ok(MustVerdict::No);
    }
    if traces.frontier.iter().all(|(t, _)| has_a(t)) {
        Ok(MustVerdict::Yes)
    } else {
        Ok(MustVerdict::Unknown)
    }
}

/// Bounded may-reachability of event `a`: does any explored path emit it?
pub fn may_reach_bounded(p: &Program, a: &str, depth: usize) -> Result<bool, SemanticsError> {
    let traces = enumerate_traces(p, depth)?;
    Ok(traces.finite.iter().any(|t| t.iter().any(|l| l == a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_program;

    fn tr(labels: &[&str]) -> Vec<String> {
        labels.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn step_event_choice_if() {
        let p = parse_program("main = ()").unwrap();
        let ev = Term::Event("a".into(), Box::new(Term::Unit));
        assert_eq!(step(&p, &ev).unwrap(), vec![(Some("a".into()), Term::Unit)]);

        let choice = Term::NonDet(Box::new(Term::Unit), Box::new(ev.clone()));
        assert_eq!(
            step(&p, &choice).unwrap(),
            vec![(None, Term::Unit), (None, ev.clone())]
        );

        let guard = Term::If(
            Cond::cmp(crate::ops::CmpOp::Eq, Term::Int(0.into()), Term::Int(0.into())),
            Box::new(Term::Unit),
            Box::new(ev),
        );
        assert_eq!(step(&p, &guard).unwrap(), vec![(None, Term::Unit)]);
    }

    #[test]
    fn file_program_traces() {
        let p = parse_program(
            "f x = (event close; ()) <> (event read; event read; f x); main = f ()",
        )
        .unwrap();
        let t = enumerate_traces(&p, 8).unwrap();
        for expect in [
            tr(&[]),
            tr(&["read"]),
            tr(&["read", "read"]),
            tr(&["close"]),
            tr(&["read", "read", "close"]),
        ] {
            assert!(t.finite.contains(&expect), "missing {expect:?}");
        }
        assert!(t.maximal_finite.contains(&tr(&["close"])));
        // odd read counts never close
        assert!(!t.finite.contains(&tr(&["read", "close"])));
    }

    #[test]
    fn unit_main_has_empty_maximal_trace() {
        let p = parse_program("main = ()").unwrap();
        let t = enumerate_traces(&p, 4).unwrap();
        assert_eq!(t.maximal_finite, BTreeSet::from([vec![]]));
        assert!(t.frontier.is_empty());
    }

    #[test]
    fn loop_program_has_live_frontier_and_no_events() {
        let p = parse_program("loop x = loop x; main = loop (event a; ())").unwrap();
        for depth in [1, 3, 7] {
            let t = enumerate_traces(&p, depth).unwrap();
            assert_eq!(t.finite, BTreeSet::from([vec![]]));
            assert!(!t.frontier.is_empty());
            assert!(t.maximal_finite.is_empty());
        }
    }

    #[test]
    fn traces_are_monotone_in_depth() {
        let p = parse_program(
            "f x = (event close; ()) <> (event read; event read; f x); main = f ()",
        )
        .unwrap();
        let t1 = enumerate_traces(&p, 5).unwrap();
        let t2 = enumerate_traces(&p, 6).unwrap();
        assert!(t1.finite.is_subset(&t2.finite));
    }

    #[test]
    fn choice_reduction_follows_pi() {
        let p = parse_program("main = (event a; ()) <> (event b; ())").unwrap();
        let t = p.main_def().body.clone();
        let r = reduce_with_choice(&p, &t, &ChoiceSeq::parse("L").unwrap(), 10).unwrap();
        assert_eq!(r.events, tr(&["a"]));
        assert_eq!(r.term, Term::Unit);
        assert_eq!(r.outcome, ReduceOutcome::Finished);
        assert!(r.remaining.0.is_empty());

        let r = reduce_with_choice(&p, &t, &ChoiceSeq(vec![]), 10).unwrap();
        assert_eq!(r.outcome, ReduceOutcome::ChoicesExhausted);
    }

    #[test]
    fn deterministic_prefix_of_branching_program() {
        let p = parse_program(
            "f = if 0 = 0 then (event a; f) else (event b; f); main = f",
        )
        .unwrap();
        let start = Term::Var("main".into());
        let r = reduce_with_choice(&p, &start, &ChoiceSeq(vec![]), 4).unwrap();
        assert_eq!(r.events, tr(&["a"]));
        assert_eq!(r.outcome, ReduceOutcome::BoundReached);
    }

    #[test]
    fn choice_reduction_agrees_with_step() {
        let p = parse_program(
            "f x = (event close; ()) <> (event read; event read; f x); main = f ()",
        )
        .unwrap();
        // every prefix of the directed reduction is reproduced by `step`
        let mut term = Term::Var("main".into());
        let pi = ChoiceSeq::parse("RLR").unwrap();
        let mut rest = pi.0.clone();
        for _ in 0..12 {
            if term == Term::Unit {
                break;
            }
            if let Term::NonDet(..) = term {
                let choice = rest.remove(0);
                let succs = step(&p, &term).unwrap();
                let idx = if choice == Choice::L { 0 } else { 1 };
                term = succs[idx].1.clone();
            } else {
                let succs = step(&p, &term).unwrap();
                assert_eq!(succs.len(), 1);
                term = succs[0].1.clone();
            }
            if rest.is_empty() {
                break;
            }
        }
    }

    #[test]
    fn call_sequences_of_app_program() {
        let p = parse_program(
            "app h x = h x;\n\
             f_b x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             f_a x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             main = f_b 5",
        )
        .unwrap();
        let seqs = call_sequence_prefixes(&p, 40).unwrap();
        let symbol_seqs: BTreeSet<Vec<String>> =
            seqs.iter().map(|s| s.symbols.clone()).collect();
        // main-prefixed versions of the published chains
        let chain = |names: &[&str]| {
            let mut v = vec!["main".to_string()];
            v.extend(names.iter().map(|s| s.to_string()));
            v
        };
        assert!(symbol_seqs.contains(&chain(&["f_b", "f_a", "f_a", "f_a", "f_a", "f_a", "f_b"])));
        assert!(symbol_seqs.contains(&chain(&["f_b", "app"])));
        assert!(symbol_seqs.contains(&chain(&["f_b", "f_a", "app"])));
        // app's body contains no recursive symbols, so chains stop there
        assert!(!symbol_seqs
            .iter()
            .any(|s| s.windows(2).any(|w| w[0] == "app" && w[1] != "app")
                && s.iter().filter(|x| *x == "app").count() > 1));
        for s in &symbol_seqs {
            if let Some(pos) = s.iter().position(|x| x == "app") {
                assert_eq!(pos, s.len() - 1, "app must be terminal in {s:?}");
            }
        }
    }

    #[test]
    fn non_recursive_program_has_main_only() {
        let p = parse_program("main = ()").unwrap();
        let seqs = call_sequence_prefixes(&p, 10).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(
            seqs.iter().next().unwrap().symbols,
            vec!["main".to_string()]
        );
    }

    #[test]
    fn dup_style_program_with_true_guard() {
        let p = parse_program(
            "f_b = if 0 = 0 then (event a; f_a) else (event b; f_b);\n\
             f_a = if 0 = 0 then (event a; f_a) else (event b; f_b);\n\
             main = f_b",
        )
        .unwrap();
        let seqs = call_sequence_prefixes(&p, 20).unwrap();
        let symbol_seqs: BTreeSet<Vec<String>> =
            seqs.iter().map(|s| s.symbols.clone()).collect();
        // prefixes of main f_b f_a^omega
        assert!(symbol_seqs.contains(&vec![
            "main".into(),
            "f_b".into(),
            "f_a".into(),
            "f_a".into()
        ]));
        assert!(!symbol_seqs
            .iter()
            .any(|s| s.windows(2).any(|w| w[0] == "f_a" && w[1] == "f_b")));
    }

    #[test]
    fn call_sequence_embeds_in_reduction() {
        // each recorded link replays against the plain semantics
        let p = parse_program(
            "app h x = h x;\n\
             f_b x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             f_a x = if x > 0 then (event a; app f_a (x - 1)) else (event b; app f_b 5);\n\
             main = f_b 5",
        )
        .unwrap();
        let edges = call_edges(&p, "f_b", &[Term::Int(1.into())], 10).unwrap();
        assert!(!edges.is_empty());
        for edge in &edges {
            // the callee exists and the recorded arity matches
            assert_eq!(p.defs[&edge.callee].params.len(), edge.args.len());
        }
    }

    #[test]
    fn must_reach_examples() {
        let loopxy = parse_program(
            "loop x y = if x <= 0 \\/ y <= 0 then (event end; ()) \
             else (loop (x - 1) (y * y)) <> (loop x (y - 1)); main = loop 1 1",
        )
        .unwrap();
        assert_eq!(
            must_reach_bounded(&loopxy, "end", 50).unwrap(),
            MustVerdict::Yes
        );

        let unit = parse_program("main = ()").unwrap();
        assert_eq!(must_reach_bounded(&unit, "end", 10).unwrap(), MustVerdict::No);

        let looping = parse_program("loop x = loop x; main = loop (event a; ())").unwrap();
        assert_eq!(
            must_reach_bounded(&looping, "a", 30).unwrap(),
            MustVerdict::Unknown
        );
        assert!(!may_reach_bounded(&looping, "a", 30).unwrap());
    }
}
