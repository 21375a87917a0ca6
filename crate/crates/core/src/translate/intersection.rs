//! Intersection-type-driven program transformation: replicates functions and
//! arguments per automaton state and per maximal priority encountered, so
//! that emptiness of `InfTraces(P) /\ L(A)` becomes a call-sequence analysis
//! of the transformed program.

use super::{PriorityAssignment, TranslateError};
use crate::automata::ParityAutomaton;
use crate::hfl::Hes;
use crate::surface::{
    lift_lambdas, normalize_program, totality_check, typecheck_program, Cond, Def, Program,
    SimpleType, Term,
};
use std::collections::{BTreeMap, BTreeSet};

/// Refinement types: an automaton state for unit-typed terms, or an arrow
/// whose argument carries either `int` or a conjunction of (type, priority)
/// pairs, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InterType {
    State(String),
    Arrow(ArgType, Box<InterType>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgType {
    Int,
    Conj(Vec<(InterType, u32)>),
}

impl InterType {
    pub fn arrow(arg: ArgType, res: InterType) -> InterType {
        InterType::Arrow(arg, Box::new(res))
    }

    pub fn uncurry(&self) -> (Vec<&ArgType>, &str) {
        let mut args = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                InterType::State(q) => return (args, q),
                InterType::Arrow(a, r) => {
                    args.push(a);
                    cur = r;
                }
            }
        }
    }

    /// Does this type refine the simple type?
    pub fn refines(&self, simple: &SimpleType) -> bool {
        match (self, simple) {
            (InterType::State(_), SimpleType::Unit) => true,
            (InterType::Arrow(ArgType::Int, r), SimpleType::Arrow(a, res)) => {
                **a == SimpleType::Int && r.refines(res)
            }
            (InterType::Arrow(ArgType::Conj(pairs), r), SimpleType::Arrow(a, res)) => {
                pairs.iter().all(|(t, _)| t.refines(a)) && r.refines(res)
            }
            _ => false,
        }
    }
}

/// Bindings `x : int` or `x : (theta, m, m')`: `m` is the priority recorded
/// when the binding was introduced, `m'` the largest priority raised since.
/// A variable may have many refined bindings but at most the single `int`
/// one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterTypeEnv {
    pub ints: BTreeSet<String>,
    pub refined: BTreeSet<(String, InterType, u32, u32)>,
}

impl InterTypeEnv {
    pub fn bind_int(&mut self, x: impl Into<String>) {
        self.ints.insert(x.into());
    }

    pub fn bind(&mut self, x: impl Into<String>, ty: InterType, m: u32, raised: u32) {
        self.refined.insert((x.into(), ty, m, raised));
    }

    /// `env ^ m`: every refined binding's raised component becomes
    /// `max(old, m)`; int bindings are untouched.
    pub fn raise(&self, m: u32) -> InterTypeEnv {
        InterTypeEnv {
            ints: self.ints.clone(),
            refined: self
                .refined
                .iter()
                .map(|(x, t, m1, m2)| (x.clone(), t.clone(), *m1, (*m2).max(m)))
                .collect(),
        }
    }

    /// Bindings of `x` usable right now: recorded and raised components
    /// coincide.
    fn usable<'a>(&'a self, x: &'a str) -> impl Iterator<Item = (&'a InterType, u32)> {
        self.refined
            .iter()
            .filter(move |(n, _, m1, m2)| n == x && m1 == m2)
            .map(|(_, t, m1, _)| (t, *m1))
    }
}

/// Raises every refined binding: the exported form of the `^` operation.
pub fn env_raise(gamma: &InterTypeEnv, m: u32) -> InterTypeEnv {
    gamma.raise(m)
}

/// A top-level type environment: bindings `f : (theta, m)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopLevelEnv {
    pub bindings: BTreeSet<(String, InterType, u32)>,
}

impl TopLevelEnv {
    /// The intersection environment `{f : (theta, m, 0)}` used to check
    /// definition bodies.
    pub fn to_value_env(&self) -> InterTypeEnv {
        let mut env = InterTypeEnv::default();
        for (f, t, m) in &self.bindings {
            env.bind(f.clone(), t.clone(), *m, 0);
        }
        env
    }
}

/// Deterministic, collision-free naming of replicated symbols.
#[derive(Debug, Default, Clone)]
pub struct Mangler {
    forward: BTreeMap<(String, InterType, u32), String>,
    taken: BTreeSet<String>,
    reverse: BTreeMap<String, (String, InterType, u32)>,
}

fn encode_type(t: &InterType, out: &mut String) {
    match t {
        InterType::State(q) => out.push_str(q),
        InterType::Arrow(ArgType::Int, r) => {
            out.push('I');
            encode_type(r, out);
        }
        InterType::Arrow(ArgType::Conj(pairs), r) => {
            out.push('J');
            for (t, m) in pairs {
                encode_type(t, out);
                out.push_str(&m.to_string());
            }
            out.push('R');
            encode_type(r, out);
        }
    }
}

impl Mangler {
    pub fn name(&mut self, base: &str, ty: &InterType, m: u32) -> String {
        let key = (base.to_string(), ty.clone(), m);
        if let Some(n) = self.forward.get(&key) {
            return n.clone();
        }
        let mut enc = String::new();
        encode_type(ty, &mut enc);
        let mut candidate = format!("{base}__{enc}_{m}");
        while !self.taken.insert(candidate.clone()) {
            candidate.push('x');
        }
        self.forward.insert(key.clone(), candidate.clone());
        self.reverse.insert(candidate.clone(), key);
        candidate
    }

    pub fn decode(&self, name: &str) -> Option<&(String, InterType, u32)> {
        self.reverse.get(name)
    }
}

fn sorted_successors(a: &ParityAutomaton, q: &str, label: &str) -> Vec<String> {
    a.successors(q, label).into_iter().collect()
}

/// Transforms an arithmetic term: integer variables keep their names.
fn transform_int(gamma: &InterTypeEnv, t: &Term) -> Result<Term, TranslateError> {
    match t {
        Term::Int(_) => Ok(t.clone()),
        Term::Var(x) if gamma.ints.contains(x) => Ok(t.clone()),
        Term::Var(x) => Err(no_derivation(format!("`{x}` is not an integer binding"))),
        Term::Op(op, a, b) => Ok(Term::Op(
            *op,
            Box::new(transform_int(gamma, a)?),
            Box::new(transform_int(gamma, b)?),
        )),
        other => Err(no_derivation(format!(
            "non-arithmetic term in integer position: {}",
            crate::surface::print_term(other)
        ))),
    }
}

fn transform_cond(gamma: &InterTypeEnv, c: &Cond) -> Result<Cond, TranslateError> {
    match c {
        Cond::Cmp(op, a, b) => Ok(Cond::cmp(
            *op,
            transform_int(gamma, a)?,
            transform_int(gamma, b)?,
        )),
        Cond::And(a, b) => Ok(Cond::And(
            Box::new(transform_cond(gamma, a)?),
            Box::new(transform_cond(gamma, b)?),
        )),
        Cond::Or(a, b) => Ok(Cond::Or(
            Box::new(transform_cond(gamma, a)?),
            Box::new(transform_cond(gamma, b)?),
        )),
    }
}

fn no_derivation(msg: String) -> TranslateError {
    TranslateError::Totality(format!("no intersection-type derivation: {msg}"))
}

/// Transforms `t` at type `theta` under `gamma`: variables split per
/// (type, priority), arguments are duplicated per conjunct in sorted order,
/// and events branch over the automaton's successor states with the
/// environment raised by each successor's priority. Fails when no derivation
/// exists (a binding the term needs is missing from `gamma`).
pub fn transform_term(
    gamma: &InterTypeEnv,
    t: &Term,
    theta: &InterType,
    a: &ParityAutomaton,
    mangler: &mut Mangler,
) -> Result<Term, TranslateError> {
    match (t, theta) {
        (Term::Unit, InterType::State(_)) => Ok(Term::Unit),
        (Term::Var(_) | Term::App(..), _) => {
            let (head, args) = t.spine();
            let Term::Var(f) = head else {
                return Err(no_derivation(format!(
                    "application head is not a symbol: {}",
                    crate::surface::print_term(head)
                )));
            };
            let candidates: Vec<(InterType, u32)> = gamma
                .usable(f)
                .filter(|(ft, _)| {
                    let (arg_tys, res) = ft.uncurry();
                    arg_tys.len() == args.len() && InterType::State(res.to_string()) == *theta
                })
                .map(|(ft, m)| (ft.clone(), m))
                .collect();
            // Zero-argument, non-unit targets: a bare variable at arrow type.
            if args.is_empty() {
                if let Some((ft, m)) = gamma.usable(f).find(|(ft, _)| *ft == theta) {
                    let ft = ft.clone();
                    return Ok(Term::Var(mangler.name(f, &ft, m)));
                }
            }
            let mut last_err = no_derivation(format!(
                "no usable binding for `{f}` at the required type"
            ));
            for (ft, m) in candidates {
                match transform_app(gamma, f, &ft, m, &args, a, mangler) {
                    Ok(out) => return Ok(out),
                    Err(e) => last_err = e,
                }
            }
            Err(last_err)
        }
        (Term::If(c, a1, a2), InterType::State(_)) => Ok(Term::If(
            transform_cond(gamma, c)?,
            Box::new(transform_term(gamma, a1, theta, a, mangler)?),
            Box::new(transform_term(gamma, a2, theta, a, mangler)?),
        )),
        (Term::Event(label, body), InterType::State(q)) => {
            let succs = sorted_successors(a, q, label);
            if succs.is_empty() {
                return Err(no_derivation(format!(
                    "automaton has no `{label}` transition from `{q}` (complete it first)"
                )));
            }
            let mut branches = Vec::new();
            for qi in &succs {
                let prio = a.priority.get(qi).copied().unwrap_or(0);
                let raised = gamma.raise(prio);
                branches.push(transform_term(
                    &raised,
                    body,
                    &InterType::State(qi.clone()),
                    a,
                    mangler,
                )?);
            }
            let folded = branches
                .into_iter()
                .rev()
                .reduce(|acc, b| Term::NonDet(Box::new(b), Box::new(acc)))
                .expect("nonempty branches");
            Ok(Term::Event(label.clone(), Box::new(folded)))
        }
        (Term::NonDet(a1, a2), InterType::State(_)) => Ok(Term::NonDet(
            Box::new(transform_term(gamma, a1, theta, a, mangler)?),
            Box::new(transform_term(gamma, a2, theta, a, mangler)?),
        )),
        (Term::Abs(params, body), InterType::Arrow(..)) => {
            let (arg_tys, _) = theta.uncurry();
            if arg_tys.len() < params.len() {
                return Err(no_derivation("abstraction arity exceeds its type".into()));
            }
            let mut inner = gamma.clone();
            let mut out_params: Vec<String> = Vec::new();
            for (x, arg_ty) in params.iter().zip(arg_tys.iter()) {
                match arg_ty {
                    ArgType::Int => {
                        inner.bind_int(x.clone());
                        out_params.push(x.clone());
                    }
                    ArgType::Conj(pairs) => {
                        for (ti, mi) in pairs {
                            inner.bind(x.clone(), ti.clone(), *mi, 0);
                            out_params.push(mangler.name(x, ti, *mi));
                        }
                    }
                }
            }
            // Result type after consuming |params| arguments.
            let mut res = theta.clone();
            for _ in params {
                let InterType::Arrow(_, r) = res else { unreachable!() };
                res = *r;
            }
            let body = transform_term(&inner, body, &res, a, mangler)?;
            Ok(Term::Abs(out_params, Box::new(body)))
        }
        _ => Err(no_derivation(format!(
            "term {} does not match type shape",
            crate::surface::print_term(t)
        ))),
    }
}

fn transform_app(
    gamma: &InterTypeEnv,
    f: &str,
    ft: &InterType,
    m: u32,
    args: &[&Term],
    a: &ParityAutomaton,
    mangler: &mut Mangler,
) -> Result<Term, TranslateError> {
    let mut out = Term::Var(mangler.name(f, ft, m));
    let mut cur = ft.clone();
    for arg in args {
        let InterType::Arrow(arg_ty, rest) = cur else {
            unreachable!("arity checked by caller")
        };
        match &arg_ty {
            ArgType::Int => {
                out = Term::app(out, transform_int(gamma, arg)?);
            }
            ArgType::Conj(pairs) => {
                for (ti, mi) in pairs {
                    let raised = gamma.raise(*mi);
                    out = Term::app(out, transform_term(&raised, arg, ti, a, mangler)?);
                }
            }
        }
        cur = *rest;
    }
    Ok(out)
}

// ------------------------------------------------------------------
// Canonical construction

/// Canonical refinement types of a simple type: one per automaton state,
/// with every arrow argument carrying the full conjunction over all
/// canonical argument types and all priorities `0..=M`.
fn canonical_types(simple: &SimpleType, states: &[String], max_prio: u32) -> Vec<InterType> {
    match simple {
        SimpleType::Unit => states
            .iter()
            .map(|q| InterType::State(q.clone()))
            .collect(),
        SimpleType::Int => Vec::new(),
        SimpleType::Arrow(arg, res) => {
            let arg_ty = canonical_arg(arg, states, max_prio);
            canonical_types(res, states, max_prio)
                .into_iter()
                .map(|r| InterType::arrow(arg_ty.clone(), r))
                .collect()
        }
    }
}

fn canonical_arg(simple: &SimpleType, states: &[String], max_prio: u32) -> ArgType {
    match simple {
        SimpleType::Int => ArgType::Int,
        _ => {
            let mut pairs: Vec<(InterType, u32)> = canonical_types(simple, states, max_prio)
                .into_iter()
                .flat_map(|t| (0..=max_prio).map(move |m| (t.clone(), m)))
                .collect();
            pairs.sort();
            pairs.dedup();
            ArgType::Conj(pairs)
        }
    }
}

/// Result of the transformation: the witness environment, the replicated
/// program and its priority assignment.
pub struct TransformOutput {
    pub env: TopLevelEnv,
    pub program: Program,
    pub priorities: PriorityAssignment,
    pub mangler: Mangler,
}

fn prepared(p: &Program) -> Result<(Program, crate::surface::TypeEnv), TranslateError> {
    let mut q = normalize_program(p);
    lift_lambdas(&mut q);
    totality_check(&q).map_err(|e| TranslateError::Totality(e.to_string()))?;
    let env = typecheck_program(&q)?;
    Ok((q, env))
}

struct Builder<'a> {
    program: Program,
    simple: crate::surface::TypeEnv,
    automaton: &'a ParityAutomaton,
    states: Vec<String>,
    max_prio: u32,
    /// Current argument types per (definition, result state): the canonical
    /// conjunctions, possibly narrowed to the pairs the bodies actually use.
    conj: BTreeMap<(String, String), Vec<ArgType>>,
}

impl Builder<'_> {
    fn def_theta(&self, f: &str, q: &str) -> InterType {
        let args = &self.conj[&(f.to_string(), q.to_string())];
        args.iter().rev().fold(
            InterType::State(q.to_string()),
            |acc, a| InterType::arrow(a.clone(), acc),
        )
    }

    /// The environment for checking any body: every definition instance at
    /// every priority, raised component zero.
    fn base_env(&self) -> InterTypeEnv {
        let mut env = InterTypeEnv::default();
        for f in self.program.defs.keys() {
            for q in &self.states {
                let theta = self.def_theta(f, q);
                for m in 0..=self.max_prio {
                    env.bind(f.clone(), theta.clone(), m, 0);
                }
            }
        }
        env
    }

    /// Transforms the body of `f` at result state `q`; shared by all
    /// priority variants of the instance.
    fn transform_def(
        &self,
        f: &str,
        q: &str,
        mangler: &mut Mangler,
    ) -> Result<(Vec<String>, Term), TranslateError> {
        let def = &self.program.defs[f];
        let mut env = self.base_env();
        let args = self.conj[&(f.to_string(), q.to_string())].clone();
        let mut out_params = Vec::new();
        for (x, arg_ty) in def.params.iter().zip(&args) {
            match arg_ty {
                ArgType::Int => {
                    env.bind_int(x.clone());
                    out_params.push(x.clone());
                }
                ArgType::Conj(pairs) => {
                    for (ti, mi) in pairs {
                        env.bind(x.clone(), ti.clone(), *mi, 0);
                        out_params.push(mangler.name(x, ti, *mi));
                    }
                }
            }
        }
        let body = transform_term(
            &env,
            &def.body,
            &InterType::State(q.to_string()),
            self.automaton,
            mangler,
        )?;
        Ok((out_params, body))
    }
}

fn initial_builder<'a>(
    p: &Program,
    a: &'a ParityAutomaton,
) -> Result<Builder<'a>, TranslateError> {
    if !a.is_total() {
        return Err(TranslateError::Totality(
            "parity automaton must be complete (apply complete_parity)".into(),
        ));
    }
    let (program, simple) = prepared(p)?;
    let states: Vec<String> = a.states.iter().cloned().collect();
    let max_prio = a.max_priority();
    let mut conj = BTreeMap::new();
    for (f, _) in &program.defs {
        let (arg_tys, res) = simple.bindings[f].uncurry();
        if *res != SimpleType::Unit {
            return Err(TranslateError::Totality(format!(
                "definition `{f}` does not return unit"
            )));
        }
        let args: Vec<ArgType> = arg_tys
            .iter()
            .map(|t| canonical_arg(t, &states, max_prio))
            .collect();
        for q in &states {
            conj.insert((f.clone(), q.clone()), args.clone());
        }
    }
    Ok(Builder { program, simple, automaton: a, states, max_prio, conj })
}

/// The canonical construction: every definition is replicated per automaton
/// state and priority, arguments carry full conjunctions, and the priority
/// of instance `(f, theta, m)` is `m + 1`.
pub fn canonical_transform(
    p: &Program,
    a: &ParityAutomaton,
) -> Result<TransformOutput, TranslateError> {
    let builder = initial_builder(p, a)?;
    emit(&builder, false)
}

/// Canonical construction followed by usage narrowing (argument conjunctions
/// shrink to the pairs bodies actually use) and reachability pruning from
/// the main instance.
pub fn infer_intersection_transform(
    p: &Program,
    a: &ParityAutomaton,
) -> Result<TransformOutput, TranslateError> {
    let mut builder = initial_builder(p, a)?;
    narrow_to_fixpoint(&mut builder)?;
    emit(&builder, true)
}

/// Shrinks every argument conjunction to the pairs used by some body, until
/// stable. Usage only decreases, so this terminates.
fn narrow_to_fixpoint(builder: &mut Builder) -> Result<(), TranslateError> {
    loop {
        let mut mangler = Mangler::default();
        // usage[(f, q)][param index] = set of used pairs
        let mut usage: BTreeMap<(String, String), Vec<BTreeSet<(InterType, u32)>>> =
            BTreeMap::new();
        let def_names: Vec<String> = builder.program.defs.keys().cloned().collect();
        for f in &def_names {
            for q in builder.states.clone() {
                let (_, body) = builder.transform_def(f, &q, &mut mangler)?;
                let def = &builder.program.defs[f];
                let mut param_usage: Vec<BTreeSet<(InterType, u32)>> =
                    vec![BTreeSet::new(); def.params.len()];
                collect_usage(&body, &mangler, &mut |base, ty, m| {
                    if let Some(idx) = def.params.iter().position(|p| p == base) {
                        param_usage[idx].insert((ty.clone(), m));
                    }
                });
                usage.insert((f.clone(), q.clone()), param_usage);
            }
        }
        let mut changed = false;
        for ((f, q), param_usage) in usage {
            let entry = builder.conj.get_mut(&(f.clone(), q.clone())).unwrap();
            for (idx, used) in param_usage.iter().enumerate() {
                if let ArgType::Conj(pairs) = &mut entry[idx] {
                    let narrowed: Vec<(InterType, u32)> = pairs
                        .iter()
                        .filter(|pair| used.contains(pair))
                        .cloned()
                        .collect();
                    if narrowed.len() != pairs.len() {
                        *pairs = narrowed;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

fn collect_usage(t: &Term, mangler: &Mangler, record: &mut dyn FnMut(&str, &InterType, u32)) {
    match t {
        Term::Var(x) => {
            if let Some((base, ty, m)) = mangler.decode(x) {
                record(base, ty, *m);
            }
        }
        Term::Unit | Term::Int(_) => {}
        Term::Op(_, a, b) | Term::App(a, b) | Term::NonDet(a, b) => {
            collect_usage(a, mangler, record);
            collect_usage(b, mangler, record);
        }
        Term::If(_, a, b) => {
            collect_usage(a, mangler, record);
            collect_usage(b, mangler, record);
        }
        Term::Event(_, body) | Term::Abs(_, body) => collect_usage(body, mangler, record),
    }
}

/// Builds the output program. With `prune` set, only instances reachable
/// from the main instance are emitted.
fn emit(builder: &Builder, prune: bool) -> Result<TransformOutput, TranslateError> {
    let mut mangler = Mangler::default();
    let q_init = builder.automaton.init.clone();

    // Transform every (definition, state) body once; bodies are shared by
    // the priority variants.
    let mut bodies: BTreeMap<(String, String), (Vec<String>, Term)> = BTreeMap::new();
    for f in builder.program.defs.keys() {
        for q in &builder.states {
            bodies.insert(
                (f.clone(), q.clone()),
                builder.transform_def(f, q, &mut mangler)?,
            );
        }
    }
    let main_body = bodies[&(builder.program.main.clone(), q_init.clone())].1.clone();

    // Which instances does each body mention?
    let instance_refs = |body: &Term, mangler: &Mangler| {
        let mut refs: BTreeSet<(String, InterType, u32)> = BTreeSet::new();
        collect_usage(body, mangler, &mut |base, ty, m| {
            if builder.program.defs.contains_key(base) {
                refs.insert((base.to_string(), ty.clone(), m));
            }
        });
        refs
    };

    let all_instances: BTreeSet<(String, InterType, u32)> = builder
        .program
        .defs
        .keys()
        .flat_map(|f| {
            builder.states.iter().flat_map(move |q| {
                (0..=builder.max_prio).map(move |m| {
                    (f.clone(), builder.def_theta(f, q), m)
                })
            })
        })
        .collect();

    let kept: BTreeSet<(String, InterType, u32)> = if prune {
        let mut kept: BTreeSet<(String, InterType, u32)> = BTreeSet::new();
        let mut frontier: Vec<(String, InterType, u32)> =
            instance_refs(&main_body, &mangler).into_iter().collect();
        for inst in &frontier {
            kept.insert(inst.clone());
        }
        while let Some((f, theta, _m)) = frontier.pop() {
            let (_, q) = theta.uncurry();
            let body = &bodies[&(f.clone(), q.to_string())].1;
            for inst in instance_refs(body, &mangler) {
                if kept.insert(inst.clone()) {
                    frontier.push(inst);
                }
            }
        }
        kept
    } else {
        all_instances.clone()
    };

    // Emit instance definitions in a deterministic order: original
    // definition order, then type, then priority.
    let mut program = Program {
        defs: indexmap::IndexMap::new(),
        main: builder.program.main.clone(),
    };
    let mut priorities = PriorityAssignment::new();
    let mut env = TopLevelEnv::default();
    for f in builder.program.defs.keys() {
        let mut insts: Vec<&(String, InterType, u32)> = kept
            .iter()
            .filter(|(g, _, _)| g == f)
            .collect();
        insts.sort();
        for (g, theta, m) in insts {
            let (_, q) = theta.uncurry();
            let (params, body) = bodies[&(g.clone(), q.to_string())].clone();
            let name = mangler.name(g, theta, *m);
            program.defs.insert(name.clone(), Def { params, body });
            priorities.insert(name, m + 1);
            env.bindings.insert((g.clone(), theta.clone(), *m));
        }
    }
    // The entry point: a plain nullary main whose body is the main body at
    // the initial state.
    let main_name = builder.program.main.clone();
    program.defs.insert(
        main_name.clone(),
        Def { params: builder_params(builder, &main_name, &mut mangler), body: main_body },
    );
    priorities.insert(main_name.clone(), 1);
    env.bindings.insert((
        main_name.clone(),
        builder.def_theta(&main_name, &q_init),
        0,
    ));

    // The simple-type side conditions: every emitted binding refines the
    // simple type of its origin.
    debug_assert!(env.bindings.iter().all(|(f, theta, _)| {
        theta.refines(&builder.simple.bindings[f])
    }));

    Ok(TransformOutput { env, program, priorities, mangler })
}

fn builder_params(builder: &Builder, f: &str, mangler: &mut Mangler) -> Vec<String> {
    // main is nullary after normalization, so this is usually empty.
    let def = &builder.program.defs[f];
    let q = &builder.automaton.init;
    let args = &builder.conj[&(f.to_string(), q.clone())];
    let mut out = Vec::new();
    for (x, arg_ty) in def.params.iter().zip(args) {
        match arg_ty {
            ArgType::Int => out.push(x.clone()),
            ArgType::Conj(pairs) => {
                for (ti, mi) in pairs {
                    out.push(mangler.name(x, ti, *mi));
                }
            }
        }
    }
    out
}

/// One step of the pruning operator: keep a binding when the definition body
/// still has a derivation under the pruned environment. `prune_environment`
/// iterates this to its greatest fixpoint.
fn filter_derivable(
    xi: &TopLevelEnv,
    p: &Program,
    a: &ParityAutomaton,
) -> Result<TopLevelEnv, TranslateError> {
    let mut out = TopLevelEnv::default();
    for (f, theta, m) in &xi.bindings {
        let Some(def) = p.defs.get(f) else { continue };
        let mut env = xi.to_value_env();
        let (arg_tys, res) = theta.uncurry();
        if arg_tys.len() < def.params.len() {
            continue;
        }
        let mut ok = true;
        for (x, arg_ty) in def.params.iter().zip(arg_tys.iter()) {
            match arg_ty {
                ArgType::Int => env.bind_int(x.clone()),
                ArgType::Conj(pairs) => {
                    for (ti, mi) in pairs {
                        env.bind(x.clone(), ti.clone(), *mi, 0);
                    }
                }
            }
        }
        let mut mangler = Mangler::default();
        if transform_term(
            &env,
            &def.body,
            &InterType::State(res.to_string()),
            a,
            &mut mangler,
        )
        .is_err()
        {
            ok = false;
        }
        if ok {
            out.bindings.insert((f.clone(), theta.clone(), *m));
        }
    }
    Ok(out)
}

/// Greatest fixpoint of the derivability filter on subsets of the canonical
/// environment: repeatedly drops bindings whose definition body is no longer
/// derivable under what remains.
pub fn prune_environment(
    xi: &TopLevelEnv,
    p: &Program,
    a: &ParityAutomaton,
) -> Result<TopLevelEnv, TranslateError> {
    let (program, _) = prepared(p)?;
    let mut cur = xi.clone();
    loop {
        let next = filter_derivable(&cur, &program, a)?;
        if next == cur {
            return Ok(next);
        }
        cur = next;
    }
}

/// End-to-end temporal verification: replicate the program along the
/// (completed) automaton, then run call-sequence analysis on the result. The
/// produced system is modal-free and valid on the trivial LTS exactly when
/// no infinite trace of the program is accepted by the automaton.
pub fn temporal_pipeline(p: &Program, a: &ParityAutomaton) -> Result<Hes, TranslateError> {
    let total = crate::automata::complete_parity(a);
    let out = infer_intersection_transform(p, &total)?;
    super::translate_csa(&out.program, &out.priorities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures::automaton_ab;
    use crate::surface::parse_program;

    fn qa() -> InterType {
        InterType::State("qa".into())
    }

    fn qb() -> InterType {
        InterType::State("qb".into())
    }

    /// The two-state program: g duplicates its continuation per event branch,
    /// f recurses with a decreasing counter.
    fn example_program() -> Program {
        parse_program(
            "g k = (event a; k) <> (event b; k);\n\
             f x = if x > 0 then g (f (x - 1)) else (event b; f 5);\n\
             main = f 5",
        )
        .unwrap()
    }

    #[test]
    fn env_raise_examples() {
        let mut gamma = InterTypeEnv::default();
        gamma.bind("k", qa(), 0, 0);
        assert_eq!(env_raise(&gamma, 0), gamma);
        let raised = env_raise(&gamma, 1);
        assert_eq!(
            raised.refined.iter().next().unwrap(),
            &("k".to_string(), qa(), 0, 1)
        );

        let mut ints = InterTypeEnv::default();
        ints.bind_int("x");
        assert_eq!(env_raise(&ints, 5), ints);
    }

    #[test]
    fn transform_duplicating_continuation() {
        // g's body under k : (qa,0,0), (qb,1,0) at qa becomes
        // (event a; k_{qa,0}) <> (event b; k_{qb,1})
        let a = automaton_ab();
        let mut gamma = InterTypeEnv::default();
        gamma.bind("k", qa(), 0, 0);
        gamma.bind("k", qb(), 1, 0);
        let body = parse_program("main = (event a; k) <> (event b; k); k = ()")
            .unwrap()
            .main_def()
            .body
            .clone();
        let mut mangler = Mangler::default();
        let out = transform_term(&gamma, &body, &qa(), &a, &mut mangler).unwrap();
        let Term::NonDet(left, right) = &out else { panic!("expected choice") };
        let Term::Event(la, ka) = &**left else { panic!("expected event") };
        let Term::Event(lb, kb) = &**right else { panic!("expected event") };
        assert_eq!(la, "a");
        assert_eq!(lb, "b");
        assert_eq!(mangler.decode(ka.spine().0.var_name()).unwrap().2, 0);
        assert_eq!(mangler.decode(kb.spine().0.var_name()).unwrap().2, 1);
        assert_eq!(mangler.decode(ka.spine().0.var_name()).unwrap().1, qa());
        assert_eq!(mangler.decode(kb.spine().0.var_name()).unwrap().1, qb());
    }

    #[test]
    fn unit_transforms_to_unit() {
        let a = automaton_ab();
        let mut mangler = Mangler::default();
        let out = transform_term(
            &InterTypeEnv::default(),
            &Term::Unit,
            &qa(),
            &a,
            &mut mangler,
        )
        .unwrap();
        assert_eq!(out, Term::Unit);
    }

    #[test]
    fn missing_binding_is_reported() {
        let a = automaton_ab();
        let mut mangler = Mangler::default();
        let err = transform_term(
            &InterTypeEnv::default(),
            &Term::Var("k".into()),
            &qa(),
            &a,
            &mut mangler,
        );
        assert!(err.is_err());
    }

    #[test]
    fn pruned_transform_matches_published_instances() {
        let p = example_program();
        let a = automaton_ab();
        let out = infer_intersection_transform(&p, &a).unwrap();
        // exactly the four instances besides main
        let non_main: Vec<&(String, InterType, u32)> = out
            .env
            .bindings
            .iter()
            .filter(|(f, _, _)| f != "main")
            .collect();
        assert_eq!(non_main.len(), 4, "bindings: {non_main:?}");
        let narrowed = ArgType::Conj(vec![(qa(), 0), (qb(), 1)]);
        let expected: BTreeSet<(String, InterType, u32)> = BTreeSet::from([
            ("f".to_string(), InterType::arrow(ArgType::Int, qa()), 0),
            ("f".to_string(), InterType::arrow(ArgType::Int, qb()), 1),
            ("g".to_string(), InterType::arrow(narrowed.clone(), qa()), 0),
            ("g".to_string(), InterType::arrow(narrowed.clone(), qb()), 0),
        ]);
        let actual: BTreeSet<(String, InterType, u32)> =
            non_main.into_iter().cloned().collect();
        assert_eq!(actual, expected);
        // priorities are m + 1
        let mut prios: Vec<u32> = out
            .priorities
            .iter()
            .filter(|(name, _)| *name != "main")
            .map(|(_, p)| *p)
            .collect();
        prios.sort();
        assert_eq!(prios, vec![1, 1, 1, 2]);
    }

    #[test]
    fn transformed_f_duplicates_g_arguments() {
        let p = example_program();
        let a = automaton_ab();
        let out = infer_intersection_transform(&p, &a).unwrap();
        // find the f instance at qa, priority 0
        let f_qa = out
            .program
            .defs
            .iter()
            .find(|(name, _)| {
                out.mangler
                    .decode(name)
                    .is_some_and(|(b, t, m)| b == "f" && *m == 0 && t.uncurry().1 == "qa")
            })
            .expect("f instance at qa");
        let Term::If(_, then, _) = &f_qa.1.body else { panic!("expected if") };
        let (head, args) = then.spine();
        let (base, _, m) = out.mangler.decode(head.var_name()).unwrap();
        assert_eq!(base, "g");
        assert_eq!(*m, 0);
        // g takes the duplicated continuation: f at (qa,0) and f at (qb,1)
        assert_eq!(args.len(), 2);
        let decode_head = |t: &Term| {
            let (h, _) = t.spine();
            out.mangler.decode(h.var_name()).unwrap().clone()
        };
        let (b0, t0, m0) = decode_head(args[0]);
        let (b1, t1, m1) = decode_head(args[1]);
        assert_eq!((b0.as_str(), m0), ("f", 0));
        assert_eq!((b1.as_str(), m1), ("f", 1));
        assert_eq!(t0.uncurry().1, "qa");
        assert_eq!(t1.uncurry().1, "qb");
    }

    #[test]
    fn canonical_environment_is_a_fixpoint_of_pruning() {
        let p = example_program();
        let a = automaton_ab();
        let canonical = canonical_transform(&p, &a).unwrap();
        let pruned = prune_environment(&canonical.env, &p, &a).unwrap();
        assert_eq!(pruned, canonical.env);

        let empty = TopLevelEnv::default();
        assert_eq!(prune_environment(&empty, &p, &a).unwrap(), empty);
    }

    #[test]
    fn underivable_binding_is_dropped_in_one_step() {
        let p = parse_program("f = event a; f; main = f").unwrap();
        let a = automaton_ab();
        // f at qa needs f at qa (delta(qa, a) = {qa}); claiming only a qb
        // binding is underivable.
        let mut xi = TopLevelEnv::default();
        xi.bindings.insert(("f".to_string(), qb(), 0));
        let pruned = prune_environment(&xi, &p, &a).unwrap();
        assert!(pruned.bindings.is_empty());
    }

    #[test]
    fn totality_violations_are_rejected() {
        let p = parse_program("main = event a; ()").unwrap();
        let a = automaton_ab();
        assert!(matches!(
            infer_intersection_transform(&p, &a),
            Err(TranslateError::Totality(_))
        ));
    }

    #[test]
    fn transformed_program_is_simply_typed_and_trace_equivalent() {
        let p = example_program();
        let a = automaton_ab();
        let out = infer_intersection_transform(&p, &a).unwrap();
        crate::surface::typecheck_program(&out.program).unwrap();
        let source = crate::semantics::enumerate_traces(&normalize_program(&p), 12).unwrap();
        let target = crate::semantics::enumerate_traces(&out.program, 12).unwrap();
        assert_eq!(source.finite, target.finite);
        assert_eq!(source.maximal_finite, target.maximal_finite);
    }

    trait VarName {
        fn var_name(&self) -> &str;
    }

    impl VarName for Term {
        fn var_name(&self) -> &str {
            match self {
                Term::Var(x) => x,
                _ => panic!(
                    "expected a variable, found {}",
                    crate::surface::print_term(self)
                ),
            }
        }
    }
}
