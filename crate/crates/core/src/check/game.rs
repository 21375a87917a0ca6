//! Grounding a compiled equation system over a finite LTS into a parity
//! game: nodes are (formula position, argument environment, state)
//! configurations, memoized by value.
//!
//! Integer arguments are tracked exactly. When a configuration repeats up to
//! a constant shift of its integer arguments, the builder attempts to
//! collapse the family of unfoldings into a finite quotient: integers become
//! affine functions of a loop counter, and the quotient is kept only when
//! every guard's truth is independent of the counter and the symbolic
//! expansion closes. The quotient is exact, so verdicts remain exact.
//! When the graph cannot be finished within the node budget, a two-sided
//! solve over the partial graph may still conclude a definite verdict.

use super::compile::{CNode, CompiledHes, CompiledLts, NodeId, Slot};
use super::parity::{GameNode, ParityGame, Player};
use super::CheckError;
use crate::ops::CmpOp;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// An integer affine in the loop counter `k >= 0`: `base + coeff * k`.
/// Concrete values have zero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub base: BigInt,
    pub coeff: BigInt,
}

impl Affine {
    fn constant(n: BigInt) -> Affine {
        Affine { base: n, coeff: BigInt::ZERO }
    }

    fn is_constant(&self) -> bool {
        self.coeff.is_zero()
    }
}

/// Outcome-changing situations during a symbolic (quotient) attempt.
#[derive(Debug, Clone)]
pub struct Bail(pub String);

fn affine_add(a: &Affine, b: &Affine) -> Affine {
    Affine { base: &a.base + &b.base, coeff: &a.coeff + &b.coeff }
}

fn affine_sub(a: &Affine, b: &Affine) -> Affine {
    Affine { base: &a.base - &b.base, coeff: &a.coeff - &b.coeff }
}

fn affine_mul(a: &Affine, b: &Affine) -> Result<Affine, Bail> {
    if a.is_constant() {
        Ok(Affine { base: &a.base * &b.base, coeff: &a.base * &b.coeff })
    } else if b.is_constant() {
        Ok(Affine { base: &a.base * &b.base, coeff: &b.base * &a.coeff })
    } else {
        Err(Bail("product of two counter-dependent integers".into()))
    }
}

/// Truth of `diff(k) cmp 0` for every `k >= 0`, or `None` when it varies.
fn const_truth(op: CmpOp, diff: &Affine) -> Option<bool> {
    let (a, b) = (&diff.base, &diff.coeff);
    if b.is_zero() {
        return Some(op.holds(a, &BigInt::ZERO));
    }
    match op {
        CmpOp::Eq | CmpOp::Ne => {
            // a + b k = 0 at k = -a/b; constant iff no solution with k >= 0
            let root_exists = (a.clone() % b.clone()).is_zero() && {
                let k = -a.clone() / b.clone();
                k >= BigInt::ZERO
            };
            if root_exists {
                None
            } else {
                Some(op == CmpOp::Ne)
            }
        }
        CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => {
            // strictly monotone in k: constant iff truth at 0 matches the limit
            let at_zero = op.holds(a, &BigInt::ZERO);
            let at_infinity = match op {
                CmpOp::Lt | CmpOp::Le => b.is_negative(),
                CmpOp::Gt | CmpOp::Ge => b.is_positive(),
                _ => unreachable!(),
            };
            if at_zero == at_infinity {
                Some(at_zero)
            } else {
                None
            }
        }
    }
}

/// Ground values: integers (possibly counter-affine or fully abstracted),
/// semantic state sets for proposition arguments, and interned closures for
/// everything higher-order or not yet evaluable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GVal {
    Int(Affine),
    /// An integer about which nothing is assumed; sound to merge only when
    /// no guard on the path inspects it.
    StarInt,
    Set(BTreeSet<u16>),
    Clo(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CloData {
    /// An equation variable used as a value.
    Eq(usize),
    /// A deferred expression with its captured environment (sorted by slot).
    Expr { node: NodeId, env: Vec<(Slot, GVal)> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Form { node: NodeId, env: Vec<(Slot, GVal)>, state: u16 },
    Unfold { eq: usize, args: Vec<GVal>, state: u16 },
}

#[derive(Debug, Clone)]
struct GNode {
    key: Key,
    owner: Player,
    priority: u32,
    succs: Vec<usize>,
    expanded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid,
    Unknown(UnknownReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    Budget,
    NonGround,
}

/// The grounded game plus enough metadata to solve it one- or two-sidedly.
pub struct GroundGame {
    nodes: Vec<GNode>,
    pub complete: bool,
    initials: Vec<(u16, usize)>,
}

impl GroundGame {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn to_parity(&self, frontier_owner: Option<Player>) -> ParityGame {
        let nodes = self
            .nodes
            .iter()
            .map(|n| GameNode {
                owner: if n.expanded {
                    n.owner
                } else {
                    frontier_owner.unwrap_or(n.owner)
                },
                priority: if n.expanded { n.priority } else { 0 },
                succs: if n.expanded { n.succs.clone() } else { Vec::new() },
            })
            .collect();
        ParityGame { nodes, initial: self.initials.first().map(|(_, i)| *i).unwrap_or(0) }
    }

    /// Definite winner at each requested initial state, if the partial graph
    /// already determines one: unexpanded nodes are treated as losing for
    /// the verifier and for the refuter in turn.
    pub fn verdicts(&self) -> Vec<(u16, Verdict)> {
        if self.complete {
            let solution = super::parity::solve_parity_game(&self.to_parity(None));
            return self
                .initials
                .iter()
                .map(|&(s, id)| {
                    let v = match solution.winner_at(id) {
                        Player::Verifier => Verdict::Valid,
                        Player::Refuter => Verdict::Invalid,
                    };
                    (s, v)
                })
                .collect();
        }
        let pessimistic =
            super::parity::solve_parity_game(&self.to_parity(Some(Player::Verifier)));
        let optimistic =
            super::parity::solve_parity_game(&self.to_parity(Some(Player::Refuter)));
        self.initials
            .iter()
            .map(|&(s, id)| {
                let v = if pessimistic.winner_at(id) == Player::Verifier {
                    Verdict::Valid
                } else if optimistic.winner_at(id) == Player::Refuter {
                    Verdict::Invalid
                } else {
                    Verdict::Unknown(UnknownReason::Budget)
                };
                (s, v)
            })
            .collect()
    }

    /// Edge-list dump for debugging.
    pub fn dump(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let owner = match n.owner {
                Player::Verifier => "V",
                Player::Refuter => "R",
            };
            let succs: Vec<String> = n.succs.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "node {i} {owner} prio {} {} -> {}",
                n.priority,
                if n.expanded { "expanded" } else { "frontier" },
                succs.join(" ")
            );
        }
        out
    }
}

type SiblingKey = (usize, u16, Vec<Option<GVal>>);

/// Undo log for a symbolic attempt: everything an attempt adds is appended,
/// so rolling back truncates the arenas and removes the recorded map keys.
#[derive(Default)]
struct Journal {
    node_start: usize,
    clo_start: usize,
    queue_start: usize,
    key_inserts: Vec<Key>,
    sibling_writes: Vec<(SiblingKey, Option<usize>)>,
}

struct Grounder<'a> {
    hes: &'a CompiledHes,
    lts: &'a CompiledLts,
    budget: usize,
    arity: Vec<usize>,
    clos: Vec<CloData>,
    clo_ids: HashMap<CloData, u32>,
    keys: HashMap<Key, usize>,
    nodes: Vec<GNode>,
    queue: VecDeque<usize>,
    /// Most recent concrete unfold per (eq, state, non-integer argument
    /// signature), used to spot integer-shifted repeats.
    siblings: HashMap<SiblingKey, usize>,
    failed_attempts: std::collections::HashSet<(bool, usize, u16, Vec<GVal>, Vec<BigInt>)>,
    /// Some while running a symbolic attempt; suppresses nested attempts.
    journal: Option<Journal>,
    /// Symbolic nodes created by the current attempt, not yet expanded.
    attempt_work: Vec<usize>,
    attempt_created: usize,
    /// Total work spent in attempts; a brake against pathological retries.
    attempt_ops: usize,
}

const ATTEMPT_NODE_CAP: usize = 2_000;

impl<'a> Grounder<'a> {
    fn new(hes: &'a CompiledHes, lts: &'a CompiledLts, budget: usize) -> Self {
        // type arity: arguments an equation consumes before reaching prop
        let arity = hes
            .eqs
            .iter()
            .map(|eq| hes.types[eq.rhs].uncurry().0.len())
            .collect();
        Grounder {
            hes,
            lts,
            budget,
            arity,
            clos: Vec::new(),
            clo_ids: HashMap::new(),
            keys: HashMap::new(),
            nodes: Vec::new(),
            queue: VecDeque::new(),
            siblings: HashMap::new(),
            failed_attempts: std::collections::HashSet::new(),
            journal: None,
            attempt_work: Vec::new(),
            attempt_created: 0,
            attempt_ops: 0,
        }
    }

    fn in_attempt(&self) -> bool {
        self.journal.is_some()
    }

    fn intern_clo(&mut self, data: CloData) -> u32 {
        if let Some(&id) = self.clo_ids.get(&data) {
            return id;
        }
        let id = self.clos.len() as u32;
        self.clos.push(data.clone());
        self.clo_ids.insert(data, id);
        id
    }

    fn rollback(&mut self, journal: Journal) {
        for key in &journal.key_inserts {
            self.keys.remove(key);
        }
        for (key, old) in journal.sibling_writes.iter().rev() {
            match old {
                Some(id) => {
                    self.siblings.insert(key.clone(), *id);
                }
                None => {
                    self.siblings.remove(key);
                }
            }
        }
        for data in self.clos.drain(journal.clo_start..).collect::<Vec<_>>() {
            self.clo_ids.remove(&data);
        }
        self.nodes.truncate(journal.node_start);
        self.queue.truncate(journal.queue_start);
    }

    // ---- symbolic helpers -------------------------------------------------

    fn val_symbolic(&self, v: &GVal) -> bool {
        match v {
            GVal::Int(a) => !a.is_constant(),
            GVal::StarInt => true,
            GVal::Set(_) => false,
            GVal::Clo(c) => self.clo_symbolic(*c),
        }
    }

    fn clo_symbolic(&self, c: u32) -> bool {
        match &self.clos[c as usize] {
            CloData::Eq(_) => false,
            CloData::Expr { env, .. } => env.iter().any(|(_, v)| self.val_symbolic(v)),
        }
    }

    fn key_symbolic(&self, key: &Key) -> bool {
        match key {
            Key::Form { env, .. } => env.iter().any(|(_, v)| self.val_symbolic(v)),
            Key::Unfold { args, .. } => args.iter().any(|v| self.val_symbolic(v)),
        }
    }

    /// `k := k - 1`: subtracts one traversal of the loop (base -= coeff).
    fn unshift_val(&mut self, v: &GVal) -> GVal {
        match v {
            GVal::Int(a) => GVal::Int(Affine {
                base: &a.base - &a.coeff,
                coeff: a.coeff.clone(),
            }),
            GVal::StarInt => GVal::StarInt,
            GVal::Set(s) => GVal::Set(s.clone()),
            GVal::Clo(c) => {
                let data = self.clos[*c as usize].clone();
                match data {
                    CloData::Eq(_) => GVal::Clo(*c),
                    CloData::Expr { node, env } => {
                        let env = env
                            .iter()
                            .map(|(s, v)| (*s, self.unshift_val(v)))
                            .collect();
                        GVal::Clo(self.intern_clo(CloData::Expr { node, env }))
                    }
                }
            }
        }
    }

    fn unshift_key(&mut self, key: &Key) -> Key {
        match key {
            Key::Form { node, env, state } => Key::Form {
                node: *node,
                env: env.iter().map(|(s, v)| (*s, self.unshift_val(v))).collect(),
                state: *state,
            },
            Key::Unfold { eq, args, state } => Key::Unfold {
                eq: *eq,
                args: args.iter().map(|v| self.unshift_val(v)).collect(),
                state: *state,
            },
        }
    }

    // ---- node creation ----------------------------------------------------

    fn node_for_key(&mut self, key: Key) -> Result<usize, Bail> {
        if let Some(&id) = self.keys.get(&key) {
            return Ok(id);
        }
        let symbolic = self.key_symbolic(&key);
        if symbolic {
            // quotient back-edge: the same configuration one loop iteration
            // earlier already exists
            let prev = self.unshift_key(&key);
            if prev != key {
                if let Some(&id) = self.keys.get(&prev) {
                    return Ok(id);
                }
            }
            if !self.in_attempt() {
                return Err(Bail("symbolic value outside an attempt".into()));
            }
            self.attempt_created += 1;
            self.attempt_ops += 1;
            if self.attempt_created > ATTEMPT_NODE_CAP {
                return Err(Bail("quotient attempt exceeded its node cap".into()));
            }
        } else if let Key::Unfold { eq, args, state } = &key {
            // a fresh concrete unfolding; try to fold it into a quotient
            // when an integer-shifted sibling exists
            if !self.in_attempt() {
                if let Some(id) = self.try_accelerate(*eq, args, *state) {
                    self.keys.insert(key, id);
                    return Ok(id);
                }
            }
        }
        let priority = match &key {
            Key::Unfold { eq, .. } => self.hes.prio[*eq],
            Key::Form { .. } => 0,
        };
        let id = self.nodes.len();
        self.nodes.push(GNode {
            key: key.clone(),
            owner: Player::Verifier,
            priority,
            succs: Vec::new(),
            expanded: false,
        });
        self.keys.insert(key.clone(), id);
        if let Some(journal) = &mut self.journal {
            journal.key_inserts.push(key.clone());
        }
        if self.in_attempt() && symbolic {
            self.attempt_work.push(id);
        } else {
            self.queue.push_back(id);
        }
        if let Key::Unfold { eq, args, state } = &key {
            if !symbolic {
                let sig = nonint_signature(args);
                let sib_key = (*eq, *state, sig);
                let old = self.siblings.insert(sib_key.clone(), id);
                if let Some(journal) = &mut self.journal {
                    journal.sibling_writes.push((sib_key, old));
                }
            }
        }
        Ok(id)
    }

    fn sibling_delta(&self, old_args: &[GVal], new_args: &[GVal]) -> Option<Vec<BigInt>> {
        let mut delta = Vec::new();
        for (o, n) in old_args.iter().zip(new_args) {
            match (o, n) {
                (GVal::Int(a), GVal::Int(b)) if a.is_constant() && b.is_constant() => {
                    delta.push(&b.base - &a.base);
                }
                (x, y) if x == y => delta.push(BigInt::ZERO),
                _ => return None,
            }
        }
        if delta.iter().all(|d| d.is_zero()) {
            None
        } else {
            Some(delta)
        }
    }

    fn try_accelerate(&mut self, eq: usize, args: &[GVal], state: u16) -> Option<usize> {
        // a brake against endlessly retrying attempts that keep bailing
        if self.attempt_ops > 4 * self.budget + 100_000 {
            return None;
        }
        let sig = nonint_signature(args);
        let &sibling = self.siblings.get(&(eq, state, sig.clone()))?;
        let Key::Unfold { args: old_args, .. } = self.nodes[sibling].key.clone() else {
            return None;
        };
        let delta = self.sibling_delta(&old_args, args)?;

        // Strongest first: forget the changing integers entirely.
        let star_args: Vec<GVal> = args
            .iter()
            .zip(&delta)
            .map(|(v, d)| if d.is_zero() { v.clone() } else { GVal::StarInt })
            .collect();
        if let Some(id) = self.run_attempt(true, eq, star_args, state, args, &delta) {
            return Some(id);
        }
        // Then the affine family seeded at the new arguments.
        let affine_args: Vec<GVal> = args
            .iter()
            .zip(&delta)
            .map(|(v, d)| match v {
                GVal::Int(a) if !d.is_zero() => GVal::Int(Affine {
                    base: a.base.clone(),
                    coeff: d.clone(),
                }),
                other => other.clone(),
            })
            .collect();
        if let Some(id) = self.run_attempt(false, eq, affine_args, state, args, &delta) {
            return Some(id);
        }
        None
    }

    fn run_attempt(
        &mut self,
        star: bool,
        eq: usize,
        seed_args: Vec<GVal>,
        state: u16,
        base_args: &[GVal],
        delta: &[BigInt],
    ) -> Option<usize> {
        let memo_key = (star, eq, state, base_args.to_vec(), delta.to_vec());
        if self.failed_attempts.contains(&memo_key) {
            return None;
        }
        self.journal = Some(Journal {
            node_start: self.nodes.len(),
            clo_start: self.clos.len(),
            queue_start: self.queue.len(),
            key_inserts: Vec::new(),
            sibling_writes: Vec::new(),
        });
        self.attempt_created = 0;
        self.attempt_work.clear();
        let seed = Key::Unfold { eq, args: seed_args, state };
        let outcome = (|| -> Result<usize, Bail> {
            let seed_id = self.node_for_key(seed)?;
            while let Some(id) = self.attempt_work.pop() {
                self.attempt_ops += 1;
                self.expand(id)?;
            }
            Ok(seed_id)
        })();
        let journal = self.journal.take().expect("attempt journal");
        match outcome {
            Ok(seed_id) => Some(seed_id),
            Err(_) => {
                self.rollback(journal);
                self.attempt_work.clear();
                self.failed_attempts.insert(memo_key);
                None
            }
        }
    }

    // ---- evaluation -------------------------------------------------------

    fn env_lookup(env: &[(Slot, GVal)], slot: Slot) -> &GVal {
        env.iter()
            .find(|(s, _)| *s == slot)
            .map(|(_, v)| v)
            .expect("free slot bound in environment")
    }

    fn restrict_env(&self, env: &[(Slot, GVal)], node: NodeId) -> Vec<(Slot, GVal)> {
        let free = &self.hes.free[node];
        env.iter()
            .filter(|(s, _)| free.contains(s))
            .cloned()
            .collect()
    }

    fn eval_int(&self, node: NodeId, env: &[(Slot, GVal)]) -> Result<Affine, Bail> {
        match &self.hes.nodes[node] {
            CNode::Int(n) => Ok(Affine::constant(n.clone())),
            CNode::LVar(s) => match Self::env_lookup(env, *s) {
                GVal::Int(a) => Ok(a.clone()),
                GVal::StarInt => Err(Bail("guard inspects an abstracted integer".into())),
                other => unreachable!("integer variable bound to {other:?}"),
            },
            CNode::Op(op, a, b) => {
                let va = self.eval_int(*a, env)?;
                let vb = self.eval_int(*b, env)?;
                match op {
                    crate::ops::IntOp::Add => Ok(affine_add(&va, &vb)),
                    crate::ops::IntOp::Sub => Ok(affine_sub(&va, &vb)),
                    crate::ops::IntOp::Mul => affine_mul(&va, &vb),
                }
            }
            other => unreachable!("non-arithmetic node in integer position: {other:?}"),
        }
    }

    /// Star-integers poison arithmetic results but are fine to pass along.
    fn eval_int_arg(&self, node: NodeId, env: &[(Slot, GVal)]) -> Result<GVal, Bail> {
        if self.int_mentions_star(node, env) {
            return Ok(GVal::StarInt);
        }
        Ok(GVal::Int(self.eval_int(node, env)?))
    }

    fn int_mentions_star(&self, node: NodeId, env: &[(Slot, GVal)]) -> bool {
        match &self.hes.nodes[node] {
            CNode::Int(_) => false,
            CNode::LVar(s) => matches!(Self::env_lookup(env, *s), GVal::StarInt),
            CNode::Op(_, a, b) => {
                self.int_mentions_star(*a, env) || self.int_mentions_star(*b, env)
            }
            _ => false,
        }
    }

    fn eval_pred(
        &self,
        op: CmpOp,
        a: NodeId,
        b: NodeId,
        env: &[(Slot, GVal)],
    ) -> Result<bool, Bail> {
        if self.int_mentions_star(a, env) || self.int_mentions_star(b, env) {
            return Err(Bail("guard inspects an abstracted integer".into()));
        }
        let va = self.eval_int(a, env)?;
        let vb = self.eval_int(b, env)?;
        let diff = affine_sub(&va, &vb);
        const_truth(op, &diff)
            .ok_or_else(|| Bail("guard truth depends on the loop counter".into()))
    }

    /// Semantic evaluation of proposition arguments when possible; `None`
    /// falls back to a closure.
    fn eval_prop_set(&self, node: NodeId, env: &[(Slot, GVal)]) -> Option<BTreeSet<u16>> {
        let all = || (0..self.lts.state_names.len() as u16).collect::<BTreeSet<u16>>();
        match &self.hes.nodes[node] {
            CNode::True => Some(all()),
            CNode::False => Some(BTreeSet::new()),
            CNode::Pred(op, a, b) => {
                let va = self.eval_int(*a, env).ok()?;
                let vb = self.eval_int(*b, env).ok()?;
                if self.int_mentions_star(*a, env) || self.int_mentions_star(*b, env) {
                    return None;
                }
                match const_truth(*op, &affine_sub(&va, &vb)) {
                    Some(true) => Some(all()),
                    Some(false) => Some(BTreeSet::new()),
                    None => None,
                }
            }
            CNode::Or(a, b) => {
                let (x, y) = (self.eval_prop_set(*a, env)?, self.eval_prop_set(*b, env)?);
                Some(x.union(&y).copied().collect())
            }
            CNode::And(a, b) => {
                let (x, y) = (self.eval_prop_set(*a, env)?, self.eval_prop_set(*b, env)?);
                Some(x.intersection(&y).copied().collect())
            }
            CNode::Dia(l, a) => {
                let body = self.eval_prop_set(*a, env)?;
                Some(
                    (0..self.lts.state_names.len() as u16)
                        .filter(|s| {
                            self.lts.succ[*s as usize][*l as usize]
                                .iter()
                                .any(|d| body.contains(d))
                        })
                        .collect(),
                )
            }
            CNode::Boxm(l, a) => {
                let body = self.eval_prop_set(*a, env)?;
                Some(
                    (0..self.lts.state_names.len() as u16)
                        .filter(|s| {
                            self.lts.succ[*s as usize][*l as usize]
                                .iter()
                                .all(|d| body.contains(d))
                        })
                        .collect(),
                )
            }
            CNode::LVar(s) => match Self::env_lookup(env, *s) {
                GVal::Set(set) => Some(set.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    fn eval_arg(&mut self, node: NodeId, env: &[(Slot, GVal)]) -> Result<GVal, Bail> {
        match &self.hes.types[node] {
            crate::hfl::HflType::Int => self.eval_int_arg(node, env),
            crate::hfl::HflType::Prop => {
                if let Some(set) = self.eval_prop_set(node, env) {
                    return Ok(GVal::Set(set));
                }
                Ok(self.defer(node, env))
            }
            crate::hfl::HflType::Arrow(..) => Ok(self.defer(node, env)),
        }
    }

    fn defer(&mut self, node: NodeId, env: &[(Slot, GVal)]) -> GVal {
        match &self.hes.nodes[node] {
            CNode::EqVar(i) => {
                let i = *i;
                GVal::Clo(self.intern_clo(CloData::Eq(i)))
            }
            CNode::LVar(s) => Self::env_lookup(env, *s).clone(),
            _ => {
                let env = self.restrict_env(env, node);
                GVal::Clo(self.intern_clo(CloData::Expr { node, env }))
            }
        }
    }

    /// Weak-head resolution of an applied value down to a game node key.
    fn resolve(
        &mut self,
        mut head: CloData,
        mut args: VecDeque<GVal>,
        state: u16,
    ) -> Result<Key, Bail> {
        loop {
            match head {
                CloData::Eq(i) => {
                    debug_assert_eq!(
                        args.len(),
                        self.arity[i],
                        "equation `{}` applied to a wrong number of arguments",
                        self.hes.eqs[i].name
                    );
                    return Ok(Key::Unfold { eq: i, args: args.into_iter().collect(), state });
                }
                CloData::Expr { node, env } => match self.hes.nodes[node].clone() {
                    CNode::Abs(slot, body) => {
                        let Some(v) = args.pop_front() else {
                            return Err(Bail("under-applied abstraction".into()));
                        };
                        let mut env2 = env;
                        env2.retain(|(s, _)| *s != slot);
                        env2.push((slot, v));
                        env2.sort_by_key(|(s, _)| *s);
                        head = CloData::Expr { node: body, env: env2 };
                    }
                    CNode::App(f, a) => {
                        let v = self.eval_arg(a, &env)?;
                        args.push_front(v);
                        head = CloData::Expr { node: f, env };
                    }
                    CNode::EqVar(i) => {
                        head = CloData::Eq(i);
                    }
                    CNode::LVar(s) => match Self::env_lookup(&env, s).clone() {
                        GVal::Clo(c) => head = self.clos[c as usize].clone(),
                        GVal::Set(_) if args.is_empty() => {
                            return Ok(Key::Form {
                                node,
                                env: self.restrict_env(&env, node),
                                state,
                            })
                        }
                        other => {
                            return Err(Bail(format!(
                                "variable applied to arguments holds {other:?}"
                            )))
                        }
                    },
                    _ => {
                        if !args.is_empty() {
                            return Err(Bail("application of a non-function".into()));
                        }
                        return Ok(Key::Form {
                            node,
                            env: self.restrict_env(&env, node),
                            state,
                        });
                    }
                },
            }
        }
    }

    // ---- expansion ----------------------------------------------------

    fn leaf(&mut self, id: usize, verifier_wins: bool) {
        let n = &mut self.nodes[id];
        n.owner = if verifier_wins {
            Player::Refuter
        } else {
            Player::Verifier
        };
        n.succs = Vec::new();
        n.expanded = true;
    }

    fn finish(&mut self, id: usize, owner: Player, succs: Vec<usize>) {
        let n = &mut self.nodes[id];
        n.owner = owner;
        n.succs = succs;
        n.expanded = true;
    }

    fn expand(&mut self, id: usize) -> Result<(), Bail> {
        if self.nodes[id].expanded {
            return Ok(());
        }
        match self.nodes[id].key.clone() {
            Key::Unfold { eq, args, state } => {
                let key = self.resolve(
                    CloData::Expr { node: self.hes.eqs[eq].rhs, env: Vec::new() },
                    args.into(),
                    state,
                )?;
                let succ = self.node_for_key(key)?;
                self.finish(id, Player::Verifier, vec![succ]);
                Ok(())
            }
            Key::Form { node, env, state } => self.expand_form(id, node, &env, state),
        }
    }

    fn expand_form(
        &mut self,
        id: usize,
        node: NodeId,
        env: &[(Slot, GVal)],
        state: u16,
    ) -> Result<(), Bail> {
        match self.hes.nodes[node].clone() {
            CNode::True => {
                self.leaf(id, true);
                Ok(())
            }
            CNode::False => {
                self.leaf(id, false);
                Ok(())
            }
            CNode::Pred(op, a, b) => {
                let truth = self.eval_pred(op, a, b, env)?;
                self.leaf(id, truth);
                Ok(())
            }
            CNode::Or(a, b) => {
                let sa = self.child_form(a, env, state)?;
                let sb = self.child_form(b, env, state)?;
                self.finish(id, Player::Verifier, vec![sa, sb]);
                Ok(())
            }
            CNode::And(a, b) => {
                let sa = self.child_form(a, env, state)?;
                let sb = self.child_form(b, env, state)?;
                self.finish(id, Player::Refuter, vec![sa, sb]);
                Ok(())
            }
            CNode::Dia(l, a) => {
                let succs: Vec<usize> = self.lts.succ[state as usize][l as usize]
                    .clone()
                    .into_iter()
                    .map(|s| self.child_form(a, env, s))
                    .collect::<Result<_, _>>()?;
                self.finish(id, Player::Verifier, succs);
                Ok(())
            }
            CNode::Boxm(l, a) => {
                let succs: Vec<usize> = self.lts.succ[state as usize][l as usize]
                    .clone()
                    .into_iter()
                    .map(|s| self.child_form(a, env, s))
                    .collect::<Result<_, _>>()?;
                self.finish(id, Player::Refuter, succs);
                Ok(())
            }
            CNode::EqVar(_) | CNode::App(..) | CNode::LVar(_) => {
                if let CNode::LVar(s) = &self.hes.nodes[node] {
                    // a bare proposition variable holding a set: a leaf
                    if let GVal::Set(set) = Self::env_lookup(env, *s) {
                        let holds = set.contains(&state);
                        self.leaf(id, holds);
                        return Ok(());
                    }
                }
                let key = self.resolve(
                    CloData::Expr { node, env: env.to_vec() },
                    VecDeque::new(),
                    state,
                )?;
                let succ = self.node_for_key(key)?;
                self.finish(id, Player::Verifier, vec![succ]);
                Ok(())
            }
            CNode::Int(_) | CNode::Op(..) | CNode::Abs(..) => {
                unreachable!("non-proposition node as a game position")
            }
        }
    }

    fn child_form(
        &mut self,
        node: NodeId,
        env: &[(Slot, GVal)],
        state: u16,
    ) -> Result<usize, Bail> {
        let key = Key::Form { node, env: self.restrict_env(env, node), state };
        self.node_for_key(key)
    }

    fn run(&mut self, initial_states: &[u16]) -> Result<GroundGame, CheckError> {
        let mut initials = Vec::new();
        for &s in initial_states {
            let key = Key::Form {
                node: self.hes.main,
                env: Vec::new(),
                state: s,
            };
            let id = self
                .node_for_key(key)
                .map_err(|b| CheckError::Internal(b.0))?;
            initials.push((s, id));
        }
        let mut complete = true;
        while let Some(id) = self.queue.pop_front() {
            if self.nodes.len() > self.budget {
                complete = false;
                break;
            }
            self.expand(id)
                .map_err(|b| CheckError::Internal(format!("unexpected bail: {}", b.0)))?;
        }
        Ok(GroundGame {
            nodes: std::mem::take(&mut self.nodes),
            complete,
            initials,
        })
    }
}

fn nonint_signature(args: &[GVal]) -> Vec<Option<GVal>> {
    args.iter()
        .map(|v| match v {
            GVal::Int(_) | GVal::StarInt => None,
            other => Some(other.clone()),
        })
        .collect()
}

/// Grounds the system over the LTS from its initial state.
pub fn ground_game(
    lts: &crate::automata::Lts,
    hes: &crate::hfl::Hes,
    budget: usize,
) -> Result<GroundGame, CheckError> {
    let (ches, clts) = super::compile::compile_hes(hes, lts)?;
    let mut grounder = Grounder::new(&ches, &clts, budget);
    grounder.run(&[clts.init])
}

/// Grounds the system once with every LTS state as an initial configuration;
/// the memo table is shared.
pub fn ground_game_all_states(
    lts: &crate::automata::Lts,
    hes: &crate::hfl::Hes,
    budget: usize,
) -> Result<(GroundGame, Vec<String>), CheckError> {
    let (ches, clts) = super::compile::compile_hes(hes, lts)?;
    let all: Vec<u16> = (0..clts.state_names.len() as u16).collect();
    let names = clts.state_names.clone();
    let mut grounder = Grounder::new(&ches, &clts, budget);
    let game = grounder.run(&all)?;
    Ok((game, names))
}
