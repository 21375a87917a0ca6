//! Compiled form of an equation system: a node arena with per-node types and
//! free-variable sets, interned LTS states and labels, and game priorities
//! assigned on a dependency-compatible linearization of the equations.

use super::CheckError;
use crate::automata::Lts;
use crate::hfl::{Fix, Formula, Hes, HflType};
use crate::ops::{CmpOp, IntOp};
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};

pub type NodeId = usize;
pub type Slot = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CNode {
    True,
    False,
    Int(BigInt),
    Op(IntOp, NodeId, NodeId),
    Pred(CmpOp, NodeId, NodeId),
    Or(NodeId, NodeId),
    And(NodeId, NodeId),
    Dia(u16, NodeId),
    Boxm(u16, NodeId),
    /// Reference to equation `i`.
    EqVar(usize),
    /// Lambda-bound variable.
    LVar(Slot),
    Abs(Slot, NodeId),
    App(NodeId, NodeId),
}

#[derive(Debug, Clone)]
pub struct CEq {
    pub name: String,
    pub fix: Fix,
    pub rhs: NodeId,
}

#[derive(Debug)]
pub struct CompiledHes {
    pub eqs: Vec<CEq>,
    pub main: NodeId,
    pub nodes: Vec<CNode>,
    pub types: Vec<HflType>,
    /// Sorted free lambda slots per node.
    pub free: Vec<Vec<Slot>>,
    /// Game priority per equation (dependency-linearized).
    pub prio: Vec<u32>,
    pub slot_names: Vec<String>,
}

#[derive(Debug)]
pub struct CompiledLts {
    pub state_names: Vec<String>,
    pub labels: Vec<String>,
    pub init: u16,
    /// successors[state][label]
    pub succ: Vec<Vec<Vec<u16>>>,
}

pub fn compile_lts(lts: &Lts, extra_labels: &BTreeSet<String>) -> CompiledLts {
    let state_names: Vec<String> = lts.states.iter().cloned().collect();
    let mut labels: BTreeSet<String> = lts.actions.clone();
    labels.extend(extra_labels.iter().cloned());
    let labels: Vec<String> = labels.into_iter().collect();
    let state_idx: BTreeMap<&String, u16> = state_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i as u16))
        .collect();
    let label_idx: BTreeMap<&String, usize> =
        labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut succ = vec![vec![Vec::new(); labels.len()]; state_names.len()];
    for (s, l, d) in &lts.transitions {
        succ[state_idx[s] as usize][label_idx[l]].push(state_idx[d]);
    }
    for per_state in &mut succ {
        for v in per_state {
            v.sort();
            v.dedup();
        }
    }
    CompiledLts {
        init: state_idx[&lts.init],
        state_names,
        labels,
        succ,
    }
}

impl CompiledLts {
    pub fn label_id(&self, label: &str) -> Option<u16> {
        self.labels.iter().position(|l| l == label).map(|i| i as u16)
    }

    pub fn state_id(&self, name: &str) -> Option<u16> {
        self.state_names
            .iter()
            .position(|s| s == name)
            .map(|i| i as u16)
    }
}

struct Compiler<'a> {
    hes: &'a Hes,
    lts: &'a CompiledLts,
    nodes: Vec<CNode>,
    types: Vec<HflType>,
    slot_names: Vec<String>,
}

impl Compiler<'_> {
    fn push(&mut self, node: CNode, ty: HflType) -> NodeId {
        self.nodes.push(node);
        self.types.push(ty);
        self.nodes.len() - 1
    }

    fn fresh_slot(&mut self, name: &str) -> Slot {
        self.slot_names.push(name.to_string());
        (self.slot_names.len() - 1) as Slot
    }

    fn compile(
        &mut self,
        scope: &mut Vec<(String, ScopeEntry)>,
        f: &Formula,
    ) -> Result<NodeId, CheckError> {
        let node = match f {
            Formula::True => self.push(CNode::True, HflType::Prop),
            Formula::False => self.push(CNode::False, HflType::Prop),
            Formula::Int(n) => self.push(CNode::Int(n.clone()), HflType::Int),
            Formula::Op(op, a, b) => {
                let na = self.compile(scope, a)?;
                let nb = self.compile(scope, b)?;
                self.push(CNode::Op(*op, na, nb), HflType::Int)
            }
            Formula::Pred(op, a, b) => {
                let na = self.compile(scope, a)?;
                let nb = self.compile(scope, b)?;
                self.push(CNode::Pred(*op, na, nb), HflType::Prop)
            }
            Formula::Or(a, b) => {
                let na = self.compile(scope, a)?;
                let nb = self.compile(scope, b)?;
                self.push(CNode::Or(na, nb), HflType::Prop)
            }
            Formula::And(a, b) => {
                let na = self.compile(scope, a)?;
                let nb = self.compile(scope, b)?;
                self.push(CNode::And(na, nb), HflType::Prop)
            }
            Formula::Diamond(l, a) => {
                let na = self.compile(scope, a)?;
                let lid = self.lts.label_id(l).expect("label interned");
                self.push(CNode::Dia(lid, na), HflType::Prop)
            }
            Formula::Boxm(l, a) => {
                let na = self.compile(scope, a)?;
                let lid = self.lts.label_id(l).expect("label interned");
                self.push(CNode::Boxm(lid, na), HflType::Prop)
            }
            Formula::Var(x) => {
                let entry = scope
                    .iter()
                    .rev()
                    .find(|(n, _)| n == x)
                    .map(|(_, e)| e.clone())
                    .ok_or_else(|| CheckError::UnboundVariable(x.clone()))?;
                match entry {
                    ScopeEntry::Eq(i) => {
                        let ty = self.hes.eqs[i].ty.clone();
                        self.push(CNode::EqVar(i), ty)
                    }
                    ScopeEntry::Lam(slot, ty) => self.push(CNode::LVar(slot), ty),
                }
            }
            Formula::Abs(x, ty, body) => {
                let slot = self.fresh_slot(x);
                scope.push((x.clone(), ScopeEntry::Lam(slot, ty.clone())));
                let nb = self.compile(scope, body)?;
                scope.pop();
                let full = HflType::arrow(ty.clone(), self.types[nb].clone());
                self.push(CNode::Abs(slot, nb), full)
            }
            Formula::App(fun, arg) => {
                let nf = self.compile(scope, fun)?;
                let na = self.compile(scope, arg)?;
                let HflType::Arrow(_, res) = self.types[nf].clone() else {
                    return Err(CheckError::Internal(format!(
                        "application of non-function in {}",
                        crate::hfl::print_formula(f)
                    )));
                };
                self.push(CNode::App(nf, na), *res)
            }
            Formula::Mu(..) | Formula::Nu(..) => {
                return Err(CheckError::Internal(
                    "fixpoint operator inside an equation right-hand side".into(),
                ))
            }
        };
        Ok(node)
    }
}

#[derive(Clone)]
enum ScopeEntry {
    Eq(usize),
    Lam(Slot, HflType),
}

/// Priorities `2(n-i)` / `2(n-i)+1` computed on a dependency-compatible
/// order: strongly connected components of the reference graph are
/// linearized topologically (referencing components first), preserving the
/// given order inside each component and between incomparable components.
/// Reordering across components preserves the system's meaning, and the
/// unfolding game is sound only for dependency-compatible orders.
fn game_priorities(hes: &Hes) -> Vec<u32> {
    let n = hes.eqs.len();
    // reference graph: i -> j when eq j's variable occurs free in eq i's rhs
    let name_index: BTreeMap<&str, usize> = hes
        .eqs
        .iter()
        .enumerate()
        .map(|(i, e)| (e.var.as_str(), i))
        .collect();
    let edges: Vec<BTreeSet<usize>> = hes
        .eqs
        .iter()
        .map(|e| {
            e.rhs
                .free_vars()
                .iter()
                .filter_map(|v| name_index.get(v.as_str()).copied())
                .collect()
        })
        .collect();
    // strongly connected components (iterative Tarjan)
    let sccs = tarjan(n, &edges);
    let comp_of: Vec<usize> = {
        let mut c = vec![0usize; n];
        for (ci, comp) in sccs.iter().enumerate() {
            for &v in comp {
                c[v] = ci;
            }
        }
        c
    };
    // topological order over components: referencing before referenced,
    // stable by smallest original index
    let m = sccs.len();
    let mut comp_edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    let mut indeg = vec![0usize; m];
    for (i, targets) in edges.iter().enumerate() {
        for &j in targets {
            let (a, b) = (comp_of[i], comp_of[j]);
            if a != b && comp_edges[a].insert(b) {
                indeg[b] += 1;
            }
        }
    }
    let comp_min: Vec<usize> = sccs.iter().map(|c| *c.iter().min().unwrap()).collect();
    let mut ready: BTreeSet<(usize, usize)> = (0..m)
        .filter(|&c| indeg[c] == 0)
        .map(|c| (comp_min[c], c))
        .collect();
    let mut linear: Vec<usize> = Vec::new();
    while let Some(&(key, c)) = ready.iter().next() {
        ready.remove(&(key, c));
        // equations of the component in original order
        let mut members = sccs[c].clone();
        members.sort();
        linear.extend(members);
        for &d in &comp_edges[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.insert((comp_min[d], d));
            }
        }
    }
    debug_assert_eq!(linear.len(), n);
    let mut prio = vec![0u32; n];
    for (pos, &eq) in linear.iter().enumerate() {
        let base = 2 * (n - 1 - pos) as u32;
        prio[eq] = match hes.eqs[eq].fix {
            Fix::Nu => base,
            Fix::Mu => base + 1,
        };
    }
    prio
}

fn tarjan(n: usize, edges: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    #[derive(Clone, Copy)]
    struct Info {
        index: usize,
        low: usize,
        on_stack: bool,
        visited: bool,
    }
    let mut info = vec![
        Info { index: 0, low: 0, on_stack: false, visited: false };
        n
    ];
    let mut stack = Vec::new();
    let mut sccs = Vec::new();
    let mut counter = 0usize;
    // iterative DFS with explicit frames
    for root in 0..n {
        if info[root].visited {
            continue;
        }
        let mut frames: Vec<(usize, Vec<usize>)> =
            vec![(root, edges[root].iter().copied().collect())];
        info[root].visited = true;
        info[root].index = counter;
        info[root].low = counter;
        counter += 1;
        info[root].on_stack = true;
        stack.push(root);
        while let Some((v, rest)) = frames.last_mut() {
            let v = *v;
            if let Some(w) = rest.pop() {
                if !info[w].visited {
                    info[w].visited = true;
                    info[w].index = counter;
                    info[w].low = counter;
                    counter += 1;
                    info[w].on_stack = true;
                    stack.push(w);
                    frames.push((w, edges[w].iter().copied().collect()));
                } else if info[w].on_stack {
                    info[v].low = info[v].low.min(info[w].index);
                }
            } else {
                frames.pop();
                if let Some((parent, _)) = frames.last() {
                    let p = *parent;
                    info[p].low = info[p].low.min(info[v].low);
                }
                if info[v].low == info[v].index {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        info[w].on_stack = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    sccs.push(comp);
                }
            }
        }
    }
    sccs
}

/// Compiles a typechecked system against an LTS. Labels used by the formulas
/// but absent from the LTS still get ids (their modalities simply have no
/// transitions).
pub fn compile_hes(hes: &Hes, lts: &Lts) -> Result<(CompiledHes, CompiledLts), CheckError> {
    crate::hfl::typecheck_hes(hes).map_err(CheckError::Formula)?;
    let mut labels = BTreeSet::new();
    for eq in &hes.eqs {
        collect_labels(&eq.rhs, &mut labels);
    }
    collect_labels(&hes.main, &mut labels);
    let clts = compile_lts(lts, &labels);

    let prio = game_priorities(hes);
    let mut compiler = Compiler {
        hes,
        lts: &clts,
        nodes: Vec::new(),
        types: Vec::new(),
        slot_names: Vec::new(),
    };
    let mut scope: Vec<(String, ScopeEntry)> = hes
        .eqs
        .iter()
        .enumerate()
        .map(|(i, e)| (e.var.clone(), ScopeEntry::Eq(i)))
        .collect();
    let mut eqs = Vec::new();
    for (i, eq) in hes.eqs.iter().enumerate() {
        let rhs = compiler.compile(&mut scope, &eq.rhs)?;
        eqs.push(CEq { name: eq.var.clone(), fix: eq.fix, rhs });
        let _ = i;
    }
    let main = compiler.compile(&mut scope, &hes.main)?;

    // free slots, bottom-up
    let mut free: Vec<Vec<Slot>> = vec![Vec::new(); compiler.nodes.len()];
    for id in 0..compiler.nodes.len() {
        let f: Vec<Slot> = match &compiler.nodes[id] {
            CNode::True | CNode::False | CNode::Int(_) | CNode::EqVar(_) => Vec::new(),
            CNode::LVar(s) => vec![*s],
            CNode::Op(_, a, b)
            | CNode::Pred(_, a, b)
            | CNode::Or(a, b)
            | CNode::And(a, b)
            | CNode::App(a, b) => {
                let mut v: Vec<Slot> = free[*a]
                    .iter()
                    .chain(free[*b].iter())
                    .copied()
                    .collect();
                v.sort();
                v.dedup();
                v
            }
            CNode::Dia(_, a) | CNode::Boxm(_, a) => free[*a].clone(),
            CNode::Abs(s, a) => free[*a].iter().copied().filter(|x| x != s).collect(),
        };
        free[id] = f;
    }

    Ok((
        CompiledHes {
            eqs,
            main,
            nodes: compiler.nodes,
            types: compiler.types,
            free,
            prio,
            slot_names: compiler.slot_names,
        },
        clts,
    ))
}

fn collect_labels(f: &Formula, acc: &mut BTreeSet<String>) {
    match f {
        Formula::Diamond(l, a) | Formula::Boxm(l, a) => {
            acc.insert(l.clone());
            collect_labels(a, acc);
        }
        Formula::Op(_, a, b)
        | Formula::Pred(_, a, b)
        | Formula::Or(a, b)
        | Formula::And(a, b)
        | Formula::App(a, b) => {
            collect_labels(a, acc);
            collect_labels(b, acc);
        }
        Formula::Mu(_, _, a) | Formula::Nu(_, _, a) | Formula::Abs(_, _, a) => {
            collect_labels(a, acc)
        }
        Formula::True | Formula::False | Formula::Int(_) | Formula::Var(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::Lts;
    use crate::hfl::parse_hes;

    #[test]
    fn priorities_on_given_order_when_dependency_compatible() {
        let hes = parse_hes("x =nu y;\ny =mu <b> x \\/ <a> y;\nmain: x;\n").unwrap();
        assert_eq!(game_priorities(&hes), vec![2, 1]);
    }

    #[test]
    fn priorities_move_unreferenced_closed_equation_inward() {
        // app's right-hand side mentions no equation variables, so the
        // mutual f_b/f_a component is linearized outside it
        let hes = parse_hes(
            "app (h:int -> prop) (x:int) =mu h x;\n\
             f_b (x:int) =nu (x <= 0 \\/ app f_a (x - 1)) /\\ (x > 0 \\/ app f_b 5);\n\
             f_a (x:int) =mu (x <= 0 \\/ app f_a (x - 1)) /\\ (x > 0 \\/ app f_b 5);\n\
             main: f_b 5;\n",
        )
        .unwrap();
        // linearization: f_b, f_a, app -> priorities 4 (nu), 3 (mu), 1 (mu)
        assert_eq!(game_priorities(&hes), vec![1, 4, 3]);
    }

    #[test]
    fn compile_assigns_types_and_free_slots() {
        let hes = parse_hes(
            "f (y:int) (k:prop -> prop) =mu k true \\/ f (y - 1) k;\nmain: f 2 (\\r:prop. r);\n",
        )
        .unwrap();
        let (c, _) = compile_hes(&hes, &Lts::trivial()).unwrap();
        // rhs of f is a lambda chain
        let CNode::Abs(y_slot, inner) = &c.nodes[c.eqs[0].rhs] else {
            panic!("expected lambda");
        };
        let CNode::Abs(_, body) = &c.nodes[*inner] else {
            panic!("expected lambda");
        };
        // the body's free slots include both parameters
        assert_eq!(c.free[*body].len(), 2);
        assert!(c.free[*body].contains(y_slot));
        assert_eq!(c.types[c.main], crate::hfl::HflType::Prop);
    }
}
