//! Finite labeled transition systems, deterministic automata for
//! prefix-closed regular languages, and nondeterministic parity word
//! automata.
//!
//! File formats are line oriented:
//!
//! * LTS: `state <id> [init]` and `trans <src> <label> <dst>`.
//! * Deterministic automaton: same, one destination per `trans` line, the
//!   transition function must be deterministic. All states accept.
//! * Parity automaton: `state <id> prio <n> [init]` and
//!   `trans <src> <label> <dst>+` (several destinations allowed, and several
//!   lines per source/label pair accumulate).
//!
//! Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutomataError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("no initial state declared")]
    NoInit,
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate transition for ({0}, {1})")]
    NonDeterministic(String, String),
}

/// A finite labeled transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    pub states: BTreeSet<String>,
    pub actions: BTreeSet<String>,
    pub transitions: BTreeSet<(String, String, String)>,
    pub init: String,
}

impl Lts {
    /// The one-state, zero-transition system.
    pub fn trivial() -> Lts {
        Lts {
            states: BTreeSet::from(["s0".to_string()]),
            actions: BTreeSet::new(),
            transitions: BTreeSet::new(),
            init: "s0".into(),
        }
    }

    pub fn successors<'a>(
        &'a self,
        state: &'a str,
        action: &'a str,
    ) -> impl Iterator<Item = &'a str> {
        self.transitions
            .iter()
            .filter(move |(s, a, _)| s == state && a == action)
            .map(|(_, _, d)| d.as_str())
    }

    pub fn parse(src: &str) -> Result<Lts, AutomataError> {
        let mut states = BTreeSet::new();
        let mut actions = BTreeSet::new();
        let mut transitions = BTreeSet::new();
        let mut init = None;
        for (lineno, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["state", id] => {
                    states.insert(id.to_string());
                }
                ["state", id, "init"] => {
                    states.insert(id.to_string());
                    init = Some(id.to_string());
                }
                ["trans", src, label, dst] => {
                    transitions.insert((src.to_string(), label.to_string(), dst.to_string()));
                    actions.insert(label.to_string());
                }
                _ => {
                    return Err(AutomataError::Parse(
                        lineno + 1,
                        format!("unrecognized line `{line}`"),
                    ))
                }
            }
        }
        let init = init.ok_or(AutomataError::NoInit)?;
        for (s, _, d) in &transitions {
            for q in [s, d] {
                if !states.contains(q) {
                    return Err(AutomataError::UnknownState(q.clone()));
                }
            }
        }
        Ok(Lts { states, actions, transitions, init })
    }

    pub fn print(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            if *s == self.init {
                let _ = writeln!(out, "state {s} init");
            } else {
                let _ = writeln!(out, "state {s}");
            }
        }
        for (s, a, d) in &self.transitions {
            let _ = writeln!(out, "trans {s} {a} {d}");
        }
        out
    }
}

/// Deterministic automaton with a partial transition map; every state
/// accepts, so the recognized language is prefix-closed. Minimality and
/// absence of dead states are the caller's obligation; `warn_dead_states`
/// reports violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetAutomaton {
    pub states: BTreeSet<String>,
    pub alphabet: BTreeSet<String>,
    pub delta: BTreeMap<(String, String), String>,
    pub init: String,
}

impl DetAutomaton {
    pub fn parse(src: &str) -> Result<DetAutomaton, AutomataError> {
        let lts = Lts::parse(src)?;
        let mut delta = BTreeMap::new();
        for (s, a, d) in &lts.transitions {
            if delta
                .insert((s.clone(), a.clone()), d.clone())
                .is_some_and(|prev| prev != *d)
            {
                return Err(AutomataError::NonDeterministic(s.clone(), a.clone()));
            }
        }
        Ok(DetAutomaton {
            states: lts.states,
            alphabet: lts.actions,
            delta,
            init: lts.init,
        })
    }

    /// Runs the automaton; `None` when a step is undefined (word rejected).
    pub fn run(&self, word: &[String]) -> Option<String> {
        let mut q = self.init.clone();
        for a in word {
            q = self.delta.get(&(q, a.clone()))?.clone();
        }
        Some(q)
    }

    pub fn accepts(&self, word: &[String]) -> bool {
        self.run(word).is_some()
    }

    /// States unreachable from the initial state; a minimal automaton for a
    /// prefix-closed language has none.
    pub fn warn_dead_states(&self) -> Vec<String> {
        let mut reachable = BTreeSet::from([self.init.clone()]);
        let mut frontier = vec![self.init.clone()];
        while let Some(q) = frontier.pop() {
            for ((s, _), d) in &self.delta {
                if *s == q && reachable.insert(d.clone()) {
                    frontier.push(d.clone());
                }
            }
        }
        self.states
            .iter()
            .filter(|q| !reachable.contains(*q))
            .cloned()
            .collect()
    }
}

/// The LTS whose labeled paths from the initial state are exactly the words
/// of the automaton's (prefix-closed) language.
pub fn det_automaton_to_lts(a: &DetAutomaton) -> Lts {
    Lts {
        states: a.states.clone(),
        actions: a.alphabet.clone(),
        transitions: a
            .delta
            .iter()
            .map(|((s, l), d)| (s.clone(), l.clone(), d.clone()))
            .collect(),
        init: a.init.clone(),
    }
}

/// Nondeterministic parity word automaton over omega-words. Acceptance: some
/// run's maximal infinitely-recurring priority is even.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityAutomaton {
    pub states: BTreeSet<String>,
    pub alphabet: BTreeSet<String>,
    pub delta: BTreeMap<(String, String), BTreeSet<String>>,
    pub init: String,
    pub priority: BTreeMap<String, u32>,
}

impl ParityAutomaton {
    pub fn max_priority(&self) -> u32 {
        self.priority.values().copied().max().unwrap_or(0)
    }

    pub fn successors(&self, state: &str, action: &str) -> BTreeSet<String> {
        self.delta
            .get(&(state.to_string(), action.to_string()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_total(&self) -> bool {
        self.states.iter().all(|q| {
            self.alphabet
                .iter()
                .all(|a| !self.successors(q, a).is_empty())
        })
    }

    pub fn parse(src: &str) -> Result<ParityAutomaton, AutomataError> {
        let mut states = BTreeSet::new();
        let mut alphabet = BTreeSet::new();
        let mut delta: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        let mut priority = BTreeMap::new();
        let mut init = None;
        for (lineno, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["state", id, "prio", n] => {
                    let p: u32 = n.parse().map_err(|_| {
                        AutomataError::Parse(lineno + 1, format!("bad priority `{n}`"))
                    })?;
                    states.insert(id.to_string());
                    priority.insert(id.to_string(), p);
                }
                ["state", id, "prio", n, "init"] => {
                    let p: u32 = n.parse().map_err(|_| {
                        AutomataError::Parse(lineno + 1, format!("bad priority `{n}`"))
                    })?;
                    states.insert(id.to_string());
                    priority.insert(id.to_string(), p);
                    init = Some(id.to_string());
                }
                ["trans", src_q, label, dsts @ ..] if !dsts.is_empty() => {
                    alphabet.insert(label.to_string());
                    let entry = delta
                        .entry((src_q.to_string(), label.to_string()))
                        .or_default();
                    for d in dsts {
                        entry.insert(d.to_string());
                    }
                }
                _ => {
                    return Err(AutomataError::Parse(
                        lineno + 1,
                        format!("unrecognized line `{line}`"),
                    ))
                }
            }
        }
        let init = init.ok_or(AutomataError::NoInit)?;
        for ((s, _), ds) in &delta {
            if !states.contains(s) {
                return Err(AutomataError::UnknownState(s.clone()));
            }
            for d in ds {
                if !states.contains(d) {
                    return Err(AutomataError::UnknownState(d.clone()));
                }
            }
        }
        Ok(ParityAutomaton { states, alphabet, delta, init, priority })
    }

    pub fn print(&self) -> String {
        let mut out = String::new();
        for q in &self.states {
            let p = self.priority.get(q).copied().unwrap_or(0);
            if *q == self.init {
                let _ = writeln!(out, "state {q} prio {p} init");
            } else {
                let _ = writeln!(out, "state {q} prio {p}");
            }
        }
        for ((s, a), ds) in &self.delta {
            let dsts: Vec<&str> = ds.iter().map(|d| d.as_str()).collect();
            let _ = writeln!(out, "trans {s} {a} {}", dsts.join(" "));
        }
        out
    }
}

/// Totalizes the transition map: any empty `delta(q, a)` is redirected to a
/// fresh dead state with priority 1 that loops on every letter. The accepted
/// language is unchanged. Idempotent.
pub fn complete_parity(a: &ParityAutomaton) -> ParityAutomaton {
    if a.is_total() {
        return a.clone();
    }
    let mut out = a.clone();
    let mut dead = "dead".to_string();
    while out.states.contains(&dead) {
        dead.push('_');
    }
    out.states.insert(dead.clone());
    out.priority.insert(dead.clone(), 1);
    let all_states: Vec<String> = out.states.iter().cloned().collect();
    for q in all_states {
        for l in a.alphabet.clone() {
            let entry = out.delta.entry((q.clone(), l)).or_default();
            if entry.is_empty() {
                entry.insert(dead.clone());
            }
        }
    }
    out
}

/// Extends the automaton to tolerate a fresh `dummy` letter interleaved into
/// its words: each state gets a buffer copy reached on `dummy`; real
/// priorities shift up by two, buffers get priority 1, so a word with only
/// finitely many real letters (an infinite dummy tail) is rejected and
/// otherwise acceptance is unchanged.
pub fn dummy_closure(a: &ParityAutomaton, dummy: &str) -> ParityAutomaton {
    let buffer = |q: &str| format!("{q}__dummy");
    let mut out = ParityAutomaton {
        states: BTreeSet::new(),
        alphabet: a.alphabet.clone(),
        delta: BTreeMap::new(),
        init: a.init.clone(),
        priority: BTreeMap::new(),
    };
    out.alphabet.insert(dummy.to_string());
    for q in &a.states {
        out.states.insert(q.clone());
        out.states.insert(buffer(q));
        out.priority
            .insert(q.clone(), a.priority.get(q).copied().unwrap_or(0) + 2);
        out.priority.insert(buffer(q), 1);
    }
    for q in &a.states {
        for src in [q.clone(), buffer(q)] {
            out.delta
                .entry((src.clone(), dummy.to_string()))
                .or_default()
                .insert(buffer(q));
            for l in &a.alphabet {
                let succ = a.successors(q, l);
                if !succ.is_empty() {
                    out.delta
                        .entry((src.clone(), l.clone()))
                        .or_default()
                        .extend(succ);
                }
            }
        }
    }
    out
}

/// Does the automaton accept `stem . cycle^omega`? Decided on the product of
/// the automaton with the lasso: accepted iff some cycle whose maximal
/// priority is even is reachable there.
pub fn parity_accepts_lasso(a: &ParityAutomaton, stem: &[String], cycle: &[String]) -> bool {
    assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
    // States reachable after the stem.
    let mut cur: BTreeSet<String> = BTreeSet::from([a.init.clone()]);
    for l in stem {
        let mut next = BTreeSet::new();
        for q in &cur {
            next.extend(a.successors(q, l));
        }
        cur = next;
        if cur.is_empty() {
            return false;
        }
    }
    // Product nodes (state, position in cycle); edges follow cycle letters.
    let nodes: Vec<(String, usize)> = {
        let mut acc = BTreeSet::new();
        let mut frontier: Vec<(String, usize)> = cur.iter().map(|q| (q.clone(), 0)).collect();
        for n in &frontier {
            acc.insert(n.clone());
        }
        while let Some((q, i)) = frontier.pop() {
            for d in a.successors(&q, &cycle[i]) {
                let n = (d, (i + 1) % cycle.len());
                if acc.insert(n.clone()) {
                    frontier.push(n);
                }
            }
        }
        acc.into_iter().collect()
    };
    let index: BTreeMap<&(String, usize), usize> =
        nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let succs: Vec<Vec<usize>> = nodes
        .iter()
        .map(|(q, i)| {
            a.successors(q, &cycle[*i])
                .into_iter()
                .filter_map(|d| index.get(&(d, (i + 1) % cycle.len())).copied())
                .collect()
        })
        .collect();
    let prio = |n: usize| a.priority.get(&nodes[n].0).copied().unwrap_or(0);

    // For each even value e: a reachable cycle within {prio <= e} through a
    // node of priority e witnesses acceptance.
    let priorities: BTreeSet<u32> = nodes.iter().map(|(q, _)| a.priority[q]).collect();
    for &e in priorities.iter().filter(|p| **p % 2 == 0) {
        let allowed: Vec<bool> = (0..nodes.len()).map(|n| prio(n) <= e).collect();
        for start in 0..nodes.len() {
            if !allowed[start] || prio(start) != e {
                continue;
            }
            // can `start` reach itself within the allowed subgraph?
            let mut seen = vec![false; nodes.len()];
            let mut stack = vec![start];
            let mut found = false;
            while let Some(n) = stack.pop() {
                for &m in &succs[n] {
                    if m == start {
                        found = true;
                        break;
                    }
                    if allowed[m] && !seen[m] {
                        seen[m] = true;
                        stack.push(m);
                    }
                }
                if found {
                    break;
                }
            }
            if found {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn lts_file() -> Lts {
        Lts::parse("state q0 init\nstate q1\ntrans q0 read q0\ntrans q0 close q1\n").unwrap()
    }

    /// States qa/qb, delta(q, a) = {qa}, delta(q, b) = {qb}, priorities 0/1:
    /// accepts words with finitely many b.
    pub fn automaton_ab() -> ParityAutomaton {
        ParityAutomaton::parse(
            "state qa prio 0 init\nstate qb prio 1\n\
             trans qa a qa\ntrans qa b qb\ntrans qb a qa\ntrans qb b qb\n",
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{automaton_ab, lts_file};
    use super::*;

    fn w(labels: &[&str]) -> Vec<String> {
        labels.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn file_protocol_lts_roundtrip() {
        let lts = lts_file();
        assert_eq!(lts.init, "q0");
        assert_eq!(Lts::parse(&lts.print()).unwrap(), lts);
    }

    #[test]
    fn det_automaton_to_lts_preserves_words() {
        // prefix closure of read* close end
        let a = DetAutomaton::parse(
            "state q0 init\nstate q1\nstate q2\n\
             trans q0 read q0\ntrans q0 close q1\ntrans q1 end q2\n",
        )
        .unwrap();
        assert!(a.warn_dead_states().is_empty());
        let lts = det_automaton_to_lts(&a);
        assert_eq!(lts.states.len(), 3);
        for word in [
            w(&[]),
            w(&["read", "read", "close"]),
            w(&["close", "end"]),
            w(&["read", "close", "end"]),
        ] {
            assert!(a.accepts(&word), "{word:?}");
            // corresponding path exists in the LTS
            let mut cur = vec![lts.init.clone()];
            for l in &word {
                cur = cur
                    .iter()
                    .flat_map(|q| lts.successors(q, l).map(str::to_string).collect::<Vec<_>>())
                    .collect();
            }
            assert!(!cur.is_empty(), "{word:?}");
        }
        assert!(!a.accepts(&w(&["end"])));
        assert!(!a.accepts(&w(&["close", "close"])));
    }

    #[test]
    fn single_state_empty_delta() {
        let a = DetAutomaton::parse("state q0 init\n").unwrap();
        let lts = det_automaton_to_lts(&a);
        assert_eq!(lts.states.len(), 1);
        assert!(lts.transitions.is_empty());
    }

    #[test]
    fn completion_adds_looping_dead_state() {
        let partial = ParityAutomaton::parse(
            "state q0 prio 2 init\ntrans q0 a q0\ntrans q0 b q0\n",
        )
        .unwrap();
        assert!(partial.is_total());
        assert_eq!(complete_parity(&partial), partial);

        let mut holes = partial.clone();
        holes.delta.remove(&("q0".into(), "b".into()));
        let total = complete_parity(&holes);
        assert!(total.is_total());
        assert_eq!(total.states.len(), 2);
        let dead = total.states.iter().find(|q| **q != "q0").unwrap();
        assert_eq!(total.priority[dead], 1);
        assert_eq!(complete_parity(&total), total);
    }

    #[test]
    fn lasso_acceptance_examples() {
        let a = automaton_ab();
        assert!(parity_accepts_lasso(&a, &w(&[]), &w(&["a"])));
        assert!(!parity_accepts_lasso(&a, &w(&[]), &w(&["a", "b"])));
        assert!(parity_accepts_lasso(&a, &w(&["b", "b", "a"]), &w(&["a"])));
        assert!(!parity_accepts_lasso(&a, &w(&["a"]), &w(&["b"])));
    }

    #[test]
    fn even_sink_accepts_any_cycle_through_it() {
        let a = ParityAutomaton::parse("state q0 prio 0 init\ntrans q0 a q0\ntrans q0 b q0\n")
            .unwrap();
        assert!(parity_accepts_lasso(&a, &w(&["a", "b"]), &w(&["b", "a", "b"])));
    }

    /// Brute-force oracle: enumerate simple-cycle lassos in the product and
    /// check their maxima.
    fn accepts_by_enumeration(a: &ParityAutomaton, stem: &[String], cycle: &[String]) -> bool {
        fn explore(
            a: &ParityAutomaton,
            cycle: &[String],
            path: &mut Vec<(String, usize)>,
            node: (String, usize),
        ) -> bool {
            if let Some(pos) = path.iter().position(|n| *n == node) {
                let max = path[pos..]
                    .iter()
                    .map(|(q, _)| a.priority[q])
                    .max()
                    .unwrap_or(0);
                return max % 2 == 0;
            }
            path.push(node.clone());
            let (q, i) = path[path.len() - 1].clone();
            for d in a.successors(&q, &cycle[i]) {
                if explore(a, cycle, path, (d, (i + 1) % cycle.len())) {
                    path.pop();
                    return true;
                }
            }
            path.pop();
            false
        }
        let mut starts: BTreeSet<String> = BTreeSet::from([a.init.clone()]);
        for l in stem {
            let mut next = BTreeSet::new();
            for q in &starts {
                next.extend(a.successors(q, l));
            }
            starts = next;
        }
        starts
            .into_iter()
            .any(|q| explore(a, cycle, &mut Vec::new(), (q, 0)))
    }

    #[test]
    fn lasso_acceptance_matches_enumeration_and_survives_completion() {
        let base = automaton_ab();
        let mut partial = base.clone();
        partial.delta.remove(&("qb".into(), "a".into()));
        let completed = complete_parity(&partial);

        let letters = ["a", "b", "c"];
        let mut words: Vec<Vec<String>> = vec![vec![]];
        for len in 1..=3usize {
            let additions: Vec<Vec<String>> = words
                .iter()
                .filter(|w| w.len() == len - 1)
                .flat_map(|word| {
                    letters.iter().map(move |l| {
                        let mut w2 = word.clone();
                        w2.push(l.to_string());
                        w2
                    })
                })
                .collect();
            words.extend(additions);
        }
        for aut in [&base, &partial, &completed] {
            for stem in words.iter().filter(|w| w.len() <= 2) {
                for cycle in words.iter().filter(|w| !w.is_empty()) {
                    assert_eq!(
                        parity_accepts_lasso(aut, stem, cycle),
                        accepts_by_enumeration(aut, stem, cycle),
                        "stem {stem:?} cycle {cycle:?}"
                    );
                }
            }
        }
        // completion preserves acceptance relative to the partial automaton
        for stem in words.iter().filter(|w| w.len() <= 2) {
            for cycle in words.iter().filter(|w| !w.is_empty()) {
                assert_eq!(
                    parity_accepts_lasso(&partial, stem, cycle),
                    parity_accepts_lasso(&completed, stem, cycle),
                    "stem {stem:?} cycle {cycle:?}"
                );
            }
        }
    }

    #[test]
    fn dummy_closure_tolerates_interleaving_but_rejects_dummy_tails() {
        let a = automaton_ab();
        let d = dummy_closure(&a, "tick");
        assert!(parity_accepts_lasso(&d, &w(&[]), &w(&["a"])));
        assert!(parity_accepts_lasso(&d, &w(&[]), &w(&["tick", "a"])));
        assert!(parity_accepts_lasso(
            &d,
            &w(&["tick", "b", "tick"]),
            &w(&["a", "tick"])
        ));
        assert!(!parity_accepts_lasso(&d, &w(&["a"]), &w(&["tick"])));
        assert!(!parity_accepts_lasso(&d, &w(&[]), &w(&["tick", "b"])));
        assert!(!parity_accepts_lasso(&d, &w(&[]), &w(&["b", "tick", "tick"])));
    }
}
