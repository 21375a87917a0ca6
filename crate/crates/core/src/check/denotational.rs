//! Exact denotational checking of pure (integer-free) formulas over finite
//! LTSs: semantic values are state sets and finite monotone function tables,
//! fixpoints are computed by Kleene iteration in the finite lattice.

use super::CheckError;
use crate::automata::Lts;
use crate::hfl::{hes_to_formula, Formula, Hes, HflType};
use std::collections::{BTreeMap, BTreeSet};

/// A semantic value: a set of states or a finite monotone table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dval {
    Prop(BTreeSet<usize>),
    Fun(BTreeMap<Dval, Dval>),
}

/// Pointwise order on semantic values of equal type.
pub fn dval_leq(a: &Dval, b: &Dval) -> bool {
    match (a, b) {
        (Dval::Prop(x), Dval::Prop(y)) => x.is_subset(y),
        (Dval::Fun(f), Dval::Fun(g)) => f
            .iter()
            .all(|(k, v)| g.get(k).is_some_and(|w| dval_leq(v, w))),
        _ => false,
    }
}

pub struct Domain<'a> {
    lts: &'a Lts,
    states: Vec<&'a String>,
    /// Cap on the number of candidate tables enumerated per arrow domain.
    pub cap: usize,
}

impl<'a> Domain<'a> {
    pub fn new(lts: &'a Lts) -> Domain<'a> {
        Domain { lts, states: lts.states.iter().collect(), cap: 100_000 }
    }

    fn state_index(&self, name: &str) -> usize {
        self.states.iter().position(|s| s.as_str() == name).unwrap()
    }

    pub fn bottom(&self, ty: &HflType) -> Result<Dval, CheckError> {
        match ty {
            HflType::Prop => Ok(Dval::Prop(BTreeSet::new())),
            HflType::Int => Err(CheckError::IntInPureFormula),
            HflType::Arrow(arg, res) => {
                let bot = self.bottom(res)?;
                Ok(Dval::Fun(
                    self.enumerate(arg)?
                        .into_iter()
                        .map(|v| (v, bot.clone()))
                        .collect(),
                ))
            }
        }
    }

    pub fn top(&self, ty: &HflType) -> Result<Dval, CheckError> {
        match ty {
            HflType::Prop => Ok(Dval::Prop((0..self.states.len()).collect())),
            HflType::Int => Err(CheckError::IntInPureFormula),
            HflType::Arrow(arg, res) => {
                let top = self.top(res)?;
                Ok(Dval::Fun(
                    self.enumerate(arg)?
                        .into_iter()
                        .map(|v| (v, top.clone()))
                        .collect(),
                ))
            }
        }
    }

    /// All elements of the semantic domain of `ty` (monotone tables at arrow
    /// types), or an error when the enumeration would exceed the cap.
    pub fn enumerate(&self, ty: &HflType) -> Result<Vec<Dval>, CheckError> {
        match ty {
            HflType::Prop => {
                let n = self.states.len();
                if n > 16 {
                    return Err(CheckError::DomainTooLarge(1 << n));
                }
                Ok((0..(1usize << n))
                    .map(|bits| {
                        Dval::Prop((0..n).filter(|i| bits & (1 << i) != 0).collect())
                    })
                    .collect())
            }
            HflType::Int => Err(CheckError::IntInPureFormula),
            HflType::Arrow(arg, res) => {
                let args = self.enumerate(arg)?;
                let results = self.enumerate(res)?;
                let count = results
                    .len()
                    .checked_pow(args.len() as u32)
                    .unwrap_or(usize::MAX);
                if count > self.cap {
                    return Err(CheckError::DomainTooLarge(count));
                }
                let mut out = Vec::new();
                let mut indices = vec![0usize; args.len()];
                loop {
                    let table: BTreeMap<Dval, Dval> = args
                        .iter()
                        .cloned()
                        .zip(indices.iter().map(|&i| results[i].clone()))
                        .collect();
                    let f = Dval::Fun(table);
                    if self.is_monotone(&f, &args) {
                        out.push(f);
                    }
                    let mut i = 0;
                    loop {
                        if i == indices.len() {
                            return Ok(out);
                        }
                        indices[i] += 1;
                        if indices[i] < results.len() {
                            break;
                        }
                        indices[i] = 0;
                        i += 1;
                    }
                }
            }
        }
    }

    fn is_monotone(&self, f: &Dval, args: &[Dval]) -> bool {
        let Dval::Fun(table) = f else { return true };
        args.iter().all(|x| {
            args.iter().all(|y| {
                !dval_leq(x, y) || dval_leq(&table[x], &table[y])
            })
        })
    }

    /// Evaluates a pure formula under a valuation.
    pub fn eval(
        &self,
        env: &mut Vec<(String, Dval)>,
        f: &Formula,
    ) -> Result<Dval, CheckError> {
        match f {
            Formula::True => Ok(Dval::Prop((0..self.states.len()).collect())),
            Formula::False => Ok(Dval::Prop(BTreeSet::new())),
            Formula::Int(_) | Formula::Op(..) | Formula::Pred(..) => {
                Err(CheckError::IntInPureFormula)
            }
            Formula::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| CheckError::UnboundVariable(x.clone())),
            Formula::Or(a, b) => {
                let (Dval::Prop(x), Dval::Prop(y)) =
                    (self.eval(env, a)?, self.eval(env, b)?)
                else {
                    return Err(CheckError::Internal("or on non-propositions".into()));
                };
                Ok(Dval::Prop(x.union(&y).copied().collect()))
            }
            Formula::And(a, b) => {
                let (Dval::Prop(x), Dval::Prop(y)) =
                    (self.eval(env, a)?, self.eval(env, b)?)
                else {
                    return Err(CheckError::Internal("and on non-propositions".into()));
                };
                Ok(Dval::Prop(x.intersection(&y).copied().collect()))
            }
            Formula::Diamond(l, a) => {
                let Dval::Prop(body) = self.eval(env, a)? else {
                    return Err(CheckError::Internal("diamond on non-proposition".into()));
                };
                Ok(Dval::Prop(
                    (0..self.states.len())
                        .filter(|&s| {
                            self.lts
                                .successors(self.states[s], l)
                                .any(|d| body.contains(&self.state_index(d)))
                        })
                        .collect(),
                ))
            }
            Formula::Boxm(l, a) => {
                let Dval::Prop(body) = self.eval(env, a)? else {
                    return Err(CheckError::Internal("box on non-proposition".into()));
                };
                Ok(Dval::Prop(
                    (0..self.states.len())
                        .filter(|&s| {
                            self.lts
                                .successors(self.states[s], l)
                                .all(|d| body.contains(&self.state_index(d)))
                        })
                        .collect(),
                ))
            }
            Formula::Abs(x, ty, body) => {
                let mut table = BTreeMap::new();
                for v in self.enumerate(ty)? {
                    env.push((x.clone(), v.clone()));
                    let r = self.eval(env, body)?;
                    env.pop();
                    table.insert(v, r);
                }
                Ok(Dval::Fun(table))
            }
            Formula::App(fun, arg) => {
                let fv = self.eval(env, fun)?;
                let av = self.eval(env, arg)?;
                match fv {
                    Dval::Fun(table) => table
                        .get(&av)
                        .cloned()
                        .ok_or_else(|| CheckError::Internal("argument outside table".into())),
                    _ => Err(CheckError::Internal("application of non-function".into())),
                }
            }
            Formula::Mu(x, ty, body) | Formula::Nu(x, ty, body) => {
                let is_mu = matches!(f, Formula::Mu(..));
                let mut cur = if is_mu { self.bottom(ty)? } else { self.top(ty)? };
                loop {
                    env.push((x.clone(), cur.clone()));
                    let next = self.eval(env, body)?;
                    env.pop();
                    if next == cur {
                        return Ok(cur);
                    }
                    cur = next;
                }
            }
        }
    }
}

/// Evaluates a pure equation system on a finite LTS and returns the set of
/// states satisfying the (prop-typed) main formula. Errors on any integer
/// construct or when a function domain exceeds the enumeration cap.
pub fn denotational_check(lts: &Lts, hes: &Hes) -> Result<BTreeSet<String>, CheckError> {
    let ty = crate::hfl::typecheck_hes(hes).map_err(CheckError::Formula)?;
    if ty != HflType::Prop {
        return Err(CheckError::Internal(format!(
            "main formula has type {ty}, expected prop"
        )));
    }
    for eq in &hes.eqs {
        if eq.ty.contains_int() {
            return Err(CheckError::IntInPureFormula);
        }
    }
    let formula = hes_to_formula(hes);
    let domain = Domain::new(lts);
    let value = domain.eval(&mut Vec::new(), &formula)?;
    let Dval::Prop(set) = value else {
        return Err(CheckError::Internal("main value is not a set".into()));
    };
    Ok(set
        .into_iter()
        .map(|i| domain.states[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures::lts_file;
    use crate::hfl::parse_hes;

    fn names(set: &BTreeSet<String>) -> Vec<&str> {
        set.iter().map(|s| s.as_str()).collect()
    }

    /// q0 -a-> q1 -b-> q2 -c-> q1
    fn lts_one() -> Lts {
        Lts::parse(
            "state q0 init\nstate q1\nstate q2\n\
             trans q0 a q1\ntrans q1 b q2\ntrans q2 c q1\n",
        )
        .unwrap()
    }

    #[test]
    fn greatest_fixpoint_on_file_protocol() {
        let hes = parse_hes("x =nu <close> true /\\ <read> x;\nmain: x;\n").unwrap();
        let result = denotational_check(&lts_file(), &hes).unwrap();
        assert_eq!(names(&result), vec!["q0"]);
    }

    #[test]
    fn alternation_free_higher_order_example() {
        // (x =mu \y. y \/ <a>(x (<b> y)), x (<c> true)): states with an
        // a^n b^n path to a c-capable state
        let hes = parse_hes(
            "x (y:prop) =mu y \\/ <a> (x (<b> y));\nmain: x (<c> true);\n",
        )
        .unwrap();
        let result = denotational_check(&lts_one(), &hes).unwrap();
        assert_eq!(names(&result), vec!["q0", "q2"]);
    }

    #[test]
    fn truth_is_all_states() {
        let hes = parse_hes("main: true;\n").unwrap();
        let result = denotational_check(&lts_one(), &hes).unwrap();
        assert_eq!(result.len(), 3);
    }

    #[test]
    fn integers_are_rejected() {
        let hes = parse_hes("main: 1 = 1;\n").unwrap();
        assert!(matches!(
            denotational_check(&lts_one(), &hes),
            Err(CheckError::IntInPureFormula)
        ));
    }

    #[test]
    fn fixpoint_iteration_is_a_chain_and_fixpoint_holds() {
        // mu iteration ascends, nu descends, and the limit satisfies F(x)=x
        let lts = lts_one();
        let domain = Domain::new(&lts);
        let body = crate::hfl::parse_formula("\\x:prop. <a> true \\/ <b> x").unwrap();
        let Formula::Abs(name, ty, inner) = body else { panic!() };
        let apply = |v: &Dval| {
            let mut env = vec![(name.clone(), v.clone())];
            domain.eval(&mut env, &inner).unwrap()
        };
        let mut cur = domain.bottom(&ty).unwrap();
        loop {
            let next = apply(&cur);
            assert!(dval_leq(&cur, &next), "mu iteration must ascend");
            if next == cur {
                break;
            }
            cur = next;
        }
        assert_eq!(apply(&cur), cur);

        let mut cur = domain.top(&ty).unwrap();
        loop {
            let next = apply(&cur);
            assert!(dval_leq(&next, &cur), "nu iteration must descend");
            if next == cur {
                break;
            }
            cur = next;
        }
        assert_eq!(apply(&cur), cur);
    }

    #[test]
    fn lambda_tables_are_monotone() {
        let lts = lts_one();
        let domain = Domain::new(&lts);
        let f = crate::hfl::parse_formula("\\x:prop. <a> x \\/ <b> (x /\\ <c> true)").unwrap();
        let v = domain.eval(&mut Vec::new(), &f).unwrap();
        let args = domain.enumerate(&HflType::Prop).unwrap();
        let Dval::Fun(table) = &v else { panic!() };
        for x in &args {
            for y in &args {
                if dval_leq(x, y) {
                    assert!(dval_leq(&table[x], &table[y]));
                }
            }
        }
    }

    #[test]
    fn domain_cap_guards_enumeration() {
        let lts = lts_one();
        let mut domain = Domain::new(&lts);
        domain.cap = 10;
        let order2 = HflType::arrow(
            HflType::arrow(HflType::Prop, HflType::Prop),
            HflType::Prop,
        );
        assert!(matches!(
            domain.enumerate(&order2),
            Err(CheckError::DomainTooLarge(_))
        ));
    }
}
