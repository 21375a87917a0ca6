//! Deciding whether a finite LTS satisfies an equation system: exactly for
//! pure (integer-free) systems via [`denotational_check`], and for systems
//! with integers by grounding into a parity game ([`eval_hflz`]), which is
//! exact whenever the reachable configuration space is finite (possibly
//! after quotienting integer loops) and reports `Unknown` otherwise.

mod compile;
mod denotational;
mod game;
mod parity;

pub use denotational::{denotational_check, dval_leq, Domain, Dval};
pub use game::{ground_game, ground_game_all_states, GroundGame, UnknownReason, Verdict};
pub use parity::{solve_parity_game, GameNode, ParityGame, Player, Solution};

use crate::automata::Lts;
use crate::hfl::Hes;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("integer constructs are not supported by the denotational backend")]
    IntInPureFormula,
    #[error("semantic domain too large to enumerate ({0} candidates)")]
    DomainTooLarge(usize),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error(transparent)]
    Formula(crate::hfl::HflError),
    #[error("internal: {0}")]
    Internal(String),
}

/// Default node budget for game grounding.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Decides `lts |= hes` through the game backend.
pub fn eval_hflz(lts: &Lts, hes: &Hes, budget: usize) -> Result<Verdict, CheckError> {
    let game = ground_game(lts, hes, budget)?;
    Ok(game.verdicts()[0].1)
}

/// Game verdict at every LTS state (one shared grounding).
pub fn eval_hflz_all_states(
    lts: &Lts,
    hes: &Hes,
    budget: usize,
) -> Result<Vec<(String, Verdict)>, CheckError> {
    let (game, names) = ground_game_all_states(lts, hes, budget)?;
    Ok(game
        .verdicts()
        .into_iter()
        .map(|(s, v)| (names[s as usize].clone(), v))
        .collect())
}

/// States the game backend declares valid; errors if any state is unknown.
pub fn game_state_set(
    lts: &Lts,
    hes: &Hes,
    budget: usize,
) -> Result<BTreeSet<String>, CheckError> {
    let mut out = BTreeSet::new();
    for (state, verdict) in eval_hflz_all_states(lts, hes, budget)? {
        match verdict {
            Verdict::Valid => {
                out.insert(state);
            }
            Verdict::Invalid => {}
            Verdict::Unknown(_) => {
                return Err(CheckError::Internal(format!(
                    "game backend undecided at state `{state}`"
                )))
            }
        }
    }
    Ok(out)
}

/// Report of a denotational-vs-game comparison on a pure system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub denotational: BTreeSet<String>,
    pub game: BTreeSet<String>,
}

impl CrossCheck {
    pub fn agree(&self) -> bool {
        self.denotational == self.game
    }
}

/// Runs both backends on a pure system and compares the satisfying state
/// sets.
pub fn cross_check(lts: &Lts, hes: &Hes, budget: usize) -> Result<CrossCheck, CheckError> {
    let denotational = denotational_check(lts, hes)?;
    let game = game_state_set(lts, hes, budget)?;
    Ok(CrossCheck { denotational, game })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures::lts_file;
    use crate::hfl::{dual_hes, parse_hes};

    const BUDGET: usize = 200_000;

    fn lts_one() -> Lts {
        Lts::parse(
            "state q0 init\nstate q1\nstate q2\n\
             trans q0 a q1\ntrans q1 b q2\ntrans q2 c q1\n",
        )
        .unwrap()
    }

    #[test]
    fn looping_system_is_invalid_and_dual_valid() {
        let hes = parse_hes("loop (x:prop) =mu loop x;\nmain: loop true;\n").unwrap();
        assert_eq!(
            eval_hflz(&Lts::trivial(), &hes, BUDGET).unwrap(),
            Verdict::Invalid
        );
        let dual = dual_hes(&hes);
        assert_eq!(
            eval_hflz(&Lts::trivial(), &dual, BUDGET).unwrap(),
            Verdict::Valid
        );
    }

    #[test]
    fn no_matching_transition_loses() {
        let hes = parse_hes("x =nu <b> x;\nmain: x;\n").unwrap();
        assert_eq!(eval_hflz(&lts_file(), &hes, BUDGET).unwrap(), Verdict::Invalid);
    }

    #[test]
    fn reader_counts_down_and_closes() {
        // valid for n >= 0, invalid for n < 0
        for (n, expect) in [
            (0, Verdict::Valid),
            (1, Verdict::Valid),
            (5, Verdict::Valid),
            (-1, Verdict::Invalid),
            (-3, Verdict::Invalid),
        ] {
            let src = format!(
                "f (y:int) (x:prop) (k:prop -> prop) =mu \
                 (y != 0 \\/ <close> (k true)) /\\ (y = 0 \\/ <read> (f (y - 1) x k));\n\
                 main: f ({n}) true (\\r:prop. <end> true);\n"
            );
            let hes = parse_hes(&src).unwrap();
            // prefix-closure of read* close end
            let lts = Lts::parse(
                "state q0 init\nstate q1\nstate q2\n\
                 trans q0 read q0\ntrans q0 close q1\ntrans q1 end q2\n",
            )
            .unwrap();
            assert_eq!(
                eval_hflz(&lts, &hes, BUDGET).unwrap(),
                expect,
                "n = {n}"
            );
        }
    }

    #[test]
    fn quantifier_encodings() {
        use crate::hfl::{encode_exists, encode_forall, Formula, HflType};
        let l0 = Lts::trivial();
        let body_eq5 = Formula::abs(
            "x",
            HflType::Int,
            Formula::pred(
                crate::ops::CmpOp::Eq,
                Formula::var("x"),
                Formula::Int(5.into()),
            ),
        );
        let exists = crate::hfl::formula_to_hes(&encode_exists("v", body_eq5));
        assert_eq!(eval_hflz(&l0, &exists, 2_000).unwrap(), Verdict::Valid);

        let body_trivial = Formula::abs(
            "x",
            HflType::Int,
            Formula::pred(
                crate::ops::CmpOp::Eq,
                Formula::Int(0.into()),
                Formula::Int(0.into()),
            ),
        );
        let forall = crate::hfl::formula_to_hes(&encode_forall("v", body_trivial));
        assert_eq!(eval_hflz(&l0, &forall, 2_000).unwrap(), Verdict::Valid);

        let body_nonneg = Formula::abs(
            "x",
            HflType::Int,
            Formula::pred(
                crate::ops::CmpOp::Ge,
                Formula::var("x"),
                Formula::Int(0.into()),
            ),
        );
        let forall_neg = crate::hfl::formula_to_hes(&encode_forall("v", body_nonneg));
        assert_eq!(eval_hflz(&l0, &forall_neg, 2_000).unwrap(), Verdict::Invalid);
    }

    #[test]
    fn backends_agree_on_pure_examples() {
        let lts = lts_one();
        for src in [
            "x =nu <close> true /\\ <read> x;\nmain: x;\n",
            "x (y:prop) =mu y \\/ <a> (x (<b> y));\nmain: x (<c> true);\n",
            "main: true;\n",
            "x =nu y;\ny =mu <b> x \\/ <a> y;\nmain: x;\n",
        ] {
            let hes = parse_hes(src).unwrap();
            for l in [&lts, &lts_file()] {
                let report = cross_check(l, &hes, BUDGET).unwrap();
                assert!(report.agree(), "{src} on {l:?}: {report:?}");
            }
        }
    }

    #[test]
    fn even_counting_example_via_game_backend() {
        // (x =nu \y. \z. (even-test via parity of a counter is not primitive,
        // so the published variant uses explicit arithmetic)
        // x y z = (z = 2 * half /\ y) \/ <a>(x (<b> y) (z + 1)) has no
        // divisibility predicate here; instead check the alternation with an
        // explicit doubling counter driven to the c-capable state.
        let src = "x (y:prop) (z:int) (w:int) =nu (z = 2 * w /\\ y) \\/ <a> (x (<b> y) (z + 1) w) \\/ x y z (w + 1);\nmain: x (<c> true) 0 0;\n";
        let hes = parse_hes(src).unwrap();
        let (game, names) = ground_game_all_states(&lts_one(), &hes, 400_000).unwrap();
        let verdicts = game.verdicts();
        let by_name: std::collections::BTreeMap<&str, Verdict> = verdicts
            .iter()
            .map(|(s, v)| (names[*s as usize].as_str(), *v))
            .collect();
        // q2 satisfies it with zero steps (0 = 2*0 and q2 -c-> q1)
        assert_eq!(by_name["q2"], Verdict::Valid);
        assert_eq!(by_name["q1"], Verdict::Invalid);
    }

    #[test]
    fn budget_exhaustion_reports_unknown() {
        // searching for a magic number far beyond the budget: neither side
        // of the partial solve can conclude
        let hes = parse_hes(
            "x (n:int) =mu n = 123456789 \\/ x (n + 1) \\/ x (n - 1);\nmain: x 0;\n",
        )
        .unwrap();
        let v = eval_hflz(&Lts::trivial(), &hes, 1_000).unwrap();
        assert!(matches!(v, Verdict::Unknown(UnknownReason::Budget)), "{v:?}");
    }
}
