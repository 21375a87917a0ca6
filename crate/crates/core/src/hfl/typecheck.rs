//! Syntax-directed type checking of formulas. Lambdas and fixpoints carry
//! annotations, so every well-formed formula has a unique type.

use super::{Formula, HflError, HflType};

fn show(f: &Formula) -> String {
    super::print::print_formula(f)
}

/// Computes the unique type of `f` under `env`, or fails. Integer
/// expressions are accepted only where an `int` is expected.
pub fn typecheck_formula(env: &[(String, HflType)], f: &Formula) -> Result<HflType, HflError> {
    match f {
        Formula::True | Formula::False => Ok(HflType::Prop),
        Formula::Int(_) => Ok(HflType::Int),
        Formula::Op(_, a, b) => {
            expect(env, a, &HflType::Int)?;
            expect(env, b, &HflType::Int)?;
            Ok(HflType::Int)
        }
        Formula::Pred(_, a, b) => {
            expect(env, a, &HflType::Int)?;
            expect(env, b, &HflType::Int)?;
            Ok(HflType::Prop)
        }
        Formula::Or(a, b) | Formula::And(a, b) => {
            expect(env, a, &HflType::Prop)?;
            expect(env, b, &HflType::Prop)?;
            Ok(HflType::Prop)
        }
        Formula::Var(x) => env
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| HflError::Unbound(x.clone())),
        Formula::Diamond(_, a) | Formula::Boxm(_, a) => {
            expect(env, a, &HflType::Prop)?;
            Ok(HflType::Prop)
        }
        Formula::Mu(x, ty, body) | Formula::Nu(x, ty, body) => {
            if *ty == HflType::Int {
                return Err(HflError::IntResult(show(f)));
            }
            let mut inner = env.to_vec();
            inner.push((x.clone(), ty.clone()));
            expect(&inner, body, ty)?;
            Ok(ty.clone())
        }
        Formula::Abs(x, ty, body) => {
            let mut inner = env.to_vec();
            inner.push((x.clone(), ty.clone()));
            let res = typecheck_formula(&inner, body)?;
            if res == HflType::Int {
                return Err(HflError::IntResult(show(f)));
            }
            Ok(HflType::arrow(ty.clone(), res))
        }
        Formula::App(fun, arg) => {
            let fun_ty = typecheck_formula(env, fun)?;
            match fun_ty {
                HflType::Arrow(expected_arg, res) => {
                    expect(env, arg, &expected_arg)?;
                    Ok(*res)
                }
                other => Err(HflError::IllTyped {
                    at: show(f),
                    expected: "a function".into(),
                    found: other.to_string(),
                }),
            }
        }
    }
}

fn expect(env: &[(String, HflType)], f: &Formula, want: &HflType) -> Result<(), HflError> {
    let found = typecheck_formula(env, f)?;
    if found == *want {
        Ok(())
    } else {
        Err(HflError::IllTyped {
            at: show(f),
            expected: want.to_string(),
            found: found.to_string(),
        })
    }
}

/// Checks every equation and the main formula of an equation system; returns
/// the type of the main formula. Each right-hand side must be fixpoint-free
/// and have its declared type under the environment binding all equation
/// variables.
pub fn typecheck_hes(hes: &super::Hes) -> Result<HflType, HflError> {
    let env: Vec<(String, HflType)> = hes
        .eqs
        .iter()
        .map(|e| (e.var.clone(), e.ty.clone()))
        .collect();
    for eq in &hes.eqs {
        if eq.rhs.contains_fixpoint() {
            return Err(HflError::FixpointInRhs(eq.var.clone()));
        }
        let (_, result) = eq.ty.uncurry();
        if *result == HflType::Int {
            return Err(HflError::IntResult(eq.var.clone()));
        }
        expect(&env, &eq.rhs, &eq.ty)?;
    }
    if hes.main.contains_fixpoint() {
        return Err(HflError::FixpointInRhs("main".into()));
    }
    typecheck_formula(&env, &hes.main)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfl::Formula as F;

    #[test]
    fn diamond_top_is_prop() {
        assert_eq!(
            typecheck_formula(&[], &F::diamond("a", F::True)).unwrap(),
            HflType::Prop
        );
    }

    #[test]
    fn alternation_example_types_as_prop_to_prop() {
        // mu x: prop -> prop. \y: prop. y \/ <a>(x (<b> y))
        let f = F::mu(
            "x",
            HflType::arrow(HflType::Prop, HflType::Prop),
            F::abs(
                "y",
                HflType::Prop,
                F::or(
                    F::var("y"),
                    F::diamond("a", F::app(F::var("x"), F::diamond("b", F::var("y")))),
                ),
            ),
        );
        assert_eq!(
            typecheck_formula(&[], &f).unwrap(),
            HflType::arrow(HflType::Prop, HflType::Prop)
        );
    }

    #[test]
    fn arithmetic_on_propositions_rejected() {
        // (<a> true) + 1
        let f = F::op(
            crate::ops::IntOp::Add,
            F::diamond("a", F::True),
            F::Int(1.into()),
        );
        assert!(matches!(
            typecheck_formula(&[], &f),
            Err(HflError::IllTyped { .. })
        ));
    }

    #[test]
    fn int_lambda_result_rejected() {
        let f = F::abs("x", HflType::Int, F::var("x"));
        assert!(matches!(typecheck_formula(&[], &f), Err(HflError::IntResult(_))));
    }
}
