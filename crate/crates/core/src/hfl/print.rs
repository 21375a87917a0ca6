//! Text format for equation systems:
//!
//! ```text
//! X (x:int) (k:int -> prop) =mu RHS;
//! Y =nu RHS;
//! main: FORMULA;
//! ```
//!
//! Formula syntax uses `\/`, `/\`, `<a>`, `[a]`, `\x:ty. f`, `mu X:ty. f`
//! and juxtaposition for application. The printer always annotates equation
//! parameters so the format round-trips without inference.

use super::{Fix, Formula, Hes, HflType};

const P_BIND: u8 = 0; // lambda, mu, nu
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_CMP: u8 = 3;
const P_ADD: u8 = 4;
const P_MUL: u8 = 5;
const P_APP: u8 = 6;
const P_ATOM: u8 = 7;

fn go(out: &mut String, f: &Formula, prec: u8) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Var(x) => out.push_str(x),
        Formula::Int(n) => {
            if n.sign() == num_bigint::Sign::Minus && prec >= P_APP {
                out.push('(');
                out.push_str(&n.to_string());
                out.push(')');
            } else {
                out.push_str(&n.to_string());
            }
        }
        Formula::Op(op, a, b) => {
            let level = match op {
                crate::ops::IntOp::Add | crate::ops::IntOp::Sub => P_ADD,
                crate::ops::IntOp::Mul => P_MUL,
            };
            paren(out, prec > level, |out| {
                go(out, a, level);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                go(out, b, level + 1);
            });
        }
        Formula::Pred(op, a, b) => paren(out, prec > P_CMP, |out| {
            go(out, a, P_ADD);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            go(out, b, P_ADD);
        }),
        Formula::Or(a, b) => paren(out, prec > P_OR, |out| {
            go(out, a, P_AND);
            out.push_str(" \\/ ");
            go(out, b, P_OR);
        }),
        Formula::And(a, b) => paren(out, prec > P_AND, |out| {
            go(out, a, P_CMP);
            out.push_str(" /\\ ");
            go(out, b, P_AND);
        }),
        Formula::Diamond(l, a) => paren(out, prec > P_APP, |out| {
            out.push('<');
            out.push_str(l);
            out.push_str("> ");
            go(out, a, P_ATOM);
        }),
        Formula::Boxm(l, a) => paren(out, prec > P_APP, |out| {
            out.push('[');
            out.push_str(l);
            out.push_str("] ");
            go(out, a, P_ATOM);
        }),
        Formula::Mu(x, ty, a) => paren(out, prec > P_BIND, |out| {
            out.push_str("mu ");
            out.push_str(x);
            out.push(':');
            out.push_str(&ty.to_string());
            out.push_str(". ");
            go(out, a, P_BIND);
        }),
        Formula::Nu(x, ty, a) => paren(out, prec > P_BIND, |out| {
            out.push_str("nu ");
            out.push_str(x);
            out.push(':');
            out.push_str(&ty.to_string());
            out.push_str(". ");
            go(out, a, P_BIND);
        }),
        Formula::Abs(x, ty, a) => paren(out, prec > P_BIND, |out| {
            out.push('\\');
            out.push_str(x);
            out.push(':');
            out.push_str(&ty.to_string());
            out.push_str(". ");
            go(out, a, P_BIND);
        }),
        Formula::App(..) => {
            let (head, args) = f.spine();
            paren(out, prec > P_APP, |out| {
                go(out, head, P_ATOM);
                for a in args {
                    out.push(' ');
                    go(out, a, P_ATOM);
                }
            });
        }
    }
}

fn paren(out: &mut String, needed: bool, inner: impl FnOnce(&mut String)) {
    if needed {
        out.push('(');
        inner(out);
        out.push(')');
    } else {
        inner(out);
    }
}

/// Renders a single formula.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    go(&mut out, f, P_BIND);
    out
}

/// Renders an equation system in the line-oriented text format. Leading
/// lambdas of each right-hand side become annotated head parameters.
pub fn print_hes(hes: &Hes) -> String {
    let mut out = String::new();
    for eq in &hes.eqs {
        out.push_str(&eq.var);
        let mut rhs = &eq.rhs;
        while let Formula::Abs(x, ty, body) = rhs {
            out.push_str(" (");
            out.push_str(x);
            out.push(':');
            out.push_str(&ty.to_string());
            out.push(')');
            rhs = body;
        }
        out.push_str(match eq.fix {
            Fix::Mu => " =mu ",
            Fix::Nu => " =nu ",
        });
        go(&mut out, rhs, P_BIND);
        out.push_str(";\n");
    }
    out.push_str("main: ");
    go(&mut out, &hes.main, P_BIND);
    out.push_str(";\n");
    out
}

/// The declared type of an equation printed with `k` head parameters is the
/// equation's type; reconstructing it from printed parameters needs the
/// annotations, which is why the printer always writes them.
pub(crate) fn head_param_types(ty: &HflType, arity: usize) -> Vec<HflType> {
    let (args, _) = ty.uncurry();
    args.into_iter().take(arity).cloned().collect()
}
