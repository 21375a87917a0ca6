//! Canonical printer for programs. `parse_program(print_program(p)) == p`
//! for programs containing no `assert` sugar (the printer emits the desugared
//! form).

use super::{Cond, Program, Term};

// Precedence levels, loosest to tightest.
const P_TERM: u8 = 0; // event/if/lambda/choice
const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_APP: u8 = 3;
const P_ATOM: u8 = 4;

fn term(out: &mut String, t: &Term, prec: u8) {
    match t {
        Term::Unit => out.push_str("()"),
        Term::Var(x) => out.push_str(x),
        Term::Int(n) => {
            if n.sign() == num_bigint::Sign::Minus && prec >= P_APP {
                out.push('(');
                out.push_str(&n.to_string());
                out.push(')');
            } else {
                out.push_str(&n.to_string());
            }
        }
        Term::Op(op, a, b) => {
            let level = match op {
                crate::ops::IntOp::Add | crate::ops::IntOp::Sub => P_ADD,
                crate::ops::IntOp::Mul => P_MUL,
            };
            paren(out, prec > level, |out| {
                term(out, a, level);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                term(out, b, level + 1);
            });
        }
        Term::If(c, a, b) => paren(out, prec > P_TERM, |out| {
            out.push_str("if ");
            cond(out, c, false);
            out.push_str(" then ");
            term(out, a, P_TERM);
            out.push_str(" else ");
            term(out, b, P_TERM);
        }),
        Term::Event(l, body) => paren(out, prec > P_TERM, |out| {
            out.push_str("event ");
            out.push_str(l);
            out.push_str("; ");
            term(out, body, P_TERM);
        }),
        Term::App(..) => {
            let (head, args) = t.spine();
            paren(out, prec > P_APP, |out| {
                term(out, head, P_ATOM);
                for a in args {
                    out.push(' ');
                    term(out, a, P_ATOM);
                }
            });
        }
        Term::NonDet(a, b) => paren(out, prec > P_TERM, |out| {
            term(out, a, P_ADD);
            out.push_str(" <> ");
            term(out, b, P_TERM);
        }),
        Term::Abs(params, body) => paren(out, prec > P_TERM, |out| {
            out.push('\\');
            out.push_str(&params.join(" "));
            out.push_str(". ");
            term(out, body, P_TERM);
        }),
    }
}

fn cond(out: &mut String, c: &Cond, inside_and: bool) {
    match c {
        Cond::Cmp(op, a, b) => {
            term(out, a, P_ADD);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            term(out, b, P_ADD);
        }
        Cond::And(a, b) => {
            and_operand(out, a);
            out.push_str(" /\\ ");
            and_operand(out, b);
        }
        Cond::Or(a, b) => paren(out, inside_and, |out| {
            cond(out, a, false);
            out.push_str(" \\/ ");
            cond(out, b, false);
        }),
    }
}

fn and_operand(out: &mut String, c: &Cond) {
    cond(out, c, true)
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

/// Renders a single term.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    term(&mut out, t, P_TERM);
    out
}

pub(crate) fn show_term(t: &Term) -> String {
    print_term(t)
}

/// Prints a program in the concrete definition-list syntax.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (name, def) in &p.defs {
        out.push_str(name);
        for param in &def.params {
            out.push(' ');
            out.push_str(param);
        }
        out.push_str(" = ");
        term(&mut out, &def.body, P_TERM);
        out.push_str(";\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::surface::{parse_program, print_program};

    fn roundtrip(src: &str) {
        let p = parse_program(src).unwrap();
        let printed = print_program(&p);
        let reparsed = parse_program(&printed)
            .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
        assert_eq!(p, reparsed, "printed form: {printed}");
    }

    #[test]
    fn roundtrips() {
        roundtrip("main = ()");
        roundtrip("loop x = loop x; main = loop (event a; ())");
        roundtrip("f x = (event close; ()) <> (event read; event read; f x); main = f ()");
        roundtrip(
            "loop x y = if x <= 0 \\/ y <= 0 then (event end; ()) \
             else (loop (x - 1) (y * y)) <> (loop x (y - 1)); main = loop 2 2",
        );
        roundtrip("main = sum 3 (\\r. assert(r >= 3)); sum x k = if x = 0 then k 0 else sum (x - 1) (\\r. k (x + r))");
        roundtrip("main = f (-10) (1 - 2 - 3) (2 * (3 + 4)); f x y z = ()");
        roundtrip("g k = (event a; k) <> (event b; k); f x = if x > 0 then g (f (x - 1)) else (event b; f 5); main = f 5");
        roundtrip("main = if (x = 1 \\/ x = 2) /\\ y < x * 2 then () else ()");
    }
}
