//! Concrete syntax for programs.
//!
//! ```text
//! program := def (";" def)* ";"?                  -- one def must be `main = term`
//!          | ("let" "rec"? ident ident* "=" term "in")* term
//! def     := ident ident* "=" term
//! term    := "event" ident ";" term
//!          | "assert" "(" cond ")" (";" term)?
//!          | "if" cond "then" term "else" term
//!          | "\" ident+ "." term
//!          | arith ("<>" term)?
//! arith   := mul (("+" | "-") mul)*
//! mul     := app ("*" app)*
//! app     := atom+
//! atom    := "()" | int | "-" int | ident | "(" term ")"
//! cond    := cand ("\/" cand)*
//! cand    := catom ("/\" catom)*
//! catom   := arith cmp arith | "(" cond ")"
//! cmp     := "=" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Comments are `(* ... *)` and nest. `event`, `assert` and `if` extend as
//! far right as possible; `<>` is right-associative. `assert(c); t` is sugar
//! for `if c then t else (event fail; omega)` where `omega` is a fresh
//! diverging definition shared by all asserts of the program.

use super::{Cond, Def, Program, SurfaceError, Term};
use crate::ops::{CmpOp, IntOp};
use indexmap::IndexMap;
use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    LPar,
    RPar,
    Semi,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Choice, // <>
    Or,     // \/
    And,    // /\
    Lambda, // \
    Dot,
    KwIf,
    KwThen,
    KwElse,
    KwEvent,
    KwAssert,
    KwLet,
    KwRec,
    KwIn,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> SurfaceError {
        SurfaceError::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn skip_trivia(&mut self) -> Result<(), SurfaceError> {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'(') if self.peek2() == Some(b'*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    let mut depth = 1usize;
                    loop {
                        match (self.peek(), self.peek2()) {
                            (Some(b'('), Some(b'*')) => {
                                self.bump();
                                self.bump();
                                depth += 1;
                            }
                            (Some(b'*'), Some(b')')) => {
                                self.bump();
                                self.bump();
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(SurfaceError::Parse {
                                    line,
                                    col,
                                    msg: "unterminated comment".into(),
                                })
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, SurfaceError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LPar
                }
                b')' => {
                    self.bump();
                    Tok::RPar
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b'=' => {
                    self.bump();
                    Tok::Eq
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ne
                    } else {
                        return Err(self.err("expected `!=`"));
                    }
                }
                b'<' => {
                    self.bump();
                    match self.peek() {
                        Some(b'>') => {
                            self.bump();
                            Tok::Choice
                        }
                        Some(b'=') => {
                            self.bump();
                            Tok::Le
                        }
                        _ => Tok::Lt,
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                b'\\' => {
                    self.bump();
                    if self.peek() == Some(b'/') {
                        self.bump();
                        Tok::Or
                    } else {
                        Tok::Lambda
                    }
                }
                b'/' => {
                    self.bump();
                    if self.peek() == Some(b'\\') {
                        self.bump();
                        Tok::And
                    } else {
                        return Err(self.err("expected `/\\`"));
                    }
                }
                b'0'..=b'9' => {
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Tok::Int(text.parse().unwrap())
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'\'')
                    {
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    match text {
                        "if" => Tok::KwIf,
                        "then" => Tok::KwThen,
                        "else" => Tok::KwElse,
                        "event" => Tok::KwEvent,
                        "assert" => Tok::KwAssert,
                        "let" => Tok::KwLet,
                        "rec" => Tok::KwRec,
                        "in" => Tok::KwIn,
                        _ => Tok::Ident(text.to_string()),
                    }
                }
                other => return Err(self.err(format!("unexpected character `{}`", other as char))),
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    asserts_seen: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> SurfaceError {
        let (_, line, col) = self.toks[self.pos];
        SurfaceError::Parse { line, col, msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SurfaceError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SurfaceError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(name)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn program(&mut self) -> Result<Program, SurfaceError> {
        let mut defs: IndexMap<String, Def> = IndexMap::new();
        if *self.peek() == Tok::KwLet {
            // let-chain style: `let f x = t in ... in main-term`
            while *self.peek() == Tok::KwLet {
                self.next();
                if *self.peek() == Tok::KwRec {
                    self.next();
                }
                let (name, def) = self.def()?;
                if defs.insert(name.clone(), def).is_some() {
                    return Err(SurfaceError::DuplicateDef(name));
                }
                self.expect(Tok::KwIn, "`in`")?;
            }
            let body = self.term()?;
            self.expect(Tok::Eof, "end of input")?;
            if defs.insert("main".into(), Def { params: vec![], body }).is_some() {
                return Err(SurfaceError::DuplicateDef("main".into()));
            }
        } else {
            loop {
                let (name, def) = self.def()?;
                if defs.insert(name.clone(), def).is_some() {
                    return Err(SurfaceError::DuplicateDef(name));
                }
                match self.peek() {
                    Tok::Semi => {
                        self.next();
                        if *self.peek() == Tok::Eof {
                            break;
                        }
                    }
                    Tok::Eof => break,
                    _ => return Err(self.err("expected `;` or end of input")),
                }
            }
        }
        match defs.get("main") {
            None => return Err(SurfaceError::NoMain),
            Some(d) if !d.params.is_empty() => return Err(SurfaceError::MainHasParams),
            Some(_) => {}
        }
        Ok(Program { defs, main: "main".into() })
    }

    fn def(&mut self) -> Result<(String, Def), SurfaceError> {
        let name = self.ident("a definition name")?;
        let mut params = Vec::new();
        while let Tok::Ident(p) = self.peek().clone() {
            self.next();
            params.push(p);
        }
        self.expect(Tok::Eq, "`=`")?;
        let body = self.term()?;
        Ok((name, Def { params, body }))
    }

    fn term(&mut self) -> Result<Term, SurfaceError> {
        match self.peek().clone() {
            Tok::KwEvent => {
                self.next();
                let label = self.ident("an event name")?;
                self.expect(Tok::Semi, "`;`")?;
                let body = self.term()?;
                Ok(Term::Event(label, Box::new(body)))
            }
            Tok::KwAssert => {
                self.next();
                self.asserts_seen = true;
                self.expect(Tok::LPar, "`(`")?;
                let cond = self.cond()?;
                self.expect(Tok::RPar, "`)`")?;
                let cont = if *self.peek() == Tok::Semi {
                    self.next();
                    self.term()?
                } else {
                    Term::Unit
                };
                // `event fail; omega` in the else branch; the omega definition
                // is attached by `parse_program` once asserts are known to occur.
                let failure = Term::Event("fail".into(), Box::new(Term::Var(OMEGA.into())));
                Ok(Term::If(cond, Box::new(cont), Box::new(failure)))
            }
            Tok::KwIf => {
                self.next();
                let cond = self.cond()?;
                self.expect(Tok::KwThen, "`then`")?;
                let then = self.term()?;
                self.expect(Tok::KwElse, "`else`")?;
                let els = self.term()?;
                Ok(Term::If(cond, Box::new(then), Box::new(els)))
            }
            Tok::Lambda => {
                self.next();
                let mut params = vec![self.ident("a parameter")?];
                while let Tok::Ident(p) = self.peek().clone() {
                    self.next();
                    params.push(p);
                }
                self.expect(Tok::Dot, "`.`")?;
                let body = self.term()?;
                Ok(Term::Abs(params, Box::new(body)))
            }
            _ => {
                let lhs = self.arith()?;
                if *self.peek() == Tok::Choice {
                    self.next();
                    let rhs = self.term()?;
                    Ok(Term::NonDet(Box::new(lhs), Box::new(rhs)))
                } else {
                    Ok(lhs)
                }
            }
        }
    }

    fn arith(&mut self) -> Result<Term, SurfaceError> {
        let mut acc = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => IntOp::Add,
                Tok::Minus => IntOp::Sub,
                _ => return Ok(acc),
            };
            self.next();
            let rhs = self.mul()?;
            acc = Term::Op(op, Box::new(acc), Box::new(rhs));
        }
    }

    fn mul(&mut self) -> Result<Term, SurfaceError> {
        let mut acc = self.app()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.app()?;
            acc = Term::Op(IntOp::Mul, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn app(&mut self) -> Result<Term, SurfaceError> {
        let mut acc = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            acc = Term::app(acc, arg);
        }
        Ok(acc)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::LPar | Tok::Int(_) | Tok::Ident(_))
    }

    fn atom(&mut self) -> Result<Term, SurfaceError> {
        match self.peek().clone() {
            Tok::LPar => {
                self.next();
                if *self.peek() == Tok::RPar {
                    self.next();
                    return Ok(Term::Unit);
                }
                if *self.peek() == Tok::Minus {
                    // negative integer literal in parentheses, e.g. `f (-10)`
                    let save = self.pos;
                    self.next();
                    if let Tok::Int(n) = self.peek().clone() {
                        self.next();
                        if *self.peek() == Tok::RPar {
                            self.next();
                            return Ok(Term::Int(-n));
                        }
                    }
                    self.pos = save;
                }
                let inner = self.term()?;
                self.expect(Tok::RPar, "`)`")?;
                Ok(inner)
            }
            Tok::Int(n) => {
                self.next();
                Ok(Term::Int(n))
            }
            Tok::Ident(x) => {
                self.next();
                Ok(Term::Var(x))
            }
            Tok::Minus => {
                self.next();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.next();
                        Ok(Term::Int(-n))
                    }
                    _ => Err(self.err("expected an integer literal after `-`")),
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }

    fn cond(&mut self) -> Result<Cond, SurfaceError> {
        let mut acc = self.cand()?;
        while *self.peek() == Tok::Or {
            self.next();
            let rhs = self.cand()?;
            acc = Cond::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn cand(&mut self) -> Result<Cond, SurfaceError> {
        let mut acc = self.catom()?;
        while *self.peek() == Tok::And {
            self.next();
            let rhs = self.catom()?;
            acc = Cond::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn catom(&mut self) -> Result<Cond, SurfaceError> {
        if *self.peek() == Tok::LPar {
            // Either a parenthesized condition or a parenthesized arithmetic
            // operand; try the condition first and roll back.
            let save = self.pos;
            self.next();
            if let Ok(inner) = self.cond() {
                if *self.peek() == Tok::RPar {
                    self.next();
                    return Ok(inner);
                }
            }
            self.pos = save;
        }
        let lhs = self.arith()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.err("expected a comparison operator")),
        };
        self.next();
        let rhs = self.arith()?;
        Ok(Cond::cmp(op, lhs, rhs))
    }
}

/// Name of the shared diverging function introduced by `assert` desugaring.
pub(crate) const OMEGA: &str = "omega";

/// Parses a program. `assert(c)` desugars to
/// `if c then () else (event fail; omega)` with a single shared diverging
/// `omega` definition appended when any assert occurs.
pub fn parse_program(text: &str) -> Result<Program, SurfaceError> {
    let toks = Lexer::new(text).tokens()?;
    let mut parser = Parser { toks, pos: 0, asserts_seen: false };
    let mut program = parser.program()?;
    if parser.asserts_seen && !program.defs.contains_key(OMEGA) {
        program.defs.insert(
            OMEGA.into(),
            Def { params: vec![], body: Term::Var(OMEGA.into()) },
        );
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn let_style_recursion() {
        let p = parse_program("let f x = f x in f 0").unwrap();
        assert_eq!(p.main, "main");
        let f = &p.defs["f"];
        assert_eq!(f.params, vec!["x".to_string()]);
        assert_eq!(f.body, Term::app(Term::Var("f".into()), Term::Var("x".into())));
        assert_eq!(
            p.main_def().body,
            Term::app(Term::Var("f".into()), Term::Int(0.into()))
        );
    }

    #[test]
    fn def_style_loop() {
        let p = parse_program("loop x = loop x; main = loop (event a; ())").unwrap();
        assert_eq!(p.defs.len(), 2);
        assert!(p.defs.contains_key("loop"));
        assert_eq!(
            p.main_def().body,
            Term::app(
                Term::Var("loop".into()),
                Term::Event("a".into(), Box::new(Term::Unit))
            )
        );
    }

    #[test]
    fn assert_desugars_to_guarded_failure() {
        let p = parse_program("main = assert(x >= 0)").unwrap();
        let Term::If(cond, then, els) = &p.main_def().body else {
            panic!("expected if");
        };
        assert_eq!(
            *cond,
            Cond::cmp(CmpOp::Ge, Term::Var("x".into()), Term::Int(0.into()))
        );
        assert_eq!(**then, Term::Unit);
        let Term::Event(label, cont) = &**els else {
            panic!("expected event");
        };
        assert_eq!(label, "fail");
        assert_eq!(**cont, Term::Var(OMEGA.into()));
        // the shared diverging definition exists and diverges
        assert_eq!(p.defs[OMEGA].body, Term::Var(OMEGA.into()));
    }

    #[test]
    fn duplicate_definition_rejected() {
        assert!(matches!(
            parse_program("f x = x; f y = y; main = ()"),
            Err(SurfaceError::DuplicateDef(_))
        ));
    }

    #[test]
    fn missing_main_rejected() {
        assert!(matches!(parse_program("f x = f x"), Err(SurfaceError::NoMain)));
    }

    #[test]
    fn comments_nest() {
        let p = parse_program("(* outer (* inner *) still *) main = ()").unwrap();
        assert_eq!(p.main_def().body, Term::Unit);
    }

    #[test]
    fn nondet_is_right_associative_and_loose() {
        let p = parse_program("main = (event a; ()) <> (event b; ()) <> ()").unwrap();
        let Term::NonDet(_, rhs) = &p.main_def().body else {
            panic!("expected choice");
        };
        assert!(matches!(**rhs, Term::NonDet(..)));
    }

    #[test]
    fn compound_guards_parse() {
        let p =
            parse_program("loop x y = if x <= 0 \\/ y <= 0 then () else loop x y; main = loop 1 1")
                .unwrap();
        let Term::If(cond, ..) = &p.defs["loop"].body else {
            panic!("expected if");
        };
        assert!(matches!(cond, Cond::Or(..)));
    }

    #[test]
    fn negative_literals() {
        let p = parse_program("main = f (-10); f x = ()").unwrap();
        let (head, args) = p.main_def().body.spine();
        assert_eq!(*head, Term::Var("f".into()));
        assert_eq!(args, vec![&Term::Int((-10).into())]);
    }
}
