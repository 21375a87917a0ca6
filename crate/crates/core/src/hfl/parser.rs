//! Parser for the equation-system text format. Parameter and binder
//! annotations are optional on input (missing types are reconstructed by
//! unification, defaulting unconstrained ones to `prop`); the printer always
//! writes them, so printed systems round-trip exactly.

use super::{Fix, Formula, Hes, HesEq, HflError, HflType};
use crate::ops::{CmpOp, IntOp};
use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    True,
    False,
    KwMu,
    KwNu,
    KwProp,
    KwInt,
    EqMu,
    EqNu,
    LPar,
    RPar,
    LBrack,
    RBrack,
    Semi,
    Colon,
    Dot,
    Lambda,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Plus,
    Minus,
    Star,
    Arrow,
    Or,
    And,
    Eof,
}

type Spanned = (Tok, usize, usize);

fn lex(src: &str) -> Result<Vec<Spanned>, HflError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut pos, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut bump = |pos: &mut usize, line: &mut usize, col: &mut usize| {
        if bytes[*pos] == b'\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *pos += 1;
    };
    while pos < bytes.len() {
        let c = bytes[pos];
        let (tline, tcol) = (line, col);
        let err = |msg: String| HflError::Parse { line: tline, col: tcol, msg };
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                bump(&mut pos, &mut line, &mut col);
                continue;
            }
            b'#' => {
                // line comment
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    bump(&mut pos, &mut line, &mut col);
                }
                continue;
            }
            _ => {}
        }
        let tok = match c {
            b'(' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::LPar
            }
            b')' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::RPar
            }
            b'[' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::LBrack
            }
            b']' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::RBrack
            }
            b';' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::Semi
            }
            b':' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::Colon
            }
            b'.' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::Dot
            }
            b'+' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::Plus
            }
            b'*' => {
                bump(&mut pos, &mut line, &mut col);
                Tok::Star
            }
            b'-' => {
                bump(&mut pos, &mut line, &mut col);
                if pos < bytes.len() && bytes[pos] == b'>' {
                    bump(&mut pos, &mut line, &mut col);
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            b'<' => {
                bump(&mut pos, &mut line, &mut col);
                if pos < bytes.len() && bytes[pos] == b'=' {
                    bump(&mut pos, &mut line, &mut col);
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            b'>' => {
                bump(&mut pos, &mut line, &mut col);
                if pos < bytes.len() && bytes[pos] == b'=' {
                    bump(&mut pos, &mut line, &mut col);
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            b'!' => {
                bump(&mut pos, &mut line, &mut col);
                if pos < bytes.len() && bytes[pos] == b'=' {
                    bump(&mut pos, &mut line, &mut col);
                    Tok::Ne
                } else {
                    return Err(err("expected `!=`".into()));
                }
            }
            b'=' => {
                bump(&mut pos, &mut line, &mut col);
                let rest = &bytes[pos..];
                let boundary = |r: &[u8], n: usize| {
                    r.get(n)
                        .map(|c| !c.is_ascii_alphanumeric() && *c != b'_')
                        .unwrap_or(true)
                };
                if rest.starts_with(b"mu") && boundary(rest, 2) {
                    bump(&mut pos, &mut line, &mut col);
                    bump(&mut pos, &mut line, &mut col);
                    Tok::EqMu
                } else if rest.starts_with(b"nu") && boundary(rest, 2) {
                    bump(&mut pos, &mut line, &mut col);
                    bump(&mut pos, &mut line, &mut col);
                    Tok::EqNu
                } else {
                    Tok::Eq
                }
            }
            b'\\' => {
                bump(&mut pos, &mut line, &mut col);
                if pos < bytes.len() && bytes[pos] == b'/' {
                    bump(&mut pos, &mut line, &mut col);
                    Tok::Or
                } else {
                    Tok::Lambda
                }
            }
            b'/' => {
                bump(&mut pos, &mut line, &mut col);
                if pos < bytes.len() && bytes[pos] == b'\\' {
                    bump(&mut pos, &mut line, &mut col);
                    Tok::And
                } else {
                    return Err(err("expected `/\\`".into()));
                }
            }
            b'0'..=b'9' => {
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    bump(&mut pos, &mut line, &mut col);
                }
                Tok::Int(std::str::from_utf8(&bytes[start..pos]).unwrap().parse().unwrap())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = pos;
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_' || bytes[pos] == b'\'')
                {
                    bump(&mut pos, &mut line, &mut col);
                }
                match std::str::from_utf8(&bytes[start..pos]).unwrap() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "mu" => Tok::KwMu,
                    "nu" => Tok::KwNu,
                    "prop" => Tok::KwProp,
                    "int" => Tok::KwInt,
                    other => Tok::Ident(other.to_string()),
                }
            }
            other => return Err(err(format!("unexpected character `{}`", other as char))),
        };
        out.push((tok, tline, tcol));
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

/// Formula skeleton with optional binder annotations, resolved by inference.
#[derive(Debug, Clone)]
enum PF {
    True,
    False,
    Int(BigInt),
    Var(String),
    Op(IntOp, Box<PF>, Box<PF>),
    Pred(CmpOp, Box<PF>, Box<PF>),
    Or(Box<PF>, Box<PF>),
    And(Box<PF>, Box<PF>),
    Dia(String, Box<PF>),
    Boxm(String, Box<PF>),
    Bind(Binder, String, Option<HflType>, Box<PF>),
    App(Box<PF>, Box<PF>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Binder {
    Mu,
    Nu,
    Abs,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> HflError {
        let (_, line, col) = self.toks[self.pos];
        HflError::Parse { line, col, msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), HflError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, HflError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.next();
                Ok(x)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn ty(&mut self) -> Result<HflType, HflError> {
        let lhs = self.ty_atom()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.ty()?;
            Ok(HflType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_atom(&mut self) -> Result<HflType, HflError> {
        match self.next() {
            Tok::KwProp => Ok(HflType::Prop),
            Tok::KwInt => Ok(HflType::Int),
            Tok::LPar => {
                let t = self.ty()?;
                self.expect(Tok::RPar, "`)`")?;
                Ok(t)
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected a type"))
            }
        }
    }

    fn formula(&mut self) -> Result<PF, HflError> {
        match self.peek().clone() {
            Tok::Lambda | Tok::KwMu | Tok::KwNu => {
                let binder = match self.next() {
                    Tok::Lambda => Binder::Abs,
                    Tok::KwMu => Binder::Mu,
                    _ => Binder::Nu,
                };
                let name = self.ident("a variable")?;
                let ann = if *self.peek() == Tok::Colon {
                    self.next();
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect(Tok::Dot, "`.`")?;
                let body = self.formula()?;
                Ok(PF::Bind(binder, name, ann, Box::new(body)))
            }
            _ => self.or_level(),
        }
    }

    fn or_level(&mut self) -> Result<PF, HflError> {
        let mut acc = self.and_level()?;
        while *self.peek() == Tok::Or {
            self.next();
            // allow a binder on the right: `a \/ mu x. ...`
            let rhs = self.formula_or_and()?;
            acc = PF::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn formula_or_and(&mut self) -> Result<PF, HflError> {
        match self.peek() {
            Tok::Lambda | Tok::KwMu | Tok::KwNu => self.formula(),
            _ => self.and_level(),
        }
    }

    fn and_level(&mut self) -> Result<PF, HflError> {
        let mut acc = self.cmp_level()?;
        while *self.peek() == Tok::And {
            self.next();
            let rhs = match self.peek() {
                Tok::Lambda | Tok::KwMu | Tok::KwNu => self.formula()?,
                _ => self.cmp_level()?,
            };
            acc = PF::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn cmp_level(&mut self) -> Result<PF, HflError> {
        let lhs = self.add_level()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.add_level()?;
        Ok(PF::Pred(op, Box::new(lhs), Box::new(rhs)))
    }

    fn add_level(&mut self) -> Result<PF, HflError> {
        let mut acc = self.mul_level()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => IntOp::Add,
                Tok::Minus => IntOp::Sub,
                _ => return Ok(acc),
            };
            self.next();
            let rhs = self.mul_level()?;
            acc = PF::Op(op, Box::new(acc), Box::new(rhs));
        }
    }

    fn mul_level(&mut self) -> Result<PF, HflError> {
        let mut acc = self.app_level()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.app_level()?;
            acc = PF::Op(IntOp::Mul, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn app_level(&mut self) -> Result<PF, HflError> {
        let mut acc = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            acc = PF::App(Box::new(acc), Box::new(arg));
        }
        Ok(acc)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::LPar | Tok::Int(_) | Tok::Ident(_) | Tok::True | Tok::False | Tok::Lt | Tok::LBrack
        ) && !(matches!(self.peek(), Tok::Lt) && !matches!(self.peek2(), Tok::Ident(_)))
    }

    fn atom(&mut self) -> Result<PF, HflError> {
        match self.peek().clone() {
            Tok::True => {
                self.next();
                Ok(PF::True)
            }
            Tok::False => {
                self.next();
                Ok(PF::False)
            }
            Tok::Int(n) => {
                self.next();
                Ok(PF::Int(n))
            }
            Tok::Ident(x) => {
                self.next();
                Ok(PF::Var(x))
            }
            Tok::Minus => {
                self.next();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.next();
                        Ok(PF::Int(-n))
                    }
                    _ => Err(self.err("expected an integer literal after `-`")),
                }
            }
            Tok::Lt => {
                self.next();
                let label = self.ident("an action label")?;
                self.expect(Tok::Gt, "`>`")?;
                let body = self.atom()?;
                Ok(PF::Dia(label, Box::new(body)))
            }
            Tok::LBrack => {
                self.next();
                let label = self.ident("an action label")?;
                self.expect(Tok::RBrack, "`]`")?;
                let body = self.atom()?;
                Ok(PF::Boxm(label, Box::new(body)))
            }
            Tok::LPar => {
                self.next();
                let inner = self.formula()?;
                self.expect(Tok::RPar, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

// ------------------------------------------------------------------
// Type reconstruction

#[derive(Debug, Clone, PartialEq)]
enum ITy {
    Var(usize),
    Prop,
    Int,
    Arrow(Box<ITy>, Box<ITy>),
}

struct Unifier {
    subst: Vec<Option<ITy>>,
}

impl Unifier {
    fn fresh(&mut self) -> ITy {
        self.subst.push(None);
        ITy::Var(self.subst.len() - 1)
    }

    fn of(&mut self, ty: &HflType) -> ITy {
        match ty {
            HflType::Prop => ITy::Prop,
            HflType::Int => ITy::Int,
            HflType::Arrow(a, r) => ITy::Arrow(Box::new(self.of(a)), Box::new(self.of(r))),
        }
    }

    fn resolve(&self, ty: &ITy) -> ITy {
        match ty {
            ITy::Var(v) => match &self.subst[*v] {
                Some(t) => self.resolve(&t.clone()),
                None => ITy::Var(*v),
            },
            ITy::Arrow(a, r) => ITy::Arrow(Box::new(self.resolve(a)), Box::new(self.resolve(r))),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: usize, ty: &ITy) -> bool {
        match self.resolve(ty) {
            ITy::Var(w) => v == w,
            ITy::Arrow(a, r) => self.occurs(v, &a) || self.occurs(v, &r),
            _ => false,
        }
    }

    fn unify(&mut self, a: &ITy, b: &ITy) -> Result<(), String> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (a, b) {
            (ITy::Var(v), t) | (t, ITy::Var(v)) => {
                if let ITy::Var(w) = t {
                    if v == w {
                        return Ok(());
                    }
                }
                if self.occurs(v, &t) {
                    return Err("cyclic type constraint".into());
                }
                self.subst[v] = Some(t);
                Ok(())
            }
            (ITy::Prop, ITy::Prop) | (ITy::Int, ITy::Int) => Ok(()),
            (ITy::Arrow(a1, r1), ITy::Arrow(a2, r2)) => {
                self.unify(&a1, &a2)?;
                self.unify(&r1, &r2)
            }
            (x, y) => Err(format!("cannot unify {x:?} with {y:?}")),
        }
    }

    /// Defaults unresolved variables to `prop`.
    fn finalize(&self, ty: &ITy) -> HflType {
        match self.resolve(ty) {
            ITy::Var(_) | ITy::Prop => HflType::Prop,
            ITy::Int => HflType::Int,
            ITy::Arrow(a, r) => HflType::arrow(self.finalize(&a), self.finalize(&r)),
        }
    }
}

/// Skeleton paired with the inference types of its binders, in preorder.
struct TypedPf<'a> {
    uni: &'a Unifier,
    binder_tys: std::collections::HashMap<*const PF, ITy>,
}

impl TypedPf<'_> {
    fn lower(&self, f: &PF) -> Formula {
        match f {
            PF::True => Formula::True,
            PF::False => Formula::False,
            PF::Int(n) => Formula::Int(n.clone()),
            PF::Var(x) => Formula::Var(x.clone()),
            PF::Op(op, a, b) => Formula::op(*op, self.lower(a), self.lower(b)),
            PF::Pred(op, a, b) => Formula::pred(*op, self.lower(a), self.lower(b)),
            PF::Or(a, b) => Formula::or(self.lower(a), self.lower(b)),
            PF::And(a, b) => Formula::and(self.lower(a), self.lower(b)),
            PF::Dia(l, a) => Formula::diamond(l.clone(), self.lower(a)),
            PF::Boxm(l, a) => Formula::boxm(l.clone(), self.lower(a)),
            PF::App(a, b) => Formula::app(self.lower(a), self.lower(b)),
            PF::Bind(binder, x, _, body) => {
                let ity = &self.binder_tys[&(f as *const PF)];
                let ty = self.uni.finalize(ity);
                let inner = self.lower(body);
                match binder {
                    Binder::Abs => Formula::abs(x.clone(), ty, inner),
                    Binder::Mu => Formula::mu(x.clone(), ty, inner),
                    Binder::Nu => Formula::nu(x.clone(), ty, inner),
                }
            }
        }
    }
}

/// Records each binder's variable type during constraint generation.
fn constrain_recording(
    uni: &mut Unifier,
    env: &mut Vec<(String, ITy)>,
    f: &PF,
    record: &mut std::collections::HashMap<*const PF, ITy>,
) -> Result<ITy, HflError> {
    match f {
        PF::Bind(binder, x, ann, body) => {
            let tx = match ann {
                Some(t) => uni.of(t),
                None => uni.fresh(),
            };
            record.insert(f as *const PF, tx.clone());
            env.push((x.clone(), tx.clone()));
            let tbody = constrain_recording(uni, env, body, record)?;
            env.pop();
            match binder {
                Binder::Abs => Ok(ITy::Arrow(Box::new(tx), Box::new(tbody))),
                Binder::Mu | Binder::Nu => {
                    uni.unify(&tx, &tbody)
                        .map_err(HflError::Inference)?;
                    Ok(tbody)
                }
            }
        }
        PF::Op(_, a, b) | PF::Pred(_, a, b) => {
            let ta = constrain_recording(uni, env, a, record)?;
            uni.unify(&ta, &ITy::Int).map_err(HflError::Inference)?;
            let tb = constrain_recording(uni, env, b, record)?;
            uni.unify(&tb, &ITy::Int).map_err(HflError::Inference)?;
            Ok(if matches!(f, PF::Op(..)) { ITy::Int } else { ITy::Prop })
        }
        PF::Or(a, b) | PF::And(a, b) => {
            let ta = constrain_recording(uni, env, a, record)?;
            uni.unify(&ta, &ITy::Prop).map_err(HflError::Inference)?;
            let tb = constrain_recording(uni, env, b, record)?;
            uni.unify(&tb, &ITy::Prop).map_err(HflError::Inference)?;
            Ok(ITy::Prop)
        }
        PF::Dia(_, a) | PF::Boxm(_, a) => {
            let ta = constrain_recording(uni, env, a, record)?;
            uni.unify(&ta, &ITy::Prop).map_err(HflError::Inference)?;
            Ok(ITy::Prop)
        }
        PF::App(a, b) => {
            let ta = constrain_recording(uni, env, a, record)?;
            let tb = constrain_recording(uni, env, b, record)?;
            let res = uni.fresh();
            uni.unify(&ta, &ITy::Arrow(Box::new(tb), Box::new(res.clone())))
                .map_err(HflError::Inference)?;
            Ok(res)
        }
        PF::True | PF::False => Ok(ITy::Prop),
        PF::Int(_) => Ok(ITy::Int),
        PF::Var(x) => env
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| HflError::Unbound(x.clone())),
    }
}

struct RawEq {
    name: String,
    params: Vec<(String, Option<HflType>)>,
    fix: Fix,
    rhs: PF,
}

/// Parses the equation-system format.
pub fn parse_hes(src: &str) -> Result<Hes, HflError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut raw_eqs: Vec<RawEq> = Vec::new();
    let mut main: Option<PF> = None;
    loop {
        match (p.peek().clone(), p.peek2().clone()) {
            (Tok::Eof, _) => break,
            (Tok::Ident(name), Tok::Colon) if name == "main" => {
                p.next();
                p.next();
                let f = p.formula()?;
                p.expect(Tok::Semi, "`;`")?;
                if main.replace(f).is_some() {
                    return Err(p.err("duplicate main formula"));
                }
            }
            (Tok::Ident(_), _) => {
                let name = p.ident("an equation name")?;
                let mut params = Vec::new();
                loop {
                    match p.peek().clone() {
                        Tok::Ident(x) => {
                            p.next();
                            params.push((x, None));
                        }
                        Tok::LPar => {
                            p.next();
                            let x = p.ident("a parameter name")?;
                            p.expect(Tok::Colon, "`:`")?;
                            let ty = p.ty()?;
                            p.expect(Tok::RPar, "`)`")?;
                            params.push((x, Some(ty)));
                        }
                        _ => break,
                    }
                }
                let fix = match p.next() {
                    Tok::EqMu => Fix::Mu,
                    Tok::EqNu => Fix::Nu,
                    _ => {
                        p.pos = p.pos.saturating_sub(1);
                        return Err(p.err("expected `=mu` or `=nu`"));
                    }
                };
                let rhs = p.formula()?;
                p.expect(Tok::Semi, "`;`")?;
                raw_eqs.push(RawEq { name, params, fix, rhs });
            }
            _ => return Err(p.err("expected an equation or `main:`")),
        }
    }
    let Some(main_pf) = main else {
        return Err(HflError::Inference("missing `main:` formula".into()));
    };

    // Fold parameters into binders so inference sees one shape.
    let fold = |eq: &RawEq| -> PF {
        eq.params.iter().rev().fold(eq.rhs.clone(), |acc, (x, ann)| {
            PF::Bind(Binder::Abs, x.clone(), ann.clone(), Box::new(acc))
        })
    };
    let bodies: Vec<PF> = raw_eqs.iter().map(fold).collect();

    let mut uni = Unifier { subst: Vec::new() };
    let eq_tys: Vec<ITy> = raw_eqs.iter().map(|_| uni.fresh()).collect();
    let base_env: Vec<(String, ITy)> = raw_eqs
        .iter()
        .zip(&eq_tys)
        .map(|(e, t)| (e.name.clone(), t.clone()))
        .collect();
    let mut record = std::collections::HashMap::new();
    for (body, eq_ty) in bodies.iter().zip(&eq_tys) {
        let mut env = base_env.clone();
        let t = constrain_recording(&mut uni, &mut env, body, &mut record)?;
        uni.unify(&t, eq_ty).map_err(HflError::Inference)?;
    }
    {
        let mut env = base_env.clone();
        constrain_recording(&mut uni, &mut env, &main_pf, &mut record)?;
    }

    let typed = TypedPf { uni: &uni, binder_tys: record };
    let eqs: Vec<HesEq> = raw_eqs
        .iter()
        .zip(&bodies)
        .zip(&eq_tys)
        .map(|((raw, body), ty)| HesEq {
            var: raw.name.clone(),
            ty: uni.finalize(ty),
            fix: raw.fix,
            rhs: typed.lower(body),
        })
        .collect();
    let hes = Hes { eqs, main: typed.lower(&main_pf) };
    super::typecheck::typecheck_hes(&hes)?;
    Ok(hes)
}

/// Parses a standalone formula (annotations optional, reconstructed by
/// unification with `prop` defaulting).
pub fn parse_formula(src: &str) -> Result<Formula, HflError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let pf = p.formula()?;
    p.expect(Tok::Eof, "end of input")?;
    let mut uni = Unifier { subst: Vec::new() };
    let mut record = std::collections::HashMap::new();
    let mut env = Vec::new();
    constrain_recording(&mut uni, &mut env, &pf, &mut record)?;
    let typed = TypedPf { uni: &uni, binder_tys: record };
    Ok(typed.lower(&pf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfl::{print_hes, typecheck_formula};

    #[test]
    fn parses_annotated_system() {
        let src = "x =nu y;\ny =mu <b> x \\/ <a> y;\nmain: x;\n";
        let hes = parse_hes(src).unwrap();
        assert_eq!(hes.eqs.len(), 2);
        assert_eq!(hes.eqs[0].fix, Fix::Nu);
        assert_eq!(hes.eqs[1].fix, Fix::Mu);
        assert_eq!(hes.main, Formula::var("x"));
    }

    #[test]
    fn infers_parameter_types() {
        let src = "f y k =mu (y != 0 \\/ <close> (k true)) /\\ (y = 0 \\/ <read> (f (y - 1) k));\nmain: f 2 (\\r. <end> true);\n";
        let hes = parse_hes(src).unwrap();
        assert_eq!(
            hes.eqs[0].ty,
            HflType::arrow(
                HflType::Int,
                HflType::arrow(HflType::arrow(HflType::Prop, HflType::Prop), HflType::Prop)
            )
        );
    }

    #[test]
    fn print_parse_roundtrip_is_exact() {
        let src = "f (y:int) (k:prop -> prop) =mu (y != 0 \\/ <close> (k true)) /\\ (y = 0 \\/ <read> (f (y - 1) k));\ng (r:prop) =nu <end> true;\nmain: f 2 (\\r:prop. <end> true);\n";
        let hes = parse_hes(src).unwrap();
        let printed = print_hes(&hes);
        let reparsed = parse_hes(&printed).unwrap();
        assert_eq!(hes, reparsed, "printed:\n{printed}");
        assert_eq!(printed, print_hes(&reparsed));
    }

    #[test]
    fn modal_vs_comparison_disambiguation() {
        // `x < 2` is a comparison, `<a> true` is a modality
        let f = parse_formula("\\x:int. x < 2 /\\ <a> true").unwrap();
        typecheck_formula(&[], &f).unwrap();
    }

    #[test]
    fn rejects_untypeable_input() {
        assert!(parse_hes("x =mu x + 1;\nmain: x;\n").is_err());
        assert!(parse_hes("main: y;\n").is_err());
    }
}
