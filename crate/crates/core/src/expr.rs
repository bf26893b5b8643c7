//! Scalar expression language: parser, printer and evaluators.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names resolve to chart coordinates first, then to named constants, then to
//! the built-in `pi`. Functions are `exp`, `log` (alias `ln`), `sin`, `cos`,
//! `sqrt` and the two-argument `pow`. A literal integer exponent is evaluated by
//! repeated multiplication; any other exponent needs a positive base.
//! Constants are looked up by name at evaluation time.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetError};

/// Values for named constants, bound at evaluation time.
pub type Consts = BTreeMap<String, f64>;

/// Byte range into the parsed source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn join(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at {}..{}", span.start, span.end)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

fn perr<T>(span: Span, message: impl Into<String>) -> std::result::Result<T, ParseError> {
    Err(ParseError { span, message: message.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Const(String),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    PowI(Box<Node>, i32),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
struct Spanned {
    node: Node,
    span: Span,
    children: Vec<Spanned>,
}

/// A parsed scalar expression over the coordinates of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    root: Spanned,
    coords: Vec<String>,
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(text: &str) -> std::result::Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || (ch == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mark = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                let digits = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if digits == i {
                    return perr(Span { start, end: i.max(mark + 1) }, "malformed number: missing exponent digits");
                }
            }
            if i < bytes.len() && (bytes[i] == b'.' || bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return perr(Span { start, end: i + 1 }, "malformed number");
            }
            let span = Span { start, end: i };
            let value: f64 = match text[start..i].parse() {
                Ok(v) => v,
                Err(_) => return perr(span, "malformed number"),
            };
            if !value.is_finite() {
                return perr(span, "malformed number: literal overflows");
            }
            out.push((Tok::Num(value), span));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), Span { start, end: i }));
        } else if "+-*/^(),".contains(ch) {
            i += 1;
            out.push((Tok::Sym(ch), Span { start, end: i }));
        } else {
            let len = text[i..].chars().next().map_or(1, char::len_utf8);
            return perr(Span { start, end: i + len }, format!("unexpected character `{}`", &text[i..i + len]));
        }
    }
    out.push((Tok::End, Span { start: text.len(), end: text.len() }));
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    coords: &'a [String],
    consts: &'a Consts,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, sym: char) -> std::result::Result<Span, ParseError> {
        match self.peek() {
            Tok::Sym(c) if *c == sym => Ok(self.bump().1),
            Tok::End => perr(self.span(), format!("expected `{sym}` but reached end of input")),
            _ => perr(self.span(), format!("expected `{sym}`")),
        }
    }

    fn expr(&mut self) -> std::result::Result<Spanned, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Sym(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Spanned, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Sym(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<Spanned, ParseError> {
        if let Tok::Sym('-') = self.peek() {
            let (_, span) = self.bump();
            let inner = self.unary()?;
            let span = span.join(inner.span);
            return Ok(Spanned { node: Node::Neg(Box::new(inner.node.clone())), span, children: vec![inner] });
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Spanned, ParseError> {
        let base = self.atom()?;
        if let Tok::Sym('^') = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(make_pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Spanned, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Num(v) => Ok(leaf(Node::Num(v), span)),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                let close = self.expect(')')?;
                Ok(Spanned { span: span.join(close), ..inner })
            }
            Tok::Ident(name) => {
                if let Tok::Sym('(') = self.peek() {
                    return self.call(name, span);
                }
                if Func::lookup(&name).is_some() || name == "pow" {
                    return perr(span, format!("function `{name}` needs an argument list"));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Ok(leaf(Node::Var(i), span))
                } else if self.consts.contains_key(&name) {
                    Ok(leaf(Node::Const(name), span))
                } else if name == "pi" {
                    Ok(leaf(Node::Num(std::f64::consts::PI), span))
                } else {
                    perr(span, format!("unknown identifier `{name}`"))
                }
            }
            Tok::End => perr(span, "unexpected end of input"),
            Tok::Sym(c) => perr(span, format!("unexpected `{c}`")),
        }
    }

    fn call(&mut self, name: String, span: Span) -> std::result::Result<Spanned, ParseError> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while let Tok::Sym(',') = self.peek() {
            self.bump();
            args.push(self.expr()?);
        }
        let close = self.expect(')')?;
        let full = span.join(close);
        if name == "pow" {
            if args.len() != 2 {
                return perr(full, format!("`pow` takes 2 arguments, got {}", args.len()));
            }
            let exponent = args.pop().expect("two args");
            let base = args.pop().expect("two args");
            let mut p = make_pow(base, exponent);
            p.span = full;
            return Ok(p);
        }
        let Some(func) = Func::lookup(&name) else {
            return perr(span, format!("unknown function `{name}`"));
        };
        if args.len() != 1 {
            return perr(full, format!("`{name}` takes 1 argument, got {}", args.len()));
        }
        let arg = args.pop().expect("one arg");
        Ok(Spanned { node: Node::Call(func, Box::new(arg.node.clone())), span: full, children: vec![arg] })
    }
}

fn leaf(node: Node, span: Span) -> Spanned {
    Spanned { node, span, children: Vec::new() }
}

fn bin(op: BinOp, lhs: Spanned, rhs: Spanned) -> Spanned {
    let span = lhs.span.join(rhs.span);
    Spanned {
        node: Node::Bin(op, Box::new(lhs.node.clone()), Box::new(rhs.node.clone())),
        span,
        children: vec![lhs, rhs],
    }
}

fn integer_exponent(node: &Node) -> Option<i32> {
    let (v, sign) = match node {
        Node::Num(v) => (*v, 1),
        Node::Neg(inner) => match **inner {
            Node::Num(v) => (v, -1),
            _ => return None,
        },
        _ => return None,
    };
    (v.fract() == 0.0 && v.abs() <= 64.0).then(|| sign * v as i32)
}

fn make_pow(base: Spanned, exponent: Spanned) -> Spanned {
    let span = base.span.join(exponent.span);
    match integer_exponent(&exponent.node) {
        Some(n) => Spanned { node: Node::PowI(Box::new(base.node.clone()), n), span, children: vec![base] },
        None => Spanned {
            node: Node::Pow(Box::new(base.node.clone()), Box::new(exponent.node.clone())),
            span,
            children: vec![base, exponent],
        },
    }
}

/// Parse `text` over the coordinate names `coords`; `consts` supplies the
/// admissible constant names (values are supplied again at evaluation).
pub fn parse_expr(text: &str, coords: &[String], consts: &Consts) -> std::result::Result<ScalarExpr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, coords, consts };
    let root = p.expr()?;
    match p.peek() {
        Tok::End => Ok(ScalarExpr { root, coords: coords.to_vec() }),
        _ => perr(p.span(), "unexpected trailing input"),
    }
}

// ---------------------------------------------------------------- evaluation

/// Numbers the evaluator can run on.
pub trait Scalar: Copy {
    fn lift(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    /// True when every derivative vanishes.
    fn is_constant(&self) -> bool;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, o: Self) -> std::result::Result<Self, JetError>;
    fn powi(self, n: i32) -> std::result::Result<Self, JetError>;
    fn powf(self, p: f64) -> std::result::Result<Self, JetError>;
    fn exp(self) -> Self;
    fn ln(self) -> std::result::Result<Self, JetError>;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> std::result::Result<Self, JetError>;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, o: Self) -> std::result::Result<Self, JetError> {
        if o == 0.0 || !o.is_finite() {
            return Err(JetError::Singular { op: "division", value: o });
        }
        Ok(self / o)
    }
    fn powi(self, n: i32) -> std::result::Result<Self, JetError> {
        if n < 0 && self == 0.0 {
            return Err(JetError::Singular { op: "division", value: self });
        }
        Ok(self.powi(n))
    }
    fn powf(self, p: f64) -> std::result::Result<Self, JetError> {
        if !(self > 0.0) {
            return Err(JetError::Singular { op: "pow", value: self });
        }
        Ok(f64::powf(self, p))
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> std::result::Result<Self, JetError> {
        if !(self > 0.0) {
            return Err(JetError::Singular { op: "log", value: self });
        }
        Ok(f64::ln(self))
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> std::result::Result<Self, JetError> {
        if !(self > 0.0) {
            return Err(JetError::Singular { op: "sqrt", value: self });
        }
        Ok(f64::sqrt(self))
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(self.dim(), v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn is_constant(&self) -> bool {
        self.terms().skip(1).all(|(_, c)| c == 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, o: Self) -> std::result::Result<Self, JetError> {
        Jet::div(&self, &o)
    }
    fn powi(self, n: i32) -> std::result::Result<Self, JetError> {
        Jet::powi(&self, n)
    }
    fn powf(self, p: f64) -> std::result::Result<Self, JetError> {
        Jet::powf(&self, p)
    }
    fn exp(self) -> Self {
        Jet::exp(&self)
    }
    fn ln(self) -> std::result::Result<Self, JetError> {
        Jet::ln(&self)
    }
    fn sin(self) -> Self {
        Jet::sin(&self)
    }
    fn cos(self) -> Self {
        Jet::cos(&self)
    }
    fn sqrt(self) -> std::result::Result<Self, JetError> {
        Jet::sqrt(&self)
    }
}

struct Eval<'a, T> {
    point: &'a [T],
    template: T,
    consts: &'a Consts,
}

impl<T: Scalar> Eval<'_, T> {
    fn fail(&self, e: JetError, span: Span) -> Error {
        let point: Vec<f64> = self.point.iter().map(Scalar::value).collect();
        match e {
            JetError::Singular { op, value } => Error::Singular { op, value, point, span: Some(span) },
            other => Error::from_jet(other, &point),
        }
    }

    fn run(&self, s: &Spanned) -> Result<T> {
        let ch = |i: usize| self.run(&s.children[i]);
        let wrap = |r: std::result::Result<T, JetError>| r.map_err(|e| self.fail(e, s.span));
        Ok(match &s.node {
            Node::Num(v) => self.template.lift(*v),
            Node::Var(i) => self.point[*i],
            Node::Const(name) => match self.consts.get(name) {
                Some(v) => self.template.lift(*v),
                None => return Err(Error::UnboundConstant(name.clone())),
            },
            Node::Neg(_) => ch(0)?.neg(),
            Node::Bin(op, _, _) => {
                let (a, b) = (ch(0)?, ch(1)?);
                match op {
                    BinOp::Add => a.add(b),
                    BinOp::Sub => a.sub(b),
                    BinOp::Mul => a.mul(b),
                    BinOp::Div => wrap(a.div(b))?,
                }
            }
            Node::PowI(_, n) => wrap(ch(0)?.powi(*n))?,
            Node::Pow(_, exponent) => {
                let base = ch(0)?;
                match **exponent {
                    Node::Num(p) => wrap(base.powf(p))?,
                    _ => {
                        let e = ch(1)?;
                        if e.is_constant() {
                            return wrap(base.powf(e.value()));
                        }
                        let lnb = wrap(base.ln().map_err(|_| JetError::Singular { op: "pow", value: base.value() }))?;
                        e.mul(lnb).exp()
                    }
                }
            }
            Node::Call(f, _) => {
                let a = ch(0)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => wrap(a.ln())?,
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => wrap(a.sqrt())?,
                }
            }
        })
    }
}

impl ScalarExpr {
    pub fn parse(text: &str, coords: &[String], consts: &Consts) -> std::result::Result<Self, ParseError> {
        parse_expr(text, coords, consts)
    }

    /// A literal constant over `coords`.
    pub fn constant(value: f64, coords: &[String]) -> Self {
        ScalarExpr { root: leaf(Node::Num(value), Span { start: 0, end: 0 }), coords: coords.to_vec() }
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Whether the expression is the literal `0`.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self.root.node, Node::Num(v) if v == 0.0)
    }

    /// Names of the constants the expression refers to.
    pub fn constant_names(&self) -> Vec<String> {
        fn walk(s: &Spanned, out: &mut Vec<String>) {
            if let Node::Const(n) = &s.node {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            for c in &s.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.coords.len() {
            return Err(Error::Dimension(format!(
                "expression over {} coordinates evaluated at a {n}-dimensional point",
                self.coords.len()
            )));
        }
        Ok(())
    }

    /// Evaluate on jets; value and derivatives through the jets' order.
    pub fn eval_jet(&self, point: &[Jet], consts: &Consts) -> Result<Jet> {
        self.check_dim(point.len())?;
        let template = Jet::zero(point.first().map_or(0, Jet::dim));
        Eval { point, template, consts }.run(&self.root)
    }

    pub fn eval_f64(&self, point: &[f64], consts: &Consts) -> Result<f64> {
        self.check_dim(point.len())?;
        Eval { point, template: 0.0, consts }.run(&self.root)
    }

    /// Fold literal-only subtrees into numbers.
    pub fn fold(&self) -> ScalarExpr {
        ScalarExpr { root: fold_node(&self.root), coords: self.coords.clone() }
    }
}

fn has_free(s: &Spanned) -> bool {
    matches!(s.node, Node::Var(_) | Node::Const(_)) || s.children.iter().any(has_free)
}

fn fold_node(s: &Spanned) -> Spanned {
    if !has_free(s) && !s.children.is_empty() {
        let empty = Consts::new();
        let ev = Eval::<f64> { point: &[], template: 0.0, consts: &empty };
        if let Ok(v) = ev.run(s) {
            if v.is_finite() {
                return leaf(Node::Num(v), s.span);
            }
        }
    }
    let children: Vec<Spanned> = s.children.iter().map(fold_node).collect();
    let node = rebuild(&s.node, &children);
    Spanned { node, span: s.span, children }
}

fn rebuild(node: &Node, ch: &[Spanned]) -> Node {
    let b = |i: usize| Box::new(ch[i].node.clone());
    match node {
        Node::Neg(_) => Node::Neg(b(0)),
        Node::Bin(op, _, _) => Node::Bin(*op, b(0), b(1)),
        Node::PowI(_, n) => Node::PowI(b(0), *n),
        Node::Pow(_, _) => Node::Pow(b(0), b(1)),
        Node::Call(f, _) => Node::Call(*f, b(0)),
        leafnode => leafnode.clone(),
    }
}

// ---------------------------------------------------------------- printer

fn prec(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
        Node::Bin(_, _, _) => 2,
        Node::Neg(_) => 3,
        Node::PowI(_, _) | Node::Pow(_, _) => 4,
        Node::Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

struct Printer<'a> {
    coords: &'a [String],
}

impl Printer<'_> {
    fn child(&self, s: &Spanned, min: u8, out: &mut String) {
        if prec(&s.node) < min {
            out.push('(');
            self.write(s, out);
            out.push(')');
        } else {
            self.write(s, out);
        }
    }

    fn write(&self, s: &Spanned, out: &mut String) {
        match &s.node {
            Node::Num(v) => out.push_str(&format!("{v:?}")),
            Node::Var(i) => out.push_str(&self.coords[*i]),
            Node::Const(n) => out.push_str(n),
            Node::Neg(_) => {
                out.push('-');
                self.child(&s.children[0], 3, out);
            }
            Node::Bin(op, _, _) => {
                let p = prec(&s.node);
                self.child(&s.children[0], p, out);
                out.push_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                });
                self.child(&s.children[1], p + 1, out);
            }
            Node::PowI(_, n) => {
                self.child(&s.children[0], 5, out);
                out.push_str(&format!("^{n}"));
            }
            Node::Pow(_, _) => {
                self.child(&s.children[0], 5, out);
                out.push('^');
                self.child(&s.children[1], 3, out);
            }
            Node::Call(f, _) => {
                out.push_str(f.name());
                out.push('(');
                self.write(&s.children[0], out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        Printer { coords: &self.coords }.write(&self.root, &mut out);
        f.write_str(&out)
    }
}

// ---------------------------------------------------------------- finite differences

/// Default finite-difference step for a derivative of the given total order.
pub fn fd_default_step(order: usize) -> f64 {
    if order >= 3 {
        1e-2
    } else {
        1e-3
    }
}

fn stencil(order: u8) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        _ => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    }
}

fn fd_once(e: &ScalarExpr, p: &[f64], exps: &[u8], h: f64, consts: &Consts) -> Result<f64> {
    let mut total = 0.0;
    let mut node = p.to_vec();
    let mut idx = vec![0usize; p.len()];
    let stencils: Vec<&[(i32, f64)]> = exps.iter().map(|&o| stencil(o)).collect();
    loop {
        let mut weight = 1.0;
        for v in 0..p.len() {
            let (off, w) = stencils[v][idx[v]];
            node[v] = p[v] + f64::from(off) * h;
            weight *= w;
        }
        total += weight * e.eval_f64(&node, consts)?;
        let mut v = 0;
        loop {
            if v == p.len() {
                let order: i32 = exps.iter().map(|&o| i32::from(o)).sum();
                return Ok(total / h.powi(order));
            }
            idx[v] += 1;
            if idx[v] < stencils[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// Central-difference estimate of `∂^α e` at `p`, with two Richardson levels
/// over the steps `h`, `h/2`, `h/4`.
pub fn fd_check(e: &ScalarExpr, p: &[f64], exps: &[u8], step: f64, consts: &Consts) -> Result<f64> {
    e.check_dim(p.len())?;
    if exps.len() != p.len() {
        return Err(Error::Dimension("multi-index length differs from point dimension".into()));
    }
    let order: usize = exps.iter().map(|&o| o as usize).sum();
    if order > 3 {
        return Err(Error::Pipeline(format!("finite-difference check supports order <= 3, got {order}")));
    }
    if order == 0 {
        return e.eval_f64(p, consts);
    }
    let d1 = fd_once(e, p, exps, step, consts)?;
    let d2 = fd_once(e, p, exps, step / 2.0, consts)?;
    let d4 = fd_once(e, p, exps, step / 4.0, consts)?;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::lift_all;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sum_of_squares() {
        let e = parse_expr("x^2 + y^2", &names(&["x", "y"]), &Consts::new()).unwrap();
        assert_eq!(e.eval_f64(&[3.0, 4.0], &Consts::new()).unwrap(), 25.0);
    }

    #[test]
    fn precedence() {
        let c = names(&["x"]);
        let k = Consts::new();
        let ev = |s: &str, x: f64| parse_expr(s, &c, &k).unwrap().eval_f64(&[x], &k).unwrap();
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(ev("8 / 2 / 2", 0.0), 2.0);
        assert_eq!(ev("2 * -x", 3.0), -6.0);
        assert_eq!(ev("(1 + x) * 2", 1.0), 4.0);
        assert_eq!(ev("pow(x, 0.5)", 4.0), 2.0);
        assert!((ev("cos(pi)", 0.0) + 1.0).abs() < 1e-15);
        assert!((ev("ln(exp(x))", 0.7) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn end_of_input_error() {
        let err = parse_expr("x + ", &names(&["x"]), &Consts::new()).unwrap_err();
        assert_eq!(err.span, Span { start: 4, end: 4 });
        assert!(err.message.contains("end of input"));
    }

    #[test]
    fn error_kinds_have_spans() {
        let c = names(&["x", "y"]);
        let k = Consts::new();
        let e = parse_expr("x + zeta", &c, &k).unwrap_err();
        assert_eq!((e.span.start, e.span.end), (4, 8));
        assert!(e.message.contains("unknown identifier"));
        let e = parse_expr("sin(x, y)", &c, &k).unwrap_err();
        assert!(e.message.contains("takes 1 argument"));
        let e = parse_expr("pow(x)", &c, &k).unwrap_err();
        assert!(e.message.contains("takes 2 arguments"));
        let e = parse_expr("1.2.3 * x", &c, &k).unwrap_err();
        assert!(e.message.contains("malformed number"));
        assert_eq!(e.span.start, 0);
        let e = parse_expr("2e+ * x", &c, &k).unwrap_err();
        assert!(e.message.contains("malformed number"));
        let e = parse_expr("foo(x)", &c, &k).unwrap_err();
        assert!(e.message.contains("unknown function"));
        let e = parse_expr("x y", &c, &k).unwrap_err();
        assert_eq!(e.span.start, 2);
        let e = parse_expr("sqrt + 1", &c, &k).unwrap_err();
        assert!(e.message.contains("argument list"));
    }

    #[test]
    fn loubeau_ou_profile_parses_with_constant() {
        let mut k = Consts::new();
        k.insert("c1".into(), 1.0);
        let f = parse_expr("-c1*(1+exp(c1*x))/(1-exp(c1*x))", &names(&["x"]), &k).unwrap();
        let x: f64 = 1.0;
        let direct = -(1.0 + x.exp()) / (1.0 - x.exp());
        assert!((f.eval_f64(&[x], &k).unwrap() - direct).abs() < 1e-15);
        assert_eq!(f.constant_names(), vec!["c1".to_string()]);
        // constants are bound late
        k.insert("c1".into(), 2.0);
        let direct2 = -2.0 * (1.0 + (2.0 * x).exp()) / (1.0 - (2.0 * x).exp());
        assert!((f.eval_f64(&[x], &k).unwrap() - direct2).abs() < 1e-14);
        assert!(matches!(f.eval_f64(&[x], &Consts::new()), Err(Error::UnboundConstant(_))));
    }

    #[test]
    fn constant_expression_has_zero_derivatives() {
        let e = parse_expr("3 * 2 + exp(1)", &names(&["x", "y"]), &Consts::new()).unwrap();
        let p = lift_all(&[0.3, 0.4]).unwrap();
        let j = e.eval_jet(&p, &Consts::new()).unwrap();
        assert!((j.value() - (6.0 + 1f64.exp())).abs() < 1e-15);
        assert!(j.terms().skip(1).all(|(_, c)| c == 0.0));
    }

    #[test]
    fn singular_evaluation_carries_point_and_span() {
        let c = names(&["x"]);
        let e = parse_expr("1 + 1/x", &c, &Consts::new()).unwrap();
        match e.eval_jet(&lift_all(&[0.0]).unwrap(), &Consts::new()) {
            Err(Error::Singular { op, point, span, .. }) => {
                assert_eq!(op, "division");
                assert_eq!(point, vec![0.0]);
                assert_eq!(span, Some(Span { start: 4, end: 7 }));
            }
            other => panic!("expected singular error, got {other:?}"),
        }
        let e = parse_expr("sqrt(x - 1)", &c, &Consts::new()).unwrap();
        assert!(matches!(e.eval_f64(&[0.5], &Consts::new()), Err(Error::Singular { op: "sqrt", .. })));
        let e = parse_expr("x^1.5", &c, &Consts::new()).unwrap();
        assert!(matches!(e.eval_jet(&lift_all(&[-1.0]).unwrap(), &Consts::new()), Err(Error::Singular { op: "pow", .. })));
    }

    #[test]
    fn printer_output_reparses() {
        let c = names(&["x", "y"]);
        let k = Consts::new();
        for src in ["-x^2", "(-x)^2", "x^-2", "x - (y - 1)", "x / (y * 2)", "-(x + y)", "2^x^y", "(2^x)^y", "pow(x, y)", "exp(-x) * sin(y)"]
        {
            let once = parse_expr(src, &c, &k).unwrap();
            let printed = once.to_string();
            let twice = parse_expr(&printed, &c, &k).unwrap();
            assert_eq!(printed, twice.to_string(), "source {src}");
            let p = [0.7, 1.3];
            assert_eq!(once.eval_f64(&p, &k).unwrap(), twice.eval_f64(&p, &k).unwrap(), "source {src}");
        }
    }

    #[test]
    fn folding_preserves_value() {
        let c = names(&["x"]);
        let e = parse_expr("x * (2 + 3) - exp(0) * sqrt(16)", &c, &Consts::new()).unwrap();
        let f = e.fold();
        assert_eq!(f.to_string(), "x * 5.0 - 4.0");
        assert_eq!(e.eval_f64(&[1.5], &Consts::new()).unwrap(), f.eval_f64(&[1.5], &Consts::new()).unwrap());
    }

    #[test]
    fn finite_difference_examples() {
        let c = names(&["x"]);
        let k = Consts::new();
        let sq = parse_expr("x^2", &c, &k).unwrap();
        assert!((fd_check(&sq, &[1.0], &[1], fd_default_step(1), &k).unwrap() - 2.0).abs() <= 1e-9);
        let ex = parse_expr("exp(x)", &c, &k).unwrap();
        assert!((fd_check(&ex, &[0.0], &[2], fd_default_step(2), &k).unwrap() - 1.0).abs() <= 1e-6);
        let s = parse_expr("sin(x)", &c, &k).unwrap();
        assert!((fd_check(&s, &[0.0], &[3], fd_default_step(3), &k).unwrap() + 1.0).abs() <= 1e-4);
    }

    #[test]
    fn finite_difference_reports_stencil_failure() {
        let c = names(&["x"]);
        let e = parse_expr("log(x)", &c, &Consts::new()).unwrap();
        assert!(matches!(fd_check(&e, &[1e-3], &[1], 1e-2, &Consts::new()), Err(Error::Singular { .. })));
    }
}
