//! Cost expressions: a small language over flow variables and state constants.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*        divisor must be constant
//! unary  := '-' unary | power
//! power  := atom ('^' UINT)?
//! atom   := NUMBER | 'y' '[' name ']' ('[' name ']')?
//!         | ('max' | 'min') '(' expr (',' expr)* ')'
//!         | name | '(' expr ')'
//! ```
//!
//! `y[a]` refers to action `a` of the population that owns the cost,
//! `y[k][a]` to action `a` of population `k`. A bare `name` refers to a
//! state-indexed constant declared by the game.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::game_model::Population;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq)]
pub enum CostExpr {
    Const(Rational),
    Flow { pop: usize, action: usize },
    StateConst(usize),
    Add(Box<CostExpr>, Box<CostExpr>),
    Sub(Box<CostExpr>, Box<CostExpr>),
    Mul(Box<CostExpr>, Box<CostExpr>),
    Neg(Box<CostExpr>),
    Max(Vec<CostExpr>),
    Min(Vec<CostExpr>),
    Pow(Box<CostExpr>, u32),
}

/// Widens a rational to arbitrary precision.
pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Converts an exact rational to the nearest double.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

impl CostExpr {
    pub fn int(v: i64) -> Self {
        CostExpr::Const(Rational::from_integer(v))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        CostExpr::Const(Rational::new(n, d))
    }

    pub fn flow(pop: usize, action: usize) -> Self {
        CostExpr::Flow { pop, action }
    }

    pub fn add(self, rhs: CostExpr) -> Self {
        CostExpr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: CostExpr) -> Self {
        CostExpr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: CostExpr) -> Self {
        CostExpr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn pow(self, exp: u32) -> Self {
        CostExpr::Pow(Box::new(self), exp)
    }

    /// Evaluates the expression. `flow(pop, action)` supplies flow values and
    /// `state_consts` the values of the state constants in the current state.
    pub fn eval_with<F>(&self, flow: &F, state_consts: &[f64]) -> f64
    where
        F: Fn(usize, usize) -> f64,
    {
        match self {
            CostExpr::Const(r) => rational_to_f64(r),
            CostExpr::Flow { pop, action } => flow(*pop, *action),
            CostExpr::StateConst(i) => state_consts.get(*i).copied().unwrap_or(f64::NAN),
            CostExpr::Add(a, b) => a.eval_with(flow, state_consts) + b.eval_with(flow, state_consts),
            CostExpr::Sub(a, b) => a.eval_with(flow, state_consts) - b.eval_with(flow, state_consts),
            CostExpr::Mul(a, b) => a.eval_with(flow, state_consts) * b.eval_with(flow, state_consts),
            CostExpr::Neg(a) => -a.eval_with(flow, state_consts),
            CostExpr::Max(xs) => xs
                .iter()
                .map(|x| x.eval_with(flow, state_consts))
                .fold(f64::NEG_INFINITY, f64::max),
            CostExpr::Min(xs) => xs
                .iter()
                .map(|x| x.eval_with(flow, state_consts))
                .fold(f64::INFINITY, f64::min),
            CostExpr::Pow(a, e) => a.eval_with(flow, state_consts).powi(*e as i32),
        }
    }

    /// Exact evaluation over big rationals; used where flows are themselves
    /// rational (finite-player counts) and ties must be resolved exactly.
    pub fn eval_exact<F>(&self, flow: &F, state_consts: &[BigRational]) -> BigRational
    where
        F: Fn(usize, usize) -> BigRational,
    {
        match self {
            CostExpr::Const(r) => to_big(r),
            CostExpr::Flow { pop, action } => flow(*pop, *action),
            CostExpr::StateConst(i) => state_consts[*i].clone(),
            CostExpr::Add(a, b) => a.eval_exact(flow, state_consts) + b.eval_exact(flow, state_consts),
            CostExpr::Sub(a, b) => a.eval_exact(flow, state_consts) - b.eval_exact(flow, state_consts),
            CostExpr::Mul(a, b) => a.eval_exact(flow, state_consts) * b.eval_exact(flow, state_consts),
            CostExpr::Neg(a) => -a.eval_exact(flow, state_consts),
            CostExpr::Max(xs) => xs.iter().map(|x| x.eval_exact(flow, state_consts)).max().expect("max of no terms"),
            CostExpr::Min(xs) => xs.iter().map(|x| x.eval_exact(flow, state_consts)).min().expect("min of no terms"),
            CostExpr::Pow(a, e) => num_traits::pow(a.eval_exact(flow, state_consts), *e as usize),
        }
    }

    /// Calls `f` on every flow variable referenced by the expression.
    pub fn visit_flows(&self, f: &mut dyn FnMut(usize, usize)) {
        match self {
            CostExpr::Flow { pop, action } => f(*pop, *action),
            CostExpr::Const(_) | CostExpr::StateConst(_) => {}
            CostExpr::Add(a, b) | CostExpr::Sub(a, b) | CostExpr::Mul(a, b) => {
                a.visit_flows(f);
                b.visit_flows(f);
            }
            CostExpr::Neg(a) | CostExpr::Pow(a, _) => a.visit_flows(f),
            CostExpr::Max(xs) | CostExpr::Min(xs) => xs.iter().for_each(|x| x.visit_flows(f)),
        }
    }

    pub fn visit_state_consts(&self, f: &mut dyn FnMut(usize)) {
        match self {
            CostExpr::StateConst(i) => f(*i),
            CostExpr::Const(_) | CostExpr::Flow { .. } => {}
            CostExpr::Add(a, b) | CostExpr::Sub(a, b) | CostExpr::Mul(a, b) => {
                a.visit_state_consts(f);
                b.visit_state_consts(f);
            }
            CostExpr::Neg(a) | CostExpr::Pow(a, _) => a.visit_state_consts(f),
            CostExpr::Max(xs) | CostExpr::Min(xs) => {
                xs.iter().for_each(|x| x.visit_state_consts(f))
            }
        }
    }

    /// Constant value if the expression has no variables.
    fn constant_value(&self) -> Option<Rational> {
        match self {
            CostExpr::Const(r) => Some(*r),
            CostExpr::Neg(a) => a.constant_value().map(|v| -v),
            CostExpr::Add(a, b) => Some(a.constant_value()? + b.constant_value()?),
            CostExpr::Sub(a, b) => Some(a.constant_value()? - b.constant_value()?),
            CostExpr::Mul(a, b) => Some(a.constant_value()? * b.constant_value()?),
            _ => None,
        }
    }

    /// Renders the expression in the mini-language.
    pub fn display<'a>(&'a self, names: &'a ExprNames<'a>) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

/// Name tables used for parsing and rendering expressions.
#[derive(Debug, Clone, Copy)]
pub struct ExprNames<'a> {
    /// Population names with their action names.
    pub populations: &'a [Population],
    /// Names of the state constants.
    pub state_consts: &'a [String],
    /// Population that `y[a]` refers to; `None` forces the qualified form.
    pub owner: Option<usize>,
}

pub struct ExprDisplay<'a> {
    expr: &'a CostExpr,
    names: &'a ExprNames<'a>,
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.names, 0)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &CostExpr, n: &ExprNames<'_>, prec: u8) -> fmt::Result {
    // precedence: 1 = sum, 2 = product, 3 = unary, 4 = power/atom
    let own = match e {
        CostExpr::Add(..) | CostExpr::Sub(..) => 1,
        CostExpr::Mul(..) => 2,
        CostExpr::Neg(_) => 3,
        CostExpr::Const(r) if *r < Rational::zero() || !r.is_integer() => 2,
        _ => 4,
    };
    let paren = own < prec;
    if paren {
        write!(f, "(")?;
    }
    match e {
        CostExpr::Const(r) => {
            if r.is_integer() {
                write!(f, "{}", r.numer())?
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())?
            }
        }
        CostExpr::Flow { pop, action } => {
            let (pname, actions) = n
                .populations
                .get(*pop)
                .map(|p| (p.name.as_str(), p.actions.as_slice()))
                .unwrap_or(("?", &[]));
            let aname = actions.get(*action).map(String::as_str).unwrap_or("?");
            if n.owner == Some(*pop) {
                write!(f, "y[{aname}]")?
            } else {
                write!(f, "y[{pname}][{aname}]")?
            }
        }
        CostExpr::StateConst(i) => {
            write!(f, "{}", n.state_consts.get(*i).map(String::as_str).unwrap_or("?"))?
        }
        CostExpr::Add(a, b) => {
            write_expr(f, a, n, 1)?;
            write!(f, " + ")?;
            write_expr(f, b, n, 2)?;
        }
        CostExpr::Sub(a, b) => {
            write_expr(f, a, n, 1)?;
            write!(f, " - ")?;
            write_expr(f, b, n, 2)?;
        }
        CostExpr::Mul(a, b) => {
            write_expr(f, a, n, 2)?;
            write!(f, "*")?;
            write_expr(f, b, n, 3)?;
        }
        CostExpr::Neg(a) => {
            write!(f, "-")?;
            write_expr(f, a, n, 3)?;
        }
        CostExpr::Max(xs) | CostExpr::Min(xs) => {
            write!(f, "{}(", if matches!(e, CostExpr::Max(_)) { "max" } else { "min" })?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_expr(f, x, n, 0)?;
            }
            write!(f, ")")?;
        }
        CostExpr::Pow(a, k) => {
            write_expr(f, a, n, 5)?;
            write!(f, "^{k}")?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Sym(char),
}

struct Lexer<'s> {
    src: &'s str,
    toks: Vec<(Tok, usize)>,
}

impl<'s> Lexer<'s> {
    fn run(src: &'s str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let text = &lx.src[start..i];
                let value = parse_decimal(text).ok_or_else(|| Error::Parse {
                    line: 1,
                    column: start + 1,
                    message: format!("invalid number `{text}`"),
                })?;
                lx.toks.push((Tok::Num(value), start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(lx.src[start..i].to_string()), start));
            } else if "+-*/^(),[]".contains(c) {
                lx.toks.push((Tok::Sym(c), i));
                i += 1;
            } else {
                return Err(Error::Parse {
                    line: 1,
                    column: i + 1,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
        Ok(lx.toks)
    }
}

/// Parses a decimal or integer literal into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = digits.parse().ok()?;
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    Some(Rational::new(numer, denom))
}

/// Parses a rational string such as `"1/3"`, `"-2"`, or `"0.25"`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    let value = match body.split_once('/') {
        Some((n, d)) => {
            let n = parse_decimal(n.trim())?;
            let d = parse_decimal(d.trim())?;
            if d.is_zero() {
                return None;
            }
            n / d
        }
        None => parse_decimal(body)?,
    };
    Some(if neg { -value } else { value })
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a ExprNames<'a>,
    len: usize,
}

/// Parses `src` into a cost expression, resolving names against `names`.
///
/// Syntax errors are `Error::Parse` with a 1-based column; references to
/// undeclared populations, actions or state constants are `Error::Spec`.
pub fn parse_expr(src: &str, names: &ExprNames<'_>) -> Result<CostExpr> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { toks, pos: 0, names, len: src.len() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(e)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn err_here(&self, msg: &str) -> Error {
        let column = self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.len) + 1;
        Error::Parse { line: 1, column, message: msg.to_string() }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.err_here(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err_here("expected a name")),
        }
    }

    fn expr(&mut self) -> Result<CostExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                lhs = lhs.add(self.term()?);
            } else if self.eat_sym('-') {
                lhs = lhs.sub(self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<CostExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym('*') {
                lhs = lhs.mul(self.unary()?);
            } else if self.eat_sym('/') {
                let at = self.pos;
                let rhs = self.unary()?;
                match rhs.constant_value() {
                    Some(d) if !d.is_zero() => {
                        lhs = match lhs.constant_value() {
                            Some(n) => CostExpr::Const(n / d),
                            None => lhs.mul(CostExpr::Const(d.recip())),
                        }
                    }
                    _ => {
                        self.pos = at;
                        return Err(self.err_here("divisor must be a nonzero constant"));
                    }
                }
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<CostExpr> {
        if self.eat_sym('-') {
            let inner = self.unary()?;
            return Ok(match inner {
                CostExpr::Const(r) => CostExpr::Const(-r),
                other => CostExpr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<CostExpr> {
        let base = self.atom()?;
        if self.eat_sym('^') {
            match self.peek() {
                Some(Tok::Num(r)) if r.is_integer() && *r.numer() >= 0 && *r.numer() <= 64 => {
                    let e = *r.numer() as u32;
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                _ => Err(self.err_here("exponent must be an integer in 0..=64")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<CostExpr> {
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(CostExpr::Const(r))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "y" => self.flow_var(),
                    "max" | "min" => {
                        self.expect_sym('(')?;
                        let mut args = vec![self.expr()?];
                        while self.eat_sym(',') {
                            args.push(self.expr()?);
                        }
                        self.expect_sym(')')?;
                        Ok(if name == "max" { CostExpr::Max(args) } else { CostExpr::Min(args) })
                    }
                    _ => match self.names.state_consts.iter().position(|s| *s == name) {
                        Some(i) => Ok(CostExpr::StateConst(i)),
                        None => Err(Error::Spec(format!("unbound state constant `{name}`"))),
                    },
                }
            }
            _ => Err(self.err_here("expected a number, variable, or `(`")),
        }
    }

    fn flow_var(&mut self) -> Result<CostExpr> {
        self.expect_sym('[')?;
        let first = self.ident()?;
        self.expect_sym(']')?;
        let (pop_name, action_name) = if self.eat_sym('[') {
            let second = self.ident()?;
            self.expect_sym(']')?;
            (Some(first), second)
        } else {
            (None, first)
        };
        let pop = match &pop_name {
            Some(p) => self.names.populations.iter().position(|q| q.name == *p),
            None => self.names.owner,
        };
        let unbound = || {
            let shown = match &pop_name {
                Some(p) => format!("y[{p}][{action_name}]"),
                None => format!("y[{action_name}]"),
            };
            Error::Spec(format!("unbound flow variable `{shown}`"))
        };
        let pop = pop.ok_or_else(unbound)?;
        let action = self.names.populations[pop]
            .actions
            .iter()
            .position(|a| *a == action_name)
            .ok_or_else(unbound)?;
        Ok(CostExpr::Flow { pop, action })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> (Vec<Population>, Vec<String>) {
        (vec![Population::new("main", &["a", "b"])], vec!["theta".into()])
    }

    fn eval(src: &str, ya: f64, yb: f64, theta: f64) -> f64 {
        let (pops, consts) = names();
        let n = ExprNames { populations: &pops, state_consts: &consts, owner: Some(0) };
        let e = parse_expr(src, &n).unwrap();
        e.eval_with(&|_, a| if a == 0 { ya } else { yb }, &[theta])
    }

    #[test]
    fn el_farol_bar_cost() {
        let src = "max(2 - 4*y[b], 4*y[b] - 2)";
        assert_eq!(eval(src, 0.5, 0.5, 0.0), 0.0);
        assert_eq!(eval(src, 1.0, 0.0, 0.0), 2.0);
        assert_eq!(eval(src, 0.25, 0.75, 0.0), 1.0);
    }

    #[test]
    fn state_constant_and_precedence() {
        assert_eq!(eval("3 - 3*theta", 0.3, 0.7, 1.0), 0.0);
        assert_eq!(eval("3 - 3*theta", 0.3, 0.7, 0.0), 3.0);
        assert_eq!(eval("2*y[a]^2 + 1", 0.5, 0.5, 0.0), 1.5);
        assert_eq!(eval("-y[a]^2", 0.5, 0.5, 0.0), -0.25);
        assert_eq!(eval("y[a]/4 + 1/2", 1.0, 0.0, 0.0), 0.75);
        assert_eq!(eval("min(y[a], y[b], 0.1)", 0.5, 0.5, 0.0), 0.1);
    }

    #[test]
    fn qualified_variables() {
        let (pops, consts) = names();
        let n = ExprNames { populations: &pops, state_consts: &consts, owner: None };
        let e = parse_expr("y[main][b]", &n).unwrap();
        assert_eq!(e, CostExpr::flow(0, 1));
        assert!(matches!(parse_expr("y[b]", &n), Err(Error::Spec(_))));
    }

    #[test]
    fn unbound_names_are_spec_errors() {
        let (pops, consts) = names();
        let n = ExprNames { populations: &pops, state_consts: &consts, owner: Some(0) };
        let err = parse_expr("y[c] + 1", &n).unwrap_err();
        assert!(err.to_string().contains("unbound flow variable"), "{err}");
        assert!(matches!(parse_expr("phi", &n), Err(Error::Spec(_))));
    }

    #[test]
    fn syntax_errors_report_column() {
        let (pops, consts) = names();
        let n = ExprNames { populations: &pops, state_consts: &consts, owner: Some(0) };
        match parse_expr("1 + * 2", &n) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("y[a] / y[b]", &n), Err(Error::Parse { .. })));
        assert!(matches!(parse_expr("(1 + 2", &n), Err(Error::Parse { .. })));
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("1/3"), Some(Rational::new(1, 3)));
        assert_eq!(parse_rational("-0.25"), Some(Rational::new(-1, 4)));
        assert_eq!(parse_rational("2"), Some(Rational::from_integer(2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn display_round_trips() {
        let (pops, consts) = names();
        let n = ExprNames { populations: &pops, state_consts: &consts, owner: Some(0) };
        for src in [
            "max(2 - 4*y[b], 4*y[b] - 2)",
            "3 - 3*theta",
            "1/2*y[a]^3 - (y[b] - 1)",
            "-(y[a] + 1)*2",
        ] {
            let e = parse_expr(src, &n).unwrap();
            let shown = e.display(&n).to_string();
            let again = parse_expr(&shown, &n).unwrap();
            for &(ya, th) in &[(0.1, 0.0), (0.7, 1.0), (0.45, 0.3)] {
                let f = |_: usize, a: usize| if a == 0 { ya } else { 1.0 - ya };
                assert!((e.eval_with(&f, &[th]) - again.eval_with(&f, &[th])).abs() < 1e-15, "{shown}");
            }
        }
    }
}
