//! Expression grammar for Hamiltonians and observables.
//!
//! ```text
//! expr   := '-'? term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' uint)?
//! atom   := rational | 'i' | symbol | '(' expr ')'
//! ```
//!
//! Rationals are `digits` or `digits/digits` with no inner whitespace.
//! Symbols are `q_k`, `p_k`, `lam_q_k`, `lam_p_k`, `c_q_k`, `c_p_k`,
//! `cbar_q_k`, `cbar_p_k`, `theta` and `thetabar`, with `k` in `1..=dof`.

use std::fmt;
use std::sync::Arc;

use kvn_core::superspace::{Field, Sse, Superspace};
use kvn_core::{Poly, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    Q,
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Phi(Coord, usize),
    Lambda(Coord, usize),
    Ghost(Coord, usize),
    Antighost(Coord, usize),
    Theta,
    ThetaBar,
}

impl Symbol {
    pub fn is_grassmann(self) -> bool {
        matches!(
            self,
            Symbol::Ghost(..) | Symbol::Antighost(..) | Symbol::Theta | Symbol::ThetaBar
        )
    }

    /// 0-based phase-space index (`2(k−1)` for `q_k`, `2(k−1)+1` for `p_k`).
    fn index(c: Coord, k: usize) -> usize {
        2 * (k - 1) + usize::from(c == Coord::P)
    }

    fn parse(name: &str, dof: usize) -> Option<Symbol> {
        match name {
            "theta" => return Some(Symbol::Theta),
            "thetabar" => return Some(Symbol::ThetaBar),
            _ => {}
        }
        let (prefix, rest) = match name.rsplit_once('_') {
            Some(x) => x,
            None => return None,
        };
        let k: usize = rest.parse().ok().filter(|k| (1..=dof).contains(k))?;
        if rest.starts_with('0') || rest.starts_with('+') {
            return None;
        }
        Some(match prefix {
            "q" => Symbol::Phi(Coord::Q, k),
            "p" => Symbol::Phi(Coord::P, k),
            "lam_q" => Symbol::Lambda(Coord::Q, k),
            "lam_p" => Symbol::Lambda(Coord::P, k),
            "c_q" => Symbol::Ghost(Coord::Q, k),
            "c_p" => Symbol::Ghost(Coord::P, k),
            "cbar_q" => Symbol::Antighost(Coord::Q, k),
            "cbar_p" => Symbol::Antighost(Coord::P, k),
            _ => return None,
        })
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |c: &Coord| if *c == Coord::Q { "q" } else { "p" };
        match self {
            Symbol::Phi(x, k) => write!(f, "{}_{k}", c(x)),
            Symbol::Lambda(x, k) => write!(f, "lam_{}_{k}", c(x)),
            Symbol::Ghost(x, k) => write!(f, "c_{}_{k}", c(x)),
            Symbol::Antighost(x, k) => write!(f, "cbar_{}_{k}", c(x)),
            Symbol::Theta => write!(f, "theta"),
            Symbol::ThetaBar => write!(f, "thetabar"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Rational(BigRational),
    I,
    Symbol(Symbol),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("Grassmann symbol `{0}` raised to a power above 1")]
    GrassmannPower(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) -> Option<char> {
        let c = self.src[self.pos..].chars().next()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s
    }

    /// Next token with its 1-based line and column.
    fn next(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok((Tok::End, line, col));
        };
        let tok = match c {
            '+' | '-' | '*' | '^' | '(' | ')' => {
                self.bump();
                match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                }
            }
            '0'..='9' => {
                let num = self.digits();
                let mut value = BigRational::from_integer(num.parse::<BigInt>().unwrap());
                if self.peek() == Some('/') {
                    self.bump();
                    let den = self.digits();
                    if den.is_empty() {
                        return Err(ParseError {
                            line: self.line,
                            column: self.col,
                            kind: ParseErrorKind::Syntax("expected a denominator after `/`".into()),
                        });
                    }
                    let den = den.parse::<BigInt>().unwrap();
                    if den.is_zero() {
                        return Err(ParseError {
                            line,
                            column: col,
                            kind: ParseErrorKind::Syntax("zero denominator".into()),
                        });
                    }
                    value /= BigRational::from_integer(den);
                }
                Tok::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(c) = self
                    .peek()
                    .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    s.push(c);
                    self.bump();
                }
                Tok::Ident(s)
            }
            other => {
                return Err(ParseError {
                    line,
                    column: col,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                })
            }
        };
        Ok((tok, line, col))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    line: usize,
    col: usize,
    dof: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (t, l, c) = self.lex.next()?;
        self.tok = t;
        self.line = l;
        self.col = c;
        Ok(())
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col,
            kind,
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            t => format!("`{}`", tok_text(t)),
        };
        self.error(ParseErrorKind::Syntax(format!(
            "expected {wanted}, found {found}"
        )))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = if self.tok == Tok::Minus {
            self.advance()?;
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.tok {
                Tok::Plus => {
                    self.advance()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.advance()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.tok == Tok::Star {
            self.advance()?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let (line, col) = (self.line, self.col);
        let base = self.atom()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.advance()?;
        let k = match &self.tok {
            Tok::Num(n) if n.is_integer() => n
                .to_integer()
                .try_into()
                .map_err(|_| self.error(ParseErrorKind::Syntax("exponent too large".into())))?,
            _ => return Err(self.unexpected("a nonnegative integer exponent")),
        };
        self.advance()?;
        if k > 1 {
            if let Some(s) = grassmann_symbol(&base) {
                return Err(ParseError {
                    line,
                    column: col,
                    kind: ParseErrorKind::GrassmannPower(s.to_string()),
                });
            }
        }
        Ok(Expr::Pow(Box::new(base), k))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let out = match &self.tok {
            Tok::Num(n) => Expr::Rational(n.clone()),
            Tok::Ident(s) if s == "i" => Expr::I,
            Tok::Ident(s) => match Symbol::parse(s, self.dof) {
                Some(sym) => Expr::Symbol(sym),
                None => return Err(self.error(ParseErrorKind::UnknownSymbol(s.clone()))),
            },
            Tok::LParen => {
                self.advance()?;
                let e = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                e
            }
            _ => return Err(self.unexpected("a number, `i`, a symbol or `(`")),
        };
        self.advance()?;
        Ok(out)
    }
}

fn tok_text(t: &Tok) -> &'static str {
    match t {
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Caret => "^",
        Tok::LParen => "(",
        Tok::RParen => ")",
        _ => "",
    }
}

fn grassmann_symbol(e: &Expr) -> Option<Symbol> {
    match e {
        Expr::Symbol(s) if s.is_grassmann() => Some(*s),
        Expr::Rational(_) | Expr::I | Expr::Symbol(_) => None,
        Expr::Neg(a) | Expr::Pow(a, _) => grassmann_symbol(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            grassmann_symbol(a).or_else(|| grassmann_symbol(b))
        }
    }
}

/// Parse `source` with symbols resolved against `dof` degrees of freedom.
pub fn parse(source: &str, dof: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        lex: Lexer {
            src: source,
            pos: 0,
            line: 1,
            col: 1,
        },
        tok: Tok::End,
        line: 1,
        col: 1,
        dof,
    };
    p.advance()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

impl Expr {
    fn is_atom(&self) -> bool {
        matches!(self, Expr::Rational(_) | Expr::I | Expr::Symbol(_))
    }

    fn is_sum(&self) -> bool {
        matches!(self, Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_))
    }

    /// Every symbol occurrence, left to right.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut Vec<Symbol>) {
        match self {
            Expr::Symbol(s) => out.push(*s),
            Expr::Rational(_) | Expr::I => {}
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_symbols(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    /// Evaluate as a polynomial in the phase-space coordinates.
    pub fn to_poly(&self, dof: usize) -> Result<Poly, String> {
        let n = 2 * dof;
        Ok(match self {
            Expr::Rational(r) => Poly::constant(n, Scalar::real(r.clone())),
            Expr::I => Poly::constant(n, Scalar::i()),
            Expr::Symbol(Symbol::Phi(c, k)) => Poly::var(n, Symbol::index(*c, *k)),
            Expr::Symbol(s) => {
                return Err(format!("`{s}` is not a phase-space coordinate"));
            }
            Expr::Neg(a) => a.to_poly(dof)?.scale(&Scalar::int(-1)),
            Expr::Add(a, b) => a.to_poly(dof)?.add(&b.to_poly(dof)?),
            Expr::Sub(a, b) => a.to_poly(dof)?.sub(&b.to_poly(dof)?),
            Expr::Mul(a, b) => a.to_poly(dof)?.mul(&b.to_poly(dof)?),
            Expr::Pow(a, k) => a.to_poly(dof)?.pow(*k),
        })
    }

    /// Evaluate as a superspace expression over `space`.
    pub fn to_superspace(&self, space: &Arc<Superspace>) -> Sse {
        match self {
            Expr::Rational(r) => Sse::constant(space, Scalar::real(r.clone())),
            Expr::I => Sse::constant(space, Scalar::i()),
            Expr::Symbol(s) => match *s {
                Symbol::Phi(c, k) => Sse::field(space, Field::Phi, Symbol::index(c, k), 0),
                Symbol::Lambda(c, k) => Sse::field(space, Field::Lambda, Symbol::index(c, k), 0),
                Symbol::Ghost(c, k) => Sse::ghost(space, Symbol::index(c, k)),
                Symbol::Antighost(c, k) => Sse::antighost(space, Symbol::index(c, k)),
                Symbol::Theta => Sse::theta(space),
                Symbol::ThetaBar => Sse::thetabar(space),
            },
            Expr::Neg(a) => a.to_superspace(space).neg(),
            Expr::Add(a, b) => a.to_superspace(space).add(&b.to_superspace(space)),
            Expr::Sub(a, b) => a.to_superspace(space).sub(&b.to_superspace(space)),
            Expr::Mul(a, b) => a.to_superspace(space).mul(&b.to_superspace(space)),
            Expr::Pow(a, k) => a.to_superspace(space).pow(*k),
        }
    }
}

/// Prints with just enough parentheses to re-parse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Expr::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Expr::I => write!(f, "i"),
            Expr::Symbol(s) => write!(f, "{s}"),
            Expr::Neg(a) => {
                if a.is_sum() {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) {
                    "+"
                } else {
                    "-"
                };
                write!(f, "{a} {op} ")?;
                if b.is_sum() {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Mul(a, b) => {
                if a.is_sum() {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "*")?;
                if b.is_sum() || matches!(**b, Expr::Mul(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Pow(a, k) => {
                if a.is_atom() {
                    write!(f, "{a}^{k}")
                } else {
                    write!(f, "({a})^{k}")
                }
            }
        }
    }
}
