//! Text syntax for clopen sets.
//!
//! ```text
//! expr    := diff  ( '|'  diff  )*
//! diff    := inter ( '\'  inter )*
//! inter   := unary ( '&'  unary )*
//! unary   := '~' unary | primary
//! primary := 'EMPTY' | 'FULL' | atom | '(' expr ')'
//! atom    := 'H' '(' coords ',' coords ')'
//! coords  := '{' [ nat ( ',' nat )* ] '}'
//! ```
//!
//! Whitespace is ignored between tokens. In `H(A, B)` the first list holds the
//! coordinates fixed to 0 and the second those fixed to 1; the lists must be
//! disjoint. All binary operators are left associative.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::cylinder::{Algebra, ClopenError, ClopenSet, Coord, Cylinder};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClopenExpr {
    Empty,
    Full,
    Atom(Cylinder),
    Complement(Box<ClopenExpr>),
    Intersect(Box<ClopenExpr>, Box<ClopenExpr>),
    Difference(Box<ClopenExpr>, Box<ClopenExpr>),
    Union(Box<ClopenExpr>, Box<ClopenExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum LangError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] ClopenError),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn location(&self, at: usize) -> (usize, usize) {
        let before = &self.src[..at];
        let line = before.matches('\n').count() + 1;
        let column = before
            .rfind('\n')
            .map_or(before.chars().count(), |nl| before[nl + 1..].chars().count())
            + 1;
        (line, column)
    }

    fn error_at(&self, at: usize, message: impl Into<String>) -> ParseError {
        let (line, column) = self.location(at);
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn describe_next(&mut self) -> String {
        match self.peek() {
            Some(c) => format!("{c:?}"),
            None => "end of input".to_string(),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.pos += want.len_utf8();
            Ok(())
        } else {
            let found = self.describe_next();
            Err(self.error_at(self.pos, format!("expected {want:?}, found {found}")))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(word)
            && !rest[word.len()..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<ClopenExpr, ParseError> {
        let e = self.union()?;
        if self.peek().is_some() {
            let found = self.describe_next();
            return Err(self.error_at(self.pos, format!("unexpected {found} after expression")));
        }
        Ok(e)
    }

    fn union(&mut self) -> Result<ClopenExpr, ParseError> {
        let mut lhs = self.difference()?;
        while self.eat('|') {
            let rhs = self.difference()?;
            lhs = ClopenExpr::Union(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn difference(&mut self) -> Result<ClopenExpr, ParseError> {
        let mut lhs = self.intersect()?;
        while self.eat('\\') {
            let rhs = self.intersect()?;
            lhs = ClopenExpr::Difference(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn intersect(&mut self) -> Result<ClopenExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat('&') {
            let rhs = self.unary()?;
            lhs = ClopenExpr::Intersect(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ClopenExpr, ParseError> {
        if self.eat('~') {
            return Ok(ClopenExpr::Complement(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ClopenExpr, ParseError> {
        if self.eat('(') {
            let e = self.union()?;
            self.expect(')')?;
            return Ok(e);
        }
        if self.keyword("EMPTY") {
            return Ok(ClopenExpr::Empty);
        }
        if self.keyword("FULL") {
            return Ok(ClopenExpr::Full);
        }
        let start = self.pos;
        if self.keyword("H") {
            self.expect('(')?;
            let zeros = self.coords()?;
            self.expect(',')?;
            let ones = self.coords()?;
            self.expect(')')?;
            return Cylinder::new(zeros, ones)
                .map(ClopenExpr::Atom)
                .map_err(|e| self.error_at(start, e.to_string()));
        }
        let found = self.describe_next();
        Err(self.error_at(
            self.pos,
            format!("expected EMPTY, FULL, H(...), '~' or '(', found {found}"),
        ))
    }

    fn coords(&mut self) -> Result<Vec<Coord>, ParseError> {
        self.expect('{')?;
        let mut out = Vec::new();
        if self.eat('}') {
            return Ok(out);
        }
        loop {
            out.push(self.natural()?);
            if self.eat('}') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn natural(&mut self) -> Result<Coord, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let digits = self.src[start..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        if digits == 0 {
            let found = self.describe_next();
            return Err(self.error_at(start, format!("expected coordinate, found {found}")));
        }
        self.pos += digits;
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.error_at(start, "coordinate out of range"))
    }
}

pub fn parse(text: &str) -> Result<ClopenExpr, ParseError> {
    Parser::new(text).parse_all()
}

impl ClopenExpr {
    pub fn eval(&self, alg: &Algebra) -> Result<ClopenSet, ClopenError> {
        Ok(match self {
            Self::Empty => ClopenSet::empty(),
            Self::Full => ClopenSet::full(),
            Self::Atom(c) => alg.from_cylinder(c)?,
            Self::Complement(e) => alg.complement(&e.eval(alg)?)?,
            Self::Intersect(a, b) => alg.intersect(&a.eval(alg)?, &b.eval(alg)?)?,
            Self::Difference(a, b) => alg.difference(&a.eval(alg)?, &b.eval(alg)?)?,
            Self::Union(a, b) => alg.union(&a.eval(alg)?, &b.eval(alg)?)?,
        })
    }
}

/// Parses and evaluates with the default support limit.
pub fn eval_str(text: &str) -> Result<ClopenSet, LangError> {
    Ok(parse(text)?.eval(&Algebra::default())?)
}

fn write_coords(out: &mut String, coords: impl Iterator<Item = Coord>) {
    out.push('{');
    for (i, c) in coords.enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{c}");
    }
    out.push('}');
}

fn write_atom(out: &mut String, c: &Cylinder) {
    out.push_str("H(");
    write_coords(out, c.zeros().iter().copied());
    out.push(',');
    write_coords(out, c.ones().iter().copied());
    out.push(')');
}

/// Canonical text: the disjoint full-support atoms in pattern order.
pub fn print(u: &ClopenSet) -> String {
    if u.is_empty() {
        return "EMPTY".to_string();
    }
    if u.is_full() {
        return "FULL".to_string();
    }
    let mut out = String::new();
    for (i, &p) in u.patterns().iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        write_atom(&mut out, &u.pattern_cylinder(p));
    }
    out
}

impl fmt::Display for ClopenExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => f.write_str("EMPTY"),
            Self::Full => f.write_str("FULL"),
            Self::Atom(c) => {
                let mut s = String::new();
                write_atom(&mut s, c);
                f.write_str(&s)
            }
            Self::Complement(e) => write!(f, "~({e})"),
            Self::Intersect(a, b) => write!(f, "({a} & {b})"),
            Self::Difference(a, b) => write!(f, "({a} \\ {b})"),
            Self::Union(a, b) => write!(f, "({a} | {b})"),
        }
    }
}
