//! Boolean queries over color columns.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or    := and ('|' and)*
//! and   := unary ('&' unary)*
//! unary := '!' unary | '(' or ')' | atom
//! atom  := 'c' DIGITS '=' QUOTED        e.g. c8='GO:0006810'
//! ```
//!
//! Quoted values use single quotes; a doubled quote `''` inside is a literal
//! quote.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryExpr {
    /// Rows whose clique row holds `value` in color column `column` (1-based).
    Atom { column: u32, value: String },
    And(Box<QueryExpr>, Box<QueryExpr>),
    Or(Box<QueryExpr>, Box<QueryExpr>),
    Not(Box<QueryExpr>),
}

impl QueryExpr {
    pub fn atom(column: u32, value: impl Into<String>) -> Self {
        QueryExpr::Atom {
            column,
            value: value.into(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        QueryExpr::Not(Box::new(self))
    }

    pub fn and(self, other: QueryExpr) -> Self {
        QueryExpr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: QueryExpr) -> Self {
        QueryExpr::Or(Box::new(self), Box::new(other))
    }

    /// Conjunction of all atoms; `None` for an empty list.
    pub fn all_of(atoms: impl IntoIterator<Item = QueryExpr>) -> Option<Self> {
        atoms.into_iter().reduce(QueryExpr::and)
    }

    /// Evaluates against a single row given a cell predicate.
    pub fn matches(&self, cell_is: &impl Fn(u32, &str) -> bool) -> bool {
        match self {
            QueryExpr::Atom { column, value } => cell_is(*column, value),
            QueryExpr::And(a, b) => a.matches(cell_is) && b.matches(cell_is),
            QueryExpr::Or(a, b) => a.matches(cell_is) || b.matches(cell_is),
            QueryExpr::Not(a) => !a.matches(cell_is),
        }
    }

    pub fn atoms(&self) -> Vec<(u32, &str)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(u32, &'a str)>) {
        match self {
            QueryExpr::Atom { column, value } => out.push((*column, value)),
            QueryExpr::And(a, b) | QueryExpr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            QueryExpr::Not(a) => a.collect_atoms(out),
        }
    }
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryExpr::Atom { column, value } => write!(f, "c{column}='{}'", value.replace('\'', "''")),
            // binary nodes print their own parentheses
            QueryExpr::Not(a) => write!(f, "!{a}"),
            QueryExpr::And(a, b) => write!(f, "({a} & {b})"),
            QueryExpr::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

impl FromStr for QueryExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let expr = p.or()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(expr)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::MalformedExpr(format!("{what} at byte {} of `{}`", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<QueryExpr> {
        let mut lhs = self.and()?;
        while self.eat('|') {
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<QueryExpr> {
        let mut lhs = self.unary()?;
        while self.eat('&') {
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<QueryExpr> {
        if self.eat('!') {
            return Ok(self.unary()?.not());
        }
        if self.eat('(') {
            let inner = self.or()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<QueryExpr> {
        if !self.eat('c') {
            return Err(self.error("expected an atom like c1='value'"));
        }
        let digits_start = self.pos;
        let digits = self.src[self.pos..].chars().take_while(char::is_ascii_digit).count();
        self.pos += digits;
        let column: u32 = self.src[digits_start..self.pos]
            .parse()
            .map_err(|_| self.error("expected a column number"))?;
        if column == 0 {
            return Err(self.error("columns are numbered from 1"));
        }
        if !self.eat('=') {
            return Err(self.error("expected `=`"));
        }
        if !self.eat('\'') {
            return Err(self.error("expected a quoted value"));
        }
        let mut value = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        loop {
            match chars.next() {
                None => return Err(self.error("unterminated quoted value")),
                Some((i, '\'')) => {
                    if self.src[self.pos + i + 1..].starts_with('\'') {
                        value.push('\'');
                        chars.next();
                    } else {
                        self.pos += i + 1;
                        break;
                    }
                }
                Some((_, c)) => value.push(c),
            }
        }
        Ok(QueryExpr::Atom { column, value })
    }
}
