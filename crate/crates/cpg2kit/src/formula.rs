//! First-order formulas over the graph vocabulary, with modulo-counting
//! quantifiers and reachability atoms, in an s-expression syntax.
//!
//! Grammar: `true | false | (= x y) | (edge LABEL x y) | (reach x y) |
//! (reachL NAME x y) | (not φ) | (and φ φ) | (or φ φ) | (exists x φ) |
//! (forall x φ) | (modcount K M x φ)`, plus the jump atom `(jump x y)`
//! of nested pushdown trees.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub enum Formula {
    True,
    False,
    Eq(String, String),
    Edge(String, String, String),
    Reach(String, String),
    ReachL(String, String, String),
    /// The jump relation of nested pushdown trees.
    Jump(String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    /// `∃^{(k,m)} x φ`: the number of witnesses is ≡ k (mod m).
    ModCount(u32, u32, String, Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {at}: {msg}")]
pub struct ParseError {
    pub at: usize,
    pub msg: String,
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        let mut p = Parser { text, pos: 0 };
        let f = p.formula()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.err("trailing input"));
        }
        f.check_scopes(&mut Vec::new())
            .map_err(|msg| ParseError { at: 0, msg })?;
        Ok(f)
    }

    fn check_scopes(&self, bound: &mut Vec<String>) -> Result<(), String> {
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Eq(x, y) | Formula::Reach(x, y) | Formula::Jump(x, y) => {
                for v in [x, y] {
                    if !bound.contains(v) {
                        return Err(format!("unbound variable {v}"));
                    }
                }
                Ok(())
            }
            Formula::Edge(_, x, y) | Formula::ReachL(_, x, y) => {
                for v in [x, y] {
                    if !bound.contains(v) {
                        return Err(format!("unbound variable {v}"));
                    }
                }
                Ok(())
            }
            Formula::Not(f) => f.check_scopes(bound),
            Formula::And(f, g) | Formula::Or(f, g) => {
                f.check_scopes(bound)?;
                g.check_scopes(bound)
            }
            Formula::Exists(x, f) | Formula::Forall(x, f) | Formula::ModCount(_, _, x, f) => {
                bound.push(x.clone());
                let r = f.check_scopes(bound);
                bound.pop();
                r
            }
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let mut add = |v: &String, bound: &Vec<String>, out: &mut Vec<String>| {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(x, y) | Formula::Reach(x, y) | Formula::Jump(x, y) => {
                add(x, bound, out);
                add(y, bound, out);
            }
            Formula::Edge(_, x, y) | Formula::ReachL(_, x, y) => {
                add(x, bound, out);
                add(y, bound, out);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(f, g) | Formula::Or(f, g) => {
                f.collect_free(bound, out);
                g.collect_free(bound, out);
            }
            Formula::Exists(x, f) | Formula::Forall(x, f) | Formula::ModCount(_, _, x, f) => {
                bound.push(x.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn has_reach(&self) -> bool {
        match self {
            Formula::Reach(_, _) | Formula::ReachL(_, _, _) => true,
            Formula::Not(f) => f.has_reach(),
            Formula::And(f, g) | Formula::Or(f, g) => f.has_reach() || g.has_reach(),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::ModCount(_, _, _, f) => {
                f.has_reach()
            }
            _ => false,
        }
    }

    /// Quantifier rank.
    pub fn rank(&self) -> usize {
        match self {
            Formula::Not(f) => f.rank(),
            Formula::And(f, g) | Formula::Or(f, g) => f.rank().max(g.rank()),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::ModCount(_, _, _, f) => {
                1 + f.rank()
            }
            _ => 0,
        }
    }

    /// Sound constant folding: atoms relating a variable to itself have
    /// fixed truth (equality holds, edges and jumps strictly extend), and
    /// boolean laws propagate constants upward.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Eq(x, y) if x == y => Formula::True,
            // Jumps and edges strictly extend runs, so they are irreflexive.
            Formula::Jump(x, y) if x == y => Formula::False,
            Formula::Edge(_, x, y) if x == y => self.clone(),
            Formula::Not(f) => match f.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                g => Formula::Not(Box::new(g)),
            },
            Formula::And(f, g) => match (f.simplify(), g.simplify()) {
                (Formula::False, _) | (_, Formula::False) => Formula::False,
                (Formula::True, g) => g,
                (f, Formula::True) => f,
                (f, g) => Formula::And(Box::new(f), Box::new(g)),
            },
            Formula::Or(f, g) => match (f.simplify(), g.simplify()) {
                (Formula::True, _) | (_, Formula::True) => Formula::True,
                (Formula::False, g) => g,
                (f, Formula::False) => f,
                (f, g) => Formula::Or(Box::new(f), Box::new(g)),
            },
            Formula::Exists(x, f) => match f.simplify() {
                Formula::False => Formula::False,
                g => Formula::Exists(x.clone(), Box::new(g)),
            },
            Formula::Forall(x, f) => match f.simplify() {
                Formula::True => Formula::True,
                g => Formula::Forall(x.clone(), Box::new(g)),
            },
            Formula::ModCount(k, m, x, f) => {
                Formula::ModCount(*k, *m, x.clone(), Box::new(f.simplify()))
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Eq(x, y) => write!(f, "(= {x} {y})"),
            Formula::Edge(l, x, y) => write!(f, "(edge {l} {x} {y})"),
            Formula::Reach(x, y) => write!(f, "(reach {x} {y})"),
            Formula::Jump(x, y) => write!(f, "(jump {x} {y})"),
            Formula::ReachL(n, x, y) => write!(f, "(reachL {n} {x} {y})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(g, h) => write!(f, "(and {g} {h})"),
            Formula::Or(g, h) => write!(f, "(or {g} {h})"),
            Formula::Exists(x, g) => write!(f, "(exists {x} {g})"),
            Formula::Forall(x, g) => write!(f, "(forall {x} {g})"),
            Formula::ModCount(k, m, x, g) => write!(f, "(modcount {k} {m} {x} {g})"),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError {
            at: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len()
            && self.text.as_bytes()[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
    }

    fn word(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() {
            let c = self.text.as_bytes()[self.pos];
            if c.is_ascii_whitespace() || c == b'(' || c == b')' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a token"));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos < self.text.len() && self.text.as_bytes()[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        if self.pos >= self.text.len() {
            return Err(self.err("unexpected end of input"));
        }
        if self.text.as_bytes()[self.pos] != b'(' {
            let w = self.word()?;
            return match w.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                other => Err(self.err(&format!("unknown formula {other}"))),
            };
        }
        self.expect(b'(')?;
        let head = self.word()?;
        let f = match head.as_str() {
            "=" => Formula::Eq(self.word()?, self.word()?),
            "edge" => Formula::Edge(self.word()?, self.word()?, self.word()?),
            "reach" => Formula::Reach(self.word()?, self.word()?),
            "jump" => Formula::Jump(self.word()?, self.word()?),
            "reachL" => Formula::ReachL(self.word()?, self.word()?, self.word()?),
            "not" => Formula::Not(Box::new(self.formula()?)),
            "and" => Formula::And(Box::new(self.formula()?), Box::new(self.formula()?)),
            "or" => Formula::Or(Box::new(self.formula()?), Box::new(self.formula()?)),
            "exists" => Formula::Exists(self.word()?, Box::new(self.formula()?)),
            "forall" => Formula::Forall(self.word()?, Box::new(self.formula()?)),
            "modcount" => {
                let k = self.number()?;
                let m = self.number()?;
                if m == 0 {
                    return Err(self.err("modulus must be positive"));
                }
                Formula::ModCount(k, m, self.word()?, Box::new(self.formula()?))
            }
            other => return Err(self.err(&format!("unknown connective {other}"))),
        };
        self.expect(b')')?;
        Ok(f)
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err("expected a number"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let f = Formula::parse("(exists x (exists y (edge Cl x y)))").unwrap();
        assert_eq!(
            f.to_string(),
            "(exists x (exists y (edge Cl x y)))"
        );
        assert_eq!(f.rank(), 2);
        assert!(!f.has_reach());
        let g = Formula::parse("(modcount 0 2 x true)").unwrap();
        assert_eq!(g, Formula::ModCount(0, 2, "x".into(), Box::new(Formula::True)));
    }

    #[test]
    fn unbalanced_parenthesis_is_an_error() {
        let e = Formula::parse("(exists x (edge Cl x x)").unwrap_err();
        assert!(e.msg.contains("')'"), "{e}");
        assert!(Formula::parse("(= x y)").is_err(), "unbound variables");
    }

    #[test]
    fn simplify_folds_reflexive_equality() {
        let f = Formula::parse("(forall x (= x x))").unwrap();
        assert_eq!(f.simplify(), Formula::True);
    }
}
