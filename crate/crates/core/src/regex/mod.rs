//! Property-path regular expressions and their automata.
//!
//! Surface syntax:
//!
//! ```text
//! expr    := alt
//! alt     := seq ("|" seq)*
//! seq     := postfix ("/" postfix)*
//! postfix := primary ("*" | "+" | "?")*
//! primary := "(" expr ")" | "()" | "^"? label
//! label   := [A-Za-z_][A-Za-z0-9_]* | '"' chars '"'
//! ```
//!
//! `^label` traverses an edge backwards. `()` is the empty word.

mod nfa;

use std::fmt;

use thiserror::Error;

use crate::graph::Direction;

pub use nfa::{
    determinize, determinize_with_limit, glushkov, is_unambiguous, single_final, Ambiguity,
    AutomatonError, Nfa, StateId, Symbol, Transition, DEFAULT_STATE_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Regex {
    Epsilon,
    Atom { label: String, dir: Direction },
    Concat(Vec<Regex>),
    Alt(Vec<Regex>),
    Star(Box<Regex>),
    Plus(Box<Regex>),
    Optional(Box<Regex>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegexError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

impl Regex {
    pub fn atom(label: &str) -> Regex {
        Regex::Atom {
            label: label.to_owned(),
            dir: Direction::Forward,
        }
    }

    pub fn inverse(label: &str) -> Regex {
        Regex::Atom {
            label: label.to_owned(),
            dir: Direction::Inverse,
        }
    }

    /// Number of atom occurrences.
    pub fn atom_count(&self) -> usize {
        match self {
            Regex::Epsilon => 0,
            Regex::Atom { .. } => 1,
            Regex::Concat(v) | Regex::Alt(v) => v.iter().map(Regex::atom_count).sum(),
            Regex::Star(r) | Regex::Plus(r) | Regex::Optional(r) => r.atom_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Regex::Epsilon | Regex::Atom { .. } => 0,
            Regex::Concat(v) | Regex::Alt(v) => 1 + v.iter().map(Regex::depth).max().unwrap_or(0),
            Regex::Star(r) | Regex::Plus(r) | Regex::Optional(r) => 1 + r.depth(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Alt(v) if v.len() > 1 => 0,
            Regex::Concat(v) if v.len() > 1 => 1,
            _ => 2,
        }
    }
}

/// Parses `text` into a [`Regex`].
pub fn parse_regex(text: &str) -> Result<Regex, RegexError> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.pos == p.bytes.len() {
        return Err(RegexError::Empty);
    }
    let r = p.alt()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected character"));
    }
    Ok(r)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> RegexError {
        let found = match self.src[self.pos..].chars().next() {
            Some(c) => format!("{message} (found {c:?})"),
            None => format!("{message} (found end of input)"),
        };
        RegexError::Syntax {
            offset: self.pos,
            message: found,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn alt(&mut self) -> Result<Regex, RegexError> {
        let mut branches = vec![self.seq()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            branches.push(self.seq()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Regex::Alt(branches)
        })
    }

    fn seq(&mut self) -> Result<Regex, RegexError> {
        let mut parts = vec![self.postfix()?];
        while self.peek() == Some(b'/') {
            self.pos += 1;
            parts.push(self.postfix()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Regex::Concat(parts)
        })
    }

    fn postfix(&mut self) -> Result<Regex, RegexError> {
        let mut r = self.primary()?;
        loop {
            r = match self.peek() {
                Some(b'*') => Regex::Star(Box::new(r)),
                Some(b'+') => Regex::Plus(Box::new(r)),
                Some(b'?') => Regex::Optional(Box::new(r)),
                _ => return Ok(r),
            };
            self.pos += 1;
        }
    }

    fn primary(&mut self) -> Result<Regex, RegexError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    return Ok(Regex::Epsilon);
                }
                let r = self.alt()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(r)
            }
            Some(b'^') => {
                self.pos += 1;
                let label = self.label()?;
                Ok(Regex::Atom {
                    label,
                    dir: Direction::Inverse,
                })
            }
            _ => {
                let label = self.label()?;
                Ok(Regex::Atom {
                    label,
                    dir: Direction::Forward,
                })
            }
        }
    }

    fn label(&mut self) -> Result<String, RegexError> {
        match self.bytes.get(self.pos) {
            Some(b'"') => self.quoted(),
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => {
                let start = self.pos;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.pos += 1;
                }
                Ok(self.src[start..self.pos].to_owned())
            }
            _ => Err(self.error("expected a label")),
        }
    }

    fn quoted(&mut self) -> Result<String, RegexError> {
        let open = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    if out.is_empty() {
                        return Err(RegexError::Syntax {
                            offset: open,
                            message: "empty quoted label".into(),
                        });
                    }
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    _ => {
                        return Err(RegexError::Syntax {
                            offset: self.pos + i,
                            message: "invalid escape in quoted label".into(),
                        })
                    }
                },
                c => out.push(c),
            }
        }
        Err(RegexError::Syntax {
            offset: open,
            message: "unterminated quoted label".into(),
        })
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Regex, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regex::Epsilon => f.write_str("()"),
            Regex::Atom { label, dir } => {
                if *dir == Direction::Inverse {
                    f.write_str("^")?;
                }
                if is_identifier(label) {
                    f.write_str(label)
                } else {
                    f.write_str("\"")?;
                    for c in label.chars() {
                        if c == '"' || c == '\\' {
                            f.write_str("\\")?;
                        }
                        write!(f, "{c}")?;
                    }
                    f.write_str("\"")
                }
            }
            Regex::Concat(parts) | Regex::Alt(parts) if parts.is_empty() => f.write_str("()"),
            Regex::Concat(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("/")?;
                    }
                    write_child(f, p, 2)?;
                }
                Ok(())
            }
            Regex::Alt(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write_child(f, p, 1)?;
                }
                Ok(())
            }
            Regex::Star(r) => {
                write_child(f, r, 2)?;
                f.write_str("*")
            }
            Regex::Plus(r) => {
                write_child(f, r, 2)?;
                f.write_str("+")
            }
            Regex::Optional(r) => {
                write_child(f, r, 2)?;
                f.write_str("?")
            }
        }
    }
}
