//! Symbolic words over the generators of a multi-EGS group.
//!
//! Grammar: whitespace separated tokens `a`, `d<j>.<m>` and `c<i>`, each
//! optionally followed by `^<int>` (negative exponents allowed). `j` and `m`
//! are 1-based; `c<i>` is the GGS conjugate `c^(a^i)` with `0 <= i < p`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    /// The rooted automorphism `a`.
    A,
    /// Directed automorphism along `P_j` with the `m`-th listed vector of
    /// `E^(j)`, both 1-based.
    D { j: usize, m: usize },
    /// `c_i = a^-i c a^i` for a GGS spec.
    C(usize),
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::A => write!(f, "a"),
            Generator::D { j, m } => write!(f, "d{j}.{m}"),
            Generator::C(i) => write!(f, "c{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub generator: Generator,
    pub exponent: i64,
}

impl Token {
    pub fn new(generator: Generator, exponent: i64) -> Self {
        Token {
            generator,
            exponent,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 1 {
            write!(f, "{}", self.generator)
        } else {
            write!(f, "{}^{}", self.generator, self.exponent)
        }
    }
}

/// A product of generator powers, read left to right.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Word {
    tokens: Vec<Token>,
}

impl Word {
    pub fn empty() -> Self {
        Word { tokens: Vec::new() }
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        Word { tokens }
    }

    pub fn single(generator: Generator, exponent: i64) -> Self {
        Word {
            tokens: vec![Token::new(generator, exponent)],
        }
    }

    pub fn parse(text: &str) -> Result<Word> {
        let tokens = text
            .split_whitespace()
            .map(parse_token)
            .collect::<Result<_>>()?;
        Ok(Word { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Append a token, skipping zero exponents.
    pub fn push(&mut self, generator: Generator, exponent: i64) {
        if exponent != 0 {
            self.tokens.push(Token::new(generator, exponent));
        }
    }

    pub fn extend(&mut self, other: &Word) {
        self.tokens.extend_from_slice(&other.tokens);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        w.extend(other);
        w
    }

    /// Whether every token is a `c<i>`.
    pub fn is_c_word(&self) -> bool {
        self.tokens
            .iter()
            .all(|t| matches!(t.generator, Generator::C(_)))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        Word::parse(s)
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Word {
    type Error = Error;

    fn try_from(s: String) -> Result<Word> {
        Word::parse(&s)
    }
}

fn parse_token(tok: &str) -> Result<Token> {
    let err = |reason: &str| Error::WordParse {
        token: tok.to_string(),
        reason: reason.to_string(),
    };
    let (head, exponent) = match tok.split_once('^') {
        Some((head, exp)) => {
            let e = exp.parse::<i64>().map_err(|_| err("bad exponent"))?;
            (head, e)
        }
        None => (tok, 1),
    };
    let index = |digits: &str| -> Result<usize> {
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("expected a decimal index"));
        }
        digits.parse().map_err(|_| err("index too large"))
    };
    let generator = if head == "a" {
        Generator::A
    } else if let Some(rest) = head.strip_prefix('c') {
        Generator::C(index(rest)?)
    } else if let Some(rest) = head.strip_prefix('d') {
        let (j, m) = rest
            .split_once('.')
            .ok_or_else(|| err("expected d<j>.<m>"))?;
        let (j, m) = (index(j)?, index(m)?);
        if j == 0 || m == 0 {
            return Err(err("d indices are 1-based"));
        }
        Generator::D { j, m }
    } else {
        return Err(err("unknown generator"));
    };
    Ok(Token::new(generator, exponent))
}
