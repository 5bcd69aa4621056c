//! Regular expressions as a source of queries with known containment answers.
//!
//! [`regex_to_query`] compiles a regex into an object-ground query so that query
//! containment coincides with language containment, which [`regex_contains`] decides
//! independently.

mod ast;
mod compile;
mod nfa;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use ast::Regex;
pub use compile::{
    counter_bits, regex_to_query, succinct_regex_to_query, successor_predicate, symbol_predicate,
    word_to_dataset, BIT, ONE, OUTPUT, START, ZERO,
};
pub use nfa::{matches, regex_contains, regex_difference_witness, MAX_EXPANDED_POWER};

use crate::error::{Error, Result};

/// A non-empty set of lowercase ASCII letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet(BTreeSet<char>);

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let set: BTreeSet<char> = symbols.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Regex("the alphabet is empty".into()));
        }
        if let Some(c) = set.iter().find(|c| !c.is_ascii_lowercase()) {
            return Err(Error::Regex(format!("alphabet symbol `{c}` is not a lowercase letter")));
        }
        Ok(Alphabet(set))
    }

    /// The alphabet of symbols occurring in `r`, or `{a}` when there are none.
    pub fn of(r: &Regex) -> Self {
        let set = r.symbols();
        Alphabet(if set.is_empty() { BTreeSet::from(['a']) } else { set })
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    pub fn symbols(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Alphabet {
    type Err = Error;

    /// Comma-separated symbols, as in `a,b`.
    fn from_str(s: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut chars = part.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => symbols.push(c),
                _ => return Err(Error::Regex(format!("alphabet symbol `{part}` is not one character"))),
            }
        }
        Alphabet::new(symbols)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(char::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_parsing() {
        let a: Alphabet = "b, a".parse().unwrap();
        assert_eq!(a.to_string(), "a,b");
        assert!("".parse::<Alphabet>().is_err());
        assert!("ab".parse::<Alphabet>().is_err());
        assert!("A".parse::<Alphabet>().is_err());
        assert_eq!(Alphabet::of(&"()".parse().unwrap()).to_string(), "a");
    }
}
