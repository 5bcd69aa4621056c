use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Regular expressions with an optional succinct power operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Regex {
    Empty,
    Epsilon,
    Symbol(char),
    Union(Box<Regex>, Box<Regex>),
    Concat(Box<Regex>, Box<Regex>),
    Plus(Box<Regex>),
    /// `inner` repeated exactly `k ≥ 2` times.
    Power(Box<Regex>, u64),
}

impl Regex {
    pub fn symbol(c: char) -> Self {
        Regex::Symbol(c)
    }

    pub fn union(l: Regex, r: Regex) -> Self {
        Regex::Union(Box::new(l), Box::new(r))
    }

    pub fn concat(l: Regex, r: Regex) -> Self {
        Regex::Concat(Box::new(l), Box::new(r))
    }

    pub fn plus(inner: Regex) -> Self {
        Regex::Plus(Box::new(inner))
    }

    /// Kleene star, as `ε ∪ inner⁺`.
    pub fn star(inner: Regex) -> Self {
        Regex::union(Regex::Epsilon, Regex::plus(inner))
    }

    pub fn power(inner: Regex, k: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Regex(format!("power exponent must be at least 2, got {k}")));
        }
        Ok(Regex::Power(Box::new(inner), k))
    }

    /// Number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        match self {
            Regex::Empty | Regex::Epsilon | Regex::Symbol(_) => 1,
            Regex::Union(l, r) | Regex::Concat(l, r) => 1 + l.size() + r.size(),
            Regex::Plus(i) | Regex::Power(i, _) => 1 + i.size(),
        }
    }

    pub fn symbols(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<char>) {
        match self {
            Regex::Symbol(c) => {
                out.insert(*c);
            }
            Regex::Union(l, r) | Regex::Concat(l, r) => {
                l.collect_symbols(out);
                r.collect_symbols(out);
            }
            Regex::Plus(i) | Regex::Power(i, _) => i.collect_symbols(out),
            Regex::Empty | Regex::Epsilon => {}
        }
    }

    pub fn has_power(&self) -> bool {
        match self {
            Regex::Power(..) => true,
            Regex::Union(l, r) | Regex::Concat(l, r) => l.has_power() || r.has_power(),
            Regex::Plus(i) => i.has_power(),
            _ => false,
        }
    }

    /// Replaces every power by repeated concatenation. Fails when an exponent exceeds `max_k`.
    pub fn expand_powers(&self, max_k: u64) -> Result<Regex> {
        Ok(match self {
            Regex::Power(inner, k) => {
                if *k > max_k {
                    return Err(Error::GuardExceeded(format!(
                        "power exponent {k} exceeds the expansion limit {max_k}"
                    )));
                }
                let inner = inner.expand_powers(max_k)?;
                (1..*k).fold(inner.clone(), |acc, _| Regex::concat(acc, inner.clone()))
            }
            Regex::Union(l, r) => Regex::union(l.expand_powers(max_k)?, r.expand_powers(max_k)?),
            Regex::Concat(l, r) => Regex::concat(l.expand_powers(max_k)?, r.expand_powers(max_k)?),
            Regex::Plus(i) => Regex::plus(i.expand_powers(max_k)?),
            leaf => leaf.clone(),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Union(..) => 0,
            Regex::Concat(..) => 1,
            Regex::Plus(_) | Regex::Power(..) => 2,
            _ => 3,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Regex, min: u8) -> fmt::Result {
    if child.precedence() < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regex::Empty => f.write_str("{}"),
            Regex::Epsilon => f.write_str("()"),
            Regex::Symbol(c) => write!(f, "{c}"),
            Regex::Union(l, r) => {
                write_child(f, l, 0)?;
                f.write_str("|")?;
                write_child(f, r, 1)
            }
            Regex::Concat(l, r) => {
                write_child(f, l, 1)?;
                write_child(f, r, 2)
            }
            Regex::Plus(i) => {
                write_child(f, i, 3)?;
                f.write_str("+")
            }
            Regex::Power(i, k) => {
                write_child(f, i, 3)?;
                write!(f, "^{k}")
            }
        }
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl Parser<'_> {
    fn peek(&mut self) -> Option<(usize, char)> {
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else {
                break;
            }
        }
        self.chars.peek().copied()
    }

    fn error(&mut self, what: &str) -> Error {
        match self.peek() {
            Some((i, c)) => Error::Regex(format!("{what} at offset {i}, found `{c}`")),
            None => Error::Regex(format!("{what} at end of input")),
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some((_, c)) if c == want => {
                self.chars.next();
                Ok(())
            }
            _ => Err(self.error(&format!("expected `{want}`"))),
        }
    }

    fn union(&mut self) -> Result<Regex> {
        let mut acc = self.concat()?;
        while let Some((_, '|')) = self.peek() {
            self.chars.next();
            acc = Regex::union(acc, self.concat()?);
        }
        Ok(acc)
    }

    fn concat(&mut self) -> Result<Regex> {
        let mut acc = self.postfix()?;
        while let Some((_, c)) = self.peek() {
            if !(c == '(' || c == '{' || c == '∅' || c == 'ε' || c.is_ascii_lowercase()) {
                break;
            }
            acc = Regex::concat(acc, self.postfix()?);
        }
        Ok(acc)
    }

    fn postfix(&mut self) -> Result<Regex> {
        let mut acc = self.atom()?;
        loop {
            match self.peek() {
                Some((_, '+')) => {
                    self.chars.next();
                    acc = Regex::plus(acc);
                }
                Some((_, '*')) => {
                    self.chars.next();
                    acc = Regex::star(acc);
                }
                Some((_, '^')) => {
                    self.chars.next();
                    let mut digits = String::new();
                    while let Some((_, c)) = self.peek().filter(|(_, c)| c.is_ascii_digit()) {
                        digits.push(c);
                        self.chars.next();
                    }
                    let k: u64 = digits
                        .parse()
                        .map_err(|_| self.error("expected an exponent"))?;
                    acc = Regex::power(acc, k)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn atom(&mut self) -> Result<Regex> {
        match self.peek() {
            Some((_, '(')) => {
                self.chars.next();
                if let Some((_, ')')) = self.peek() {
                    self.chars.next();
                    return Ok(Regex::Epsilon);
                }
                let inner = self.union()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some((_, '{')) => {
                self.chars.next();
                self.expect('}')?;
                Ok(Regex::Empty)
            }
            Some((_, '∅')) => {
                self.chars.next();
                Ok(Regex::Empty)
            }
            Some((_, 'ε')) => {
                self.chars.next();
                Ok(Regex::Epsilon)
            }
            Some((_, c)) if c.is_ascii_lowercase() => {
                self.chars.next();
                Ok(Regex::Symbol(c))
            }
            _ => Err(self.error("expected a symbol, `(` or `{`")),
        }
    }
}

impl FromStr for Regex {
    type Err = Error;

    /// Syntax: `a|b` union, juxtaposition for concatenation, postfix `+`, `*` and `^k`,
    /// `()` for the empty word and `{}` for the empty language. Symbols are lowercase letters.
    fn from_str(src: &str) -> Result<Self> {
        let mut p = Parser {
            chars: src.char_indices().peekable(),
        };
        let r = p.union()?;
        if p.peek().is_some() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Regex {
        s.parse().unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(
            p("ab|c+"),
            Regex::union(
                Regex::concat(Regex::symbol('a'), Regex::symbol('b')),
                Regex::plus(Regex::symbol('c'))
            )
        );
        assert_eq!(p("(a|b)^3"), Regex::power(p("a|b"), 3).unwrap());
        assert_eq!(p("a*"), Regex::union(Regex::Epsilon, Regex::plus(Regex::symbol('a'))));
        assert_eq!(p("(){}"), Regex::concat(Regex::Epsilon, Regex::Empty));
    }

    #[test]
    fn display_round_trips() {
        for s in ["ab|c+", "a(b|c)", "(ab)+", "a(bc)", "a|(b|c)", "(a^2)^3", "(){}|a*", "(a+)+"] {
            let r = p(s);
            assert_eq!(p(&r.to_string()), r, "{s} printed as {r}");
        }
    }

    #[test]
    fn errors() {
        for s in ["", "a|", "(a", "a^1", "a^", "A", "a)"] {
            assert!(s.parse::<Regex>().is_err(), "{s:?}");
        }
    }

    #[test]
    fn expansion() {
        assert_eq!(p("a^3").expand_powers(4).unwrap(), p("aaa"));
        assert!(p("a^5").expand_powers(4).is_err());
        assert_eq!(p("(a|b)+c").size(), 6);
    }
}
