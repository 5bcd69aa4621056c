//! Compiles regular expressions to forward-propagating queries whose output `G` holds at
//! `τ` exactly when the dataset encodes, starting at some `F(τ - n)`, a word of length `n`
//! in the language.

use std::collections::{BTreeMap, BTreeSet};

use super::{Alphabet, Regex};
use crate::error::{Error, Result};
use crate::model::{Atom, Dataset, Fact, PredKind, PredicateDecl, Program, Query, Rule, Term, TimePoint};

/// Start-marker EDB predicate.
pub const START: &str = "F";
/// Output predicate.
pub const OUTPUT: &str = "G";
/// Rigid predicate holding the two bit constants.
pub const BIT: &str = "Bit";
pub const ZERO: &str = "b0";
pub const ONE: &str = "b1";

/// EDB predicate marking symbol `c` at a position.
pub fn symbol_predicate(c: char) -> String {
    format!("A_{c}")
}

/// Rigid successor predicate over `m`-bit numbers, most significant bit first.
pub fn successor_predicate(m: usize) -> String {
    format!("Succ{m}")
}

/// Bits needed to count up to `k - 1`.
pub fn counter_bits(k: u64) -> usize {
    (64 - (k - 1).leading_zeros()) as usize
}

fn t(offset: i64) -> Term {
    Term::time("T", offset)
}

fn unary(name: &str, offset: i64) -> Atom {
    Atom::new(name, vec![t(offset)])
}

struct Builder<'a> {
    alphabet: &'a Alphabet,
    successor_widths: BTreeSet<usize>,
    powers: usize,
}

impl Builder<'_> {
    fn is_shared(&self, name: &str) -> bool {
        name.starts_with("A_") || name.starts_with("Succ") || name == BIT
    }

    /// Rules for `r` whose interface predicates are `F{path}` and `G{path}`.
    fn build(&mut self, r: &Regex, path: &str) -> Result<Vec<Rule>> {
        let f = format!("{START}{path}");
        let g = format!("{OUTPUT}{path}");
        let link = |from: &str, to: &str| Rule::new(unary(to, 0), vec![unary(from, 0)]);
        Ok(match r {
            Regex::Empty => Vec::new(),
            Regex::Epsilon => vec![link(&f, &g)],
            Regex::Symbol(c) => {
                if !self.alphabet.contains(*c) {
                    return Err(Error::Regex(format!("symbol `{c}` is not in the alphabet")));
                }
                vec![Rule::new(
                    unary(&g, 1),
                    vec![unary(&f, 0), unary(&symbol_predicate(*c), 0)],
                )]
            }
            Regex::Union(l, r) => {
                let (lp, rp) = (format!("{path}.l"), format!("{path}.r"));
                let mut rules = self.build(l, &lp)?;
                rules.extend(self.build(r, &rp)?);
                rules.push(link(&f, &format!("{START}{lp}")));
                rules.push(link(&f, &format!("{START}{rp}")));
                rules.push(link(&format!("{OUTPUT}{lp}"), &g));
                rules.push(link(&format!("{OUTPUT}{rp}"), &g));
                rules
            }
            Regex::Concat(l, r) => {
                let (lp, rp) = (format!("{path}.l"), format!("{path}.r"));
                let mut rules = self.build(l, &lp)?;
                rules.extend(self.build(r, &rp)?);
                rules.push(link(&f, &format!("{START}{lp}")));
                rules.push(link(&format!("{OUTPUT}{lp}"), &format!("{START}{rp}")));
                rules.push(link(&format!("{OUTPUT}{rp}"), &g));
                rules
            }
            Regex::Plus(inner) => {
                let ip = format!("{path}.s");
                let mut rules = self.build(inner, &ip)?;
                let (fi, gi) = (format!("{START}{ip}"), format!("{OUTPUT}{ip}"));
                rules.push(link(&f, &fi));
                rules.push(link(&gi, &fi));
                rules.push(link(&gi, &g));
                rules
            }
            Regex::Power(inner, k) => self.build_power(inner, *k, path)?,
        })
    }

    fn build_power(&mut self, inner: &Regex, k: u64, path: &str) -> Result<Vec<Rule>> {
        let m = counter_bits(k);
        self.successor_widths.insert(m);
        self.powers += 1;
        let id = self.powers;
        let xs: Vec<Term> = (1..=m).map(|i| Term::var(format!("X{id}_{i}"))).collect();
        let ys: Vec<Term> = (1..=m).map(|i| Term::var(format!("Y{id}_{i}"))).collect();
        let ip = format!("{path}.p");
        let widen = |atom: &Atom, extra: &[Term], shared: bool| -> Atom {
            if shared || !atom.is_temporal() {
                return atom.clone();
            }
            let mut args = atom.object_args().to_vec();
            args.extend_from_slice(extra);
            args.push(atom.time_term().expect("temporal atom").clone());
            Atom::new(atom.predicate.clone(), args)
        };
        let mut rules: Vec<Rule> = self
            .build(inner, &ip)?
            .iter()
            .map(|rule| {
                let w = |a: &Atom| widen(a, &xs, self.is_shared(&a.predicate));
                Rule::new(w(&rule.head), rule.body.iter().map(w).collect())
            })
            .collect();
        let (fi, gi) = (format!("{START}{ip}"), format!("{OUTPUT}{ip}"));
        let bits = |n: u64| -> Vec<Term> {
            (0..m)
                .rev()
                .map(|b| Term::obj(if n >> b & 1 == 1 { ONE } else { ZERO }))
                .collect()
        };
        let with_time = |mut objects: Vec<Term>| {
            objects.push(t(0));
            objects
        };
        rules.push(Rule::new(
            Atom::new(&*fi, with_time(bits(0))),
            vec![unary(&format!("{START}{path}"), 0)],
        ));
        rules.push(Rule::new(
            unary(&format!("{OUTPUT}{path}"), 0),
            vec![Atom::new(&*gi, with_time(bits(k - 1)))],
        ));
        rules.push(Rule::new(
            Atom::new(&*fi, with_time(ys.clone())),
            vec![
                Atom::new(&*gi, with_time(xs.clone())),
                Atom::new(successor_predicate(m), xs.iter().chain(&ys).cloned().collect()),
            ],
        ));
        Ok(rules)
    }
}

/// Facts `Bit(b0)`, `Bit(b1)` and, for each width `m`, the rules deriving
/// `Succ{m}(x̄, ȳ)` exactly when `ȳ` encodes the successor of `x̄`.
fn successor_program(widths: &BTreeSet<usize>) -> Vec<Rule> {
    if widths.is_empty() {
        return Vec::new();
    }
    let mut rules = vec![
        Rule::new(Atom::new(BIT, vec![Term::obj(ZERO)]), Vec::new()),
        Rule::new(Atom::new(BIT, vec![Term::obj(ONE)]), Vec::new()),
    ];
    for &m in widths {
        for i in 0..m {
            let prefix: Vec<Term> = (1..=i).map(|j| Term::var(format!("Z{j}"))).collect();
            let tail = |first: &str, rest: &str| -> Vec<Term> {
                std::iter::once(Term::obj(first))
                    .chain((i + 1..m).map(|_| Term::obj(rest)))
                    .collect()
            };
            let args = prefix
                .iter()
                .cloned()
                .chain(tail(ZERO, ONE))
                .chain(prefix.iter().cloned())
                .chain(tail(ONE, ZERO))
                .collect();
            let body = prefix.iter().map(|z| Atom::new(BIT, vec![z.clone()])).collect();
            rules.push(Rule::new(Atom::new(successor_predicate(m), args), body));
        }
    }
    rules
}

fn declarations(alphabet: &Alphabet, rules: &[Rule]) -> Vec<PredicateDecl> {
    let mut decls: BTreeMap<String, PredicateDecl> = BTreeMap::new();
    let mut add = |d: PredicateDecl| {
        decls.entry(d.name.clone()).or_insert(d);
    };
    add(PredicateDecl::temporal(START, 0, PredKind::Edb));
    add(PredicateDecl::temporal(OUTPUT, 0, PredKind::Idb));
    for c in alphabet.symbols() {
        add(PredicateDecl::temporal(symbol_predicate(c), 0, PredKind::Edb));
    }
    for atom in rules.iter().flat_map(Rule::atoms) {
        let objects = atom.object_args().len();
        add(if atom.is_temporal() {
            PredicateDecl::temporal(atom.predicate.clone(), objects, PredKind::Idb)
        } else {
            PredicateDecl::rigid(atom.predicate.clone(), objects, PredKind::Idb)
        });
    }
    decls.into_values().collect()
}

/// Compiles a regex, which may use powers, into a query with output `G`.
///
/// Powers are compiled with binary counters over the objects `b0` and `b1`, so the
/// query is object-ground only when the regex is power-free.
pub fn succinct_regex_to_query(r: &Regex, alphabet: &Alphabet) -> Result<Query> {
    let mut builder = Builder {
        alphabet,
        successor_widths: BTreeSet::new(),
        powers: 0,
    };
    let rules = builder.build(r, "")?;
    let mut all = successor_program(&builder.successor_widths);
    all.extend(rules);
    Query::new(Program::new(declarations(alphabet, &all), all), OUTPUT)
}

/// Compiles a power-free regex into an object-ground query with output `G`.
pub fn regex_to_query(r: &Regex, alphabet: &Alphabet) -> Result<Query> {
    if r.has_power() {
        return Err(Error::Regex(format!(
            "`{r}` uses a power; compile it with the succinct construction"
        )));
    }
    succinct_regex_to_query(r, alphabet)
}

/// The dataset encoding `word` starting at `start`: `F(start)` and the `i`-th symbol at
/// `start + i`.
pub fn word_to_dataset(word: &[char], start: TimePoint, alphabet: &Alphabet) -> Result<Dataset> {
    let mut out = Dataset::from([Fact::at(START, start)]);
    for (i, &c) in word.iter().enumerate() {
        if !alphabet.contains(c) {
            return Err(Error::Regex(format!("symbol `{c}` is not in the alphabet")));
        }
        out.insert(Fact::at(symbol_predicate(c), start + i as TimePoint));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify, rule_radius};
    use crate::eval::{entails, evaluate};

    fn ab() -> Alphabet {
        Alphabet::new(['a', 'b']).unwrap()
    }

    fn compile(s: &str) -> Query {
        succinct_regex_to_query(&s.parse().unwrap(), &ab()).unwrap()
    }

    fn accepts(q: &Query, word: &str, start: TimePoint) -> bool {
        let w: Vec<char> = word.chars().collect();
        let end = start + w.len() as TimePoint;
        let d = word_to_dataset(&w, start, &ab()).unwrap();
        evaluate(q, &d, end).unwrap().contains(&Fact::at(OUTPUT, end))
    }

    #[test]
    fn base_cases() {
        let q = compile("a");
        assert_eq!(q.program().rules().len(), 1);
        assert_eq!(q.program().rules()[0].to_string(), "G(T+1) :- F(T), A_a(T).");
        let q = compile("()");
        assert_eq!(q.program().rules()[0].to_string(), "G(T) :- F(T).");
        assert!(compile("{}").program().rules().is_empty());
        assert_eq!(compile("a|b").program().rules().len(), 6);
    }

    #[test]
    fn word_encoding() {
        let d = word_to_dataset(&['a', 'b'], 2, &ab()).unwrap();
        assert_eq!(d, Dataset::from([Fact::at("F", 2), Fact::at("A_a", 2), Fact::at("A_b", 3)]));
        assert!(word_to_dataset(&['c'], 0, &ab()).is_err());
        assert!(accepts(&compile("a"), "a", 0));
        assert!(accepts(&compile("()"), "", 5));
    }

    #[test]
    fn compiled_queries_are_og_and_fp() {
        let q = compile("(a|b)+ab()");
        let report = classify(&q);
        assert!(report.is_fp && report.is_object_ground);
        assert_eq!(report.query_radius, 1);
        assert!(regex_to_query(&"a^2".parse().unwrap(), &ab()).is_err());
        assert_eq!(
            regex_to_query(&"ab+".parse().unwrap(), &ab()).unwrap().to_string(),
            compile("ab+").to_string()
        );
    }

    #[test]
    fn successor_relation() {
        let rules = successor_program(&BTreeSet::from([2]));
        let program = Program::new(
            [
                PredicateDecl::rigid(BIT, 1, PredKind::Idb),
                PredicateDecl::rigid("Succ2", 4, PredKind::Idb),
            ],
            rules,
        );
        let fact = |xs: [&str; 4]| Fact::rigid("Succ2", xs);
        let none = Dataset::new();
        assert!(entails(&program, &none, &fact(["b0", "b0", "b0", "b1"])).unwrap());
        assert!(entails(&program, &none, &fact(["b0", "b1", "b1", "b0"])).unwrap());
        assert!(entails(&program, &none, &fact(["b1", "b0", "b1", "b1"])).unwrap());
        assert!(!entails(&program, &none, &fact(["b0", "b1", "b0", "b0"])).unwrap());
        assert!(!entails(&program, &none, &fact(["b1", "b1", "b0", "b0"])).unwrap());
    }

    #[test]
    fn powers_count_exactly() {
        let q = compile("a^2");
        assert!(q.program().rules().iter().all(|r| rule_radius(r) <= 1));
        for (word, expected) in [("", false), ("a", false), ("aa", true), ("aaa", false), ("ab", false)] {
            assert_eq!(accepts(&q, word, 0), expected, "{word:?}");
        }
        let q = compile("(a|b)^3");
        assert!(accepts(&q, "aba", 1));
        assert!(!accepts(&q, "ab", 1));
        assert!(!accepts(&q, "abab", 1));
    }
}
