//! Language-level oracle: membership by position sets, containment by Thompson NFAs
//! explored as a product of subset constructions.

use std::collections::{BTreeSet, HashSet, VecDeque};

use super::Regex;
use crate::error::Result;

/// Largest exponent the oracle expands.
pub const MAX_EXPANDED_POWER: u64 = 4;

/// Whether `word` is in the language of `r`.
pub fn matches(r: &Regex, word: &[char]) -> bool {
    ends(r, word, &BTreeSet::from([0])).contains(&word.len())
}

/// Positions reachable after matching `r` from any position in `starts`.
fn ends(r: &Regex, word: &[char], starts: &BTreeSet<usize>) -> BTreeSet<usize> {
    match r {
        Regex::Empty => BTreeSet::new(),
        Regex::Epsilon => starts.clone(),
        Regex::Symbol(c) => starts
            .iter()
            .filter(|&&i| word.get(i) == Some(c))
            .map(|i| i + 1)
            .collect(),
        Regex::Union(l, r) => {
            let mut out = ends(l, word, starts);
            out.extend(ends(r, word, starts));
            out
        }
        Regex::Concat(l, r) => ends(r, word, &ends(l, word, starts)),
        Regex::Plus(inner) => {
            let mut reached = ends(inner, word, starts);
            let mut frontier = reached.clone();
            while !frontier.is_empty() {
                frontier = ends(inner, word, &frontier)
                    .difference(&reached)
                    .copied()
                    .collect();
                reached.extend(frontier.iter().copied());
            }
            reached
        }
        Regex::Power(inner, k) => {
            let mut current = starts.clone();
            for _ in 0..*k {
                if current.is_empty() {
                    break;
                }
                current = ends(inner, word, &current);
            }
            current
        }
    }
}

#[derive(Default)]
struct Nfa {
    eps: Vec<Vec<usize>>,
    sym: Vec<Vec<(char, usize)>>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.sym.push(Vec::new());
        self.eps.len() - 1
    }

    /// Returns `(start, accept)` of a fragment for a power-free regex.
    fn fragment(&mut self, r: &Regex) -> (usize, usize) {
        match r {
            Regex::Empty => (self.state(), self.state()),
            Regex::Epsilon => {
                let (s, a) = (self.state(), self.state());
                self.eps[s].push(a);
                (s, a)
            }
            Regex::Symbol(c) => {
                let (s, a) = (self.state(), self.state());
                self.sym[s].push((*c, a));
                (s, a)
            }
            Regex::Union(l, r) => {
                let (s, a) = (self.state(), self.state());
                for child in [l, r] {
                    let (cs, ca) = self.fragment(child);
                    self.eps[s].push(cs);
                    self.eps[ca].push(a);
                }
                (s, a)
            }
            Regex::Concat(l, r) => {
                let (ls, la) = self.fragment(l);
                let (rs, ra) = self.fragment(r);
                self.eps[la].push(rs);
                (ls, ra)
            }
            Regex::Plus(inner) => {
                let (s, a) = self.fragment(inner);
                let accept = self.state();
                self.eps[a].push(s);
                self.eps[a].push(accept);
                (s, accept)
            }
            Regex::Power(..) => unreachable!("powers are expanded before construction"),
        }
    }

    fn closure(&self, states: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = states.into_iter().collect();
        while let Some(s) = stack.pop() {
            if out.insert(s) {
                stack.extend(&self.eps[s]);
            }
        }
        out
    }

    fn step(&self, states: &BTreeSet<usize>, c: char) -> BTreeSet<usize> {
        self.closure(
            states
                .iter()
                .flat_map(|&s| self.sym[s].iter().filter(move |(d, _)| *d == c).map(|(_, t)| *t)),
        )
    }
}

/// A shortest word in `L(r1)` but not in `L(r2)`, if any.
///
/// Powers are expanded first, which fails above [`MAX_EXPANDED_POWER`].
pub fn regex_difference_witness(r1: &Regex, r2: &Regex) -> Result<Option<Vec<char>>> {
    let r1 = r1.expand_powers(MAX_EXPANDED_POWER)?;
    let r2 = r2.expand_powers(MAX_EXPANDED_POWER)?;
    let mut nfa = Nfa::default();
    let (s1, a1) = nfa.fragment(&r1);
    let (s2, a2) = nfa.fragment(&r2);
    let alphabet: Vec<char> = r1.symbols().union(&r2.symbols()).copied().collect();

    let start = (nfa.closure([s1]), nfa.closure([s2]));
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some(((x, y), word)) = queue.pop_front() {
        if x.contains(&a1) && !y.contains(&a2) {
            return Ok(Some(word));
        }
        if x.is_empty() {
            continue;
        }
        for &c in &alphabet {
            let next = (nfa.step(&x, c), nfa.step(&y, c));
            if seen.insert(next.clone()) {
                let mut w = word.clone();
                w.push(c);
                queue.push_back((next, w));
            }
        }
    }
    Ok(None)
}

/// Whether `L(r1) ⊆ L(r2)`.
pub fn regex_contains(r1: &Regex, r2: &Regex) -> Result<bool> {
    Ok(regex_difference_witness(r1, r2)?.is_none())
}
