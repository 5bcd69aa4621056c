//! Deterministic automaton of an object-free forward-propagating query.
//!
//! A word is one rigid symbol (the rigid EDB predicates of the dataset) followed by one
//! temporal symbol per time point. A state after the rigid symbol and `n` temporal symbols
//! records the rigid symbol and the derived temporal predicates at the last `ρ + 1` time
//! points, oldest first, with `ρ` the radius. A slot of age `a` keeps only predicates some
//! rule reads at a lag above `a`, plus the outputs at age 0; dropped facts are never read
//! again, so masking merges states with identical futures.

use std::collections::{BTreeSet, HashMap};

use crate::analysis::{program_radius, require_fp, require_object_ground};
use crate::error::{Error, Result};
use crate::model::Program;

pub type StateId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Rigid,
    Temporal,
}

/// A set of EDB predicates of one kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphabetSymbol {
    pub kind: SymbolKind,
    pub predicates: BTreeSet<String>,
}

impl AlphabetSymbol {
    pub fn rigid(preds: impl IntoIterator<Item = impl Into<String>>) -> Self {
        AlphabetSymbol {
            kind: SymbolKind::Rigid,
            predicates: preds.into_iter().map(Into::into).collect(),
        }
    }

    pub fn temporal(preds: impl IntoIterator<Item = impl Into<String>>) -> Self {
        AlphabetSymbol {
            kind: SymbolKind::Temporal,
            predicates: preds.into_iter().map(Into::into).collect(),
        }
    }
}

/// Decoded view of a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutomatonState {
    Init,
    /// `slots.len()` is the radius plus one; the last slot is the most recent time point.
    Snapshot {
        rigid_seen: BTreeSet<String>,
        slots: Vec<BTreeSet<String>>,
    },
}

#[derive(Clone, Debug)]
struct TemporalRule {
    head: usize,
    rigid: Vec<usize>,
    /// `(lag, predicate)` with `lag ≥ 1`.
    lagged: Vec<(usize, usize)>,
    current: Vec<usize>,
}

type Bits = Box<[u64]>;

fn has(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

#[derive(Clone, Debug)]
pub struct OgAutomaton {
    preds: Vec<String>,
    index: HashMap<String, usize>,
    rigid_edb: Vec<usize>,
    temporal_edb: Vec<usize>,
    outputs: Vec<usize>,
    radius: usize,
    rigid_rules: Vec<(usize, Vec<usize>)>,
    rigid_facts: Vec<usize>,
    temporal_rules: Vec<TemporalRule>,
    words: usize,
    /// Per slot, oldest first: the predicates worth keeping there.
    keep: Vec<Bits>,
    /// `states[0]` is the initial state and has an empty key.
    states: Vec<Bits>,
    ids: HashMap<Bits, StateId>,
    transitions: HashMap<(StateId, u64), StateId>,
    closures: HashMap<Bits, Bits>,
}

impl OgAutomaton {
    /// Builds the automaton of an object-free program; `outputs` are its output predicates.
    pub fn new(program: &Program, outputs: &[String]) -> Result<Self> {
        require_fp(program)?;
        require_object_ground(program)?;
        let mut names: BTreeSet<String> = program
            .used_predicates()
            .into_iter()
            .map(str::to_string)
            .collect();
        names.extend(outputs.iter().cloned());
        let preds: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, usize> =
            preds.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let decl = |p: &str| {
            program
                .decl(p)
                .ok_or_else(|| Error::UndeclaredPredicate(p.to_string()))
        };
        for p in &preds {
            let d = decl(p)?;
            if d.object_arity() != 0 {
                return Err(Error::Unsupported(format!(
                    "predicate `{p}` has object positions; ground the query first"
                )));
            }
        }

        let mut rigid_edb = BTreeSet::new();
        let mut temporal_edb = BTreeSet::new();
        let mut rigid_rules = Vec::new();
        let mut rigid_facts = Vec::new();
        let mut temporal_rules = Vec::new();
        for rule in program.rules() {
            let head = index[&rule.head.predicate];
            if rule.is_fact() {
                if rule.head.is_temporal() {
                    return Err(Error::Unsupported(format!(
                        "temporal fact `{}` in the program; move it into the dataset",
                        rule.head
                    )));
                }
                rigid_facts.push(head);
                continue;
            }
            let head_offset = match rule.head.time_term() {
                Some(crate::model::Term::TimeVar { offset, .. }) => Some(*offset),
                _ => None,
            };
            let mut tr = TemporalRule {
                head,
                rigid: Vec::new(),
                lagged: Vec::new(),
                current: Vec::new(),
            };
            for atom in &rule.body {
                let p = index[&atom.predicate];
                let d = decl(&atom.predicate)?;
                if d.is_edb() {
                    if d.is_temporal() {
                        temporal_edb.insert(p);
                    } else {
                        rigid_edb.insert(p);
                    }
                }
                match (atom.time_term(), head_offset) {
                    (None, _) => tr.rigid.push(p),
                    (Some(crate::model::Term::TimeVar { offset, .. }), Some(h)) => {
                        match (h - offset) as usize {
                            0 => tr.current.push(p),
                            lag => tr.lagged.push((lag, p)),
                        }
                    }
                    _ => unreachable!("fp rules have one time variable in the head"),
                }
            }
            if head_offset.is_some() {
                temporal_rules.push(tr);
            } else {
                rigid_rules.push((head, tr.rigid));
            }
        }
        if rigid_edb.len() > 64 || temporal_edb.len() > 64 {
            return Err(Error::Unsupported(
                "more than 64 EDB predicates of one kind".into(),
            ));
        }
        let outputs: Vec<usize> = outputs.iter().map(|o| index[o]).collect();
        let words = preds.len().div_ceil(64).max(1);
        let radius = program_radius(program) as usize;
        let mut max_lag = vec![0usize; preds.len()];
        for r in &temporal_rules {
            for &(lag, p) in &r.lagged {
                max_lag[p] = max_lag[p].max(lag);
            }
        }
        let keep = (0..=radius)
            .map(|j| {
                let age = radius - j;
                let mut bits = vec![0u64; words];
                for (p, &lag) in max_lag.iter().enumerate() {
                    if lag > age || (age == 0 && outputs.contains(&p)) {
                        set(&mut bits, p);
                    }
                }
                bits.into_boxed_slice()
            })
            .collect();
        let init: Bits = Box::new([]);
        Ok(OgAutomaton {
            radius,
            keep,
            ids: HashMap::from([(init.clone(), 0)]),
            states: vec![init],
            preds,
            index,
            rigid_edb: rigid_edb.into_iter().collect(),
            temporal_edb: temporal_edb.into_iter().collect(),
            outputs,
            rigid_rules,
            rigid_facts,
            temporal_rules,
            words,
            transitions: HashMap::new(),
            closures: HashMap::new(),
        })
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Number of predicates the automaton tracks.
    pub fn predicate_count(&self) -> usize {
        self.preds.len()
    }

    pub fn rigid_edb(&self) -> impl Iterator<Item = &str> {
        self.rigid_edb.iter().map(|&i| self.preds[i].as_str())
    }

    pub fn temporal_edb(&self) -> impl Iterator<Item = &str> {
        self.temporal_edb.iter().map(|&i| self.preds[i].as_str())
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Whether the output predicate `name` holds at the most recent time point.
    pub fn holds_now(&self, state: StateId, name: &str) -> bool {
        let Some(&p) = self.index.get(name) else {
            return false;
        };
        let key = &self.states[state as usize];
        if key.is_empty() {
            return false;
        }
        let w = self.words;
        has(&key[(1 + self.radius) * w..(2 + self.radius) * w], p)
    }

    /// Final iff some output predicate holds at the most recent time point.
    pub fn is_final(&self, state: StateId) -> bool {
        self.outputs
            .iter()
            .any(|&o| self.holds_now(state, &self.preds[o]))
    }

    pub fn state(&self, id: StateId) -> AutomatonState {
        let key = &self.states[id as usize];
        if key.is_empty() {
            return AutomatonState::Init;
        }
        let w = self.words;
        let decode = |bits: &[u64]| -> BTreeSet<String> {
            (0..self.preds.len())
                .filter(|&i| has(bits, i))
                .map(|i| self.preds[i].clone())
                .collect()
        };
        AutomatonState::Snapshot {
            rigid_seen: decode(&key[..w]),
            slots: (0..=self.radius)
                .map(|j| decode(&key[(1 + j) * w..(2 + j) * w]))
                .collect(),
        }
    }

    /// Transition on a symbol; predicates outside this automaton's EDB signature are ignored.
    pub fn step(&mut self, state: StateId, symbol: &AlphabetSymbol) -> Result<StateId> {
        let is_init = state == self.initial();
        match (symbol.kind, is_init) {
            (SymbolKind::Rigid, true) => {
                let mask = mask_of(&self.rigid_edb, &self.preds, &symbol.predicates);
                Ok(self.step_rigid(mask))
            }
            (SymbolKind::Temporal, false) => {
                let mask = mask_of(&self.temporal_edb, &self.preds, &symbol.predicates);
                Ok(self.step_temporal(state, mask))
            }
            (SymbolKind::Rigid, false) => Err(Error::Unsupported(
                "a rigid symbol may only be read first".into(),
            )),
            (SymbolKind::Temporal, true) => Err(Error::Unsupported(
                "the first symbol must be rigid".into(),
            )),
        }
    }

    fn intern(&mut self, key: Bits) -> StateId {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.states.len() as StateId;
        self.states.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    /// `mask` bit `i` selects `rigid_edb[i]`.
    pub(crate) fn step_rigid(&mut self, mask: u64) -> StateId {
        if let Some(&s) = self.transitions.get(&(0, mask)) {
            return s;
        }
        let w = self.words;
        let mut key = vec![0u64; (self.radius + 2) * w];
        for (i, &p) in self.rigid_edb.iter().enumerate() {
            if mask >> i & 1 == 1 {
                set(&mut key[..w], p);
            }
        }
        let s = self.intern(key.into_boxed_slice());
        self.transitions.insert((0, mask), s);
        s
    }

    fn rigid_closure(&mut self, seen: &[u64]) -> Bits {
        if let Some(c) = self.closures.get(seen) {
            return c.clone();
        }
        let mut bits: Vec<u64> = seen.to_vec();
        for &f in &self.rigid_facts {
            set(&mut bits, f);
        }
        loop {
            let mut changed = false;
            for (head, body) in &self.rigid_rules {
                if !has(&bits, *head) && body.iter().all(|&b| has(&bits, b)) {
                    set(&mut bits, *head);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let bits: Bits = bits.into_boxed_slice();
        self.closures.insert(seen.into(), bits.clone());
        bits
    }

    /// `mask` bit `i` selects `temporal_edb[i]`.
    pub(crate) fn step_temporal(&mut self, state: StateId, mask: u64) -> StateId {
        debug_assert_ne!(state, 0, "temporal symbols follow the rigid symbol");
        if let Some(&s) = self.transitions.get(&(state, mask)) {
            return s;
        }
        let (w, rho) = (self.words, self.radius);
        let old = self.states[state as usize].clone();
        let closure = self.rigid_closure(&old[..w]);

        let mut key = vec![0u64; (rho + 2) * w];
        key[..w].copy_from_slice(&old[..w]);
        // New slots 0..ρ-1 are the old slots 1..ρ.
        key[w..(rho + 1) * w].copy_from_slice(&old[2 * w..(rho + 2) * w]);
        let (history, now) = key.split_at_mut((rho + 1) * w);
        let slot = |j: usize| &history[(1 + j) * w..(2 + j) * w];
        for (i, &p) in self.temporal_edb.iter().enumerate() {
            if mask >> i & 1 == 1 {
                set(now, p);
            }
        }
        let enabled: Vec<&TemporalRule> = self
            .temporal_rules
            .iter()
            .filter(|r| {
                r.rigid.iter().all(|&p| has(&closure, p))
                    && r.lagged.iter().all(|&(lag, p)| has(slot(rho - lag), p))
            })
            .collect();
        loop {
            let mut changed = false;
            for r in &enabled {
                if !has(now, r.head) && r.current.iter().all(|&p| has(now, p)) {
                    set(now, r.head);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (j, keep) in self.keep.iter().enumerate() {
            for (k, m) in key[(1 + j) * w..(2 + j) * w].iter_mut().zip(keep.iter()) {
                *k &= m;
            }
        }
        let s = self.intern(key.into_boxed_slice());
        self.transitions.insert((state, mask), s);
        s
    }
}

fn mask_of(edb: &[usize], preds: &[String], chosen: &BTreeSet<String>) -> u64 {
    edb.iter()
        .enumerate()
        .filter(|(_, &p)| chosen.contains(&preds[p]))
        .fold(0, |m, (i, _)| m | 1 << i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_query;

    fn automaton(src: &str) -> OgAutomaton {
        let q = parse_query(src).unwrap();
        OgAutomaton::new(q.program(), &[q.output().to_string()]).unwrap()
    }

    const PROP: &str = ".decl A(time) edb .decl B(time) idb .decl P(time) idb .output P
        B(T) :- A(T). B(T+1) :- B(T). P(T) :- B(T).";

    #[test]
    fn persistence_run() {
        let mut a = automaton(PROP);
        let s = a.step(a.initial(), &AlphabetSymbol::rigid(Vec::<String>::new())).unwrap();
        assert_eq!(
            a.state(s),
            AutomatonState::Snapshot {
                rigid_seen: BTreeSet::new(),
                slots: vec![BTreeSet::new(), BTreeSet::new()],
            }
        );
        let s = a.step(s, &AlphabetSymbol::temporal(["A"])).unwrap();
        assert!(a.is_final(s));
        let mut s = s;
        for _ in 0..5 {
            s = a.step(s, &AlphabetSymbol::temporal(Vec::<String>::new())).unwrap();
            assert!(a.is_final(s));
        }
    }

    #[test]
    fn symbol_kinds_are_enforced() {
        let mut a = automaton(PROP);
        assert!(a.step(0, &AlphabetSymbol::temporal(["A"])).is_err());
        let s = a.step(0, &AlphabetSymbol::rigid(Vec::<String>::new())).unwrap();
        assert!(a.step(s, &AlphabetSymbol::rigid(Vec::<String>::new())).is_err());
    }

    #[test]
    fn transitions_are_deterministic() {
        let mut a = automaton(PROP);
        let s = a.step(0, &AlphabetSymbol::rigid(Vec::<String>::new())).unwrap();
        let t1 = a.step(s, &AlphabetSymbol::temporal(["A"])).unwrap();
        let t2 = a.step(s, &AlphabetSymbol::temporal(["A", "Foreign"])).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn rigid_guards_and_lags() {
        let mut a = automaton(
            ".decl R edb .decl A(time) edb .decl G(time) idb .output G
             G(T+2) :- R, A(T).",
        );
        let with_r = a.step(0, &AlphabetSymbol::rigid(["R"])).unwrap();
        let s = a.step(with_r, &AlphabetSymbol::temporal(["A"])).unwrap();
        let s = a.step(s, &AlphabetSymbol::temporal(Vec::<String>::new())).unwrap();
        assert!(!a.is_final(s));
        let s = a.step(s, &AlphabetSymbol::temporal(Vec::<String>::new())).unwrap();
        assert!(a.is_final(s));

        let without = a.step(0, &AlphabetSymbol::rigid(Vec::<String>::new())).unwrap();
        let mut s = a.step(without, &AlphabetSymbol::temporal(["A"])).unwrap();
        for _ in 0..2 {
            s = a.step(s, &AlphabetSymbol::temporal(Vec::<String>::new())).unwrap();
        }
        assert!(!a.is_final(s));
    }

    #[test]
    fn temporal_program_facts_are_rejected() {
        let q = parse_query(".decl A(time) edb .decl G(time) idb .output G A(3). G(T) :- A(T).")
            .unwrap();
        assert!(OgAutomaton::new(q.program(), &["G".to_string()]).is_err());
    }
}
