//! Entailment and query answering for forward-propagating programs.
//!
//! Direct evaluation saturates the rigid stratum once and then each time point in
//! increasing order. [`time_ground_to_datalog`] gives an independent route through
//! plain Datalog.

pub(crate) mod compiled;
mod ground;

use std::collections::{BTreeMap, BTreeSet, HashSet};

pub use ground::{
    entails_via_grounding, plain_datalog_entails, time_ground_to_datalog, TimeGrounded,
};

use crate::error::{Error, Result};
use crate::model::{Fact, FactSet, Program, Query, TimePoint};
use compiled::{Compiled, Materializer};

/// Facts split into the rigid part and per-time-point slices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactStore {
    pub rigid: FactSet,
    pub temporal: BTreeMap<TimePoint, FactSet>,
}

impl FactStore {
    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> Self {
        let mut s = FactStore::default();
        for f in facts {
            s.insert(f.clone());
        }
        s
    }

    pub fn insert(&mut self, f: Fact) {
        match f.time {
            None => {
                self.rigid.insert(f);
            }
            Some(t) => {
                self.temporal.entry(t).or_default().insert(f);
            }
        }
    }

    pub fn min_time(&self) -> Option<TimePoint> {
        self.temporal.keys().next().copied()
    }

    pub fn max_time(&self) -> Option<TimePoint> {
        self.temporal.keys().next_back().copied()
    }

    /// Temporal facts holding in `[from, to]`.
    pub fn restrict(&self, from: TimePoint, to: TimePoint) -> FactSet {
        self.temporal
            .range(from..=to)
            .flat_map(|(_, s)| s.iter().cloned())
            .collect()
    }

    pub fn all(&self) -> FactSet {
        self.rigid
            .iter()
            .chain(self.temporal.values().flatten())
            .cloned()
            .collect()
    }
}

fn load<'a>(program: &Program, facts: impl IntoIterator<Item = &'a Fact>) -> Result<Materializer> {
    let mut m = Materializer::new(Compiled::new(program)?);
    for f in facts {
        m.add_fact(f);
    }
    m.close_rigid();
    Ok(m)
}

/// Whether `program ∪ facts` entails `goal`.
pub fn entails(program: &Program, facts: &FactSet, goal: &Fact) -> Result<bool> {
    goal.check_against(program)?;
    let mut m = load(program, facts)?;
    let Some(t) = goal.time else {
        return Ok(m.contains(goal));
    };
    let Some(start) = m.min_time() else {
        return Ok(false);
    };
    for tau in start..=t {
        m.saturate_at(tau);
    }
    Ok(m.contains(goal))
}

/// Output facts entailed by the query, up to `horizon` for temporal outputs.
pub fn evaluate(query: &Query, facts: &FactSet, horizon: TimePoint) -> Result<FactSet> {
    let mut m = load(query.program(), facts)?;
    let output = query.output();
    if !query.output_decl().is_temporal() {
        return Ok(m
            .rigid_facts()
            .into_iter()
            .filter(|f| f.predicate == output)
            .collect());
    }
    let mut out = FactSet::new();
    let Some(start) = m.min_time() else {
        return Ok(out);
    };
    let preds: HashSet<u32> = m.pred_id(output).into_iter().collect();
    for tau in start..=horizon {
        m.saturate_at(tau);
        out.extend(m.facts_at_over(tau, &preds));
    }
    Ok(out)
}

/// All temporal facts entailed at each time point up to `horizon`, plus the rigid closure.
pub fn materialize(program: &Program, facts: &FactSet, horizon: TimePoint) -> Result<FactStore> {
    let mut m = load(program, facts)?;
    let mut store = FactStore::default();
    store.rigid.extend(m.rigid_facts());
    if let Some(start) = m.min_time() {
        for tau in start..=horizon {
            m.saturate_at(tau);
            let at: FactSet = m.facts_at(tau).into_iter().collect();
            if !at.is_empty() {
                store.temporal.insert(tau, at);
            }
        }
    }
    Ok(store)
}

/// Facts over `signature` at time `t` entailed by the program, the rigid facts and the window.
/// Window entries after `t` are ignored.
pub fn derive_at(
    program: &Program,
    rigid: &FactSet,
    window: &BTreeMap<TimePoint, FactSet>,
    t: TimePoint,
    signature: &BTreeSet<String>,
) -> Result<FactSet> {
    for name in signature {
        if program.decl(name).is_none() {
            return Err(Error::UndeclaredPredicate(name.clone()));
        }
    }
    let within = window.range(..=t).flat_map(|(_, s)| s.iter());
    let mut m = load(program, rigid.iter().chain(within))?;
    let preds: HashSet<u32> = signature.iter().filter_map(|s| m.pred_id(s)).collect();
    let start = m.min_time().unwrap_or(t).min(t);
    for tau in start..=t {
        m.saturate_at(tau);
    }
    Ok(m.facts_at_over(t, &preds).into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_dataset, parse_query};

    const PROP: &str = ".decl A(time) edb .decl B(time) idb .decl P(time) idb .output P
        B(T) :- A(T). B(T+1) :- B(T). P(T) :- B(T).";

    const NETWORK: &str = "
        .decl Brst(object, object, time) edb
        .decl Succ(object, object) edb
        .decl Attk(object, object, time) idb
        .decl Black(object, time) idb
        .decl Grey(object, object, time) idb
        .output Black
        Attk(X, Y, T+1) :- Brst(X, Y, T), Brst(Z, Y, T+1).
        Black(X, T+2) :- Attk(X, Y, T), Attk(X, Y, T+1), Attk(X, Y, T+2).
        Black(X, T+1) :- Black(X, T).
        Grey(X, max, T) :- Attk(X, Y, T).
        Grey(X, J, T+1) :- Grey(X, I, T), Succ(J, I).
        Black(X, T) :- Grey(X, I, T), Brst(X, Y, T).
    ";

    #[test]
    fn persistence_chain() {
        let q = parse_query(PROP).unwrap();
        let d = parse_dataset("A(0).", None).unwrap();
        assert!(entails(q.program(), &d, &Fact::at("P", 3)).unwrap());
        let out = evaluate(&q, &d, 2).unwrap();
        let expected: FactSet = (0..=2).map(|t| Fact::at("P", t)).collect();
        assert_eq!(out, expected);
        assert!(evaluate(&q, &FactSet::new(), 10).unwrap().is_empty());
    }

    #[test]
    fn network_blacklists_at_one() {
        let q = parse_query(NETWORK).unwrap();
        assert!(!entails(q.program(), &FactSet::new(), &Fact::temporal("Black", ["n1"], 0)).unwrap());
        let d = parse_dataset("Brst(v,v1,0). Brst(v2,v1,1). Brst(v,v1,1).", None).unwrap();
        let out = evaluate(&q, &d, 1).unwrap();
        assert!(out.contains(&Fact::temporal("Black", ["v"], 1)));
    }

    #[test]
    fn negative_lag_window() {
        let q = parse_query(
            ".decl A(time) edb .decl G(time) idb .output G G(T) :- A(T-1), A(T).",
        )
        .unwrap();
        let d = parse_dataset("A(4). A(5).", None).unwrap();
        assert!(entails(q.program(), &d, &Fact::at("G", 5)).unwrap());
        assert!(!entails(q.program(), &d, &Fact::at("G", 4)).unwrap());
    }

    #[test]
    fn derive_at_single_tick() {
        let q = parse_query(PROP).unwrap();
        let window = BTreeMap::from([(0, parse_dataset("A(0). B(0).", None).unwrap())]);
        let sigma = BTreeSet::from(["B".to_string(), "P".to_string()]);
        let got = derive_at(q.program(), &FactSet::new(), &window, 1, &sigma).unwrap();
        assert_eq!(got, BTreeSet::from([Fact::at("B", 1), Fact::at("P", 1)]));
        let empty = derive_at(q.program(), &FactSet::new(), &BTreeMap::new(), 0, &sigma).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn undeclared_goal_is_an_error() {
        let q = parse_query(PROP).unwrap();
        assert!(entails(q.program(), &FactSet::new(), &Fact::at("Z", 0)).is_err());
    }

    #[test]
    fn non_fp_program_is_rejected() {
        let q = parse_query(".decl A(time) edb .decl H(time) idb .output H H(T) :- A(T+1).")
            .unwrap();
        assert!(matches!(
            entails(q.program(), &FactSet::new(), &Fact::at("H", 0)),
            Err(Error::NotForwardPropagating { .. })
        ));
    }
}
