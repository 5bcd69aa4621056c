//! Windowed stream reasoning.
//!
//! The engine keeps the rigid background facts for the whole run and at most `w + 1`
//! consecutive time slices. At each tick it adds the incoming batch, derives the
//! signature facts holding at the tick, emits the output facts at the tick, and then
//! forgets the slice that fell out of the window.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use crate::analysis::require_fp;
use crate::error::{Error, Result};
use crate::eval::compiled::{Compiled, Materializer};
use crate::eval::FactStore;
use crate::model::{Dataset, Fact, FactSet, Query, Stream, TimePoint};

/// Query, window size and the IDB signature materialised in memory.
#[derive(Clone, Debug)]
pub struct EngineParams {
    query: Query,
    window: u64,
    signature: BTreeSet<String>,
}

impl EngineParams {
    /// `signature` must contain the output predicate and only IDB predicates.
    pub fn new(query: Query, window: u64, signature: BTreeSet<String>) -> Result<Self> {
        require_fp(query.program())?;
        if !query.output_decl().is_temporal() {
            return Err(Error::Unsupported(format!(
                "stream reasoning needs a temporal output, `{}` is rigid",
                query.output()
            )));
        }
        if !signature.contains(query.output()) {
            return Err(Error::Unsupported(format!(
                "signature must contain the output predicate `{}`",
                query.output()
            )));
        }
        let idb = query.idb_signature();
        if let Some(p) = signature.iter().find(|p| !idb.contains(*p)) {
            return Err(Error::Unsupported(format!(
                "signature predicate `{p}` is not an IDB predicate of the query"
            )));
        }
        Ok(EngineParams {
            query,
            window,
            signature,
        })
    }

    /// Materialises every IDB predicate.
    pub fn full(query: Query, window: u64) -> Result<Self> {
        let sig = query.idb_signature();
        Self::new(query, window, sig)
    }

    /// Materialises only the output predicate.
    pub fn output_only(query: Query, window: u64) -> Result<Self> {
        let sig = BTreeSet::from([query.output().to_string()]);
        Self::new(query, window, sig)
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn signature(&self) -> &BTreeSet<String> {
        &self.signature
    }

    pub fn is_full_signature(&self) -> bool {
        self.signature == self.query.idb_signature()
    }
}

/// A running engine. Memory holds the background plus the retained window slices.
#[derive(Clone, Debug)]
pub struct Engine {
    params: EngineParams,
    compiled: Arc<Compiled>,
    background: Dataset,
    /// Background and retained slices; in full-signature mode the slices are saturated.
    memory: Materializer,
    signature_ids: HashSet<u32>,
    output_id: HashSet<u32>,
    /// Temporal facts listed in the program, injected at their tick.
    program_facts: BTreeMap<TimePoint, FactSet>,
    tick: TimePoint,
}

impl Engine {
    pub fn new(params: EngineParams, background: &Dataset) -> Result<Self> {
        if let Some(f) = background.iter().find(|f| f.is_temporal()) {
            return Err(Error::InvalidFact {
                fact: f.to_string(),
                reason: "background facts must be rigid".into(),
            });
        }
        let compiled = Compiled::new(params.query.program())?;
        let mut memory = Materializer::new(compiled.clone());
        let mut program_facts: BTreeMap<TimePoint, FactSet> = BTreeMap::new();
        for f in &compiled.facts {
            if let Some(t) = f.time {
                program_facts.entry(t).or_default().insert(f.clone());
            }
        }
        // Temporal program facts re-enter through their tick's batch.
        for t in memory.slice_times().collect::<Vec<_>>() {
            memory.drop_slice(t);
        }
        for f in background {
            f.check_against(params.query.program())?;
            memory.add_fact(f);
        }
        memory.close_rigid();
        let ids = |names: &BTreeSet<String>| -> HashSet<u32> {
            names.iter().filter_map(|n| memory.pred_id(n)).collect()
        };
        let signature_ids = ids(&params.signature);
        let output_id = ids(&BTreeSet::from([params.query.output().to_string()]));
        Ok(Engine {
            params,
            compiled,
            background: background.clone(),
            memory,
            signature_ids,
            output_id,
            program_facts,
            tick: 0,
        })
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    /// The next tick to be processed.
    pub fn current_tick(&self) -> TimePoint {
        self.tick
    }

    /// Processes the batch for the current tick and returns the output facts at that tick,
    /// sorted by their text.
    pub fn push_tick(&mut self, batch: &FactSet) -> Result<Vec<Fact>> {
        let tau = self.tick;
        let program = self.params.query.program();
        for f in batch {
            if f.time != Some(tau) {
                return Err(Error::InvalidFact {
                    fact: f.to_string(),
                    reason: format!("batch for tick {tau} must hold facts timestamped {tau}"),
                });
            }
            f.check_against(program)?;
        }
        let injected = self.program_facts.get(&tau).cloned().unwrap_or_default();
        for f in batch.iter().chain(&injected) {
            self.memory.add_fact(f);
        }

        if self.params.is_full_signature() {
            self.memory.saturate_at(tau);
        } else {
            self.rederive_at(tau);
        }

        let mut emitted = self.memory.facts_at_over(tau, &self.output_id);
        emitted.sort_by_cached_key(ToString::to_string);

        if let Some(expired) = tau.checked_sub(self.params.window) {
            self.memory.drop_slice(expired);
        }
        self.tick += 1;
        Ok(emitted)
    }

    /// Entailment over the whole memory, keeping only signature facts at `tau`.
    fn rederive_at(&mut self, tau: TimePoint) {
        let mut scratch = self.memory.clone();
        let start = scratch.min_time().unwrap_or(tau).min(tau);
        for t in start..=tau {
            scratch.saturate_at(t);
        }
        for f in scratch.facts_at_over(tau, &self.signature_ids) {
            self.memory.add_fact(&f);
        }
    }

    /// Current memory: the background and the retained temporal facts.
    pub fn memory(&self) -> FactStore {
        let mut store = FactStore::default();
        store.rigid.extend(self.background.iter().cloned());
        for t in self.memory.slice_times() {
            let facts: FactSet = self.memory.facts_at(t).into_iter().collect();
            if !facts.is_empty() {
                store.temporal.insert(t, facts);
            }
        }
        store
    }

    pub fn compiled_radius(&self) -> u64 {
        self.compiled.radius
    }
}

/// Runs ticks `0..n` and returns the emissions per tick. Stream facts at or after `n` are ignored.
pub fn run_stream(
    params: EngineParams,
    background: &Dataset,
    stream: &Stream,
    n: u64,
) -> Result<Vec<Vec<Fact>>> {
    let ignored = stream.facts().filter(|f| f.time >= Some(n)).count();
    if ignored > 0 {
        log::warn!("ignoring {ignored} stream facts timestamped at or after tick {n}");
    }
    let mut engine = Engine::new(params, background)?;
    (0..n).map(|t| engine.push_tick(&stream.at(t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::subquery_at_radius;
    use crate::eval::evaluate;
    use crate::syntax::{parse_dataset, parse_query, parse_stream};

    const PROP: &str = ".decl A(time) edb .decl B(time) idb .decl P(time) idb .output P
        B(T) :- A(T). B(T+1) :- B(T). P(T) :- B(T).";

    #[test]
    fn full_signature_persists() {
        let q = parse_query(PROP).unwrap();
        let params = EngineParams::full(q, 1).unwrap();
        let stream = parse_stream("A(0).", None).unwrap();
        let out = run_stream(params, &Dataset::new(), &stream, 6).unwrap();
        for (t, emitted) in out.iter().enumerate() {
            assert_eq!(emitted, &vec![Fact::at("P", t as u64)]);
        }
    }

    #[test]
    fn output_only_signature_forgets() {
        let q = parse_query(PROP).unwrap();
        for w in 0..4 {
            let params = EngineParams::output_only(q.clone(), w).unwrap();
            let stream = parse_stream("A(0).", None).unwrap();
            let out = run_stream(params, &Dataset::new(), &stream, w + 3).unwrap();
            let first_empty = out.iter().position(Vec::is_empty).unwrap();
            assert_eq!(first_empty as u64, w + 1);
        }
    }

    #[test]
    fn parameter_errors() {
        let q = parse_query(PROP).unwrap();
        assert!(EngineParams::new(q.clone(), 1, BTreeSet::from(["B".to_string()])).is_err());
        assert!(EngineParams::new(q.clone(), 1, BTreeSet::from(["A".to_string(), "P".into()])).is_err());
        let params = EngineParams::full(q, 1).unwrap();
        let bg = parse_dataset("A(0).", None).unwrap();
        assert!(Engine::new(params.clone(), &bg).is_err());
        let mut e = Engine::new(params, &Dataset::new()).unwrap();
        assert!(e.push_tick(&parse_dataset("A(1).", None).unwrap()).is_err());
        assert!(e.push_tick(&FactSet::new()).unwrap().is_empty());
    }

    #[test]
    fn memory_spans_the_window() {
        let q = parse_query(PROP).unwrap();
        let mut e = Engine::new(EngineParams::full(q, 2).unwrap(), &Dataset::new()).unwrap();
        for t in 0..8 {
            e.push_tick(&FactSet::from([Fact::at("A", t)])).unwrap();
            assert!(e.memory().temporal.len() <= 3);
        }
    }

    #[test]
    fn matches_windowed_evaluation() {
        let q = parse_query(PROP).unwrap();
        let stream = parse_stream("A(1). A(4).", None).unwrap();
        for w in 0..=1 {
            let out = run_stream(EngineParams::full(q.clone(), w).unwrap(), &Dataset::new(), &stream, 7)
                .unwrap();
            let got: FactSet = out.into_iter().flatten().collect();
            let facts: FactSet = stream.facts().cloned().collect();
            let want = evaluate(&subquery_at_radius(&q, w).unwrap(), &facts, 6).unwrap();
            assert_eq!(got, want);
        }
        assert!(run_stream(EngineParams::full(q, 1).unwrap(), &Dataset::new(), &stream, 0)
            .unwrap()
            .is_empty());
    }
}
