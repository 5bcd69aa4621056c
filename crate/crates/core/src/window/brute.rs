//! Exhaustive containment check on tiny signatures, independent of the automaton.

use std::collections::{BTreeSet, HashSet};

use crate::analysis::{require_fp, require_object_ground};
use crate::error::{Error, Result};
use crate::eval::compiled::{Compiled, Materializer};
use crate::model::{Fact, Query, Term, TimePoint};

/// Largest number of ground EDB atoms the oracle enumerates.
pub const MAX_ORACLE_ATOMS: usize = 4;
/// Largest dataset horizon the oracle enumerates.
pub const MAX_ORACLE_TIME: TimePoint = 4;

/// Ground EDB atoms (without time) that occur in rule bodies.
fn edb_patterns(q: &Query, rigid: &mut BTreeSet<Fact>, temporal: &mut BTreeSet<Fact>) {
    let program = q.program();
    for (_, rule) in program.proper_rules() {
        for atom in &rule.body {
            let Some(decl) = program.decl(&atom.predicate) else {
                continue;
            };
            if !decl.is_edb() {
                continue;
            }
            let objects: Vec<String> = atom
                .object_args()
                .iter()
                .map(|t| match t {
                    Term::Obj(c) => c.clone(),
                    other => unreachable!("object-ground rule has variable `{other}`"),
                })
                .collect();
            let fact = Fact {
                predicate: atom.predicate.clone(),
                objects,
                time: None,
            };
            if decl.is_temporal() {
                temporal.insert(fact);
            } else {
                rigid.insert(fact);
            }
        }
    }
}

struct Pair {
    m1: Materializer,
    m2: Materializer,
}

impl Pair {
    fn outputs_contained(&self, t: TimePoint, out1: &HashSet<u32>, out2: &HashSet<u32>) -> bool {
        let second: HashSet<Fact> = self.m2.facts_at_over(t, out2).into_iter().collect();
        self.m1
            .facts_at_over(t, out1)
            .iter()
            .all(|f| second.contains(f))
    }

    /// Facts at the last `span` time points up to `t`, as a comparable key.
    fn recent(&self, t: TimePoint, span: u64) -> Vec<Vec<String>> {
        let mut key = Vec::new();
        for m in [&self.m1, &self.m2] {
            for s in t.saturating_sub(span)..=t {
                let mut facts: Vec<String> = m
                    .facts_at(s)
                    .iter()
                    .map(|f| format!("{}@{}", f.predicate, f.objects.join(",")))
                    .collect();
                facts.sort();
                key.push(facts);
            }
        }
        key
    }
}

/// Checks `q1(D) ⊆ q2(D)` for every dataset `D` over the EDB atoms of both queries at
/// times `0..=max_time` and every set of rigid EDB atoms. Answers are compared at every
/// time point, following the empty continuation until it repeats.
pub fn brute_force_containment(q1: &Query, q2: &Query, max_time: TimePoint) -> Result<bool> {
    for q in [q1, q2] {
        require_fp(q.program())?;
        require_object_ground(q.program())?;
    }
    if q1.output() != q2.output() {
        return Err(Error::OutputMismatch {
            left: q1.output().into(),
            right: q2.output().into(),
        });
    }
    let mut rigid = BTreeSet::new();
    let mut temporal = BTreeSet::new();
    edb_patterns(q1, &mut rigid, &mut temporal);
    edb_patterns(q2, &mut rigid, &mut temporal);
    let atoms = rigid.len() + temporal.len();
    if atoms > MAX_ORACLE_ATOMS || max_time > MAX_ORACLE_TIME {
        return Err(Error::GuardExceeded(format!(
            "{atoms} EDB atoms and horizon {max_time} exceed {MAX_ORACLE_ATOMS} and {MAX_ORACLE_TIME}"
        )));
    }
    let c1 = Compiled::new(q1.program())?;
    let c2 = Compiled::new(q2.program())?;
    let span = c1.radius.max(c2.radius);
    let rigid: Vec<Fact> = rigid.into_iter().collect();
    let temporal: Vec<Fact> = temporal.into_iter().collect();

    for rmask in 0u32..1 << rigid.len() {
        let mut pair = Pair {
            m1: Materializer::new(c1.clone()),
            m2: Materializer::new(c2.clone()),
        };
        if [&pair.m1, &pair.m2]
            .iter()
            .any(|m| m.slice_times().next().is_some())
        {
            return Err(Error::Unsupported(
                "temporal facts in the program are not supported by the oracle".into(),
            ));
        }
        for (i, f) in rigid.iter().enumerate() {
            if rmask >> i & 1 == 1 {
                pair.m1.add_fact(f);
                pair.m2.add_fact(f);
            }
        }
        pair.m1.close_rigid();
        pair.m2.close_rigid();
        let out1: HashSet<u32> = pair.m1.pred_id(q1.output()).into_iter().collect();
        let out2: HashSet<u32> = pair.m2.pred_id(q2.output()).into_iter().collect();
        let search = Search {
            temporal: &temporal,
            max_time,
            span,
            out1: &out1,
            out2: &out2,
        };
        if !search.explore(pair, 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

struct Search<'a> {
    temporal: &'a [Fact],
    max_time: TimePoint,
    span: u64,
    out1: &'a HashSet<u32>,
    out2: &'a HashSet<u32>,
}

impl Search<'_> {
    fn explore(&self, pair: Pair, t: TimePoint) -> bool {
        for mask in 0u32..1 << self.temporal.len() {
            let mut next = Pair {
                m1: pair.m1.clone(),
                m2: pair.m2.clone(),
            };
            for (i, f) in self.temporal.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    let fact = Fact {
                        time: Some(t),
                        ..f.clone()
                    };
                    next.m1.add_fact(&fact);
                    next.m2.add_fact(&fact);
                }
            }
            next.m1.saturate_at(t);
            next.m2.saturate_at(t);
            if !next.outputs_contained(t, self.out1, self.out2) {
                return false;
            }
            let ok = if t < self.max_time {
                self.explore(next, t + 1)
            } else {
                self.continuation(next, t)
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Runs empty time points after the dataset ends until the recent history repeats.
    fn continuation(&self, mut pair: Pair, last: TimePoint) -> bool {
        let mut seen = HashSet::new();
        let mut t = last;
        while seen.insert(pair.recent(t, self.span)) {
            t += 1;
            pair.m1.saturate_at(t);
            pair.m2.saturate_at(t);
            if !pair.outputs_contained(t, self.out1, self.out2) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::subquery_at_radius;
    use crate::syntax::parse_query;

    const PROP: &str = ".decl A(time) edb .decl B(time) idb .decl P(time) idb .output P
        B(T) :- A(T). B(T+1) :- B(T). P(T) :- B(T).";

    #[test]
    fn proposition_against_window_zero() {
        let q = parse_query(PROP).unwrap();
        let q0 = subquery_at_radius(&q, 0).unwrap();
        assert!(!brute_force_containment(&q, &q0, 2).unwrap());
        assert!(brute_force_containment(&q0, &q, 2).unwrap());
        assert!(brute_force_containment(&q, &q, 3).unwrap());
    }

    #[test]
    fn extra_non_output_rule() {
        let q1 = parse_query(".decl A(time) edb .decl G(time) idb .decl H(time) idb .output G G(T) :- A(T).")
            .unwrap();
        let q2 = parse_query(
            ".decl A(time) edb .decl G(time) idb .decl H(time) idb .output G G(T) :- A(T). H(T) :- A(T).",
        )
        .unwrap();
        assert!(brute_force_containment(&q1, &q2, 4).unwrap());
    }

    #[test]
    fn late_answers_are_compared() {
        let q1 = parse_query(".decl A(time) edb .decl G(time) idb .output G G(T+3) :- A(T).")
            .unwrap();
        let q2 = parse_query(".decl A(time) edb .decl G(time) idb .output G").unwrap();
        assert!(!brute_force_containment(&q1, &q2, 1).unwrap());
    }

    #[test]
    fn guard() {
        let q = parse_query(PROP).unwrap();
        assert!(matches!(
            brute_force_containment(&q, &q, 5),
            Err(Error::GuardExceeded(_))
        ));
    }
}
