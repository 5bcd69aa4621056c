//! Containment of object-free queries by breadth-first search over the product automaton.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigUint;

use super::automaton::{OgAutomaton, StateId};
use crate::analysis::{
    ground_objects, program_radius, require_fp, require_object_ground, subquery_at_radius,
    Grounding, ObjectDomain,
};
use crate::error::{Error, Result};
use crate::model::{Dataset, Fact, Query, TimePoint};

/// Limits for the product search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of product states visited before aborting.
    pub state_budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            state_budget: 2_000_000,
        }
    }
}

/// Counterexample length bounds: `b_i = 1 + 2^(p_i (ρ_i + 2))` and `b = b1 b2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub p1: usize,
    pub p2: usize,
    pub rho1: u64,
    pub rho2: u64,
    pub b1: BigUint,
    pub b2: BigUint,
    pub b: BigUint,
}

impl BoundReport {
    pub fn new(p1: usize, rho1: u64, p2: usize, rho2: u64) -> Self {
        let bound = |p: usize, rho: u64| {
            let exp = p as u64 * (rho + 2);
            BigUint::from(1u8) + (BigUint::from(1u8) << exp)
        };
        let (b1, b2) = (bound(p1, rho1), bound(p2, rho2));
        BoundReport {
            b: &b1 * &b2,
            p1,
            p2,
            rho1,
            rho2,
            b1,
            b2,
        }
    }

    pub fn admits(&self, word_length: usize) -> bool {
        BigUint::from(word_length) <= self.b
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p1={}", self.p1)?;
        writeln!(f, "p2={}", self.p2)?;
        writeln!(f, "rho1={}", self.rho1)?;
        writeln!(f, "rho2={}", self.rho2)?;
        writeln!(f, "b1={}", self.b1)?;
        writeln!(f, "b2={}", self.b2)?;
        write!(f, "b={}", self.b)
    }
}

/// A dataset on which the first query has an answer the second lacks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub dataset: Dataset,
    pub time: TimePoint,
    pub witness: Fact,
    /// Length of the accepting word: the rigid symbol plus one symbol per time point.
    pub word_length: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentVerdict {
    pub contained: bool,
    pub counterexample: Option<Counterexample>,
    pub states_explored: usize,
    pub bound: BoundReport,
}

/// An object-free query with its output family, ready for automaton construction.
pub(crate) struct Normalized {
    pub grounding: Grounding,
    /// EDB predicates datasets may use; `None` admits all.
    pub allowed_edb: Option<BTreeSet<String>>,
}

impl Normalized {
    /// Grounds over `objects`. When `dataset_domain` is given, datasets may only mention
    /// its objects; constants of the query outside it never occur in datasets.
    pub(crate) fn new(
        query: &Query,
        objects: &ObjectDomain,
        dataset_domain: Option<&ObjectDomain>,
    ) -> Result<Self> {
        require_fp(query.program())?;
        require_temporal_output(query)?;
        let grounding = ground_objects(query, objects)?;
        let allowed_edb = dataset_domain.map(|domain| {
            grounding
                .program()
                .decls()
                .filter(|d| d.is_edb())
                .filter(|d| {
                    grounding
                        .origin(&d.name)
                        .is_some_and(|(_, objs)| objs.iter().all(|o| domain.contains(o)))
                })
                .map(|d| d.name.clone())
                .collect()
        });
        Ok(Normalized {
            grounding,
            allowed_edb,
        })
    }

    fn predicate_count(&self) -> usize {
        let mut preds: BTreeSet<&str> = self.grounding.program().used_predicates();
        preds.extend(self.grounding.outputs().iter().map(String::as_str));
        preds.len()
    }
}

fn require_temporal_output(query: &Query) -> Result<()> {
    if query.output_decl().is_temporal() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "window analysis needs a temporal output, `{}` is rigid",
            query.output()
        )))
    }
}

/// Joint alphabet over both automata; bit `i` of a joint mask selects `names[i]`.
struct Projection {
    names: Vec<String>,
    /// Own bit index of each joint position, per automaton.
    own: [Vec<Option<usize>>; 2],
}

impl Projection {
    fn new(l1: Vec<String>, l2: Vec<String>, allowed: Option<&BTreeSet<String>>) -> Result<Self> {
        let names: Vec<String> = l1
            .iter()
            .chain(&l2)
            .filter(|n| allowed.is_none_or(|a| a.contains(*n)))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if names.len() > 24 {
            return Err(Error::Unsupported(format!(
                "joint alphabet over {} predicates of one kind is too large",
                names.len()
            )));
        }
        let own = |l: &[String]| -> Vec<Option<usize>> {
            names.iter().map(|n| l.iter().position(|m| m == n)).collect()
        };
        Ok(Projection {
            own: [own(&l1), own(&l2)],
            names,
        })
    }

    fn project(&self, mask: u64, which: usize) -> u64 {
        self.own[which]
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .filter_map(|(_, o)| *o)
            .fold(0, |m, b| m | 1 << b)
    }

    /// Every joint mask, ordered lexicographically by the sorted predicate names it selects.
    fn symbols(&self) -> Vec<u64> {
        let mut masks: Vec<u64> = (0..1u64 << self.names.len()).collect();
        masks.sort_by_cached_key(|&m| self.selected(m));
        masks
    }

    fn selected(&self, mask: u64) -> Vec<&str> {
        (0..self.names.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.names[i].as_str())
            .collect()
    }
}

struct Node {
    pair: (StateId, StateId),
    parent: usize,
    symbol: u64,
    depth: usize,
}

/// Decides whether the first query's answers are contained in the second's on all
/// datasets of the admitted class.
pub(crate) fn contains_normalized(
    n1: &Normalized,
    n2: &Normalized,
    config: &SearchConfig,
) -> Result<ContainmentVerdict> {
    let out1: BTreeSet<&String> = n1.grounding.outputs().iter().collect();
    let out2: BTreeSet<&String> = n2.grounding.outputs().iter().collect();
    if out1 != out2 {
        return Err(Error::OutputMismatch {
            left: n1.grounding.outputs().join(","),
            right: n2.grounding.outputs().join(","),
        });
    }
    let outputs: Vec<String> = n1.grounding.outputs().to_vec();
    let mut a1 = OgAutomaton::new(n1.grounding.program(), &outputs)?;
    let mut a2 = OgAutomaton::new(n2.grounding.program(), &outputs)?;
    let bound = BoundReport::new(
        n1.predicate_count(),
        program_radius(n1.grounding.program()),
        n2.predicate_count(),
        program_radius(n2.grounding.program()),
    );
    let allowed = match (&n1.allowed_edb, &n2.allowed_edb) {
        (Some(x), Some(y)) => Some(x.union(y).cloned().collect::<BTreeSet<_>>()),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    };
    let names = |it: &mut dyn Iterator<Item = &str>| it.map(str::to_string).collect::<Vec<_>>();
    let rigid = Projection::new(
        names(&mut a1.rigid_edb()),
        names(&mut a2.rigid_edb()),
        allowed.as_ref(),
    )?;
    let temporal = Projection::new(
        names(&mut a1.temporal_edb()),
        names(&mut a2.temporal_edb()),
        allowed.as_ref(),
    )?;
    let temporal_symbols = temporal.symbols();

    let violates = |a1: &OgAutomaton, a2: &OgAutomaton, pair: (StateId, StateId)| {
        outputs
            .iter()
            .find(|o| a1.holds_now(pair.0, o) && !a2.holds_now(pair.1, o))
            .cloned()
    };

    let mut nodes = vec![Node {
        pair: (a1.initial(), a2.initial()),
        parent: usize::MAX,
        symbol: 0,
        depth: 0,
    }];
    let mut visited: HashMap<(StateId, StateId), ()> = HashMap::from([(nodes[0].pair, ())]);
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut found: Option<(usize, String)> = None;

    'search: {
        for mask in rigid.symbols() {
            let pair = (
                a1.step_rigid(rigid.project(mask, 0)),
                a2.step_rigid(rigid.project(mask, 1)),
            );
            if visited.insert(pair, ()).is_none() {
                nodes.push(Node {
                    pair,
                    parent: 0,
                    symbol: mask,
                    depth: 1,
                });
                queue.push_back(nodes.len() - 1);
            }
        }
        while let Some(i) = queue.pop_front() {
            let (pair, depth) = (nodes[i].pair, nodes[i].depth);
            for &mask in &temporal_symbols {
                let next = (
                    a1.step_temporal(pair.0, temporal.project(mask, 0)),
                    a2.step_temporal(pair.1, temporal.project(mask, 1)),
                );
                if visited.insert(next, ()).is_some() {
                    continue;
                }
                if visited.len() > config.state_budget {
                    return Err(Error::BudgetExceeded {
                        budget: config.state_budget,
                        explored: visited.len(),
                        depth,
                    });
                }
                nodes.push(Node {
                    pair: next,
                    parent: i,
                    symbol: mask,
                    depth: depth + 1,
                });
                let id = nodes.len() - 1;
                if let Some(o) = violates(&a1, &a2, next) {
                    found = Some((id, o));
                    break 'search;
                }
                queue.push_back(id);
            }
        }
    }

    let states_explored = visited.len();
    let Some((leaf, output)) = found else {
        return Ok(ContainmentVerdict {
            contained: true,
            counterexample: None,
            states_explored,
            bound,
        });
    };

    let mut path = Vec::new();
    let mut i = leaf;
    while i != 0 {
        path.push(nodes[i].symbol);
        i = nodes[i].parent;
    }
    path.reverse();
    let word_length = path.len();
    let decode = |name: &str, time: Option<TimePoint>| {
        n1.grounding.decode(&Fact {
            predicate: name.to_string(),
            objects: Vec::new(),
            time,
        })
    };
    let mut dataset = Dataset::new();
    for name in rigid.selected(path[0]) {
        dataset.insert(decode(name, None));
    }
    for (t, &mask) in path[1..].iter().enumerate() {
        for name in temporal.selected(mask) {
            dataset.insert(decode(name, Some(t as TimePoint)));
        }
    }
    let time = (word_length - 2) as TimePoint;
    Ok(ContainmentVerdict {
        contained: false,
        counterexample: Some(Counterexample {
            dataset,
            time,
            witness: decode(&output, Some(time)),
            word_length,
        }),
        states_explored,
        bound,
    })
}

/// Whether `q1 ⊑ q2` over all datasets, for object-ground queries with the same output.
pub fn og_containment(q1: &Query, q2: &Query, config: &SearchConfig) -> Result<ContainmentVerdict> {
    check_outputs(q1, q2)?;
    require_object_ground(q1.program())?;
    require_object_ground(q2.program())?;
    let objects = shared_constants(q1, q2);
    contains_normalized(
        &Normalized::new(q1, &objects, None)?,
        &Normalized::new(q2, &objects, None)?,
        config,
    )
}

fn shared_constants(q1: &Query, q2: &Query) -> ObjectDomain {
    ObjectDomain::new(q1.program().constants().into_iter().chain(q2.program().constants()))
}

fn check_outputs(q1: &Query, q2: &Query) -> Result<()> {
    if q1.output() != q2.output() || q1.output_decl().sorts != q2.output_decl().sorts {
        return Err(Error::OutputMismatch {
            left: q1.output().to_string(),
            right: q2.output().to_string(),
        });
    }
    Ok(())
}

/// Whether window size `w` is valid for an object-ground query.
pub fn og_window_valid(query: &Query, w: u64, config: &SearchConfig) -> Result<ContainmentVerdict> {
    og_containment(query, &subquery_at_radius(query, w)?, config)
}

/// Whether window size `w` is valid over datasets mentioning only objects of `domain`.
pub fn fixed_domain_window_valid(
    query: &Query,
    w: u64,
    domain: &ObjectDomain,
    config: &SearchConfig,
) -> Result<ContainmentVerdict> {
    let windowed = subquery_at_radius(query, w)?;
    let objects = ObjectDomain::new(
        domain
            .objects()
            .iter()
            .map(String::as_str)
            .chain(query.program().constants()),
    );
    if domain.is_empty() && !crate::analysis::is_object_ground(query.program()) {
        return Err(Error::EmptyDomain);
    }
    contains_normalized(
        &Normalized::new(query, &objects, Some(domain))?,
        &Normalized::new(&windowed, &objects, Some(domain))?,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;
    use crate::syntax::parse_query;

    const PROP: &str = ".decl A(time) edb .decl B(time) idb .decl P(time) idb .output P
        B(T) :- A(T). B(T+1) :- B(T). P(T) :- B(T).";

    #[test]
    fn bound_formula() {
        let b = BoundReport::new(2, 1, 3, 0);
        assert_eq!(b.b1, BigUint::from(65u32));
        assert_eq!(b.b2, BigUint::from(65u32));
        assert_eq!(b.b, BigUint::from(65u32 * 65));
    }

    #[test]
    fn proposition_window_zero_fails() {
        let q = parse_query(PROP).unwrap();
        let cfg = SearchConfig::default();
        let v = og_window_valid(&q, 0, &cfg).unwrap();
        assert!(!v.contained);
        let cex = v.counterexample.unwrap();
        assert_eq!(cex.dataset, Dataset::from([Fact::at("A", 0)]));
        assert_eq!(cex.witness, Fact::at("P", 1));
        assert!(v.bound.admits(cex.word_length));

        let full = evaluate(&q, &cex.dataset, cex.time).unwrap();
        let q0 = subquery_at_radius(&q, 0).unwrap();
        let windowed = evaluate(&q0, &cex.dataset, cex.time).unwrap();
        assert!(full.contains(&cex.witness) && !windowed.contains(&cex.witness));

        assert!(og_window_valid(&q, 1, &cfg).unwrap().contained);
    }

    #[test]
    fn reflexive() {
        let q = parse_query(PROP).unwrap();
        assert!(og_containment(&q, &q, &SearchConfig::default()).unwrap().contained);
    }

    #[test]
    fn mismatched_outputs() {
        let q1 = parse_query(".decl A(time) edb .decl G(time) idb .output G G(T) :- A(T).").unwrap();
        let q2 = parse_query(".decl A(time) edb .decl H(time) idb .output H H(T) :- A(T).").unwrap();
        assert!(matches!(
            og_containment(&q1, &q2, &SearchConfig::default()),
            Err(Error::OutputMismatch { .. })
        ));
    }

    #[test]
    fn budget_abort() {
        let q = parse_query(PROP).unwrap();
        let tiny = SearchConfig { state_budget: 1 };
        assert!(matches!(
            og_window_valid(&q, 0, &tiny),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn fixed_domain_needs_objects() {
        let q = parse_query(
            ".decl A(object, time) edb .decl G(object, time) idb .output G G(X, T+1) :- A(X, T).",
        )
        .unwrap();
        assert!(matches!(
            fixed_domain_window_valid(&q, 0, &ObjectDomain::default(), &SearchConfig::default()),
            Err(Error::EmptyDomain)
        ));
        let v = fixed_domain_window_valid(&q, 0, &ObjectDomain::new(["a"]), &SearchConfig::default())
            .unwrap();
        assert!(!v.contained);
        let cex = v.counterexample.unwrap();
        assert_eq!(cex.witness, Fact::temporal("G", ["a"], 1));
    }
}
