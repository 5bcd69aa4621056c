//! Seeded generators and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tdlog::regex::Regex;
use tdlog::{Atom, Dataset, Fact, PredKind, PredicateDecl, Program, Query, Rule, Term, TimePoint};

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const NETWORK: &str = "
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

pub const UNIFORM1: &str = "
    .decl A(time) edb
    .decl P(time) idb
    .output P
    P(T) :- A(T).
    P(T) :- A(T-1), A(T).
";

/// A fact persists forever once seen.
pub const PERSISTENCE: &str = "
    .decl A(time) edb
    .decl B(time) idb
    .decl P(time) idb
    .output P
    B(T) :- A(T).
    B(T+1) :- B(T).
    P(T) :- B(T).
";

pub const OBJECTS: [&str; 3] = ["c0", "c1", "d0"];
const CONSTANTS: [&str; 2] = ["c0", "c1"];
const VARIABLES: [&str; 3] = ["X", "Y", "Z"];

fn time(offset: i64) -> Term {
    Term::time("T", offset)
}

fn object_term(rng: &mut TestRng) -> Term {
    if rng.gen_bool(0.8) {
        Term::var(*VARIABLES.choose(rng).unwrap())
    } else {
        Term::obj(*CONSTANTS.choose(rng).unwrap())
    }
}

fn atom_for(rng: &mut TestRng, decl: &PredicateDecl, offset: i64) -> Atom {
    let mut args: Vec<Term> = (0..decl.object_arity()).map(|_| object_term(rng)).collect();
    if decl.is_temporal() {
        args.push(time(offset));
    }
    Atom::new(decl.name.clone(), args)
}

/// A random forward-propagating query with at most five rules over at most three EDB and
/// two temporal IDB predicates. The output is `I0`.
pub fn random_fp_query(rng: &mut TestRng) -> Query {
    loop {
        let mut edbs = Vec::new();
        for i in 0..rng.gen_range(1..=3) {
            let name = format!("E{i}");
            edbs.push(if rng.gen_bool(0.75) {
                PredicateDecl::temporal(name, rng.gen_range(0..=2), PredKind::Edb)
            } else {
                PredicateDecl::rigid(name, rng.gen_range(1..=2), PredKind::Edb)
            });
        }
        let mut idbs = vec![PredicateDecl::temporal("I0", rng.gen_range(0..=2), PredKind::Idb)];
        if rng.gen_bool(0.7) {
            idbs.push(PredicateDecl::temporal("I1", rng.gen_range(0..=2), PredKind::Idb));
        }
        let all: Vec<&PredicateDecl> = edbs.iter().chain(&idbs).collect();
        let temporal: Vec<&PredicateDecl> = all.iter().copied().filter(|d| d.is_temporal()).collect();

        let mut rules = Vec::new();
        for _ in 0..rng.gen_range(1..=5) {
            let head_decl = idbs.choose(rng).unwrap();
            let h: i64 = rng.gen_range(0..=2);
            let mut body = Vec::new();
            for j in 0..rng.gen_range(1..=3) {
                let decl = if j == 0 {
                    *temporal.choose(rng).unwrap()
                } else {
                    *all.choose(rng).unwrap()
                };
                let offset = h - rng.gen_range(0..=2);
                body.push(atom_for(rng, decl, offset));
            }
            let body_vars: Vec<String> = body
                .iter()
                .flat_map(|a| a.object_args().to_vec())
                .filter_map(|t| match t {
                    Term::ObjVar(v) => Some(v),
                    _ => None,
                })
                .collect();
            let mut head_args: Vec<Term> = (0..head_decl.object_arity())
                .map(|_| match body_vars.choose(rng) {
                    Some(v) if rng.gen_bool(0.85) => Term::var(v.clone()),
                    _ => Term::obj(*CONSTANTS.choose(rng).unwrap()),
                })
                .collect();
            head_args.push(time(h));
            rules.push(Rule::new(Atom::new(head_decl.name.clone(), head_args), body));
        }
        let decls: Vec<PredicateDecl> = edbs.iter().chain(&idbs).cloned().collect();
        if let Ok(q) = Query::new(Program::new(decls, rules), "I0") {
            return q;
        }
    }
}

/// Random EDB facts over [`OBJECTS`] and the query's constants: rigid facts, and temporal
/// facts at times `0..=max_time`.
pub fn random_edb_facts(rng: &mut TestRng, query: &Query, max_time: TimePoint, density: f64) -> Dataset {
    let mut pool: Vec<String> = OBJECTS.iter().map(|s| s.to_string()).collect();
    for c in query.program().constants() {
        if !pool.iter().any(|p| p == c) {
            pool.push(c.to_string());
        }
    }
    let mut out = Dataset::new();
    for decl in query.program().decls().filter(|d| d.is_edb()) {
        let tuples = tuples(&pool, decl.object_arity());
        if decl.is_rigid() {
            for t in &tuples {
                if rng.gen_bool(density) {
                    out.insert(Fact::rigid(decl.name.clone(), t.clone()));
                }
            }
        } else {
            for time in 0..=max_time {
                for t in &tuples {
                    if rng.gen_bool(density) {
                        out.insert(Fact::temporal(decl.name.clone(), t.clone(), time));
                    }
                }
            }
        }
    }
    out
}

pub fn tuples(pool: &[String], arity: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<String>| {
                pool.iter().map(move |o| {
                    let mut t = prefix.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// Object-ground signature used by [`random_og_query`]: three ground temporal EDB atoms
/// `A`, `B`, `C(k)` and the rigid atom `R`, which keeps pairs inside the oracle guard.
fn og_decls() -> Vec<PredicateDecl> {
    vec![
        PredicateDecl::temporal("A", 0, PredKind::Edb),
        PredicateDecl::temporal("B", 0, PredKind::Edb),
        PredicateDecl::temporal("C", 1, PredKind::Edb),
        PredicateDecl::rigid("R", 0, PredKind::Edb),
        PredicateDecl::temporal("P", 0, PredKind::Idb),
        PredicateDecl::temporal("I", 0, PredKind::Idb),
        PredicateDecl::temporal("J", 1, PredKind::Idb),
    ]
}

fn og_atom(name: &str, offset: i64) -> Atom {
    match name {
        "C" | "J" => Atom::new(name, vec![Term::obj("k"), time(offset)]),
        "R" => Atom::new(name, vec![]),
        _ => Atom::new(name, vec![time(offset)]),
    }
}

fn random_og_rule(rng: &mut TestRng) -> Rule {
    let head = *["P", "P", "I", "J"].choose(rng).unwrap();
    random_og_rule_with_head(rng, head)
}

fn random_og_rule_with_head(rng: &mut TestRng, head: &str) -> Rule {
    let h: i64 = rng.gen_range(0..=2);
    let mut body = Vec::new();
    for j in 0..rng.gen_range(1..=3) {
        let name = if j == 0 {
            ["A", "B", "C", "I", "J"].choose(rng).unwrap()
        } else {
            ["A", "B", "C", "R", "I", "J", "P"].choose(rng).unwrap()
        };
        let offset = h - rng.gen_range(0..=2);
        body.push(og_atom(name, offset));
    }
    Rule::new(og_atom(head, h), body)
}

fn og_query(rules: Vec<Rule>) -> Query {
    Query::new(Program::new(og_decls(), rules), "P").expect("generated og query is valid")
}

/// A random object-ground fp query with one to four rules and output `P`.
pub fn random_og_query(rng: &mut TestRng) -> Query {
    let mut rules: Vec<Rule> = (0..rng.gen_range(1..=4)).map(|_| random_og_rule(rng)).collect();
    if !rules.iter().any(|r| r.head.predicate == "P") {
        rules.push(random_og_rule_with_head(rng, "P"));
    }
    og_query(rules)
}

/// Pairs of og queries with the same output, mixing related and unrelated pairs so both
/// verdicts occur.
pub fn random_og_pair(rng: &mut TestRng) -> (Query, Query) {
    let q1 = random_og_query(rng);
    let rules = q1.program().rules().to_vec();
    let q2 = match rng.gen_range(0..4) {
        0 => {
            let radius = tdlog::analysis::query_radius(&q1).unwrap();
            tdlog::analysis::subquery_at_radius(&q1, rng.gen_range(0..=radius)).unwrap()
        }
        1 => {
            let mut r = rules;
            let i = rng.gen_range(0..r.len());
            r.remove(i);
            og_query(r)
        }
        2 => {
            let mut r = rules;
            r.push(random_og_rule(rng));
            og_query(r)
        }
        _ => random_og_query(rng),
    };
    if rng.gen_bool(0.5) {
        (q1, q2)
    } else {
        (q2, q1)
    }
}

pub fn random_regex_of_size(rng: &mut TestRng, size: usize) -> Regex {
    if size == 1 {
        return match rng.gen_range(0..10) {
            0 => Regex::Epsilon,
            1 => Regex::Empty,
            2..=5 => Regex::symbol('a'),
            _ => Regex::symbol('b'),
        };
    }
    if size == 2 || rng.gen_bool(0.25) {
        return Regex::plus(random_regex_of_size(rng, size - 1));
    }
    let left = rng.gen_range(1..size - 1);
    let (l, r) = (
        random_regex_of_size(rng, left),
        random_regex_of_size(rng, size - 1 - left),
    );
    if rng.gen_bool(0.5) {
        Regex::union(l, r)
    } else {
        Regex::concat(l, r)
    }
}

/// `count` distinct power-free regexes of size at most `max_size` over `{a, b}`.
pub fn regex_corpus(seed: u64, count: usize, max_size: usize) -> Vec<Regex> {
    let mut rng = rng(seed);
    let mut out: Vec<Regex> = Vec::new();
    while out.len() < count {
        let size = rng.gen_range(1..=max_size);
        let r = random_regex_of_size(&mut rng, size);
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

/// All words over `alphabet` of length at most `max_len`, shortest first.
pub fn words(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<char>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&c| {
                    let mut next = w.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
