mod common;

use std::collections::BTreeSet;

use common::{NETWORK, UNIFORM1};
use tdlog::analysis::ObjectDomain;
use tdlog::regex::{regex_to_query, Alphabet};
use tdlog::syntax::parse_query;
use tdlog::window::{
    fixed_domain_window_valid, freeze_rule, merge_for_window_reduction, min_uniform_window,
    og_window_valid, SearchConfig,
};
use tdlog::{Dataset, Fact};

fn regex_query(src: &str, alphabet: &str) -> tdlog::Query {
    let alphabet: Alphabet = alphabet.parse().unwrap();
    regex_to_query(&src.parse().unwrap(), &alphabet).unwrap()
}

fn merged_valid(r1: &str, r2: &str, alphabet: &str) -> bool {
    let (q, w) = merge_for_window_reduction(&regex_query(r1, alphabet), &regex_query(r2, alphabet)).unwrap();
    og_window_valid(&q, w, &SearchConfig::default()).unwrap().contained
}

#[test]
fn freezing_the_three_step_attack_rule() {
    let q = parse_query(NETWORK).unwrap();
    let (body, head) = freeze_rule(&q.program().rules()[1]).unwrap();
    let attk = |t| Fact::temporal("Attk", ["o1", "o2"], t);
    assert_eq!(body, Dataset::from([attk(0), attk(1), attk(2)]));
    assert_eq!(head, Fact::temporal("Black", ["o1"], 2));
}

#[test]
fn freezing_anchors_at_the_earliest_atom() {
    let shifted = |head: i64, body: i64| {
        parse_query(&format!(
            ".decl A(object, time) edb .decl P(object, time) idb .output P
             P(X, T{head:+}) :- A(X, T{body:+})."
        ))
        .unwrap()
    };
    let (b1, h1) = freeze_rule(&shifted(1, 0).program().rules()[0]).unwrap();
    let (b2, h2) = freeze_rule(&shifted(0, -1).program().rules()[0]).unwrap();
    assert_eq!((b1, h1), (b2, h2));
}

#[test]
fn uniform_windows() {
    assert_eq!(min_uniform_window(&parse_query(UNIFORM1).unwrap()).unwrap(), 0);
    assert_eq!(min_uniform_window(&parse_query(NETWORK).unwrap()).unwrap(), 2);
}

#[test]
fn merged_self_containment_is_valid() {
    assert!(merged_valid("ab|a", "ab|a", "a,b"));
}

#[test]
fn merged_valid_iff_contained() {
    assert!(merged_valid("ab", "a(b|c)", "a,b,c"));
    assert!(!merged_valid("a|b", "a", "a,b"));
}

#[test]
fn fixed_domain_agrees_with_og_on_constant_free_queries() {
    let q = parse_query(
        ".decl A(time) edb .decl B(time) edb .decl I(time) idb .decl P(time) idb .output P
         I(T+1) :- A(T).
         P(T) :- I(T), B(T).
         P(T+2) :- A(T), B(T+1).",
    )
    .unwrap();
    let config = SearchConfig::default();
    let domain = ObjectDomain::new(BTreeSet::<&str>::new());
    for w in 0..=2 {
        assert_eq!(
            fixed_domain_window_valid(&q, w, &domain, &config).unwrap().contained,
            og_window_valid(&q, w, &config).unwrap().contained,
            "w={w}"
        );
    }
}

#[test]
fn succ_free_example_has_window_one_over_two_nodes() {
    let src: String = NETWORK
        .lines()
        .filter(|l| !l.contains("Succ"))
        .map(|l| format!("{l}\n"))
        .collect();
    let q = parse_query(&src).unwrap();
    let domain = ObjectDomain::new(["n1", "n2"]);
    let config = SearchConfig::default();
    assert!(fixed_domain_window_valid(&q, 1, &domain, &config).unwrap().contained);
    assert!(!fixed_domain_window_valid(&q, 0, &domain, &config).unwrap().contained);

    use rand::Rng;
    let windowed = tdlog::analysis::subquery_at_radius(&q, 1).unwrap();
    let mut rng = common::rng(11);
    for _ in 0..300 {
        let mut d = Dataset::new();
        for t in 0..6 {
            for x in ["n1", "n2"] {
                for y in ["n1", "n2"] {
                    if rng.gen_bool(0.3) {
                        d.insert(Fact::temporal("Brst", [x, y], t));
                    }
                }
            }
        }
        let full = tdlog::eval::evaluate(&q, &d, 6).unwrap();
        assert_eq!(tdlog::eval::evaluate(&windowed, &d, 6).unwrap(), full);
    }
}
