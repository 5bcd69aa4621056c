mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use tdlog::analysis::query_radius;
use tdlog::eval::{entails, entails_via_grounding, evaluate, materialize};
use tdlog::regex::{matches, succinct_regex_to_query, word_to_dataset, Alphabet, Regex, OUTPUT};
use tdlog::stream::{run_stream, Engine, EngineParams};
use tdlog::syntax::{parse_dataset, parse_query, serialize_facts};
use tdlog::window::{is_uniformly_valid, og_window_valid, SearchConfig};
use tdlog::{Dataset, Fact, Stream, TimePoint};

fn shift(facts: &Dataset, by: TimePoint) -> Dataset {
    facts
        .iter()
        .map(|f| Fact {
            time: f.time.map(|t| t + by),
            ..f.clone()
        })
        .collect()
}

fn split(facts: &Dataset) -> (Dataset, Stream) {
    let (rigid, temporal): (Dataset, Dataset) = facts.iter().cloned().partition(|f| f.time.is_none());
    (rigid, Stream::from_facts(temporal).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn query_text_round_trips(seed in any::<u64>()) {
        let q = random_fp_query(&mut rng(seed));
        prop_assert_eq!(parse_query(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn fact_text_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_fp_query(&mut r);
        let d = random_edb_facts(&mut r, &q, 3, 0.3);
        prop_assert_eq!(parse_dataset(&serialize_facts(&d), Some(q.program())).unwrap(), d);
    }

    #[test]
    fn answers_grow_with_data(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_fp_query(&mut r);
        let small = random_edb_facts(&mut r, &q, 4, 0.2);
        let mut big = small.clone();
        big.extend(random_edb_facts(&mut r, &q, 4, 0.2));
        let (a, b) = (evaluate(&q, &small, 6).unwrap(), evaluate(&q, &big, 6).unwrap());
        prop_assert!(a.is_subset(&b));
    }

    #[test]
    fn shifting_data_shifts_answers(seed in any::<u64>(), by in 1u64..4) {
        let mut r = rng(seed);
        let q = random_fp_query(&mut r);
        let d = random_edb_facts(&mut r, &q, 3, 0.3);
        let shifted = evaluate(&q, &shift(&d, by), 6 + by).unwrap();
        prop_assert_eq!(shifted, shift(&evaluate(&q, &d, 6).unwrap(), by));
    }

    #[test]
    fn time_grounding_preserves_entailment(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_fp_query(&mut r);
        let d = random_edb_facts(&mut r, &q, 3, 0.3);
        let derived = materialize(q.program(), &d, 5).unwrap().all();
        for goal in derived.iter().filter(|f| f.time.is_some_and(|t| t <= 5)).take(4) {
            prop_assert!(entails_via_grounding(&q, &d, goal).unwrap());
            prop_assert!(entails(q.program(), &d, goal).unwrap());
        }
    }

    #[test]
    fn engine_memory_stays_in_window(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_fp_query(&mut r);
        let w = r.gen_range(0..=query_radius(&q).unwrap());
        let (rigid, stream) = split(&random_edb_facts(&mut r, &q, 6, 0.3));
        let mut engine = Engine::new(EngineParams::full(q, w).unwrap(), &rigid).unwrap();
        for tau in 0..7 {
            engine.push_tick(&stream.at(tau)).unwrap();
            let memory = engine.memory();
            prop_assert!(memory.temporal.len() as u64 <= w + 1);
            for t in memory.temporal.keys() {
                prop_assert!(*t <= tau && *t + w >= tau, "slice {} kept at tick {}", t, tau);
            }
        }
    }

    #[test]
    fn streaming_is_deterministic(seed in any::<u64>(), full in any::<bool>()) {
        let mut r = rng(seed);
        let q = random_fp_query(&mut r);
        let w = r.gen_range(0..=query_radius(&q).unwrap());
        let (rigid, stream) = split(&random_edb_facts(&mut r, &q, 6, 0.3));
        let params = if full {
            EngineParams::full(q, w).unwrap()
        } else {
            EngineParams::output_only(q, w).unwrap()
        };
        let first = run_stream(params.clone(), &rigid, &stream, 7).unwrap();
        prop_assert_eq!(first, run_stream(params, &rigid, &stream, 7).unwrap());
    }

    #[test]
    fn regex_text_round_trips(seed in any::<u64>(), size in 1usize..10, k in 2u64..6) {
        let mut r = rng(seed);
        let base = random_regex_of_size(&mut r, size);
        let re = if r.gen_bool(0.3) { Regex::power(base, k).unwrap() } else { base };
        prop_assert_eq!(re.to_string().parse::<Regex>().unwrap(), re);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_validity_is_sound(seed in any::<u64>()) {
        let q = random_og_query(&mut rng(seed));
        for w in 0..=query_radius(&q).unwrap() {
            if is_uniformly_valid(&q, w).unwrap() {
                prop_assert!(og_window_valid(&q, w, &SearchConfig::default()).unwrap().contained);
            }
        }
    }

    #[test]
    fn succinct_powers_match_expansion(seed in any::<u64>(), size in 1usize..4, k in 2u64..4) {
        let re = Regex::power(random_regex_of_size(&mut rng(seed), size), k).unwrap();
        let alphabet = Alphabet::new(['a', 'b']).unwrap();
        let q = succinct_regex_to_query(&re, &alphabet).unwrap();
        for word in words(&['a', 'b'], 6) {
            let end = word.len() as TimePoint;
            let d = word_to_dataset(&word, 0, &alphabet).unwrap();
            let hit = evaluate(&q, &d, end).unwrap().contains(&Fact::at(OUTPUT, end));
            prop_assert_eq!(hit, matches(&re, &word), "{} on {:?}", re, word);
        }
    }
}
