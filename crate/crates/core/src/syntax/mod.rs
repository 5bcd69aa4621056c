//! Text formats: `.tdl` programs, `.facts` datasets and `.stream` files.
//!
//! Serialization is canonical: declarations sorted by name, then the output
//! directive, then rules in program order; fact sets print one sorted fact per line.

mod lexer;
mod parser;

pub use parser::{
    parse_dataset, parse_dataset_in, parse_program, parse_query, parse_query_in, parse_stream,
    parse_stream_in,
};

use crate::model::{Fact, Program, Query, Stream};

pub fn serialize_query(query: &Query) -> String {
    query.to_string()
}

pub fn serialize_program(program: &Program) -> String {
    program.to_string()
}

pub fn serialize_facts<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> String {
    let mut sorted: Vec<&Fact> = facts.into_iter().collect();
    sorted.sort();
    sorted.dedup();
    sorted.iter().map(|f| format!("{f}.\n")).collect()
}

pub fn serialize_stream(stream: &Stream) -> String {
    stream.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FactSet;

    #[test]
    fn minimal_query_round_trips() {
        let src = ".decl A(time) edb  .decl G(time) idb  .output G  G(T) :- A(T).";
        let q = parse_query(src).unwrap();
        assert_eq!(q.program().rules().len(), 1);
        let text = serialize_query(&q);
        assert_eq!(
            text,
            ".decl A(time) edb\n.decl G(time) idb\n.output G\nG(T) :- A(T).\n"
        );
        assert_eq!(parse_query(&text).unwrap(), q);
    }

    #[test]
    fn datasets_deduplicate_and_round_trip() {
        let d = parse_dataset("A(0). A(0).", None).unwrap();
        assert_eq!(d.len(), 1);
        let d: FactSet = parse_dataset("Brst(n1,n2,3).", None).unwrap();
        assert_eq!(parse_dataset(&serialize_facts(&d), None).unwrap(), d);
    }

    #[test]
    fn stream_round_trip() {
        let s = parse_stream("B(a, 2). A(0). A(2).", None).unwrap();
        assert_eq!(s.at(2).len(), 2);
        assert_eq!(parse_stream(&serialize_stream(&s), None).unwrap(), s);
    }
}
