//! Forward-propagating temporal Datalog.
//!
//! The crate parses sorted temporal programs, evaluates them over datasets,
//! runs them incrementally over streams with a bounded window, and decides or
//! approximates which window sizes are safe for a query.

pub mod analysis;
pub mod error;
pub mod eval;
pub mod model;
pub mod regex;
pub mod stream;
pub mod syntax;
pub mod window;

pub use error::{Error, ParseError, Result, SourceSpan};
pub use model::{
    Atom, Dataset, ExtendedDataset, Fact, FactSet, PredKind, PredicateDecl, Program, Query, Rule,
    Sort, Stream, Term, TimePoint,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/programs.md")]
    mod programs {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/streaming.md")]
    mod streaming {}
    #[doc = include_str!("../../../book/src/window-validity.md")]
    mod window_validity {}
    #[doc = include_str!("../../../book/src/regex.md")]
    mod regex {}
}
