//! Window validity: deciding when a bounded memory window preserves a query's answers.
//!
//! A window size `w` is valid for a query `Q` when `Q` and its subquery `Q^w` (rules of
//! radius at most `w`) compute the same answers on every dataset. Several methods are
//! offered, trading completeness for cost:
//!
//! - [`WindowMethod::Radius`] returns the radius, which is always valid.
//! - [`WindowMethod::Uniform`] checks a sound rule-by-rule condition.
//! - [`WindowMethod::ExactOg`] is exact for object-ground queries.
//! - [`WindowMethod::ExactFixed`] is exact over a fixed finite object domain.

mod automaton;
mod brute;
mod containment;
mod merge;
mod uniform;

pub use automaton::{AlphabetSymbol, AutomatonState, OgAutomaton, StateId, SymbolKind};
pub use brute::{brute_force_containment, MAX_ORACLE_ATOMS, MAX_ORACLE_TIME};
pub use containment::{
    fixed_domain_window_valid, og_containment, og_window_valid, BoundReport, ContainmentVerdict,
    Counterexample, SearchConfig,
};
pub use merge::merge_for_window_reduction;
pub use uniform::{freeze_rule, freeze_rule_avoiding, is_uniformly_valid, min_uniform_window};

use crate::analysis::{query_radius, ObjectDomain};
use crate::error::Result;
use crate::model::Query;

/// The trivially valid window: the query's radius.
pub fn radius_window(query: &Query) -> Result<u64> {
    query_radius(query)
}

/// How window validity is decided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WindowMethod {
    Radius,
    Uniform,
    ExactOg,
    ExactFixed(ObjectDomain),
}

/// Whether `w` is valid for `query` according to `method`.
///
/// `Radius` and `Uniform` are sound but incomplete: `false` means "not shown valid".
pub fn window_valid(query: &Query, w: u64, method: &WindowMethod, config: &SearchConfig) -> Result<bool> {
    Ok(match method {
        WindowMethod::Radius => w >= radius_window(query)?,
        WindowMethod::Uniform => w >= radius_window(query)? || is_uniformly_valid(query, w)?,
        WindowMethod::ExactOg => og_window_valid(query, w, config)?.contained,
        WindowMethod::ExactFixed(domain) => {
            fixed_domain_window_valid(query, w, domain, config)?.contained
        }
    })
}

/// Least window size valid according to `method`, found by binary search over `0..=radius`.
///
/// Validity is monotone in `w`, so bisection is exact for the exact methods.
pub fn min_valid_window(query: &Query, method: &WindowMethod, config: &SearchConfig) -> Result<u64> {
    let radius = radius_window(query)?;
    match method {
        WindowMethod::Radius => Ok(radius),
        WindowMethod::Uniform => min_uniform_window(query),
        _ => {
            let (mut lo, mut hi) = (0, radius);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if window_valid(query, mid, method, config)? {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(lo)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_query;

    #[test]
    fn methods_on_persistence() {
        let q = parse_query(
            ".decl A(time) edb .decl B(time) idb .decl P(time) idb .output P
             B(T) :- A(T). B(T+1) :- B(T). P(T) :- B(T).",
        )
        .unwrap();
        let config = SearchConfig::default();
        assert_eq!(min_valid_window(&q, &WindowMethod::Radius, &config).unwrap(), 1);
        assert_eq!(min_valid_window(&q, &WindowMethod::Uniform, &config).unwrap(), 1);
        assert_eq!(min_valid_window(&q, &WindowMethod::ExactOg, &config).unwrap(), 1);
    }

    #[test]
    fn exact_beats_radius() {
        let q = parse_query(
            ".decl A(time) edb .decl P(time) idb .output P
             P(T) :- A(T). P(T) :- A(T-1), A(T).",
        )
        .unwrap();
        let config = SearchConfig::default();
        assert_eq!(min_valid_window(&q, &WindowMethod::Radius, &config).unwrap(), 1);
        assert_eq!(min_valid_window(&q, &WindowMethod::ExactOg, &config).unwrap(), 0);
    }
}
