//! Uniform containment: a sufficient condition for window validity checked rule by rule.

use std::collections::BTreeSet;

use crate::analysis::{query_radius, require_fp, rule_radius, subquery_at_radius};
use crate::error::{Error, Result};
use crate::eval::entails;
use crate::model::{Atom, ExtendedDataset, Fact, Query, Rule, Term};

/// Freezes a rule into an extended dataset for its body and a fact for its head.
///
/// Object variables become fresh constants `o1, o2, ..` in order of first occurrence,
/// skipping names in `avoid`. The time variable becomes the least anchor keeping every
/// time argument non-negative.
pub fn freeze_rule_avoiding(rule: &Rule, avoid: &BTreeSet<&str>) -> Result<(ExtendedDataset, Fact)> {
    if rule.is_fact() {
        return Err(Error::Unsupported("cannot freeze a fact".into()));
    }
    let mut taken: BTreeSet<String> = avoid.iter().map(|s| s.to_string()).collect();
    taken.extend(rule.constants().into_iter().map(str::to_string));
    let mut fresh = Vec::new();
    let mut counter = 0usize;
    for v in rule.object_variables() {
        let name = loop {
            counter += 1;
            let candidate = format!("o{counter}");
            if !taken.contains(&candidate) {
                break candidate;
            }
        };
        fresh.push((v.to_string(), name));
    }
    let min_offset = rule
        .atoms()
        .filter_map(|a| match a.time_term() {
            Some(Term::TimeVar { offset, .. }) => Some(*offset),
            _ => None,
        })
        .min()
        .unwrap_or(0);
    let anchor = (-min_offset).max(0);
    let freeze = |atom: &Atom| -> Result<Fact> {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::ObjVar(v) => {
                    let (_, c) = fresh.iter().find(|(x, _)| x == v).expect("collected above");
                    Term::Obj(c.clone())
                }
                Term::TimeVar { offset, .. } => Term::Point((anchor + offset) as u64),
                other => other.clone(),
            })
            .collect();
        Fact::from_atom(&Atom::new(atom.predicate.clone(), args))
    };
    let body = rule.body.iter().map(freeze).collect::<Result<ExtendedDataset>>()?;
    Ok((body, freeze(&rule.head)?))
}

pub fn freeze_rule(rule: &Rule) -> Result<(ExtendedDataset, Fact)> {
    freeze_rule_avoiding(rule, &BTreeSet::new())
}

/// True iff every rule of radius above `w` is entailed, once frozen, by the rules of radius
/// at most `w`.
pub fn is_uniformly_valid(query: &Query, w: u64) -> Result<bool> {
    require_fp(query.program())?;
    let windowed = subquery_at_radius(query, w)?;
    let avoid = query.program().constants();
    for (_, rule) in query.program().proper_rules() {
        if rule_radius(rule) <= w {
            continue;
        }
        let (body, head) = freeze_rule_avoiding(rule, &avoid)?;
        if !entails(windowed.program(), &body, &head)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least uniformly valid window size. Never above the radius.
pub fn min_uniform_window(query: &Query) -> Result<u64> {
    let radius = query_radius(query)?;
    let (mut lo, mut hi) = (0, radius);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if is_uniformly_valid(query, mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}
