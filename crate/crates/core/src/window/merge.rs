//! Reduction from containment to window validity.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::query_radius;
use crate::error::{Error, Result};
use crate::model::{Atom, PredKind, PredicateDecl, Program, Query, Rule, Term};

fn rename_idbs(query: &Query, suffix: &str, taken: &BTreeSet<String>) -> BTreeMap<String, String> {
    query
        .program()
        .decls()
        .filter(|d| !d.is_edb())
        .map(|d| {
            let mut name = format!("{}.{suffix}", d.name);
            while taken.contains(&name) {
                name.push('_');
            }
            (d.name.clone(), name)
        })
        .collect()
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

fn renamed_atom(atom: &Atom, names: &BTreeMap<String, String>) -> Atom {
    let predicate = names
        .get(&atom.predicate)
        .cloned()
        .unwrap_or_else(|| atom.predicate.clone());
    Atom::new(predicate, atom.args.clone())
}

/// Builds a query `Q` and window size `w` such that `w` is valid for `Q` iff `q1 ⊑ q2`.
///
/// The IDB predicates of each input are renamed apart. Two fresh nullary temporal EDB
/// predicates gate the copy of `q1`'s output: through the gate rule, which looks back
/// `w + 1` time points, `q1`'s answers reach the output only when the window is at least
/// `w + 1`; `q2`'s answers reach it directly.
pub fn merge_for_window_reduction(q1: &Query, q2: &Query) -> Result<(Query, u64)> {
    let w = query_radius(q1)?.max(query_radius(q2)?);
    let out = q1.output_decl();
    if q1.output() != q2.output() || out.sorts != q2.output_decl().sorts {
        return Err(Error::OutputMismatch {
            left: q1.output().into(),
            right: q2.output().into(),
        });
    }
    if !out.is_temporal() {
        return Err(Error::Unsupported(
            "the reduction needs a temporal output predicate".into(),
        ));
    }

    let mut taken: BTreeSet<String> = q1
        .program()
        .decls()
        .chain(q2.program().decls())
        .map(|d| d.name.clone())
        .collect();
    let names1 = rename_idbs(q1, "q1", &taken);
    taken.extend(names1.values().cloned());
    let names2 = rename_idbs(q2, "q2", &taken);
    taken.extend(names2.values().cloned());
    let gate_early = fresh("Gate", &taken);
    taken.insert(gate_early.clone());
    let gate_now = fresh("Now", &taken);

    let mut decls: BTreeMap<String, PredicateDecl> = BTreeMap::new();
    for (q, names) in [(q1, &names1), (q2, &names2)] {
        for d in q.program().decls() {
            let name = names.get(&d.name).cloned().unwrap_or_else(|| d.name.clone());
            let decl = PredicateDecl::new(name.clone(), d.sorts.clone(), d.kind);
            if let Some(existing) = decls.get(&name) {
                if *existing != decl {
                    return Err(Error::Unsupported(format!(
                        "EDB predicate `{name}` is declared differently in the two queries"
                    )));
                }
            }
            decls.insert(name, decl);
        }
    }
    decls.insert(
        out.name.clone(),
        PredicateDecl::new(out.name.clone(), out.sorts.clone(), PredKind::Idb),
    );
    for g in [&gate_early, &gate_now] {
        decls.insert(g.clone(), PredicateDecl::temporal(g.clone(), 0, PredKind::Edb));
    }

    let mut rules = Vec::new();
    for (q, names) in [(q1, &names1), (q2, &names2)] {
        for r in q.program().rules() {
            rules.push(Rule::new(
                renamed_atom(&r.head, names),
                r.body.iter().map(|a| renamed_atom(a, names)).collect(),
            ));
        }
    }
    let objects: Vec<Term> = (1..=out.object_arity())
        .map(|i| Term::var(format!("X{i}")))
        .collect();
    let output_atom = |name: &str| {
        let mut args = objects.clone();
        args.push(Term::time("T", 0));
        Atom::new(name, args)
    };
    let now = Atom::new(gate_now.clone(), vec![Term::time("T", 0)]);
    rules.push(Rule::new(
        output_atom(&out.name),
        vec![
            Atom::new(gate_early.clone(), vec![Term::time("T", -(w as i64) - 1)]),
            now.clone(),
            output_atom(&names1[&out.name]),
        ],
    ));
    rules.push(Rule::new(
        output_atom(&out.name),
        vec![now, output_atom(&names2[&out.name])],
    ));
    let merged = Query::new(Program::new(decls.into_values(), rules), out.name.clone())?;
    Ok((merged, w))
}
