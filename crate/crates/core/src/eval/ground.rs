//! Reduction of temporal entailment to plain Datalog by grounding the time variable,
//! and a naive plain-Datalog evaluator kept independent of the compiled engine.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::analysis::{is_datalog_rule, program_radius, require_fp};
use crate::error::{Error, Result};
use crate::model::{Atom, Fact, FactSet, PredicateDecl, Program, Query, Rule, Term};

/// A plain Datalog instance equivalent to a temporal entailment question.
#[derive(Clone, Debug)]
pub struct TimeGrounded {
    pub program: Program,
    pub dataset: FactSet,
    pub goal: Fact,
}

fn stamped(pred: &str, t: u64) -> String {
    format!("{pred}@{t}")
}

fn rigidify(fact: &Fact) -> Fact {
    match fact.time {
        None => fact.clone(),
        Some(t) => Fact::rigid(stamped(&fact.predicate, t), fact.objects.clone()),
    }
}

/// Grounds every rule for each value of its time variable and turns each temporal atom
/// `P(.., τ)` into the rigid atom `P@τ(..)`.
///
/// The time variable ranges over `[τmin − ρ − K, τgoal + ρ + K]`, where `K` is the largest
/// absolute offset; instances with a negative time argument are dropped.
pub fn time_ground_to_datalog(query: &Query, facts: &FactSet, goal: &Fact) -> Result<TimeGrounded> {
    let program = query.program();
    require_fp(program)?;
    goal.check_against(program)?;

    let mut all_facts: FactSet = facts.clone();
    for f in program.facts() {
        all_facts.insert(Fact::from_atom(&f.head)?);
    }
    let datalog_rules: Vec<Rule> = program
        .proper_rules()
        .map(|(_, r)| r)
        .filter(|r| is_datalog_rule(r))
        .cloned()
        .collect();
    let rigid_decls: Vec<PredicateDecl> = program.decls().filter(|d| d.is_rigid()).cloned().collect();

    let Some(goal_time) = goal.time else {
        let dataset = all_facts.into_iter().filter(|f| !f.is_temporal()).collect();
        return Ok(TimeGrounded {
            program: Program::new(rigid_decls, datalog_rules),
            dataset,
            goal: goal.clone(),
        });
    };

    let mut decls: BTreeMap<String, PredicateDecl> =
        rigid_decls.into_iter().map(|d| (d.name.clone(), d)).collect();
    let mut declare = |name: &str, t: u64| -> String {
        let decl = program.decl(name).expect("validated program declares its atoms");
        let s = stamped(name, t);
        decls
            .entry(s.clone())
            .or_insert_with(|| PredicateDecl::rigid(s.clone(), decl.object_arity(), decl.kind));
        s
    };
    let grounded_goal = Fact::rigid(declare(&goal.predicate, goal_time), goal.objects.clone());

    let Some(min_time) = all_facts.iter().filter_map(|f| f.time).min() else {
        return Ok(TimeGrounded {
            program: Program::new(decls.into_values(), Vec::new()),
            dataset: FactSet::new(),
            goal: grounded_goal,
        });
    };

    let max_abs_offset = program
        .rules()
        .iter()
        .flat_map(Rule::atoms)
        .filter_map(|a| match a.time_term() {
            Some(Term::TimeVar { offset, .. }) => Some(offset.abs()),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let slack = program_radius(program) as i64 + max_abs_offset;
    let from = min_time as i64 - slack;
    let to = goal_time as i64 + slack;

    let mut rules = datalog_rules;
    for (_, rule) in program.proper_rules().filter(|(_, r)| !is_datalog_rule(r)) {
        for value in from..=to {
            let Some(head) = ground_atom(&rule.head, value, &mut declare) else {
                continue;
            };
            let body: Option<Vec<Atom>> = rule
                .body
                .iter()
                .map(|a| ground_atom(a, value, &mut declare))
                .collect();
            if let Some(body) = body {
                rules.push(Rule::new(head, body));
            }
        }
    }
    let dataset: FactSet = all_facts
        .iter()
        .map(|f| {
            if let Some(t) = f.time {
                declare(&f.predicate, t);
            }
            rigidify(f)
        })
        .collect();
    Ok(TimeGrounded {
        program: Program::new(decls.into_values(), rules),
        dataset,
        goal: grounded_goal,
    })
}

/// `None` when the instance would need a negative time point.
fn ground_atom(
    atom: &Atom,
    value: i64,
    declare: &mut impl FnMut(&str, u64) -> String,
) -> Option<Atom> {
    let Some(Term::TimeVar { offset, .. }) = atom.time_term() else {
        return Some(atom.clone());
    };
    let t = u64::try_from(value + offset).ok()?;
    let name = declare(&atom.predicate, t);
    Some(Atom::new(name, atom.object_args().to_vec()))
}

type GroundTuple = Vec<String>;

/// Naive bottom-up entailment for rigid-only programs.
pub fn plain_datalog_entails(program: &Program, dataset: &FactSet, goal: &Fact) -> Result<bool> {
    if let Some(atom) = program
        .rules()
        .iter()
        .flat_map(Rule::atoms)
        .find(|a| a.is_temporal())
    {
        return Err(Error::Unsupported(format!(
            "plain Datalog evaluation got temporal atom `{atom}`"
        )));
    }
    let mut known: HashMap<String, HashSet<GroundTuple>> = HashMap::new();
    for f in dataset.iter().chain(
        program
            .facts()
            .map(|r| Fact::from_atom(&r.head))
            .collect::<Result<Vec<_>>>()?
            .iter(),
    ) {
        known
            .entry(f.predicate.clone())
            .or_default()
            .insert(f.objects.clone());
    }
    loop {
        let mut fresh = Vec::new();
        for (_, rule) in program.proper_rules() {
            let mut subs = vec![BTreeMap::<&str, &str>::new()];
            for atom in &rule.body {
                let tuples = known.get(&atom.predicate);
                let mut next = Vec::new();
                for sub in &subs {
                    for tuple in tuples.into_iter().flatten() {
                        if let Some(s) = unify(atom, tuple, sub) {
                            next.push(s);
                        }
                    }
                }
                subs = next;
            }
            for sub in subs {
                let tuple: GroundTuple = rule
                    .head
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Obj(c) => c.clone(),
                        Term::ObjVar(v) => sub[v.as_str()].to_string(),
                        _ => unreachable!("rigid atoms have object arguments only"),
                    })
                    .collect();
                if !known
                    .get(&rule.head.predicate)
                    .is_some_and(|s| s.contains(&tuple))
                {
                    fresh.push((rule.head.predicate.clone(), tuple));
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for (p, t) in fresh {
            known.entry(p).or_default().insert(t);
        }
    }
    Ok(goal.time.is_none()
        && known
            .get(&goal.predicate)
            .is_some_and(|s| s.contains(&goal.objects)))
}

fn unify<'a>(
    atom: &'a Atom,
    tuple: &'a GroundTuple,
    sub: &BTreeMap<&'a str, &'a str>,
) -> Option<BTreeMap<&'a str, &'a str>> {
    if atom.args.len() != tuple.len() {
        return None;
    }
    let mut out = sub.clone();
    for (t, v) in atom.args.iter().zip(tuple) {
        match t {
            Term::Obj(c) if c == v => {}
            Term::ObjVar(x) => match out.get(x.as_str()) {
                Some(b) if *b == v.as_str() => {}
                Some(_) => return None,
                None => {
                    out.insert(x.as_str(), v.as_str());
                }
            },
            _ => return None,
        }
    }
    Some(out)
}

/// Entailment through the time-grounding reduction.
pub fn entails_via_grounding(query: &Query, facts: &FactSet, goal: &Fact) -> Result<bool> {
    let g = time_ground_to_datalog(query, facts, goal)?;
    plain_datalog_entails(&g.program, &g.dataset, &g.goal)
}
