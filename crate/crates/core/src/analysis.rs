//! Offsets, radii, the forward-propagation check, query classes and object grounding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Atom, Fact, PredicateDecl, Program, Query, Rule, Term};

/// Offset of a time term: `k` for `T+k` and for the point `k`.
pub fn offset_of(term: &Term) -> Result<i64> {
    match term {
        Term::TimeVar { offset, .. } => Ok(*offset),
        Term::Point(k) => i64::try_from(*k)
            .map_err(|_| Error::Unsupported(format!("time point {k} is out of range"))),
        other => Err(Error::Unsupported(format!(
            "`{other}` is an object term and has no offset"
        ))),
    }
}

/// Why a rule fails the forward-propagation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FpViolation {
    TimePoint,
    TimeVariableCount(usize),
    TimeVariableNotInHead,
    BackwardDependence { head_offset: i64, body_offset: i64 },
}

impl fmt::Display for FpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpViolation::TimePoint => f.write_str("contains a time point"),
            FpViolation::TimeVariableCount(n) => {
                write!(f, "must have exactly one time variable, found {n}")
            }
            FpViolation::TimeVariableNotInHead => {
                f.write_str("the time variable does not occur in the head")
            }
            FpViolation::BackwardDependence {
                head_offset,
                body_offset,
            } => write!(
                f,
                "body offset {body_offset} exceeds head offset {head_offset}"
            ),
        }
    }
}

/// A rule is Datalog when none of its atoms is temporal.
pub fn is_datalog_rule(rule: &Rule) -> bool {
    !rule.atoms().any(Atom::is_temporal)
}

/// Checks the forward-propagation condition. Facts are dataset content and always pass.
///
/// Every body time offset must be at most the head time offset.
pub fn check_forward_propagating(rule: &Rule) -> Result<(), FpViolation> {
    if rule.is_fact() || is_datalog_rule(rule) {
        return Ok(());
    }
    if rule
        .atoms()
        .any(|a| matches!(a.time_term(), Some(Term::Point(_))))
    {
        return Err(FpViolation::TimePoint);
    }
    let vars = rule.time_variables();
    if vars.len() != 1 {
        return Err(FpViolation::TimeVariableCount(vars.len()));
    }
    let Some(Term::TimeVar {
        offset: head_offset,
        ..
    }) = rule.head.time_term()
    else {
        return Err(FpViolation::TimeVariableNotInHead);
    };
    for atom in &rule.body {
        if let Some(Term::TimeVar { offset, .. }) = atom.time_term() {
            if offset > head_offset {
                return Err(FpViolation::BackwardDependence {
                    head_offset: *head_offset,
                    body_offset: *offset,
                });
            }
        }
    }
    Ok(())
}

pub fn is_forward_propagating(rule: &Rule) -> bool {
    check_forward_propagating(rule).is_ok()
}

pub fn query_is_fp(query: &Query) -> bool {
    query.program().rules().iter().all(is_forward_propagating)
}

/// Fails with the first rule that is not forward-propagating.
pub fn require_fp(program: &Program) -> Result<()> {
    for (i, rule) in program.rules().iter().enumerate() {
        if let Err(v) = check_forward_propagating(rule) {
            return Err(Error::NotForwardPropagating {
                rule: i,
                reason: v.to_string(),
            });
        }
    }
    Ok(())
}

fn head_offset(rule: &Rule) -> Option<i64> {
    match rule.head.time_term() {
        Some(Term::TimeVar { offset, .. }) => Some(*offset),
        _ => None,
    }
}

/// Smallest body time offset, if the body has a time argument.
fn min_body_offset(rule: &Rule) -> Option<i64> {
    rule.body
        .iter()
        .filter_map(|a| match a.time_term() {
            Some(Term::TimeVar { offset, .. }) => Some(*offset),
            _ => None,
        })
        .min()
}

/// Largest head-minus-body offset difference; 0 for rigid heads, Datalog rules and facts.
/// Meaningful for forward-propagating rules.
pub fn rule_radius(rule: &Rule) -> u64 {
    match (head_offset(rule), min_body_offset(rule)) {
        (Some(h), Some(b)) if h > b => (h - b) as u64,
        _ => 0,
    }
}

/// Maximum rule radius. Fails on non-fp queries.
pub fn query_radius(query: &Query) -> Result<u64> {
    require_fp(query.program())?;
    Ok(program_radius(query.program()))
}

pub(crate) fn program_radius(program: &Program) -> u64 {
    program.rules().iter().map(rule_radius).max().unwrap_or(0)
}

/// The query keeping only rules of radius at most `k`, in their original order.
pub fn subquery_at_radius(query: &Query, k: u64) -> Result<Query> {
    require_fp(query.program())?;
    let rules: Vec<Rule> = query
        .program()
        .rules()
        .iter()
        .filter(|r| rule_radius(r) <= k)
        .cloned()
        .collect();
    Query::new(
        Program::new(query.program().decls().cloned(), rules),
        query.output(),
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleRadius {
    pub index: usize,
    pub head_offset: Option<i64>,
    /// Smallest head-minus-body offset difference.
    pub min_body_diff: Option<i64>,
    pub radius: Result<u64, FpViolation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusReport {
    pub per_rule: Vec<RuleRadius>,
    /// Maximum radius over the forward-propagating rules.
    pub query_radius: u64,
    pub is_fp: bool,
    pub is_object_ground: bool,
    pub is_non_recursive: bool,
}

impl RadiusReport {
    /// One-line summary, e.g. `radius=2 fp=yes og=no nr=no`.
    pub fn summary(&self) -> String {
        let yn = |b: bool| if b { "yes" } else { "no" };
        format!(
            "radius={} fp={} og={} nr={}",
            self.query_radius,
            yn(self.is_fp),
            yn(self.is_object_ground),
            yn(self.is_non_recursive)
        )
    }
}

pub fn classify(query: &Query) -> RadiusReport {
    let program = query.program();
    let per_rule: Vec<RuleRadius> = program
        .rules()
        .iter()
        .enumerate()
        .map(|(index, rule)| {
            let head = head_offset(rule);
            let max_body = rule
                .body
                .iter()
                .filter_map(|a| match a.time_term() {
                    Some(Term::TimeVar { offset, .. }) => Some(*offset),
                    _ => None,
                })
                .max();
            RuleRadius {
                index,
                head_offset: head,
                min_body_diff: head.zip(max_body).map(|(h, b)| h - b),
                radius: check_forward_propagating(rule).map(|_| rule_radius(rule)),
            }
        })
        .collect();
    RadiusReport {
        query_radius: per_rule
            .iter()
            .filter_map(|r| r.radius.as_ref().ok().copied())
            .max()
            .unwrap_or(0),
        is_fp: per_rule.iter().all(|r| r.radius.is_ok()),
        is_object_ground: is_object_ground(program),
        is_non_recursive: is_non_recursive(program),
        per_rule,
    }
}

pub fn is_object_ground(program: &Program) -> bool {
    program
        .rules()
        .iter()
        .all(|r| r.object_variables().is_empty())
}

pub(crate) fn require_object_ground(program: &Program) -> Result<()> {
    match program
        .rules()
        .iter()
        .position(|r| !r.object_variables().is_empty())
    {
        Some(rule) => Err(Error::NotObjectGround { rule }),
        None => Ok(()),
    }
}

/// True iff the head-to-body dependency graph is acyclic. Self-loops are cycles.
pub fn is_non_recursive(program: &Program) -> bool {
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (_, rule) in program.proper_rules() {
        let targets = edges.entry(rule.head.predicate.as_str()).or_default();
        targets.extend(rule.body.iter().map(|a| a.predicate.as_str()));
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> bool {
        match marks.get(node) {
            Some(Mark::Active) => return false,
            Some(Mark::Done) => return true,
            None => {}
        }
        marks.insert(node, Mark::Active);
        for next in edges.get(node).into_iter().flatten() {
            if !visit(next, edges, marks) {
                return false;
            }
        }
        marks.insert(node, Mark::Done);
        true
    }
    let mut marks = BTreeMap::new();
    edges.keys().all(|n| visit(n, &edges, &mut marks))
}

/// A finite set of object constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObjectDomain(BTreeSet<String>);

impl ObjectDomain {
    pub fn new(objects: impl IntoIterator<Item = impl Into<String>>) -> Self {
        ObjectDomain(objects.into_iter().map(Into::into).collect())
    }

    pub fn objects(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, object: &str) -> bool {
        self.0.contains(object)
    }
}

/// An object-free program obtained by instantiating object variables and specialising
/// each predicate per ground object tuple.
#[derive(Clone, Debug)]
pub struct Grounding {
    program: Program,
    outputs: Vec<String>,
    origin: BTreeMap<String, (String, Vec<String>)>,
}

impl Grounding {
    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Specialised output predicates, one per tuple of output objects.
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Original predicate and objects of a specialised predicate.
    pub fn origin(&self, specialised: &str) -> Option<(&str, &[String])> {
        self.origin
            .get(specialised)
            .map(|(p, o)| (p.as_str(), o.as_slice()))
    }

    /// Maps a fact over specialised predicates back to the original signature.
    pub fn decode(&self, fact: &Fact) -> Fact {
        match self.origin.get(&fact.predicate) {
            Some((pred, objects)) => Fact {
                predicate: pred.clone(),
                objects: objects.clone(),
                time: fact.time,
            },
            None => fact.clone(),
        }
    }

    /// Maps an original fact to its specialised form; `None` when the program never mentions it.
    pub fn encode(&self, fact: &Fact) -> Option<Fact> {
        let name = specialised_name(&fact.predicate, &fact.objects);
        match self.origin.get(&name) {
            Some((p, o)) if *p == fact.predicate && *o == fact.objects => Some(Fact {
                predicate: name,
                objects: Vec::new(),
                time: fact.time,
            }),
            _ => None,
        }
    }

    /// The grounded program as a query when there is a single output predicate.
    pub fn single_output_query(&self) -> Result<Query> {
        match self.outputs.as_slice() {
            [o] => Query::new(self.program.clone(), o.clone()),
            _ => Err(Error::Unsupported(format!(
                "grounding has {} output predicates",
                self.outputs.len()
            ))),
        }
    }
}

fn specialised_name(pred: &str, objects: &[String]) -> String {
    if objects.is_empty() {
        pred.to_string()
    } else {
        format!("{pred}_{}", objects.join("_"))
    }
}

struct GroundingBuilder<'a> {
    source: &'a Program,
    program: Program,
    origin: BTreeMap<String, (String, Vec<String>)>,
}

impl GroundingBuilder<'_> {
    fn specialise(&mut self, atom: &Atom) -> Result<Atom> {
        let objects: Vec<String> = atom
            .object_args()
            .iter()
            .map(|t| match t {
                Term::Obj(c) => c.clone(),
                other => unreachable!("object variable `{other}` left after instantiation"),
            })
            .collect();
        let name = self.register(&atom.predicate, objects)?;
        Ok(Atom::new(name, atom.time_term().into_iter().cloned().collect()))
    }

    fn register(&mut self, pred: &str, objects: Vec<String>) -> Result<String> {
        let name = specialised_name(pred, &objects);
        match self.origin.get(&name) {
            Some((p, o)) if p == pred && *o == objects => {}
            Some((p, o)) => {
                return Err(Error::Unsupported(format!(
                    "specialised name `{name}` is ambiguous between {p}{o:?} and {pred}{objects:?}"
                )))
            }
            None => {
                let decl = self
                    .source
                    .decl(pred)
                    .ok_or_else(|| Error::UndeclaredPredicate(pred.to_string()))?;
                let spec = if decl.is_temporal() {
                    PredicateDecl::temporal(name.clone(), 0, decl.kind)
                } else {
                    PredicateDecl::rigid(name.clone(), 0, decl.kind)
                };
                self.program.declare(spec);
                self.origin.insert(name.clone(), (pred.to_string(), objects));
            }
        }
        Ok(name)
    }
}

fn substitute(atom: &Atom, assignment: &BTreeMap<&str, &String>) -> Atom {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::ObjVar(v) => Term::Obj(assignment[v.as_str()].clone()),
            other => other.clone(),
        })
        .collect();
    Atom::new(atom.predicate.clone(), args)
}

/// Every tuple of length `k` over `objects`, in lexicographic order.
fn tuples<'a>(objects: &[&'a String], k: usize) -> Vec<Vec<&'a String>> {
    let mut out: Vec<Vec<&String>> = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                objects.iter().map(move |o| {
                    let mut t = prefix.clone();
                    t.push(o);
                    t
                })
            })
            .collect();
    }
    out
}

/// Instantiates every object variable over `domain` plus the constants of the query.
pub fn ground_objects(query: &Query, domain: &ObjectDomain) -> Result<Grounding> {
    let source = query.program();
    require_fp(source)?;
    if domain.is_empty() && !is_object_ground(source) {
        return Err(Error::EmptyDomain);
    }
    let mut all: BTreeSet<String> = domain.objects().clone();
    all.extend(source.constants().into_iter().map(str::to_string));
    let objects: Vec<&String> = all.iter().collect();

    let mut b = GroundingBuilder {
        source,
        program: Program::default(),
        origin: BTreeMap::new(),
    };
    for rule in source.rules() {
        let vars = rule.object_variables();
        for values in tuples(&objects, vars.len()) {
            let assignment: BTreeMap<&str, &String> =
                vars.iter().copied().zip(values.iter().copied()).collect();
            let head = b.specialise(&substitute(&rule.head, &assignment))?;
            let body = rule
                .body
                .iter()
                .map(|a| b.specialise(&substitute(a, &assignment)))
                .collect::<Result<Vec<_>>>()?;
            b.program.push_rule(Rule::new(head, body));
        }
    }
    let out_decl = query.output_decl();
    let mut outputs = Vec::new();
    for values in tuples(&objects, out_decl.object_arity()) {
        let values = values.into_iter().cloned().collect();
        outputs.push(b.register(&out_decl.name, values)?);
    }
    Ok(Grounding {
        program: b.program,
        outputs,
        origin: b.origin,
    })
}
