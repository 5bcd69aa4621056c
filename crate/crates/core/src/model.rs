//! Sorted temporal Datalog: predicates, terms, rules, programs, queries and facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// A non-negative time point.
pub type TimePoint = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Object,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredKind {
    Edb,
    Idb,
}

/// A declared predicate. Temporal predicates carry exactly one time position, the last one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateDecl {
    pub name: String,
    pub sorts: Vec<Sort>,
    pub kind: PredKind,
}

impl PredicateDecl {
    pub fn new(name: impl Into<String>, sorts: Vec<Sort>, kind: PredKind) -> Self {
        PredicateDecl {
            name: name.into(),
            sorts,
            kind,
        }
    }

    /// Temporal predicate with `objects` object positions followed by the time position.
    pub fn temporal(name: impl Into<String>, objects: usize, kind: PredKind) -> Self {
        let mut sorts = vec![Sort::Object; objects];
        sorts.push(Sort::Time);
        Self::new(name, sorts, kind)
    }

    pub fn rigid(name: impl Into<String>, objects: usize, kind: PredKind) -> Self {
        Self::new(name, vec![Sort::Object; objects], kind)
    }

    pub fn is_temporal(&self) -> bool {
        self.sorts.last() == Some(&Sort::Time)
    }

    pub fn is_rigid(&self) -> bool {
        !self.sorts.contains(&Sort::Time)
    }

    pub fn is_edb(&self) -> bool {
        self.kind == PredKind::Edb
    }

    pub fn arity(&self) -> usize {
        self.sorts.len()
    }

    pub fn object_arity(&self) -> usize {
        self.sorts.iter().filter(|s| **s == Sort::Object).count()
    }

    /// Every position is an object except possibly the last.
    fn layout_ok(&self) -> bool {
        let n = self.sorts.len();
        self.sorts
            .iter()
            .enumerate()
            .all(|(i, s)| *s == Sort::Object || i + 1 == n)
    }
}

impl fmt::Display for PredicateDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ".decl {}", self.name)?;
        if !self.sorts.is_empty() {
            let sorts: Vec<&str> = self
                .sorts
                .iter()
                .map(|s| match s {
                    Sort::Object => "object",
                    Sort::Time => "time",
                })
                .collect();
            write!(f, "({})", sorts.join(", "))?;
        }
        match self.kind {
            PredKind::Edb => write!(f, " edb"),
            PredKind::Idb => write!(f, " idb"),
        }
    }
}

/// A term. Time variables carry their integer offset, so `T` and `T+0` are the same term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Obj(String),
    ObjVar(String),
    Point(TimePoint),
    TimeVar { name: String, offset: i64 },
}

impl Term {
    pub fn obj(name: impl Into<String>) -> Self {
        Term::Obj(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::ObjVar(name.into())
    }

    pub fn time(name: impl Into<String>, offset: i64) -> Self {
        Term::TimeVar {
            name: name.into(),
            offset,
        }
    }

    pub fn is_time(&self) -> bool {
        matches!(self, Term::Point(_) | Term::TimeVar { .. })
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Obj(_) | Term::Point(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Obj(s) | Term::ObjVar(s) => f.write_str(s),
            Term::Point(k) => write!(f, "{k}"),
            Term::TimeVar { name, offset } => match offset.cmp(&0) {
                std::cmp::Ordering::Equal => f.write_str(name),
                std::cmp::Ordering::Greater => write!(f, "{name}+{offset}"),
                std::cmp::Ordering::Less => write!(f, "{name}-{}", offset.unsigned_abs()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    /// The time argument, present exactly when the atom is temporal.
    pub fn time_term(&self) -> Option<&Term> {
        self.args.last().filter(|t| t.is_time())
    }

    pub fn is_temporal(&self) -> bool {
        self.time_term().is_some()
    }

    /// Object arguments, i.e. all arguments except the time argument.
    pub fn object_args(&self) -> &[Term] {
        if self.is_temporal() {
            &self.args[..self.args.len() - 1]
        } else {
            &self.args
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        write_args(f, self.args.iter())
    }
}

fn write_args<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    args: impl Iterator<Item = T>,
) -> fmt::Result {
    let args: Vec<String> = args.map(|a| a.to_string()).collect();
    if args.is_empty() {
        Ok(())
    } else {
        write!(f, "({})", args.join(", "))
    }
}

/// A rule. An empty body makes it a fact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Rule { head, body }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    /// Object variables in order of first occurrence, scanning the body before the head.
    pub fn object_variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for atom in self.body.iter().chain(std::iter::once(&self.head)) {
            for t in &atom.args {
                if let Term::ObjVar(v) = t {
                    if !seen.contains(&v.as_str()) {
                        seen.push(v.as_str());
                    }
                }
            }
        }
        seen
    }

    /// Distinct time variable names.
    pub fn time_variables(&self) -> BTreeSet<&str> {
        self.atoms()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::TimeVar { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<&str> {
        self.atoms()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Obj(c) => Some(c.as_str()),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            let body: Vec<String> = self.body.iter().map(ToString::to_string).collect();
            write!(f, " :- {}", body.join(", "))?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    BadSortLayout,
    UndeclaredPredicate,
    ArityMismatch,
    SortMismatch,
    VariableSortConflict,
    UnsafeVariable,
    EdbHead,
    NonGroundFact,
    OutputUndeclared,
    OutputNotIdb,
}

/// A well-formedness problem. `rule` is the 0-based rule index when one applies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub rule: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(i) => write!(f, "rule {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    decls: BTreeMap<String, PredicateDecl>,
    rules: Vec<Rule>,
}

impl Program {
    pub fn new(decls: impl IntoIterator<Item = PredicateDecl>, rules: Vec<Rule>) -> Self {
        Program {
            decls: decls.into_iter().map(|d| (d.name.clone(), d)).collect(),
            rules,
        }
    }

    pub fn decl(&self, name: &str) -> Option<&PredicateDecl> {
        self.decls.get(name)
    }

    pub fn decls(&self) -> impl Iterator<Item = &PredicateDecl> {
        self.decls.values()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Inserts or replaces a declaration.
    pub fn declare(&mut self, decl: PredicateDecl) {
        self.decls.insert(decl.name.clone(), decl);
    }

    pub fn push_rule(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    /// Rules with a non-empty body.
    pub fn proper_rules(&self) -> impl Iterator<Item = (usize, &Rule)> {
        self.rules.iter().enumerate().filter(|(_, r)| !r.is_fact())
    }

    /// Ground facts listed in the program.
    pub fn facts(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| r.is_fact())
    }

    /// Predicates occurring in some rule.
    pub fn used_predicates(&self) -> BTreeSet<&str> {
        self.rules
            .iter()
            .flat_map(Rule::atoms)
            .map(|a| a.predicate.as_str())
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<&str> {
        self.rules.iter().flat_map(Rule::constants).collect()
    }

    /// All well-formedness violations; empty when the program is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for d in self.decls.values() {
            if !d.layout_ok() {
                out.push(Violation {
                    kind: ViolationKind::BadSortLayout,
                    rule: None,
                    message: format!(
                        "predicate `{}` must have object positions followed by at most one time position",
                        d.name
                    ),
                });
            }
        }
        for (i, rule) in self.rules.iter().enumerate() {
            self.validate_rule(i, rule, &mut out);
        }
        out
    }

    fn validate_rule(&self, i: usize, rule: &Rule, out: &mut Vec<Violation>) {
        let mut push = |kind, message: String| {
            out.push(Violation {
                kind,
                rule: Some(i),
                message,
            })
        };
        for atom in rule.atoms() {
            let Some(decl) = self.decl(&atom.predicate) else {
                push(
                    ViolationKind::UndeclaredPredicate,
                    format!("undeclared predicate `{}`", atom.predicate),
                );
                continue;
            };
            if decl.arity() != atom.args.len() {
                push(
                    ViolationKind::ArityMismatch,
                    format!(
                        "`{}` expects {} arguments, found {}",
                        atom.predicate,
                        decl.arity(),
                        atom.args.len()
                    ),
                );
                continue;
            }
            for (pos, (sort, term)) in decl.sorts.iter().zip(&atom.args).enumerate() {
                let ok = match sort {
                    Sort::Object => matches!(term, Term::Obj(_) | Term::ObjVar(_)),
                    Sort::Time => term.is_time(),
                };
                if !ok {
                    push(
                        ViolationKind::SortMismatch,
                        format!(
                            "argument {} of `{}` has the wrong sort: `{term}`",
                            pos + 1,
                            atom.predicate
                        ),
                    );
                }
            }
        }

        let obj_vars: BTreeSet<&str> = rule.object_variables().into_iter().collect();
        for v in rule.time_variables() {
            if obj_vars.contains(v) {
                push(
                    ViolationKind::VariableSortConflict,
                    format!("variable `{v}` is used both as an object and as a time variable"),
                );
            }
        }

        if rule.is_fact() {
            if !rule.head.is_ground() {
                push(
                    ViolationKind::NonGroundFact,
                    format!("fact `{}` is not ground", rule.head),
                );
            }
            return;
        }

        if self.decl(&rule.head.predicate).is_some_and(|d| d.is_edb()) {
            push(
                ViolationKind::EdbHead,
                format!("EDB predicate `{}` occurs in a rule head", rule.head.predicate),
            );
        }

        let body_vars: BTreeSet<String> = rule
            .body
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(var_name)
            .collect();
        for t in &rule.head.args {
            if let Some(v) = var_name(t) {
                if !body_vars.contains(&v) {
                    push(
                        ViolationKind::UnsafeVariable,
                        format!("head variable `{v}` does not occur in the body"),
                    );
                }
            }
        }
    }
}

fn var_name(t: &Term) -> Option<String> {
    match t {
        Term::ObjVar(v) => Some(v.clone()),
        Term::TimeVar { name, .. } => Some(name.clone()),
        _ => None,
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.decls.values() {
            writeln!(f, "{d}")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A program with a distinguished output predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    program: Program,
    output: String,
}

impl Query {
    /// Validates the program and the output predicate. The output may occur in rule bodies.
    pub fn new(program: Program, output: impl Into<String>) -> Result<Self> {
        let output = output.into();
        let mut violations = program.validate();
        match program.decl(&output) {
            None => violations.push(Violation {
                kind: ViolationKind::OutputUndeclared,
                rule: None,
                message: format!("output predicate `{output}` is not declared"),
            }),
            Some(d) if d.is_edb() => violations.push(Violation {
                kind: ViolationKind::OutputNotIdb,
                rule: None,
                message: format!("output predicate `{output}` must be IDB"),
            }),
            Some(_) => {}
        }
        if violations.is_empty() {
            Ok(Query { program, output })
        } else {
            Err(Error::Invalid(violations))
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn output(&self) -> &str {
        &self.output
    }

    pub fn output_decl(&self) -> &PredicateDecl {
        self.program
            .decl(&self.output)
            .expect("validated query declares its output")
    }

    pub fn into_parts(self) -> (Program, String) {
        (self.program, self.output)
    }

    /// IDB predicate names: the signature the stream engine materialises.
    pub fn idb_signature(&self) -> BTreeSet<String> {
        self.program
            .decls()
            .filter(|d| !d.is_edb())
            .map(|d| d.name.clone())
            .collect()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.program.decls.values() {
            writeln!(f, "{d}")?;
        }
        writeln!(f, ".output {}", self.output)?;
        for r in &self.program.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A ground atom. `time` is present exactly for temporal facts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub objects: Vec<String>,
    pub time: Option<TimePoint>,
}

impl Fact {
    pub fn temporal(
        predicate: impl Into<String>,
        objects: impl IntoIterator<Item = impl Into<String>>,
        time: TimePoint,
    ) -> Self {
        Fact {
            predicate: predicate.into(),
            objects: objects.into_iter().map(Into::into).collect(),
            time: Some(time),
        }
    }

    pub fn rigid(
        predicate: impl Into<String>,
        objects: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Fact {
            predicate: predicate.into(),
            objects: objects.into_iter().map(Into::into).collect(),
            time: None,
        }
    }

    /// Temporal fact without object arguments.
    pub fn at(predicate: impl Into<String>, time: TimePoint) -> Self {
        Fact::temporal(predicate, Vec::<String>::new(), time)
    }

    pub fn is_temporal(&self) -> bool {
        self.time.is_some()
    }

    pub fn to_atom(&self) -> Atom {
        let mut args: Vec<Term> = self.objects.iter().map(Term::obj).collect();
        if let Some(t) = self.time {
            args.push(Term::Point(t));
        }
        Atom::new(self.predicate.clone(), args)
    }

    /// Converts a ground atom. Fails on variables.
    pub fn from_atom(atom: &Atom) -> Result<Self> {
        let mut objects = Vec::new();
        let mut time = None;
        for (i, t) in atom.args.iter().enumerate() {
            match t {
                Term::Obj(c) => objects.push(c.clone()),
                Term::Point(k) if i + 1 == atom.args.len() => time = Some(*k),
                _ => {
                    return Err(Error::InvalidFact {
                        fact: atom.to_string(),
                        reason: "not ground".into(),
                    })
                }
            }
        }
        Ok(Fact {
            predicate: atom.predicate.clone(),
            objects,
            time,
        })
    }

    /// Checks predicate, arity and sorts against a program's declarations.
    pub fn check_against(&self, program: &Program) -> Result<()> {
        let decl = program
            .decl(&self.predicate)
            .ok_or_else(|| Error::UndeclaredPredicate(self.predicate.clone()))?;
        if decl.object_arity() != self.objects.len() || decl.is_temporal() != self.is_temporal() {
            return Err(Error::InvalidFact {
                fact: self.to_string(),
                reason: format!("does not match the declaration `{decl}`"),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        let time = self.time.map(|t| t.to_string());
        write_args(f, self.objects.iter().cloned().chain(time))
    }
}

/// A finite set of facts. Datasets hold EDB facts; extended datasets may also hold IDB facts.
pub type FactSet = BTreeSet<Fact>;
pub type Dataset = FactSet;
pub type ExtendedDataset = FactSet;

/// Temporal facts grouped by their time point.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stream {
    ticks: BTreeMap<TimePoint, FactSet>,
}

impl Stream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fact: Fact) -> Result<()> {
        let Some(t) = fact.time else {
            return Err(Error::InvalidFact {
                fact: fact.to_string(),
                reason: "rigid facts cannot occur in a stream".into(),
            });
        };
        self.ticks.entry(t).or_default().insert(fact);
        Ok(())
    }

    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Result<Self> {
        let mut s = Stream::new();
        for f in facts {
            s.insert(f)?;
        }
        Ok(s)
    }

    /// Facts timestamped `t`; empty when there are none.
    pub fn at(&self, t: TimePoint) -> FactSet {
        self.ticks.get(&t).cloned().unwrap_or_default()
    }

    pub fn last_time(&self) -> Option<TimePoint> {
        self.ticks.keys().next_back().copied()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.ticks.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.ticks.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.facts() {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}
