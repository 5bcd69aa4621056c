//! Interned rule representation and the per-time-point semi-naive fixpoint.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::analysis::{program_radius, require_fp};
use crate::error::Result;
use crate::model::{Atom, Fact, Program, Term, TimePoint};

#[derive(Clone, Debug, Default)]
pub(crate) struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub(crate) fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    pub(crate) fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub(crate) fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

#[derive(Clone, Debug)]
pub(crate) struct PredInfo {
    pub name: String,
    pub temporal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Var(u32),
    Const(u32),
}

/// A body or head atom. `lag` is the head offset minus the atom offset; `None` for rigid atoms.
#[derive(Clone, Debug)]
pub(crate) struct CAtom {
    pub pred: u32,
    pub args: Vec<Slot>,
    pub lag: Option<u64>,
}

#[derive(Clone, Debug)]
pub(crate) struct CRule {
    pub head: CAtom,
    pub body: Vec<CAtom>,
    pub vars: usize,
}

/// A forward-propagating program compiled to interned ids.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub preds: Vec<PredInfo>,
    pub pred_ids: HashMap<String, u32>,
    pub consts: Interner,
    pub rigid_rules: Vec<CRule>,
    pub temporal_rules: Vec<CRule>,
    pub facts: Vec<Fact>,
    pub radius: u64,
}

impl Compiled {
    pub(crate) fn new(program: &Program) -> Result<Arc<Self>> {
        require_fp(program)?;
        let mut c = Compiled {
            preds: Vec::new(),
            pred_ids: HashMap::new(),
            consts: Interner::default(),
            rigid_rules: Vec::new(),
            temporal_rules: Vec::new(),
            facts: Vec::new(),
            radius: program_radius(program),
        };
        for d in program.decls() {
            c.pred_ids.insert(d.name.clone(), c.preds.len() as u32);
            c.preds.push(PredInfo {
                name: d.name.clone(),
                temporal: d.is_temporal(),
            });
        }
        for rule in program.rules() {
            if rule.is_fact() {
                c.facts.push(Fact::from_atom(&rule.head)?);
                continue;
            }
            let head_offset = match rule.head.time_term() {
                Some(Term::TimeVar { offset, .. }) => Some(*offset),
                _ => None,
            };
            let mut vars: HashMap<String, u32> = HashMap::new();
            let body: Vec<CAtom> = rule
                .body
                .iter()
                .map(|a| c.compile_atom(a, head_offset, &mut vars))
                .collect();
            let head = c.compile_atom(&rule.head, head_offset, &mut vars);
            let cr = CRule {
                vars: vars.len(),
                head,
                body,
            };
            if head_offset.is_some() {
                c.temporal_rules.push(cr);
            } else {
                c.rigid_rules.push(cr);
            }
        }
        Ok(Arc::new(c))
    }

    fn compile_atom(
        &mut self,
        atom: &Atom,
        head_offset: Option<i64>,
        vars: &mut HashMap<String, u32>,
    ) -> CAtom {
        let mut args = Vec::new();
        for t in atom.object_args() {
            args.push(match t {
                Term::Obj(name) => Slot::Const(self.consts.intern(name)),
                Term::ObjVar(v) => {
                    let next = vars.len() as u32;
                    Slot::Var(*vars.entry(v.clone()).or_insert(next))
                }
                _ => unreachable!("time terms are not object arguments"),
            });
        }
        let lag = match (atom.time_term(), head_offset) {
            (Some(Term::TimeVar { offset, .. }), Some(h)) => Some((h - offset) as u64),
            (Some(_), _) => unreachable!("fp rules have a single time variable in the head"),
            (None, _) => None,
        };
        CAtom {
            pred: self.pred_ids[&atom.predicate],
            args,
            lag,
        }
    }
}

pub(crate) type Tuple = Box<[u32]>;

/// Ground tuples per predicate id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Relations {
    rels: HashMap<u32, HashSet<Tuple>>,
}

impl Relations {
    pub(crate) fn insert(&mut self, pred: u32, tuple: Tuple) -> bool {
        self.rels.entry(pred).or_default().insert(tuple)
    }

    pub(crate) fn contains(&self, pred: u32, tuple: &[u32]) -> bool {
        self.rels.get(&pred).is_some_and(|s| s.contains(tuple))
    }

    fn tuples(&self, pred: u32) -> impl Iterator<Item = &Tuple> {
        self.rels.get(&pred).into_iter().flatten()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (u32, &Tuple)> {
        self.rels
            .iter()
            .flat_map(|(p, s)| s.iter().map(move |t| (*p, t)))
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.rels.values().all(HashSet::is_empty)
    }

    fn extend(&mut self, other: Relations) {
        for (p, set) in other.rels {
            self.rels.entry(p).or_default().extend(set);
        }
    }
}

#[derive(Clone, Copy)]
enum Source<'a> {
    Current,
    Fixed(&'a Relations),
}

/// Fixpoint of `rules` over `current`. `sources[i][j]` says where body atom `j` of rule `i`
/// reads from; a rule whose sources are `None` never fires.
fn saturate(rules: &[CRule], sources: &[Option<Vec<Source<'_>>>], current: &mut Relations) {
    let mut delta = Relations::default();
    for (rule, src) in rules.iter().zip(sources) {
        if let Some(src) = src {
            let mut heads = Vec::new();
            join(rule, src, current, None, &mut heads);
            for t in heads {
                if !current.contains(rule.head.pred, &t) {
                    delta.insert(rule.head.pred, t);
                }
            }
        }
    }
    while !delta.is_empty() {
        current.extend(delta.clone());
        let mut next = Relations::default();
        for (rule, src) in rules.iter().zip(sources) {
            let Some(src) = src else { continue };
            for (j, atom) in rule.body.iter().enumerate() {
                if !matches!(src[j], Source::Current) || delta.tuples(atom.pred).next().is_none() {
                    continue;
                }
                let mut heads = Vec::new();
                join(rule, src, current, Some((j, &delta)), &mut heads);
                for t in heads {
                    if !current.contains(rule.head.pred, &t) {
                        next.insert(rule.head.pred, t);
                    }
                }
            }
        }
        delta = next;
    }
}

fn join(
    rule: &CRule,
    sources: &[Source<'_>],
    current: &Relations,
    delta: Option<(usize, &Relations)>,
    out: &mut Vec<Tuple>,
) {
    let mut order: Vec<usize> = (0..rule.body.len()).collect();
    if let Some((j, _)) = delta {
        order.retain(|&i| i != j);
        order.insert(0, j);
    }
    let mut binding = vec![None; rule.vars];
    join_from(rule, sources, current, delta, &order, &mut binding, out);
}

fn join_from(
    rule: &CRule,
    sources: &[Source<'_>],
    current: &Relations,
    delta: Option<(usize, &Relations)>,
    order: &[usize],
    binding: &mut Vec<Option<u32>>,
    out: &mut Vec<Tuple>,
) {
    let Some((&i, rest)) = order.split_first() else {
        let tuple: Tuple = rule
            .head
            .args
            .iter()
            .map(|s| match s {
                Slot::Const(c) => *c,
                Slot::Var(v) => binding[*v as usize].expect("safe rule binds head variables"),
            })
            .collect();
        out.push(tuple);
        return;
    };
    let atom = &rule.body[i];
    let rel = match delta {
        Some((j, d)) if j == i => d,
        _ => match sources[i] {
            Source::Current => current,
            Source::Fixed(r) => r,
        },
    };
    for tuple in rel.tuples(atom.pred) {
        let mut bound = Vec::new();
        let ok = atom.args.iter().zip(tuple.iter()).all(|(slot, &val)| match slot {
            Slot::Const(c) => *c == val,
            Slot::Var(v) => match binding[*v as usize] {
                Some(b) => b == val,
                None => {
                    binding[*v as usize] = Some(val);
                    bound.push(*v);
                    true
                }
            },
        });
        if ok {
            join_from(rule, sources, current, delta, rest, binding, out);
        }
        for v in bound {
            binding[v as usize] = None;
        }
    }
}

/// Materialisation of a compiled program: the rigid closure plus one relation set per time point.
#[derive(Clone, Debug)]
pub(crate) struct Materializer {
    pub c: Arc<Compiled>,
    consts: Interner,
    rigid: Relations,
    slices: BTreeMap<TimePoint, Relations>,
}

impl Materializer {
    /// Starts from the program's own facts.
    pub(crate) fn new(c: Arc<Compiled>) -> Self {
        let mut m = Materializer {
            consts: c.consts.clone(),
            c: c.clone(),
            rigid: Relations::default(),
            slices: BTreeMap::new(),
        };
        for f in &c.facts {
            m.add_fact(f);
        }
        m
    }

    /// Adds a base fact. Facts over predicates unknown to the program are ignored.
    pub(crate) fn add_fact(&mut self, f: &Fact) -> bool {
        let Some(&pred) = self.c.pred_ids.get(&f.predicate) else {
            return false;
        };
        if self.c.preds[pred as usize].temporal != f.is_temporal() {
            return false;
        }
        let tuple: Tuple = f.objects.iter().map(|o| self.consts.intern(o)).collect();
        match f.time {
            None => self.rigid.insert(pred, tuple),
            Some(t) => self.slices.entry(t).or_default().insert(pred, tuple),
        }
    }

    pub(crate) fn close_rigid(&mut self) {
        let c = self.c.clone();
        let sources: Vec<Option<Vec<Source<'_>>>> = c
            .rigid_rules
            .iter()
            .map(|r| Some(vec![Source::Current; r.body.len()]))
            .collect();
        saturate(&c.rigid_rules, &sources, &mut self.rigid);
    }

    /// Saturates time point `t`, reading earlier slices as already saturated.
    pub(crate) fn saturate_at(&mut self, t: TimePoint) {
        let c = self.c.clone();
        let mut current = self.slices.remove(&t).unwrap_or_default();
        {
            let sources: Vec<Option<Vec<Source<'_>>>> = c
                .temporal_rules
                .iter()
                .map(|r| {
                    r.body
                        .iter()
                        .map(|a| match a.lag {
                            None => Some(Source::Fixed(&self.rigid)),
                            Some(0) => Some(Source::Current),
                            Some(k) => t
                                .checked_sub(k)
                                .and_then(|s| self.slices.get(&s))
                                .map(Source::Fixed),
                        })
                        .collect()
                })
                .collect();
            saturate(&c.temporal_rules, &sources, &mut current);
        }
        self.slices.insert(t, current);
    }

    pub(crate) fn min_time(&self) -> Option<TimePoint> {
        self.slices
            .iter()
            .find(|(_, r)| !r.is_empty())
            .map(|(t, _)| *t)
    }

    pub(crate) fn drop_slice(&mut self, t: TimePoint) {
        self.slices.remove(&t);
    }

    pub(crate) fn slice_times(&self) -> impl Iterator<Item = TimePoint> + '_ {
        self.slices.keys().copied()
    }

    fn decode(&self, pred: u32, tuple: &[u32], time: Option<TimePoint>) -> Fact {
        Fact {
            predicate: self.c.preds[pred as usize].name.clone(),
            objects: tuple
                .iter()
                .map(|&o| self.consts.name(o).to_string())
                .collect(),
            time,
        }
    }

    pub(crate) fn facts_at(&self, t: TimePoint) -> Vec<Fact> {
        self.slices
            .get(&t)
            .map(|r| r.iter().map(|(p, tu)| self.decode(p, tu, Some(t))).collect())
            .unwrap_or_default()
    }

    pub(crate) fn rigid_facts(&self) -> Vec<Fact> {
        self.rigid
            .iter()
            .map(|(p, tu)| self.decode(p, tu, None))
            .collect()
    }

    pub(crate) fn contains(&self, f: &Fact) -> bool {
        let Some(&pred) = self.c.pred_ids.get(&f.predicate) else {
            return false;
        };
        let Some(tuple) = f
            .objects
            .iter()
            .map(|o| self.consts.get(o))
            .collect::<Option<Vec<u32>>>()
        else {
            return false;
        };
        match f.time {
            None => self.rigid.contains(pred, &tuple),
            Some(t) => self
                .slices
                .get(&t)
                .is_some_and(|r| r.contains(pred, &tuple)),
        }
    }

    pub(crate) fn pred_id(&self, name: &str) -> Option<u32> {
        self.c.pred_ids.get(name).copied()
    }

    /// Facts at `t` over the given predicate ids.
    pub(crate) fn facts_at_over(&self, t: TimePoint, preds: &HashSet<u32>) -> Vec<Fact> {
        self.slices
            .get(&t)
            .map(|r| {
                r.iter()
                    .filter(|(p, _)| preds.contains(p))
                    .map(|(p, tu)| self.decode(p, tu, Some(t)))
                    .collect()
            })
            .unwrap_or_default()
    }
}
