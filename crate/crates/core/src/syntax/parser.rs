use std::collections::BTreeMap;
use std::path::Path;

use super::lexer::{tokenize, Tok, Token};
use crate::error::{ParseError, Result, SourceSpan};
use crate::model::{
    Atom, Fact, FactSet, PredKind, PredicateDecl, Program, Query, Rule, Sort, Stream, Term,
};

#[derive(Clone, Debug)]
enum RawTerm {
    /// Capitalised identifier with an optional offset.
    Var(String, i64),
    Const(String),
    Int(i64),
}

#[derive(Clone, Debug)]
struct RawAtom {
    name: String,
    args: Vec<(RawTerm, Span)>,
    span: Span,
}

#[derive(Clone, Copy, Debug)]
struct Span {
    line: usize,
    column: usize,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: Option<&'a Path>,
}

#[derive(Default)]
struct RawProgram {
    decls: Vec<(PredicateDecl, Span)>,
    outputs: Vec<(String, Span)>,
    rules: Vec<(RawAtom, Vec<RawAtom>)>,
}

impl<'a> Parser<'a> {
    fn new(src: &str, file: Option<&'a Path>) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src, file)?,
            pos: 0,
            file,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        let t = &self.toks[self.pos];
        Span {
            line: t.line,
            column: t.column,
        }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, span: Span, message: impl Into<String>) -> ParseError {
        ParseError {
            span: SourceSpan {
                file: self.file.map(Path::to_path_buf),
                line: span.line,
                column: span.column,
            },
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error_at(
            self.span(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, Span), ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok((s, span))
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn program(&mut self) -> Result<RawProgram, ParseError> {
        let mut raw = RawProgram::default();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(raw),
                Tok::Decl => {
                    self.next();
                    raw.decls.push(self.decl()?);
                }
                Tok::Output => {
                    self.next();
                    let out = self.ident("an output predicate name")?;
                    self.optional_dot();
                    raw.outputs.push(out);
                }
                _ => {
                    let head = self.atom()?;
                    let mut body = Vec::new();
                    if *self.peek() == Tok::Turnstile {
                        self.next();
                        body.push(self.atom()?);
                        while *self.peek() == Tok::Comma {
                            self.next();
                            body.push(self.atom()?);
                        }
                    }
                    self.expect(Tok::Dot, "`,` or `.`")?;
                    raw.rules.push((head, body));
                }
            }
        }
    }

    fn optional_dot(&mut self) {
        if *self.peek() == Tok::Dot {
            self.next();
        }
    }

    fn decl(&mut self) -> Result<(PredicateDecl, Span), ParseError> {
        let (name, span) = self.ident("a predicate name")?;
        let mut sorts = Vec::new();
        if *self.peek() == Tok::LParen {
            self.next();
            if *self.peek() != Tok::RParen {
                loop {
                    let (s, sp) = self.ident("a sort (`object` or `time`)")?;
                    sorts.push(match s.as_str() {
                        "object" | "obj" => Sort::Object,
                        "time" => Sort::Time,
                        other => {
                            return Err(self.error_at(sp, format!("unknown sort `{other}`")))
                        }
                    });
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
        }
        let (kind, sp) = self.ident("`edb` or `idb`")?;
        let kind = match kind.as_str() {
            "edb" => PredKind::Edb,
            "idb" => PredKind::Idb,
            other => {
                return Err(self.error_at(sp, format!("expected `edb` or `idb`, found `{other}`")))
            }
        };
        self.optional_dot();
        Ok((PredicateDecl::new(name, sorts, kind), span))
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let (name, span) = self.ident("a predicate name")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.next();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
        }
        Ok(RawAtom { name, args, span })
    }

    fn term(&mut self) -> Result<(RawTerm, Span), ParseError> {
        let span = self.span();
        if !matches!(self.peek(), Tok::Int(_) | Tok::Minus | Tok::Ident(_)) {
            return Err(self.unexpected("a term"));
        }
        match self.next() {
            Tok::Int(k) => Ok((RawTerm::Int(self.to_i64(k, span)?), span)),
            Tok::Minus => match self.next() {
                Tok::Int(k) => Ok((RawTerm::Int(-self.to_i64(k, span)?), span)),
                _ => Err(self.error_at(span, "expected an integer after `-`")),
            },
            Tok::Ident(name) => {
                let starts_upper = name.starts_with(|c: char| c.is_ascii_uppercase());
                if !starts_upper {
                    return Ok((RawTerm::Const(name), span));
                }
                let sign = match self.peek() {
                    Tok::Plus => 1,
                    Tok::Minus => -1,
                    _ => return Ok((RawTerm::Var(name, 0), span)),
                };
                self.next();
                let off_span = self.span();
                match self.next() {
                    Tok::Int(k) => Ok((RawTerm::Var(name, sign * self.to_i64(k, off_span)?), span)),
                    _ => Err(self.error_at(off_span, "expected an integer offset")),
                }
            }
            _ => unreachable!("checked by the guard above"),
        }
    }

    fn to_i64(&self, k: u64, span: Span) -> Result<i64, ParseError> {
        i64::try_from(k).map_err(|_| self.error_at(span, "integer is out of range"))
    }

    /// Ground facts only: `Name(args).` lines.
    fn facts(&mut self) -> Result<Vec<RawAtom>, ParseError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            let atom = self.atom()?;
            self.expect(Tok::Dot, "`.` after a fact")?;
            out.push(atom);
        }
        Ok(out)
    }
}

fn resolve_atom(
    p: &Parser<'_>,
    raw: &RawAtom,
    decls: &BTreeMap<String, PredicateDecl>,
) -> Result<Atom, ParseError> {
    let decl = decls
        .get(&raw.name)
        .ok_or_else(|| p.error_at(raw.span, format!("undeclared predicate `{}`", raw.name)))?;
    if decl.arity() != raw.args.len() {
        return Err(p.error_at(
            raw.span,
            format!(
                "`{}` expects {} arguments, found {}",
                raw.name,
                decl.arity(),
                raw.args.len()
            ),
        ));
    }
    let mut args = Vec::with_capacity(raw.args.len());
    for (sort, (term, span)) in decl.sorts.iter().zip(&raw.args) {
        let t = match (sort, term) {
            (Sort::Object, RawTerm::Var(v, 0)) => Term::ObjVar(v.clone()),
            (Sort::Object, RawTerm::Var(v, _)) => {
                return Err(p.error_at(*span, format!("object variable `{v}` cannot carry an offset")))
            }
            (Sort::Object, RawTerm::Const(c)) => Term::Obj(c.clone()),
            (Sort::Object, RawTerm::Int(k)) => {
                return Err(p.error_at(*span, format!("time point `{k}` in an object position")))
            }
            (Sort::Time, RawTerm::Var(v, k)) => Term::time(v.clone(), *k),
            (Sort::Time, RawTerm::Int(k)) if *k < 0 => {
                return Err(p.error_at(*span, format!("negative time point `{k}`")))
            }
            (Sort::Time, RawTerm::Int(k)) => Term::Point(*k as u64),
            (Sort::Time, RawTerm::Const(c)) => {
                return Err(p.error_at(*span, format!("object constant `{c}` in a time position")))
            }
        };
        args.push(t);
    }
    Ok(Atom::new(raw.name.clone(), args))
}

fn parse_raw_program(src: &str, file: Option<&Path>) -> Result<Program> {
    let mut p = Parser::new(src, file)?;
    let raw = p.program()?;
    Ok(build_program(&p, raw)?.0)
}

fn build_program(
    p: &Parser<'_>,
    raw: RawProgram,
) -> Result<(Program, Vec<(String, Span)>), ParseError> {
    let mut decls = BTreeMap::new();
    for (d, span) in raw.decls {
        if decls.contains_key(&d.name) {
            return Err(p.error_at(span, format!("predicate `{}` is declared twice", d.name)));
        }
        decls.insert(d.name.clone(), d);
    }
    let mut rules = Vec::with_capacity(raw.rules.len());
    for (head, body) in &raw.rules {
        let head = resolve_atom(p, head, &decls)?;
        let body = body
            .iter()
            .map(|a| resolve_atom(p, a, &decls))
            .collect::<Result<Vec<_>, _>>()?;
        rules.push(Rule::new(head, body));
    }
    Ok((Program::new(decls.into_values(), rules), raw.outputs))
}

/// Parses a program text with exactly one `.output` directive and validates it.
pub fn parse_query(src: &str) -> Result<Query> {
    parse_query_in(src, None)
}

/// Like [`parse_query`], with `file` reported in error locations.
pub fn parse_query_in(src: &str, file: Option<&Path>) -> Result<Query> {
    let mut p = Parser::new(src, file)?;
    let raw = p.program()?;
    let end = p.span();
    let (program, outputs) = build_program(&p, raw)?;
    match outputs.as_slice() {
        [(name, _)] => Query::new(program, name.clone()),
        [] => Err(p.error_at(end, "missing `.output` directive").into()),
        [_, (_, span), ..] => Err(p.error_at(*span, "more than one `.output` directive").into()),
    }
}

/// Parses declarations and rules, ignoring any `.output` directive. The result is not validated.
pub fn parse_program(src: &str) -> Result<Program> {
    parse_raw_program(src, None)
}

/// Parses a `.facts` text. With a program, facts are checked against its declarations;
/// without one, an integer in the last position is read as the time point.
pub fn parse_dataset(src: &str, context: Option<&Program>) -> Result<FactSet> {
    parse_dataset_in(src, context, None)
}

pub fn parse_dataset_in(
    src: &str,
    context: Option<&Program>,
    file: Option<&Path>,
) -> Result<FactSet> {
    let mut p = Parser::new(src, file)?;
    let raw = p.facts()?;
    let mut out = FactSet::new();
    for atom in &raw {
        out.insert(resolve_fact(&p, atom, context)?);
    }
    Ok(out)
}

/// Parses a `.stream` text: temporal facts only.
pub fn parse_stream(src: &str, context: Option<&Program>) -> Result<Stream> {
    parse_stream_in(src, context, None)
}

pub fn parse_stream_in(
    src: &str,
    context: Option<&Program>,
    file: Option<&Path>,
) -> Result<Stream> {
    let mut p = Parser::new(src, file)?;
    let raw = p.facts()?;
    let mut stream = Stream::new();
    for atom in &raw {
        let fact = resolve_fact(&p, atom, context)?;
        if !fact.is_temporal() {
            return Err(p
                .error_at(atom.span, format!("rigid fact `{fact}` in a stream"))
                .into());
        }
        stream.insert(fact)?;
    }
    Ok(stream)
}

fn resolve_fact(p: &Parser<'_>, raw: &RawAtom, context: Option<&Program>) -> Result<Fact> {
    for (t, span) in &raw.args {
        match t {
            RawTerm::Var(v, _) => {
                return Err(p
                    .error_at(*span, format!("variable `{v}` in a ground fact"))
                    .into())
            }
            RawTerm::Int(k) if *k < 0 => {
                return Err(p.error_at(*span, format!("negative time point `{k}`")).into())
            }
            _ => {}
        }
    }
    match context {
        Some(program) => {
            let decls: BTreeMap<String, PredicateDecl> =
                program.decls().map(|d| (d.name.clone(), d.clone())).collect();
            let atom = resolve_atom(p, raw, &decls)?;
            Fact::from_atom(&atom)
        }
        None => {
            let n = raw.args.len();
            let mut objects = Vec::new();
            let mut time = None;
            for (i, (t, span)) in raw.args.iter().enumerate() {
                match t {
                    RawTerm::Const(c) => objects.push(c.clone()),
                    RawTerm::Int(k) if i + 1 == n => time = Some(*k as u64),
                    RawTerm::Int(k) => {
                        return Err(p
                            .error_at(*span, format!("time point `{k}` must be the last argument"))
                            .into())
                    }
                    RawTerm::Var(..) => unreachable!("rejected above"),
                }
            }
            Ok(Fact {
                predicate: raw.name.clone(),
                objects,
                time,
            })
        }
    }
}
