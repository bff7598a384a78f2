//! Property paths and basic graph patterns with literal FILTERs.
//!
//! A starred step `p*` relies on `p` being materialized transitively at load
//! time, so it evaluates as zero or one hop over `p` with no runtime
//! chaining.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::iri::{xsd, IriScheme};
use crate::rdf::Term;
use crate::store::{Id, TripleStore};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub predicate: String,
    pub star: bool,
}

impl PathStep {
    pub fn new(predicate: impl Into<String>) -> Self {
        Self {
            predicate: predicate.into(),
            star: false,
        }
    }

    pub fn star(predicate: impl Into<String>) -> Self {
        Self {
            predicate: predicate.into(),
            star: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathQuery {
    pub steps: Vec<PathStep>,
    pub start: Option<Term>,
    pub end: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("empty path")]
    EmptyPath,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

fn syntax(line: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        line,
        message: message.into(),
    }
}

/// Splits `p1/p2*/<http://...>` on slashes outside angle brackets.
pub fn parse_path(text: &str, scheme: &IriScheme) -> Result<Vec<PathStep>, QueryError> {
    parse_path_at(text, scheme, 1)
}

fn parse_path_at(text: &str, scheme: &IriScheme, line: usize) -> Result<Vec<PathStep>, QueryError> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0, 0);
    for (i, c) in text.char_indices() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            '/' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    let mut steps = Vec::new();
    for p in parts {
        let p = p.trim();
        let (name, star) = match p.strip_suffix('*') {
            Some(n) => (n, true),
            None => (p, false),
        };
        if name.is_empty() {
            return Err(QueryError::EmptyPath);
        }
        let predicate = scheme
            .expand(name)
            .ok_or_else(|| syntax(line, format!("unknown prefix or malformed IRI in {name:?}")))?;
        steps.push(PathStep { predicate, star });
    }
    Ok(steps)
}

/// Nodes occurring as subject or object anywhere; the domain of a
/// zero-length step when neither end is bound.
fn all_nodes(store: &TripleStore) -> Vec<Id> {
    let mut v: Vec<Id> = store.triples().iter().flat_map(|r| [r[0], r[2]]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn normalize(mut v: Vec<(Id, Id)>) -> Vec<(Id, Id)> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Extends each pair at its `key` end by one hop; pairs sharing a key
/// share one index lookup.
fn step_pairs(
    frontier: Vec<(Id, Id)>,
    star: bool,
    key: impl Fn(&(Id, Id)) -> Id,
    hop: impl Fn(Id) -> Vec<Id>,
    join: impl Fn((Id, Id), Id) -> (Id, Id),
) -> Vec<(Id, Id)> {
    let mut frontier = frontier;
    frontier.sort_unstable_by_key(|pair| (key(pair), *pair));
    let mut out = Vec::with_capacity(frontier.len());
    for run in frontier.chunk_by(|a, b| key(a) == key(b)) {
        let next = hop(key(&run[0]));
        for &pair in run {
            if star {
                out.push(pair);
            }
            out.extend(next.iter().map(|&n| join(pair, n)));
        }
    }
    normalize(out)
}

fn forward(store: &TripleStore, frontier: Vec<(Id, Id)>, step: &PathStep) -> Vec<(Id, Id)> {
    let Some(p) = store.iri_id(&step.predicate) else {
        return if step.star { frontier } else { Vec::new() };
    };
    step_pairs(frontier, step.star, |&(_, x)| x, |x| store.objects(x, p).collect(), |(a, _), y| (a, y))
}

fn backward(store: &TripleStore, frontier: Vec<(Id, Id)>, step: &PathStep) -> Vec<(Id, Id)> {
    let Some(p) = store.iri_id(&step.predicate) else {
        return if step.star { frontier } else { Vec::new() };
    };
    step_pairs(frontier, step.star, |&(x, _)| x, |x| store.subjects(p, x).collect(), |(_, b), w| (w, b))
}

/// `(start, end)` id pairs connected by the path, sorted and distinct.
/// Unknown terms or predicates give an empty result rather than an error.
pub fn eval_path(store: &TripleStore, q: &PathQuery) -> Result<Vec<(Id, Id)>, QueryError> {
    if q.steps.is_empty() {
        return Err(QueryError::EmptyPath);
    }
    let lookup = |t: &Option<Term>| t.as_ref().map(|t| store.id(t));
    let (start, end) = (lookup(&q.start), lookup(&q.end));
    if matches!(start, Some(None)) || matches!(end, Some(None)) {
        return Ok(Vec::new());
    }
    let (start, end) = (start.flatten(), end.flatten());
    Ok(match (start, end) {
        (Some(s), e) => {
            let mut f = vec![(s, s)];
            for step in &q.steps {
                f = forward(store, f, step);
            }
            f.retain(|&(_, y)| e.is_none_or(|e| e == y));
            f
        }
        (None, Some(e)) => {
            let mut f = vec![(e, e)];
            for step in q.steps.iter().rev() {
                f = backward(store, f, step);
            }
            f
        }
        (None, None) => {
            let first = &q.steps[0];
            let mut f: Vec<(Id, Id)> = match store.iri_id(&first.predicate) {
                Some(p) => store.pairs(p).collect(),
                None => Vec::new(),
            };
            if first.star {
                f.extend(all_nodes(store).into_iter().map(|x| (x, x)));
            }
            let mut f = normalize(f);
            for step in &q.steps[1..] {
                f = forward(store, f, step);
            }
            f
        }
    })
}

/// `eval_path` with results resolved to terms.
pub fn eval_path_terms(store: &TripleStore, q: &PathQuery) -> Result<Vec<(Term, Term)>, QueryError> {
    Ok(eval_path(store, q)?
        .into_iter()
        .map(|(a, b)| (store.term(a).clone(), store.term(b).clone()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var(String),
    Term(Term),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub subject: Node,
    pub path: Vec<PathStep>,
    pub object: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub var: String,
    pub op: CmpOp,
    pub value: Term,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Query {
    pub select: Vec<String>,
    pub patterns: Vec<Pattern>,
    pub filters: Vec<Filter>,
}

const NUMERIC: [&str; 4] = ["decimal", "integer", "double", "float"];

fn literal_key(t: &Term) -> Option<(&'static str, f64, &str)> {
    let Term::Literal { value, datatype, .. } = t else {
        return None;
    };
    let local = datatype.strip_prefix(crate::iri::XSD)?;
    if NUMERIC.contains(&local) {
        return value.parse().ok().map(|v| ("number", v, ""));
    }
    match local {
        "gYear" => value.parse().ok().map(|v| ("gYear", v, "")),
        // both the standard `--01` and the bare `1` forms
        "gMonth" => value.trim_start_matches('-').parse().ok().map(|v| ("gMonth", v, "")),
        "date" | "dateTime" | "string" => Some(("text", 0.0, value.as_str())),
        _ => None,
    }
}

/// Value comparison for FILTERs; `None` when the terms are incomparable,
/// which makes the filter fail.
pub fn compare(a: &Term, b: &Term) -> Option<Ordering> {
    match (literal_key(a), literal_key(b)) {
        (Some((ka, va, sa)), Some((kb, vb, sb))) if ka == kb => {
            if ka == "text" {
                // dates compare lexically only against dates
                let same = matches!((a, b), (Term::Literal { datatype: da, .. }, Term::Literal { datatype: db, .. }) if da == db);
                same.then(|| sa.cmp(sb))
            } else {
                va.partial_cmp(&vb)
            }
        }
        _ => (a == b).then_some(Ordering::Equal),
    }
}

fn passes(f: &Filter, t: &Term) -> bool {
    let c = compare(t, &f.value);
    match f.op {
        CmpOp::Lt => c == Some(Ordering::Less),
        CmpOp::Le => matches!(c, Some(Ordering::Less | Ordering::Equal)),
        CmpOp::Gt => c == Some(Ordering::Greater),
        CmpOp::Ge => matches!(c, Some(Ordering::Greater | Ordering::Equal)),
        CmpOp::Eq => c == Some(Ordering::Equal),
        CmpOp::Ne => c != Some(Ordering::Equal),
    }
}

type Row = HashMap<String, Id>;

fn resolve(store: &TripleStore, n: &Node, row: &Row) -> Result<Option<Id>, ()> {
    match n {
        Node::Var(v) => Ok(row.get(v).copied()),
        // a constant absent from the store can match nothing
        Node::Term(t) => store.id(t).map(Some).ok_or(()),
    }
}

fn bound_score(p: &Pattern, vars: &BTreeSet<String>) -> usize {
    let b = |n: &Node| match n {
        Node::Var(v) => vars.contains(v),
        Node::Term(_) => true,
    };
    2 * b(&p.subject) as usize + b(&p.object) as usize
}

/// Evaluates the patterns by greedy join, most-bound pattern first,
/// applying each FILTER as soon as its variable is bound. Rows are
/// distinct and sorted.
pub fn evaluate(store: &TripleStore, q: &Query) -> Result<Vec<Vec<Term>>, QueryError> {
    let mut rows: Vec<Row> = vec![Row::new()];
    let mut vars: BTreeSet<String> = BTreeSet::new();
    let mut remaining: Vec<&Pattern> = q.patterns.iter().collect();
    let mut pending: Vec<&Filter> = q.filters.iter().collect();
    while !remaining.is_empty() && !rows.is_empty() {
        let (i, _) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(i, p)| (bound_score(p, &vars), std::cmp::Reverse(*i)))
            .expect("nonempty");
        let p = remaining.remove(i);
        let mut next = Vec::new();
        for row in &rows {
            let (Ok(s), Ok(o)) = (resolve(store, &p.subject, row), resolve(store, &p.object, row)) else {
                continue;
            };
            let pq = PathQuery {
                steps: p.path.clone(),
                start: s.map(|x| store.term(x).clone()),
                end: o.map(|x| store.term(x).clone()),
            };
            for (a, b) in eval_path(store, &pq)? {
                let mut r = row.clone();
                let mut ok = true;
                for (n, val) in [(&p.subject, a), (&p.object, b)] {
                    if let Node::Var(v) = n {
                        match r.get(v) {
                            Some(&x) if x != val => ok = false,
                            _ => {
                                r.insert(v.clone(), val);
                            }
                        }
                    }
                }
                if ok {
                    next.push(r);
                }
            }
        }
        for n in [&p.subject, &p.object] {
            if let Node::Var(v) = n {
                vars.insert(v.clone());
            }
        }
        pending.retain(|f| {
            if !vars.contains(&f.var) {
                return true;
            }
            next.retain(|r| passes(f, store.term(r[&f.var])));
            false
        });
        rows = next;
    }
    let select: Vec<String> = if q.select.is_empty() { vars.iter().cloned().collect() } else { q.select.clone() };
    let mut out: BTreeSet<Vec<Term>> = BTreeSet::new();
    for r in rows {
        // filters on variables never bound reject every row
        if !pending.is_empty() {
            continue;
        }
        let row: Option<Vec<Term>> = select.iter().map(|v| r.get(v).map(|&id| store.term(id).clone())).collect();
        if let Some(row) = row {
            out.insert(row);
        }
    }
    Ok(out.into_iter().collect())
}

fn tokenize(line: &str, n: usize) -> Result<Vec<String>, QueryError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let (mut in_str, mut in_iri, mut escaped) = (false, false, false);
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        if in_str {
            cur.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                cur.push(c);
            }
            // a bare `<` or `<=` is a comparison operator
            '<' if (cur.is_empty() || cur.ends_with('/') || cur.ends_with("^^"))
                && chars.peek().is_some_and(|n| !n.is_whitespace() && *n != '=') =>
            {
                in_iri = true;
                cur.push(c);
            }
            '>' if in_iri => {
                in_iri = false;
                cur.push(c);
            }
            c if c.is_whitespace() && !in_iri => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if in_str || in_iri {
        return Err(syntax(n, "unterminated literal or IRI"));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    if out.last().is_some_and(|t| t == ".") {
        out.pop();
    }
    Ok(out)
}

/// One term in query syntax: `<iri>`, a prefixed name, `a`, a quoted
/// literal with optional `^^datatype`, or a bare number.
pub fn parse_term_text(text: &str, scheme: &IriScheme) -> Result<Term, QueryError> {
    parse_term(text.trim(), scheme, 1)
}

fn parse_term(tok: &str, scheme: &IriScheme, n: usize) -> Result<Term, QueryError> {
    if let Some(rest) = tok.strip_prefix('"') {
        let close = rest.rfind('"').ok_or_else(|| syntax(n, "unterminated literal"))?;
        let lex = rest[..close].replace("\\\"", "\"").replace("\\\\", "\\");
        let tail = &rest[close + 1..];
        return match tail.strip_prefix("^^") {
            Some(dt) => Ok(Term::typed(
                lex,
                &scheme.expand(dt).ok_or_else(|| syntax(n, format!("bad datatype {dt:?}")))?,
            )),
            None if tail.is_empty() => Ok(Term::string(lex)),
            None => Err(syntax(n, format!("unexpected {tail:?} after literal"))),
        };
    }
    if tok.parse::<f64>().is_ok() {
        return Ok(Term::typed(tok, &xsd("decimal")));
    }
    scheme
        .expand(tok)
        .map(Term::Iri)
        .ok_or_else(|| syntax(n, format!("cannot read term {tok:?}")))
}

fn parse_node(tok: &str, scheme: &IriScheme, n: usize) -> Result<Node, QueryError> {
    match tok.strip_prefix('?') {
        Some(v) if !v.is_empty() => Ok(Node::Var(v.to_string())),
        Some(_) => Err(syntax(n, "empty variable name")),
        None => parse_term(tok, scheme, n).map(Node::Term),
    }
}

/// Line-oriented pattern syntax: an optional `SELECT ?a ?b` line, one
/// `subject path object` pattern per line (trailing ` .` allowed), and
/// `FILTER ?var op literal` lines. `#` starts a comment line.
pub fn parse_query(text: &str, scheme: &IriScheme) -> Result<Query, QueryError> {
    let mut q = Query::default();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks = tokenize(line, n)?;
        match toks[0].to_ascii_uppercase().as_str() {
            "SELECT" => {
                for t in &toks[1..] {
                    match parse_node(t, scheme, n)? {
                        Node::Var(v) => q.select.push(v),
                        Node::Term(_) => return Err(syntax(n, "SELECT lists variables only")),
                    }
                }
            }
            "FILTER" => {
                let [_, var, op, val] = toks.as_slice() else {
                    return Err(syntax(n, "expected FILTER ?var op value"));
                };
                let Some(var) = var.strip_prefix('?') else {
                    return Err(syntax(n, "FILTER needs a variable"));
                };
                let op = match op.as_str() {
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    ">" => CmpOp::Gt,
                    ">=" => CmpOp::Ge,
                    "=" => CmpOp::Eq,
                    "!=" => CmpOp::Ne,
                    other => return Err(syntax(n, format!("unknown operator {other:?}"))),
                };
                q.filters.push(Filter {
                    var: var.to_string(),
                    op,
                    value: parse_term(val, scheme, n)?,
                });
            }
            _ => {
                let [s, p, o] = toks.as_slice() else {
                    return Err(syntax(n, format!("expected subject path object, got {} tokens", toks.len())));
                };
                q.patterns.push(Pattern {
                    subject: parse_node(s, scheme, n)?,
                    path: parse_path_at(p, scheme, n)?,
                    object: parse_node(o, scheme, n)?,
                });
            }
        }
    }
    if q.patterns.is_empty() {
        return Err(syntax(1, "no patterns"));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iri::KWG_ONT;
    use crate::rdf::Triple;

    fn store() -> TripleStore {
        let e = |s: &str, p: &str, o: &str| Triple::new(format!("http://x/{s}"), format!("{KWG_ONT}{p}"), Term::iri(format!("http://x/{o}")));
        TripleStore::from_triples(vec![
            e("obs", "foi", "c1"),
            e("c1", "sfContains", "c2"),
            e("c1", "sfContains", "c3"),
            e("c2", "sfContains", "c4"),
            e("c1", "sfContains", "c4"),
        ])
    }

    fn x(n: &str) -> Term {
        Term::iri(format!("http://x/{n}"))
    }

    #[test]
    fn path_syntax() {
        let s = IriScheme::default();
        let p = parse_path("sosa:hasFeatureOfInterest/kwg-ont:sfContains*/<http://a/b/c>", &s).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p[1].star && !p[0].star);
        assert_eq!(p[2].predicate, "http://a/b/c");
        assert!(parse_path("a//b", &s).is_err());
        assert!(parse_path("zz:p", &s).is_err());
    }

    #[test]
    fn star_is_zero_or_one_hop() {
        let st = store();
        let s = IriScheme::default();
        let q = PathQuery {
            steps: parse_path("kwg-ont:foi/kwg-ont:sfContains*", &s).unwrap(),
            start: Some(x("obs")),
            end: None,
        };
        let ends: BTreeSet<Term> = eval_path_terms(&st, &q).unwrap().into_iter().map(|(_, b)| b).collect();
        assert_eq!(ends, [x("c1"), x("c2"), x("c3"), x("c4")].into_iter().collect());
        let back = PathQuery { start: None, end: Some(x("c4")), ..q.clone() };
        assert_eq!(eval_path_terms(&st, &back).unwrap(), vec![(x("obs"), x("c4"))]);
        let none = PathQuery { start: Some(x("c3")), ..q };
        assert!(eval_path(&st, &none).unwrap().is_empty());
    }

    #[test]
    fn literal_comparison() {
        let d = |v: &str| Term::typed(v, &xsd("date"));
        assert_eq!(compare(&d("2010-01-12"), &d("2010-01-10")), Some(Ordering::Greater));
        let m = |v: &str| Term::typed(v, &xsd("gMonth"));
        assert_eq!(compare(&m("--01"), &m("1")), Some(Ordering::Equal));
        assert_eq!(compare(&d("2010-01-12"), &Term::string("2010-01-12")), None);
        let n = |v: &str| Term::typed(v, &xsd("decimal"));
        assert_eq!(compare(&n("10"), &n("9.5")), Some(Ordering::Greater));
    }

    #[test]
    fn query_text() {
        let s = IriScheme::default();
        let q = parse_query(
            "SELECT ?o ?c\n# comment\n?o kwg-ont:foi/kwg-ont:sfContains ?c .\nFILTER ?c != <http://x/c3>\n",
            &s,
        )
        .unwrap();
        let rows = evaluate(&store(), &q).unwrap();
        assert_eq!(rows, vec![vec![x("obs"), x("c2")], vec![x("obs"), x("c4")]]);
        assert!(parse_query("?a ?b", &s).is_err());
        assert!(parse_query("FILTER ?x ~ 1\n?a a ?b", &s).is_err());
    }
}
