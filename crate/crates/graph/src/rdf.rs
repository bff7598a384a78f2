//! RDF terms and triples with N-Triples reading and writing.

use std::fmt;
use std::io::{self, BufRead, Write};

use oxttl::NTriplesParser;
use thiserror::Error;

use crate::iri::xsd;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal {
        value: String,
        datatype: String,
        lang: Option<String>,
    },
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn typed(value: impl Into<String>, datatype: &str) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: datatype.to_string(),
            lang: None,
        }
    }

    pub fn string(value: impl Into<String>) -> Self {
        Self::typed(value, &xsd("string"))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn literal_value(&self) -> Option<&str> {
        match self {
            Term::Literal { value, .. } => Some(value),
            _ => None,
        }
    }

    fn to_ox(&self) -> oxrdf::Term {
        match self {
            Term::Iri(s) => oxrdf::NamedNode::new_unchecked(s.as_str()).into(),
            Term::Blank(b) => oxrdf::BlankNode::new_unchecked(b.as_str()).into(),
            Term::Literal { value, lang: Some(l), .. } => {
                oxrdf::Literal::new_language_tagged_literal_unchecked(value.as_str(), l.as_str()).into()
            }
            Term::Literal { value, datatype, .. } => {
                oxrdf::Literal::new_typed_literal(value.as_str(), oxrdf::NamedNode::new_unchecked(datatype.as_str()))
                    .into()
            }
        }
    }

    fn from_ox(t: oxrdf::Term) -> Self {
        match t {
            oxrdf::Term::NamedNode(n) => Term::Iri(n.into_string()),
            oxrdf::Term::BlankNode(b) => Term::Blank(b.into_string()),
            oxrdf::Term::Literal(l) => {
                let (value, datatype, lang) = l.destruct();
                let datatype = match (&datatype, &lang) {
                    (Some(d), _) => d.as_str().to_string(),
                    (None, Some(_)) => format!("{}langString", crate::iri::RDF),
                    (None, None) => xsd("string"),
                };
                Term::Literal { value, datatype, lang }
            }
            #[allow(unreachable_patterns)]
            _ => unreachable!("N-Triples has no quoted triples without the rdf-star feature"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ox())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Self {
            subject: Term::Iri(subject.into()),
            predicate: predicate.into(),
            object,
        }
    }
}

impl fmt::Display for Triple {
    /// One N-Triples statement without the trailing newline.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}

pub fn write_ntriples<'a, W: Write>(w: &mut W, triples: impl IntoIterator<Item = &'a Triple>) -> io::Result<()> {
    for t in triples {
        writeln!(w, "{t}")?;
    }
    Ok(())
}

pub fn to_ntriples(triples: &[Triple]) -> String {
    let mut out = Vec::new();
    write_ntriples(&mut out, triples).expect("writing to memory");
    String::from_utf8(out).expect("N-Triples output is UTF-8")
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. } => Some(*line),
            ParseError::Io(_) => None,
        }
    }
}

fn convert(t: oxrdf::Triple) -> Triple {
    Triple {
        subject: Term::from_ox(t.subject.into()),
        predicate: t.predicate.into_string(),
        object: Term::from_ox(t.object),
    }
}

/// Streams triples from N-Triples text one line at a time, so a syntax
/// error names the line holding the bad statement. Iteration yields the
/// first error and stops.
pub fn read_ntriples<R: BufRead>(r: R) -> impl Iterator<Item = Result<Triple, ParseError>> {
    let mut lines = r.lines().enumerate();
    let mut pending: std::vec::IntoIter<Triple> = Vec::new().into_iter();
    let mut failed = false;
    std::iter::from_fn(move || loop {
        if let Some(t) = pending.next() {
            return Some(Ok(t));
        }
        if failed {
            return None;
        }
        let (i, line) = lines.next()?;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                failed = true;
                return Some(Err(e.into()));
            }
        };
        let parsed: Result<Vec<Triple>, _> = NTriplesParser::new()
            .for_slice(line.as_bytes())
            .map(|r| r.map(convert))
            .collect();
        match parsed {
            Ok(v) => pending = v.into_iter(),
            Err(e) => {
                failed = true;
                return Some(Err(ParseError::Syntax {
                    line: i + 1,
                    message: e.message().to_string(),
                }));
            }
        }
    })
}

pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, ParseError> {
    read_ntriples(text.as_bytes()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_round_trips() {
        let t = Triple::new(
            "http://ex.org/s",
            "http://ex.org/p",
            Term::string("quote \" backslash \\ newline \n tab \t é"),
        );
        let text = to_ntriples(std::slice::from_ref(&t));
        assert_eq!(text.lines().count(), 1);
        assert_eq!(parse_ntriples(&text).unwrap(), vec![t]);
    }

    #[test]
    fn typed_and_language_literals() {
        let text = "<http://a/s> <http://a/p> \"1.5\"^^<http://www.w3.org/2001/XMLSchema#decimal> .\n\
                    # comment\n\
                    _:b <http://a/p> \"hi\"@en .\n\
                    <http://a/s> <http://a/p> \"plain\" .\n";
        let ts = parse_ntriples(text).unwrap();
        assert_eq!(ts[0].object, Term::typed("1.5", &xsd("decimal")));
        assert_eq!(ts[1].subject, Term::Blank("b".into()));
        assert!(matches!(&ts[1].object, Term::Literal { lang: Some(l), .. } if l == "en"));
        assert_eq!(ts[2].object, Term::string("plain"));
        assert_eq!(parse_ntriples(&to_ntriples(&ts)).unwrap(), ts);
    }

    #[test]
    fn error_carries_line_number() {
        let text = "<http://a/s> <http://a/p> <http://a/o> .\n\n<http://a/s> <http://a/p> .\n<x> <y> <z> .\n";
        let errs: Vec<_> = read_ntriples(text.as_bytes()).collect();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[1].as_ref().unwrap_err().line(), Some(3));
    }
}
