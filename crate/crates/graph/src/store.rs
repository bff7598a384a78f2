//! Immutable in-memory triple store over interned term ids with SPO, POS
//! and OSP sorted indexes.

use std::collections::HashMap;
use std::io::BufRead;

use crate::rdf::{read_ntriples, ParseError, Term, Triple};

pub type Id = u32;

#[derive(Debug, Default, Clone)]
pub struct Dictionary {
    terms: Vec<Term>,
    ids: HashMap<Term, Id>,
}

impl Dictionary {
    pub fn intern(&mut self, t: Term) -> Id {
        if let Some(&id) = self.ids.get(&t) {
            return id;
        }
        let id = Id::try_from(self.terms.len()).expect("more than 2^32 distinct terms");
        self.terms.push(t.clone());
        self.ids.insert(t, id);
        id
    }

    pub fn id(&self, t: &Term) -> Option<Id> {
        self.ids.get(t).copied()
    }

    pub fn term(&self, id: Id) -> &Term {
        &self.terms[id as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Default, Clone)]
pub struct TripleStore {
    dict: Dictionary,
    spo: Vec<[Id; 3]>,
    pos: Vec<[Id; 3]>,
    osp: Vec<[Id; 3]>,
    /// `spo[subject_start[s]..subject_start[s + 1]]` holds the rows of `s`.
    subject_start: Vec<usize>,
}

/// Range of rows in a sorted index whose leading columns equal `prefix`.
fn prefix_range<'a>(index: &'a [[Id; 3]], prefix: &[Id]) -> &'a [[Id; 3]] {
    let lo = index.partition_point(|row| row[..prefix.len()] < *prefix);
    let hi = index.partition_point(|row| row[..prefix.len()] <= *prefix);
    &index[lo..hi]
}

impl TripleStore {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut dict = Dictionary::default();
        let mut spo: Vec<[Id; 3]> = triples
            .into_iter()
            .map(|t| {
                let s = dict.intern(t.subject);
                let p = dict.intern(Term::Iri(t.predicate));
                let o = dict.intern(t.object);
                [s, p, o]
            })
            .collect();
        spo.sort_unstable();
        spo.dedup();
        let mut pos: Vec<[Id; 3]> = spo.iter().map(|&[s, p, o]| [p, o, s]).collect();
        pos.sort_unstable();
        let mut osp: Vec<[Id; 3]> = spo.iter().map(|&[s, p, o]| [o, s, p]).collect();
        osp.sort_unstable();
        let mut subject_start = vec![0; dict.len() + 1];
        for r in &spo {
            subject_start[r[0] as usize + 1] += 1;
        }
        for i in 1..subject_start.len() {
            subject_start[i] += subject_start[i - 1];
        }
        Self {
            dict,
            spo,
            pos,
            osp,
            subject_start,
        }
    }

    /// Loads N-Triples, stopping at the first syntax error.
    pub fn load<R: BufRead>(r: R) -> Result<Self, ParseError> {
        let triples: Vec<Triple> = read_ntriples(r).collect::<Result<_, _>>()?;
        Ok(Self::from_triples(triples))
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn dict(&self) -> &Dictionary {
        &self.dict
    }

    pub fn id(&self, t: &Term) -> Option<Id> {
        self.dict.id(t)
    }

    pub fn iri_id(&self, iri: &str) -> Option<Id> {
        self.dict.id(&Term::Iri(iri.to_string()))
    }

    pub fn term(&self, id: Id) -> &Term {
        self.dict.term(id)
    }

    /// Rows `[s, p, o]` in SPO order.
    pub fn triples(&self) -> &[[Id; 3]] {
        &self.spo
    }

    fn rows_of(&self, s: Id) -> &[[Id; 3]] {
        match self.subject_start.get(s as usize..s as usize + 2) {
            Some(&[lo, hi]) => &self.spo[lo..hi],
            _ => &[],
        }
    }

    pub fn objects(&self, s: Id, p: Id) -> impl Iterator<Item = Id> + '_ {
        prefix_range(self.rows_of(s), &[s, p]).iter().map(|r| r[2])
    }

    pub fn subjects(&self, p: Id, o: Id) -> impl Iterator<Item = Id> + '_ {
        prefix_range(&self.pos, &[p, o]).iter().map(|r| r[2])
    }

    /// `(s, o)` pairs for predicate `p`, ordered by object.
    pub fn pairs(&self, p: Id) -> impl Iterator<Item = (Id, Id)> + '_ {
        prefix_range(&self.pos, &[p]).iter().map(|r| (r[2], r[1]))
    }

    pub fn contains(&self, s: Id, p: Id, o: Id) -> bool {
        self.spo.binary_search(&[s, p, o]).is_ok()
    }

    /// Triples matching a pattern with optional positions, as `[s, p, o]`,
    /// served from whichever index has the bound columns as a prefix.
    pub fn matching(&self, s: Option<Id>, p: Option<Id>, o: Option<Id>) -> Vec<[Id; 3]> {
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                if self.contains(s, p, o) {
                    vec![[s, p, o]]
                } else {
                    vec![]
                }
            }
            (Some(s), Some(p), None) => prefix_range(self.rows_of(s), &[s, p]).to_vec(),
            (Some(s), None, None) => self.rows_of(s).to_vec(),
            (None, Some(p), Some(o)) => prefix_range(&self.pos, &[p, o]).iter().map(|&[p, o, s]| [s, p, o]).collect(),
            (None, Some(p), None) => prefix_range(&self.pos, &[p]).iter().map(|&[p, o, s]| [s, p, o]).collect(),
            (Some(s), None, Some(o)) => prefix_range(&self.osp, &[o, s]).iter().map(|&[o, s, p]| [s, p, o]).collect(),
            (None, None, Some(o)) => prefix_range(&self.osp, &[o]).iter().map(|&[o, s, p]| [s, p, o]).collect(),
            (None, None, None) => self.spo.clone(),
        }
    }

    /// All three orderings hold the same triple set.
    pub fn indexes_consistent(&self) -> bool {
        let mut a: Vec<[Id; 3]> = self.pos.iter().map(|&[p, o, s]| [s, p, o]).collect();
        let mut b: Vec<[Id; 3]> = self.osp.iter().map(|&[o, s, p]| [s, p, o]).collect();
        a.sort_unstable();
        b.sort_unstable();
        let starts = (0..self.dict.len() as Id).all(|s| self.rows_of(s) == prefix_range(&self.spo, &[s]));
        a == self.spo && b == self.spo && starts
    }
}
