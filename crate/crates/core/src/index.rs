//! In-memory inverted index with BM25 and tf-idf ranking.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    docnos: Vec<String>,
    #[serde(skip)]
    ordinals: HashMap<String, u32>,
    total_tokens: u64,
}

/// Weighting model for first- and second-pass retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum RankingParams {
    Bm25 {
        k1: f64,
        b: f64,
    },
    /// `(1 + ln tf) * ln(1 + N / df)`, no length normalization.
    TfIdf,
}

impl Default for RankingParams {
    fn default() -> Self {
        RankingParams::Bm25 { k1: 1.2, b: 0.75 }
    }
}

impl RankingParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RankingParams::Bm25 { k1, b } if !(k1 >= 0.0 && (0.0..=1.0).contains(&b)) => Err(Error::Config(format!(
                "BM25 needs k1 >= 0 and 0 <= b <= 1, got k1={k1}, b={b}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub docno: String,
    pub score: f64,
}

/// Documents for one topic in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub topic: u32,
    pub entries: Vec<ScoredDoc>,
}

impl RankedList {
    pub fn empty(topic: u32) -> Self {
        Self {
            topic,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl InvertedIndex {
    pub fn build<I, S>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, TokenStream)>,
        S: Into<String>,
    {
        let mut builder = IndexBuilder::default();
        for (docno, stream) in docs {
            builder.add(docno.into(), &stream)?;
        }
        Ok(builder.finish())
    }

    pub fn doc_count(&self) -> usize {
        self.docnos.len()
    }

    pub fn docno(&self, ordinal: u32) -> Option<&str> {
        self.docnos.get(ordinal as usize).map(String::as_str)
    }

    pub fn ordinal(&self, docno: &str) -> Option<u32> {
        self.ordinals.get(docno).copied()
    }

    pub fn doc_length(&self, ordinal: u32) -> Option<u32> {
        self.doc_lengths.get(ordinal as usize).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.docnos.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.docnos.len() as f64
        }
    }

    /// Rebuilds lookup tables after deserialization and checks structural invariants.
    pub fn restore(mut self) -> Result<Self> {
        let n = self.docnos.len();
        if self.doc_lengths.len() != n {
            return Err(Error::Invariant("doc length table does not match docno table".into()));
        }
        self.ordinals = HashMap::with_capacity(n);
        for (i, d) in self.docnos.iter().enumerate() {
            if self.ordinals.insert(d.clone(), i as u32).is_some() {
                return Err(Error::DuplicateDocno(d.clone()));
            }
        }
        let mut lengths = vec![0u64; n];
        for list in self.postings.values() {
            for (i, p) in list.iter().enumerate() {
                if p.doc as usize >= n || p.tf == 0 || (i > 0 && list[i - 1].doc >= p.doc) {
                    return Err(Error::Invariant("malformed posting list".into()));
                }
                lengths[p.doc as usize] += u64::from(p.tf);
            }
        }
        if lengths.iter().zip(&self.doc_lengths).any(|(&a, &b)| a != u64::from(b)) {
            return Err(Error::Invariant("doc lengths disagree with postings".into()));
        }
        Ok(self)
    }

    fn term_weight(&self, params: &RankingParams, tf: u32, df: usize, doc_len: u32) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        let tf = f64::from(tf);
        match *params {
            RankingParams::Bm25 { k1, b } => {
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let avg = self.avg_doc_length().max(f64::MIN_POSITIVE);
                let norm = k1 * (1.0 - b + b * f64::from(doc_len) / avg);
                idf * tf * (k1 + 1.0) / (tf + norm)
            }
            RankingParams::TfIdf => (1.0 + tf.ln()) * (1.0 + n / df).ln(),
        }
    }

    /// Scores every document matching at least one query term and returns the
    /// top `depth`, ties broken by ascending docno. Repeated query terms count
    /// as higher query term frequency.
    pub fn retrieve<S: AsRef<str>>(
        &self,
        topic: u32,
        query: &[S],
        depth: usize,
        params: &RankingParams,
    ) -> Result<RankedList> {
        if depth == 0 {
            return Err(Error::Precondition("retrieval depth must be at least 1".into()));
        }
        if query.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut qtf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in query {
            *qtf.entry(t.as_ref()).or_default() += 1;
        }

        let mut acc: HashMap<u32, f64> = HashMap::new();
        for (term, &count) in &qtf {
            let postings = self.postings(term);
            let df = postings.len();
            for p in postings {
                let w = self.term_weight(params, p.tf, df, self.doc_lengths[p.doc as usize]);
                *acc.entry(p.doc).or_default() += f64::from(count) * w;
            }
        }

        let mut entries: Vec<ScoredDoc> = acc
            .into_iter()
            .map(|(doc, score)| ScoredDoc {
                docno: self.docnos[doc as usize].clone(),
                score,
            })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.docno.cmp(&b.docno)));
        entries.truncate(depth);
        Ok(RankedList { topic, entries })
    }
}

#[derive(Default)]
struct IndexBuilder {
    index: InvertedIndex,
}

impl IndexBuilder {
    fn add(&mut self, docno: String, stream: &TokenStream) -> Result<()> {
        let ordinal = self.index.docnos.len() as u32;
        if self.index.ordinals.insert(docno.clone(), ordinal).is_some() {
            return Err(Error::DuplicateDocno(docno));
        }
        let mut counts: HashMap<&str, u32> = HashMap::new();
        for t in stream.tokens() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for (term, tf) in counts {
            self.index
                .postings
                .entry(term.to_owned())
                .or_default()
                .push(Posting { doc: ordinal, tf });
        }
        self.index.docnos.push(docno);
        self.index.doc_lengths.push(stream.len() as u32);
        self.index.total_tokens += stream.len() as u64;
        Ok(())
    }

    fn finish(self) -> InvertedIndex {
        self.index
    }
}

/// The first `n` documents of a ranking, used as pseudo-relevant feedback.
pub fn feedback_set(ranked: &RankedList, n: usize) -> Vec<&str> {
    ranked.entries.iter().take(n).map(|e| e.docno.as_str()).collect()
}
