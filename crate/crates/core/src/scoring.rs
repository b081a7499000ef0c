//! Partition-level tf-idf and candidate term lists.
//!
//! Each partition of a feedback document plays the role of a document:
//! term frequency is normalized by the partition's modal frequency and idf is
//! `log10(P / partitions containing the term)`. A term's score in a document is
//! its best score over that document's partitions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::error::{Error, Result};
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTerm {
    pub term: String,
    pub score: f64,
    pub source_doc: String,
}

/// Candidate expansion terms of one topic, best first, one entry per term.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateList {
    pub topic: u32,
    pub entries: Vec<CandidateTerm>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Descending score, then ascending term.
fn by_score_then_term(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

pub fn tf_norm(term: &str, partition: &Partition) -> Result<f64> {
    let max = partition
        .term_freqs
        .values()
        .copied()
        .max()
        .ok_or(Error::EmptyPartition)?;
    Ok(f64::from(partition.freq(term)) / f64::from(max))
}

pub fn idf_partition(term: &str, partitions: &[Partition]) -> Result<f64> {
    let containing = partitions.iter().filter(|p| p.contains(term)).count();
    if containing == 0 {
        return Err(Error::UndefinedIdf(term.to_owned()));
    }
    Ok(idf_value(partitions.len(), containing))
}

fn idf_value(total: usize, containing: usize) -> f64 {
    (total as f64 / containing as f64).log10()
}

/// Best tf-idf of every term of the document over its partitions.
pub fn score_partitions(partitions: &[Partition]) -> Result<BTreeMap<String, f64>> {
    if partitions.is_empty() {
        return Err(Error::Precondition("cannot score a document with no partitions".into()));
    }
    let mut containing: HashMap<&str, usize> = HashMap::new();
    for p in partitions {
        for term in p.term_freqs.keys() {
            *containing.entry(term.as_str()).or_default() += 1;
        }
    }
    let total = partitions.len();
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for p in partitions {
        let max = p.term_freqs.values().copied().max().ok_or(Error::EmptyPartition)?;
        for (term, &freq) in &p.term_freqs {
            let score = f64::from(freq) / f64::from(max) * idf_value(total, containing[term.as_str()]);
            best.entry(term.clone())
                .and_modify(|s| *s = s.max(score))
                .or_insert(score);
        }
    }
    Ok(best)
}

/// The `n` best-scoring terms of one document; ties go to the smaller term.
pub fn top_n_terms(scores: &BTreeMap<String, f64>, n: usize, source_doc: &str) -> Vec<CandidateTerm> {
    let mut ranked: Vec<(&str, f64)> = scores.iter().map(|(t, &s)| (t.as_str(), s)).collect();
    ranked.sort_by(|&a, &b| by_score_then_term(a, b));
    ranked
        .into_iter()
        .take(n)
        .map(|(term, score)| CandidateTerm {
            term: term.to_owned(),
            score,
            source_doc: source_doc.to_owned(),
        })
        .collect()
}

/// Pools per-document candidates, keeping each term's highest score
/// (the smaller docno wins on equal scores), and sorts the result.
pub fn merge_candidates<I>(per_doc: I, topic: u32) -> CandidateList
where
    I: IntoIterator<Item = Vec<CandidateTerm>>,
{
    let mut best: HashMap<String, CandidateTerm> = HashMap::new();
    for c in per_doc.into_iter().flatten() {
        match best.get_mut(&c.term) {
            Some(cur) => {
                let better = c.score > cur.score || (c.score == cur.score && c.source_doc < cur.source_doc);
                if better {
                    *cur = c;
                }
            }
            None => {
                best.insert(c.term.clone(), c);
            }
        }
    }
    let mut entries: Vec<CandidateTerm> = best.into_values().collect();
    entries.sort_by(|a, b| by_score_then_term((&a.term, a.score), (&b.term, b.score)));
    CandidateList { topic, entries }
}

/// Writes `topic<TAB>term<TAB>score` lines in list order.
pub fn write_keywords<'a, W, I>(lists: I, mut sink: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a CandidateList>,
{
    for list in lists {
        for c in &list.entries {
            writeln!(sink, "{}\t{}\t{:.4}", list.topic, c.term, c.score)?;
        }
    }
    sink.flush()?;
    Ok(())
}
