//! Tied-score term groups and the three group-selection methods.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_topics, Topic};
use crate::error::{Error, Result};
use crate::partition::KeywordSet;
use crate::scoring::CandidateList;

/// Relative tolerance under which two candidate scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub fn scores_tie(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// A maximal run of candidates sharing one score.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGroup {
    pub score: f64,
    pub terms: Vec<String>,
    pub keyword_count: usize,
}

impl TermGroup {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Highest,
    Average,
    Keyword,
    None,
}

impl Method {
    /// The three expansion methods, in the order they are reported.
    pub const ALL: [Method; 3] = [Method::Highest, Method::Keyword, Method::Average];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Highest => "highest",
            Method::Average => "average",
            Method::Keyword => "keyword",
            Method::None => "none",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Highest => "Highest Score",
            Method::Average => "Average Score",
            Method::Keyword => "Keyword Score",
            Method::None => "Before Expansion",
        }
    }

    pub fn select(self, groups: &[TermGroup]) -> Option<&TermGroup> {
        match self {
            Method::Highest => select_highest(groups),
            Method::Average => select_average(groups),
            Method::Keyword => select_keyword(groups),
            Method::None => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highest" => Ok(Method::Highest),
            "average" => Ok(Method::Average),
            "keyword" => Ok(Method::Keyword),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected highest, average or keyword)"
            ))),
        }
    }
}

/// Splits a sorted candidate list into runs of tied scores.
pub fn form_groups(list: &CandidateList, keywords: &KeywordSet) -> Vec<TermGroup> {
    let mut groups: Vec<TermGroup> = Vec::new();
    for c in &list.entries {
        let is_kw = usize::from(keywords.contains(&c.term));
        match groups.last_mut() {
            Some(g) if scores_tie(g.score, c.score) => {
                g.terms.push(c.term.clone());
                g.keyword_count += is_kw;
            }
            _ => groups.push(TermGroup {
                score: c.score,
                terms: vec![c.term.clone()],
                keyword_count: is_kw,
            }),
        }
    }
    groups
}

/// Method 1: the top-scoring group.
pub fn select_highest(groups: &[TermGroup]) -> Option<&TermGroup> {
    groups.first()
}

/// Method 2: the group whose score is closest to the mean candidate score.
/// The mean weights each group by its size. Equal distances favour the higher group.
pub fn select_average(groups: &[TermGroup]) -> Option<&TermGroup> {
    let count: usize = groups.iter().map(TermGroup::len).sum();
    if count == 0 {
        return None;
    }
    let mean = groups.iter().map(|g| g.score * g.len() as f64).sum::<f64>() / count as f64;
    let mut best: Option<(&TermGroup, f64)> = None;
    for g in groups {
        let dist = (g.score - mean).abs();
        match best {
            Some((_, d)) if dist >= d || scores_tie(dist, d) => {}
            _ => best = Some((g, dist)),
        }
    }
    best.map(|(g, _)| g)
}

/// Method 3: the group holding the most query terms; ties go to the higher
/// score. `None` when no candidate is a query term.
pub fn select_keyword(groups: &[TermGroup]) -> Option<&TermGroup> {
    let mut best: Option<&TermGroup> = None;
    for g in groups.iter().filter(|g| g.keyword_count > 0) {
        if best.is_none_or(|b| g.keyword_count > b.keyword_count) {
            best = Some(g);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedQuery {
    pub topic: u32,
    pub original_terms: Vec<String>,
    pub expansion_terms: Vec<String>,
    pub method: Method,
}

impl ExpandedQuery {
    pub fn unexpanded(topic: u32, original_terms: Vec<String>) -> Self {
        Self {
            topic,
            original_terms,
            expansion_terms: Vec::new(),
            method: Method::None,
        }
    }

    /// Original terms followed by expansion terms.
    pub fn terms(&self) -> Vec<&str> {
        self.original_terms
            .iter()
            .chain(&self.expansion_terms)
            .map(String::as_str)
            .collect()
    }

    pub fn is_expanded(&self) -> bool {
        self.method != Method::None
    }

    pub fn to_topic(&self) -> Topic {
        Topic {
            number: self.topic,
            title: self.terms().join(" "),
        }
    }
}

/// Builds the second-pass query. Group members equal to an original term are
/// left out; a missing group, or one with nothing new, leaves the query as is.
pub fn reformulate(topic: u32, group: Option<&TermGroup>, method: Method, original_terms: &[String]) -> ExpandedQuery {
    let original = original_terms.to_vec();
    let Some(group) = group else {
        return ExpandedQuery::unexpanded(topic, original);
    };
    let expansion_terms: Vec<String> = group
        .terms
        .iter()
        .filter(|t| !original_terms.contains(t))
        .cloned()
        .collect();
    if expansion_terms.is_empty() {
        return ExpandedQuery::unexpanded(topic, original);
    }
    ExpandedQuery {
        topic,
        original_terms: original,
        expansion_terms,
        method,
    }
}

/// Writes expanded queries as a TREC topic file.
pub fn write_expanded_topics<W: Write>(queries: &[ExpandedQuery], sink: W) -> Result<()> {
    let topics: Vec<Topic> = queries.iter().map(ExpandedQuery::to_topic).collect();
    write_topics(&topics, sink)
}
