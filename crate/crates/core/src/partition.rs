//! Equi-width (decile) and equi-frequency partitioning of a feedback document.
//!
//! A document is first cut into ten near-equal bins to measure how densely the
//! query terms cluster. The ratio of total keyword frequency to the busiest
//! bin's keyword frequency gives `k`, and the document is then re-cut so that
//! each partition holds exactly `k` keyword occurrences.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::text::TokenStream;

pub const DECILE_BINS: usize = 10;

/// The normalized query terms of a topic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordSet(BTreeSet<String>);

impl KeywordSet {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(terms.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// An inclusive span `[start, end]` of a filtered token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub start: usize,
    pub end: usize,
    pub term_freqs: BTreeMap<String, u32>,
    pub keyword_count: u32,
}

impl Partition {
    fn from_span(stream: &TokenStream, start: usize, end: usize, keywords: &KeywordSet) -> Self {
        let mut term_freqs: BTreeMap<String, u32> = BTreeMap::new();
        let mut keyword_count = 0;
        for token in &stream.tokens()[start..=end] {
            *term_freqs.entry(token.clone()).or_default() += 1;
            if keywords.contains(token) {
                keyword_count += 1;
            }
        }
        Self {
            start,
            end,
            term_freqs,
            keyword_count,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn freq(&self, term: &str) -> u32 {
        self.term_freqs.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.term_freqs.contains_key(term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecileProfile {
    pub bins: Vec<Partition>,
    /// Keyword occurrences per bin.
    pub kw_freqs: Vec<u32>,
    pub f_scoremax: u32,
    pub total_kw_freq: u32,
}

/// How the denominator of `k` is read off the document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoremaxRule {
    /// Largest per-decile total of query-term occurrences.
    #[default]
    PerDecileTotal,
    /// Largest whole-document frequency of any single query term.
    PeakKeywordFrequency,
}

impl ScoremaxRule {
    pub fn scoremax(self, profile: &DecileProfile, keywords: &KeywordSet) -> u32 {
        match self {
            ScoremaxRule::PerDecileTotal => profile.kw_freqs.iter().copied().max().unwrap_or(0),
            ScoremaxRule::PeakKeywordFrequency => keywords
                .iter()
                .map(|kw| profile.bins.iter().map(|b| b.freq(kw)).sum::<u32>())
                .max()
                .unwrap_or(0),
        }
    }
}

/// Splits the stream into (at most) ten bins whose sizes differ by at most one,
/// extra tokens going to the earliest bins. Streams shorter than ten tokens get
/// one bin per token.
pub fn equiwidth_deciles(stream: &TokenStream, keywords: &KeywordSet) -> Result<DecileProfile> {
    if stream.is_empty() {
        return Err(Error::DegenerateDocument);
    }
    let len = stream.len();
    let bins_n = DECILE_BINS.min(len);
    let base = len / bins_n;
    let extra = len % bins_n;

    let mut bins = Vec::with_capacity(bins_n);
    let mut start = 0;
    for i in 0..bins_n {
        let size = base + usize::from(i < extra);
        bins.push(Partition::from_span(stream, start, start + size - 1, keywords));
        start += size;
    }
    let kw_freqs: Vec<u32> = bins.iter().map(|b| b.keyword_count).collect();
    let mut profile = DecileProfile {
        total_kw_freq: kw_freqs.iter().sum(),
        f_scoremax: 0,
        kw_freqs,
        bins,
    };
    profile.f_scoremax = ScoremaxRule::PerDecileTotal.scoremax(&profile, keywords);
    Ok(profile)
}

/// `k = max(1, round_half_up(total / scoremax))`.
pub fn derive_k(total_kw_freq: u32, f_scoremax: u32) -> Result<u32> {
    if f_scoremax == 0 {
        return Err(Error::NoKeyword);
    }
    // Half-up rounding of total/scoremax in integer arithmetic.
    let k = (2 * u64::from(total_kw_freq) + u64::from(f_scoremax)) / (2 * u64::from(f_scoremax));
    Ok((k as u32).max(1))
}

/// Decile analysis followed by [`derive_k`], with a selectable scoremax reading.
pub fn derive_k_for(stream: &TokenStream, keywords: &KeywordSet, rule: ScoremaxRule) -> Result<u32> {
    let profile = equiwidth_deciles(stream, keywords)?;
    derive_k(profile.total_kw_freq, rule.scoremax(&profile, keywords))
}

/// Cuts the stream left to right, closing a partition on its `k`-th keyword
/// occurrence. A trailing span with fewer than `k` keywords becomes a short
/// final partition; a trailing span with no keywords joins the last partition.
pub fn equifrequency_partition(stream: &TokenStream, keywords: &KeywordSet, k: u32) -> Result<Vec<Partition>> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let mut seen = 0;
    for (pos, token) in stream.positions() {
        if keywords.contains(token) {
            seen += 1;
            if seen == k {
                spans.push((start, pos));
                start = pos + 1;
                seen = 0;
            }
        }
    }
    if start < stream.len() {
        if seen > 0 {
            spans.push((start, stream.len() - 1));
        } else if let Some(last) = spans.last_mut() {
            last.1 = stream.len() - 1;
        }
    }
    if spans.is_empty() {
        return Err(Error::NoKeyword);
    }
    Ok(spans
        .into_iter()
        .map(|(s, e)| Partition::from_span(stream, s, e, keywords))
        .collect())
}

/// Full partitioning of one feedback document: deciles, `k`, equi-frequency cut.
pub fn partition_document(stream: &TokenStream, keywords: &KeywordSet, rule: ScoremaxRule) -> Result<Vec<Partition>> {
    let k = derive_k_for(stream, keywords, rule)?;
    equifrequency_partition(stream, keywords, k)
}
