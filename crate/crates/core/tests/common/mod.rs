//! Test-only oracles and corpus generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use prf_core::corpus::{Document, Qrels, Topic};

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

// ---------------------------------------------------------------------------
// Partition oracle

fn keyword_count(tokens: &[String], keywords: &BTreeSet<String>, start: usize, end: usize) -> usize {
    tokens[start..=end].iter().filter(|t| keywords.contains(*t)).count()
}

/// Every way of cutting `tokens` into contiguous spans such that each span
/// but the last holds exactly `k` keywords and ends on a keyword, and the last
/// holds between 1 and `k` keywords. Counts are taken by rescanning each
/// candidate span.
pub fn brute_force_partitions(tokens: &[String], keywords: &BTreeSet<String>, k: usize) -> Vec<Vec<(usize, usize)>> {
    fn search(
        tokens: &[String],
        keywords: &BTreeSet<String>,
        k: usize,
        start: usize,
        acc: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let n = tokens.len();
        for end in start..n {
            let count = keyword_count(tokens, keywords, start, end);
            if count > k {
                break;
            }
            if end == n - 1 && (1..=k).contains(&count) {
                acc.push((start, end));
                out.push(acc.clone());
                acc.pop();
            }
            if end < n - 1 && count == k && keywords.contains(&tokens[end]) {
                acc.push((start, end));
                search(tokens, keywords, k, end + 1, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    if !tokens.is_empty() {
        search(tokens, keywords, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

// ---------------------------------------------------------------------------
// Scoring oracle

/// Best partition-level tf-idf per term, recounted from the raw token spans.
pub fn direct_scores(tokens: &[String], spans: &[(usize, usize)]) -> BTreeMap<String, f64> {
    let slices: Vec<&[String]> = spans.iter().map(|&(s, e)| &tokens[s..=e]).collect();
    let count = |slice: &[String], term: &str| slice.iter().filter(|t| t.as_str() == term).count();
    let total = slices.len() as f64;
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for slice in &slices {
        let max = slice.iter().map(|w| count(slice, w)).max().unwrap();
        for term in slice.iter() {
            let tf = count(slice, term) as f64 / max as f64;
            let containing = slices.iter().filter(|s| s.iter().any(|w| w == term)).count() as f64;
            let score = tf * (total / containing).log10();
            let e = best.entry(term.clone()).or_insert(f64::NEG_INFINITY);
            if score > *e {
                *e = score;
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Random streams

pub fn random_stream(
    rng: &mut StdRng,
    max_len: usize,
    vocab: usize,
    keyword_share: f64,
) -> (Vec<String>, BTreeSet<String>) {
    let keywords: BTreeSet<String> = ["kw0", "kw1", "kw2"].iter().map(|s| s.to_string()).collect();
    let len = rng.gen_range(1..=max_len);
    let mut tokens: Vec<String> = (0..len)
        .map(|_| {
            if rng.gen_bool(keyword_share) {
                format!("kw{}", rng.gen_range(0..3))
            } else {
                format!("w{}", rng.gen_range(0..vocab))
            }
        })
        .collect();
    if !tokens.iter().any(|t| keywords.contains(t)) {
        let at = rng.gen_range(0..len);
        tokens[at] = "kw0".into();
    }
    (tokens, keywords)
}

// ---------------------------------------------------------------------------
// Synthetic planted-term corpus

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Script {
    Latin,
    Devanagari,
}

const CONSONANTS: &[char] = &[
    'क', 'ख', 'ग', 'घ', 'च', 'छ', 'ज', 'झ', 'ट', 'ठ', 'ड', 'ढ', 'त', 'थ', 'द', 'ध', 'न', 'प', 'फ', 'ब', 'भ', 'म', 'य',
    'र', 'ल', 'व', 'स', 'ह',
];
const MATRAS: &[char] = &['ा', 'ि', 'ी', 'ु', 'ू', 'े', 'ै', 'ो', 'ौ'];

fn latin_word(rng: &mut StdRng, first: char) -> String {
    let mut w = String::from(first);
    for _ in 0..rng.gen_range(3..6) {
        w.push(rng.gen_range(b'a'..=b'z') as char);
    }
    w
}

fn devanagari_word(rng: &mut StdRng, first: char) -> String {
    let mut w = String::from(first);
    if first != 'अ' && rng.gen_bool(0.5) {
        w.push(*MATRAS.choose(rng).unwrap());
    }
    for _ in 0..rng.gen_range(1..3) {
        w.push(*CONSONANTS.choose(rng).unwrap());
        if rng.gen_bool(0.6) {
            w.push(*MATRAS.choose(rng).unwrap());
        }
    }
    w
}

struct WordMaker {
    rng: StdRng,
    used: HashSet<String>,
}

impl WordMaker {
    /// A fresh word whose first letter is drawn from `firsts`.
    fn make(&mut self, script: Script, firsts: &[char]) -> String {
        loop {
            let first = *firsts.choose(&mut self.rng).unwrap();
            let w = match script {
                Script::Latin => latin_word(&mut self.rng, first),
                Script::Devanagari => devanagari_word(&mut self.rng, first),
            };
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedTopic {
    pub number: u32,
    pub script: Script,
    pub query: [String; 2],
    pub planted: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    pub topics: Vec<PlantedTopic>,
    pub qrels: Qrels,
}

pub const SYNTHETIC_DOCS: usize = 200;
const DOC_LEN: usize = 100;
const ANCHORED: usize = 6;
const DISTRACTORS: usize = 10;
const HIDDEN: usize = 4;

/// Builds a 200-document corpus over six topics, three per script.
///
/// Per topic with query terms `a` and `b` and five planted terms:
/// * anchored relevant documents carry `b p1 p2 p3 p4 p5 a b` inside one
///   decile, surrounded by filler;
/// * distractors mention `b` twice, far apart, and are not relevant;
/// * hidden relevant documents carry three planted terms and no query term.
///
/// Filler words sort before every topic word, and `a` sorts before the
/// planted terms.
pub fn synthetic_corpus(seed: u64) -> SyntheticCorpus {
    let mut words = WordMaker {
        rng: StdRng::seed_from_u64(seed),
        used: HashSet::new(),
    };
    let latin_late: Vec<char> = ('n'..='z').collect();
    let deva_late: Vec<char> = CONSONANTS[1..].to_vec();
    let filler_latin: Vec<String> = (0..20).map(|_| words.make(Script::Latin, &['a'])).collect();
    let filler_deva: Vec<String> = (0..20).map(|_| words.make(Script::Devanagari, &['अ'])).collect();

    let mut topics = Vec::new();
    for (i, script) in [Script::Latin, Script::Devanagari]
        .into_iter()
        .cycle()
        .take(6)
        .enumerate()
    {
        let (first, late): (char, &[char]) = match script {
            Script::Latin => ('m', &latin_late),
            Script::Devanagari => ('क', &deva_late),
        };
        let a = words.make(script, &[first]);
        let b = words.make(script, late);
        let planted = (0..5).map(|_| words.make(script, late)).collect();
        topics.push(PlantedTopic {
            number: 301 + i as u32,
            script,
            query: [a, b],
            planted,
        });
    }

    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut docs = Vec::new();
    let mut qrels = Qrels::default();
    let fillers = |s: Script| match s {
        Script::Latin => &filler_latin,
        Script::Devanagari => &filler_deva,
    };
    let filler_run = |rng: &mut StdRng, pool: &[String], len: usize| -> Vec<String> {
        // Every pool word at least once per copy, then random extras.
        let mut out = Vec::with_capacity(len);
        while out.len() + pool.len() <= len {
            let mut copy = pool.to_vec();
            copy.shuffle(rng);
            out.extend(copy);
        }
        while out.len() < len {
            out.push(pool.choose(rng).unwrap().clone());
        }
        out
    };

    for t in &topics {
        let pool = fillers(t.script);
        let [a, b] = &t.query;
        for j in 0..ANCHORED {
            let mut tokens = filler_run(&mut rng, pool, 40);
            tokens.push(b.clone());
            tokens.extend(t.planted.iter().cloned());
            tokens.push(a.clone());
            tokens.push(b.clone());
            tokens.extend(filler_run(&mut rng, pool, DOC_LEN - tokens.len()));
            let docno = format!("S{}-A{j}", t.number);
            qrels.insert(t.number, docno.clone(), 1).unwrap();
            docs.push(Document {
                docno,
                body: tokens.join(" "),
            });
        }
        for j in 0..DISTRACTORS {
            let mut tokens = filler_run(&mut rng, pool, DOC_LEN);
            tokens[15] = b.clone();
            tokens[75] = b.clone();
            let docno = format!("S{}-D{j}", t.number);
            qrels.insert(t.number, docno.clone(), 0).unwrap();
            docs.push(Document {
                docno,
                body: tokens.join(" "),
            });
        }
        for j in 0..HIDDEN {
            let mut tokens = filler_run(&mut rng, pool, DOC_LEN);
            for (n, p) in t.planted.iter().cycle().skip(j).take(3).enumerate() {
                tokens[20 + 25 * n] = p.clone();
            }
            let docno = format!("S{}-H{j}", t.number);
            qrels.insert(t.number, docno.clone(), 1).unwrap();
            docs.push(Document {
                docno,
                body: tokens.join(" "),
            });
        }
    }
    let mut j = 0;
    while docs.len() < SYNTHETIC_DOCS {
        let mut pool: Vec<String> = filler_latin.clone();
        if j % 2 == 1 {
            pool = filler_deva.clone();
        }
        let tokens = filler_run(&mut rng, &pool, DOC_LEN);
        docs.push(Document {
            docno: format!("S-F{j:03}"),
            body: tokens.join(" "),
        });
        j += 1;
    }
    docs.shuffle(&mut rng);
    SyntheticCorpus { docs, topics, qrels }
}

impl SyntheticCorpus {
    pub fn trec_topics(&self) -> Vec<Topic> {
        self.topics
            .iter()
            .map(|t| Topic {
                number: t.number,
                title: t.query.join(" "),
            })
            .collect()
    }

    /// Writes `docs.trec`, `topics.trec` and `qrels.txt` under `dir`.
    pub fn write_to(&self, dir: &Path) {
        let mut docs = String::new();
        for d in &self.docs {
            docs.push_str(&format!(
                "<DOC>\n<DOCNO>{}</DOCNO>\n<TEXT>\n{}\n</TEXT>\n</DOC>\n",
                d.docno, d.body
            ));
        }
        fs::write(dir.join("docs.trec"), docs).unwrap();
        let mut topics = Vec::new();
        prf_core::corpus::write_topics(&self.trec_topics(), &mut topics).unwrap();
        fs::write(dir.join("topics.trec"), topics).unwrap();
        let mut qrels = String::new();
        for t in &self.topics {
            let mut judged: Vec<(String, i32)> = self
                .docs
                .iter()
                .filter_map(|d| self.qrels.grade(t.number, &d.docno).map(|g| (d.docno.clone(), g)))
                .collect();
            judged.sort();
            for (d, g) in judged {
                qrels.push_str(&format!("{} 0 {d} {g}\n", t.number));
            }
        }
        fs::write(dir.join("qrels.txt"), qrels).unwrap();
    }
}
