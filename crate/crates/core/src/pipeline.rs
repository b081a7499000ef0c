//! End-to-end experiment: index, baseline retrieval, expansion by each method,
//! second-pass retrieval, evaluation and comparison.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_qrels, parse_topics, Qrels, RunEntry, Topic, TrecDocReader};
use crate::error::{Error, Result};
use crate::evaluation::{
    compare_runs, evaluate_topics, render_improvements, render_report, render_summary, write_comparison_csv,
    Comparison, RunReport,
};
use crate::expansion::{form_groups, reformulate, write_expanded_topics, ExpandedQuery, Method};
use crate::index::{feedback_set, InvertedIndex, RankedList, RankingParams};
use crate::partition::{partition_document, KeywordSet, Partition, ScoremaxRule};
use crate::scoring::{merge_candidates, score_partitions, top_n_terms, write_keywords, CandidateList};
use crate::text::{tokenize, LangProfile, ScriptHint, TokenStream};

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScoremaxSetting {
    #[default]
    PerDecile,
    PeakKeyword,
}

impl From<ScoremaxSetting> for ScoremaxRule {
    fn from(s: ScoremaxSetting) -> Self {
        match s {
            ScoremaxSetting::PerDecile => ScoremaxRule::PerDecileTotal,
            ScoremaxSetting::PeakKeyword => ScoremaxRule::PeakKeywordFrequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Prebuilt collection snapshot, used instead of `corpus` when set.
    pub index: Option<PathBuf>,
    pub topics: PathBuf,
    pub qrels: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub script: ScriptHint,
    pub tag: String,
    pub feedback_docs: usize,
    pub candidates_per_doc: usize,
    pub run_depth: usize,
    pub ranking: RankingParams,
    pub methods: Vec<Method>,
    pub scoremax: ScoremaxSetting,
    pub output: PathBuf,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub dump_partitions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            index: None,
            topics: PathBuf::new(),
            qrels: PathBuf::new(),
            stopwords: None,
            script: ScriptHint::default(),
            tag: "RUN".into(),
            feedback_docs: 10,
            candidates_per_doc: 5,
            run_depth: 1000,
            ranking: RankingParams::default(),
            methods: Method::ALL.to_vec(),
            scoremax: ScoremaxSetting::default(),
            output: PathBuf::from("out"),
            threads: None,
            dump_partitions: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| e.in_file(path))?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.corpus, &mut self.index, &mut self.stopwords]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.topics);
        fix(&mut self.qrels);
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_settings()?;
        if self.tag.is_empty() || self.tag.contains(char::is_whitespace) {
            return Err(Error::Config(format!(
                "run tag {:?} must be a single non-empty word",
                self.tag
            )));
        }
        if self.corpus.is_none() && self.index.is_none() {
            return Err(Error::Config("either corpus or index must be given".into()));
        }
        let inputs = [
            self.corpus.as_ref(),
            self.index.as_ref(),
            Some(&self.topics),
            Some(&self.qrels),
            self.stopwords.as_ref(),
        ];
        for p in inputs.into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Settings echoed at the top of every report. Input and output
    /// locations are left out so the reports depend only on the data.
    pub fn report_header(&self) -> String {
        let name = |p: &Option<PathBuf>| {
            p.as_ref()
                .and_then(|p| p.file_name())
                .map_or("-".into(), |n| n.to_string_lossy().into_owned())
        };
        let ranking = match self.ranking {
            RankingParams::Bm25 { k1, b } => format!("bm25 k1={k1} b={b}"),
            RankingParams::TfIdf => "tfidf".into(),
        };
        let methods: Vec<&str> = self.normalized_methods().iter().map(|m| m.as_str()).collect();
        format!(
            "# tag: {}\n# stopwords: {}\n# script: {:?}\n# feedback_docs: {}\n# candidates_per_doc: {}\n# run_depth: {}\n# ranking: {}\n# scoremax: {:?}\n# methods: {}\n",
            self.tag,
            name(&self.stopwords),
            self.script,
            self.feedback_docs,
            self.candidates_per_doc,
            self.run_depth,
            ranking,
            self.scoremax,
            methods.join(","),
        )
    }
}

/// Tokenized documents plus their inverted index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Collection {
    format_version: u32,
    profile: LangProfile,
    docnos: Vec<String>,
    streams: Vec<TokenStream>,
    index: InvertedIndex,
}

impl Collection {
    pub fn from_documents<I>(docs: I, profile: LangProfile) -> Result<Self>
    where
        I: IntoIterator<Item = Result<crate::corpus::Document>>,
    {
        let docs: Vec<crate::corpus::Document> = docs.into_iter().collect::<Result<_>>()?;
        let streams: Vec<TokenStream> = docs.par_iter().map(|d| tokenize(&d.body, &profile)).collect();
        let docnos: Vec<String> = docs.into_iter().map(|d| d.docno).collect();
        let index = InvertedIndex::build(docnos.iter().cloned().zip(streams.iter().cloned()))?;
        Ok(Self {
            format_version: SNAPSHOT_VERSION,
            profile,
            docnos,
            streams,
            index,
        })
    }

    pub fn load_trec(path: &Path, profile: LangProfile) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_documents(TrecDocReader::new(BufReader::new(file)), profile).map_err(|e| e.in_file(path))
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn profile(&self) -> &LangProfile {
        &self.profile
    }

    pub fn stream(&self, docno: &str) -> Option<&TokenStream> {
        self.index.ordinal(docno).map(|o| &self.streams[o as usize])
    }

    pub fn len(&self) -> usize {
        self.docnos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docnos.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self).map_err(|e| Error::Config(e.to_string()).in_file(path))?;
        w.flush()?;
        Ok(())
    }

    pub fn load_snapshot(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
        let c: Collection = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(e.line(), e.to_string()).in_file(path))?;
        if c.format_version != SNAPSHOT_VERSION {
            return Err(Error::Config(format!(
                "snapshot format {} is not supported (expected {SNAPSHOT_VERSION})",
                c.format_version
            ))
            .in_file(path));
        }
        if c.docnos.len() != c.streams.len() {
            return Err(Error::Invariant("snapshot docno and stream tables differ".into()).in_file(path));
        }
        let index = c.index.restore().map_err(|e| e.in_file(path))?;
        Ok(Self { index, ..c })
    }
}

/// Partitions of each feedback document, keyed by docno.
pub type DocPartitions = Vec<(String, Vec<Partition>)>;

/// Per-topic outcome of the expansion stage.
#[derive(Debug, Clone)]
pub struct TopicOutcome {
    pub topic: u32,
    pub query: Vec<String>,
    pub baseline: RankedList,
    pub candidates: CandidateList,
    pub partitions: DocPartitions,
    pub variants: BTreeMap<Method, (ExpandedQuery, RankedList)>,
}

/// Settings that shape one topic's processing.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionSettings<'a> {
    pub feedback_docs: usize,
    pub candidates_per_doc: usize,
    pub run_depth: usize,
    pub ranking: &'a RankingParams,
    pub scoremax: ScoremaxRule,
    pub methods: &'a [Method],
}

/// Candidate terms mined from the feedback documents of one topic.
pub fn mine_candidates(
    collection: &Collection,
    topic: u32,
    feedback: &[&str],
    keywords: &KeywordSet,
    settings: &ExpansionSettings<'_>,
) -> Result<(CandidateList, DocPartitions)> {
    let mut per_doc = Vec::with_capacity(feedback.len());
    let mut kept = Vec::with_capacity(feedback.len());
    for &docno in feedback {
        let stream = collection
            .stream(docno)
            .ok_or_else(|| Error::Invariant(format!("feedback document {docno} is not in the collection")))?;
        let parts = match partition_document(stream, keywords, settings.scoremax) {
            Ok(p) => p,
            Err(e @ (Error::NoKeyword | Error::DegenerateDocument)) => {
                debug!("topic {topic}: feedback document {docno} skipped: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let scores = score_partitions(&parts)?;
        per_doc.push(top_n_terms(&scores, settings.candidates_per_doc, docno));
        kept.push((docno.to_owned(), parts));
    }
    Ok((merge_candidates(per_doc, topic), kept))
}

pub fn process_topic(collection: &Collection, topic: &Topic, settings: &ExpansionSettings<'_>) -> Result<TopicOutcome> {
    let query = tokenize(&topic.title, collection.profile()).into_tokens();
    let n = topic.number;
    let baseline = match collection
        .index()
        .retrieve(n, &query, settings.run_depth, settings.ranking)
    {
        Ok(r) => r,
        Err(Error::EmptyQuery) => {
            warn!("topic {n}: query is empty after stopword removal; no documents retrieved");
            RankedList::empty(n)
        }
        Err(e) => return Err(e),
    };
    let keywords = KeywordSet::new(query.iter().cloned());
    let feedback = feedback_set(&baseline, settings.feedback_docs);
    if feedback.is_empty() && !query.is_empty() {
        warn!("topic {n}: no feedback documents; query left unexpanded");
    }
    let (candidates, partitions) = mine_candidates(collection, n, &feedback, &keywords, settings)?;
    let groups = form_groups(&candidates, &keywords);

    let mut variants = BTreeMap::new();
    for &method in settings.methods {
        let expanded = reformulate(n, method.select(&groups), method, &query);
        let ranked = if expanded.is_expanded() {
            collection
                .index()
                .retrieve(n, &expanded.terms(), settings.run_depth, settings.ranking)?
        } else {
            info!("topic {n}: {method} leaves the query unexpanded");
            baseline.clone()
        };
        variants.insert(method, (expanded, ranked));
    }
    Ok(TopicOutcome {
        topic: n,
        query,
        baseline,
        candidates,
        partitions,
        variants,
    })
}

pub fn run_entries(lists: &[&RankedList], tag: &str) -> Vec<RunEntry> {
    lists
        .iter()
        .flat_map(|l| {
            l.entries.iter().enumerate().map(move |(i, e)| RunEntry {
                topic: l.topic,
                docno: e.docno.clone(),
                rank: i + 1,
                score: e.score,
                tag: tag.to_owned(),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub outcomes: Vec<TopicOutcome>,
    pub baseline: RunReport,
    pub variants: BTreeMap<Method, RunReport>,
    pub comparison: Comparison,
    pub files: Vec<PathBuf>,
}

impl PipelineOutput {
    pub fn summary(&self) -> String {
        let mut cols: Vec<(&str, &RunReport)> = vec![(Method::None.label(), &self.baseline)];
        for m in Method::ALL {
            if let Some(r) = self.variants.get(&m) {
                cols.push((m.label(), r));
            }
        }
        render_summary(&cols)
    }
}

fn load_collection(config: &RunConfig, profile: LangProfile) -> Result<Collection> {
    match (&config.index, &config.corpus) {
        (Some(snapshot), _) => {
            let c = Collection::load_snapshot(snapshot)?;
            if c.profile() != &profile {
                return Err(Error::Config(format!(
                    "snapshot {} was built with a different stopword list or script",
                    snapshot.display()
                )));
            }
            Ok(c)
        }
        (None, Some(corpus)) => Collection::load_trec(corpus, profile),
        (None, None) => Err(Error::Config("either corpus or index must be given".into())),
    }
}

pub fn load_profile(config: &RunConfig) -> Result<LangProfile> {
    match &config.stopwords {
        Some(p) => LangProfile::load(p, config.script),
        None => Ok(LangProfile::empty("none", config.script)),
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).in_file(path))
}

/// Runs the whole experiment and writes its artifacts under `config.output`.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn run_inner(config: &RunConfig) -> Result<PipelineOutput> {
    let profile = load_profile(config)?;
    let collection = load_collection(config, profile)?;
    info!(
        "collection: {} documents, {} terms",
        collection.len(),
        collection.index().vocabulary_size()
    );
    let topics = parse_topics(open_input(&config.topics)?).map_err(|e| e.in_file(&config.topics))?;
    let qrels = parse_qrels(open_input(&config.qrels)?).map_err(|e| e.in_file(&config.qrels))?;
    run_with(config, &collection, &topics, &qrels)
}

/// The pipeline over already-loaded inputs.
pub fn run_with(
    config: &RunConfig,
    collection: &Collection,
    topics: &[Topic],
    qrels: &Qrels,
) -> Result<PipelineOutput> {
    config.validate_settings()?;
    let methods = config.normalized_methods();
    let settings = ExpansionSettings {
        feedback_docs: config.feedback_docs,
        candidates_per_doc: config.candidates_per_doc,
        run_depth: config.run_depth,
        ranking: &config.ranking,
        scoremax: config.scoremax.into(),
        methods: &methods,
    };
    let outcomes: Vec<TopicOutcome> = topics
        .par_iter()
        .map(|t| process_topic(collection, t, &settings))
        .collect::<Result<_>>()?;

    let topic_ids: Vec<u32> = outcomes.iter().map(|o| o.topic).collect();
    let baseline_entries = run_entries(&outcomes.iter().map(|o| &o.baseline).collect::<Vec<_>>(), &config.tag);
    let baseline = evaluate_topics(&baseline_entries, qrels, &topic_ids);

    let mut variant_entries = BTreeMap::new();
    let mut variants = BTreeMap::new();
    for &m in &methods {
        let lists: Vec<&RankedList> = outcomes.iter().map(|o| &o.variants[&m].1).collect();
        let entries = run_entries(&lists, &config.tag);
        variants.insert(m, evaluate_topics(&entries, qrels, &topic_ids));
        variant_entries.insert(m, entries);
    }
    let comparison = compare_runs(&baseline, &variants)?;

    let files = write_artifacts(
        config,
        &outcomes,
        &baseline_entries,
        &baseline,
        &variant_entries,
        &variants,
        &comparison,
    )?;
    Ok(PipelineOutput {
        outcomes,
        baseline,
        variants,
        comparison,
        files,
    })
}

impl RunConfig {
    fn normalized_methods(&self) -> Vec<Method> {
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        methods
    }

    fn validate_settings(&self) -> Result<()> {
        if self.feedback_docs == 0 || self.candidates_per_doc == 0 || self.run_depth == 0 {
            return Err(Error::Config(
                "feedback_docs, candidates_per_doc and run_depth must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() || self.methods.contains(&Method::None) {
            return Err(Error::Config(
                "methods must list one or more of highest, average, keyword".into(),
            ));
        }
        self.ranking.validate()
    }
}

struct ArtifactWriter<'a> {
    dir: &'a Path,
    tag: &'a str,
    files: Vec<PathBuf>,
}

impl ArtifactWriter<'_> {
    fn write(&mut self, suffix: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(format!("{}.{suffix}", self.tag));
        let file = File::create(&path).map_err(|e| Error::from(e).in_file(&path))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| e.in_file(&path))?;
        w.flush().map_err(|e| Error::from(e).in_file(&path))?;
        self.files.push(path);
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    config: &RunConfig,
    outcomes: &[TopicOutcome],
    baseline_entries: &[RunEntry],
    baseline: &RunReport,
    variant_entries: &BTreeMap<Method, Vec<RunEntry>>,
    variants: &BTreeMap<Method, RunReport>,
    comparison: &Comparison,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&config.output).map_err(|e| Error::from(e).in_file(&config.output))?;
    let header = config.report_header();
    let mut out = ArtifactWriter {
        dir: &config.output,
        tag: &config.tag,
        files: Vec::new(),
    };

    out.write("baseline.run", |w| crate::corpus::write_run(baseline_entries, w))?;
    out.write("baseline.report.txt", |w| {
        write!(w, "{header}# run: baseline\n\n{}", render_report(baseline))?;
        Ok(())
    })?;

    let candidate_lists: Vec<&CandidateList> = outcomes.iter().map(|o| &o.candidates).collect();
    for (&m, entries) in variant_entries {
        let queries: Vec<ExpandedQuery> = outcomes.iter().map(|o| o.variants[&m].0.clone()).collect();
        out.write(&format!("{m}.topics"), |w| write_expanded_topics(&queries, w))?;
        out.write(&format!("{m}.run"), |w| crate::corpus::write_run(entries, w))?;
        out.write(&format!("{m}.keywords.tsv"), |w| {
            write_keywords(candidate_lists.iter().copied(), w)
        })?;
        out.write(&format!("{m}.report.txt"), |w| {
            write!(w, "{header}# run: {m}\n\n{}", render_report(&variants[&m]))?;
            Ok(())
        })?;
        let single = Comparison {
            methods: comparison.methods.iter().filter(|c| c.method == m).cloned().collect(),
        };
        out.write(&format!("{m}.comparison.csv"), |w| write_comparison_csv(&single, w))?;
    }

    let mut cols: Vec<(&str, &RunReport)> = vec![(Method::None.label(), baseline)];
    for m in Method::ALL {
        if let Some(r) = variants.get(&m) {
            cols.push((m.label(), r));
        }
    }
    out.write("comparison.txt", |w| {
        write!(
            w,
            "{header}\n{}\n{}",
            render_summary(&cols),
            render_improvements(comparison)
        )?;
        Ok(())
    })?;
    out.write("comparison.csv", |w| write_comparison_csv(comparison, w))?;

    if config.dump_partitions {
        out.write("partitions.txt", |w| {
            for o in outcomes {
                writeln!(w, "# topic {}", o.topic)?;
                for (docno, parts) in &o.partitions {
                    for p in parts {
                        writeln!(w, "{docno} {} {} {}", p.start, p.end, p.keyword_count)?;
                    }
                }
            }
            Ok(())
        })?;
    }
    Ok(out.files)
}
