use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use prf_core::corpus::{parse_qrels, parse_run};
use prf_core::evaluation::{
    compare_runs, evaluate_run, render_improvements, render_report, render_summary, write_comparison_csv,
};
use prf_core::expansion::Method;
use prf_core::index::RankingParams;
use prf_core::pipeline::{run_pipeline, Collection, RunConfig, ScoremaxSetting};
use prf_core::text::{LangProfile, ScriptHint};
use prf_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "prf",
    version,
    about = "Partition-based pseudo relevance feedback experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize and index a collection, saving it for later runs.
    IndexBuild {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "mixed")]
        script: ScriptArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run baseline retrieval, expansion, re-retrieval and evaluation.
    Run(Box<RunArgs>),
    /// Evaluate existing run files against qrels.
    Eval {
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        /// Variant runs as METHOD=PATH, e.g. keyword=out/HTRUN.keyword.run
        #[arg(long = "variant", value_parser = parse_variant)]
        variants: Vec<(Method, PathBuf)>,
        /// Also write per-topic deltas as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Collection saved by `index-build`, used instead of --corpus.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, value_enum)]
    script: Option<ScriptArg>,
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    feedback_docs: Option<usize>,
    #[arg(long)]
    candidates_per_doc: Option<usize>,
    #[arg(long)]
    run_depth: Option<usize>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Comma-separated subset of highest,average,keyword.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long, value_enum)]
    scoremax: Option<ScoremaxArg>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write each feedback document's partitions as "docno start end keyword_count".
    #[arg(long)]
    dump_partitions: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScriptArg {
    Latin,
    Devanagari,
    Mixed,
}

impl From<ScriptArg> for ScriptHint {
    fn from(s: ScriptArg) -> Self {
        match s {
            ScriptArg::Latin => ScriptHint::Latin,
            ScriptArg::Devanagari => ScriptHint::Devanagari,
            ScriptArg::Mixed => ScriptHint::Mixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Bm25,
    Tfidf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoremaxArg {
    PerDecile,
    PeakKeyword,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> std::result::Result<(Method, PathBuf), String> {
    let (m, p) = s.split_once('=').ok_or("expected METHOD=PATH")?;
    Ok((parse_method(m)?, PathBuf::from(p)))
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.corpus.is_some() {
            cfg.corpus = self.corpus;
        }
        if self.index.is_some() {
            cfg.index = self.index;
        }
        if let Some(v) = self.topics {
            cfg.topics = v;
        }
        if let Some(v) = self.qrels {
            cfg.qrels = v;
        }
        if self.stopwords.is_some() {
            cfg.stopwords = self.stopwords;
        }
        if let Some(v) = self.script {
            cfg.script = v.into();
        }
        if let Some(v) = self.tag {
            cfg.tag = v;
        }
        if let Some(v) = self.feedback_docs {
            cfg.feedback_docs = v;
        }
        if let Some(v) = self.candidates_per_doc {
            cfg.candidates_per_doc = v;
        }
        if let Some(v) = self.run_depth {
            cfg.run_depth = v;
        }
        match self.model {
            Some(ModelArg::Tfidf) => cfg.ranking = RankingParams::TfIdf,
            Some(ModelArg::Bm25) if !matches!(cfg.ranking, RankingParams::Bm25 { .. }) => {
                cfg.ranking = RankingParams::default();
            }
            _ => {}
        }
        if let RankingParams::Bm25 { k1, b } = &mut cfg.ranking {
            if let Some(v) = self.k1 {
                *k1 = v;
            }
            if let Some(v) = self.b {
                *b = v;
            }
        } else if self.k1.is_some() || self.b.is_some() {
            return Err(Error::Config("--k1 and --b apply only to the bm25 model".into()));
        }
        if let Some(v) = self.methods {
            cfg.methods = v;
        }
        if let Some(v) = self.scoremax {
            cfg.scoremax = match v {
                ScoremaxArg::PerDecile => ScoremaxSetting::PerDecile,
                ScoremaxArg::PeakKeyword => ScoremaxSetting::PeakKeyword,
            };
        }
        if let Some(v) = self.output {
            cfg.output = v;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.dump_partitions |= self.dump_partitions;
        Ok(cfg)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).in_file(path))
}

fn index_build(corpus: &Path, stopwords: Option<&Path>, script: ScriptHint, out: &Path) -> Result<()> {
    let profile = match stopwords {
        Some(p) => LangProfile::load(p, script)?,
        None => LangProfile::empty("none", script),
    };
    let collection = Collection::load_trec(corpus, profile)?;
    collection.save(out)?;
    println!(
        "indexed {} documents ({} terms) into {}",
        collection.len(),
        collection.index().vocabulary_size(),
        out.display()
    );
    Ok(())
}

fn eval(qrels: &Path, baseline: &Path, variants: &[(Method, PathBuf)], csv: Option<&Path>) -> Result<()> {
    let qrels = parse_qrels(open(qrels)?).map_err(|e| e.in_file(qrels))?;
    let base_run = parse_run(open(baseline)?).map_err(|e| e.in_file(baseline))?;
    let base = evaluate_run(&base_run, &qrels);
    let mut reports = BTreeMap::new();
    for (m, path) in variants {
        let run = parse_run(open(path)?).map_err(|e| e.in_file(path))?;
        reports.insert(*m, evaluate_run(&run, &qrels));
    }
    if reports.is_empty() {
        print!("{}", render_report(&base));
        return Ok(());
    }
    let cmp = compare_runs(&base, &reports)?;
    let mut cols = vec![(Method::None.label(), &base)];
    cols.extend(reports.iter().map(|(m, r)| (m.label(), r)));
    print!("{}\n{}", render_summary(&cols), render_improvements(&cmp));
    if let Some(path) = csv {
        let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
        write_comparison_csv(&cmp, BufWriter::new(file)).map_err(|e| e.in_file(path))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IndexBuild {
            corpus,
            stopwords,
            script,
            out,
        } => index_build(&corpus, stopwords.as_deref(), script.into(), &out),
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let output = run_pipeline(&cfg)?;
            print!("{}\n{}", output.summary(), render_improvements(&output.comparison));
            println!("wrote {} files to {}", output.files.len(), cfg.output.display());
            Ok(())
        }
        Command::Eval {
            qrels,
            baseline,
            variants,
            csv,
        } => eval(&qrels, &baseline, &variants, csv.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
