//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use prf_core::corpus::{parse_qrels, parse_run, Qrels, RunEntry};
use prf_core::evaluation::{average_precision, compare_runs, evaluate_run, RunReport, TopicEval, Totals};
use prf_core::expansion::{form_groups, reformulate, Method};
use prf_core::partition::{derive_k, equifrequency_partition, partition_document, KeywordSet, ScoremaxRule};
use prf_core::pipeline::{run_pipeline, run_with, Collection, RunConfig};
use prf_core::scoring::{score_partitions, CandidateList, CandidateTerm};
use prf_core::text::{LangProfile, ScriptHint, TokenStream};

use common::{brute_force_partitions, direct_scores, fixture_dir, random_stream, synthetic_corpus};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:?}, budget {budget:?}"))?;
    Ok(took)
}

fn stream(tokens: &[&str]) -> TokenStream {
    TokenStream::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
}

fn owned(tokens: &[String]) -> TokenStream {
    TokenStream::from_tokens(tokens.to_vec())
}

fn keyword_set(keywords: &BTreeSet<String>) -> KeywordSet {
    KeywordSet::new(keywords.iter().cloned())
}

fn confined_term_score() -> Check {
    let start = Instant::now();
    let kw = KeywordSet::new(["kw"]);
    let mut ten = vec!["x", "kw"];
    let fillers = ["a", "b", "c", "d", "e", "f", "g", "h", "i"];
    for f in &fillers {
        ten.extend([*f, "kw"]);
    }
    let parts = equifrequency_partition(&stream(&ten), &kw, 1).map_err(|e| e.to_string())?;
    ensure(parts.len() == 10, || {
        format!("expected 10 partitions, got {}", parts.len())
    })?;
    let s10 = score_partitions(&parts).map_err(|e| e.to_string())?["x"];
    ensure((s10 - 1.0).abs() <= 1e-9, || format!("P=10 score {s10}"))?;

    let three = ["x", "kw", "a", "kw", "b", "kw"];
    let parts = equifrequency_partition(&stream(&three), &kw, 1).map_err(|e| e.to_string())?;
    let s3 = score_partitions(&parts).map_err(|e| e.to_string())?["x"];
    ensure((s3 - 0.4771).abs() <= 1e-4, || format!("P=3 score {s3}"))?;
    let took = within_budget(start, Duration::from_secs(1))?;
    Ok(format!("P=10 -> {s10:.9}, P=3 -> {s3:.4} in {took:?}"))
}

fn partition_count_rounding() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut pairs: Vec<(u32, u32)> = vec![(7, 2), (5, 2), (1, 3), (10, 10), (3, 2)];
    while pairs.len() < 55 {
        let total = rng.gen_range(1..=500);
        pairs.push((total, rng.gen_range(1..=total)));
    }
    for &(total, scoremax) in &pairs {
        let expected = ((f64::from(total) / f64::from(scoremax) + 0.5).floor() as u32).max(1);
        let got = derive_k(total, scoremax).map_err(|e| e.to_string())?;
        ensure(got == expected, || {
            format!("derive_k({total}, {scoremax}) = {got}, expected {expected}")
        })?;
    }
    let half = derive_k(7, 2).unwrap();
    ensure(half == 4, || format!("3.5 rounded to {half}"))?;
    let took = within_budget(start, Duration::from_secs(1))?;
    Ok(format!(
        "{} pairs agree, 3.5 -> {half}, floor at 1 holds, in {took:?}",
        pairs.len()
    ))
}

fn equifrequency_cuts() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(3);
    for case in 0..1000 {
        let share = rng.gen_range(0.05..0.6);
        let (tokens, keywords) = random_stream(&mut rng, 200, 12, share);
        let k = rng.gen_range(1..=10u32);
        let parts = equifrequency_partition(&owned(&tokens), &keyword_set(&keywords), k).map_err(|e| e.to_string())?;
        let spans: Vec<(usize, usize)> = parts.iter().map(|p| (p.start, p.end)).collect();

        let solutions = brute_force_partitions(&tokens, &keywords, k as usize);
        ensure(solutions.len() == 1, || {
            format!("case {case}: oracle found {} solutions", solutions.len())
        })?;
        ensure(solutions[0] == spans, || {
            format!("case {case}: k={k} got {spans:?}, oracle {:?}", solutions[0])
        })?;

        ensure(spans[0].0 == 0 && spans.last().unwrap().1 == tokens.len() - 1, || {
            format!("case {case}: not covering")
        })?;
        for w in spans.windows(2) {
            ensure(w[0].1 + 1 == w[1].0, || format!("case {case}: gap or overlap {w:?}"))?;
        }
        let total_kw = tokens.iter().filter(|t| keywords.contains(*t)).count() as u32;
        let counted: u32 = parts.iter().map(|p| p.keyword_count).sum();
        ensure(counted == total_kw, || {
            format!("case {case}: keyword counts {counted} != {total_kw}")
        })?;
        for p in &parts[..parts.len() - 1] {
            ensure(p.keyword_count == k, || {
                format!("case {case}: inner partition holds {}", p.keyword_count)
            })?;
        }
        let last = parts.last().unwrap().keyword_count;
        ensure((1..=k).contains(&last), || {
            format!("case {case}: last partition holds {last}")
        })?;
    }
    let took = within_budget(start, Duration::from_secs(10))?;
    Ok(format!("1000 streams match the oracle in {took:?}"))
}

fn partition_scores() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(4);
    let mut compared = 0usize;
    for case in 0..100 {
        let share = rng.gen_range(0.02..0.3);
        let (tokens, keywords) = random_stream(&mut rng, 500, 40, share);
        let parts = partition_document(&owned(&tokens), &keyword_set(&keywords), ScoremaxRule::default())
            .map_err(|e| e.to_string())?;
        let spans: Vec<(usize, usize)> = parts.iter().map(|p| (p.start, p.end)).collect();
        let got = score_partitions(&parts).map_err(|e| e.to_string())?;
        let want = direct_scores(&tokens, &spans);
        ensure(got.len() == want.len(), || {
            format!("case {case}: {} terms vs {}", got.len(), want.len())
        })?;
        for (term, w) in &want {
            let g = got.get(term).copied().unwrap_or(f64::NAN);
            ensure((g - w).abs() <= 1e-12, || {
                format!("case {case}: {term} scored {g}, expected {w}")
            })?;
        }
        compared += want.len();
    }
    let took = within_budget(start, Duration::from_secs(5))?;
    Ok(format!("{compared} term scores match direct counting in {took:?}"))
}

fn candidates(entries: &[(&str, f64)]) -> CandidateList {
    CandidateList {
        topic: 1,
        entries: entries
            .iter()
            .map(|&(t, s)| CandidateTerm {
                term: t.into(),
                score: s,
                source_doc: "D".into(),
            })
            .collect(),
    }
}

fn selection_rules() -> Check {
    let start = Instant::now();
    let query: Vec<String> = vec!["q1".into(), "q2".into(), "q3".into()];
    let kw = KeywordSet::new(query.iter().cloned());
    type Case<'a> = (&'a str, Vec<(&'a str, f64)>, Method, Option<f64>, Method, Vec<&'a str>);
    let mixed = vec![("x", 1.0), ("y", 1.0), ("q1", 0.477), ("z", 0.477), ("w", 0.2)];
    let cases: Vec<Case> = vec![
        (
            "highest picks the top group",
            mixed.clone(),
            Method::Highest,
            Some(1.0),
            Method::Highest,
            vec!["x", "y"],
        ),
        (
            "average picks the group nearest the mean",
            mixed.clone(),
            Method::Average,
            Some(0.477),
            Method::Average,
            vec!["z"],
        ),
        (
            "keyword picks the group with a query term",
            mixed,
            Method::Keyword,
            Some(0.477),
            Method::Keyword,
            vec!["z"],
        ),
        (
            "keyword count tie goes to the higher score",
            vec![("q1", 0.9), ("a", 0.9), ("q2", 0.5), ("b", 0.5)],
            Method::Keyword,
            Some(0.9),
            Method::Keyword,
            vec!["a"],
        ),
        (
            "keyword prefers more query terms over score",
            vec![("a", 0.9), ("q1", 0.8), ("b", 0.3), ("q2", 0.3), ("q3", 0.3)],
            Method::Keyword,
            Some(0.3),
            Method::Keyword,
            vec!["b"],
        ),
        (
            "keyword without any query term leaves the query as is",
            vec![("a", 0.9), ("b", 0.5)],
            Method::Keyword,
            None,
            Method::None,
            vec![],
        ),
        (
            "keyword group of query terms only leaves the query as is",
            vec![("a", 0.9), ("q1", 0.5)],
            Method::Keyword,
            Some(0.5),
            Method::None,
            vec![],
        ),
        (
            "average tie goes to the higher score",
            vec![("a", 1.0), ("b", 0.0)],
            Method::Average,
            Some(1.0),
            Method::Average,
            vec!["a"],
        ),
        (
            "near-equal scores share a group",
            vec![("a", 0.1 + 0.2), ("b", 0.3), ("c", 0.1)],
            Method::Highest,
            Some(0.3),
            Method::Highest,
            vec!["a", "b"],
        ),
    ];
    for (name, list, method, want_score, want_method, want_terms) in &cases {
        let groups = form_groups(&candidates(list), &kw);
        let picked = method.select(&groups);
        let score = picked.map(|g| g.score);
        let same = match (score, want_score) {
            (Some(a), Some(b)) => (a - b).abs() < 1e-9,
            (None, None) => true,
            _ => false,
        };
        ensure(same, || format!("{name}: picked {score:?}, expected {want_score:?}"))?;
        let q = reformulate(1, picked, *method, &query);
        ensure(q.method == *want_method, || {
            format!("{name}: method {:?}, expected {want_method:?}", q.method)
        })?;
        ensure(q.expansion_terms == *want_terms, || {
            format!("{name}: expansion {:?}, expected {want_terms:?}", q.expansion_terms)
        })?;
    }
    let took = within_budget(start, Duration::from_secs(1))?;
    Ok(format!("{} truth-table rows hold in {took:?}", cases.len()))
}

fn load_run(path: &Path) -> Vec<RunEntry> {
    parse_run(BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn load_qrels(path: &Path) -> Qrels {
    parse_qrels(BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

struct Golden {
    map: f64,
    relevant: usize,
    relevant_retrieved: usize,
    per_topic: &'static [f64],
}

fn check_golden(name: &str, report: &RunReport, g: &Golden) -> Result<(), String> {
    ensure((report.map - g.map).abs() <= 1e-4, || {
        format!("{name}: MAP {} vs {}", report.map, g.map)
    })?;
    ensure(report.totals.relevant == g.relevant, || {
        format!("{name}: relevant {}", report.totals.relevant)
    })?;
    ensure(report.totals.relevant_retrieved == g.relevant_retrieved, || {
        format!("{name}: relevant retrieved {}", report.totals.relevant_retrieved)
    })?;
    if !g.per_topic.is_empty() {
        ensure(report.per_topic.len() == g.per_topic.len(), || {
            format!("{name}: {} topics", report.per_topic.len())
        })?;
        for (t, want) in report.per_topic.iter().zip(g.per_topic) {
            ensure((t.ap - want).abs() <= 1e-4, || {
                format!("{name}: topic {} AP {} vs {want}", t.topic, t.ap)
            })?;
        }
    }
    Ok(())
}

fn reference_evaluation() -> Check {
    let eval = fixture_dir("eval");
    let qrels = load_qrels(&eval.join("qrels.txt"));
    let goldens = [
        (
            "base",
            Golden {
                map: 0.5419843068338333,
                relevant: 101,
                relevant_retrieved: 65,
                per_topic: &[
                    0.5634197324414716,
                    0.4714929033814483,
                    0.686888273314866,
                    0.416440761120395,
                    0.5716798639109852,
                ],
            },
        ),
        (
            "strong",
            Golden {
                map: 0.9506936729305323,
                relevant: 101,
                relevant_retrieved: 101,
                per_topic: &[
                    0.9694644656281485,
                    0.9908466819221967,
                    0.9512227538543329,
                    0.8826992540127749,
                    0.9592352092352092,
                ],
            },
        ),
        (
            "weak",
            Golden {
                map: 0.05090748380558584,
                relevant: 101,
                relevant_retrieved: 15,
                per_topic: &[
                    0.012361466325660698,
                    0.005847953216374269,
                    0.09273182957393483,
                    0.1082995951417004,
                    0.03529657477025898,
                ],
            },
        ),
    ];
    for (name, g) in &goldens {
        let report = evaluate_run(&load_run(&eval.join(format!("{name}.run"))), &qrels);
        check_golden(name, &report, g)?;
    }

    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::load(&fixture_dir("mini").join("config.toml")).map_err(|e| e.to_string())?;
    cfg.output = out.path().to_path_buf();
    run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let mini_qrels = load_qrels(&fixture_dir("mini").join("qrels.txt"));
    let mini = [
        ("baseline", 0.8555555555555555, 9),
        ("highest", 0.9833333333333334, 10),
        ("average", 0.9833333333333334, 10),
        ("keyword", 0.8555555555555555, 9),
    ];
    for (name, map, rel_ret) in mini {
        let run = load_run(&out.path().join(format!("MINIRUN.{name}.run")));
        let g = Golden {
            map,
            relevant: 10,
            relevant_retrieved: rel_ret,
            per_topic: &[],
        };
        check_golden(&format!("mini {name}"), &evaluate_run(&run, &mini_qrels), &g)?;
    }

    let mut hand = Qrels::default();
    hand.insert(1, "d1", 1).unwrap();
    hand.insert(1, "d3", 1).unwrap();
    let ranked: Vec<RunEntry> = ["d1", "d2", "d3"]
        .iter()
        .enumerate()
        .map(|(i, d)| RunEntry {
            topic: 1,
            docno: d.to_string(),
            rank: i + 1,
            score: 3.0 - i as f64,
            tag: "T".into(),
        })
        .collect();
    let ap = average_precision(&ranked, &hand, 1).map(|t| t.ap).unwrap_or(f64::NAN);
    ensure((ap - 0.8333).abs() <= 1e-4, || format!("hand AP {ap}"))?;
    Ok(format!(
        "3 fixture runs and 4 pipeline runs match reference values; hand AP {ap:.4}"
    ))
}

fn single_topic_report(ap: f64) -> RunReport {
    RunReport {
        per_topic: vec![TopicEval {
            topic: 1,
            ap,
            retrieved: 10,
            relevant: 4,
            relevant_retrieved: 2,
        }],
        map: ap,
        totals: Totals {
            topics: 1,
            retrieved: 10,
            relevant: 4,
            relevant_retrieved: 2,
        },
    }
}

fn relative_map_change() -> Check {
    let base = single_topic_report(0.2453);
    let variants = BTreeMap::from([(Method::Keyword, single_topic_report(0.2507))]);
    let cmp = compare_runs(&base, &variants).map_err(|e| e.to_string())?;
    let m = &cmp.methods[0];
    ensure((m.map_change_pct - 2.15).abs() <= 0.1, || {
        format!("relative change {:.4}%", m.map_change_pct)
    })?;
    ensure(m.improved == 1, || format!("{} topics improved", m.improved))?;
    Ok(format!("0.2453 -> 0.2507 is {:+.2}%", m.map_change_pct))
}

fn planted_term_recovery() -> Check {
    let start = Instant::now();
    let corpus = synthetic_corpus(20261018);
    let collection = Collection::from_documents(
        corpus.docs.iter().cloned().map(Ok),
        LangProfile::empty("none", ScriptHint::Mixed),
    )
    .map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        tag: "SYNTH".into(),
        output: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    let output = run_with(&cfg, &collection, &corpus.trec_topics(), &corpus.qrels).map_err(|e| e.to_string())?;
    let mut recovered = Vec::new();
    for t in &corpus.topics {
        let outcome = output
            .outcomes
            .iter()
            .find(|o| o.topic == t.number)
            .ok_or("topic missing")?;
        let (q, _) = &outcome.variants[&Method::Keyword];
        let hits = q.expansion_terms.iter().filter(|e| t.planted.contains(e)).count();
        ensure(hits >= 3, || {
            format!("topic {}: {hits} planted terms in {:?}", t.number, q.expansion_terms)
        })?;
        recovered.push(hits);
    }
    let before = output.baseline.map;
    let after = output.variants[&Method::Keyword].map;
    ensure(after >= before, || format!("MAP fell from {before:.4} to {after:.4}"))?;
    let took = within_budget(start, Duration::from_secs(30))?;
    Ok(format!(
        "planted terms recovered per topic {recovered:?}, MAP {before:.4} -> {after:.4} in {took:?}"
    ))
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn reproducible_outputs() -> Check {
    let synth_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synthetic_corpus(7).write_to(synth_dir.path());
    let synth = RunConfig {
        corpus: Some(synth_dir.path().join("docs.trec")),
        topics: synth_dir.path().join("topics.trec"),
        qrels: synth_dir.path().join("qrels.txt"),
        tag: "SYNTH".into(),
        dump_partitions: true,
        ..RunConfig::default()
    };
    let mut mini = RunConfig::load(&fixture_dir("mini").join("config.toml")).map_err(|e| e.to_string())?;
    mini.dump_partitions = true;

    let wide = std::thread::available_parallelism().map_or(8, |n| n.get()).max(8);
    let mut files = 0;
    for base in [mini, synth] {
        let mut runs = Vec::new();
        for threads in [1, wide, wide] {
            let out = tempfile::tempdir().map_err(|e| e.to_string())?;
            let cfg = RunConfig {
                output: out.path().to_path_buf(),
                threads: Some(threads),
                ..base.clone()
            };
            run_pipeline(&cfg).map_err(|e| e.to_string())?;
            runs.push(read_outputs(out.path()));
        }
        for (i, run) in runs.iter().enumerate().skip(1) {
            ensure(run.keys().eq(runs[0].keys()), || {
                format!("{}: run {i} wrote different files", base.tag)
            })?;
            for (name, bytes) in run {
                ensure(*bytes == runs[0][name], || {
                    format!("{}: {name} differs in run {i}", base.tag)
                })?;
            }
        }
        files += runs[0].len();
    }
    Ok(format!("{files} artifacts byte-identical across 1 and {wide} threads"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 9] = [
        (
            "term confined to one of P partitions scores log10(P)",
            confined_term_score,
        ),
        (
            "partition count k rounds half up with a floor of 1",
            partition_count_rounding,
        ),
        ("equi-frequency cuts match exhaustive search", equifrequency_cuts),
        ("partition tf-idf matches direct counting", partition_scores),
        ("group selection rules and fallbacks", selection_rules),
        ("evaluation matches reference trec_eval values", reference_evaluation),
        ("relative MAP change", relative_map_change),
        ("planted expansion terms are recovered", planted_term_recovery),
        (
            "outputs are byte-identical across runs and thread counts",
            reproducible_outputs,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
