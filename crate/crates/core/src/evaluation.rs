//! Average precision, MAP and before/after comparisons of runs.
//!
//! Relevance is binary: any grade above zero counts. Topics with no relevant
//! judgments are left out of MAP, as trec_eval does.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use log::warn;

use crate::corpus::{Qrels, RunEntry};
use crate::error::{Error, Result};
use crate::expansion::Method;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicEval {
    pub topic: u32,
    pub ap: f64,
    pub retrieved: usize,
    pub relevant: usize,
    pub relevant_retrieved: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Totals {
    pub topics: usize,
    pub retrieved: usize,
    pub relevant: usize,
    pub relevant_retrieved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub per_topic: Vec<TopicEval>,
    pub map: f64,
    pub totals: Totals,
}

impl RunReport {
    pub fn topic(&self, topic: u32) -> Option<&TopicEval> {
        self.per_topic.iter().find(|t| t.topic == topic)
    }
}

/// AP of one topic's ranking, or `None` when the topic has no relevant
/// judgments. Entries are taken in rank order.
pub fn average_precision(entries: &[RunEntry], qrels: &Qrels, topic: u32) -> Option<TopicEval> {
    let relevant = qrels.relevant_count(topic);
    if relevant == 0 {
        return None;
    }
    let mut ranked: Vec<&RunEntry> = entries.iter().filter(|e| e.topic == topic).collect();
    ranked.sort_by_key(|e| e.rank);

    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (i, e) in ranked.iter().enumerate() {
        if qrels.is_relevant(topic, &e.docno) {
            hits += 1;
            precision_sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(TopicEval {
        topic,
        ap: precision_sum / relevant as f64,
        retrieved: ranked.len(),
        relevant,
        relevant_retrieved: hits,
    })
}

pub fn evaluate_run(entries: &[RunEntry], qrels: &Qrels) -> RunReport {
    let topics: BTreeSet<u32> = entries.iter().map(|e| e.topic).collect();
    let mut by_topic: BTreeMap<u32, Vec<RunEntry>> = BTreeMap::new();
    for e in entries {
        by_topic.entry(e.topic).or_default().push(e.clone());
    }
    let mut per_topic = Vec::with_capacity(topics.len());
    for topic in topics {
        match average_precision(&by_topic[&topic], qrels, topic) {
            Some(te) => per_topic.push(te),
            None if !qrels.contains_topic(topic) => warn!("topic {topic} has no judgments; skipped"),
            None => warn!("topic {topic} has no relevant documents; skipped"),
        }
    }
    report_from(per_topic)
}

fn report_from(per_topic: Vec<TopicEval>) -> RunReport {
    let totals = Totals {
        topics: per_topic.len(),
        retrieved: per_topic.iter().map(|t| t.retrieved).sum(),
        relevant: per_topic.iter().map(|t| t.relevant).sum(),
        relevant_retrieved: per_topic.iter().map(|t| t.relevant_retrieved).sum(),
    };
    let map = if per_topic.is_empty() {
        0.0
    } else {
        per_topic.iter().map(|t| t.ap).sum::<f64>() / per_topic.len() as f64
    };
    RunReport { per_topic, map, totals }
}

/// Evaluates exactly the given topics. A judged topic with no rows in the run
/// scores zero instead of being skipped.
pub fn evaluate_topics(entries: &[RunEntry], qrels: &Qrels, topics: &[u32]) -> RunReport {
    let per_topic = topics
        .iter()
        .filter_map(|&t| average_precision(entries, qrels, t))
        .collect();
    report_from(per_topic)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicDelta {
    pub topic: u32,
    pub ap_before: f64,
    pub ap_after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodComparison {
    pub method: Method,
    pub deltas: Vec<TopicDelta>,
    pub improved: usize,
    pub improved_pct: f64,
    pub map_before: f64,
    pub map_after: f64,
    pub map_delta: f64,
    /// Relative MAP change in percent.
    pub map_change_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub methods: Vec<MethodComparison>,
}

/// Per-topic AP deltas of each variant against the baseline.
pub fn compare_runs(baseline: &RunReport, variants: &BTreeMap<Method, RunReport>) -> Result<Comparison> {
    let base_topics: BTreeSet<u32> = baseline.per_topic.iter().map(|t| t.topic).collect();
    let mut methods = Vec::new();
    for (&method, report) in variants {
        let topics: BTreeSet<u32> = report.per_topic.iter().map(|t| t.topic).collect();
        if topics != base_topics {
            return Err(Error::TopicMismatch(
                base_topics.symmetric_difference(&topics).copied().collect(),
            ));
        }
        let deltas: Vec<TopicDelta> = baseline
            .per_topic
            .iter()
            .zip(&report.per_topic)
            .map(|(b, a)| TopicDelta {
                topic: b.topic,
                ap_before: b.ap,
                ap_after: a.ap,
                delta: a.ap - b.ap,
            })
            .collect();
        let improved = deltas.iter().filter(|d| d.delta > 0.0).count();
        let improved_pct = if deltas.is_empty() {
            0.0
        } else {
            100.0 * improved as f64 / deltas.len() as f64
        };
        methods.push(MethodComparison {
            method,
            improved,
            improved_pct,
            map_before: baseline.map,
            map_after: report.map,
            map_delta: report.map - baseline.map,
            map_change_pct: relative_change_pct(baseline.map, report.map),
            deltas,
        });
    }
    Ok(Comparison { methods })
}

pub fn relative_change_pct(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        100.0 * (after - before) / before
    }
}

/// Side-by-side summary: one column per run, rows for counts and MAP.
pub fn render_summary(columns: &[(&str, &RunReport)]) -> String {
    let mut out = String::new();
    let width = columns
        .iter()
        .map(|(l, _)| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(10);
    let _ = write!(out, "{:<20}", "");
    for (label, _) in columns {
        let _ = write!(out, "  {label:>width$}");
    }
    out.push('\n');
    type Row = (&'static str, fn(&RunReport) -> String);
    let rows: [Row; 5] = [
        ("No. of Queries", |r| r.totals.topics.to_string()),
        ("Retrieved", |r| r.totals.retrieved.to_string()),
        ("Relevant", |r| r.totals.relevant.to_string()),
        ("Relevant Retrieved", |r| r.totals.relevant_retrieved.to_string()),
        ("Average Precision", |r| format!("{:.4}", r.map)),
    ];
    for (name, cell) in rows {
        let _ = write!(out, "{name:<20}");
        for (_, report) in columns {
            let _ = write!(out, "  {:>width$}", cell(report));
        }
        out.push('\n');
    }
    out
}

/// Per-topic table of one run.
pub fn render_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8}  {:>9}  {:>8}  {:>13}  {:>8}",
        "topic", "retrieved", "relevant", "rel_retrieved", "ap"
    );
    for t in &report.per_topic {
        let _ = writeln!(
            out,
            "{:>8}  {:>9}  {:>8}  {:>13}  {:>8.4}",
            t.topic, t.retrieved, t.relevant, t.relevant_retrieved, t.ap
        );
    }
    let _ = writeln!(
        out,
        "{:>8}  {:>9}  {:>8}  {:>13}  {:>8.4}",
        "all", report.totals.retrieved, report.totals.relevant, report.totals.relevant_retrieved, report.map
    );
    out
}

/// Improved-topic counts and MAP change per method.
pub fn render_improvements(cmp: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16}  {:>8}  {:>8}  {:>10}  {:>10}",
        "method", "improved", "percent", "map_delta", "map_change"
    );
    for m in &cmp.methods {
        let _ = writeln!(
            out,
            "{:<16}  {:>8}  {:>7.1}%  {:>+10.4}  {:>+9.2}%",
            m.method.label(),
            format!("{}/{}", m.improved, m.deltas.len()),
            m.improved_pct,
            m.map_delta,
            m.map_change_pct
        );
    }
    out
}

/// `topic,method,ap_before,ap_after,delta` rows.
pub fn write_comparison_csv<W: Write>(cmp: &Comparison, mut sink: W) -> Result<()> {
    writeln!(sink, "topic,method,ap_before,ap_after,delta")?;
    for m in &cmp.methods {
        for d in &m.deltas {
            writeln!(
                sink,
                "{},{},{:.4},{:.4},{:.4}",
                d.topic, m.method, d.ap_before, d.ap_after, d.delta
            )?;
        }
    }
    sink.flush()?;
    Ok(())
}
