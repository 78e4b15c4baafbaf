use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::run::{BenchOptions, CaseResult};
use super::BenchCategory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub name: String,
    pub description: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: BenchCategory,
    pub total: u32,
    pub passed: u32,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub cases: u32,
    pub passed: u32,
    pub pass_rate: f64,
    pub validation_events: u32,
    pub rechecks: u32,
    pub corrections: u32,
    pub replans: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: u32,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub corpus: CorpusInfo,
    /// Effective configuration echo.
    pub config: Value,
    pub totals: Totals,
    pub categories: Vec<CategoryRow>,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub cases: Vec<CaseResult>,
}

fn rate(passed: u32, total: u32) -> f64 {
    if total == 0 {
        0.0
    } else {
        f64::from(passed) / f64::from(total)
    }
}

impl BenchReport {
    /// Folds case results in case-id order.
    pub fn aggregate(results: &[CaseResult], opts: &BenchOptions) -> BenchReport {
        let mut results = results.to_vec();
        results.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_cat: BTreeMap<BenchCategory, (u32, u32)> = BTreeMap::new();
        let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in &results {
            let e = by_cat.entry(r.category).or_default();
            e.0 += 1;
            e.1 += u32::from(r.pass);
            if let Some(l) = &r.logical {
                for (name, v) in l.components() {
                    samples.entry(name.to_string()).or_default().push(v);
                }
            }
            for inv in &r.local {
                let s = inv.scores;
                for (name, v) in [("sts", s.sts), ("bert_p", s.bert_p), ("bert_r", s.bert_r), ("bert_f1", s.bert_f1)] {
                    samples.entry(name.to_string()).or_default().push(v);
                }
            }
        }
        let categories = by_cat
            .into_iter()
            .map(|(category, (total, passed))| CategoryRow { category, total, passed, pass_rate: rate(passed, total) })
            .collect();
        let metrics = samples
            .into_iter()
            .map(|(name, v)| {
                let summary = MetricSummary {
                    count: v.len() as u32,
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                };
                (name, summary)
            })
            .collect();
        let cases = results.len() as u32;
        let passed = results.iter().filter(|r| r.pass).count() as u32;
        let sum = |f: fn(&CaseResult) -> u32| results.iter().map(f).sum();
        BenchReport {
            corpus: opts.corpus.clone(),
            config: serde_json::json!({
                "progact": opts.progact.clone().effective(),
                "metrics": opts.metrics,
                "embedder": opts.embedder.name(),
            }),
            totals: Totals {
                cases,
                passed,
                pass_rate: rate(passed, cases),
                validation_events: sum(|r| r.validation_events),
                rechecks: sum(|r| r.rechecks),
                corrections: sum(|r| r.corrections),
                replans: sum(|r| r.replans),
            },
            categories,
            metrics,
            cases: results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Markdown rendering: per-category pass table, metric means, case list.
pub fn render_markdown(r: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Bench report: {}\n", r.corpus.name);
    let _ = writeln!(out, "Corpus: {}. {}\n", r.corpus.label, r.corpus.description);
    if let Some(mode) = r.config.pointer("/progact/mode").and_then(Value::as_str) {
        let _ = writeln!(out, "Mode: `{mode}`\n");
    }
    out.push_str("| Category | Total | Pass | Pass@1 |\n|---|---:|---:|---:|\n");
    for row in &r.categories {
        let _ = writeln!(out, "| {} | {} | {} | {} |", row.category, row.total, row.passed, pct(row.pass_rate));
    }
    let t = &r.totals;
    let _ = writeln!(out, "| **All** | {} | {} | {} |\n", t.cases, t.passed, pct(t.pass_rate));
    let _ = writeln!(
        out,
        "Validation events: {}, re-checks: {}, corrections: {}, replans: {}.\n",
        t.validation_events, t.rechecks, t.corrections, t.replans
    );
    if !r.metrics.is_empty() {
        out.push_str("| Metric | Mean | Min | Max |\n|---|---:|---:|---:|\n");
        for (name, m) in &r.metrics {
            let _ = writeln!(out, "| {name} | {:.4} | {:.4} | {:.4} |", m.mean, m.min, m.max);
        }
        out.push('\n');
    }
    if !r.cases.is_empty() {
        out.push_str("| Case | Category | Pass | Error | Threshold | Note |\n|---|---|:---:|---:|---:|---|\n");
        for c in &r.cases {
            let err = c.numeric_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
            let thr = c.threshold.map(|e| format!("{e:.0e}")).unwrap_or_else(|| "-".into());
            let note = c.failure.as_deref().unwrap_or("").replace('|', "/");
            let _ = writeln!(out, "| {} | {} | {} | {err} | {thr} | {note} |", c.id, c.category, if c.pass { "yes" } else { "no" });
        }
    }
    out
}

/// Side-by-side pass table for several labelled reports.
pub fn render_comparison(reports: &[(String, BenchReport)]) -> String {
    let mut out = String::from("# Bench comparison\n\n| Category |");
    for (label, _) in reports {
        let _ = write!(out, " {label} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(reports.len()));
    out.push('\n');
    let mut cats: Vec<BenchCategory> = reports.iter().flat_map(|(_, r)| r.categories.iter().map(|c| c.category)).collect();
    cats.sort();
    cats.dedup();
    for cat in cats {
        let _ = write!(out, "| {cat} |");
        for (_, r) in reports {
            match r.categories.iter().find(|c| c.category == cat) {
                Some(c) => {
                    let _ = write!(out, " {}/{} |", c.passed, c.total);
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out.push_str("| **All** |");
    for (_, r) in reports {
        let _ = write!(out, " {}/{} ({}) |", r.totals.passed, r.totals.cases, pct(r.totals.pass_rate));
    }
    out.push_str("\n| Validation events |");
    for (_, r) in reports {
        let _ = write!(out, " {} |", r.totals.validation_events);
    }
    out.push('\n');
    out
}
