use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::graph::UserId;
use crate::strategies::{CrawlTrace, StrategyKind};

pub const CURVES_FILE: &str = "curves.csv";
pub const PERVICTIM_FILE: &str = "pervictim.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub requests: usize,
    /// Simulated seconds: `requests` times the per-request latency.
    pub time: f64,
    pub mean_found: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurve {
    pub strategy: StrategyKind,
    pub points: Vec<CurvePoint>,
}

impl RecallCurve {
    pub fn final_mean(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.mean_found)
    }

    /// Mean friends found after `r` requests.
    pub fn at(&self, r: usize) -> f64 {
        let i = r.min(self.points.len().saturating_sub(1));
        self.points.get(i).map_or(0.0, |p| p.mean_found)
    }
}

/// Mean friends found after each request index, from 0 to the longest
/// trace. Shorter traces keep their final count.
pub fn recall_curve(traces: &[&CrawlTrace], latency_ms: u64) -> Result<RecallCurve> {
    let Some(first) = traces.first() else {
        return Err(Error::Experiment("recall curve over no traces".into()));
    };
    if let Some(other) = traces.iter().find(|t| t.strategy != first.strategy) {
        return Err(Error::Experiment(format!(
            "recall curve mixes {} and {}",
            first.strategy, other.strategy
        )));
    }
    let progress: Vec<Vec<usize>> = traces.iter().map(|t| t.progress()).collect();
    let longest = progress.iter().map(Vec::len).max().unwrap_or(0);
    let n = traces.len() as f64;
    let points = (0..=longest)
        .map(|r| {
            let total: usize = progress
                .iter()
                .map(|p| match r {
                    0 => 0,
                    _ => p.get(r - 1).or(p.last()).copied().unwrap_or(0),
                })
                .sum();
            CurvePoint {
                requests: r,
                time: r as f64 * latency_ms as f64 / 1000.0,
                mean_found: total as f64 / n,
            }
        })
        .collect();
    Ok(RecallCurve {
        strategy: first.strategy,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimRow {
    pub victim: UserId,
    /// Friends found per strategy, in the report's strategy order.
    pub found: Vec<usize>,
    pub best: Vec<StrategyKind>,
    /// Share of the best count per strategy, in percent rounded to 0.1.
    pub percent: Vec<f64>,
}

/// Normalizes each victim's counts against its best strategy. Victims on
/// which every strategy found nothing are left out.
pub fn per_victim_best(
    strategies: &[StrategyKind],
    counts: &BTreeMap<UserId, Vec<usize>>,
) -> Vec<VictimRow> {
    counts
        .iter()
        .filter_map(|(&victim, found)| {
            let best = *found.iter().max()?;
            if best == 0 {
                return None;
            }
            Some(VictimRow {
                victim,
                found: found.clone(),
                best: strategies
                    .iter()
                    .zip(found)
                    .filter(|(_, &f)| f == best)
                    .map(|(&s, _)| s)
                    .collect(),
                percent: found
                    .iter()
                    .map(|&f| (f as f64 / best as f64 * 1000.0).round() / 10.0)
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub victims: usize,
    /// Victims with at least one friend found.
    pub victims_reached: usize,
    /// Mean of found / true friends over victims with at least one true
    /// friend; `null` without ground truth.
    pub mean_recall: Option<f64>,
    pub max_recall: Option<f64>,
    pub mean_found: f64,
    pub total_requests: usize,
    pub mean_requests: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub victims: usize,
    pub latency_ms: u64,
    pub total_requests: usize,
    pub strategies: Vec<StrategySummary>,
}

impl Summary {
    pub fn strategy(&self, kind: StrategyKind) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub strategies: Vec<StrategyKind>,
    pub curves: Vec<RecallCurve>,
    pub per_victim: Vec<VictimRow>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn curve(&self, kind: StrategyKind) -> Option<&RecallCurve> {
        self.curves.iter().find(|c| c.strategy == kind)
    }
}

/// Reduces finished runs to a report. The result does not depend on the
/// order of `runs`.
pub fn build_report(runs: &[RunRecord]) -> Result<ExperimentReport> {
    let Some(first) = runs.first() else {
        return Err(Error::Experiment("no runs to report".into()));
    };
    let latency_ms = first.header.latency_ms;
    if runs.iter().any(|r| r.header.latency_ms != latency_ms) {
        return Err(Error::Experiment("runs disagree on latency".into()));
    }
    let mut seen = BTreeSet::new();
    for r in runs {
        if !seen.insert((r.header.victim, r.header.strategy)) {
            return Err(Error::Experiment(format!(
                "duplicate run for {} with {}",
                r.header.victim, r.header.strategy
            )));
        }
    }
    let strategies: Vec<StrategyKind> = runs
        .iter()
        .map(|r| r.header.strategy)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let victims: BTreeSet<UserId> = runs.iter().map(|r| r.header.victim).collect();

    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for &kind in &strategies {
        let mut mine: Vec<&RunRecord> = runs.iter().filter(|r| r.header.strategy == kind).collect();
        mine.sort_by_key(|r| r.header.victim);
        let traces: Vec<&CrawlTrace> = mine.iter().map(|r| &r.trace).collect();
        curves.push(recall_curve(&traces, latency_ms)?);

        let recalls: Vec<f64> = mine
            .iter()
            .filter_map(|r| match r.header.true_friends {
                Some(n) if n > 0 => Some(r.trace.friends_found.len() as f64 / n as f64),
                _ => None,
            })
            .collect();
        let known = mine.iter().all(|r| r.header.true_friends.is_some());
        let total_requests: usize = traces.iter().map(|t| t.requests()).sum();
        let found: usize = traces.iter().map(|t| t.friends_found.len()).sum();
        let n = mine.len() as f64;
        summaries.push(StrategySummary {
            strategy: kind,
            victims: mine.len(),
            victims_reached: traces.iter().filter(|t| !t.friends_found.is_empty()).count(),
            mean_recall: (known && !recalls.is_empty())
                .then(|| recalls.iter().sum::<f64>() / recalls.len() as f64),
            max_recall: (known && !recalls.is_empty())
                .then(|| recalls.iter().copied().fold(0.0, f64::max)),
            mean_found: found as f64 / n,
            total_requests,
            mean_requests: total_requests as f64 / n,
        });
    }

    let mut counts: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
    for &v in &victims {
        let row = strategies
            .iter()
            .map(|&s| {
                runs.iter()
                    .find(|r| r.header.victim == v && r.header.strategy == s)
                    .map_or(0, |r| r.trace.friends_found.len())
            })
            .collect();
        counts.insert(v, row);
    }

    Ok(ExperimentReport {
        per_victim: per_victim_best(&strategies, &counts),
        summary: Summary {
            victims: victims.len(),
            latency_ms,
            total_requests: runs.iter().map(|r| r.trace.requests()).sum(),
            strategies: summaries,
        },
        strategies,
        curves,
    })
}

/// `strategy,requests,time,mean_found`, strategies in report order, then
/// by request count.
pub fn curves_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("strategy,requests,time,mean_found\n");
    for c in &report.curves {
        for p in &c.points {
            let _ = writeln!(out, "{},{},{:.3},{:.6}", c.strategy, p.requests, p.time, p.mean_found);
        }
    }
    out
}

/// `victim`, one `found_<S>` column per strategy, `best` (strategies joined
/// by `+`), then one `pct_<S>` column per strategy.
pub fn pervictim_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("victim");
    for s in &report.strategies {
        let _ = write!(out, ",found_{s}");
    }
    out.push_str(",best");
    for s in &report.strategies {
        let _ = write!(out, ",pct_{s}");
    }
    out.push('\n');
    for row in &report.per_victim {
        let _ = write!(out, "{}", row.victim.0);
        for f in &row.found {
            let _ = write!(out, ",{f}");
        }
        let best: Vec<&str> = row.best.iter().map(|s| s.name()).collect();
        let _ = write!(out, ",{}", best.join("+"));
        for p in &row.percent {
            let _ = write!(out, ",{p:.1}");
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(&report.summary).expect("serializable");
    s.push('\n');
    s
}

pub fn export_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    if report.strategies.is_empty() {
        return Err(Error::Experiment("report has no strategies".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    for (name, body) in [
        (CURVES_FILE, curves_csv(report)),
        (PERVICTIM_FILE, pervictim_csv(report)),
        (SUMMARY_FILE, summary_json(report)),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::file(&path, e))?;
    }
    Ok(())
}
