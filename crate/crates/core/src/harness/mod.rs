//! Multi-victim experiments over a shared service.
//!
//! All runs of one experiment share one [`Service`] and one
//! [`AccountRotation`], so the service ledger accounts for every request
//! of every run.

pub mod fixtures;
mod report;
mod store;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::generate::{generate_graph, GenParams};
use crate::graph::{SocialGraph, UserId};
use crate::io::load_graph;
use crate::seed::rng_for;
use crate::service::{Account, AccountRotation, Oracle, Service, ServiceConfig};
use crate::strategies::trace::RunHeader;
use crate::strategies::{run_strategy, true_friends, CrawlTrace, Crawler, StrategyConfig, StrategyKind};

pub use report::{
    build_report, curves_csv, export_report, per_victim_best, pervictim_csv, summary_json, recall_curve, CurvePoint, ExperimentReport,
    RecallCurve, StrategySummary, Summary, VictimRow, CURVES_FILE, PERVICTIM_FILE, SUMMARY_FILE,
};
pub use store::{load_traces, write_traces, TRACES_DIR};

pub const DEFAULT_ACCOUNTS: u32 = 9;

#[derive(Debug, Clone)]
pub enum GraphSource {
    File(PathBuf),
    Generated { params: GenParams, seed: u64 },
    Graph(Arc<SocialGraph>),
}

impl GraphSource {
    pub fn load(&self) -> Result<Arc<SocialGraph>> {
        match self {
            GraphSource::File(path) => Ok(Arc::new(load_graph(path)?)),
            GraphSource::Generated { params, seed } => Ok(Arc::new(generate_graph(params, *seed)?)),
            GraphSource::Graph(g) => Ok(Arc::clone(g)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VictimSelection {
    All,
    /// Users whose friend list is hidden.
    AllPrivate,
    List(Vec<UserId>),
    /// `k` users drawn without replacement using the run seed.
    Random(usize),
}

impl VictimSelection {
    pub fn resolve(&self, graph: &SocialGraph, seed: u64) -> Result<Vec<UserId>> {
        let victims: Vec<UserId> = match self {
            VictimSelection::All => graph.users.keys().copied().collect(),
            VictimSelection::AllPrivate => graph
                .users
                .values()
                .filter(|u| !u.privacy.friends_visible)
                .map(|u| u.id)
                .collect(),
            VictimSelection::List(ids) => {
                for id in ids {
                    if !graph.users.contains_key(id) {
                        return Err(Error::Experiment(format!("unknown victim {id}")));
                    }
                }
                ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
            }
            VictimSelection::Random(k) => {
                let all: Vec<UserId> = graph.users.keys().copied().collect();
                if *k > all.len() {
                    return Err(Error::Experiment(format!(
                        "cannot draw {k} victims from {} users",
                        all.len()
                    )));
                }
                let mut picked: Vec<UserId> = index::sample(&mut rng_for(&[seed, 0x7669]), all.len(), *k)
                    .into_iter()
                    .map(|i| all[i])
                    .collect();
                picked.sort();
                picked
            }
        };
        if victims.is_empty() {
            return Err(Error::Experiment("no victims selected".into()));
        }
        Ok(victims)
    }
}

impl std::str::FromStr for VictimSelection {
    type Err = String;

    /// `all`, `all-private`, `random:K` or a comma-separated id list
    /// (`3,17,u42`).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => return Ok(VictimSelection::All),
            "all-private" => return Ok(VictimSelection::AllPrivate),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("random:") {
            return k
                .parse()
                .map(VictimSelection::Random)
                .map_err(|_| format!("bad victim count {k:?}"));
        }
        let ids = s
            .split(',')
            .map(|part| {
                let t = part.trim();
                t.strip_prefix('u')
                    .unwrap_or(t)
                    .parse::<u32>()
                    .map(UserId)
                    .map_err(|_| format!("bad victim id {t:?}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(VictimSelection::List(ids))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub victims: VictimSelection,
    pub strategies: Vec<StrategyKind>,
    pub strategy: StrategyConfig,
    pub n_accounts: u32,
    pub service: ServiceConfig,
    /// Worker threads. Results do not depend on it; trace stamps do.
    pub jobs: usize,
    /// When set, traces and report files are written here.
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(graph: GraphSource, strategies: Vec<StrategyKind>) -> Self {
        ExperimentSpec {
            graph,
            victims: VictimSelection::All,
            strategies,
            strategy: StrategyConfig::default(),
            n_accounts: DEFAULT_ACCOUNTS,
            service: ServiceConfig::default(),
            jobs: 1,
            out_dir: None,
        }
    }
}

/// One finished (victim, strategy) run and the metadata needed to score it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub header: RunHeader,
    pub trace: CrawlTrace,
}

#[derive(Debug)]
pub struct Experiment {
    pub runs: Vec<RunRecord>,
    pub report: ExperimentReport,
    /// Ledger length of the experiment's service, when it is in-process.
    pub ledger_len: Option<usize>,
    pub accounts: Vec<Account>,
}

/// Runs every (victim, strategy) pair of `spec` against an in-process
/// service.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    check_spec(spec)?;
    let graph = spec.graph.load()?;
    let victims = spec.victims.resolve(&graph, spec.strategy.run_seed)?;
    let service = Service::new(Arc::clone(&graph), spec.service.clone());
    let runs = run_all(spec, &service, &victims, Some(&graph))?;
    let report = build_report(&runs)?;
    let experiment = Experiment {
        runs,
        report,
        ledger_len: Some(service.ledger_len()),
        accounts: service.accounts(),
    };
    persist(spec, &experiment)?;
    Ok(experiment)
}

/// Same as [`run_experiment`] against any oracle, for example a remote
/// service. `truth` supplies ground-truth friend counts and resolves
/// victim selections other than explicit lists.
pub fn run_with_oracle(
    spec: &ExperimentSpec,
    oracle: &dyn Oracle,
    truth: Option<&SocialGraph>,
) -> Result<Experiment> {
    check_spec(spec)?;
    let victims = match (truth, &spec.victims) {
        (Some(g), sel) => sel.resolve(g, spec.strategy.run_seed)?,
        (None, VictimSelection::List(ids)) if !ids.is_empty() => {
            ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
        }
        (None, VictimSelection::List(_)) => return Err(Error::Experiment("no victims selected".into())),
        (None, _) => {
            return Err(Error::Experiment(
                "this victim selection needs the ground-truth graph".into(),
            ))
        }
    };
    let runs = run_all(spec, oracle, &victims, truth)?;
    let report = build_report(&runs)?;
    let experiment = Experiment {
        runs,
        report,
        ledger_len: None,
        accounts: Vec::new(),
    };
    persist(spec, &experiment)?;
    Ok(experiment)
}

fn check_spec(spec: &ExperimentSpec) -> Result<()> {
    if spec.n_accounts == 0 {
        return Err(Error::InvalidParams("n_accounts must be at least 1".into()));
    }
    if spec.strategies.is_empty() {
        return Err(Error::InvalidParams("no strategies selected".into()));
    }
    if spec.jobs == 0 {
        return Err(Error::InvalidParams("jobs must be at least 1".into()));
    }
    Ok(())
}

fn persist(spec: &ExperimentSpec, experiment: &Experiment) -> Result<()> {
    if let Some(dir) = &spec.out_dir {
        write_traces(dir, &experiment.runs)?;
        export_report(&experiment.report, dir)?;
    }
    Ok(())
}

fn run_all(
    spec: &ExperimentSpec,
    oracle: &dyn Oracle,
    victims: &[UserId],
    truth: Option<&SocialGraph>,
) -> Result<Vec<RunRecord>> {
    let strategies: BTreeSet<StrategyKind> = spec.strategies.iter().copied().collect();
    let pairs: Vec<(UserId, StrategyKind)> = victims
        .iter()
        .flat_map(|&v| strategies.iter().map(move |&s| (v, s)))
        .collect();
    let accounts = AccountRotation::new(spec.n_accounts);
    let crawler = Crawler::new(oracle, &accounts);
    let one = |&(victim, kind): &(UserId, StrategyKind)| -> Result<RunRecord> {
        let true_count = match truth {
            Some(g) => Some(true_friends(victim, g)?.len()),
            None => None,
        };
        let trace = run_strategy(kind, victim, &crawler, &spec.strategy)?;
        Ok(RunRecord {
            header: RunHeader {
                victim,
                strategy: kind,
                run_seed: spec.strategy.run_seed,
                budget: spec.strategy.budget,
                latency_ms: spec.service.latency_ms,
                true_friends: true_count,
            },
            trace,
        })
    };
    if spec.jobs == 1 {
        return pairs.iter().map(one).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::Experiment(e.to_string()))?;
    pool.install(|| pairs.par_iter().map(one).collect())
}

#[cfg(test)]
mod tests;
