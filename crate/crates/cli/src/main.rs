use std::io::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ghostlist_core::generate::{generate_graph, GenParams, Preset};
use ghostlist_core::harness::{
    self, build_report, export_report, load_traces, run_experiment, run_with_oracle,
    ExperimentReport, ExperimentSpec, GraphSource, VictimSelection,
};
use ghostlist_core::io::{load_graph, save_graph};
use ghostlist_core::service::client::HttpOracle;
use ghostlist_core::service::http::serve_until_signal;
use ghostlist_core::service::{RateLimit, Service, ServiceConfig, DEFAULT_LATENCY_MS, DEFAULT_SAMPLE_SIZE};
use ghostlist_core::strategies::{StrategyConfig, StrategyKind};

/// Friend-list recovery simulator.
#[derive(Parser)]
#[command(name = "ghostlist", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph file.
    Generate(GenerateArgs),
    /// Serve a graph over HTTP until interrupted.
    Serve(ServeArgs),
    /// Run strategies against victims and write traces and reports.
    Crawl(CrawlArgs),
    /// Recompute report files from stored traces.
    Report(ReportArgs),
}

#[derive(Args)]
struct ServiceFlags {
    /// FacePile sample size.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE, value_parser = parse_positive)]
    sample_size: usize,
    /// Simulated milliseconds per request.
    #[arg(long, default_value_t = DEFAULT_LATENCY_MS)]
    latency: u64,
    /// Per-account rate limit as PER_SECOND[:BURST].
    #[arg(long, value_parser = parse_rate_limit)]
    rate_limit: Option<RateLimit>,
}

impl ServiceFlags {
    fn config(&self) -> ServiceConfig {
        ServiceConfig {
            sample_size: self.sample_size,
            latency_ms: self.latency,
            rate_limit: self.rate_limit,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Parameter preset.
    #[arg(long, value_parser = ["mixed", "public"], default_value = "mixed")]
    preset: String,
    /// JSON file of generator parameters; overrides the preset.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Single parameter override, e.g. `--set n_users=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, env = "GHOSTLIST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    service: ServiceFlags,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["graph", "url"])))]
struct CrawlArgs {
    /// Crawl an in-process service over this graph file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Crawl a running `ghostlist serve` instance.
    #[arg(long)]
    url: Option<String>,
    /// Ground-truth graph for recall and victim selection with --url.
    #[arg(long, conflicts_with = "graph")]
    truth: Option<PathBuf>,
    /// s1, s2, s3, s4, gasc, gdesc, or `all` (S1 to S4); comma-separated.
    #[arg(long, default_value = "all", value_parser = parse_strategies)]
    strategy: StrategyList,
    /// all, all-private, random:K, or a comma-separated id list.
    #[arg(long, default_value = "all-private")]
    victims: VictimSelection,
    /// Request budget per run.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = harness::DEFAULT_ACCOUNTS,
          value_parser = clap::value_parser!(u32).range(1..))]
    accounts: u32,
    #[arg(long, env = "GHOSTLIST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Also check the mutual friends of every confirmed friend.
    #[arg(long)]
    expand_mutuals: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    facepile_calls: u32,
    #[command(flatten)]
    service: ServiceFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Crawl output directory, or a directory of trace files.
    #[arg(long = "in")]
    input: PathBuf,
    /// Defaults to --in.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A flag problem found after parsing; exits with the usage code.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Clone)]
struct StrategyList(Vec<StrategyKind>);

fn parse_strategies(s: &str) -> Result<StrategyList, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.trim() {
            "all" => out.extend(StrategyKind::EVALUATED),
            p => out.push(p.parse()?),
        }
    }
    out.sort();
    out.dedup();
    Ok(StrategyList(out))
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn parse_rate_limit(s: &str) -> Result<RateLimit, String> {
    let (rate, burst) = s.split_once(':').unwrap_or((s, "1"));
    let per_second: f64 = rate.parse().map_err(|_| format!("bad rate {rate:?}"))?;
    let burst: f64 = burst.parse().map_err(|_| format!("bad burst {burst:?}"))?;
    if !(per_second > 0.0 && per_second.is_finite() && burst >= 1.0 && burst.is_finite()) {
        return Err("rate must be positive and burst at least 1".into());
    }
    Ok(RateLimit { per_second, burst })
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let mut params = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<GenParams>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => args.preset.parse::<Preset>()?.params(),
    };
    if !args.overrides.is_empty() {
        let mut value = serde_json::to_value(&params)?;
        for o in &args.overrides {
            let Some((key, raw)) = o.split_once('=') else {
                bail!(Usage(format!("override {o:?} is not KEY=VALUE")));
            };
            if value.get(key).is_none() {
                bail!(Usage(format!("unknown parameter {key:?}")));
            }
            value[key] = serde_json::from_str(raw)
                .map_err(|e| Usage(format!("bad value for {key}: {e}")))?;
        }
        params = serde_json::from_value(value).map_err(|e| Usage(e.to_string()))?;
    }
    params.validate().map_err(|e| Usage(e.to_string()))?;
    let graph = generate_graph(&params, args.seed)?;
    save_graph(&graph, &args.out)?;
    println!(
        "wrote {} users, {} pages, {} groups, {} pictures to {}",
        graph.users.len(),
        graph.pages.len(),
        graph.groups.len(),
        graph.pictures.len(),
        args.out.display()
    );
    Ok(())
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let graph = load_graph(&args.graph)?;
    let service = Arc::new(Service::new(Arc::new(graph), args.service.config()));
    serve_until_signal(service, SocketAddr::new(args.host, args.port), |addr| {
        println!("listening on http://{addr}");
    })?;
    // stdout may already be closed by whoever started us
    let _ = writeln!(std::io::stdout(), "stopped");
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    println!("strategy  victims  reached  mean_found  mean_recall  requests");
    for s in &report.summary.strategies {
        let recall = s.mean_recall.map_or("-".to_string(), |r| format!("{r:.3}"));
        println!(
            "{:<8}  {:>7}  {:>7}  {:>10.2}  {:>11}  {:>8}",
            s.strategy.name(),
            s.victims,
            s.victims_reached,
            s.mean_found,
            recall,
            s.total_requests
        );
    }
}

fn crawl(args: CrawlArgs) -> anyhow::Result<()> {
    let strategy = StrategyConfig {
        budget: args.budget,
        expand_mutuals: args.expand_mutuals,
        facepile_calls_per_page: args.facepile_calls,
        run_seed: args.seed,
    };
    let source = match &args.graph {
        Some(path) => GraphSource::File(path.clone()),
        // unused: remote crawls read the graph through the oracle
        None => GraphSource::Graph(Arc::new(ghostlist_core::graph::SocialGraph::new(0))),
    };
    let mut spec = ExperimentSpec::new(source, args.strategy.0.clone());
    spec.victims = args.victims.clone();
    spec.strategy = strategy;
    spec.n_accounts = args.accounts;
    spec.service = args.service.config();
    spec.jobs = args.jobs as usize;
    spec.out_dir = Some(args.out.clone());

    let experiment = match &args.url {
        None => run_experiment(&spec)?,
        Some(url) => {
            let truth = args.truth.as_ref().map(load_graph).transpose()?;
            let oracle = HttpOracle::new(url.as_str())?;
            run_with_oracle(&spec, &oracle, truth.as_ref())?
        }
    };
    print_summary(&experiment.report);
    println!(
        "{} runs, {} requests; report written to {}",
        experiment.runs.len(),
        experiment.report.summary.total_requests,
        args.out.display()
    );
    Ok(())
}

fn report(args: ReportArgs) -> anyhow::Result<()> {
    let runs = load_traces(&args.input)?;
    let report = build_report(&runs)?;
    let out = args.out.unwrap_or_else(|| args.input.clone());
    export_report(&report, &out)?;
    print_summary(&report);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Serve(a) => serve(a),
        Command::Crawl(a) => crawl(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}
