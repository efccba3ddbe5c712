use std::collections::BTreeMap;

use super::fixtures::{w1, w3};
use super::*;
use crate::strategies::{EventKind, Termination, TraceEvent};

/// A trace of `requests` mutual checks, confirming a friend at each
/// request number in `hits` (1-based).
fn synthetic(strategy: StrategyKind, requests: u64, hits: &[u64]) -> CrawlTrace {
    let mut events = Vec::new();
    let mut found = BTreeSet::new();
    for no in 1..=requests {
        let candidate = UserId(no as u32 + 100);
        let hit = hits.contains(&no);
        events.push(TraceEvent {
            no,
            t: no as f64 * 0.5,
            kind: EventKind::Mutual {
                candidate,
                are_friends: hit,
            },
        });
        if hit {
            found.insert(candidate);
            events.push(TraceEvent {
                no,
                t: no as f64 * 0.5,
                kind: EventKind::Found { user: candidate },
            });
        }
    }
    CrawlTrace {
        victim: UserId(1),
        strategy,
        events,
        friends_found: found,
        terminated: Termination::Exhausted,
    }
}

#[test]
fn curve_steps_at_hits() {
    let t = synthetic(StrategyKind::S1, 9, &[4, 7]);
    let c = recall_curve(&[&t], 500).unwrap();
    let means: Vec<f64> = c.points.iter().map(|p| p.mean_found).collect();
    assert_eq!(means, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
    let requests: Vec<usize> = c.points.iter().map(|p| p.requests).collect();
    assert_eq!(requests, (0..=9).collect::<Vec<_>>());
}

#[test]
fn curve_means_and_carries_forward() {
    let a = synthetic(StrategyKind::S2, 8, &[3, 8]);
    let b = synthetic(StrategyKind::S2, 5, &[]);
    let c = recall_curve(&[&a, &b], 500).unwrap();
    assert_eq!(c.at(8), 1.0);
    assert_eq!(c.points[8].time, 4.0);
    assert_eq!(c.points.len(), 9);

    let short = synthetic(StrategyKind::S2, 2, &[1]);
    let c = recall_curve(&[&short, &b], 500).unwrap();
    assert_eq!(c.at(5), 0.5);
}

#[test]
fn curve_rejects_bad_input() {
    assert!(recall_curve(&[], 500).is_err());
    let a = synthetic(StrategyKind::S1, 1, &[]);
    let b = synthetic(StrategyKind::S2, 1, &[]);
    assert!(recall_curve(&[&a, &b], 500).is_err());
}

#[test]
fn per_victim_normalization() {
    let s = StrategyKind::EVALUATED;
    let mut counts = BTreeMap::new();
    counts.insert(UserId(1), vec![10, 10, 12, 40]);
    counts.insert(UserId(2), vec![0, 0, 0, 0]);
    counts.insert(UserId(3), vec![5, 0, 5, 1]);
    let rows = per_victim_best(&s, &counts);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].percent, vec![25.0, 25.0, 30.0, 100.0]);
    assert_eq!(rows[0].best, vec![StrategyKind::S4]);
    assert_eq!(rows[1].victim, UserId(3));
    assert_eq!(rows[1].percent, vec![100.0, 0.0, 100.0, 20.0]);
    assert_eq!(rows[1].best, vec![StrategyKind::S1, StrategyKind::S3]);

    counts.clear();
    counts.insert(UserId(4), vec![3, 2, 1]);
    let rows = per_victim_best(&s[..3], &counts);
    assert_eq!(rows[0].percent, vec![100.0, 66.7, 33.3]);
}

fn w1_spec(strategies: Vec<StrategyKind>) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(GraphSource::Graph(Arc::new(w1())), strategies);
    spec.victims = VictimSelection::List(vec![UserId(1)]);
    spec
}

#[test]
fn w1_single_victim_report() {
    let e = run_experiment(&w1_spec(vec![StrategyKind::S1])).unwrap();
    let s = e.report.summary.strategy(StrategyKind::S1).unwrap();
    assert_eq!(s.mean_found, 2.0);
    assert_eq!(s.mean_recall, Some(1.0));
    assert_eq!(s.victims_reached, 1);
    assert_eq!(e.ledger_len, Some(8));
    assert_eq!(e.report.summary.total_requests, 8);
    let c = e.report.curve(StrategyKind::S1).unwrap();
    assert!(c.points.windows(2).all(|w| w[0].mean_found <= w[1].mean_found));
    assert_eq!(c.final_mean(), 2.0);
}

#[test]
fn round_robin_spreads_ninety_calls() {
    // W3 all users, both group strategies: count the calls, then check
    // the per-account split.
    let mut spec = ExperimentSpec::new(
        GraphSource::Graph(Arc::new(w3())),
        vec![StrategyKind::GroupAscending, StrategyKind::GroupDescending],
    );
    spec.victims = VictimSelection::All;
    let e = run_experiment(&spec).unwrap();
    let total = e.ledger_len.unwrap();
    assert_eq!(total, e.report.summary.total_requests);
    let issued: Vec<u64> = e.accounts.iter().map(|a| a.requests_issued).collect();
    assert_eq!(issued.iter().sum::<u64>() as usize, total);
    let spread = issued.iter().max().unwrap() - issued.iter().min().unwrap();
    assert!(spread <= 1, "{issued:?}");

    let service = Service::new(Arc::new(w1()), ServiceConfig::default());
    let rotation = AccountRotation::new(9);
    for _ in 0..90 {
        service.liked_pages(rotation.next_account(), UserId(1)).unwrap();
    }
    assert!(service.accounts().iter().all(|a| a.requests_issued == 10));
    assert_eq!(service.accounts().len(), 9);
}

#[test]
fn victim_selection() {
    let g = w1();
    assert_eq!(VictimSelection::All.resolve(&g, 0).unwrap().len(), 6);
    // every fixture user shows its friend list
    assert!(VictimSelection::AllPrivate.resolve(&g, 0).is_err());
    let drawn = VictimSelection::Random(3).resolve(&g, 9).unwrap();
    assert_eq!(drawn.len(), 3);
    assert!(drawn.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(drawn, VictimSelection::Random(3).resolve(&g, 9).unwrap());
    assert!(VictimSelection::Random(7).resolve(&g, 9).is_err());
    assert!(VictimSelection::List(vec![UserId(40)]).resolve(&g, 0).is_err());
    assert!(VictimSelection::List(vec![]).resolve(&g, 0).is_err());

    assert_eq!("all-private".parse(), Ok(VictimSelection::AllPrivate));
    assert_eq!("random:4".parse(), Ok(VictimSelection::Random(4)));
    assert_eq!(
        "3,u5".parse(),
        Ok(VictimSelection::List(vec![UserId(3), UserId(5)]))
    );
    assert!("random:x".parse::<VictimSelection>().is_err());
}

#[test]
fn empty_strategy_list_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = w1_spec(vec![]);
    spec.out_dir = Some(dir.path().join("out"));
    assert!(run_experiment(&spec).is_err());
    assert!(!dir.path().join("out").exists());

    let e = run_experiment(&w1_spec(vec![StrategyKind::S2])).unwrap();
    let mut empty = e.report.clone();
    empty.strategies.clear();
    assert!(export_report(&empty, dir.path()).is_err());
    assert!(!dir.path().join(CURVES_FILE).exists());
}

#[test]
fn report_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = w1_spec(StrategyKind::EVALUATED.to_vec());
    spec.victims = VictimSelection::All;
    spec.out_dir = Some(dir.path().to_path_buf());
    let e = run_experiment(&spec).unwrap();

    let text = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let back: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, e.report.summary);

    let curves = std::fs::read_to_string(dir.path().join(CURVES_FILE)).unwrap();
    assert!(curves.starts_with("strategy,requests,time,mean_found\n"));
    let pervictim = std::fs::read_to_string(dir.path().join(PERVICTIM_FILE)).unwrap();
    assert!(pervictim.starts_with("victim,found_S1,found_S2,found_S3,found_S4,best,pct_S1"));

    let runs = load_traces(dir.path()).unwrap();
    assert_eq!(runs.len(), 6 * 4);
    let again = build_report(&runs).unwrap();
    assert_eq!(again, e.report);
    assert_eq!(curves_csv(&again), curves);
}

#[test]
fn report_ignores_run_order() {
    let mut spec = w1_spec(StrategyKind::EVALUATED.to_vec());
    spec.victims = VictimSelection::All;
    let e = run_experiment(&spec).unwrap();
    let mut reversed = e.runs.clone();
    reversed.reverse();
    assert_eq!(build_report(&reversed).unwrap(), e.report);
    let mut dup = e.runs.clone();
    dup.push(e.runs[0].clone());
    assert!(build_report(&dup).is_err());
}

#[test]
fn parallel_jobs_give_the_same_report() {
    let mut spec = ExperimentSpec::new(
        GraphSource::Generated {
            params: crate::generate::GenParams {
                n_users: 40,
                ..Default::default()
            },
            seed: 3,
        },
        StrategyKind::ALL.to_vec(),
    );
    let serial = run_experiment(&spec).unwrap();
    spec.jobs = 4;
    let parallel = run_experiment(&spec).unwrap();
    assert_eq!(serial.report, parallel.report);
    assert_eq!(serial.ledger_len, parallel.ledger_len);
    assert_eq!(
        parallel.ledger_len.unwrap(),
        parallel.runs.iter().map(|r| r.trace.requests()).sum::<usize>()
    );
}

#[test]
fn remote_style_runs_need_a_victim_list() {
    let service = Service::new(Arc::new(w1()), ServiceConfig::default());
    let mut spec = w1_spec(vec![StrategyKind::S3]);
    let e = run_with_oracle(&spec, &service, None).unwrap();
    assert_eq!(e.report.summary.strategies[0].mean_recall, None);
    assert_eq!(e.report.summary.strategies[0].mean_found, 2.0);
    spec.victims = VictimSelection::All;
    assert!(run_with_oracle(&spec, &service, None).is_err());
}
