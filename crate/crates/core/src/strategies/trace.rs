//! Crawl traces and their JSON-lines form.
//!
//! A trace file starts with a `run` line carrying the [`RunHeader`], then
//! one line per event, and ends with an `end` line. Every line has the
//! shape `{"no":..,"t":..,"kind":..,"data":..}` where `no` is the ledger
//! sequence number of the request and `t` its simulated completion time
//! in seconds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{StrategyKind, Termination};
use crate::graph::{GroupId, PageId, PictureId, UserId};
use crate::service::{Endpoint, ServiceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum EventKind {
    Likes {
        user: UserId,
        /// `None` when the owner hides them.
        pages: Option<BTreeSet<PageId>>,
    },
    Facepile {
        page: PageId,
        fans: BTreeSet<UserId>,
        total: usize,
    },
    Pictures {
        user: UserId,
        pictures: BTreeSet<PictureId>,
    },
    Reactions {
        picture: PictureId,
        likers: BTreeSet<UserId>,
        commenters: BTreeSet<UserId>,
    },
    Groups {
        user: UserId,
        groups: Option<BTreeSet<GroupId>>,
    },
    Members {
        group: GroupId,
        page: u32,
        members: BTreeSet<UserId>,
        total: usize,
        has_more: bool,
    },
    Mutual {
        candidate: UserId,
        are_friends: bool,
    },
    /// A request the service answered with an error (it still counts).
    Refused {
        endpoint: Endpoint,
        error: ServiceError,
    },
    /// Not a request: the preceding mutual check confirmed a friend.
    Found { user: UserId },
}

impl EventKind {
    pub fn is_request(&self) -> bool {
        !matches!(self, EventKind::Found { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub no: u64,
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlTrace {
    pub victim: UserId,
    pub strategy: StrategyKind,
    pub events: Vec<TraceEvent>,
    pub friends_found: BTreeSet<UserId>,
    pub terminated: Termination,
}

impl CrawlTrace {
    pub fn requests(&self) -> usize {
        self.events.iter().filter(|e| e.kind.is_request()).count()
    }

    /// Ledger sequence numbers of this run's requests, in order.
    pub fn request_numbers(&self) -> Vec<u64> {
        self.events
            .iter()
            .filter(|e| e.kind.is_request())
            .map(|e| e.no)
            .collect()
    }

    /// Friends found after each of the run's requests; entry `r - 1` is the
    /// count after the r-th request.
    pub fn progress(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut found = 0;
        for e in &self.events {
            if e.kind.is_request() {
                out.push(found);
            } else if let Some(last) = out.last_mut() {
                found += 1;
                *last = found;
            }
        }
        out
    }

    pub fn mutual_checks(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Mutual { .. }))
            .count()
    }
}

/// Metadata written on the first line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunHeader {
    pub victim: UserId,
    pub strategy: StrategyKind,
    pub run_seed: u64,
    pub budget: Option<u64>,
    /// Simulated seconds per request, used for time curves.
    pub latency_ms: u64,
    /// Size of the ground-truth friend list when it is known.
    pub true_friends: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFooter {
    pub terminated: Termination,
    pub requests: usize,
    pub friends_found: BTreeSet<UserId>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
enum FrameKind {
    Run(RunHeader),
    End(RunFooter),
}

#[derive(Serialize, Deserialize)]
struct Frame {
    no: u64,
    t: f64,
    #[serde(flatten)]
    kind: FrameKind,
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

pub fn to_jsonl(header: &RunHeader, trace: &CrawlTrace) -> String {
    let mut out = String::new();
    let mut push = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(
        serde_json::to_string(&Frame {
            no: 0,
            t: 0.0,
            kind: FrameKind::Run(header.clone()),
        })
        .expect("serializable"),
    );
    for e in &trace.events {
        push(serde_json::to_string(e).expect("serializable"));
    }
    let (no, t) = trace.events.last().map_or((0, 0.0), |e| (e.no, e.t));
    push(
        serde_json::to_string(&Frame {
            no,
            t,
            kind: FrameKind::End(RunFooter {
                terminated: trace.terminated,
                requests: trace.requests(),
                friends_found: trace.friends_found.clone(),
            }),
        })
        .expect("serializable"),
    );
    out
}

pub fn from_jsonl(text: &str) -> Result<(RunHeader, CrawlTrace), TraceParseError> {
    let err = |line: usize, message: String| TraceParseError { line, message };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let Some(((first_no, first), rest)) = lines.split_first() else {
        return Err(err(1, "empty trace".into()));
    };
    let Some(((last_no, last), body)) = rest.split_last() else {
        return Err(err(*first_no, "trace without end line".into()));
    };
    let header = match serde_json::from_str::<Frame>(first) {
        Ok(Frame {
            kind: FrameKind::Run(h),
            ..
        }) => h,
        Ok(_) => return Err(err(*first_no, "first line is not a run header".into())),
        Err(e) => return Err(err(*first_no, e.to_string())),
    };
    let footer = match serde_json::from_str::<Frame>(last) {
        Ok(Frame {
            kind: FrameKind::End(f),
            ..
        }) => f,
        Ok(_) => return Err(err(*last_no, "last line is not an end marker".into())),
        Err(e) => return Err(err(*last_no, e.to_string())),
    };
    let mut events = Vec::with_capacity(body.len());
    for (no, line) in body {
        let e: TraceEvent = serde_json::from_str(line).map_err(|e| err(*no, e.to_string()))?;
        events.push(e);
    }
    let trace = CrawlTrace {
        victim: header.victim,
        strategy: header.strategy,
        events,
        friends_found: footer.friends_found,
        terminated: footer.terminated,
    };
    let found: BTreeSet<UserId> = trace
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Found { user } => Some(user),
            _ => None,
        })
        .collect();
    if found != trace.friends_found || footer.requests != trace.requests() {
        return Err(err(*last_no, "end line disagrees with the events".into()));
    }
    Ok((header, trace))
}
