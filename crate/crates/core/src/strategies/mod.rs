//! Friend-list recovery strategies.
//!
//! Each strategy gathers candidate ids from something the victim leaves
//! public (liked pages, pictures, groups) and confirms every candidate
//! with one mutual-content lookup. A friend is only ever reported after
//! the oracle said so, which keeps every strategy free of false
//! positives.

mod groups;
mod likes;
mod pictures;
mod session;
pub mod trace;
pub mod truth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::UserId;
use crate::service::{Endpoint, ServiceError, TransportError};

pub use session::Crawler;
pub use trace::{CrawlTrace, EventKind, TraceEvent};
pub use truth::{reachable_friends_upper_bound, true_friends};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Liked pages in random order.
    S1,
    /// Liked pages from the fewest fans to the most.
    S2,
    /// Liked pages from the most fans to the fewest.
    S3,
    /// Likers and commenters of public pictures and covers.
    S4,
    /// Public groups from smallest to largest.
    #[serde(rename = "GASC")]
    GroupAscending,
    /// Public groups from largest to smallest.
    #[serde(rename = "GDESC")]
    GroupDescending,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::S1,
        StrategyKind::S2,
        StrategyKind::S3,
        StrategyKind::S4,
        StrategyKind::GroupAscending,
        StrategyKind::GroupDescending,
    ];

    /// The four evaluated strategies.
    pub const EVALUATED: [StrategyKind; 4] = [
        StrategyKind::S1,
        StrategyKind::S2,
        StrategyKind::S3,
        StrategyKind::S4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::S1 => "S1",
            StrategyKind::S2 => "S2",
            StrategyKind::S3 => "S3",
            StrategyKind::S4 => "S4",
            StrategyKind::GroupAscending => "GASC",
            StrategyKind::GroupDescending => "GDESC",
        }
    }

    pub fn is_page_based(self) -> bool {
        matches!(self, StrategyKind::S1 | StrategyKind::S2 | StrategyKind::S3)
    }

    pub fn is_group_based(self) -> bool {
        matches!(self, StrategyKind::GroupAscending | StrategyKind::GroupDescending)
    }

    fn seed_tag(self) -> u64 {
        match self {
            StrategyKind::S1 => 1,
            StrategyKind::S2 => 2,
            StrategyKind::S3 => 3,
            StrategyKind::S4 => 4,
            StrategyKind::GroupAscending => 5,
            StrategyKind::GroupDescending => 6,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(StrategyKind::S1),
            "s2" => Ok(StrategyKind::S2),
            "s3" => Ok(StrategyKind::S3),
            "s4" => Ok(StrategyKind::S4),
            "gasc" => Ok(StrategyKind::GroupAscending),
            "gdesc" => Ok(StrategyKind::GroupDescending),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    /// Maximum oracle requests per run; `None` is unlimited.
    pub budget: Option<u64>,
    /// Queue the mutual friends of every confirmed friend as candidates.
    pub expand_mutuals: bool,
    pub facepile_calls_per_page: u32,
    pub run_seed: u64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            budget: None,
            expand_mutuals: false,
            facepile_calls_per_page: 1,
            run_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every candidate was checked.
    Exhausted,
    /// The run wanted another request but the budget was spent.
    BudgetReached,
    /// The victim hides the listing the strategy starts from.
    NothingAccessible,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("{endpoint:?} request failed: {error}")]
    Service {
        endpoint: Endpoint,
        error: ServiceError,
    },
    #[error("unknown user {0}")]
    UnknownUser(UserId),
}

/// Runs one strategy against one victim.
pub fn run_strategy(
    kind: StrategyKind,
    victim: UserId,
    crawler: &Crawler<'_>,
    cfg: &StrategyConfig,
) -> Result<CrawlTrace, StrategyError> {
    let mut run = session::Recovery::new(crawler, victim, kind, cfg);
    let outcome = match kind {
        StrategyKind::S1 => likes::run(&mut run, likes::PageOrder::Random),
        StrategyKind::S2 => likes::run(&mut run, likes::PageOrder::Ascending),
        StrategyKind::S3 => likes::run(&mut run, likes::PageOrder::Descending),
        StrategyKind::S4 => pictures::run(&mut run),
        StrategyKind::GroupAscending => groups::run(&mut run, false),
        StrategyKind::GroupDescending => groups::run(&mut run, true),
    };
    run.finish(outcome)
}

pub fn s1_likes_random(v: UserId, crawler: &Crawler<'_>, cfg: &StrategyConfig) -> Result<CrawlTrace, StrategyError> {
    run_strategy(StrategyKind::S1, v, crawler, cfg)
}

pub fn s2_likes_ascending(v: UserId, crawler: &Crawler<'_>, cfg: &StrategyConfig) -> Result<CrawlTrace, StrategyError> {
    run_strategy(StrategyKind::S2, v, crawler, cfg)
}

pub fn s3_likes_descending(v: UserId, crawler: &Crawler<'_>, cfg: &StrategyConfig) -> Result<CrawlTrace, StrategyError> {
    run_strategy(StrategyKind::S3, v, crawler, cfg)
}

pub fn s4_pictures(v: UserId, crawler: &Crawler<'_>, cfg: &StrategyConfig) -> Result<CrawlTrace, StrategyError> {
    run_strategy(StrategyKind::S4, v, crawler, cfg)
}

pub fn group_ascending(v: UserId, crawler: &Crawler<'_>, cfg: &StrategyConfig) -> Result<CrawlTrace, StrategyError> {
    run_strategy(StrategyKind::GroupAscending, v, crawler, cfg)
}

pub fn group_descending(v: UserId, crawler: &Crawler<'_>, cfg: &StrategyConfig) -> Result<CrawlTrace, StrategyError> {
    run_strategy(StrategyKind::GroupDescending, v, crawler, cfg)
}
