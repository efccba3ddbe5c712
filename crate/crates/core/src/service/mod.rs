//! The only window a crawler has on the world.
//!
//! [`Oracle`] lists the seven public primitives. [`Service`] answers them
//! in-process from a [`SocialGraph`], enforcing privacy flags, FacePile
//! sampling and per-account accounting; [`http`] serves the same
//! service over HTTP and [`client::HttpOracle`] consumes it.
//!
//! Every call, including failing ones, appends exactly one entry to the
//! request ledger and advances the simulated clock by one latency step.

pub mod client;
pub mod http;
pub mod wire;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{Days, NaiveDate};
use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GroupId, GroupVisibility, PageId, PictureId, SocialGraph, UserId};
use crate::seed::{mix, rng_for};

pub const DEFAULT_SAMPLE_SIZE: usize = 30;
pub const DEFAULT_LATENCY_MS: u64 = 500;
pub const MEMBERS_PAGE_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub u32);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "acct{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Likes,
    Facepile,
    Mutual,
    Pictures,
    Reactions,
    Groups,
    Members,
}

impl Endpoint {
    pub fn name(self) -> &'static str {
        match self {
            Endpoint::Likes => "likes",
            Endpoint::Facepile => "facepile",
            Endpoint::Mutual => "mutual",
            Endpoint::Pictures => "pictures",
            Endpoint::Reactions => "reactions",
            Endpoint::Groups => "groups",
            Endpoint::Members => "members",
        }
    }
}

/// Ledger position and simulated completion time of one call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub seq: u64,
    pub time_ms: u64,
    pub account: AccountId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceError {
    #[error("not found")]
    NotFound,
    #[error("a user cannot be compared with itself")]
    SelfQuery,
    #[error("access denied")]
    AccessDenied,
    #[error("rate limited")]
    RateLimited,
}

/// Failure to talk to the oracle at all. No ledger entry is implied.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// A listing the owner may have hidden. Hidden is a normal answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Listing<T> {
    Visible(T),
    Hidden,
}

impl<T> Listing<T> {
    pub fn visible(self) -> Option<T> {
        match self {
            Listing::Visible(t) => Some(t),
            Listing::Hidden => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanSample {
    pub page: PageId,
    pub sampled_fans: BTreeSet<UserId>,
    pub total_fan_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutualResult {
    pub are_friends: bool,
    pub friends_since: Option<NaiveDate>,
    pub mutual_friends: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionSet {
    pub picture: PictureId,
    pub likers: BTreeSet<UserId>,
    pub commenters: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberPage {
    pub group: GroupId,
    pub page_index: u32,
    pub members: BTreeSet<UserId>,
    pub total: usize,
    pub has_more: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply<T> {
    pub stamp: Stamp,
    pub outcome: Result<T, ServiceError>,
}

pub type OracleResult<T> = Result<Reply<T>, TransportError>;

/// The public primitives a crawler may use. Implemented by the in-process
/// [`Service`] and by [`client::HttpOracle`].
pub trait Oracle: Send + Sync {
    fn liked_pages(&self, account: AccountId, user: UserId) -> OracleResult<Listing<BTreeSet<PageId>>>;

    fn facepile(&self, account: AccountId, page: PageId, call_seed: u64) -> OracleResult<FanSample>;

    fn mutual_content(&self, account: AccountId, a: UserId, b: UserId) -> OracleResult<MutualResult>;

    fn public_pictures(&self, account: AccountId, user: UserId) -> OracleResult<BTreeSet<PictureId>>;

    fn picture_reactions(&self, account: AccountId, picture: PictureId) -> OracleResult<ReactionSet>;

    fn groups(&self, account: AccountId, user: UserId) -> OracleResult<Listing<BTreeSet<GroupId>>>;

    fn group_members(&self, account: AccountId, group: GroupId, page_index: u32) -> OracleResult<MemberPage>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    /// Sustained requests per simulated second.
    pub per_second: f64,
    /// Bucket capacity.
    pub burst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub sample_size: usize,
    pub latency_ms: u64,
    pub rate_limit: Option<RateLimit>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            sample_size: DEFAULT_SAMPLE_SIZE,
            latency_ms: DEFAULT_LATENCY_MS,
            rate_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub account: AccountId,
    pub endpoint: Endpoint,
    pub time_ms: u64,
}

/// Snapshot of one account's accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: AccountId,
    pub requests_issued: u64,
    pub rate_limit: Option<RateLimit>,
}

#[derive(Debug)]
struct TokenBucket {
    limit: RateLimit,
    tokens: f64,
    last_ms: u64,
}

impl TokenBucket {
    fn new(limit: RateLimit, now_ms: u64) -> Self {
        TokenBucket {
            limit,
            tokens: limit.burst,
            last_ms: now_ms,
        }
    }

    fn try_take(&mut self, now_ms: u64) -> bool {
        let elapsed = now_ms.saturating_sub(self.last_ms) as f64 / 1000.0;
        self.last_ms = now_ms;
        self.tokens = (self.tokens + elapsed * self.limit.per_second).min(self.limit.burst);
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Default)]
struct AccountState {
    requests_issued: u64,
    bucket: Option<TokenBucket>,
}

#[derive(Debug, Default)]
struct LedgerState {
    clock_ms: u64,
    entries: Vec<LedgerEntry>,
    accounts: BTreeMap<AccountId, AccountState>,
}

/// In-process oracle over a read-only graph.
pub struct Service {
    graph: Arc<SocialGraph>,
    config: ServiceConfig,
    state: Mutex<LedgerState>,
}

const FIRST_FRIENDSHIP_DAY: NaiveDate = match NaiveDate::from_ymd_opt(2006, 9, 26) {
    Some(d) => d,
    None => panic!("valid date"),
};
const FRIENDSHIP_DAY_SPAN: u64 = 2650;

impl Service {
    pub fn new(graph: Arc<SocialGraph>, config: ServiceConfig) -> Self {
        Service {
            graph,
            config,
            state: Mutex::new(LedgerState::default()),
        }
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn ledger(&self) -> Vec<LedgerEntry> {
        self.state.lock().expect("ledger lock").entries.clone()
    }

    pub fn ledger_len(&self) -> usize {
        self.state.lock().expect("ledger lock").entries.len()
    }

    pub fn accounts(&self) -> Vec<Account> {
        let state = self.state.lock().expect("ledger lock");
        state
            .accounts
            .iter()
            .map(|(&id, a)| Account {
                account_id: id,
                requests_issued: a.requests_issued,
                rate_limit: a.bucket.as_ref().map(|b| b.limit),
            })
            .collect()
    }

    /// Appends a ledger entry and applies the account's rate limit.
    fn record(&self, account: AccountId, endpoint: Endpoint) -> (Stamp, bool) {
        let mut state = self.state.lock().expect("ledger lock");
        state.clock_ms += self.config.latency_ms;
        let now = state.clock_ms;
        let seq = state.entries.len() as u64 + 1;
        state.entries.push(LedgerEntry {
            seq,
            account,
            endpoint,
            time_ms: now,
        });
        let limit = self.config.rate_limit;
        let acct = state.accounts.entry(account).or_default();
        acct.requests_issued += 1;
        let allowed = match limit {
            None => true,
            Some(limit) => acct
                .bucket
                .get_or_insert_with(|| TokenBucket::new(limit, now))
                .try_take(now),
        };
        (
            Stamp {
                seq,
                time_ms: now,
                account,
            },
            allowed,
        )
    }

    fn answer<T>(
        &self,
        account: AccountId,
        endpoint: Endpoint,
        body: impl FnOnce(&SocialGraph) -> Result<T, ServiceError>,
    ) -> Reply<T> {
        let (stamp, allowed) = self.record(account, endpoint);
        let outcome = if allowed {
            body(&self.graph)
        } else {
            Err(ServiceError::RateLimited)
        };
        Reply { stamp, outcome }
    }

    /// Simulated date on which two friends connected; stable per pair.
    pub fn friends_since(&self, a: UserId, b: UserId) -> NaiveDate {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let offset = mix(&[self.graph.seed, lo.0 as u64, hi.0 as u64]) % FRIENDSHIP_DAY_SPAN;
        FIRST_FRIENDSHIP_DAY + Days::new(offset)
    }
}

impl Oracle for Service {
    fn liked_pages(&self, account: AccountId, user: UserId) -> OracleResult<Listing<BTreeSet<PageId>>> {
        Ok(self.answer(account, Endpoint::Likes, |g| {
            let u = g.user(user).ok_or(ServiceError::NotFound)?;
            Ok(if u.privacy.likes_visible {
                Listing::Visible(u.likes.clone())
            } else {
                Listing::Hidden
            })
        }))
    }

    fn facepile(&self, account: AccountId, page: PageId, call_seed: u64) -> OracleResult<FanSample> {
        let sample_size = self.config.sample_size;
        Ok(self.answer(account, Endpoint::Facepile, |g| {
            let p = g.pages.get(&page).ok_or(ServiceError::NotFound)?;
            let total = p.fans.len();
            let sampled_fans = if total <= sample_size {
                p.fans.clone()
            } else {
                let fans: Vec<UserId> = p.fans.iter().copied().collect();
                let mut rng = rng_for(&[g.seed, page.0 as u64, call_seed]);
                index::sample(&mut rng, total, sample_size)
                    .into_iter()
                    .map(|i| fans[i])
                    .collect()
            };
            Ok(FanSample {
                page,
                sampled_fans,
                total_fan_count: total,
            })
        }))
    }

    fn mutual_content(&self, account: AccountId, a: UserId, b: UserId) -> OracleResult<MutualResult> {
        Ok(self.answer(account, Endpoint::Mutual, |g| {
            let ua = g.user(a).ok_or(ServiceError::NotFound)?;
            let ub = g.user(b).ok_or(ServiceError::NotFound)?;
            if a == b {
                return Err(ServiceError::SelfQuery);
            }
            let are_friends = ua.friends.contains(&b);
            Ok(MutualResult {
                are_friends,
                friends_since: are_friends.then(|| self.friends_since(a, b)),
                mutual_friends: ua.friends.intersection(&ub.friends).copied().collect(),
            })
        }))
    }

    fn public_pictures(&self, account: AccountId, user: UserId) -> OracleResult<BTreeSet<PictureId>> {
        Ok(self.answer(account, Endpoint::Pictures, |g| {
            let u = g.user(user).ok_or(ServiceError::NotFound)?;
            Ok(u.pictures
                .iter()
                .copied()
                .filter(|id| u.privacy.pictures_visible || g.pictures.get(id).is_some_and(|p| p.is_cover))
                .collect())
        }))
    }

    fn picture_reactions(&self, account: AccountId, picture: PictureId) -> OracleResult<ReactionSet> {
        Ok(self.answer(account, Endpoint::Reactions, |g| {
            let p = g.pictures.get(&picture).ok_or(ServiceError::NotFound)?;
            Ok(ReactionSet {
                picture,
                likers: p.likers.clone(),
                commenters: p.commenters.clone(),
            })
        }))
    }

    fn groups(&self, account: AccountId, user: UserId) -> OracleResult<Listing<BTreeSet<GroupId>>> {
        Ok(self.answer(account, Endpoint::Groups, |g| {
            let u = g.user(user).ok_or(ServiceError::NotFound)?;
            if !u.privacy.groups_visible {
                return Ok(Listing::Hidden);
            }
            Ok(Listing::Visible(
                u.groups
                    .iter()
                    .copied()
                    .filter(|id| {
                        g.groups
                            .get(id)
                            .is_some_and(|gr| gr.visibility != GroupVisibility::Hidden)
                    })
                    .collect(),
            ))
        }))
    }

    fn group_members(&self, account: AccountId, group: GroupId, page_index: u32) -> OracleResult<MemberPage> {
        Ok(self.answer(account, Endpoint::Members, |g| {
            let gr = g.groups.get(&group).ok_or(ServiceError::NotFound)?;
            if gr.visibility != GroupVisibility::Public {
                return Err(ServiceError::AccessDenied);
            }
            let total = gr.members.len();
            let start = (page_index as usize).saturating_mul(MEMBERS_PAGE_SIZE);
            let members: BTreeSet<UserId> = gr
                .members
                .iter()
                .skip(start)
                .take(MEMBERS_PAGE_SIZE)
                .copied()
                .collect();
            Ok(MemberPage {
                group,
                page_index,
                has_more: start.saturating_add(MEMBERS_PAGE_SIZE) < total,
                members,
                total,
            })
        }))
    }
}

/// Hands out accounts round-robin: call k goes to account k mod n.
#[derive(Debug)]
pub struct AccountRotation {
    accounts: u32,
    next: AtomicU64,
}

impl AccountRotation {
    pub fn new(accounts: u32) -> Self {
        assert!(accounts >= 1, "at least one account");
        AccountRotation {
            accounts,
            next: AtomicU64::new(0),
        }
    }

    pub fn next_account(&self) -> AccountId {
        let k = self.next.fetch_add(1, Ordering::Relaxed);
        AccountId((k % self.accounts as u64) as u32)
    }

    pub fn len(&self) -> u32 {
        self.accounts
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
