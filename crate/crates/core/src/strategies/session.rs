use std::collections::{BTreeSet, VecDeque};

use super::trace::{CrawlTrace, EventKind, TraceEvent};
use super::{StrategyConfig, StrategyError, StrategyKind, Termination};
use crate::graph::UserId;
use crate::service::{
    AccountId, AccountRotation, Endpoint, Oracle, OracleResult, ServiceError, Stamp,
};

/// An oracle plus the accounts requests are spread over.
#[derive(Clone, Copy)]
pub struct Crawler<'a> {
    pub oracle: &'a dyn Oracle,
    pub accounts: &'a AccountRotation,
}

impl<'a> Crawler<'a> {
    pub fn new(oracle: &'a dyn Oracle, accounts: &'a AccountRotation) -> Self {
        Crawler { oracle, accounts }
    }
}

/// Why a strategy body stopped early.
pub(super) enum Halt {
    Budget,
    Failed(StrategyError),
}

impl From<StrategyError> for Halt {
    fn from(e: StrategyError) -> Self {
        Halt::Failed(e)
    }
}

pub(super) type Step<T> = Result<T, Halt>;

/// State of one strategy run: request accounting, the trace being built
/// and the verification bookkeeping shared by all strategies.
pub(super) struct Recovery<'a> {
    crawler: Crawler<'a>,
    pub victim: UserId,
    pub kind: StrategyKind,
    pub cfg: &'a StrategyConfig,
    issued: u64,
    events: Vec<TraceEvent>,
    checked: BTreeSet<UserId>,
    found: BTreeSet<UserId>,
    expansion: VecDeque<UserId>,
    queued: BTreeSet<UserId>,
}

impl<'a> Recovery<'a> {
    pub fn new(
        crawler: &Crawler<'a>,
        victim: UserId,
        kind: StrategyKind,
        cfg: &'a StrategyConfig,
    ) -> Self {
        Recovery {
            crawler: *crawler,
            victim,
            kind,
            cfg,
            issued: 0,
            events: Vec::new(),
            checked: BTreeSet::new(),
            found: BTreeSet::new(),
            expansion: VecDeque::new(),
            queued: BTreeSet::new(),
        }
    }

    pub fn seed_parts(&self) -> [u64; 3] {
        [self.cfg.run_seed, self.kind.seed_tag(), self.victim.0 as u64]
    }

    fn log(&mut self, stamp: Stamp, kind: EventKind) {
        self.events.push(TraceEvent {
            no: stamp.seq,
            t: stamp.time_ms as f64 / 1000.0,
            kind,
        });
    }

    /// Issues one request, retrying while the account is rate limited.
    /// Every attempt counts against the budget.
    pub fn request<T>(
        &mut self,
        endpoint: Endpoint,
        call: impl Fn(&dyn Oracle, AccountId) -> OracleResult<T>,
    ) -> Step<(Stamp, Result<T, ServiceError>)> {
        loop {
            if self.cfg.budget.is_some_and(|b| self.issued >= b) {
                return Err(Halt::Budget);
            }
            let account = self.crawler.accounts.next_account();
            let reply = call(self.crawler.oracle, account).map_err(StrategyError::from)?;
            self.issued += 1;
            match reply.outcome {
                Err(ServiceError::RateLimited) => {
                    self.refused(reply.stamp, endpoint, ServiceError::RateLimited);
                }
                outcome => return Ok((reply.stamp, outcome)),
            }
        }
    }

    /// Like [`Self::request`], but any service error aborts the run.
    pub fn expect<T>(
        &mut self,
        endpoint: Endpoint,
        call: impl Fn(&dyn Oracle, AccountId) -> OracleResult<T>,
    ) -> Step<(Stamp, T)> {
        let (stamp, outcome) = self.request(endpoint, call)?;
        match outcome {
            Ok(t) => Ok((stamp, t)),
            Err(error) => {
                self.refused(stamp, endpoint, error);
                Err(Halt::Failed(StrategyError::Service { endpoint, error }))
            }
        }
    }

    pub fn record(&mut self, stamp: Stamp, kind: EventKind) {
        self.log(stamp, kind);
    }

    pub fn refused(&mut self, stamp: Stamp, endpoint: Endpoint, error: ServiceError) {
        self.log(stamp, EventKind::Refused { endpoint, error });
    }

    /// Checks one batch of candidates in ascending id order, skipping the
    /// victim and anyone already checked in this run.
    pub fn verify_batch(&mut self, batch: &BTreeSet<UserId>) -> Step<()> {
        for &candidate in batch {
            self.verify(candidate)?;
        }
        Ok(())
    }

    fn verify(&mut self, candidate: UserId) -> Step<()> {
        if candidate == self.victim || self.checked.contains(&candidate) {
            return Ok(());
        }
        let victim = self.victim;
        let (stamp, result) =
            self.expect(Endpoint::Mutual, |o, a| o.mutual_content(a, victim, candidate))?;
        self.checked.insert(candidate);
        self.log(
            stamp,
            EventKind::Mutual {
                candidate,
                are_friends: result.are_friends,
            },
        );
        if result.are_friends {
            self.found.insert(candidate);
            self.log(stamp, EventKind::Found { user: candidate });
            if self.cfg.expand_mutuals {
                for m in result.mutual_friends {
                    if m != self.victim && !self.checked.contains(&m) && self.queued.insert(m) {
                        self.expansion.push_back(m);
                    }
                }
            }
        }
        Ok(())
    }

    /// Drains candidates queued from mutual-friend lists (only populated
    /// with `expand_mutuals`).
    pub fn drain_expansion(&mut self) -> Step<()> {
        while let Some(c) = self.expansion.pop_front() {
            self.verify(c)?;
        }
        Ok(())
    }

    pub fn finish(self, outcome: Step<Termination>) -> Result<CrawlTrace, StrategyError> {
        let terminated = match outcome {
            Ok(t) => t,
            Err(Halt::Budget) => Termination::BudgetReached,
            Err(Halt::Failed(e)) => return Err(e),
        };
        Ok(CrawlTrace {
            victim: self.victim,
            strategy: self.kind,
            events: self.events,
            friends_found: self.found,
            terminated,
        })
    }
}
