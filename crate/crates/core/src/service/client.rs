//! Blocking HTTP client implementing [`Oracle`].

use std::collections::BTreeSet;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;

use super::wire::*;
use super::{
    AccountId, FanSample, Listing, MemberPage, MutualResult, Oracle, OracleResult, ReactionSet,
    Reply, ServiceError, Stamp, TransportError,
};
use crate::graph::{GroupId, PageId, PictureId, UserId};

pub struct HttpOracle {
    base: String,
    client: Client,
}

/// What a 403 meant.
enum Forbidden {
    Hidden,
    Denied,
}

impl HttpOracle {
    pub fn new(base_url: impl Into<String>) -> Result<Self, TransportError> {
        let base = base_url.into().trim_end_matches('/').to_string();
        let client = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        Ok(HttpOracle { base, client })
    }

    fn header_u64(resp: &reqwest::blocking::Response, name: &str) -> Result<u64, TransportError> {
        resp.headers()
            .get(name)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| {
                TransportError::Protocol(format!("status {} without {name} header", resp.status()))
            })
    }

    /// Issues the GET and decodes status, stamp and body. A 403 is handed
    /// back as `Err(Forbidden)` so each endpoint can interpret it.
    fn get<B: DeserializeOwned>(
        &self,
        account: AccountId,
        path: &str,
    ) -> Result<(Stamp, Result<Result<B, Forbidden>, ServiceError>), TransportError> {
        let resp = self
            .client
            .get(format!("{}{}", self.base, path))
            .header(ACCOUNT_HEADER, account.0.to_string())
            .send()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        let status = resp.status();
        let stamp = Stamp {
            seq: Self::header_u64(&resp, SEQ_HEADER)?,
            time_ms: Self::header_u64(&resp, TIME_HEADER)?,
            account: AccountId(Self::header_u64(&resp, ACCOUNT_HEADER)? as u32),
        };
        let text = resp
            .text()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        let parse_err = |e: serde_json::Error| TransportError::Protocol(format!("{path}: {e}"));
        if status == StatusCode::OK {
            let body: B = serde_json::from_str(&text).map_err(parse_err)?;
            return Ok((stamp, Ok(Ok(body))));
        }
        let fail: FailureBody = serde_json::from_str(&text).map_err(parse_err)?;
        let outcome = match status {
            StatusCode::FORBIDDEN if fail.hidden => Ok(Err(Forbidden::Hidden)),
            StatusCode::FORBIDDEN if fail.denied => Ok(Err(Forbidden::Denied)),
            StatusCode::NOT_FOUND => Err(ServiceError::NotFound),
            StatusCode::BAD_REQUEST => Err(ServiceError::SelfQuery),
            StatusCode::TOO_MANY_REQUESTS => Err(ServiceError::RateLimited),
            other => {
                return Err(TransportError::Protocol(format!("{path}: unexpected status {other}")))
            }
        };
        Ok((stamp, outcome))
    }

    /// For endpoints where 403 means the owner hid the listing.
    fn listing<B: DeserializeOwned, T>(
        &self,
        account: AccountId,
        path: &str,
        f: impl FnOnce(B) -> T,
    ) -> OracleResult<Listing<T>> {
        let (stamp, outcome) = self.get::<B>(account, path)?;
        let outcome = match outcome {
            Ok(Ok(b)) => Ok(Listing::Visible(f(b))),
            Ok(Err(Forbidden::Hidden)) => Ok(Listing::Hidden),
            Ok(Err(Forbidden::Denied)) => Err(ServiceError::AccessDenied),
            Err(e) => Err(e),
        };
        Ok(Reply { stamp, outcome })
    }

    /// For endpoints where 403 means access denied.
    fn plain<B: DeserializeOwned, T>(
        &self,
        account: AccountId,
        path: &str,
        f: impl FnOnce(B) -> T,
    ) -> OracleResult<T> {
        let (stamp, outcome) = self.get::<B>(account, path)?;
        let outcome = match outcome {
            Ok(Ok(b)) => Ok(f(b)),
            Ok(Err(Forbidden::Denied)) => Err(ServiceError::AccessDenied),
            Ok(Err(Forbidden::Hidden)) => {
                return Err(TransportError::Protocol(format!("{path}: unexpected hidden listing")))
            }
            Err(e) => Err(e),
        };
        Ok(Reply { stamp, outcome })
    }
}

impl Oracle for HttpOracle {
    fn liked_pages(&self, account: AccountId, user: UserId) -> OracleResult<Listing<BTreeSet<PageId>>> {
        self.listing(account, &format!("/user/{}/likes", user.0), |b: PagesBody| b.pages)
    }

    fn facepile(&self, account: AccountId, page: PageId, call_seed: u64) -> OracleResult<FanSample> {
        self.plain(
            account,
            &format!("/page/{}/facepile?seed={call_seed}", page.0),
            |b: FacepileBody| FanSample {
                page,
                sampled_fans: b.fans,
                total_fan_count: b.total,
            },
        )
    }

    fn mutual_content(&self, account: AccountId, a: UserId, b: UserId) -> OracleResult<MutualResult> {
        self.plain(account, &format!("/mutual/{}/{}", a.0, b.0), |m: MutualBody| MutualResult {
            are_friends: m.are_friends,
            friends_since: m.since,
            mutual_friends: m.mutual_friends,
        })
    }

    fn public_pictures(&self, account: AccountId, user: UserId) -> OracleResult<BTreeSet<PictureId>> {
        self.plain(account, &format!("/user/{}/pictures", user.0), |b: PicturesBody| b.pictures)
    }

    fn picture_reactions(&self, account: AccountId, picture: PictureId) -> OracleResult<ReactionSet> {
        self.plain(
            account,
            &format!("/picture/{}/reactions", picture.0),
            |b: ReactionsBody| ReactionSet {
                picture,
                likers: b.likers,
                commenters: b.commenters,
            },
        )
    }

    fn groups(&self, account: AccountId, user: UserId) -> OracleResult<Listing<BTreeSet<GroupId>>> {
        self.listing(account, &format!("/user/{}/groups", user.0), |b: GroupsBody| b.groups)
    }

    fn group_members(&self, account: AccountId, group: GroupId, page_index: u32) -> OracleResult<MemberPage> {
        self.plain(
            account,
            &format!("/group/{}/members?page={page_index}", group.0),
            |b: MembersBody| MemberPage {
                group,
                page_index,
                members: b.members,
                total: b.total,
                has_more: b.has_more,
            },
        )
    }
}
