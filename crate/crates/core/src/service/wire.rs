//! JSON bodies and headers of the HTTP transport.
//!
//! | outcome        | status | body                      |
//! |----------------|--------|---------------------------|
//! | ok             | 200    | endpoint specific         |
//! | `Hidden`       | 403    | `{"hidden":true}`         |
//! | `AccessDenied` | 403    | `{"denied":true}`         |
//! | `NotFound`     | 404    | `{"error":"not found"}`   |
//! | `SelfQuery`    | 400    | `{"error":"self query"}`  |
//! | `RateLimited`  | 429    | `{"rate_limited":true}`   |
//!
//! Every response to an oracle call carries the ledger stamp in the
//! `X-Request-Seq`, `X-Sim-Time-Ms` and `X-Account-Id` headers. Requests
//! without a usable `X-Account-Id` are rejected with 400 and no stamp.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::graph::{GroupId, PageId, PictureId, UserId};

pub const ACCOUNT_HEADER: &str = "x-account-id";
pub const SEQ_HEADER: &str = "x-request-seq";
pub const TIME_HEADER: &str = "x-sim-time-ms";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PagesBody {
    pub pages: BTreeSet<PageId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicturesBody {
    pub pictures: BTreeSet<PictureId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsBody {
    pub groups: BTreeSet<GroupId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacepileBody {
    pub fans: BTreeSet<UserId>,
    pub total: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutualBody {
    pub are_friends: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub since: Option<NaiveDate>,
    pub mutual_friends: BTreeSet<UserId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionsBody {
    pub likers: BTreeSet<UserId>,
    pub commenters: BTreeSet<UserId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembersBody {
    pub members: BTreeSet<UserId>,
    pub total: usize,
    pub has_more: bool,
}

/// Any non-200 body.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureBody {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub hidden: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub denied: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rate_limited: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
