//! Group enumeration: list the victim's groups, read the member lists of
//! the public ones in size order and check every member.
//!
//! The first member page of every listed group is fetched up front, which
//! is how the size of each group becomes known; private groups answer
//! that request with a denial and are skipped.

use std::collections::BTreeSet;

use super::session::{Recovery, Step};
use super::trace::EventKind;
use super::{StrategyError, Termination};
use crate::graph::{GroupId, UserId};
use crate::service::{Endpoint, Listing, ServiceError};

struct GroupBatch {
    group: GroupId,
    total: usize,
    has_more: bool,
    members: BTreeSet<UserId>,
}

pub(super) fn run(run: &mut Recovery<'_>, largest_first: bool) -> Step<Termination> {
    let victim = run.victim;
    let (stamp, listing) = run.expect(Endpoint::Groups, |o, a| o.groups(a, victim))?;
    run.record(
        stamp,
        EventKind::Groups {
            user: victim,
            groups: listing.clone().visible(),
        },
    );
    let Listing::Visible(groups) = listing else {
        return Ok(Termination::NothingAccessible);
    };

    let mut batches = Vec::new();
    for group in groups {
        let (stamp, outcome) =
            run.request(Endpoint::Members, |o, a| o.group_members(a, group, 0))?;
        match outcome {
            Ok(page) => {
                run.record(
                    stamp,
                    EventKind::Members {
                        group,
                        page: 0,
                        members: page.members.clone(),
                        total: page.total,
                        has_more: page.has_more,
                    },
                );
                batches.push(GroupBatch {
                    group,
                    total: page.total,
                    has_more: page.has_more,
                    members: page.members,
                });
            }
            Err(ServiceError::AccessDenied) => {
                run.refused(stamp, Endpoint::Members, ServiceError::AccessDenied);
            }
            Err(error) => {
                run.refused(stamp, Endpoint::Members, error);
                return Err(StrategyError::Service {
                    endpoint: Endpoint::Members,
                    error,
                }
                .into());
            }
        }
    }

    if largest_first {
        batches.sort_by(|x, y| y.total.cmp(&x.total).then(x.group.cmp(&y.group)));
    } else {
        batches.sort_by_key(|b| (b.total, b.group));
    }

    for mut batch in batches {
        let mut index = 1;
        while batch.has_more {
            let group = batch.group;
            let (stamp, page) =
                run.expect(Endpoint::Members, |o, a| o.group_members(a, group, index))?;
            run.record(
                stamp,
                EventKind::Members {
                    group,
                    page: index,
                    members: page.members.clone(),
                    total: page.total,
                    has_more: page.has_more,
                },
            );
            batch.has_more = page.has_more && !page.members.is_empty();
            batch.members.extend(page.members);
            index += 1;
        }
        run.verify_batch(&batch.members)?;
    }
    run.drain_expansion()?;
    Ok(Termination::Exhausted)
}
