//! Ground-truth references computed straight from the graph, bypassing
//! the service. Used to score runs and to check strategies.

use std::collections::BTreeSet;

use super::{StrategyError, StrategyKind};
use crate::graph::{GroupVisibility, SocialGraph, UserId};

pub fn true_friends(victim: UserId, graph: &SocialGraph) -> Result<BTreeSet<UserId>, StrategyError> {
    graph
        .user(victim)
        .map(|u| u.friends.clone())
        .ok_or(StrategyError::UnknownUser(victim))
}

/// Largest friend set a strategy can recover with an unlimited budget and
/// FacePile samples that cover whole pages.
pub fn reachable_friends_upper_bound(
    victim: UserId,
    graph: &SocialGraph,
    kind: StrategyKind,
) -> Result<BTreeSet<UserId>, StrategyError> {
    let user = graph.user(victim).ok_or(StrategyError::UnknownUser(victim))?;
    let mut exposed: BTreeSet<UserId> = BTreeSet::new();
    match kind {
        StrategyKind::S1 | StrategyKind::S2 | StrategyKind::S3 => {
            if user.privacy.likes_visible {
                for page in &user.likes {
                    exposed.extend(&graph.pages[page].fans);
                }
            }
        }
        StrategyKind::S4 => {
            for id in &user.pictures {
                let picture = &graph.pictures[id];
                if user.privacy.pictures_visible || picture.is_cover {
                    exposed.extend(picture.reactors());
                }
            }
        }
        StrategyKind::GroupAscending | StrategyKind::GroupDescending => {
            if user.privacy.groups_visible {
                for id in &user.groups {
                    let group = &graph.groups[id];
                    if group.visibility == GroupVisibility::Public {
                        exposed.extend(&group.members);
                    }
                }
            }
        }
    }
    Ok(user.friends.intersection(&exposed).copied().collect())
}
