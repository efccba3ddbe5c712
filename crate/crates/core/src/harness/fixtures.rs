//! Hand-built worlds small enough to enumerate by hand.
//!
//! * `w1`: page-based recovery. u1 (public) is friends with u2 and u3 and
//!   likes p1 = {u1,u2,u4} and p2 = {u1,u3,u5,u6}. u6 hides its likes.
//! * `w2`: picture-based recovery. u1 is fully locked down but its cover
//!   i1 was liked by u2, u4 and commented by u3.
//! * `w3`: group-based recovery. u1 shows its groups: public g1 =
//!   {u1,u2,u7}, private g2 = {u1,u3}, hidden g3 = {u1,u4,u6}.

use std::collections::BTreeSet;

use crate::graph::{
    Group, GroupId, GroupVisibility, PageId, Picture, PictureId, PrivacySettings, SocialGraph,
    User, UserId,
};

fn with_users(seed: u64, n: u32) -> SocialGraph {
    let mut g = SocialGraph::new(seed);
    for i in 1..=n {
        g.users.insert(UserId(i), User::new(UserId(i)));
    }
    g
}

fn ids(raw: &[u32]) -> BTreeSet<UserId> {
    raw.iter().map(|&i| UserId(i)).collect()
}

pub fn w1() -> SocialGraph {
    let mut g = with_users(101, 6);
    g.befriend(UserId(1), UserId(2));
    g.befriend(UserId(1), UserId(3));
    g.befriend(UserId(2), UserId(4));
    g.befriend(UserId(3), UserId(5));
    for u in [1, 2, 4] {
        g.like(UserId(u), PageId(1));
    }
    for u in [1, 3, 5, 6] {
        g.like(UserId(u), PageId(2));
    }
    g.users.get_mut(&UserId(6)).unwrap().privacy.likes_visible = false;
    g
}

pub fn w2() -> SocialGraph {
    let mut g = with_users(102, 5);
    g.befriend(UserId(1), UserId(2));
    g.befriend(UserId(1), UserId(3));
    g.befriend(UserId(4), UserId(5));
    g.users.get_mut(&UserId(1)).unwrap().privacy = PrivacySettings::LOCKED;
    g.pictures.insert(
        PictureId(1),
        Picture {
            id: PictureId(1),
            owner: UserId(1),
            is_cover: true,
            likers: ids(&[2, 4]),
            commenters: ids(&[3]),
        },
    );
    g.pictures.insert(
        PictureId(2),
        Picture {
            id: PictureId(2),
            owner: UserId(1),
            is_cover: false,
            likers: ids(&[5]),
            commenters: BTreeSet::new(),
        },
    );
    g.users.get_mut(&UserId(1)).unwrap().pictures = vec![PictureId(1), PictureId(2)];
    g
}

pub fn w3() -> SocialGraph {
    let mut g = with_users(103, 7);
    g.befriend(UserId(1), UserId(2));
    g.befriend(UserId(1), UserId(3));
    let groups = [
        (1, GroupVisibility::Public),
        (2, GroupVisibility::Private),
        (3, GroupVisibility::Hidden),
    ];
    for (id, visibility) in groups {
        g.groups.insert(
            GroupId(id),
            Group {
                id: GroupId(id),
                members: BTreeSet::new(),
                visibility,
            },
        );
    }
    for u in [1, 2, 7] {
        g.join(UserId(u), GroupId(1));
    }
    for u in [1, 3] {
        g.join(UserId(u), GroupId(2));
    }
    for u in [1, 4, 6] {
        g.join(UserId(u), GroupId(3));
    }
    g.users.get_mut(&UserId(1)).unwrap().privacy = PrivacySettings {
        groups_visible: true,
        ..PrivacySettings::LOCKED
    };
    g.users.get_mut(&UserId(4)).unwrap().privacy.groups_visible = false;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        for g in [w1(), w2(), w3()] {
            assert!(g.validate().is_empty(), "{:?}", g.validate());
        }
    }
}
