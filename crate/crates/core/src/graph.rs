//! Ground-truth social world: users, liked pages, groups and pictures.
//!
//! A [`SocialGraph`] is built once (by the generator, a fixture or a file
//! load) and is read-only afterwards. Cross references are stored on both
//! sides so that every lookup the service performs is a map access; the
//! duplication is checked by [`SocialGraph::validate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Identifier of a user profile.
    UserId,
    "u"
);
id_type!(
    /// Identifier of a (always public) page.
    PageId,
    "p"
);
id_type!(GroupId, "g");
id_type!(PictureId, "i");

/// Per-user visibility flags. All-true is a public profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySettings {
    pub friends_visible: bool,
    pub likes_visible: bool,
    pub pictures_visible: bool,
    pub groups_visible: bool,
}

impl PrivacySettings {
    pub const PUBLIC: PrivacySettings = PrivacySettings {
        friends_visible: true,
        likes_visible: true,
        pictures_visible: true,
        groups_visible: true,
    };

    pub const LOCKED: PrivacySettings = PrivacySettings {
        friends_visible: false,
        likes_visible: false,
        pictures_visible: false,
        groups_visible: false,
    };

    pub fn is_public(&self) -> bool {
        *self == Self::PUBLIC
    }
}

impl Default for PrivacySettings {
    fn default() -> Self {
        Self::PUBLIC
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct User {
    pub id: UserId,
    pub friends: BTreeSet<UserId>,
    pub likes: BTreeSet<PageId>,
    pub groups: BTreeSet<GroupId>,
    /// Upload order; the first entry is not necessarily the cover.
    pub pictures: Vec<PictureId>,
    pub privacy: PrivacySettings,
}

impl User {
    pub fn new(id: UserId) -> Self {
        User {
            id,
            friends: BTreeSet::new(),
            likes: BTreeSet::new(),
            groups: BTreeSet::new(),
            pictures: Vec::new(),
            privacy: PrivacySettings::PUBLIC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Page {
    pub id: PageId,
    pub fans: BTreeSet<UserId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupVisibility {
    /// Listed on profiles and member list readable by anyone.
    Public,
    /// Listed, but the member list is denied to non-members.
    Private,
    /// Neither listed nor readable.
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub id: GroupId,
    pub members: BTreeSet<UserId>,
    pub visibility: GroupVisibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Picture {
    pub id: PictureId,
    pub owner: UserId,
    /// Cover photos are readable regardless of the owner's settings.
    pub is_cover: bool,
    pub likers: BTreeSet<UserId>,
    pub commenters: BTreeSet<UserId>,
}

impl Picture {
    pub fn reactors(&self) -> impl Iterator<Item = UserId> + '_ {
        self.likers.union(&self.commenters).copied()
    }
}

/// The whole synthetic world.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialGraph {
    pub users: BTreeMap<UserId, User>,
    pub pages: BTreeMap<PageId, Page>,
    pub groups: BTreeMap<GroupId, Group>,
    pub pictures: BTreeMap<PictureId, Picture>,
    pub seed: u64,
}

/// One broken invariant, naming the entities involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    KeyMismatch { entity: &'static str, key: u32, id: u32 },
    SelfFriend(UserId),
    AsymmetricFriendship { user: UserId, friend: UserId },
    DanglingUser { referrer: String, user: UserId },
    DanglingPage { user: UserId, page: PageId },
    DanglingGroup { user: UserId, group: GroupId },
    DanglingPicture { user: UserId, picture: PictureId },
    LikeFanMismatch { user: UserId, page: PageId },
    MembershipMismatch { user: UserId, group: GroupId },
    PictureOwnerMismatch { picture: PictureId, owner: UserId },
    DuplicatePicture { user: UserId, picture: PictureId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::KeyMismatch { entity, key, id } => {
                write!(f, "{entity} stored under key {key} carries id {id}")
            }
            Violation::SelfFriend(u) => write!(f, "{u} is its own friend"),
            Violation::AsymmetricFriendship { user, friend } => {
                write!(f, "{friend} in friends({user}) but {user} not in friends({friend})")
            }
            Violation::DanglingUser { referrer, user } => {
                write!(f, "{referrer} references unknown user {user}")
            }
            Violation::DanglingPage { user, page } => {
                write!(f, "{user} likes unknown page {page}")
            }
            Violation::DanglingGroup { user, group } => {
                write!(f, "{user} belongs to unknown group {group}")
            }
            Violation::DanglingPicture { user, picture } => {
                write!(f, "{user} lists unknown picture {picture}")
            }
            Violation::LikeFanMismatch { user, page } => {
                write!(f, "like/fan mismatch between {user} and {page}")
            }
            Violation::MembershipMismatch { user, group } => {
                write!(f, "membership mismatch between {user} and {group}")
            }
            Violation::PictureOwnerMismatch { picture, owner } => {
                write!(f, "{picture} owned by {owner} but missing from its picture list")
            }
            Violation::DuplicatePicture { user, picture } => {
                write!(f, "{user} lists {picture} more than once")
            }
        }
    }
}

impl SocialGraph {
    pub fn new(seed: u64) -> Self {
        SocialGraph {
            seed,
            ..Default::default()
        }
    }

    pub fn user(&self, id: UserId) -> Option<&User> {
        self.users.get(&id)
    }

    pub fn are_friends(&self, a: UserId, b: UserId) -> bool {
        self.users.get(&a).is_some_and(|u| u.friends.contains(&b))
    }

    /// Adds a symmetric friendship edge. Users must already exist.
    pub fn befriend(&mut self, a: UserId, b: UserId) {
        assert_ne!(a, b, "self friendship");
        self.users.get_mut(&a).expect("unknown user").friends.insert(b);
        self.users.get_mut(&b).expect("unknown user").friends.insert(a);
    }

    pub fn like(&mut self, user: UserId, page: PageId) {
        self.users.get_mut(&user).expect("unknown user").likes.insert(page);
        self.pages
            .entry(page)
            .or_insert_with(|| Page {
                id: page,
                fans: BTreeSet::new(),
            })
            .fans
            .insert(user);
    }

    pub fn join(&mut self, user: UserId, group: GroupId) {
        self.users.get_mut(&user).expect("unknown user").groups.insert(group);
        self.groups
            .get_mut(&group)
            .expect("unknown group")
            .members
            .insert(user);
    }

    /// Checks every structural invariant. An empty list means the graph is
    /// consistent.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        for (key, user) in &self.users {
            if *key != user.id {
                out.push(Violation::KeyMismatch {
                    entity: "user",
                    key: key.0,
                    id: user.id.0,
                });
            }
            for &friend in &user.friends {
                if friend == user.id {
                    out.push(Violation::SelfFriend(user.id));
                    continue;
                }
                match self.users.get(&friend) {
                    None => out.push(Violation::DanglingUser {
                        referrer: user.id.to_string(),
                        user: friend,
                    }),
                    Some(other) if !other.friends.contains(&user.id) => {
                        out.push(Violation::AsymmetricFriendship {
                            user: user.id,
                            friend,
                        })
                    }
                    Some(_) => {}
                }
            }
            for &page in &user.likes {
                match self.pages.get(&page) {
                    None => out.push(Violation::DanglingPage { user: user.id, page }),
                    Some(p) if !p.fans.contains(&user.id) => {
                        out.push(Violation::LikeFanMismatch { user: user.id, page })
                    }
                    Some(_) => {}
                }
            }
            for &group in &user.groups {
                match self.groups.get(&group) {
                    None => out.push(Violation::DanglingGroup { user: user.id, group }),
                    Some(g) if !g.members.contains(&user.id) => {
                        out.push(Violation::MembershipMismatch { user: user.id, group })
                    }
                    Some(_) => {}
                }
            }
            let mut seen = BTreeSet::new();
            for &picture in &user.pictures {
                if !seen.insert(picture) {
                    out.push(Violation::DuplicatePicture { user: user.id, picture });
                }
                match self.pictures.get(&picture) {
                    None => out.push(Violation::DanglingPicture { user: user.id, picture }),
                    Some(p) if p.owner != user.id => out.push(Violation::PictureOwnerMismatch {
                        picture,
                        owner: p.owner,
                    }),
                    Some(_) => {}
                }
            }
        }

        for (key, page) in &self.pages {
            if *key != page.id {
                out.push(Violation::KeyMismatch {
                    entity: "page",
                    key: key.0,
                    id: page.id.0,
                });
            }
            for &fan in &page.fans {
                match self.users.get(&fan) {
                    None => out.push(Violation::DanglingUser {
                        referrer: page.id.to_string(),
                        user: fan,
                    }),
                    Some(u) if !u.likes.contains(&page.id) => {
                        out.push(Violation::LikeFanMismatch {
                            user: fan,
                            page: page.id,
                        })
                    }
                    Some(_) => {}
                }
            }
        }

        for (key, group) in &self.groups {
            if *key != group.id {
                out.push(Violation::KeyMismatch {
                    entity: "group",
                    key: key.0,
                    id: group.id.0,
                });
            }
            for &member in &group.members {
                match self.users.get(&member) {
                    None => out.push(Violation::DanglingUser {
                        referrer: group.id.to_string(),
                        user: member,
                    }),
                    Some(u) if !u.groups.contains(&group.id) => {
                        out.push(Violation::MembershipMismatch {
                            user: member,
                            group: group.id,
                        })
                    }
                    Some(_) => {}
                }
            }
        }

        for (key, picture) in &self.pictures {
            if *key != picture.id {
                out.push(Violation::KeyMismatch {
                    entity: "picture",
                    key: key.0,
                    id: picture.id.0,
                });
            }
            match self.users.get(&picture.owner) {
                None => out.push(Violation::DanglingUser {
                    referrer: picture.id.to_string(),
                    user: picture.owner,
                }),
                Some(u) if !u.pictures.contains(&picture.id) => {
                    out.push(Violation::PictureOwnerMismatch {
                        picture: picture.id,
                        owner: picture.owner,
                    })
                }
                Some(_) => {}
            }
            for reactor in picture.reactors() {
                if !self.users.contains_key(&reactor) {
                    out.push(Violation::DanglingUser {
                        referrer: picture.id.to_string(),
                        user: reactor,
                    });
                }
            }
        }

        out
    }
}
