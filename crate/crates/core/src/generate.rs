//! Synthetic world generation.
//!
//! Friendships come from a Watts-Strogatz small-world process, page
//! popularity from a Zipf prior, and likes, picture reactions and group
//! memberships are biased toward the owner's friends. Each stage draws
//! from its own ChaCha stream, so two parameter sets that differ only in
//! `fraction_public_profiles` yield the same world with different
//! privacy flags.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    Group, GroupId, GroupVisibility, Page, PageId, Picture, PictureId, PrivacySettings,
    SocialGraph, User, UserId,
};
use crate::seed::rng_for;

const STREAM_TOPOLOGY: u64 = 1;
const STREAM_LIKES: u64 = 2;
const STREAM_PICTURES: u64 = 3;
const STREAM_GROUPS: u64 = 4;
const STREAM_PRIVACY: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenParams {
    pub n_users: usize,
    /// Ring-lattice degree before rewiring; rounded down to even.
    pub mean_degree: usize,
    pub rewire_prob: f64,
    pub n_pages: usize,
    /// Zipf exponent of page popularity.
    pub page_popularity_exponent: f64,
    pub likes_per_user_mean: f64,
    /// Chance that a like slot copies a random friend's like.
    pub page_homophily: f64,
    /// Mean number of non-cover pictures per user.
    pub pictures_per_user_mean: f64,
    pub cover_photo_rate: f64,
    /// Chance that each liker/commenter is one of the owner's friends.
    pub picture_friend_bias: f64,
    /// Mean of the Poisson count of likers, and separately of commenters.
    pub reactions_per_picture_mean: f64,
    pub fraction_public_profiles: f64,
    pub n_groups: usize,
    pub group_size_mean: f64,
    /// Relative weights of public, private and hidden groups.
    pub group_visibility_weights: [f64; 3],
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_users: 115,
            mean_degree: 20,
            rewire_prob: 0.1,
            n_pages: 800,
            page_popularity_exponent: 0.9,
            likes_per_user_mean: 5.0,
            page_homophily: 0.3,
            pictures_per_user_mean: 2.0,
            cover_photo_rate: 1.0,
            picture_friend_bias: 0.8,
            reactions_per_picture_mean: 3.0,
            fraction_public_profiles: 0.3,
            n_groups: 20,
            group_size_mean: 30.0,
            group_visibility_weights: [0.5, 0.3, 0.2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Partially private population sized like the small mixed crawl.
    Mixed,
    /// All-public population of 1000 profiles.
    Public,
}

impl Preset {
    pub fn params(self) -> GenParams {
        match self {
            Preset::Mixed => GenParams {
                n_users: 115,
                fraction_public_profiles: 0.3,
                ..GenParams::default()
            },
            Preset::Public => GenParams {
                n_users: 1000,
                fraction_public_profiles: 1.0,
                ..GenParams::default()
            },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(Preset::Mixed),
            "public" => Ok(Preset::Public),
            other => Err(Error::InvalidParams(format!("unknown preset {other:?}"))),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("rewire_prob", self.rewire_prob),
            ("page_homophily", self.page_homophily),
            ("cover_photo_rate", self.cover_photo_rate),
            ("picture_friend_bias", self.picture_friend_bias),
            ("fraction_public_profiles", self.fraction_public_profiles),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0,1], got {p}")));
            }
        }
        let reals = [
            ("page_popularity_exponent", self.page_popularity_exponent),
            ("likes_per_user_mean", self.likes_per_user_mean),
            ("pictures_per_user_mean", self.pictures_per_user_mean),
            ("reactions_per_picture_mean", self.reactions_per_picture_mean),
            ("group_size_mean", self.group_size_mean),
        ];
        for (name, x) in reals {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {x}"
                )));
            }
        }
        for w in self.group_visibility_weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParams(format!(
                    "group visibility weights must lie in [0,1], got {w}"
                )));
            }
        }
        if self.n_groups > 0 && self.group_visibility_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParams(
                "group visibility weights must not all be zero".into(),
            ));
        }
        if self.n_users > u32::MAX as usize
            || self.n_pages > u32::MAX as usize
            || self.n_groups > u32::MAX as usize
        {
            return Err(Error::InvalidParams("entity count exceeds id space".into()));
        }
        Ok(())
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("mean checked positive").sample(rng) as usize
}

/// Builds a deterministic synthetic world for `(params, seed)`.
pub fn generate_graph(params: &GenParams, seed: u64) -> Result<SocialGraph> {
    params.validate()?;
    let mut graph = SocialGraph::new(seed);
    let n = params.n_users;
    if n == 0 {
        return Ok(graph);
    }

    let friends = small_world(n, params.mean_degree, params.rewire_prob, seed);
    let likes = assign_likes(params, &friends, seed);
    let mut users: Vec<User> = (0..n)
        .map(|i| {
            let mut u = User::new(UserId(i as u32));
            u.friends = friends[i].iter().map(|&j| UserId(j as u32)).collect();
            u.likes = likes[i].clone();
            u
        })
        .collect();

    for p in 0..params.n_pages {
        let id = PageId(p as u32);
        graph.pages.insert(
            id,
            Page {
                id,
                fans: BTreeSet::new(),
            },
        );
    }
    for u in &users {
        for page in &u.likes {
            graph.pages.get_mut(page).expect("page exists").fans.insert(u.id);
        }
    }

    assign_pictures(params, &friends, seed, &mut users, &mut graph);
    assign_groups(params, &friends, seed, &mut users, &mut graph);

    let mut rng = rng_for(&[seed, STREAM_PRIVACY]);
    for u in users.iter_mut() {
        let public = rng.random::<f64>() < params.fraction_public_profiles;
        let coins = [rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5)];
        u.privacy = if public {
            PrivacySettings::PUBLIC
        } else {
            PrivacySettings {
                friends_visible: false,
                likes_visible: coins[0],
                pictures_visible: coins[1],
                groups_visible: coins[2],
            }
        };
    }

    graph.users = users.into_iter().map(|u| (u.id, u)).collect();
    Ok(graph)
}

/// Watts-Strogatz ring lattice with random rewiring.
fn small_world(n: usize, mean_degree: usize, beta: f64, seed: u64) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    if n < 2 {
        return adj;
    }
    let max_even = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
    let half = mean_degree.min(max_even) / 2;
    for i in 0..n {
        for j in 1..=half {
            let k = (i + j) % n;
            adj[i].insert(k);
            adj[k].insert(i);
        }
    }
    let mut rng = rng_for(&[seed, STREAM_TOPOLOGY]);
    for j in 1..=half {
        for i in 0..n {
            let k = (i + j) % n;
            if !adj[i].contains(&k) || rng.random::<f64>() >= beta {
                continue;
            }
            if adj[i].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != i && !adj[i].contains(&w) {
                    break w;
                }
            };
            adj[i].remove(&k);
            adj[k].remove(&i);
            adj[i].insert(w);
            adj[w].insert(i);
        }
    }
    adj
}

fn assign_likes(
    params: &GenParams,
    friends: &[BTreeSet<usize>],
    seed: u64,
) -> Vec<BTreeSet<PageId>> {
    let n = friends.len();
    let mut likes = vec![BTreeSet::new(); n];
    if params.n_pages == 0 {
        return likes;
    }
    let mut rng = rng_for(&[seed, STREAM_LIKES]);

    // Zipf prior over popularity ranks, with ranks assigned to page ids at
    // random so popularity is not correlated with id order.
    let weights: Vec<f64> = (1..=params.n_pages)
        .map(|r| (r as f64).powf(-params.page_popularity_exponent))
        .collect();
    let prior = WeightedIndex::new(&weights).expect("positive weights");
    let mut rank_to_page: Vec<u32> = (0..params.n_pages as u32).collect();
    rank_to_page.shuffle(&mut rng);

    let quota: Vec<usize> = (0..n)
        .map(|_| poisson(&mut rng, params.likes_per_user_mean).min(params.n_pages))
        .collect();
    let rounds = quota.iter().copied().max().unwrap_or(0);

    // Slots are filled round-robin so early users can also copy from friends.
    for round in 0..rounds {
        for u in 0..n {
            if quota[u] <= round {
                continue;
            }
            if rng.random::<f64>() < params.page_homophily && !friends[u].is_empty() {
                let f = *friends[u]
                    .iter()
                    .nth(rng.random_range(0..friends[u].len()))
                    .expect("index in range");
                let options: Vec<PageId> = likes[f].difference(&likes[u]).copied().collect();
                if !options.is_empty() {
                    let page = options[rng.random_range(0..options.len())];
                    likes[u].insert(page);
                    continue;
                }
            }
            for _ in 0..16 {
                let page = PageId(rank_to_page[prior.sample(&mut rng)]);
                if likes[u].insert(page) {
                    break;
                }
            }
        }
    }
    likes
}

fn draw_reactor(
    rng: &mut ChaCha8Rng,
    owner: usize,
    friends: &[BTreeSet<usize>],
    friend_list: &[usize],
    bias: f64,
) -> usize {
    let n = friends.len();
    if !friend_list.is_empty() && rng.random::<f64>() < bias {
        return friend_list[rng.random_range(0..friend_list.len())];
    }
    // Uniform non-friend; the owner itself is eligible.
    for _ in 0..64 {
        let w = rng.random_range(0..n);
        if !friends[owner].contains(&w) {
            return w;
        }
    }
    let pool: Vec<usize> = (0..n).filter(|w| !friends[owner].contains(w)).collect();
    pool[rng.random_range(0..pool.len())]
}

fn assign_pictures(
    params: &GenParams,
    friends: &[BTreeSet<usize>],
    seed: u64,
    users: &mut [User],
    graph: &mut SocialGraph,
) {
    let mut rng = rng_for(&[seed, STREAM_PICTURES]);
    let mut next_id = 0u32;
    for owner in 0..users.len() {
        let friend_list: Vec<usize> = friends[owner].iter().copied().collect();
        let cover = rng.random::<f64>() < params.cover_photo_rate;
        let regular = poisson(&mut rng, params.pictures_per_user_mean);
        let kinds = std::iter::repeat_n(true, cover as usize).chain(std::iter::repeat_n(false, regular));
        for is_cover in kinds {
            let id = PictureId(next_id);
            next_id += 1;
            let reactors = |rng: &mut ChaCha8Rng| -> BTreeSet<UserId> {
                let count = poisson(rng, params.reactions_per_picture_mean);
                (0..count)
                    .map(|_| {
                        let r = draw_reactor(rng, owner, friends, &friend_list, params.picture_friend_bias);
                        UserId(r as u32)
                    })
                    .collect()
            };
            let likers = reactors(&mut rng);
            let commenters = reactors(&mut rng);
            users[owner].pictures.push(id);
            graph.pictures.insert(
                id,
                Picture {
                    id,
                    owner: UserId(owner as u32),
                    is_cover,
                    likers,
                    commenters,
                },
            );
        }
    }
}

fn assign_groups(
    params: &GenParams,
    friends: &[BTreeSet<usize>],
    seed: u64,
    users: &mut [User],
    graph: &mut SocialGraph,
) {
    if params.n_groups == 0 {
        return;
    }
    let n = users.len();
    let mut rng = rng_for(&[seed, STREAM_GROUPS]);
    let kinds = [
        GroupVisibility::Public,
        GroupVisibility::Private,
        GroupVisibility::Hidden,
    ];
    let visibility = WeightedIndex::new(params.group_visibility_weights).expect("validated weights");
    for g in 0..params.n_groups {
        let id = GroupId(g as u32);
        let size = poisson(&mut rng, params.group_size_mean).clamp(1, n);
        let mut members: Vec<usize> = vec![rng.random_range(0..n)];
        let mut set: BTreeSet<usize> = members.iter().copied().collect();
        let mut attempts = 0;
        while set.len() < size && attempts < size * 10 {
            attempts += 1;
            let anchor = members[rng.random_range(0..members.len())];
            let candidate = if rng.random::<f64>() < params.page_homophily && !friends[anchor].is_empty() {
                *friends[anchor]
                    .iter()
                    .nth(rng.random_range(0..friends[anchor].len()))
                    .expect("index in range")
            } else {
                rng.random_range(0..n)
            };
            if set.insert(candidate) {
                members.push(candidate);
            }
        }
        for &m in &set {
            users[m].groups.insert(id);
        }
        graph.groups.insert(
            id,
            Group {
                id,
                members: set.into_iter().map(|m| UserId(m as u32)).collect(),
                visibility: kinds[visibility.sample(&mut rng)],
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GenParams {
        GenParams {
            n_users: 60,
            mean_degree: 8,
            n_pages: 40,
            n_groups: 6,
            group_size_mean: 10.0,
            ..GenParams::default()
        }
    }

    #[test]
    fn empty_population() {
        let g = generate_graph(
            &GenParams {
                n_users: 0,
                ..GenParams::default()
            },
            1,
        )
        .unwrap();
        assert!(g.users.is_empty());
        assert!(g.pages.is_empty());
        assert!(g.groups.is_empty());
        assert!(g.pictures.is_empty());
    }

    #[test]
    fn presets_have_expected_sizes() {
        let mixed = generate_graph(&Preset::Mixed.params(), 42).unwrap();
        assert_eq!(mixed.users.len(), 115);
        assert!(mixed.validate().is_empty());
        let public = generate_graph(&Preset::Public.params(), 1).unwrap();
        assert_eq!(public.users.len(), 1000);
        assert!(public.users.values().all(|u| u.privacy.is_public()));
        assert!(public.validate().is_empty());
    }

    #[test]
    fn non_public_users_hide_friends() {
        let g = generate_graph(
            &GenParams {
                fraction_public_profiles: 0.0,
                ..tiny()
            },
            9,
        )
        .unwrap();
        assert!(g.users.values().all(|u| !u.privacy.friends_visible));
        // the other flags are fair coins, so both values show up
        assert!(g.users.values().any(|u| u.privacy.likes_visible));
        assert!(g.users.values().any(|u| !u.privacy.likes_visible));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = generate_graph(&tiny(), 77).unwrap();
        let b = generate_graph(&tiny(), 77).unwrap();
        let c = generate_graph(&tiny(), 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn privacy_fraction_does_not_change_structure() {
        let a = generate_graph(&tiny(), 5).unwrap();
        let b = generate_graph(
            &GenParams {
                fraction_public_profiles: 1.0,
                ..tiny()
            },
            5,
        )
        .unwrap();
        assert_eq!(a.pages, b.pages);
        assert_eq!(a.pictures, b.pictures);
        assert_eq!(a.groups, b.groups);
        for (id, u) in &a.users {
            assert_eq!(u.friends, b.users[id].friends);
        }
    }

    #[test]
    fn one_cover_per_user_at_full_rate() {
        let g = generate_graph(&tiny(), 3).unwrap();
        for u in g.users.values() {
            let covers = u.pictures.iter().filter(|p| g.pictures[p].is_cover).count();
            assert_eq!(covers, 1, "{}", u.id);
        }
    }

    #[test]
    fn degree_matches_lattice_on_average() {
        let g = generate_graph(&tiny(), 11).unwrap();
        let total: usize = g.users.values().map(|u| u.friends.len()).sum();
        assert_eq!(total, 60 * 8);
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let p = GenParams {
            picture_friend_bias: 1.5,
            ..tiny()
        };
        assert!(matches!(generate_graph(&p, 0), Err(Error::InvalidParams(_))));
        let p = GenParams {
            likes_per_user_mean: f64::NAN,
            ..tiny()
        };
        assert!(generate_graph(&p, 0).is_err());
    }

    #[test]
    fn degree_is_clamped_on_small_populations() {
        let g = generate_graph(
            &GenParams {
                n_users: 4,
                mean_degree: 50,
                ..tiny()
            },
            2,
        )
        .unwrap();
        assert!(g.validate().is_empty());
        assert!(g.users.values().all(|u| u.friends.len() <= 3));
    }
    fn friend_share(g: &SocialGraph) -> (f64, bool) {
        let (mut friends, mut all) = (0usize, 0usize);
        let mut exact = true;
        for p in g.pictures.values() {
            let owner = &g.users[&p.owner];
            let reactors: BTreeSet<UserId> = p.reactors().collect();
            let f = reactors.iter().filter(|r| owner.friends.contains(r)).count();
            if !owner.friends.is_empty() && f != reactors.len() {
                exact = false;
            }
            friends += f;
            all += reactors.len();
        }
        (friends as f64 / all.max(1) as f64, exact)
    }

    #[test]
    fn picture_friend_bias_is_monotone() {
        let mut means = Vec::new();
        for bias in [0.0, 0.5, 1.0] {
            let mut total = 0.0;
            for seed in 0..20 {
                let g = generate_graph(
                    &GenParams {
                        picture_friend_bias: bias,
                        ..tiny()
                    },
                    seed,
                )
                .unwrap();
                let (share, exact) = friend_share(&g);
                if bias == 1.0 {
                    assert!(exact, "seed {seed}");
                }
                total += share;
            }
            means.push(total / 20.0);
        }
        assert!(means.windows(2).all(|w| w[0] <= w[1]), "{means:?}");
        assert_eq!(means[0], 0.0);
        assert_eq!(means[2], 1.0);
    }

    fn arb_params() -> impl proptest::strategy::Strategy<Value = GenParams> {
        use proptest::prelude::*;
        (
            0usize..80,
            0usize..16,
            0.0f64..=1.0,
            1usize..60,
            0.0f64..8.0,
            0.0f64..=1.0,
            0.0f64..=1.0,
            0usize..8,
        )
            .prop_map(|(n, deg, rewire, pages, likes, homophily, public, groups)| GenParams {
                n_users: n,
                mean_degree: deg,
                rewire_prob: rewire,
                n_pages: pages,
                likes_per_user_mean: likes,
                page_homophily: homophily,
                fraction_public_profiles: public,
                n_groups: groups,
                group_size_mean: 6.0,
                ..GenParams::default()
            })
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn generated_graphs_are_consistent(params in arb_params(), seed in proptest::prelude::any::<u64>()) {
            let g = generate_graph(&params, seed).unwrap();
            proptest::prop_assert_eq!(g.validate(), vec![]);
            proptest::prop_assert_eq!(g.users.len(), params.n_users);
            proptest::prop_assert_eq!(&g, &generate_graph(&params, seed).unwrap());
        }

        #[test]
        fn fully_public_population_shows_everything(params in arb_params(), seed in proptest::prelude::any::<u64>()) {
            let params = GenParams { fraction_public_profiles: 1.0, ..params };
            let g = generate_graph(&params, seed).unwrap();
            proptest::prop_assert!(g.users.values().all(|u| u.privacy == PrivacySettings::PUBLIC));
        }
    }
}
