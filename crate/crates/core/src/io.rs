//! JSON graph file format.
//!
//! One document with the top-level keys `users`, `pages`, `groups`,
//! `pictures` and `seed`. Every collection is an array ordered by id and
//! every id set is a sorted array, so a given graph always serializes to
//! the same bytes. Unknown keys are rejected at every level.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Group, Page, Picture, SocialGraph, User};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    users: Vec<User>,
    pages: Vec<Page>,
    groups: Vec<Group>,
    pictures: Vec<Picture>,
    seed: u64,
}

fn keyed<K: Ord + Copy + std::fmt::Display, V>(
    kind: &str,
    items: Vec<V>,
    key: impl Fn(&V) -> K,
) -> Result<BTreeMap<K, V>> {
    let mut map = BTreeMap::new();
    for item in items {
        let k = key(&item);
        if map.insert(k, item).is_some() {
            return Err(Error::Format(format!("duplicate {kind} id {k}")));
        }
    }
    Ok(map)
}

pub fn to_json(graph: &SocialGraph) -> String {
    let doc = GraphDocument {
        users: graph.users.values().cloned().collect(),
        pages: graph.pages.values().cloned().collect(),
        groups: graph.groups.values().cloned().collect(),
        pictures: graph.pictures.values().cloned().collect(),
        seed: graph.seed,
    };
    let mut s = serde_json::to_string(&doc).expect("graph serialization is infallible");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<SocialGraph> {
    let doc: GraphDocument = serde_json::from_str(text)?;
    Ok(SocialGraph {
        users: keyed("user", doc.users, |u| u.id)?,
        pages: keyed("page", doc.pages, |p| p.id)?,
        groups: keyed("group", doc.groups, |g| g.id)?,
        pictures: keyed("picture", doc.pictures, |p| p.id)?,
        seed: doc.seed,
    })
}

pub fn save_graph(graph: &SocialGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(graph)).map_err(|e| Error::file(path, e))?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<SocialGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    from_json(&text).map_err(|e| match e {
        Error::Parse(inner) => Error::Format(format!("{}: {inner}", path.display())),
        other => other,
    })
}
