//! Event-based social network: users, events and tags linked by bipartite
//! edges, plus the co-participation projection onto users.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::config::Config;
use crate::error::{Error, Result};

pub const EVENT_USER_FILE: &str = "event_user.tsv";
pub const EVENT_TAG_FILE: &str = "event_tag.tsv";
pub const TAG_TOPIC_FILE: &str = "tag_topic.tsv";
pub const FRIENDS_FILE: &str = "friends.tsv";
pub const USER_TAGS_FILE: &str = "user_tags.tsv";

/// Users, events and tags with their bipartite edges.
///
/// Ids are kept in ordered sets so every derived index (matrix rows,
/// graph nodes) is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub users: BTreeSet<String>,
    pub events: BTreeSet<String>,
    pub tags: BTreeSet<String>,
    pub event_users: BTreeSet<(String, String)>,
    pub event_tags: BTreeSet<(String, String)>,
    /// Unordered pairs stored with the smaller id first.
    pub friends: BTreeSet<(String, String)>,
    pub user_profiles: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Locations of the TSV inputs.
#[derive(Debug, Clone)]
pub struct InputFiles {
    pub event_user: PathBuf,
    pub event_tag: PathBuf,
    pub tag_topic: PathBuf,
    pub friends: Option<PathBuf>,
    pub user_tags: Option<PathBuf>,
}

impl InputFiles {
    /// Standard file names inside `dir`. Optional files are only used if present.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let optional = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        InputFiles {
            event_user: dir.join(EVENT_USER_FILE),
            event_tag: dir.join(EVENT_TAG_FILE),
            tag_topic: dir.join(TAG_TOPIC_FILE),
            friends: optional(FRIENDS_FILE),
            user_tags: optional(USER_TAGS_FILE),
        }
    }
}

pub fn normalize_tag(tag: &str) -> String {
    tag.trim().to_lowercase()
}

/// Parses a two-column TSV body. Blank lines and `#` comments are skipped.
pub fn parse_pairs(path: &Path, text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if cols.len() != 2 {
            return Err(err(format!(
                "expected 2 tab-separated columns, found {}",
                cols.len()
            )));
        }
        let a = cols[0].trim();
        let b = cols[1].trim();
        if a.is_empty() || b.is_empty() {
            return Err(err("empty field".into()));
        }
        out.push((a.to_string(), b.to_string()));
    }
    Ok(out)
}

fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(path, &text)
}

impl Dataset {
    /// Builds a dataset from raw edge lists. Tags are trimmed and case-folded;
    /// friend and profile rows naming users without events are dropped.
    pub fn from_edges(
        event_users: impl IntoIterator<Item = (String, String)>,
        event_tags: impl IntoIterator<Item = (String, String)>,
        friends: impl IntoIterator<Item = (String, String)>,
        user_tags: impl IntoIterator<Item = (String, String)>,
    ) -> Dataset {
        let mut d = Dataset::default();
        for (e, u) in event_users {
            d.events.insert(e.clone());
            d.users.insert(u.clone());
            d.event_users.insert((e, u));
        }
        for (e, t) in event_tags {
            let t = normalize_tag(&t);
            if t.is_empty() {
                continue;
            }
            d.events.insert(e.clone());
            d.tags.insert(t.clone());
            d.event_tags.insert((e, t));
        }
        let mut dangling = 0usize;
        for (a, b) in friends {
            if a == b {
                continue;
            }
            if !d.users.contains(&a) || !d.users.contains(&b) {
                dangling += 1;
                continue;
            }
            d.friends.insert(if a < b { (a, b) } else { (b, a) });
        }
        if dangling > 0 {
            warn!("dropped {dangling} friend edges naming users without events");
        }
        let mut dangling = 0usize;
        for (u, t) in user_tags {
            if !d.users.contains(&u) {
                dangling += 1;
                continue;
            }
            *d.user_profiles
                .entry(u)
                .or_default()
                .entry(normalize_tag(&t))
                .or_default() += 1;
        }
        if dangling > 0 {
            warn!("dropped {dangling} profile rows naming users without events");
        }
        d
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty() || self.users.is_empty()
    }

    /// Event id -> participants.
    pub fn participants(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (e, u) in &self.event_users {
            m.entry(e.as_str()).or_default().push(u.as_str());
        }
        m
    }

    /// User id -> attended events.
    pub fn attendance(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (e, u) in &self.event_users {
            m.entry(u.as_str()).or_default().push(e.as_str());
        }
        m
    }

    /// Event id -> tags.
    pub fn event_tag_lists(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (e, t) in &self.event_tags {
            m.entry(e.as_str()).or_default().push(t.as_str());
        }
        m
    }

    /// Event ids in index order.
    pub fn event_ids(&self) -> Vec<String> {
        self.events.iter().cloned().collect()
    }

    /// Recomputes the id sets from the edge sets and drops side data
    /// (friends, profiles) for users that no longer exist.
    fn rebuild_ids(&mut self) {
        let eu_events: BTreeSet<&String> = self.event_users.iter().map(|(e, _)| e).collect();
        let et_events: BTreeSet<&String> = self.event_tags.iter().map(|(e, _)| e).collect();
        let events: BTreeSet<String> = eu_events
            .intersection(&et_events)
            .map(|e| (*e).clone())
            .collect();
        self.event_users.retain(|(e, _)| events.contains(e));
        self.event_tags.retain(|(e, _)| events.contains(e));
        self.events = events;
        self.users = self.event_users.iter().map(|(_, u)| u.clone()).collect();
        self.tags = self.event_tags.iter().map(|(_, t)| t.clone()).collect();
        let users = &self.users;
        self.friends
            .retain(|(a, b)| users.contains(a) && users.contains(b));
        self.user_profiles.retain(|u, _| users.contains(u));
    }
}

/// Reads the TSV inputs into a [`Dataset`]. Missing optional files yield empty
/// friend edges and profiles.
pub fn load_dataset(files: &InputFiles) -> Result<Dataset> {
    let event_users = read_pairs(&files.event_user)?;
    let event_tags = read_pairs(&files.event_tag)?;
    let friends = match &files.friends {
        Some(p) => read_pairs(p)?,
        None => Vec::new(),
    };
    let user_tags = match &files.user_tags {
        Some(p) => read_pairs(p)?,
        None => Vec::new(),
    };
    Ok(Dataset::from_edges(
        event_users,
        event_tags,
        friends,
        user_tags,
    ))
}

/// Applies the tag-frequency and singleton-pair rules until nothing changes.
///
/// Each round: drop tags used by fewer than `min_tag_freq` events, drop
/// event-user pairs where the event has a single participant who attends
/// nothing else, then drop events lacking users or tags and users lacking
/// events.
pub fn prune_dataset(d: &Dataset, cfg: &Config) -> Result<Dataset> {
    let mut d = d.clone();
    d.rebuild_ids();
    loop {
        let before = (d.event_users.len(), d.event_tags.len());

        if cfg.min_tag_freq > 0 {
            let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
            for (_, t) in &d.event_tags {
                *freq.entry(t.as_str()).or_default() += 1;
            }
            let rare: BTreeSet<String> = freq
                .into_iter()
                .filter(|&(_, n)| n < cfg.min_tag_freq)
                .map(|(t, _)| t.to_string())
                .collect();
            d.event_tags.retain(|(_, t)| !rare.contains(t));
        }

        let singletons: Vec<(String, String)> = {
            let participants = d.participants();
            let attendance = d.attendance();
            participants
                .iter()
                .filter(|(_, us)| us.len() == 1 && attendance[us[0]].len() == 1)
                .map(|(e, us)| (e.to_string(), us[0].to_string()))
                .collect()
        };
        for pair in &singletons {
            d.event_users.remove(pair);
        }

        d.rebuild_ids();
        if (d.event_users.len(), d.event_tags.len()) == before {
            break;
        }
    }
    if d.is_empty() {
        return Err(Error::EmptyDataset(
            "pruning removed every event".to_string(),
        ));
    }
    Ok(d)
}

/// Co-participation graph over users.
#[derive(Debug, Clone)]
pub struct UserGraph {
    pub nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Neighbor -> number of shared events.
    adjacency: Vec<BTreeMap<usize, u32>>,
    edge_count: usize,
}

impl UserGraph {
    /// Builds a graph from explicit nodes and unweighted edges.
    pub fn from_edges(nodes: Vec<String>, edges: &[(usize, usize)]) -> UserGraph {
        let mut g = UserGraph::with_nodes(nodes);
        for &(a, b) in edges {
            g.add_weight(a, b, 1);
        }
        g
    }

    fn with_nodes(mut nodes: Vec<String>) -> UserGraph {
        nodes.sort();
        nodes.dedup();
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
        let adjacency = vec![BTreeMap::new(); nodes.len()];
        UserGraph {
            nodes,
            index,
            adjacency,
            edge_count: 0,
        }
    }

    fn add_weight(&mut self, a: usize, b: usize, w: u32) {
        if a == b {
            return;
        }
        let slot = self.adjacency[a].entry(b).or_insert(0);
        if *slot == 0 {
            self.edge_count += 1;
        }
        *slot += w;
        *self.adjacency[b].entry(a).or_insert(0) += w;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.index.get(user).copied()
    }

    /// Number of distinct neighbors.
    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn weight(&self, a: usize, b: usize) -> u32 {
        self.adjacency[a].get(&b).copied().unwrap_or(0)
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[node].keys().copied()
    }

    /// Unordered edges `(a, b, weight)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            nbrs.iter()
                .filter(move |(&b, _)| a < b)
                .map(move |(&b, &w)| (a, b, w))
        })
    }

    pub fn density(&self) -> f64 {
        let n = self.nodes.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / (n * (n - 1.0))
    }

    /// Mean local clustering coefficient; nodes of degree < 2 count as 0.
    pub fn mean_clustering_coefficient(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for nbrs in &self.adjacency {
            let k = nbrs.len();
            if k < 2 {
                continue;
            }
            let list: Vec<usize> = nbrs.keys().copied().collect();
            let mut links = 0usize;
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    if self.adjacency[a].contains_key(&b) {
                        links += 1;
                    }
                }
            }
            total += 2.0 * links as f64 / (k * (k - 1)) as f64;
        }
        total / self.nodes.len() as f64
    }
}

/// Projects the event-user bipartite graph onto users; edge weights count
/// shared events.
pub fn user_user_projection(d: &Dataset) -> Result<UserGraph> {
    if d.is_empty() {
        return Err(Error::EmptyDataset("no users to project".into()));
    }
    let mut g = UserGraph::with_nodes(d.users.iter().cloned().collect());
    for (_, users) in d.participants() {
        let ids: Vec<usize> = users.iter().map(|u| g.index[*u]).collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                // add_weight mirrors both directions; count each pair once
                g.add_weight(a, b, 1);
            }
        }
    }
    Ok(g)
}
