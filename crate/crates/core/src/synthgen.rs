//! Seeded event-based social networks with planted topical communities.
//!
//! Users, events and tags are split evenly into topics. An event invites
//! users of its own topic with probability `p_in` and everyone else with
//! `p_out`; its tags come from its topic vocabulary except for a
//! `tag_noise` share drawn from other topics. ChaCha8 is the generator so a
//! seed reproduces the same network on every platform.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph_model::{
    prune_dataset, Dataset, EVENT_TAG_FILE, EVENT_USER_FILE, FRIENDS_FILE, TAG_TOPIC_FILE,
    USER_TAGS_FILE,
};
use crate::metrics::TopicMap;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Participation {
    /// Every user is equally active.
    Uniform,
    /// Per-user activity weights follow a Pareto law with this exponent.
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n_topics: usize,
    pub events_per_topic: usize,
    pub users_per_topic: usize,
    pub tags_per_topic: usize,
    /// Tags drawn for each event before deduplication.
    pub tags_per_event: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub tag_noise: f64,
    pub participation: Participation,
    pub power_law_exponent: f64,
    /// Friendship probabilities inside and across topics.
    pub friend_p_in: f64,
    pub friend_p_out: f64,
    /// Profile tags drawn per user.
    pub profile_tags: usize,
    pub rng_seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n_topics: 4,
            events_per_topic: 10,
            users_per_topic: 50,
            tags_per_topic: 8,
            tags_per_event: 5,
            p_in: 0.3,
            p_out: 0.01,
            tag_noise: 0.05,
            participation: Participation::Uniform,
            power_law_exponent: 2.5,
            friend_p_in: 0.1,
            friend_p_out: 0.005,
            profile_tags: 6,
            rng_seed: 7,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_topics == 0
            || self.events_per_topic == 0
            || self.users_per_topic == 0
            || self.tags_per_topic == 0
            || self.tags_per_event == 0
        {
            return bad("topic, event, user and tag counts must be positive".into());
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return bad(format!(
                "need 0 <= p_out < p_in <= 1, got p_out={} p_in={}",
                self.p_out, self.p_in
            ));
        }
        if !(0.0..1.0).contains(&self.tag_noise) {
            return bad(format!(
                "tag_noise must lie in [0,1), got {}",
                self.tag_noise
            ));
        }
        if self.tag_noise > 0.0 && self.n_topics < 2 {
            return bad("tag noise needs at least two topics".into());
        }
        for (name, p) in [
            ("friend_p_in", self.friend_p_in),
            ("friend_p_out", self.friend_p_out),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0,1], got {p}"));
            }
        }
        if self.participation == Participation::PowerLaw && self.power_law_exponent <= 1.0 {
            return bad("power-law exponent must exceed 1".into());
        }
        Ok(())
    }
}

/// A generated network with its planted labels.
#[derive(Debug, Clone)]
pub struct PlantedNetwork {
    pub dataset: Dataset,
    pub topics: TopicMap,
    pub event_topic: BTreeMap<String, usize>,
    pub user_topic: BTreeMap<String, usize>,
}

pub fn event_id(topic: usize, i: usize) -> String {
    format!("ev_t{topic}_{i:03}")
}

pub fn user_id(topic: usize, i: usize) -> String {
    format!("us_t{topic}_{i:04}")
}

pub fn tag_id(topic: usize, i: usize) -> String {
    format!("tag_t{topic}_{i:02}")
}

pub fn generate_planted_esbn(spec: &PlantedSpec) -> Result<PlantedNetwork> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let users: Vec<(usize, String)> = (0..spec.n_topics)
        .flat_map(|t| (0..spec.users_per_topic).map(move |i| (t, user_id(t, i))))
        .collect();

    let activity: Vec<f64> = match spec.participation {
        Participation::Uniform => vec![1.0; users.len()],
        Participation::PowerLaw => {
            // inverse-CDF Pareto(x_min = 1), rescaled to unit mean
            let raw: Vec<f64> = users
                .iter()
                .map(|_| {
                    let u: f64 = rng.random::<f64>();
                    (1.0 - u).powf(-1.0 / (spec.power_law_exponent - 1.0))
                })
                .collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            raw.into_iter().map(|w| w / mean).collect()
        }
    };

    let mut event_users = Vec::new();
    let mut event_tags = Vec::new();
    let mut event_topic = BTreeMap::new();
    for t in 0..spec.n_topics {
        for i in 0..spec.events_per_topic {
            let e = event_id(t, i);
            event_topic.insert(e.clone(), t);
            let mut attendees = Vec::new();
            for (k, (ut, u)) in users.iter().enumerate() {
                let p = if *ut == t { spec.p_in } else { spec.p_out };
                if rng.random::<f64>() < (p * activity[k]).min(1.0) {
                    attendees.push(u.clone());
                }
            }
            if attendees.is_empty() {
                let k = rng.random_range(0..spec.users_per_topic);
                attendees.push(user_id(t, k));
            }
            event_users.extend(attendees.into_iter().map(|u| (e.clone(), u)));
            for _ in 0..spec.tags_per_event {
                let topic = if rng.random::<f64>() < spec.tag_noise {
                    let other = rng.random_range(0..spec.n_topics - 1);
                    if other >= t {
                        other + 1
                    } else {
                        other
                    }
                } else {
                    t
                };
                let k = rng.random_range(0..spec.tags_per_topic);
                event_tags.push((e.clone(), tag_id(topic, k)));
            }
        }
    }

    let mut friends = Vec::new();
    for (a, (ta, ua)) in users.iter().enumerate() {
        for (tb, ub) in &users[a + 1..] {
            let p = if ta == tb {
                spec.friend_p_in
            } else {
                spec.friend_p_out
            };
            if rng.random::<f64>() < p {
                friends.push((ua.clone(), ub.clone()));
            }
        }
    }

    let mut user_tags = Vec::new();
    for (t, u) in &users {
        for _ in 0..spec.profile_tags {
            let k = rng.random_range(0..spec.tags_per_topic);
            user_tags.push((u.clone(), tag_id(*t, k)));
        }
    }

    let dataset = Dataset::from_edges(event_users, event_tags, friends, user_tags);
    let topics =
        TopicMap::from_pairs((0..spec.n_topics).flat_map(|t| {
            (0..spec.tags_per_topic).map(move |k| (tag_id(t, k), format!("topic_{t}")))
        }));
    let user_topic: BTreeMap<String, usize> = users
        .into_iter()
        .filter(|(_, u)| dataset.users.contains(u))
        .map(|(t, u)| (u, t))
        .collect();

    let check = Config {
        min_tag_freq: 0,
        ..Config::default()
    };
    prune_dataset(&dataset, &check)?;

    Ok(PlantedNetwork {
        dataset,
        topics,
        event_topic,
        user_topic,
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn pairs_tsv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut s = String::new();
    for (a, b) in rows {
        let _ = writeln!(s, "{a}\t{b}");
    }
    s
}

/// Writes the five input TSV files and `ground_truth.tsv` into `dir`.
pub fn write_planted(net: &PlantedNetwork, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d = &net.dataset;
    write_file(
        &dir.join(EVENT_USER_FILE),
        &pairs_tsv(d.event_users.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    )?;
    write_file(
        &dir.join(EVENT_TAG_FILE),
        &pairs_tsv(d.event_tags.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    )?;
    write_file(
        &dir.join(TAG_TOPIC_FILE),
        &pairs_tsv(net.topics.map.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    )?;
    write_file(
        &dir.join(FRIENDS_FILE),
        &pairs_tsv(d.friends.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    )?;
    let mut profiles = String::new();
    for (u, tags) in &d.user_profiles {
        for (t, &n) in tags {
            for _ in 0..n {
                let _ = writeln!(profiles, "{u}\t{t}");
            }
        }
    }
    write_file(&dir.join(USER_TAGS_FILE), &profiles)?;

    let mut gt = String::from("# events\n");
    for (e, t) in &net.event_topic {
        let _ = writeln!(gt, "{e}\ttopic_{t}");
    }
    gt.push_str("# users\n");
    for (u, t) in &net.user_topic {
        let _ = writeln!(gt, "{u}\ttopic_{t}");
    }
    write_file(&dir.join(GROUND_TRUTH_FILE), &gt)
}

/// Entropy-normalized mutual information (arithmetic-mean normalization)
/// between two labellings over their shared keys.
pub fn normalized_mutual_information<A: Ord, B: Ord>(
    truth: &BTreeMap<String, A>,
    predicted: &BTreeMap<String, B>,
) -> f64 {
    let pairs: Vec<(&A, &B)> = truth
        .iter()
        .filter_map(|(k, a)| predicted.get(k).map(|b| (a, b)))
        .collect();
    let n = pairs.len() as f64;
    if pairs.is_empty() {
        return 0.0;
    }
    let mut joint: BTreeMap<(&A, &B), usize> = BTreeMap::new();
    let mut left: BTreeMap<&A, usize> = BTreeMap::new();
    let mut right: BTreeMap<&B, usize> = BTreeMap::new();
    for &(a, b) in &pairs {
        *joint.entry((a, b)).or_default() += 1;
        *left.entry(a).or_default() += 1;
        *right.entry(b).or_default() += 1;
    }
    let entropy = |counts: &mut dyn Iterator<Item = usize>| -> f64 {
        counts
            .map(|c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&mut left.values().copied());
    let hb = entropy(&mut right.values().copied());
    let mut mi = 0.0;
    for (&(a, b), &c) in &joint {
        let pab = c as f64 / n;
        let pa = left[a] as f64 / n;
        let pb = right[b] as f64 / n;
        mi += pab * (pab / (pa * pb)).ln();
    }
    let denom = 0.5 * (ha + hb);
    if denom == 0.0 {
        // both labellings constant
        return 1.0;
    }
    (mi / denom).clamp(0.0, 1.0)
}

/// Purity of a labelling against ground truth: share of items carrying the
/// majority true label of their predicted group.
pub fn label_purity<A: Ord, B: Ord>(
    truth: &BTreeMap<String, A>,
    predicted: &BTreeMap<String, B>,
) -> f64 {
    let mut groups: BTreeMap<&B, BTreeMap<&A, usize>> = BTreeMap::new();
    let mut n = 0usize;
    for (k, b) in predicted {
        if let Some(a) = truth.get(k) {
            *groups.entry(b).or_default().entry(a).or_default() += 1;
            n += 1;
        }
    }
    if n == 0 {
        return 0.0;
    }
    let hits: usize = groups
        .values()
        .map(|g| g.values().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / n as f64
}

/// Number of event-user edges joining different planted topics.
pub fn cross_block_edges(net: &PlantedNetwork) -> usize {
    net.dataset
        .event_users
        .iter()
        .filter(|(e, u)| net.event_topic[e] != net.user_topic[u])
        .count()
}

/// Distinct users per planted topic that attend at least one event.
pub fn users_by_topic(net: &PlantedNetwork) -> BTreeMap<usize, BTreeSet<String>> {
    let mut out: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (u, &t) in &net.user_topic {
        out.entry(t).or_default().insert(u.clone());
    }
    out
}
