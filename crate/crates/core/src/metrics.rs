//! Community quality measures: topical purity, Newman modularity, PurQ,
//! conductance, silhouette, friend and profile fractions, overlap degrees.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::error::{Error, Result};
use crate::graph_model::{normalize_tag, parse_pairs, Dataset, UserGraph};
use crate::membership::{Community, CommunitySet};
use crate::similarity::SimilarityMatrix;

/// Tag -> topic id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMap {
    pub map: BTreeMap<String, String>,
}

impl TopicMap {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> TopicMap {
        TopicMap {
            map: pairs
                .into_iter()
                .map(|(t, topic)| (normalize_tag(&t), topic))
                .collect(),
        }
    }

    /// Reads `tag<TAB>topic_id` rows; tags unknown to `d` only warn.
    pub fn load(path: &Path, d: &Dataset) -> Result<TopicMap> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tm = TopicMap::from_pairs(parse_pairs(path, &text)?);
        let dangling = tm.map.keys().filter(|t| !d.tags.contains(*t)).count();
        if dangling > 0 {
            warn!(
                "{}: {dangling} tags are not attached to any event",
                path.display()
            );
        }
        Ok(tm)
    }

    pub fn topic(&self, tag: &str) -> Option<&str> {
        self.map.get(tag).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurityScores {
    /// `None` for communities without a single mapped tag.
    pub per_community: Vec<Option<f64>>,
    pub mean: f64,
}

/// Share of the dominant topic among a community's tag occurrences (one per
/// event-tag edge), averaged over communities.
///
/// A community without events (the modularity baseline) is scored over the
/// distinct events its members attend.
pub fn purity(cs: &CommunitySet, tm: &TopicMap, d: &Dataset) -> PurityScores {
    let tags = d.event_tag_lists();
    let attendance = d.attendance();
    let mut unknown: BTreeSet<&str> = BTreeSet::new();
    let per_community: Vec<Option<f64>> = cs
        .communities
        .iter()
        .map(|c| {
            let events: BTreeSet<&str> = if c.events.is_empty() {
                c.users
                    .iter()
                    .flat_map(|u| attendance.get(u.as_str()).into_iter().flatten())
                    .map(|e| e.as_ref())
                    .collect()
            } else {
                c.events.iter().map(String::as_str).collect()
            };
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            let mut total = 0usize;
            for e in events {
                for t in tags.get(e).into_iter().flatten() {
                    match tm.topic(t) {
                        Some(topic) => {
                            *counts.entry(topic).or_default() += 1;
                            total += 1;
                        }
                        None => {
                            unknown.insert(t);
                        }
                    }
                }
            }
            if total == 0 {
                warn!(
                    "community {} has no topic-mapped tags; excluded from purity",
                    c.id
                );
                return None;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            Some(top as f64 / total as f64)
        })
        .collect();
    if !unknown.is_empty() {
        warn!(
            "{} tags have no topic and were excluded from purity",
            unknown.len()
        );
    }
    PurityScores {
        mean: mean(per_community.iter().flatten().copied()).unwrap_or(0.0),
        per_community,
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut n = 0usize;
    let mut s = 0.0;
    for v in values {
        n += 1;
        s += v;
    }
    (n > 0).then(|| s / n as f64)
}

/// Fraction of communities whose purity reaches the mean purity.
pub fn f_purity(purities: &[f64]) -> f64 {
    let Some(avg) = mean(purities.iter().copied()) else {
        return 0.0;
    };
    let hits = purities.iter().filter(|&&p| p >= avg - 1e-12).count();
    hits as f64 / purities.len() as f64
}

/// Newman modularity of a node labelling over the unweighted edges of `g`.
/// Each label value is one community.
pub fn modularity_of_labels(g: &UserGraph, labels: &[usize]) -> Result<f64> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::EdgelessGraph);
    }
    let two_m = 2.0 * m as f64;
    let mut internal: BTreeMap<usize, usize> = BTreeMap::new();
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for (a, b, _) in g.edges() {
        if labels[a] == labels[b] {
            *internal.entry(labels[a]).or_default() += 1;
        }
    }
    for (v, &label) in labels.iter().enumerate() {
        *degree.entry(label).or_default() += g.degree(v);
    }
    let mut q = 0.0;
    for (label, &deg) in &degree {
        let e = internal.get(label).copied().unwrap_or(0) as f64 / m as f64;
        let a = deg as f64 / two_m;
        q += e - a * a;
    }
    Ok(q)
}

/// Labels for every graph node: its community under the max-score projection,
/// or a fresh singleton label when it belongs to none.
pub fn projected_labels(cs: &CommunitySet, g: &UserGraph) -> Vec<usize> {
    let proj = cs.disjoint_projection();
    let base = cs.communities.iter().map(|c| c.id + 1).max().unwrap_or(0);
    g.nodes
        .iter()
        .enumerate()
        .map(|(i, u)| proj.get(u.as_str()).copied().unwrap_or(base + i))
        .collect()
}

/// Newman Q after projecting overlapping memberships to disjoint ones.
pub fn newman_q(cs: &CommunitySet, g: &UserGraph) -> Result<f64> {
    modularity_of_labels(g, &projected_labels(cs, g))
}

/// Weighted harmonic mean of purity and Q. Negative Q counts as 0.
pub fn purq_beta(purity: f64, q: f64, beta: f64) -> f64 {
    let q = if q < 0.0 {
        warn!("negative modularity {q} clamped to 0 for PurQ");
        0.0
    } else {
        q
    };
    let b2 = beta * beta;
    let denom = b2 * purity + q;
    if denom == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * purity * q / denom
}

/// `cut / min(vol(S), vol(rest))` over unweighted edges; 0 when nothing is cut.
pub fn conductance_of_set(members: &BTreeSet<usize>, g: &UserGraph) -> f64 {
    let mut cut = 0usize;
    let mut vol_in = 0usize;
    let mut vol_total = 0usize;
    for v in 0..g.node_count() {
        let d = g.degree(v);
        vol_total += d;
        if members.contains(&v) {
            vol_in += d;
            cut += g.neighbors(v).filter(|w| !members.contains(w)).count();
        }
    }
    if cut == 0 {
        return 0.0;
    }
    let smaller = vol_in.min(vol_total - vol_in);
    cut as f64 / smaller as f64
}

pub fn conductance(c: &Community, g: &UserGraph) -> f64 {
    let members: BTreeSet<usize> = c.users.iter().filter_map(|u| g.index_of(u)).collect();
    conductance_of_set(&members, g)
}

/// Mean silhouette of events with distance `max(0, 1 - S_t)`. Events in
/// single-event clusters score 0.
pub fn silhouette(clusters: &ClusterSet, st: &SimilarityMatrix) -> Result<f64> {
    silhouette_of(&clusters.clusters, st)
}

pub fn silhouette_of(clusters: &[Vec<usize>], st: &SimilarityMatrix) -> Result<f64> {
    let nonempty: Vec<&Vec<usize>> = clusters.iter().filter(|c| !c.is_empty()).collect();
    if nonempty.len() < 2 {
        return Err(Error::SilhouetteUndefined(format!(
            "needs at least 2 clusters, got {}",
            nonempty.len()
        )));
    }
    let dist = |i: usize, j: usize| (1.0 - st.get(i, j)).max(0.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for (ci, own) in nonempty.iter().enumerate() {
        for &i in own.iter() {
            count += 1;
            if own.len() < 2 {
                continue;
            }
            let a = own
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| dist(i, j))
                .sum::<f64>()
                / (own.len() - 1) as f64;
            let b = nonempty
                .iter()
                .enumerate()
                .filter(|&(cj, _)| cj != ci)
                .map(|(_, other)| {
                    other.iter().map(|&j| dist(i, j)).sum::<f64>() / other.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            let top = a.max(b);
            if top > 0.0 {
                total += (b - a) / top;
            }
        }
    }
    Ok(total / count as f64)
}

/// Share of friend edges touching a community that stay inside it.
///
/// Per-community shares are averaged over communities touching at least one
/// friend edge; with `global` the counts are pooled instead. `None` without
/// friend data.
pub fn friend_fraction(
    cs: &CommunitySet,
    friends: &BTreeSet<(String, String)>,
    global: bool,
) -> Option<f64> {
    if friends.is_empty() {
        return None;
    }
    let mut fractions = Vec::new();
    let (mut inside_total, mut incident_total) = (0usize, 0usize);
    for c in &cs.communities {
        let members: BTreeSet<&str> = c.users.iter().map(String::as_str).collect();
        let mut incident = 0usize;
        let mut inside = 0usize;
        for (a, b) in friends {
            let ia = members.contains(a.as_str());
            let ib = members.contains(b.as_str());
            if ia || ib {
                incident += 1;
                if ia && ib {
                    inside += 1;
                }
            }
        }
        if incident > 0 {
            fractions.push(inside as f64 / incident as f64);
            inside_total += inside;
            incident_total += incident;
        }
    }
    if global {
        (incident_total > 0).then(|| inside_total as f64 / incident_total as f64)
    } else {
        mean(fractions)
    }
}

fn profile_cosine(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(t, &x)| b.get(t).map(|&y| (x * y) as f64))
        .sum();
    let na = a.values().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    let nb = b.values().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Per community, the share of profiled member pairs whose tag-profile cosine
/// reaches `theta`; averaged over communities with two or more profiled members.
pub fn profile_similarity_fraction(
    cs: &CommunitySet,
    profiles: &BTreeMap<String, BTreeMap<String, usize>>,
    theta: f64,
) -> Option<f64> {
    if profiles.is_empty() {
        return None;
    }
    let fractions = cs.communities.iter().filter_map(|c| {
        let members: Vec<&BTreeMap<String, usize>> =
            c.users.iter().filter_map(|u| profiles.get(u)).collect();
        if members.len() < 2 {
            return None;
        }
        let mut pairs = 0usize;
        let mut hits = 0usize;
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                pairs += 1;
                if profile_cosine(a, b) >= theta - 1e-12 {
                    hits += 1;
                }
            }
        }
        Some(hits as f64 / pairs as f64)
    });
    mean(fractions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapEdge {
    pub a: usize,
    pub b: usize,
    pub shared: usize,
    pub weight: f64,
}

/// `|shared users| / |smaller community|` for every pair sharing a user.
pub fn overlap_degrees(cs: &CommunitySet) -> Vec<OverlapEdge> {
    let sets: Vec<BTreeSet<&str>> = cs
        .communities
        .iter()
        .map(|c| c.users.iter().map(String::as_str).collect())
        .collect();
    let mut out = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let shared = sets[i].intersection(&sets[j]).count();
            if shared == 0 {
                continue;
            }
            let smaller = sets[i].len().min(sets[j].len());
            out.push(OverlapEdge {
                a: cs.communities[i].id,
                b: cs.communities[j].id,
                shared,
                weight: shared as f64 / smaller as f64,
            });
        }
    }
    out
}
