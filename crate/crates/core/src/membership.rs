//! Turns event clusters into overlapping user communities.
//!
//! A user is scored against every cluster holding one of their events by the
//! share of their co-participation neighbors who also take part in that
//! cluster. Memberships scoring at least the user's mean non-zero score are
//! kept; clusters left without users are dropped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::error::{Error, Result};
use crate::graph_model::{Dataset, UserGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub id: usize,
    pub events: Vec<String>,
    pub users: Vec<String>,
    /// Assignment score of every retained member.
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CommunitySet {
    pub communities: Vec<Community>,
    pub dropped_empty: usize,
}

impl CommunitySet {
    pub fn mean_size(&self) -> f64 {
        if self.communities.is_empty() {
            return 0.0;
        }
        let total: usize = self.communities.iter().map(|c| c.users.len()).sum();
        total as f64 / self.communities.len() as f64
    }

    /// Each user's single community: the one with the highest score,
    /// ties to the lowest community id.
    pub fn disjoint_projection(&self) -> BTreeMap<&str, usize> {
        let mut best: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for c in &self.communities {
            for u in &c.users {
                let s = c.scores.get(u).copied().unwrap_or(1.0);
                let e = best.entry(u.as_str()).or_insert((s, c.id));
                if s > e.0 || (s == e.0 && c.id < e.1) {
                    *e = (s, c.id);
                }
            }
        }
        best.into_iter().map(|(u, (_, c))| (u, c)).collect()
    }
}

/// `D_c(u) / D(u)`: fraction of `user`'s neighbors found among the community's
/// participants. A user without neighbors scores 1.
pub fn assignment_score(user: usize, participants: &BTreeSet<usize>, g: &UserGraph) -> Result<f64> {
    if !participants.contains(&user) {
        return Err(Error::NotParticipant {
            user: g
                .nodes
                .get(user)
                .cloned()
                .unwrap_or_else(|| user.to_string()),
            community: 0,
        });
    }
    let degree = g.degree(user);
    if degree == 0 {
        return Ok(1.0);
    }
    let inside = g
        .neighbors(user)
        .filter(|v| participants.contains(v))
        .count();
    Ok(inside as f64 / degree as f64)
}

const MEAN_SLACK: f64 = 1e-12;

pub fn assign_users(clusters: &ClusterSet, d: &Dataset, g: &UserGraph) -> Result<CommunitySet> {
    let event_cluster: BTreeMap<&str, usize> = clusters
        .clusters
        .iter()
        .enumerate()
        .flat_map(|(c, members)| {
            members
                .iter()
                .map(move |&i| (clusters.items[i].as_str(), c))
        })
        .collect();

    let mut participants: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); clusters.clusters.len()];
    for (e, u) in &d.event_users {
        let (Some(&c), Some(ui)) = (event_cluster.get(e.as_str()), g.index_of(u)) else {
            continue;
        };
        participants[c].insert(ui);
    }

    let mut members: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); clusters.clusters.len()];
    for (user, events) in d.attendance() {
        let Some(ui) = g.index_of(user) else { continue };
        let candidates: BTreeSet<usize> = events
            .iter()
            .filter_map(|e| event_cluster.get(e).copied())
            .collect();
        let mut scored = Vec::with_capacity(candidates.len());
        for c in candidates {
            let s =
                assignment_score(ui, &participants[c], g).map_err(|_| Error::NotParticipant {
                    user: user.to_string(),
                    community: c,
                })?;
            scored.push((c, s));
        }
        let nonzero: Vec<f64> = scored
            .iter()
            .map(|&(_, s)| s)
            .filter(|&s| s > 0.0)
            .collect();
        if nonzero.is_empty() {
            continue;
        }
        let threshold = nonzero.iter().sum::<f64>() / nonzero.len() as f64;
        for (c, s) in scored {
            // slack keeps uniform scores from rounding below their own mean
            if s > 0.0 && s >= threshold - MEAN_SLACK {
                members[c].insert(user.to_string(), s);
            }
        }
    }

    let mut out = CommunitySet::default();
    for (c, scores) in members.into_iter().enumerate() {
        if scores.is_empty() {
            out.dropped_empty += 1;
            continue;
        }
        out.communities.push(Community {
            id: out.communities.len(),
            events: clusters.clusters[c]
                .iter()
                .map(|&i| clusters.items[i].clone())
                .collect(),
            users: scores.keys().cloned().collect(),
            scores,
        });
    }
    Ok(out)
}
