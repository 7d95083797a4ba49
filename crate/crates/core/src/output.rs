//! Files written by the CLI: communities.json, report.json/csv and the
//! optional embedding, similarity and merge-trace dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::error::{Error, Result};
use crate::graph_model::Dataset;
use crate::membership::{Community, CommunitySet};
use crate::pipeline::SweepRow;
use crate::similarity::SimilarityMatrix;
use crate::spectral::LatentEmbedding;

pub const COMMUNITIES_FILE: &str = "communities.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityRecord {
    pub community_id: usize,
    pub events: Vec<String>,
    pub users: Vec<String>,
    pub top_tags: Vec<String>,
    pub size: usize,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitiesFile {
    pub dropped_empty: usize,
    pub communities: Vec<CommunityRecord>,
}

/// The ten most frequent tags over a community's events, ties alphabetical.
pub fn top_tags(events: &[String], d: &Dataset) -> Vec<String> {
    let tags = d.event_tag_lists();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in events {
        for t in tags.get(e.as_str()).into_iter().flatten() {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(10)
        .map(|(t, _)| t.to_string())
        .collect()
}

impl CommunitiesFile {
    pub fn new(cs: &CommunitySet, d: &Dataset) -> Self {
        CommunitiesFile {
            dropped_empty: cs.dropped_empty,
            communities: cs
                .communities
                .iter()
                .map(|c| CommunityRecord {
                    community_id: c.id,
                    events: c.events.clone(),
                    users: c.users.clone(),
                    top_tags: top_tags(&c.events, d),
                    size: c.users.len(),
                    scores: c.scores.clone(),
                })
                .collect(),
        }
    }

    pub fn into_community_set(self) -> CommunitySet {
        CommunitySet {
            dropped_empty: self.dropped_empty,
            communities: self
                .communities
                .into_iter()
                .map(|r| Community {
                    id: r.community_id,
                    scores: if r.scores.is_empty() {
                        r.users.iter().map(|u| (u.clone(), 1.0)).collect()
                    } else {
                        r.scores
                    },
                    events: r.events,
                    users: r.users,
                })
                .collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: &str = "alpha,beta,purity,f_purity,q,purq,semq,silhouette,friend_fraction,profile_fraction,communities,mean_size,dropped_empty";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.beta,
            r.purity,
            r.f_purity,
            r.q,
            r.purq,
            r.semq,
            opt(r.silhouette),
            opt(r.friend_fraction),
            opt(r.profile_fraction),
            r.communities,
            r.mean_size,
            r.dropped_empty
        );
    }
    s
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn embedding_tsv(e: &LatentEmbedding) -> String {
    let mut s = String::new();
    for (id, v) in e.items.iter().zip(&e.vectors) {
        s.push_str(id);
        for x in v {
            s.push('\t');
            s.push_str(&format_significant(*x, 12));
        }
        s.push('\n');
    }
    s
}

pub fn similarity_tsv(m: &SimilarityMatrix) -> String {
    let mut s = String::new();
    for (a, b, v) in m.upper_triangle() {
        let _ = writeln!(s, "{a}\t{b}\t{}", format_significant(v, 12));
    }
    s
}

#[derive(Debug, Serialize)]
struct TraceRecord<'a> {
    step: usize,
    cluster_a: &'a str,
    cluster_b: &'a str,
    merged_similarity: f64,
    semq_after: f64,
    clusters_after: usize,
}

/// Merge trace as JSON; clusters are named by their smallest member event.
pub fn trace_json(c: &ClusterSet) -> Result<String> {
    let records: Vec<TraceRecord> = c
        .merge_trace
        .iter()
        .enumerate()
        .map(|(i, m)| TraceRecord {
            step: i + 1,
            cluster_a: &c.items[m.cluster_a],
            cluster_b: &c.items[m.cluster_b],
            merged_similarity: m.similarity,
            semq_after: m.semq_after,
            clusters_after: m.clusters_after,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&records)? + "\n")
}

pub fn write_text(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(-0.5, 12), "-0.5");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(123456.789, 12), "123456.789");
        assert_eq!(format_significant(1.5e-7, 12), "1.5e-07");
        assert_eq!(
            format_significant(2.0f64.sqrt() * 1e13, 12),
            "1.41421356237e+13"
        );
    }

    #[test]
    fn top_tags_rank_by_count_then_name() {
        let d = Dataset::from_edges(
            vec![("e1".into(), "u".into()), ("e2".into(), "u".into())],
            vec![
                ("e1".into(), "b".into()),
                ("e2".into(), "b".into()),
                ("e1".into(), "c".into()),
                ("e2".into(), "a".into()),
            ],
            vec![],
            vec![],
        );
        assert_eq!(
            top_tags(&["e1".into(), "e2".into()], &d),
            vec!["b", "a", "c"]
        );
    }
}
