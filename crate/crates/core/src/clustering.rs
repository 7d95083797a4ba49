//! Agglomerative clustering of events scored by semantic modularity (SemQ).
//!
//! SemQ = IntraSem - InterSem over the semantic similarity `S_t`:
//!
//! * IntraSem averages, over clusters, the mean similarity of ordered
//!   member pairs `i != j`. A single-event cluster contributes a fixed
//!   constant (`singleton_intra`).
//! * InterSem is the mean squared similarity over unordered cross-cluster
//!   pairs, divided by the number of clusters; 0 for a single cluster.
//!
//! Merging is driven by the combined similarity `S_sim` with average
//! (WPGMA) updates; ties go to the lexicographically smallest pair of
//! cluster keys, a key being the smallest member index.

use serde::Serialize;

use crate::config::{Config, StopRule};
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// One agglomeration step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeStep {
    /// Keys (smallest member index) of the merged clusters, `a < b`.
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub similarity: f64,
    pub semq_after: f64,
    pub clusters_after: usize,
}

#[derive(Debug, Clone)]
pub struct ClusterSet {
    pub items: Vec<String>,
    /// Member indices, sorted; clusters ordered by smallest member.
    pub clusters: Vec<Vec<usize>>,
    pub merge_trace: Vec<MergeStep>,
    /// SemQ of the all-singleton starting partition.
    pub initial_semq: f64,
    pub best_semq: f64,
    /// Number of trace steps applied to reach `clusters`.
    pub best_step: usize,
}

impl ClusterSet {
    pub fn cluster_ids(&self) -> Vec<Vec<&str>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&i| self.items[i].as_str()).collect())
            .collect()
    }

    /// Cluster index of every item.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.items.len()];
        for (c, members) in self.clusters.iter().enumerate() {
            for &i in members {
                out[i] = c;
            }
        }
        out
    }
}

/// Mean over clusters of the mean ordered-pair similarity inside each cluster.
pub fn intra_sem(clusters: &[Vec<usize>], st: &SimilarityMatrix, singleton_intra: f64) -> f64 {
    if clusters.is_empty() {
        return 0.0;
    }
    let total: f64 = clusters
        .iter()
        .map(|c| {
            let n = c.len();
            if n < 2 {
                return singleton_intra;
            }
            let mut s = 0.0;
            for (a, &i) in c.iter().enumerate() {
                for &j in &c[a + 1..] {
                    s += st.get(i, j) + st.get(j, i);
                }
            }
            s / (n * (n - 1)) as f64
        })
        .sum();
    total / clusters.len() as f64
}

/// Mean squared cross-cluster similarity divided by the cluster count.
pub fn inter_sem(clusters: &[Vec<usize>], st: &SimilarityMatrix) -> f64 {
    if clusters.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (a, ca) in clusters.iter().enumerate() {
        for cb in &clusters[a + 1..] {
            for &i in ca {
                for &j in cb {
                    let s = st.get(i, j);
                    sum += s * s;
                    pairs += 1;
                }
            }
        }
    }
    if pairs == 0 {
        return 0.0;
    }
    sum / pairs as f64 / clusters.len() as f64
}

pub fn sem_q(clusters: &[Vec<usize>], st: &SimilarityMatrix, singleton_intra: f64) -> f64 {
    intra_sem(clusters, st, singleton_intra) - inter_sem(clusters, st)
}

/// Incremental SemQ bookkeeping over cluster slots. Slot `i` starts as event `i`;
/// a merge keeps the smaller slot.
struct SemQState {
    n: usize,
    singleton_intra: f64,
    size: Vec<usize>,
    /// Sum of S_t over unordered pairs inside the cluster.
    within: Vec<f64>,
    /// Sum of S_t^2 over unordered pairs inside the cluster.
    within_sq: Vec<f64>,
    /// Row-major slot x slot sums of S_t and S_t^2 across two clusters.
    cross: Vec<f64>,
    cross_sq: Vec<f64>,
    ratio_sum: f64,
    within_sq_total: f64,
    within_pairs: usize,
    total_sq: f64,
    clusters: usize,
}

impl SemQState {
    fn new(st: &SimilarityMatrix, singleton_intra: f64) -> Self {
        let n = st.len();
        let mut cross = vec![0.0; n * n];
        let mut cross_sq = vec![0.0; n * n];
        let mut total_sq = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let s = st.get(i, j);
                    cross[i * n + j] = s;
                    cross_sq[i * n + j] = s * s;
                    if i < j {
                        total_sq += s * s;
                    }
                }
            }
        }
        SemQState {
            n,
            singleton_intra,
            size: vec![1; n],
            within: vec![0.0; n],
            within_sq: vec![0.0; n],
            cross,
            cross_sq,
            ratio_sum: singleton_intra * n as f64,
            within_sq_total: 0.0,
            within_pairs: 0,
            total_sq,
            clusters: n,
        }
    }

    fn ratio(&self, slot: usize) -> f64 {
        let n = self.size[slot];
        if n < 2 {
            self.singleton_intra
        } else {
            2.0 * self.within[slot] / (n * (n - 1)) as f64
        }
    }

    fn value(&self) -> f64 {
        let c = self.clusters as f64;
        let intra = self.ratio_sum / c;
        let total_pairs = self.n * (self.n - 1) / 2;
        let m = total_pairs - self.within_pairs;
        let inter = if self.clusters < 2 || m == 0 {
            0.0
        } else {
            (self.total_sq - self.within_sq_total) / m as f64 / c
        };
        intra - inter
    }

    fn merge(&mut self, a: usize, b: usize, active: &[bool]) {
        let n = self.n;
        self.ratio_sum -= self.ratio(a) + self.ratio(b);
        let pair_count = self.size[a] * self.size[b];
        self.within[a] += self.within[b] + self.cross[a * n + b];
        let added_sq = self.cross_sq[a * n + b];
        self.within_sq[a] += self.within_sq[b] + added_sq;
        self.within_sq_total += added_sq;
        self.within_pairs += pair_count;
        self.size[a] += self.size[b];
        self.ratio_sum += self.ratio(a);
        for (c, &live) in active.iter().enumerate() {
            if c == a || c == b || !live {
                continue;
            }
            let s = self.cross[a * n + c] + self.cross[b * n + c];
            let q = self.cross_sq[a * n + c] + self.cross_sq[b * n + c];
            self.cross[a * n + c] = s;
            self.cross[c * n + a] = s;
            self.cross_sq[a * n + c] = q;
            self.cross_sq[c * n + a] = q;
        }
        self.clusters -= 1;
    }
}

/// Greedy agglomeration over `ssim` scored by SemQ over `st`.
///
/// Returns the partition with the highest SemQ seen along the merge trace
/// (the earliest one on ties).
pub fn agglomerative_cluster(
    ssim: &SimilarityMatrix,
    st: &SimilarityMatrix,
    cfg: &Config,
) -> Result<ClusterSet> {
    if ssim.is_empty() {
        return Err(Error::InvalidArgument("empty similarity matrix".into()));
    }
    if ssim.items != st.items {
        return Err(Error::ItemMismatch);
    }
    if cfg.min_clusters < 1 {
        return Err(Error::InvalidConfig(
            "min_clusters must be at least 1".into(),
        ));
    }
    let n = ssim.len();
    let mut sim: Vec<f64> = ssim.values().to_vec();
    let mut active = vec![true; n];
    let mut state = SemQState::new(st, cfg.singleton_intra);

    // best[i] = most similar other active slot, ties to the smaller slot
    let scan = |sim: &[f64], active: &[bool], i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i || !active[j] {
                continue;
            }
            let s = sim[i * n + j];
            match best {
                Some((bs, _)) if s <= bs => {}
                _ => best = Some((s, j)),
            }
        }
        best
    };
    let mut best: Vec<Option<(f64, usize)>> = (0..n).map(|i| scan(&sim, &active, i)).collect();

    let initial = state.value();
    let mut trace = Vec::new();
    let mut best_semq = initial;
    let mut best_step = 0usize;
    let mut prev = initial;

    while state.clusters > cfg.min_clusters {
        // global choice: highest similarity, then smallest (key_lo, key_hi)
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if let Some((s, j)) = best[i] {
                let (lo, hi) = (i.min(j), i.max(j));
                let better = match pick {
                    None => true,
                    Some((ps, plo, phi)) => s > ps || (s == ps && (lo, hi) < (plo, phi)),
                };
                if better {
                    pick = Some((s, lo, hi));
                }
            }
        }
        let Some((s, a, b)) = pick else { break };

        state.merge(a, b, &active);
        active[b] = false;
        for c in 0..n {
            if c == a || !active[c] {
                continue;
            }
            let v = 0.5 * (sim[a * n + c] + sim[b * n + c]);
            sim[a * n + c] = v;
            sim[c * n + a] = v;
        }
        best[b] = None;
        best[a] = scan(&sim, &active, a);
        for c in 0..n {
            if c == a || !active[c] {
                continue;
            }
            match best[c] {
                Some((_, j)) if j == a || j == b => best[c] = scan(&sim, &active, c),
                Some((bs, j)) => {
                    let v = sim[c * n + a];
                    if v > bs || (v == bs && a < j) {
                        best[c] = Some((v, a));
                    }
                }
                None => best[c] = scan(&sim, &active, c),
            }
        }

        let q = state.value();
        trace.push(MergeStep {
            cluster_a: a,
            cluster_b: b,
            similarity: s,
            semq_after: q,
            clusters_after: state.clusters,
        });
        if q > best_semq {
            best_semq = q;
            best_step = trace.len();
        }
        if cfg.stop_rule == StopRule::FirstStall && q - prev <= cfg.epsilon {
            break;
        }
        prev = q;
    }

    let clusters = replay(n, &trace[..best_step]);
    Ok(ClusterSet {
        items: ssim.items.clone(),
        clusters,
        merge_trace: trace,
        initial_semq: initial,
        best_semq,
        best_step,
    })
}

/// Applies the first merges of a trace to the singleton partition.
pub fn replay(n: usize, steps: &[MergeStep]) -> Vec<Vec<usize>> {
    let mut slots: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    for step in steps {
        let moved = slots[step.cluster_b].take().expect("merged slot is live");
        slots[step.cluster_a]
            .as_mut()
            .expect("kept slot is live")
            .extend(moved);
    }
    slots
        .into_iter()
        .flatten()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect()
}
