//! Greedy agglomerative modularity maximization (Clauset-Newman-Moore) on
//! the unweighted user graph.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph_model::UserGraph;
use crate::membership::{Community, CommunitySet};

/// Merges communities while some merge raises Q, always taking the largest
/// gain; ties go to the smallest pair of community keys (smallest member).
/// Communities carry users only.
pub fn greedy_modularity(g: &UserGraph) -> Result<CommunitySet> {
    let labels = greedy_modularity_labels(g)?;
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (v, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(g.nodes[v].clone());
    }
    let communities = groups
        .into_values()
        .enumerate()
        .map(|(id, users)| Community {
            id,
            events: Vec::new(),
            scores: users.iter().map(|u| (u.clone(), 1.0)).collect(),
            users,
        })
        .collect();
    Ok(CommunitySet {
        communities,
        dropped_empty: 0,
    })
}

/// Community key (smallest node index) of every node.
pub fn greedy_modularity_labels(g: &UserGraph) -> Result<Vec<usize>> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::EdgelessGraph);
    }
    let n = g.node_count();
    let m = m as f64;
    // a[i]: fraction of edge endpoints in community i
    let mut a: Vec<f64> = (0..n).map(|v| g.degree(v) as f64 / (2.0 * m)).collect();
    // links[i][j]: number of edges between communities i and j
    let mut links: Vec<BTreeMap<usize, usize>> = (0..n)
        .map(|v| g.neighbors(v).map(|w| (w, 1usize)).collect())
        .collect();
    let mut label: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];

    let gain = |links: &[BTreeMap<usize, usize>], a: &[f64], i: usize, j: usize| -> f64 {
        links[i][&j] as f64 / m - 2.0 * a[i] * a[j]
    };
    let row_best =
        |links: &[BTreeMap<usize, usize>], a: &[f64], i: usize| -> Option<(f64, usize)> {
            let mut best: Option<(f64, usize)> = None;
            for &j in links[i].keys() {
                let dq = gain(links, a, i, j);
                if best.is_none_or(|(b, _)| dq > b) {
                    best = Some((dq, j));
                }
            }
            best
        };
    let mut best: Vec<Option<(f64, usize)>> = (0..n).map(|i| row_best(&links, &a, i)).collect();

    loop {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            if let Some((dq, j)) = best[i] {
                let key = (i.min(j), i.max(j));
                let better = match pick {
                    None => true,
                    Some((p, lo, hi)) => dq > p || (dq == p && key < (lo, hi)),
                };
                if better {
                    pick = Some((dq, key.0, key.1));
                }
            }
        }
        let Some((dq, keep, gone)) = pick else { break };
        if dq <= 0.0 {
            break;
        }

        let moved = std::mem::take(&mut links[gone]);
        for (k, w) in moved {
            if k == keep {
                continue;
            }
            *links[keep].entry(k).or_default() += w;
            let back = links[k].remove(&gone).unwrap_or(0);
            *links[k].entry(keep).or_default() += back;
        }
        links[keep].remove(&gone);
        a[keep] += a[gone];
        a[gone] = 0.0;
        alive[gone] = false;
        for l in label.iter_mut() {
            if *l == gone {
                *l = keep;
            }
        }

        best[gone] = None;
        // a[keep] changed, so every neighbor's gain toward keep changed
        let touched: Vec<usize> = links[keep].keys().copied().collect();
        best[keep] = row_best(&links, &a, keep);
        for k in touched {
            best[k] = row_best(&links, &a, k);
        }
    }
    Ok(label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::newman_q;

    fn graph(n: usize, edges: &[(usize, usize)]) -> UserGraph {
        UserGraph::from_edges((0..n).map(|i| format!("u{i:02}")).collect(), edges)
    }

    fn clique(nodes: &[usize]) -> Vec<(usize, usize)> {
        let mut e = vec![];
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                e.push((a, b));
            }
        }
        e
    }

    #[test]
    fn single_clique_merges_fully() {
        let g = graph(5, &clique(&[0, 1, 2, 3, 4]));
        let cs = greedy_modularity(&g).unwrap();
        assert_eq!(cs.communities.len(), 1);
    }

    #[test]
    fn components_never_merge() {
        let mut e = clique(&[0, 1, 2]);
        e.extend(clique(&[3, 4, 5]));
        e.push((6, 7));
        let cs = greedy_modularity(&graph(8, &e)).unwrap();
        assert_eq!(cs.communities.len(), 3);
    }

    #[test]
    fn reported_partition_matches_recomputed_q() {
        let mut e = clique(&[0, 1, 2, 3]);
        e.extend(clique(&[4, 5, 6, 7]));
        e.push((3, 4));
        let g = graph(8, &e);
        let cs = greedy_modularity(&g).unwrap();
        assert_eq!(cs.communities.len(), 2);
        let q = newman_q(&cs, &g).unwrap();
        // two K4 joined by one edge: m = 13
        let expected = 2.0 * (6.0 / 13.0 - (13.0f64 / 26.0).powi(2));
        assert!((q - expected).abs() < 1e-12);
    }

    #[test]
    fn edgeless_is_an_error() {
        assert!(matches!(
            greedy_modularity(&graph(3, &[])),
            Err(Error::EdgelessGraph)
        ));
    }
}
