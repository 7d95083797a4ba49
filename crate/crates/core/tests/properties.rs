use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use semcom::baseline::{greedy_modularity, greedy_modularity_labels};
use semcom::clustering::replay;
use semcom::metrics::{conductance_of_set, modularity_of_labels};
use semcom::synthgen::{generate_planted_esbn, Participation, PlantedSpec};
use semcom::*;

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (
        prop::collection::vec((0..8usize, 0..12usize), 1..48),
        prop::collection::vec((0..8usize, 0..5usize), 1..32),
    )
        .prop_map(|(eu, et)| {
            Dataset::from_edges(
                eu.into_iter()
                    .map(|(e, u)| (format!("e{e}"), format!("u{u:02}"))),
                et.into_iter()
                    .map(|(e, t)| (format!("e{e}"), format!("t{t}"))),
                Vec::<(String, String)>::new(),
                Vec::<(String, String)>::new(),
            )
        })
}

fn graph_strategy() -> impl Strategy<Value = UserGraph> {
    (2..12usize)
        .prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 1..40)))
        .prop_map(|(n, edges)| {
            let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
            UserGraph::from_edges((0..n).map(|i| format!("u{i:02}")).collect(), &edges)
        })
}

fn similarity_strategy(max: usize) -> impl Strategy<Value = SimilarityMatrix> {
    (2..=max)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(-1.0f64..1.0, n * n)))
        .prop_map(|(n, raw)| {
            let mut v = vec![0.0; n * n];
            for i in 0..n {
                v[i * n + i] = 1.0;
                for j in i + 1..n {
                    v[i * n + j] = raw[i * n + j];
                    v[j * n + i] = raw[i * n + j];
                }
            }
            SimilarityMatrix::from_values(
                (0..n).map(|i| format!("e{i}")).collect(),
                SimilarityKind::SemanticLatent,
                v,
            )
        })
}

fn loose() -> Config {
    Config {
        min_tag_freq: 0,
        svd_k: 2,
        ..Config::default()
    }
}

fn components(g: &UserGraph) -> usize {
    let mut seen = vec![false; g.node_count()];
    let mut count = 0;
    for s in 0..g.node_count() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_symmetric_and_bounded(d in dataset_strategy()) {
        let Ok(g) = user_user_projection(&d) else { return Ok(()) };
        let attendance = d.attendance();
        for a in 0..g.node_count() {
            for b in 0..g.node_count() {
                prop_assert_eq!(g.weight(a, b), g.weight(b, a));
                if a != b {
                    let ea = attendance.get(g.nodes[a].as_str()).map_or(0, Vec::len);
                    let eb = attendance.get(g.nodes[b].as_str()).map_or(0, Vec::len);
                    prop_assert!(g.weight(a, b) as usize <= ea.min(eb));
                }
            }
        }
    }

    #[test]
    fn prune_is_idempotent(d in dataset_strategy(), freq in 0..4usize) {
        let cfg = Config { min_tag_freq: freq, ..Config::default() };
        if let Ok(once) = prune_dataset(&d, &cfg) {
            let twice = prune_dataset(&once, &cfg).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn combine_endpoints_and_bound(a in similarity_strategy(6), alpha in 0.0f64..=1.0) {
        let n = a.len();
        let b = SimilarityMatrix::from_values(
            a.items.clone(),
            SimilarityKind::SemanticLatent,
            a.values().iter().map(|x| x * 0.5).collect(),
        );
        let s0 = combine_similarities(&a, &b, 0.0).unwrap();
        let s1 = combine_similarities(&a, &b, 1.0).unwrap();
        prop_assert_eq!(s0.values(), b.values());
        prop_assert_eq!(s1.values(), a.values());
        let s = combine_similarities(&a, &b, alpha).unwrap();
        for i in 0..n {
            for j in 0..n {
                let bound = a.get(i, j).abs().max(b.get(i, j).abs());
                prop_assert!(s.get(i, j).abs() <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn candidates_cover_every_shared_user_pair(d in dataset_strategy()) {
        let Ok(pairs) = candidate_pairs(&d, 1) else { return Ok(()) };
        let ids = d.event_ids();
        let parts = d.participants();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let a: BTreeSet<&str> = parts.get(ids[i].as_str()).into_iter().flatten().copied().collect();
                let shared = parts.get(ids[j].as_str()).into_iter().flatten().any(|u| a.contains(u));
                if shared {
                    prop_assert!(pairs.contains(&(i, j)), "pair ({}, {}) missing", i, j);
                }
            }
        }
    }

    #[test]
    fn clustering_trace_is_a_partition_chain(s in similarity_strategy(9), singleton in prop::bool::ANY) {
        let cfg = Config {
            min_clusters: 1,
            singleton_intra: if singleton { 1.0 } else { 0.0 },
            ..Config::default()
        };
        let n = s.len();
        let cs = agglomerative_cluster(&s, &s, &cfg).unwrap();
        let mut best = cs.initial_semq;
        for (step, m) in cs.merge_trace.iter().enumerate() {
            let part = replay(n, &cs.merge_trace[..=step]);
            let mut all: Vec<usize> = part.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(part.len(), m.clusters_after);
            prop_assert!((sem_q(&part, &s, cfg.singleton_intra) - m.semq_after).abs() < 1e-9);
            best = best.max(m.semq_after);
        }
        prop_assert_eq!(cs.best_semq, best);
        prop_assert!((sem_q(&cs.clusters, &s, cfg.singleton_intra) - cs.best_semq).abs() < 1e-9);
        if let Some(last) = cs.merge_trace.last() {
            prop_assert!(cs.best_semq >= last.semq_after);
        }
        let again = agglomerative_cluster(&s, &s, &cfg).unwrap();
        prop_assert_eq!(cs.merge_trace, again.merge_trace);
    }

    #[test]
    fn every_attending_user_keeps_a_membership(d in dataset_strategy()) {
        let Ok(det) = detect(&d, &loose()) else { return Ok(()) };
        let mut covered: BTreeSet<&str> = BTreeSet::new();
        for c in &det.communities.communities {
            for u in &c.users {
                let s = c.scores[u];
                prop_assert!((0.0..=1.0).contains(&s));
                covered.insert(u);
            }
        }
        // a user is only dropped if every event they attend sits in dropped clusters; that
        // cannot happen because a cluster with events has participants
        for u in &det.dataset.users {
            prop_assert!(covered.contains(u.as_str()), "user {} lost every membership", u);
        }
    }

    #[test]
    fn metric_ranges(d in dataset_strategy()) {
        let Ok(det) = detect(&d, &loose()) else { return Ok(()) };
        let topics = TopicMap::from_pairs((0..5).map(|t| (format!("t{t}"), format!("T{}", t % 2))));
        let r = det.report(&topics, &loose());
        let a = &r.aggregate;
        if det.graph.edge_count() > 0 {
            prop_assert!((-0.5..1.0).contains(&a.q));
        }
        prop_assert!((0.0..=1.0).contains(&a.purity));
        prop_assert!((0.0..=1.0).contains(&a.f_purity));
        for c in &r.per_community {
            prop_assert!((0.0..=1.0).contains(&c.conductance));
        }
        for p in &a.purq {
            prop_assert!(p.value.is_finite() && p.value >= 0.0);
        }
    }

    #[test]
    fn conductance_of_complement_matches(g in graph_strategy(), mask in prop::collection::vec(prop::bool::ANY, 12)) {
        let n = g.node_count();
        let s: BTreeSet<usize> = (0..n).filter(|&i| mask[i]).collect();
        let rest: BTreeSet<usize> = (0..n).filter(|&i| !mask[i]).collect();
        let (a, b) = (conductance_of_set(&s, &g), conductance_of_set(&rest, &g));
        prop_assert!((a - b).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn purq_fixed_point(x in 0.0f64..=1.0, beta in 0.01f64..10.0) {
        prop_assert!((purq_beta(x, x, beta) - x).abs() < 1e-12);
    }

    #[test]
    fn baseline_is_improving_disjoint_partition(g in graph_strategy()) {
        prop_assume!(g.edge_count() > 0);
        let cs = greedy_modularity(&g).unwrap();
        let mut seen = BTreeSet::new();
        for c in &cs.communities {
            prop_assert!(c.events.is_empty());
            for u in &c.users {
                prop_assert!(seen.insert(u.clone()), "{} in two communities", u);
            }
        }
        prop_assert_eq!(seen.len(), g.node_count());
        let labels = greedy_modularity_labels(&g).unwrap();
        let q = modularity_of_labels(&g, &labels).unwrap();
        let singletons = modularity_of_labels(&g, &(0..g.node_count()).collect::<Vec<_>>()).unwrap();
        prop_assert!(q >= singletons - 1e-15);
        prop_assert!((newman_q(&cs, &g).unwrap() - q).abs() < 1e-12);
    }
}

fn dense_matrix(rows: &[Vec<f64>]) -> Option<BipartiteMatrix> {
    let entries: Vec<(usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)))
        .collect();
    BipartiteMatrix::new(
        (0..rows.len()).map(|i| format!("r{i:02}")).collect(),
        (0..rows[0].len()).map(|j| format!("c{j:02}")).collect(),
        entries,
    )
    .ok()
}

fn binary_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3..9usize, 3..9usize).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.5), n), m).prop_map(
            |rows| {
                rows.into_iter()
                    .map(|r| r.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
                    .collect()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn full_svd_reconstructs_the_matrix(rows in binary_rows()) {
        let Some(a) = dense_matrix(&rows) else { return Ok(()) };
        let an = normalize_bipartite(&a).unwrap();
        let (m, n) = a.shape();
        let r = m.min(n);
        let svd = truncated_svd(&an, r - 1).unwrap();
        let dense = a.to_dense();
        for (i, row) in dense.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                let mut x = 0.0;
                for t in 0..r {
                    x += svd.left[t][i] * svd.singular_values[t] * svd.right[t][j];
                }
                let back = x * (a.row_degrees[i] * a.col_degrees[j]).sqrt();
                prop_assert!((back - want).abs() < 1e-6, "({}, {}): {} vs {}", i, j, back, want);
            }
        }
    }

    #[test]
    fn embedding_survives_column_relabeling(rows in binary_rows(), seed in any::<u64>()) {
        let Some(a) = dense_matrix(&rows) else { return Ok(()) };
        let (m, n) = a.shape();
        let k = (m.min(n) - 1).min(2);
        let an = normalize_bipartite(&a).unwrap();
        let full = truncated_svd(&an, m.min(n) - 1).unwrap();
        // the embedding is only determined up to rotation inside repeated singular values
        let sv = &full.singular_values;
        let separated = (0..=k).all(|t| t + 1 >= sv.len() || (sv[t] - sv[t + 1]).abs() > 1e-6);
        prop_assume!(separated);

        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let b = dense_matrix(&permuted).unwrap();
        let (ea, _) = embed_events(&a, k).unwrap();
        let (eb, _) = embed_events(&b, k).unwrap();
        for c in 0..k {
            let dot: f64 = (0..m).map(|i| ea.vectors[i][c] * eb.vectors[i][c]).sum();
            let sign = if dot < 0.0 { -1.0 } else { 1.0 };
            for i in 0..m {
                prop_assert!((ea.vectors[i][c] - sign * eb.vectors[i][c]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn planted_without_cross_edges_splits_into_topics() {
    for seed in 1..=3 {
        let spec = PlantedSpec {
            p_out: 0.0,
            rng_seed: seed,
            ..PlantedSpec::default()
        };
        let net = generate_planted_esbn(&spec).unwrap();
        let g = user_user_projection(&net.dataset).unwrap();
        assert_eq!(components(&g), spec.n_topics, "seed {seed}");
    }
}

#[test]
fn power_law_activity_is_heavy_tailed() {
    let attendance_counts = |participation| {
        let spec = PlantedSpec {
            participation,
            users_per_topic: 200,
            events_per_topic: 40,
            p_in: 0.05,
            p_out: 0.005,
            ..PlantedSpec::default()
        };
        let net = generate_planted_esbn(&spec).unwrap();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, u) in &net.dataset.event_users {
            *counts.entry(u.as_str()).or_default() += 1;
        }
        let mut v: Vec<usize> = counts.into_values().collect();
        v.sort_unstable();
        v
    };
    let uniform = attendance_counts(Participation::Uniform);
    let heavy = attendance_counts(Participation::PowerLaw);
    let ratio =
        |v: &[usize]| *v.last().unwrap() as f64 / (v.iter().sum::<usize>() as f64 / v.len() as f64);
    assert!(
        ratio(&heavy) > 2.0 * ratio(&uniform),
        "max/mean {} vs {}",
        ratio(&heavy),
        ratio(&uniform)
    );
}
