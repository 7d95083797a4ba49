//! End-to-end detection: prune, embed, compare events, cluster, assign users,
//! then score the result.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::baseline::greedy_modularity;
use crate::clustering::{agglomerative_cluster, ClusterSet};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph_model::{prune_dataset, user_user_projection, Dataset, UserGraph};
use crate::membership::{assign_users, CommunitySet};
use crate::metrics::{
    conductance, f_purity, friend_fraction, newman_q, overlap_degrees, profile_similarity_fraction,
    purity, purq_beta, silhouette, OverlapEdge, TopicMap,
};
use crate::similarity::{
    candidate_pairs, combine_similarities, cosine_similarity_matrix, SimilarityKind,
    SimilarityMatrix,
};
use crate::spectral::{embed_events, BipartiteMatrix, LatentEmbedding};

/// Everything produced by one detection run.
#[derive(Debug, Clone)]
pub struct Detection {
    pub dataset: Dataset,
    pub graph: UserGraph,
    pub user_embedding: LatentEmbedding,
    pub tag_embedding: LatentEmbedding,
    pub su: SimilarityMatrix,
    pub st: SimilarityMatrix,
    pub ssim: SimilarityMatrix,
    pub clusters: ClusterSet,
    pub communities: CommunitySet,
    pub spectra: SpectralStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub user_k: usize,
    pub tag_k: usize,
    pub user_sigma1: f64,
    pub tag_sigma1: f64,
}

fn effective_k(requested: usize, a: &BipartiteMatrix, what: &str) -> Result<usize> {
    let (m, n) = a.shape();
    let cap = m.min(n).saturating_sub(1);
    if cap == 0 {
        return Err(Error::Dimension {
            requested: requested + 1,
            rows: m,
            cols: n,
        });
    }
    if requested > cap {
        warn!("{what} matrix is {m}x{n}; using {cap} latent dimensions instead of {requested}");
    }
    Ok(requested.min(cap))
}

/// Latent embeddings and similarity matrices of a pruned dataset.
#[derive(Debug, Clone)]
pub struct SimilarityStage {
    pub user_embedding: LatentEmbedding,
    pub tag_embedding: LatentEmbedding,
    pub su: SimilarityMatrix,
    pub st: SimilarityMatrix,
    pub spectra: SpectralStats,
}

pub fn similarity_stage(d: &Dataset, cfg: &Config) -> Result<SimilarityStage> {
    let eu = BipartiteMatrix::event_user(d)?;
    let et = BipartiteMatrix::event_tag(d)?;
    let user_k = effective_k(cfg.svd_k, &eu, "event-user")?;
    let tag_k = effective_k(cfg.svd_k, &et, "event-tag")?;
    let (user_embedding, user_svd) = embed_events(&eu, user_k)?;
    let (tag_embedding, tag_svd) = embed_events(&et, tag_k)?;
    let su = cosine_similarity_matrix(&user_embedding, SimilarityKind::UserLatent);
    let st = cosine_similarity_matrix(&tag_embedding, SimilarityKind::SemanticLatent);
    Ok(SimilarityStage {
        user_embedding,
        tag_embedding,
        su,
        st,
        spectra: SpectralStats {
            user_k,
            tag_k,
            user_sigma1: user_svd.singular_values[0],
            tag_sigma1: tag_svd.singular_values[0],
        },
    })
}

/// From an already pruned dataset and its similarity stage.
pub fn detect_from_stage(d: Dataset, stage: SimilarityStage, cfg: &Config) -> Result<Detection> {
    cfg.validate()?;
    let graph = user_user_projection(&d)?;
    let mut ssim = combine_similarities(&stage.su, &stage.st, cfg.alpha)?;
    if cfg.min_shared > 0 {
        let pairs = candidate_pairs(&d, cfg.min_shared)?;
        info!("candidate selection kept {} event pairs", pairs.len());
        ssim = ssim.restrict_to(&pairs);
    }
    let clusters = agglomerative_cluster(&ssim, &stage.st, cfg)?;
    let communities = assign_users(&clusters, &d, &graph)?;
    Ok(Detection {
        dataset: d,
        graph,
        user_embedding: stage.user_embedding,
        tag_embedding: stage.tag_embedding,
        su: stage.su,
        st: stage.st,
        ssim,
        clusters,
        communities,
        spectra: stage.spectra,
    })
}

/// Runs the full pipeline on a raw (unpruned) dataset.
pub fn detect(raw: &Dataset, cfg: &Config) -> Result<Detection> {
    cfg.validate()?;
    let d = prune_dataset(raw, cfg)?;
    let stage = similarity_stage(&d, cfg)?;
    detect_from_stage(d, stage, cfg)
}

/// Static notes on how ambiguous quantities are computed, echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub inter_sem: String,
    pub intra_sem_singleton: String,
    pub modularity: String,
    pub purity: String,
    pub silhouette: String,
    pub friend_fraction: String,
}

impl Conventions {
    fn new(cfg: &Config) -> Self {
        Conventions {
            inter_sem: "mean of squared S_t over unordered cross-cluster pairs, divided by the cluster count".into(),
            intra_sem_singleton: format!("single-event clusters contribute {}", cfg.singleton_intra),
            modularity: "overlapping members projected to their highest-scoring community (ties: lowest id); unweighted edges; negative Q clamped to 0 inside PurQ only".into(),
            purity: "tag occurrences, one per event-tag edge; unmapped tags skipped; user-only communities use the events their members attend".into(),
            silhouette: "distance max(0, 1 - S_t); single-event clusters score 0".into(),
            friend_fraction: if cfg.friend_fraction_global {
                "pooled over all community-incident friend edges".into()
            } else {
                "mean over communities touching at least one friend edge".into()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub events: usize,
    pub users: usize,
    pub tags: usize,
    pub event_user_edges: usize,
    pub event_tag_edges: usize,
    pub friend_edges: usize,
    pub profiled_users: usize,
    pub user_graph_edges: usize,
    pub user_graph_density: f64,
    pub user_graph_clustering: f64,
}

impl DatasetStats {
    pub fn new(d: &Dataset, g: &UserGraph) -> Self {
        DatasetStats {
            events: d.events.len(),
            users: d.users.len(),
            tags: d.tags.len(),
            event_user_edges: d.event_users.len(),
            event_tag_edges: d.event_tags.len(),
            friend_edges: d.friends.len(),
            profiled_users: d.user_profiles.len(),
            user_graph_edges: g.edge_count(),
            user_graph_density: g.density(),
            user_graph_clustering: g.mean_clustering_coefficient(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringStats {
    pub event_clusters: usize,
    pub semq: f64,
    pub initial_semq: f64,
    pub merges_evaluated: usize,
    pub merges_applied: usize,
    pub spectra: Option<SpectralStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityMetrics {
    pub community_id: usize,
    pub size: usize,
    pub events: usize,
    pub purity: Option<f64>,
    pub conductance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurQ {
    pub beta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub purity: f64,
    pub f_purity: f64,
    pub q: f64,
    pub purq: Vec<PurQ>,
    pub silhouette: Option<f64>,
    pub friend_fraction: Option<f64>,
    pub profile_fraction: Option<f64>,
}

impl Aggregate {
    pub fn purq_at(&self, beta: f64) -> Option<f64> {
        self.purq.iter().find(|p| p.beta == beta).map(|p| p.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub config: Config,
    pub conventions: Conventions,
    pub dataset: DatasetStats,
    pub communities: usize,
    pub dropped_empty: usize,
    pub mean_community_size: f64,
    pub clustering: Option<ClusteringStats>,
    pub aggregate: Aggregate,
    pub per_community: Vec<CommunityMetrics>,
    pub overlap: Vec<OverlapEdge>,
}

/// Scores a community set. `clustering` carries the event partition and
/// `S_t` when the method produced one (silhouette needs both).
pub fn evaluate(
    method: &str,
    d: &Dataset,
    g: &UserGraph,
    cs: &CommunitySet,
    clustering: Option<(&ClusterSet, &SimilarityMatrix, Option<&SpectralStats>)>,
    topics: &TopicMap,
    cfg: &Config,
) -> MetricsReport {
    let pur = purity(cs, topics, d);
    let scored: Vec<f64> = pur.per_community.iter().flatten().copied().collect();
    let q = match newman_q(cs, g) {
        Ok(q) => q,
        Err(e) => {
            warn!("modularity unavailable ({e}); reporting 0");
            0.0
        }
    };
    let purq = cfg
        .betas
        .iter()
        .map(|&beta| PurQ {
            beta,
            value: purq_beta(pur.mean, q, beta),
        })
        .collect();
    let sil = clustering.and_then(|(c, st, _)| match silhouette(c, st) {
        Ok(v) => Some(v),
        Err(e) => {
            warn!("{e}");
            None
        }
    });
    let per_community = cs
        .communities
        .iter()
        .zip(&pur.per_community)
        .map(|(c, p)| CommunityMetrics {
            community_id: c.id,
            size: c.users.len(),
            events: c.events.len(),
            purity: *p,
            conductance: conductance(c, g),
        })
        .collect();
    MetricsReport {
        method: method.to_string(),
        config: cfg.clone(),
        conventions: Conventions::new(cfg),
        dataset: DatasetStats::new(d, g),
        communities: cs.communities.len(),
        dropped_empty: cs.dropped_empty,
        mean_community_size: cs.mean_size(),
        clustering: clustering.map(|(c, _, spectra)| ClusteringStats {
            event_clusters: c.clusters.len(),
            semq: c.best_semq,
            initial_semq: c.initial_semq,
            merges_evaluated: c.merge_trace.len(),
            merges_applied: c.best_step,
            spectra: spectra.cloned(),
        }),
        aggregate: Aggregate {
            purity: pur.mean,
            f_purity: f_purity(&scored),
            q,
            purq,
            silhouette: sil,
            friend_fraction: friend_fraction(cs, &d.friends, cfg.friend_fraction_global),
            profile_fraction: profile_similarity_fraction(cs, &d.user_profiles, cfg.profile_theta),
        },
        per_community,
        overlap: overlap_degrees(cs),
    }
}

impl Detection {
    pub fn report(&self, topics: &TopicMap, cfg: &Config) -> MetricsReport {
        evaluate(
            "semantic_modularity",
            &self.dataset,
            &self.graph,
            &self.communities,
            Some((&self.clusters, &self.st, Some(&self.spectra))),
            topics,
            cfg,
        )
    }
}

/// Greedy modularity communities on the pruned dataset of a detection run.
pub fn baseline_report(
    d: &Dataset,
    g: &UserGraph,
    topics: &TopicMap,
    cfg: &Config,
) -> Result<(CommunitySet, MetricsReport)> {
    let cs = greedy_modularity(g)?;
    let report = evaluate("greedy_modularity", d, g, &cs, None, topics, cfg);
    Ok((cs, report))
}

/// One CSV row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub purity: f64,
    pub f_purity: f64,
    pub q: f64,
    pub purq: f64,
    pub semq: f64,
    pub silhouette: Option<f64>,
    pub friend_fraction: Option<f64>,
    pub profile_fraction: Option<f64>,
    pub communities: usize,
    pub mean_size: f64,
    pub dropped_empty: usize,
}

pub fn sweep_rows(report: &MetricsReport) -> Vec<SweepRow> {
    report
        .aggregate
        .purq
        .iter()
        .map(|p| SweepRow {
            alpha: report.config.alpha,
            beta: p.beta,
            purity: report.aggregate.purity,
            f_purity: report.aggregate.f_purity,
            q: report.aggregate.q,
            purq: p.value,
            semq: report.clustering.as_ref().map_or(0.0, |c| c.semq),
            silhouette: report.aggregate.silhouette,
            friend_fraction: report.aggregate.friend_fraction,
            profile_fraction: report.aggregate.profile_fraction,
            communities: report.communities,
            mean_size: report.mean_community_size,
            dropped_empty: report.dropped_empty,
        })
        .collect()
}

/// Runs detection for every alpha (embeddings are computed once) and
/// returns one row per `(alpha, beta)`.
pub fn run_sweep(
    raw: &Dataset,
    topics: &TopicMap,
    base: &Config,
    alphas: &[f64],
    betas: &[f64],
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one alpha and one beta".into(),
        ));
    }
    let cfg0 = Config {
        betas: betas.to_vec(),
        ..base.clone()
    };
    cfg0.validate()?;
    let d = prune_dataset(raw, &cfg0)?;
    let stage = similarity_stage(&d, &cfg0)?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        let cfg = Config {
            alpha,
            ..cfg0.clone()
        };
        let det = detect_from_stage(d.clone(), stage.clone(), &cfg)?;
        rows.extend(sweep_rows(&det.report(topics, &cfg)));
    }
    Ok(rows)
}
