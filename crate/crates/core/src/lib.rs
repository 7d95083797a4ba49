//! Topical, overlapping community detection in event-based social networks.
//!
//! Events are embedded in two latent spaces (by participants and by tags)
//! through the singular vectors of degree-normalized bipartite matrices.
//! Cosine similarities in both spaces are mixed, events are merged
//! agglomeratively while semantic modularity improves, and users join the
//! event clusters where most of their co-participation links fall.
//!
//! ```no_run
//! use semcom::{detect, load_dataset, Config, InputFiles, TopicMap};
//!
//! let files = InputFiles::from_dir("data");
//! let raw = load_dataset(&files)?;
//! let topics = TopicMap::load(&files.tag_topic, &raw)?;
//! let cfg = Config::default();
//! let run = detect(&raw, &cfg)?;
//! let report = run.report(&topics, &cfg);
//! println!("purity {:.3} Q {:.3}", report.aggregate.purity, report.aggregate.q);
//! # Ok::<(), semcom::Error>(())
//! ```

pub mod baseline;
pub mod clustering;
pub mod config;
pub mod error;
pub mod graph_model;
pub mod membership;
pub mod metrics;
pub mod output;
pub mod pipeline;
pub mod similarity;
pub mod spectral;
pub mod synthgen;

pub use baseline::greedy_modularity;
pub use clustering::{agglomerative_cluster, inter_sem, intra_sem, sem_q, ClusterSet, MergeStep};
pub use config::{Config, StopRule};
pub use error::{Error, Result};
pub use graph_model::{
    load_dataset, prune_dataset, user_user_projection, Dataset, InputFiles, UserGraph,
};
pub use membership::{assign_users, assignment_score, Community, CommunitySet};
pub use metrics::{
    conductance, f_purity, friend_fraction, newman_q, overlap_degrees, profile_similarity_fraction,
    purity, purq_beta, silhouette, TopicMap,
};
pub use pipeline::{detect, run_sweep, Detection, MetricsReport};
pub use similarity::{
    candidate_pairs, combine_similarities, cosine_similarity_matrix, SimilarityKind,
    SimilarityMatrix,
};
pub use spectral::{
    embed_events, latent_embedding, normalize_bipartite, truncated_svd, BipartiteMatrix,
    LatentEmbedding, Svd,
};
pub use synthgen::{generate_planted_esbn, PlantedNetwork, PlantedSpec};
