//! Event-event similarity matrices.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_model::Dataset;
use crate::spectral::LatentEmbedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    UserLatent,
    SemanticLatent,
    Combined,
}

/// Dense symmetric similarity matrix over an ordered set of events.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub items: Vec<String>,
    pub kind: SimilarityKind,
    values: Vec<f64>,
}

/// Latent vectors shorter than this are treated as zero.
const ZERO_NORM: f64 = 1e-10;

impl SimilarityMatrix {
    /// Builds a matrix from row-major values. Panics if the size does not match.
    pub fn from_values(items: Vec<String>, kind: SimilarityKind, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), items.len() * items.len());
        SimilarityMatrix {
            items,
            kind,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.items.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Zeroes every off-diagonal entry whose pair is not in `pairs`.
    pub fn restrict_to(&self, pairs: &BTreeSet<(usize, usize)>) -> SimilarityMatrix {
        let n = self.len();
        let mut values = self.values.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j && !pairs.contains(&(i.min(j), i.max(j))) {
                    values[i * n + j] = 0.0;
                }
            }
        }
        SimilarityMatrix {
            items: self.items.clone(),
            kind: self.kind,
            values,
        }
    }

    /// Upper-triangle rows `(event_i, event_j, value)` with `i < j`.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            (i + 1..n).map(move |j| {
                (
                    self.items[i].as_str(),
                    self.items[j].as_str(),
                    self.get(i, j),
                )
            })
        })
    }
}

/// Pairwise cosine of the embedding rows. Zero vectors are similar to nothing,
/// including themselves.
pub fn cosine_similarity_matrix(e: &LatentEmbedding, kind: SimilarityKind) -> SimilarityMatrix {
    let n = e.vectors.len();
    let norms: Vec<f64> = e
        .vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        if norms[i] <= ZERO_NORM {
            continue;
        }
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            if norms[j] <= ZERO_NORM {
                continue;
            }
            let dot: f64 = e.vectors[i]
                .iter()
                .zip(&e.vectors[j])
                .map(|(a, b)| a * b)
                .sum();
            let c = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    SimilarityMatrix {
        items: e.items.clone(),
        kind,
        values,
    }
}

/// `alpha * su + (1 - alpha) * st`. The endpoints return the inputs unchanged.
pub fn combine_similarities(
    su: &SimilarityMatrix,
    st: &SimilarityMatrix,
    alpha: f64,
) -> Result<SimilarityMatrix> {
    if su.items != st.items {
        return Err(Error::ItemMismatch);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside [0,1]"
        )));
    }
    let values = if alpha == 1.0 {
        su.values.clone()
    } else if alpha == 0.0 {
        st.values.clone()
    } else {
        su.values
            .iter()
            .zip(&st.values)
            .map(|(u, t)| alpha * u + (1.0 - alpha) * t)
            .collect()
    };
    Ok(SimilarityMatrix {
        items: su.items.clone(),
        kind: SimilarityKind::Combined,
        values,
    })
}

/// Event index pairs `(i, j)`, `i < j`, sharing at least `min_shared` users
/// or at least `min_shared` tags. Indices follow `d.events` order.
pub fn candidate_pairs(d: &Dataset, min_shared: usize) -> Result<BTreeSet<(usize, usize)>> {
    if min_shared < 1 {
        return Err(Error::InvalidArgument(
            "min_shared must be at least 1".into(),
        ));
    }
    let index: BTreeMap<&str, usize> = d
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    let mut out = BTreeSet::new();
    for edges in [&d.event_users, &d.event_tags] {
        let mut by_attr: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (e, x) in edges.iter() {
            if let Some(&i) = index.get(e.as_str()) {
                by_attr.entry(x.as_str()).or_default().push(i);
            }
        }
        let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for evs in by_attr.values() {
            for (a, &i) in evs.iter().enumerate() {
                for &j in &evs[a + 1..] {
                    *shared.entry((i.min(j), i.max(j))).or_default() += 1;
                }
            }
        }
        out.extend(
            shared
                .into_iter()
                .filter(|&(_, n)| n >= min_shared)
                .map(|(p, _)| p),
        );
    }
    Ok(out)
}
