//! Degree-normalized bipartite matrices and their truncated singular
//! vectors, used to place events in a latent user or tag space.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph_model::Dataset;

/// Sparse nonnegative event x (user|tag) matrix with its degree diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// `(row, col, value)` sorted by row then column.
    pub entries: Vec<(usize, usize, f64)>,
    pub row_degrees: Vec<f64>,
    pub col_degrees: Vec<f64>,
}

impl BipartiteMatrix {
    /// Builds the matrix, merging duplicate coordinates by addition.
    /// Every row and column must have positive degree.
    pub fn new(
        rows: Vec<String>,
        cols: Vec<String>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<BipartiteMatrix> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= rows.len() || c >= cols.len() {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside {}x{} matrix",
                    rows.len(),
                    cols.len()
                )));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) = {v} is not a nonnegative number"
                )));
            }
            *merged.entry((r, c)).or_default() += v;
        }
        let entries: Vec<(usize, usize, f64)> = merged
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        let mut row_degrees = vec![0.0; rows.len()];
        let mut col_degrees = vec![0.0; cols.len()];
        for &(r, c, v) in &entries {
            row_degrees[r] += v;
            col_degrees[c] += v;
        }
        if let Some(i) = row_degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree {
                axis: "row",
                id: rows[i].clone(),
            });
        }
        if let Some(j) = col_degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree {
                axis: "column",
                id: cols[j].clone(),
            });
        }
        Ok(BipartiteMatrix {
            rows,
            cols,
            entries,
            row_degrees,
            col_degrees,
        })
    }

    /// Event x user incidence matrix.
    pub fn event_user(d: &Dataset) -> Result<BipartiteMatrix> {
        let cols: Vec<String> = d.users.iter().cloned().collect();
        Self::incidence(d, cols, d.event_users.iter())
    }

    /// Event x tag incidence matrix.
    pub fn event_tag(d: &Dataset) -> Result<BipartiteMatrix> {
        let cols: Vec<String> = d.tags.iter().cloned().collect();
        Self::incidence(d, cols, d.event_tags.iter())
    }

    fn incidence<'a>(
        d: &Dataset,
        cols: Vec<String>,
        edges: impl Iterator<Item = &'a (String, String)>,
    ) -> Result<BipartiteMatrix> {
        let rows = d.event_ids();
        let row_ix: BTreeMap<&str, usize> = rows
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        let col_ix: BTreeMap<&str, usize> = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let entries: Vec<(usize, usize, f64)> = edges
            .filter_map(|(e, c)| Some((*row_ix.get(e.as_str())?, *col_ix.get(c.as_str())?, 1.0)))
            .collect();
        BipartiteMatrix::new(rows, cols, entries)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let (m, n) = self.shape();
        let mut out = vec![vec![0.0; n]; m];
        for &(r, c, v) in &self.entries {
            out[r][c] = v;
        }
        out
    }

    /// `self * x` for a column-space vector `x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows.len()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// `self^T * y` for a row-space vector `y`.
    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.cols.len()];
        for &(r, c, v) in &self.entries {
            x[c] += v * y[r];
        }
        x
    }
}

/// `D1^{-1/2} A D2^{-1/2}`; the sparsity pattern is unchanged and the
/// returned degrees are those of the normalized entries.
pub fn normalize_bipartite(a: &BipartiteMatrix) -> Result<BipartiteMatrix> {
    if let Some(i) = a.row_degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree {
            axis: "row",
            id: a.rows[i].clone(),
        });
    }
    if let Some(j) = a.col_degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree {
            axis: "column",
            id: a.cols[j].clone(),
        });
    }
    let entries = a
        .entries
        .iter()
        .map(|&(r, c, v)| (r, c, v / (a.row_degrees[r] * a.col_degrees[c]).sqrt()));
    BipartiteMatrix::new(a.rows.clone(), a.cols.clone(), entries)
}

/// Leading singular triplets in nonincreasing order of singular value.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Unit vectors of length `rows`.
    pub left: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// Unit vectors of length `cols`.
    pub right: Vec<Vec<f64>>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-15;
/// Column norm, relative to the Frobenius norm, below which a column counts as zero.
const NULL_COLUMN_REL: f64 = 1e-13;

/// One-sided Jacobi rotations on the columns of `cols` (each of equal length)
/// until they are mutually orthogonal. Returns the accumulated right rotation
/// (as columns) and the sweep count.
fn one_sided_jacobi(cols: &mut [Vec<f64>]) -> Result<(Vec<Vec<f64>>, usize)> {
    let n = cols.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    // columns this small relative to the whole matrix are rounding residue of
    // a rank deficiency; their direction is noise and never settles
    let floor = NULL_COLUMN_REL * NULL_COLUMN_REL * norms.iter().sum::<f64>();
    for sweep in 1..=MAX_SWEEPS {
        let mut worst = 0.0f64;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                let off = gamma.abs() / (alpha * beta).sqrt();
                worst = worst.max(off);
                if off <= ROTATION_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            return Ok((v, sweep));
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                residual: worst,
            });
        }
    }
    unreachable!()
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Extends `basis` with unit vectors of length `dim` orthogonal to it.
/// Each new vector is the standard basis vector with the largest residual
/// after projecting out everything chosen so far (twice, for stability).
fn complete_orthonormal(basis: &[Vec<f64>], dim: usize, want: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = basis.to_vec();
    let mut extra = Vec::new();
    while extra.len() < want && all.len() < dim {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            for _ in 0..2 {
                for b in &all {
                    let d: f64 = b.iter().zip(&e).map(|(x, y)| x * y).sum();
                    for (ek, bk) in e.iter_mut().zip(b) {
                        *ek -= d * bk;
                    }
                }
            }
            let nrm = norm(&e);
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, e));
            }
        }
        let Some((nrm, mut e)) = best else { break };
        e.iter_mut().for_each(|x| *x /= nrm);
        all.push(e.clone());
        extra.push(e);
    }
    extra
}

/// The `k + 1` leading singular triplets of `a`.
///
/// Signs are canonical: the largest-magnitude entry of each right vector is
/// positive. Left vectors belonging to numerically zero singular values are
/// completed to an orthonormal set.
pub fn truncated_svd(a: &BipartiteMatrix, k: usize) -> Result<Svd> {
    let (m, n) = a.shape();
    let want = k + 1;
    if want > m.min(n) {
        return Err(Error::Dimension {
            requested: want,
            rows: m,
            cols: n,
        });
    }
    let dense = a.to_dense();
    // Rotate the shorter side: columns of A when m >= n, else columns of A^T.
    let transposed = m < n;
    let mut work: Vec<Vec<f64>> = if transposed {
        dense
    } else {
        (0..n)
            .map(|j| dense.iter().map(|row| row[j]).collect())
            .collect()
    };
    let (rot, sweeps) = one_sided_jacobi(&mut work)?;

    let mut order: Vec<(f64, usize)> = work.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    order.truncate(want);

    let sigma_max = order.first().map_or(0.0, |o| o.0);
    let zero_tol = 1e-13 * sigma_max.max(1.0) * (m.max(n) as f64);

    let mut singular_values = Vec::with_capacity(want);
    // `outer` vectors live on the rotated side's row space, `inner` are from `rot`.
    let mut outer: Vec<Option<Vec<f64>>> = Vec::with_capacity(want);
    let mut inner: Vec<Vec<f64>> = Vec::with_capacity(want);
    for &(s, j) in &order {
        if s > zero_tol {
            singular_values.push(s);
            outer.push(Some(work[j].iter().map(|x| x / s).collect()));
        } else {
            singular_values.push(0.0);
            outer.push(None);
        }
        inner.push(rot[j].clone());
    }
    let outer_dim = work.first().map_or(0, |c| c.len());
    let known: Vec<Vec<f64>> = outer.iter().flatten().cloned().collect();
    let missing = outer.iter().filter(|o| o.is_none()).count();
    let mut fill = complete_orthonormal(&known, outer_dim, missing).into_iter();
    let outer: Vec<Vec<f64>> = outer
        .into_iter()
        .map(|o| o.unwrap_or_else(|| fill.next().expect("completion dimension")))
        .collect();

    let (mut left, mut right) = if transposed {
        (inner, outer)
    } else {
        (outer, inner)
    };
    for (u, v) in left.iter_mut().zip(right.iter_mut()) {
        let pivot = v.iter().copied().fold(
            0.0f64,
            |best, x| if x.abs() > best.abs() { x } else { best },
        );
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(Svd {
        left,
        singular_values,
        right,
        sweeps,
    })
}

/// Event coordinates in a latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentEmbedding {
    pub items: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub k: usize,
}

/// `D1^{-1/2} A_n V'` where `V'` holds right singular vectors 2..=k+1 of
/// the normalized matrix (the principal vector is dropped).
pub fn latent_embedding(a: &BipartiteMatrix, svd: &Svd, k: usize) -> Result<LatentEmbedding> {
    if svd.right.len() < k + 1 {
        return Err(Error::Dimension {
            requested: k + 1,
            rows: a.rows.len(),
            cols: svd.right.len(),
        });
    }
    let an = normalize_bipartite(a)?;
    let m = a.rows.len();
    let mut vectors = vec![vec![0.0; k]; m];
    for (c, v) in svd.right[1..=k].iter().enumerate() {
        let col = an.mul_vec(v);
        for (i, x) in col.into_iter().enumerate() {
            vectors[i][c] = x / a.row_degrees[i].sqrt();
        }
    }
    Ok(LatentEmbedding {
        items: a.rows.clone(),
        vectors,
        k,
    })
}

/// Normalizes, decomposes and embeds in one step.
pub fn embed_events(a: &BipartiteMatrix, k: usize) -> Result<(LatentEmbedding, Svd)> {
    let an = normalize_bipartite(a)?;
    let svd = truncated_svd(&an, k)?;
    let emb = latent_embedding(a, &svd, k)?;
    Ok((emb, svd))
}
