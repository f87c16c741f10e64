//! Intrinsic evaluation of real and binary embeddings: word similarity
//! (Spearman correlation of cosines against human scores), categorization
//! (k-means purity) and neighbor inspection.
//!
//! Binary codes are cast to ±1 reals before any vector arithmetic.
//! Out-of-vocabulary words are replaced by the mean of all embedding rows.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding_io::{
    BinaryEmbedding, CategorizationDataset, EmbeddingMatrix, SimilarityDataset,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Restarts used by [`kmeans_purity`] callers when none are given.
pub const DEFAULT_RESTARTS: usize = 10;
const KMEANS_MAX_ITERATIONS: usize = 300;

/// Read access to word vectors as reals.
pub trait WordVectors<T: Scalar> {
    fn vocab(&self) -> &[String];
    fn index_of(&self, token: &str) -> Option<usize>;
    fn dim(&self) -> usize;
    fn real_row(&self, i: usize) -> Vec<T>;

    /// Mean over all rows.
    fn mean_vector(&self) -> Vec<T> {
        let n = self.vocab().len();
        let mut mean = vec![T::zero(); self.dim()];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(self.real_row(i)) {
                *m += v;
            }
        }
        let n = T::of(n as f64);
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

impl<T: Scalar> WordVectors<T> for EmbeddingMatrix<T> {
    fn vocab(&self) -> &[String] {
        EmbeddingMatrix::vocab(self)
    }

    fn index_of(&self, token: &str) -> Option<usize> {
        EmbeddingMatrix::index_of(self, token)
    }

    fn dim(&self) -> usize {
        EmbeddingMatrix::dim(self)
    }

    fn real_row(&self, i: usize) -> Vec<T> {
        self.data().row(i).to_vec()
    }
}

impl<T: Scalar> WordVectors<T> for BinaryEmbedding {
    fn vocab(&self) -> &[String] {
        BinaryEmbedding::vocab(self)
    }

    fn index_of(&self, token: &str) -> Option<usize> {
        BinaryEmbedding::index_of(self, token)
    }

    fn dim(&self) -> usize {
        self.code_len()
    }

    fn real_row(&self, i: usize) -> Vec<T> {
        self.signs_of_row(i)
    }

    fn mean_vector(&self) -> Vec<T> {
        // count set bits per column instead of summing ±1 rows
        let c = self.code_len();
        let mut ones = vec![0u64; c];
        for i in 0..self.len() {
            let row = self.row(i);
            for (j, count) in ones.iter_mut().enumerate() {
                *count += u64::from(row[j / 8] >> (j % 8) & 1);
            }
        }
        let n = self.len() as f64;
        ones.into_iter()
            .map(|k| T::of((2.0 * k as f64 - n) / n))
            .collect()
    }
}

/// Looks up `token`, falling back to `fallback` when it is out of vocabulary.
fn vector_or<T: Scalar, E: WordVectors<T> + ?Sized>(
    emb: &E,
    token: &str,
    fallback: &[T],
) -> (Vec<T>, bool) {
    match emb.index_of(token) {
        Some(i) => (emb.real_row(i), false),
        None => (fallback.to_vec(), true),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityResult<T> {
    pub rho: T,
    pub n_pairs: usize,
    /// Pairs with at least one out-of-vocabulary word.
    pub n_oov: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PurityResult<T> {
    pub purity: T,
    pub k: usize,
    /// Cluster id per dataset item, in dataset order.
    pub assignments: Vec<usize>,
}

/// `xᵀy / (‖x‖·‖y‖)`.
pub fn cosine_similarity<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mut xy, mut xx, mut yy) = (T::zero(), T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        xy += *a * *b;
        xx += *a * *a;
        yy += *b * *b;
    }
    if xx == T::zero() || yy == T::zero() {
        return Err(Error::UndefinedSimilarity(
            "cosine with a zero vector".into(),
        ));
    }
    let cos = xy / (xx.sqrt() * yy.sqrt());
    Ok(cos.max(-T::one()).min(T::one()))
}

/// Dot product of two packed ±1 codes of `code_len` bits:
/// `2·popcount(!(a ^ b) & mask) - c`.
pub fn binary_dot(a: &[u8], b: &[u8], code_len: usize) -> Result<i64> {
    let bytes = code_len.div_ceil(8);
    if a.len() != bytes || b.len() != bytes {
        return Err(Error::Dimension(format!(
            "packed rows of {} and {} bytes for a {code_len}-bit code",
            a.len(),
            b.len()
        )));
    }
    let full = code_len / 8;
    let mut agree: u64 = 0;
    let (a_words, a_tail) = a[..full].split_at(full - full % 8);
    let (b_words, b_tail) = b[..full].split_at(full - full % 8);
    for (x, y) in a_words.chunks_exact(8).zip(b_words.chunks_exact(8)) {
        let x = u64::from_le_bytes(x.try_into().expect("8-byte chunk"));
        let y = u64::from_le_bytes(y.try_into().expect("8-byte chunk"));
        agree += u64::from((!(x ^ y)).count_ones());
    }
    for (x, y) in a_tail.iter().zip(b_tail) {
        agree += u64::from((!(x ^ y)).count_ones());
    }
    let rem = code_len % 8;
    if rem != 0 {
        let mask = (1u8 << rem) - 1;
        agree += u64::from((!(a[full] ^ b[full]) & mask).count_ones());
    }
    Ok(2 * agree as i64 - code_len as i64)
}

/// Ranks starting at 1; tied values share the mean of their rank range.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = T::of((start + 1 + end) as f64 / 2.0);
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = T::of(a.len() as f64);
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut ab, mut aa, mut bb) = (T::zero(), T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (*x - ma, *y - mb);
        ab += dx * dy;
        aa += dx * dx;
        bb += dy * dy;
    }
    (ab / (aa * bb).sqrt()).max(-T::one()).min(T::one())
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "lists of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::DegenerateRanking("need at least two values".into()));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in ranking".into()));
    }
    for (name, list) in [("first", a), ("second", b)] {
        if list.iter().all(|v| *v == list[0]) {
            return Err(Error::DegenerateRanking(format!("{name} list is constant")));
        }
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

/// Spearman correlation between model cosines and human scores.
pub fn eval_word_similarity<T: Scalar, E: WordVectors<T> + ?Sized>(
    emb: &E,
    ds: &SimilarityDataset,
) -> Result<SimilarityResult<T>> {
    if ds.pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mean = emb.mean_vector();
    let mut model = Vec::with_capacity(ds.pairs.len());
    let mut human = Vec::with_capacity(ds.pairs.len());
    let mut n_oov = 0;
    for (a, b, score) in &ds.pairs {
        let (va, oov_a) = vector_or(emb, a, &mean);
        let (vb, oov_b) = vector_or(emb, b, &mean);
        if oov_a || oov_b {
            n_oov += 1;
        }
        let sim = cosine_similarity(&va, &vb)
            .map_err(|e| Error::UndefinedSimilarity(format!("pair ({a}, {b}): {e}")))?;
        model.push(sim);
        human.push(T::of(*score));
    }
    if model.iter().all(|s| *s == model[0]) {
        return Err(Error::DegenerateRanking(
            "all model similarities are identical".into(),
        ));
    }
    let rho = spearman(&model, &human)?;
    Ok(SimilarityResult {
        rho,
        n_pairs: ds.pairs.len(),
        n_oov,
    })
}

/// Fraction of items whose cluster's majority label equals their own.
pub fn purity<T: Scalar>(assignments: &[usize], labels: &[usize]) -> T {
    assert_eq!(assignments.len(), labels.len());
    if assignments.is_empty() {
        return T::zero();
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let l = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; l]; k];
    for (&c, &y) in assignments.iter().zip(labels) {
        counts[c][y] += 1;
    }
    let correct: usize = counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    T::of(correct as f64 / assignments.len() as f64)
}

fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Result of one k-means run.
#[derive(Clone, Debug)]
pub struct KMeansFit<T> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    /// Within-cluster sum of squares.
    pub inertia: T,
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64) -> Result<KMeansFit<T>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "cluster count must be in 1..={n}, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids: Vec<Vec<T>> = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<T> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().map(|d| d.to_f64_lossy()).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                target -= d.to_f64_lossy();
                if target < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // all points coincide with a centroid
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &points[pick]));
        }
    }

    let mut assignments = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = closest(p, &centroids);
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += *v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // empty cluster takes the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(&points[a], &centroids[assignments[a]]);
                        let db = squared_distance(&points[b], &centroids[assignments[b]]);
                        da.partial_cmp(&db)
                            .unwrap_or(Ordering::Equal)
                            .then(b.cmp(&a))
                    })
                    .expect("n >= 1");
                centroids[c] = points[far].clone();
                assignments[far] = c;
            } else {
                let count = T::of(counts[c] as f64);
                centroids[c] = sums[c].iter().map(|s| *s / count).collect();
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum();
    Ok(KMeansFit {
        assignments,
        centroids,
        inertia,
    })
}

fn closest<T: Scalar>(p: &[T], centroids: &[Vec<T>]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(p, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Best of `restarts` k-means runs by inertia; ties go to the earlier run.
pub fn kmeans_best_of<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansFit<T>> {
    let restarts = restarts.max(1);
    let fits: Vec<KMeansFit<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| kmeans(points, k, seed.wrapping_add(r as u64)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, fit) in fits.iter().enumerate() {
        if fit.inertia < fits[best].inertia {
            best = i;
        }
    }
    Ok(fits.into_iter().nth(best).expect("at least one restart"))
}

/// Clusters the dataset words and scores the clustering by purity.
///
/// `k` defaults to the number of distinct gold categories.
pub fn kmeans_purity<T: Scalar, E: WordVectors<T> + ?Sized>(
    emb: &E,
    ds: &CategorizationDataset,
    k: Option<usize>,
    seed: u64,
    restarts: usize,
) -> Result<PurityResult<T>> {
    if ds.items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let categories = ds.categories();
    let k = k.unwrap_or(categories.len());
    if k == 0 || k > ds.items.len() {
        return Err(Error::Parameter(format!(
            "cluster count must be in 1..={}, got {k}",
            ds.items.len()
        )));
    }
    let mean = emb.mean_vector();
    let points: Vec<Vec<T>> = ds
        .items
        .iter()
        .map(|(w, _)| vector_or(emb, w, &mean).0)
        .collect();
    let labels: Vec<usize> = ds
        .items
        .iter()
        .map(|(_, l)| {
            categories
                .iter()
                .position(|c| c == l)
                .expect("label is a category")
        })
        .collect();
    let fit = kmeans_best_of(&points, k, seed, restarts)?;
    Ok(PurityResult {
        purity: purity(&fit.assignments, &labels),
        k,
        assignments: fit.assignments,
    })
}

fn rank_candidates<S: PartialOrd + Copy>(
    mut scored: Vec<(usize, S)>,
    k: usize,
    furthest: bool,
) -> Vec<(usize, S)> {
    scored.sort_by(|(ia, sa), (ib, sb)| {
        let by_score = if furthest {
            sa.partial_cmp(sb)
        } else {
            sb.partial_cmp(sa)
        };
        by_score.unwrap_or(Ordering::Equal).then(ia.cmp(ib))
    });
    scored.truncate(k);
    scored
}

fn check_neighbor_query(n: usize, token: &str, index: Option<usize>, k: usize) -> Result<usize> {
    let q = index.ok_or_else(|| Error::NotFound(token.to_owned()))?;
    if k + 1 > n {
        return Err(Error::Parameter(format!(
            "k must be at most {}, got {k}",
            n - 1
        )));
    }
    Ok(q)
}

/// Top (or bottom, with `furthest`) `k` words by binary dot product with
/// `token`, excluding the token itself. Ties go to the lower vocabulary index.
pub fn nearest_neighbors_binary(
    emb: &BinaryEmbedding,
    token: &str,
    k: usize,
    furthest: bool,
) -> Result<Vec<(String, i64)>> {
    let q = check_neighbor_query(emb.len(), token, emb.index_of(token), k)?;
    let query = emb.row(q);
    let scored = (0..emb.len())
        .filter(|&i| i != q)
        .map(|i| Ok((i, binary_dot(query, emb.row(i), emb.code_len())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_candidates(scored, k, furthest)
        .into_iter()
        .map(|(i, s)| (emb.vocab()[i].clone(), s))
        .collect())
}

/// Like [`nearest_neighbors_binary`] with cosine similarity on real vectors.
pub fn nearest_neighbors_real<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    token: &str,
    k: usize,
    furthest: bool,
) -> Result<Vec<(String, T)>> {
    let q = check_neighbor_query(emb.len(), token, emb.index_of(token), k)?;
    let query = emb.data().row(q);
    let scored = (0..emb.len())
        .filter(|&i| i != q)
        .map(|i| {
            cosine_similarity(query, emb.data().row(i))
                .map(|s| (i, s))
                .map_err(|e| {
                    Error::UndefinedSimilarity(format!("{token} vs {}: {e}", emb.vocab()[i]))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_candidates(scored, k, furthest)
        .into_iter()
        .map(|(i, s)| (emb.vocab()[i].clone(), s))
        .collect())
}
