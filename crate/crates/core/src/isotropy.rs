//! Isotropy of an embedding set.
//!
//! The partition function `Z(e) = Σ exp(eᵀxᵢ)` measures how much embedding
//! mass points along a unit direction `e`. The isotropy ratio compares its
//! smallest and largest values. The sphere is not searched; the candidate
//! directions are the signed right singular vectors `±q₁ … ±q_k` of the
//! centered matrix, which makes the metric deterministic.
//!
//! The quadratic approximation expands `Z` to second order:
//!
//! `Î(X) = (n - ‖1ᵀX‖ + σ_min²/2) / (n + ‖1ᵀX‖ + σ_max²/2)`
//!
//! with `n` the number of rows and `‖·‖` the Euclidean norm. Its value is
//! returned as is, without clamping.

use crate::error::{Error, Result};
use crate::linalg::{mean_center, singular_values, svd};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropyReport<T> {
    /// `min Z / max Z` over the candidate directions, in `[0, 1]`.
    pub i_ratio: T,
    pub i_quadratic: T,
    pub sigma_min: T,
    pub sigma_max: T,
    /// `‖1ᵀX‖`.
    pub mean_norm: T,
    /// Set when the centered matrix is zero and `i_ratio` defaulted to 1.
    pub degenerate: bool,
}

/// Outcome of [`isotropy_ratio`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropyRatio<T> {
    pub ratio: T,
    pub degenerate: bool,
}

fn check_unit<T: Scalar>(x: &Matrix<T>, e: &[T]) -> Result<()> {
    if e.len() != x.cols() {
        return Err(Error::Dimension(format!(
            "direction has {} entries, embedding dimension is {}",
            e.len(),
            x.cols()
        )));
    }
    let norm = e.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if norm.is_nan() || (norm - T::one()).abs() > T::of(1e-8) {
        return Err(Error::Parameter(format!(
            "direction must have unit norm, got {norm}"
        )));
    }
    Ok(())
}

fn log_sum_exp<T: Scalar>(x: &Matrix<T>, e: &[T]) -> T {
    let scores: Vec<T> = x
        .rows_iter()
        .map(|r| r.iter().zip(e).map(|(a, b)| *a * *b).sum())
        .collect();
    let shift = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = scores.iter().map(|s| (*s - shift).exp()).sum();
    shift + sum.ln()
}

/// `ln Z(e)`, computed with a max shift so it never overflows.
pub fn log_partition_function<T: Scalar>(x: &Matrix<T>, e: &[T]) -> Result<T> {
    check_unit(x, e)?;
    if x.rows() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    Ok(log_sum_exp(x, e))
}

/// `Z(e) = Σᵢ exp(eᵀxᵢ)` for a unit vector `e`.
pub fn partition_function<T: Scalar>(x: &Matrix<T>, e: &[T]) -> Result<T> {
    let log_z = log_partition_function(x, e)?;
    let z = log_z.exp();
    if !z.is_finite() {
        return Err(Error::Range(format!(
            "partition function exp({log_z}) overflows"
        )));
    }
    Ok(z)
}

/// Candidate directions: right singular vectors of the centered matrix,
/// each paired with its negation.
pub fn candidate_directions<T: Scalar>(x: &Matrix<T>) -> Result<Vec<Vec<T>>> {
    let (centered, _) = mean_center(x)?;
    let factors = svd(&centered)?;
    let mut dirs = Vec::with_capacity(2 * factors.right.rows());
    for q in factors.right.rows_iter() {
        dirs.push(q.to_vec());
        dirs.push(q.iter().map(|v| -*v).collect());
    }
    Ok(dirs)
}

/// `min Z / max Z` over [`candidate_directions`].
pub fn isotropy_ratio<T: Scalar>(x: &Matrix<T>) -> Result<IsotropyRatio<T>> {
    let (centered, _) = mean_center(x)?;
    if centered.max_abs() == T::zero() {
        return Ok(IsotropyRatio {
            ratio: T::one(),
            degenerate: true,
        });
    }
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for dir in candidate_directions(x)? {
        let log_z = log_sum_exp(x, &dir);
        lo = lo.min(log_z);
        hi = hi.max(log_z);
    }
    let ratio = (lo - hi).exp().max(T::zero()).min(T::one());
    Ok(IsotropyRatio {
        ratio,
        degenerate: false,
    })
}

/// Quadratic approximation `Î(X)`; see the module docs.
pub fn isotropy_quadratic<T: Scalar>(x: &Matrix<T>) -> Result<T> {
    Ok(quadratic_parts(x)?.0)
}

fn quadratic_parts<T: Scalar>(x: &Matrix<T>) -> Result<(T, T, T, T)> {
    let sigmas = singular_values(x)?;
    let sigma_max = sigmas[0];
    let sigma_min = *sigmas.last().expect("at least one singular value");
    let mean_norm = x.column_sums().iter().map(|s| *s * *s).sum::<T>().sqrt();
    let n = T::of(x.rows() as f64);
    let half = T::of(0.5);
    let value = (n - mean_norm + half * sigma_min * sigma_min)
        / (n + mean_norm + half * sigma_max * sigma_max);
    Ok((value, sigma_min, sigma_max, mean_norm))
}

pub fn isotropy_report<T: Scalar>(x: &Matrix<T>) -> Result<IsotropyReport<T>> {
    let ratio = isotropy_ratio(x)?;
    let (i_quadratic, sigma_min, sigma_max, mean_norm) = quadratic_parts(x)?;
    Ok(IsotropyReport {
        i_ratio: ratio.ratio,
        i_quadratic,
        sigma_min,
        sigma_max,
        mean_norm,
        degenerate: ratio.degenerate,
    })
}
