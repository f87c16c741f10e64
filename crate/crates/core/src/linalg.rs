//! Dense kernels behind the quantizers: centering, SVD, PCA projection,
//! seeded random rotations and the orthogonal Procrustes solution.
//!
//! The SVD is computed from the symmetric eigendecomposition of the `d x d`
//! Gram matrix `XᵀX` (Householder tridiagonalization followed by implicit
//! QL). Embedding matrices are tall and thin, so this never touches an
//! `n x n` object. Singular values are taken as the column norms of `XQᵀ`
//! rather than square roots of Gram eigenvalues, which keeps small values
//! accurate to working precision.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Column means `u = (1/n) 1ᵀX`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanVector<T>(pub Vec<T>);

impl<T: Scalar> MeanVector<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }
}

/// Thin SVD `X = P · diag(σ) · Q` with `k = min(n, d)`.
#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    /// `n x k`, orthonormal columns.
    pub left: Matrix<T>,
    /// Length `k`, non-negative, descending.
    pub singular_values: Vec<T>,
    /// `k x d`, orthonormal rows.
    pub right: Matrix<T>,
}

impl<T: Scalar> SvdFactors<T> {
    pub fn rank_bound(&self) -> usize {
        self.singular_values.len()
    }

    /// `P · diag(σ) · Q`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut scaled = self.left.clone();
        for i in 0..scaled.rows() {
            for (v, s) in scaled.row_mut(i).iter_mut().zip(&self.singular_values) {
                *v *= *s;
            }
        }
        scaled.matmul(&self.right).expect("factor shapes agree")
    }
}

/// Square matrix with `RᵀR = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationMatrix<T>(Matrix<T>);

impl<T: Scalar> RotationMatrix<T> {
    /// Accepts `matrix` if it is square and orthogonal within `tol`.
    pub fn try_new(matrix: Matrix<T>, tol: T) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Dimension(format!(
                "rotation must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let err = orthogonality_error(&matrix);
        if err > tol {
            return Err(Error::Numeric(format!(
                "matrix is not orthogonal (max |RᵀR - I| = {err})"
            )));
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub(crate) fn from_orthogonal(matrix: Matrix<T>) -> Self {
        debug_assert_eq!(matrix.rows(), matrix.cols());
        Self(matrix)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    /// `max |RᵀR - I|`.
    pub fn orthogonality_error(&self) -> T {
        orthogonality_error(&self.0)
    }
}

/// `max |AᵀA - I|` for a matrix `A` with orthonormal columns expected.
pub fn orthogonality_error<T: Scalar>(a: &Matrix<T>) -> T {
    let g = a.gram();
    g.max_abs_diff(&Matrix::identity(g.rows()))
        .expect("gram is square")
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn check_input<T: Scalar>(x: &Matrix<T>) -> Result<()> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Dimension(format!(
            "empty {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    if !x.is_finite() {
        return Err(Error::Numeric(
            "matrix contains NaN or infinite values".into(),
        ));
    }
    Ok(())
}

/// Subtracts column means: returns `(X - 1uᵀ, u)`.
pub fn mean_center<T: Scalar>(x: &Matrix<T>) -> Result<(Matrix<T>, MeanVector<T>)> {
    check_input(x)?;
    let n = T::of(x.rows() as f64);
    let mean: Vec<T> = x.column_sums().into_iter().map(|s| s / n).collect();
    let mut centered = x.clone();
    for i in 0..centered.rows() {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= *m;
        }
    }
    Ok((centered, MeanVector(mean)))
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the second matrix.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::Dimension(format!(
            "eigen problem needs a square matrix, got {}x{}",
            n,
            a.cols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e)?;

    // stable ascending order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("eigenvalues are finite"));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

/// Householder reduction to tridiagonal form, accumulating the transform in `v`.
fn tridiagonalize<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let delta = f * e[k] + g * d[k];
                    v[(k, j)] -= delta;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let delta = g * d[k];
                    v[(k, j)] -= delta;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Implicit QL iterations on the tridiagonal form.
fn tridiagonal_ql<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    let max_sweeps = 60 * n.max(1);

    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::Numeric(
                        "symmetric eigensolver did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

/// Flips `v` so its largest-magnitude entry (first on ties) is non-negative.
fn canonical_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full right singular basis: `d` values (descending) and a `d x d` matrix
/// whose rows are the matching right singular vectors, plus `XQᵀ`.
struct RightBasis<T> {
    values: Vec<T>,
    basis: Matrix<T>,
    projected: Matrix<T>,
}

fn right_basis<T: Scalar>(x: &Matrix<T>) -> Result<RightBasis<T>> {
    check_input(x)?;
    let d = x.cols();
    let (eigvals, eigvecs) = symmetric_eigen(&x.gram())?;
    let mut by_value: Vec<usize> = (0..d).collect();
    by_value.sort_by(|&i, &j| {
        eigvals[j]
            .partial_cmp(&eigvals[i])
            .expect("eigenvalues are finite")
    });
    let mut basis = Matrix::zeros(d, d);
    for (r, &src) in by_value.iter().enumerate() {
        let row = basis.row_mut(r);
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = eigvecs[(k, src)];
        }
        canonical_sign(row);
    }
    let projected = x.matmul_t(&basis)?;
    let mut sq = vec![T::zero(); d];
    for row in projected.rows_iter() {
        for (s, v) in sq.iter_mut().zip(row) {
            *s += *v * *v;
        }
    }
    let norms: Vec<T> = sq.into_iter().map(|s| s.sqrt()).collect();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("norms are finite"));
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return Ok(RightBasis {
            values: norms,
            basis,
            projected,
        });
    }
    let values = order.iter().map(|&i| norms[i]).collect();
    let basis = Matrix::from_fn(d, d, |r, c| basis[(order[r], c)]);
    let projected = Matrix::from_fn(projected.rows(), d, |r, c| projected[(r, order[c])]);
    Ok(RightBasis {
        values,
        basis,
        projected,
    })
}

/// Orthogonalizes `v` against `basis` twice. Returns the remaining norm.
fn orthogonalize<T: Scalar>(v: &mut [T], basis: &[Vec<T>]) -> T {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * *y;
            }
        }
    }
    norm(v)
}

/// Unit vector orthogonal to `basis` (which has fewer than `n` members),
/// seeded from the standard basis vector with the largest residual.
fn completion_vector<T: Scalar>(n: usize, basis: &[Vec<T>]) -> Vec<T> {
    let mut residual = vec![T::one(); n];
    for b in basis {
        for (r, v) in residual.iter_mut().zip(b) {
            *r -= *v * *v;
        }
    }
    let mut best = 0;
    for (m, r) in residual.iter().enumerate() {
        if *r > residual[best] {
            best = m;
        }
    }
    let mut col = vec![T::zero(); n];
    col[best] = T::one();
    let rest = orthogonalize(&mut col, basis);
    col.iter_mut().for_each(|v| *v /= rest);
    col
}

/// Thin SVD with `k = min(n, d)`.
///
/// Right singular vectors have their largest-magnitude entry non-negative.
/// Left vectors for (numerically) zero singular values are an arbitrary
/// orthonormal completion.
pub fn svd<T: Scalar>(x: &Matrix<T>) -> Result<SvdFactors<T>> {
    let RightBasis {
        values,
        basis,
        projected,
    } = right_basis(x)?;
    let (n, d) = x.shape();
    let k = n.min(d);
    let half = T::of(0.5);
    let tol = values[0] * T::epsilon() * T::of(n.max(d) as f64);

    let mut columns: Vec<Vec<T>> = Vec::with_capacity(k);
    for j in 0..k {
        let sigma = values[j];
        if sigma > tol && sigma > T::zero() {
            let mut col: Vec<T> = (0..n).map(|i| projected[(i, j)] / sigma).collect();
            let rest = orthogonalize(&mut col, &columns);
            if rest > half {
                col.iter_mut().for_each(|v| *v /= rest);
                columns.push(col);
                continue;
            }
        }
        let col = completion_vector(n, &columns);
        columns.push(col);
    }
    let left = Matrix::from_fn(n, k, |i, j| columns[j][i]);
    Ok(SvdFactors {
        left,
        singular_values: values[..k].to_vec(),
        right: basis.take_rows(k),
    })
}

/// Singular values only, descending, length `min(n, d)`.
pub fn singular_values<T: Scalar>(x: &Matrix<T>) -> Result<Vec<T>> {
    let mut values = right_basis(x)?.values;
    values.truncate(x.rows().min(x.cols()));
    Ok(values)
}

/// Top `count` right singular vectors of `x` as the columns of a `d x count`
/// matrix. `count` may exceed `min(n, d)` up to `d`.
pub fn top_right_singular_vectors<T: Scalar>(x: &Matrix<T>, count: usize) -> Result<Matrix<T>> {
    let d = x.cols();
    if count == 0 || count > d {
        return Err(Error::Parameter(format!(
            "need 1 <= count <= {d}, got {count}"
        )));
    }
    Ok(right_basis(x)?.basis.take_rows(count).transpose())
}

/// Projects a centered matrix onto its top `out_dim` principal directions.
///
/// No re-centering and no whitening: the result is `X · V_O`.
pub fn pca_project<T: Scalar>(x: &Matrix<T>, out_dim: usize) -> Result<Matrix<T>> {
    let d = x.cols();
    if out_dim == 0 || out_dim > d {
        return Err(Error::Parameter(format!(
            "PCA output dimension must be in 1..={d}, got {out_dim}"
        )));
    }
    let basis = right_basis(x)?;
    if out_dim == d {
        return Ok(basis.projected);
    }
    Ok(Matrix::from_fn(x.rows(), out_dim, |i, j| {
        basis.projected[(i, j)]
    }))
}

/// Seeded random `c x c` orthogonal matrix from the QR factorization of a
/// standard Gaussian matrix, with the triangular factor's diagonal positive.
pub fn random_orthogonal<T: Scalar>(dim: usize, seed: u64) -> Result<RotationMatrix<T>> {
    if dim == 0 {
        return Err(Error::Parameter(
            "rotation dimension must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<T> {
        (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::of(z)
            })
            .collect()
    };
    let gaussian: Vec<Vec<T>> = (0..dim).map(|_| draw(&mut rng)).collect();

    let mut columns: Vec<Vec<T>> = Vec::with_capacity(dim);
    for mut col in gaussian {
        let scale = norm(&col);
        let mut rest = orthogonalize(&mut col, &columns);
        // a numerically dependent draw has probability zero; redraw if it happens
        while rest.is_nan() || rest <= scale * T::of(1e-6) {
            col = draw(&mut rng);
            rest = orthogonalize(&mut col, &columns);
        }
        col.iter_mut().for_each(|v| *v /= rest);
        columns.push(col);
    }
    Ok(RotationMatrix::from_orthogonal(Matrix::from_fn(
        dim,
        dim,
        |i, j| columns[j][i],
    )))
}

/// Orthogonal `R` minimizing `‖B - XR‖_F²`.
///
/// With `BᵀX = S·Ω·Ŝᵀ`, the minimizer is `R = Ŝ·Sᵀ`.
pub fn procrustes_rotation<T: Scalar>(b: &Matrix<T>, x: &Matrix<T>) -> Result<RotationMatrix<T>> {
    if b.shape() != x.shape() {
        return Err(Error::Dimension(format!(
            "code matrix is {}x{} but data is {}x{}",
            b.rows(),
            b.cols(),
            x.rows(),
            x.cols()
        )));
    }
    let cross = b.t_matmul(x)?;
    let f = svd(&cross)?;
    // svd gives cross = left · Ω · right, so Ŝ = rightᵀ and S = left
    let r = f.right.transpose().matmul(&f.left.transpose())?;
    Ok(RotationMatrix::from_orthogonal(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Cyclic Jacobi eigenvalues, used only as an oracle.
    fn jacobi_eigenvalues(a: &Matrix<f64>) -> Vec<f64> {
        let n = a.rows();
        let mut m = a.clone();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| m[(i, j)] * m[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }

    fn assert_svd_invariants(x: &Matrix<f64>, f: &SvdFactors<f64>) {
        let k = x.rows().min(x.cols());
        assert_eq!(f.singular_values.len(), k);
        assert_eq!(f.left.shape(), (x.rows(), k));
        assert_eq!(f.right.shape(), (k, x.cols()));
        for w in f.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(f.singular_values.iter().all(|s| *s >= 0.0));
        assert!(orthogonality_error(&f.left) < 1e-8, "P");
        assert!(orthogonality_error(&f.right.transpose()) < 1e-8, "Q");
        let err = f.reconstruct().sub(x).unwrap().frobenius_norm();
        assert!(
            err <= 1e-6 * x.frobenius_norm().max(1e-300) || err < 1e-12,
            "reconstruction {err}"
        );
    }

    #[test]
    fn mean_center_small_example() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let (c, u) = mean_center(&x).unwrap();
        assert_eq!(u.0, vec![2.0, 3.0]);
        assert_eq!(c, Matrix::from_rows(&[[-1.0, -1.0], [1.0, 1.0]]).unwrap());
    }

    #[test]
    fn mean_center_of_centered_is_identity() {
        let x = Matrix::from_rows(&[[1.0, -2.0], [-1.0, 2.0], [0.0, 0.0]]).unwrap();
        let (c, u) = mean_center(&x).unwrap();
        assert_eq!(u.0, vec![0.0, 0.0]);
        assert_eq!(c, x);
        let y = random_matrix(30, 4, 9);
        let (c1, _) = mean_center(&y).unwrap();
        let (c2, _) = mean_center(&c1).unwrap();
        assert!(c1.max_abs_diff(&c2).unwrap() < 1e-14);
    }

    #[test]
    fn mean_center_matches_two_pass_oracle() {
        let x = random_matrix(50, 7, 1);
        let (c, u) = mean_center(&x).unwrap();
        for j in 0..7 {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / 50.0;
            assert!((u.0[j] - mean).abs() < 1e-15);
        }
        let sums = c.column_sums();
        assert!(norm(&sums) <= 1e-10);
        // X̄ + 1uᵀ reconstructs X
        for i in 0..50 {
            for j in 0..7 {
                assert!((c[(i, j)] + u.0[j] - x[(i, j)]).abs() < 1e-15);
            }
        }
        assert!(matches!(
            mean_center(&Matrix::<f64>::zeros(0, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn eigen_of_known_matrix() {
        let a = Matrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!(orthogonality_error(&vecs) < 1e-14);
        let (vals, vecs) = symmetric_eigen(&Matrix::from_rows(&[[5.0]]).unwrap()).unwrap();
        assert_eq!(vals, vec![5.0]);
        assert_eq!(vecs[(0, 0)], 1.0);
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let f = svd(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(f.singular_values, vec![1.0, 1.0, 1.0]);
        let x = Matrix::<f64>::from_rows(&[[3.0, 0.0], [0.0, 1.0]]).unwrap();
        let f = svd(&x).unwrap();
        assert!((f.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-14);
        assert_svd_invariants(&x, &f);
    }

    #[test]
    fn svd_random_matches_jacobi_oracle() {
        let x = random_matrix(40, 10, 2);
        let f = svd(&x).unwrap();
        assert_svd_invariants(&x, &f);
        let err = f.reconstruct().sub(&x).unwrap().frobenius_norm();
        assert!(err < 1e-8);
        let oracle: Vec<f64> = jacobi_eigenvalues(&x.gram())
            .into_iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        for (a, b) in f.singular_values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn svd_wide_and_rank_deficient() {
        let x = random_matrix(4, 9, 3);
        let f = svd(&x).unwrap();
        assert_svd_invariants(&x, &f);

        // rank 2 in a 6x5 matrix
        let a = random_matrix(6, 2, 4);
        let b = random_matrix(2, 5, 5);
        let x = a.matmul(&b).unwrap();
        let f = svd(&x).unwrap();
        assert_svd_invariants(&x, &f);
        assert!(f.singular_values[2..].iter().all(|s| *s < 1e-12));

        let zero = Matrix::<f64>::zeros(3, 2);
        let f = svd(&zero).unwrap();
        assert_eq!(f.singular_values, vec![0.0, 0.0]);
        assert_svd_invariants(&zero, &f);
    }

    #[test]
    fn svd_sign_convention_and_errors() {
        let x = random_matrix(12, 4, 6);
        let f = svd(&x).unwrap();
        for r in 0..4 {
            let row = f.right.row(r);
            let big = row
                .iter()
                .cloned()
                .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(big >= 0.0);
        }
        let mut bad = x.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(matches!(svd(&bad), Err(Error::Numeric(_))));
    }

    #[test]
    fn singular_values_are_rotation_invariant() {
        let x = random_matrix(30, 6, 7);
        let r = random_orthogonal::<f64>(6, 11).unwrap();
        let xr = x.matmul(r.as_matrix()).unwrap();
        let a = singular_values(&x).unwrap();
        let b = singular_values(&xr).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn pca_full_rank_keeps_spectrum() {
        let (x, _) = mean_center(&random_matrix(30, 6, 8)).unwrap();
        let p = pca_project(&x, 6).unwrap();
        let a = singular_values(&x).unwrap();
        let b = singular_values(&p).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn pca_rank_one_keeps_norm() {
        let u = [1.0f64, -2.0, 0.5, 0.5];
        let v = [0.3, 0.4, -0.2];
        let x = Matrix::from_fn(4, 3, |i, j| u[i] * v[j]);
        let p = pca_project(&x, 1).unwrap();
        assert!((p.frobenius_norm() - x.frobenius_norm()).abs() < 1e-8);
    }

    #[test]
    fn pca_energy_matches_top_singular_values() {
        let (x, _) = mean_center(&random_matrix(30, 6, 10)).unwrap();
        let p = pca_project(&x, 3).unwrap();
        let oracle: Vec<f64> = jacobi_eigenvalues(&x.gram());
        let expect: f64 = oracle[..3].iter().sum();
        assert!((p.frobenius_norm_sq() - expect).abs() < 1e-8);
        assert!(p.frobenius_norm() <= x.frobenius_norm());
        assert!(norm(&p.column_sums()) < 1e-10);
        assert!(matches!(pca_project(&x, 0), Err(Error::Parameter(_))));
        assert!(matches!(pca_project(&x, 7), Err(Error::Parameter(_))));
    }

    #[test]
    fn random_orthogonal_properties() {
        let r = random_orthogonal::<f64>(1, 3).unwrap();
        assert_eq!(r.as_matrix().as_slice().len(), 1);
        assert_eq!(r.as_matrix()[(0, 0)].abs(), 1.0);

        let a = random_orthogonal::<f64>(16, 42).unwrap();
        let b = random_orthogonal::<f64>(16, 42).unwrap();
        assert_eq!(a.as_matrix().as_slice(), b.as_matrix().as_slice());
        assert!(a.orthogonality_error() <= 1e-10);
        let c = random_orthogonal::<f64>(16, 43).unwrap();
        assert_ne!(a, c);
        assert!(random_orthogonal::<f64>(0, 1).is_err());

        let f = random_orthogonal::<f32>(8, 1).unwrap();
        assert!(f.orthogonality_error() < 1e-5);
    }

    fn loss(b: &Matrix<f64>, x: &Matrix<f64>, r: &RotationMatrix<f64>) -> f64 {
        b.sub(&x.matmul(r.as_matrix()).unwrap())
            .unwrap()
            .frobenius_norm_sq()
    }

    fn random_signs(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(
            rows,
            cols,
            |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 },
        )
    }

    #[test]
    fn procrustes_self_alignment_is_identity() {
        let b = random_signs(20, 5, 1);
        let r = procrustes_rotation(&b, &b).unwrap();
        assert!(r.as_matrix().max_abs_diff(&Matrix::identity(5)).unwrap() < 1e-10);
        assert!(loss(&b, &b, &r) < 1e-18);
    }

    #[test]
    fn procrustes_recovers_known_rotation() {
        let b = random_signs(30, 6, 2);
        let q = random_orthogonal::<f64>(6, 5).unwrap();
        let x = b.matmul(&q.as_matrix().transpose()).unwrap();
        let r = procrustes_rotation(&b, &x).unwrap();
        assert!(r.as_matrix().max_abs_diff(q.as_matrix()).unwrap() < 1e-8);
        assert!(loss(&b, &x, &r) < 1e-8);
    }

    #[test]
    fn procrustes_beats_random_rotations() {
        let b = random_signs(64, 8, 3);
        let x = random_matrix(64, 8, 4);
        let r = procrustes_rotation(&b, &x).unwrap();
        assert!(r.orthogonality_error() < 1e-8);
        let best = loss(&b, &x, &r);
        for seed in 0..1000 {
            let other = random_orthogonal::<f64>(8, 10_000 + seed).unwrap();
            assert!(best <= loss(&b, &x, &other));
        }
        assert!(procrustes_rotation(&b, &random_matrix(64, 7, 1)).is_err());
    }

    #[test]
    fn procrustes_with_rank_deficient_cross_product() {
        let b = random_signs(16, 4, 9);
        let mut x = random_matrix(16, 4, 10);
        for i in 0..16 {
            x[(i, 3)] = 0.0;
            x[(i, 2)] = 0.0;
        }
        let r = procrustes_rotation(&b, &x).unwrap();
        assert!(r.orthogonality_error() < 1e-8);
    }
}
