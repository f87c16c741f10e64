//! Binary quantization of embedding matrices.
//!
//! Both methods center the data, map it to `O` dimensions and then alternate
//! two exact minimizations of the quantization loss `‖B - VR‖_F²`:
//! `B = sgn(VR)` for fixed `R`, then the orthogonal Procrustes solution for
//! `R` given `B`.
//!
//! * IIQ removes the top `D` singular components first (pushing the spectrum
//!   toward isotropy), then optionally PCA-projects to `O` dimensions.
//! * ITQ projects onto the top `O` right singular vectors, keeping the large
//!   components (maximum bit variance).

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::embedding_io::{BinaryEmbedding, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    mean_center, procrustes_rotation, random_orthogonal, top_right_singular_vectors, MeanVector,
    RotationMatrix,
};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Iteration count used when none is given.
pub const DEFAULT_ITERATIONS: usize = 50;
/// Top components removed for HDC embeddings in the reference experiments.
pub const HDC_REMOVE_TOP: usize = 2;
/// Top components removed for GloVe embeddings in the reference experiments.
pub const GLOVE_REMOVE_TOP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Iiq,
    Itq,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Iiq => "iiq",
            Method::Itq => "itq",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iiq" => Ok(Method::Iiq),
            "itq" => Ok(Method::Itq),
            other => Err(Error::Parameter(format!(
                "unknown method '{other}', expected iiq or itq"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressionConfig {
    pub method: Method,
    /// Top singular components to remove. Ignored by ITQ.
    pub remove_top: usize,
    pub iterations: usize,
    /// Output code length in bits.
    pub out_dim: usize,
    pub seed: u64,
}

impl CompressionConfig {
    pub fn iiq(remove_top: usize, out_dim: usize) -> Self {
        Self {
            method: Method::Iiq,
            remove_top,
            iterations: DEFAULT_ITERATIONS,
            out_dim,
            seed: 0,
        }
    }

    pub fn itq(out_dim: usize) -> Self {
        Self {
            method: Method::Itq,
            remove_top: 0,
            iterations: DEFAULT_ITERATIONS,
            out_dim,
            seed: 0,
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the configuration against an `n x d` input.
    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        if self.out_dim == 0 || self.out_dim > d {
            return Err(Error::Parameter(format!(
                "output dimension must be in 1..={d}, got {}",
                self.out_dim
            )));
        }
        if u32::try_from(self.out_dim).is_err() {
            return Err(Error::Parameter(
                "output dimension does not fit in u32".into(),
            ));
        }
        if self.method == Method::Iiq && self.remove_top >= n.min(d) {
            return Err(Error::Parameter(format!(
                "remove-top must be below min(n, d) = {}, got {}",
                n.min(d),
                self.remove_top
            )));
        }
        Ok(())
    }
}

/// Loss history and the learned transform of one quantization run.
///
/// A vector `x` is encoded as `sgn((x - mean) · projection · final_rotation)`.
#[derive(Clone, Debug)]
pub struct QuantizationTrace<T> {
    /// Loss after each sign step, one entry per iteration.
    pub losses: Vec<T>,
    /// Loss of the returned codes against the final rotation.
    pub final_loss: T,
    pub final_rotation: RotationMatrix<T>,
    pub mean: MeanVector<T>,
    /// `d x O` map applied before the rotation.
    pub projection: Matrix<T>,
}

impl<T: Scalar> QuantizationTrace<T> {
    /// Encodes rows of `x` with the learned transform.
    pub fn encode(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.mean.0.len() {
            return Err(Error::Dimension(format!(
                "input has {} columns, transform expects {}",
                x.cols(),
                self.mean.0.len()
            )));
        }
        let mut centered = x.clone();
        for i in 0..centered.rows() {
            for (v, m) in centered.row_mut(i).iter_mut().zip(&self.mean.0) {
                *v -= *m;
            }
        }
        let u = centered
            .matmul(&self.projection)?
            .matmul(self.final_rotation.as_matrix())?;
        Ok(u.map(Scalar::sign_bit))
    }

    /// Writes the loss curve as CSV with header `iteration,loss`, counting
    /// iterations from 1.
    pub fn write_loss_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "iteration,loss")?;
        for (i, loss) in self.losses.iter().enumerate() {
            writeln!(writer, "{},{}", i + 1, loss)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save_loss_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_loss_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Centered matrix ready for quantization.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropizedMatrix<T>(Matrix<T>);

impl<T: Scalar> IsotropizedMatrix<T> {
    pub fn data(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix<T> {
        self.0
    }
}

/// Data entering the alternating minimization, with the affine map that
/// produced it from the raw embedding.
#[derive(Clone, Debug)]
pub struct QuantizerInput<T> {
    pub data: Matrix<T>,
    pub mean: MeanVector<T>,
    pub projection: Matrix<T>,
}

/// Zeroes the top `count` singular values of a centered matrix.
///
/// Computed as the projection `X̄ (I - Q_Dᵀ Q_D)` onto the complement of the
/// top right singular vectors, which equals `P · diag(0, …, 0, σ_{D+1}, …) · Q`.
pub fn remove_top_singular<T: Scalar>(
    centered: &Matrix<T>,
    count: usize,
) -> Result<IsotropizedMatrix<T>> {
    Ok(remove_top_with_directions(centered, count)?.0)
}

/// Also returns the removed directions as the columns of a `d x count` matrix.
fn remove_top_with_directions<T: Scalar>(
    centered: &Matrix<T>,
    count: usize,
) -> Result<(IsotropizedMatrix<T>, Matrix<T>)> {
    let (n, d) = centered.shape();
    if count > n.min(d) {
        return Err(Error::Parameter(format!(
            "cannot remove {count} singular components from a {n}x{d} matrix"
        )));
    }
    if count == 0 {
        return Ok((IsotropizedMatrix(centered.clone()), Matrix::zeros(d, 0)));
    }
    let top = top_right_singular_vectors(centered, count)?;
    let scores = centered.matmul(&top)?;
    let removed = scores.matmul_t(&top)?;
    Ok((IsotropizedMatrix(centered.sub(&removed)?), top))
}

/// ITQ's variance-maximizing projection.
#[derive(Clone, Debug)]
pub struct ItqProjection<T> {
    /// `d x c`, orthonormal columns.
    pub w: Matrix<T>,
    /// `X̄W`, `n x c`.
    pub projected: Matrix<T>,
    /// `(1/n) tr(WᵀX̄ᵀX̄W)`.
    pub bit_variance: T,
}

pub fn itq_projection<T: Scalar>(centered: &Matrix<T>, dim: usize) -> Result<ItqProjection<T>> {
    let d = centered.cols();
    if dim == 0 || dim > d {
        return Err(Error::Parameter(format!(
            "projection dimension must be in 1..={d}, got {dim}"
        )));
    }
    let w = top_right_singular_vectors(centered, dim)?;
    let projected = centered.matmul(&w)?;
    let bit_variance = projected.frobenius_norm_sq() / T::of(centered.rows() as f64);
    Ok(ItqProjection {
        w,
        projected,
        bit_variance,
    })
}

/// `(1/n) tr(WᵀXᵀXW)` for an arbitrary `W`.
pub fn bit_variance<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>) -> Result<T> {
    Ok(x.matmul(w)?.frobenius_norm_sq() / T::of(x.rows() as f64))
}

fn check_signs_shape<T: Scalar>(b: &Matrix<T>, v: &Matrix<T>, r: &RotationMatrix<T>) -> Result<()> {
    if b.shape() != v.shape() || r.dim() != v.cols() {
        return Err(Error::Dimension(format!(
            "codes {}x{}, data {}x{}, rotation {}x{}",
            b.rows(),
            b.cols(),
            v.rows(),
            v.cols(),
            r.dim(),
            r.dim()
        )));
    }
    Ok(())
}

/// `‖B - VR‖_F²`.
pub fn quantization_loss<T: Scalar>(
    b: &Matrix<T>,
    v: &Matrix<T>,
    r: &RotationMatrix<T>,
) -> Result<T> {
    check_signs_shape(b, v, r)?;
    let u = v.matmul(r.as_matrix())?;
    Ok(b.sub(&u)?.frobenius_norm_sq())
}

/// Alternating minimization starting from a seeded random rotation.
pub fn minimize_quantization<T: Scalar>(
    data: &Matrix<T>,
    iterations: usize,
    seed: u64,
) -> Result<(Matrix<T>, QuantizationTrace<T>)> {
    if data.cols() == 0 {
        return Err(Error::Dimension("code length must be at least 1".into()));
    }
    let initial = random_orthogonal(data.cols(), seed)?;
    minimize_quantization_from(data, iterations, initial)
}

/// Alternating minimization from an explicit starting rotation.
///
/// Each iteration sets `B = sgn(XR)`, records `‖B - XR‖²`, then replaces `R`
/// by the Procrustes solution for `B`. The returned codes are `sgn(XR)` for
/// the final `R`.
pub fn minimize_quantization_from<T: Scalar>(
    data: &Matrix<T>,
    iterations: usize,
    initial: RotationMatrix<T>,
) -> Result<(Matrix<T>, QuantizationTrace<T>)> {
    let c = data.cols();
    if c == 0 || initial.dim() != c {
        return Err(Error::Dimension(format!(
            "rotation is {}x{} but data has {} columns",
            initial.dim(),
            initial.dim(),
            c
        )));
    }
    let mut rotation = initial;
    let mut losses = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let u = data.matmul(rotation.as_matrix())?;
        let b = u.map(Scalar::sign_bit);
        losses.push(b.sub(&u)?.frobenius_norm_sq());
        rotation = procrustes_rotation(&b, data)?;
    }
    let u = data.matmul(rotation.as_matrix())?;
    let b = u.map(Scalar::sign_bit);
    let final_loss = b.sub(&u)?.frobenius_norm_sq();
    let trace = QuantizationTrace {
        losses,
        final_loss,
        final_rotation: rotation,
        mean: MeanVector(vec![T::zero(); c]),
        projection: Matrix::identity(c),
    };
    Ok((b, trace))
}

/// Centering, top-component removal and optional PCA.
pub fn iiq_input<T: Scalar>(
    x: &Matrix<T>,
    remove_top: usize,
    out_dim: usize,
) -> Result<QuantizerInput<T>> {
    let d = x.cols();
    if out_dim == 0 || out_dim > d {
        return Err(Error::Parameter(format!(
            "output dimension must be in 1..={d}, got {out_dim}"
        )));
    }
    let (centered, mean) = mean_center(x)?;
    let (isotropized, removed) = remove_top_with_directions(&centered, remove_top)?;
    let mut projector = Matrix::identity(d);
    if remove_top > 0 {
        projector = projector.sub(&removed.matmul_t(&removed)?)?;
    }
    let mut data = isotropized.into_inner();
    if out_dim < d {
        let w = top_right_singular_vectors(&data, out_dim)?;
        data = data.matmul(&w)?;
        projector = projector.matmul(&w)?;
    }
    Ok(QuantizerInput {
        data,
        mean,
        projection: projector,
    })
}

/// Centering and variance-maximizing projection.
pub fn itq_input<T: Scalar>(x: &Matrix<T>, out_dim: usize) -> Result<QuantizerInput<T>> {
    let (centered, mean) = mean_center(x)?;
    let p = itq_projection(&centered, out_dim)?;
    Ok(QuantizerInput {
        data: p.projected,
        mean,
        projection: p.w,
    })
}

fn quantize<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    input: QuantizerInput<T>,
    cfg: &CompressionConfig,
) -> Result<(BinaryEmbedding, QuantizationTrace<T>)> {
    let (codes, mut trace) = minimize_quantization(&input.data, cfg.iterations, cfg.seed)?;
    trace.mean = input.mean;
    trace.projection = input.projection;
    let binary = BinaryEmbedding::from_signs(emb.vocab().to_vec(), &codes)?;
    Ok((binary, trace))
}

/// Isotropic iterative quantization.
pub fn iiq_compress<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    cfg: &CompressionConfig,
) -> Result<(BinaryEmbedding, QuantizationTrace<T>)> {
    if cfg.method != Method::Iiq {
        return Err(Error::Parameter("iiq_compress needs method iiq".into()));
    }
    cfg.validate(emb.len(), emb.dim())?;
    let input = iiq_input(emb.data(), cfg.remove_top, cfg.out_dim)?;
    quantize(emb, input, cfg)
}

/// Classical iterative quantization.
pub fn itq_compress<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    cfg: &CompressionConfig,
) -> Result<(BinaryEmbedding, QuantizationTrace<T>)> {
    if cfg.method != Method::Itq {
        return Err(Error::Parameter("itq_compress needs method itq".into()));
    }
    cfg.validate(emb.len(), emb.dim())?;
    let input = itq_input(emb.data(), cfg.out_dim)?;
    quantize(emb, input, cfg)
}

/// Dispatches on `cfg.method`.
pub fn compress<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    cfg: &CompressionConfig,
) -> Result<(BinaryEmbedding, QuantizationTrace<T>)> {
    match cfg.method {
        Method::Iiq => iiq_compress(emb, cfg),
        Method::Itq => itq_compress(emb, cfg),
    }
}
