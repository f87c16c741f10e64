//! Compression of real-valued word embeddings into bit-packed binary codes.
//!
//! The main entry point is [`quantizer::compress`], which runs either
//! isotropic iterative quantization (remove the dominant singular directions,
//! then alternate sign and rotation updates) or the classical iterative
//! quantization baseline. [`isotropy`] measures how uniformly an embedding
//! spreads over directions and [`eval`] scores embeddings on word similarity
//! and categorization tasks.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod cli;
pub mod embedding_io;
pub mod error;
pub mod eval;
pub mod isotropy;
pub mod linalg;
pub mod matrix;
pub mod quantizer;
pub mod scalar;

pub use embedding_io::{
    BinaryEmbedding, CategorizationDataset, EmbeddingMatrix, SimilarityDataset,
};
pub use error::{Error, Result};
pub use isotropy::IsotropyReport;
pub use linalg::{MeanVector, RotationMatrix, SvdFactors};
pub use matrix::Matrix;
pub use quantizer::{compress, CompressionConfig, Method, QuantizationTrace};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Embedding = EmbeddingMatrix<f64>;
pub type Rotation64 = RotationMatrix<f64>;
pub type Svd64 = SvdFactors<f64>;
pub type Trace64 = QuantizationTrace<f64>;
pub type Report64 = IsotropyReport<f64>;
