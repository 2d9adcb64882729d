//! Tensor autoregressive (ART) models.
//!
//! Dense tensors with matricization and contracted products, PARAFAC
//! coefficient tensors, the distributions used by the shrinkage prior, ART(p)
//! simulation and VAR equivalence, a three-block Gibbs sampler, and block
//! Cholesky / block generalized impulse responses.

pub mod distributions;
pub mod error;
pub mod gibbs;
pub mod irf;
pub mod linalg;
mod matrix_serde;
pub mod model;
pub mod parafac;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{ArtModel, Coefficient, TensorSeries, VarModel};
pub use parafac::{ParafacCoefficient, ParameterForm};
pub use scalar::Scalar;
pub use tensor::{DenseTensor, ModePartition};

pub type Tensor = DenseTensor<f64>;
pub type Tensor32 = DenseTensor<f32>;
pub type Parafac = ParafacCoefficient<f64>;
pub type Parafac32 = ParafacCoefficient<f32>;
