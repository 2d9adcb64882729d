//! Random variates and log-densities for the prior and the full conditionals.
//!
//! Gamma laws use the shape-rate parametrization throughout.

mod bessel;
mod gig;
mod scalar_laws;
mod tensor_normal;
mod wishart;

pub use bessel::{bessel_k, log_bessel_k};
pub use gig::Gig;
pub use scalar_laws::{
    dirichlet_sample, exponential_logpdf, exponential_sample, gamma_logpdf, gamma_sample,
    inverse_gamma_logpdf, standard_normal, standard_normal_vec,
};
pub use tensor_normal::TensorNormal;
pub use wishart::{inverse_wishart_logpdf, inverse_wishart_sample};
