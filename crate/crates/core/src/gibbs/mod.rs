//! Three-block Gibbs sampler for the PARAFAC-restricted ART(1) model.

mod geweke;
mod hmc;
mod prior;
mod sampler;
mod state;
mod steps;
mod summary;

pub use geweke::{geweke_test, GewekeConfig, GewekeStat};
pub use hmc::{LogTauHmc, LogTauTarget};
pub use prior::PriorConfig;
pub use sampler::{initial_state, retained_draws, run_sampler, Draw, Sampler, SamplerConfig, Trace, TraceMeta};
pub use state::{McmcState, Regression};
pub use steps::{
    beta_conditional, component_scales, step_covariances, step_global_scales, step_local_scales_and_marginals, sweep,
    TauKernel, TauUpdate,
};
pub use summary::{
    effective_sample_size, normalized_sigma, posterior_summary, quantile_sorted, split_rhat, EntrySummary,
    PosteriorSummary, ScalarDiagnostics,
};
