//! Log-likelihoods, priors and unconstrained log-posteriors for the
//! independent, shared-factor and Hawkes-AR-Gumbel models.

mod likelihood;
mod params;
mod posterior;
mod prior;

pub use likelihood::{
    ar1_scan, branching_ratio, hawkes_intensity, loglik_hag, loglik_indep, loglik_shared,
    logprior_hag, logprior_indep, logprior_shared, HAG_NAMES, INDEP_NAMES, SHARED_NAMES,
};
pub use params::{HagParams, IndepParams, LatentState, SharedParams, SUBCRITICAL_LIMIT};
pub use posterior::{ModelKind, ModelPoint, Posterior};
pub use prior::{Prior, PriorSpec};
