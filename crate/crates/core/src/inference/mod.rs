//! Posterior sampling with NUTS and convergence diagnostics.
//!
//! Chains run in parallel. Chain `c` draws all of its randomness from a
//! ChaCha8 generator keyed by the sampler seed on stream `c`, so results do
//! not depend on thread scheduling.

mod adapt;
pub mod diagnostics;
mod draws;
mod nuts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{ModelKind, Posterior, PriorSpec};
use crate::simulator::PanelDataset;

use adapt::{DualAveraging, MetricAdaptation};
use nuts::PhasePoint;

pub use diagnostics::{ess_bulk, ess_tail, hdi, split_rhat, ParamSummary};
pub use draws::{ChainDraws, Diagnostics, PosteriorDraws};
pub use nuts::{mean_energy_error, TransitionStats, MAX_DELTA_H};

/// A differentiable log-density on an unconstrained space.
pub trait LogDensity {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log-density.
    /// Returns `-inf` outside the support; the gradient is then unspecified.
    fn logp_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Maximum number of initialisation attempts per chain.
pub const MAX_INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_tree_depth: u32,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 2,
            warmup: 2000,
            draws: 2000,
            target_accept: 0.9,
            max_tree_depth: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Default settings with the model's recommended acceptance target.
    pub fn for_model(kind: ModelKind) -> Self {
        Self {
            target_accept: kind.default_target_accept(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::arg("chains must be at least 1"));
        }
        if self.draws < 4 {
            return Err(Error::arg("draws must be at least 4"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::arg(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        if self.max_tree_depth == 0 {
            return Err(Error::arg("max_tree_depth must be at least 1"));
        }
        Ok(())
    }
}

/// Generator for chain `chain` under sampler seed `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Step-size heuristic: double or halve until a single leapfrog step
/// crosses an acceptance probability of 0.8.
fn initial_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    start: &PhasePoint,
    inv_metric: &[f64],
    mut eps: f64,
    rng: &mut R,
) -> f64 {
    let threshold = 0.8f64.ln();
    let try_step = |eps: f64, rng: &mut R| {
        let mut z = start.clone();
        z.resample_momentum(inv_metric, rng);
        let h0 = z.hamiltonian(inv_metric);
        nuts::leapfrog(target, &mut z, inv_metric, eps);
        h0 - z.hamiltonian(inv_metric)
    };
    let direction = if try_step(eps, rng) > threshold { 1 } else { -1 };
    for _ in 0..100 {
        let delta = try_step(eps, rng);
        if direction == 1 && !(delta > threshold) {
            break;
        }
        if direction == -1 && !(delta < threshold) {
            break;
        }
        let next = if direction == 1 { 2.0 * eps } else { 0.5 * eps };
        if !(1e-10..=1e7).contains(&next) {
            break;
        }
        eps = next;
    }
    eps
}

fn initial_point<T, F>(target: &T, init: &F, rng: &mut ChaCha8Rng, chain: usize) -> Result<PhasePoint>
where
    T: LogDensity + ?Sized,
    F: Fn(&mut ChaCha8Rng) -> Vec<f64>,
{
    for _ in 0..MAX_INIT_ATTEMPTS {
        let z = PhasePoint::new(target, init(rng));
        if z.logp.is_finite() && z.grad.iter().all(|g| g.is_finite()) {
            return Ok(z);
        }
    }
    Err(Error::Sampler(format!(
        "chain {chain}: no finite starting point after {MAX_INIT_ATTEMPTS} attempts"
    )))
}

/// Runs one adapted chain. Stored rows pass through `transform`.
fn run_chain<T, F, G>(
    target: &T,
    cfg: &SamplerConfig,
    chain: usize,
    init: &F,
    transform: &G,
) -> Result<ChainDraws>
where
    T: LogDensity + ?Sized,
    F: Fn(&mut ChaCha8Rng) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = target.dim();
    let mut rng = chain_rng(cfg.seed, chain);
    let mut z = initial_point(target, init, &mut rng, chain)?;
    let mut inv_metric = vec![1.0; dim];
    let mut eps = initial_step_size(target, &z, &inv_metric, 1.0, &mut rng);
    let mut step = DualAveraging::new(cfg.target_accept, eps);
    let mut metric = MetricAdaptation::new(dim, cfg.warmup);

    let mut warmup_divergences = 0;
    for _ in 0..cfg.warmup {
        let st = nuts::transition(target, &mut z, &inv_metric, eps, cfg.max_tree_depth, &mut rng);
        warmup_divergences += usize::from(st.divergent);
        eps = step.learn(st.accept_stat);
        if let Some(v) = metric.learn(&z.q) {
            inv_metric = v;
            eps = initial_step_size(target, &z, &inv_metric, eps, &mut rng);
            step.restart(eps);
        }
    }
    if cfg.warmup > 0 {
        if warmup_divergences == cfg.warmup {
            return Err(Error::Sampler(format!(
                "chain {chain}: every warmup transition diverged"
            )));
        }
        eps = step.final_step_size();
    }

    let mut out = ChainDraws {
        draws: Vec::with_capacity(cfg.draws),
        divergent: Vec::with_capacity(cfg.draws),
        tree_depth: Vec::with_capacity(cfg.draws),
        accept_stat: Vec::with_capacity(cfg.draws),
        step_size: eps,
        inv_metric: inv_metric.clone(),
        warmup_divergences,
    };
    for _ in 0..cfg.draws {
        let st = nuts::transition(target, &mut z, &inv_metric, eps, cfg.max_tree_depth, &mut rng);
        out.draws.push(transform(&z.q));
        out.divergent.push(st.divergent);
        out.tree_depth.push(st.tree_depth);
        out.accept_stat.push(st.accept_stat);
    }
    Ok(out)
}

/// Samples an arbitrary target. `init` proposes unconstrained starting
/// points; stored draws are the unconstrained coordinates.
pub fn sample_target<T, F>(
    target: &T,
    names: Vec<String>,
    cfg: &SamplerConfig,
    init: F,
) -> Result<PosteriorDraws>
where
    T: LogDensity + Sync + ?Sized,
    F: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    if names.len() != target.dim() {
        return Err(Error::arg(format!(
            "{} column names for a {}-dimensional target",
            names.len(),
            target.dim()
        )));
    }
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(target, cfg, c, &init, &|q: &[f64]| q.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let structural = names.len();
    Ok(PosteriorDraws {
        model: None,
        names,
        structural,
        max_tree_depth: cfg.max_tree_depth,
        chains,
    })
}

/// Samples the posterior of `kind` given the panel and default priors.
pub fn sample_posterior(
    kind: ModelKind,
    data: &PanelDataset,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws> {
    sample_posterior_with_priors(kind, data, PriorSpec::default(), cfg)
}

pub fn sample_posterior_with_priors(
    kind: ModelKind,
    data: &PanelDataset,
    priors: PriorSpec,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws> {
    cfg.validate()?;
    let post = Posterior::with_priors(kind, data, priors);
    let init = |rng: &mut ChaCha8Rng| post.jittered_start(rng);
    let transform = |q: &[f64]| post.natural_row(q);
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(&post, cfg, c, &init, &transform))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws {
        model: Some(kind),
        names: post.column_names(),
        structural: post.structural_dim(),
        max_tree_depth: cfg.max_tree_depth,
        chains,
    })
}
