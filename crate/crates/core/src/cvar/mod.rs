//! Posterior-predictive annual-loss simulation and tail risk measures.
//!
//! Each simulation picks a posterior draw uniformly, simulates one
//! representative year and records the aggregate loss
//! `S = sum_k (u + Y_k)`. VaR at level `q` is the order statistic of rank
//! `ceil(q M)` (no interpolation); CVaR is the mean of all samples at or
//! above that VaR.
//!
//! Simulation `i` uses a ChaCha8 generator keyed by the seed on stream `i`,
//! so the output does not depend on how the work is split across threads.

mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::copula::{gumbel_normal_scores, GumbelTheta};
use crate::distributions::{gpd_sample_raw, poisson_raw, std_normal_sample};
use crate::error::{Error, Result};
use crate::inference::PosteriorDraws;
use crate::models::{HagParams, IndepParams, ModelKind, SharedParams};

pub use report::{compare_reports, CvarReport};

/// Confidence levels reported by default.
pub const DEFAULT_LEVELS: [f64; 3] = [0.999, 0.9995, 0.99995];
/// Default number of predictive simulations.
pub const DEFAULT_SIMULATIONS: usize = 1_000_000;
/// Ceiling on the Poisson rate of one simulated year.
pub const LAMBDA_CAP: f64 = 500.0;
/// Fewer tail samples than this flags a level as unreliable.
pub const MIN_TAIL_SAMPLES: usize = 10;

/// Structural parameters of one posterior draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictiveParams {
    Independent(IndepParams),
    Shared(SharedParams),
    Hag(HagParams),
}

impl PredictiveParams {
    /// Reads a structural row in the column order of `kind`.
    pub fn from_row(kind: ModelKind, row: &[f64]) -> Result<Self> {
        let need = kind.structural_names().len();
        if row.len() != need {
            return Err(Error::arg(format!(
                "{kind} draw needs {need} values, got {}",
                row.len()
            )));
        }
        let p = match kind {
            ModelKind::Independent => Self::Independent(IndepParams {
                mu_lambda: row[0],
                mu_sigma: row[1],
                xi: row[2],
            }),
            ModelKind::Shared => Self::Shared(SharedParams {
                mu_lambda: row[0],
                alpha: row[1],
                mu_sigma: row[2],
                beta: row[3],
                xi: row[4],
            }),
            ModelKind::Hag => Self::Hag(HagParams {
                phi: row[0],
                mu_lambda: row[1],
                alpha: row[2],
                eta: row[3],
                kappa: row[4],
                mu_sigma: row[5],
                beta_s: row[6],
                xi: row[7],
                theta: row[8],
            }),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Independent(_) => ModelKind::Independent,
            Self::Shared(_) => ModelKind::Shared,
            Self::Hag(_) => ModelKind::Hag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Independent(p) => p.validate(),
            Self::Shared(p) => p.validate(),
            Self::Hag(p) => p.validate(),
        }
    }

    /// Annual Poisson rate and GPD scale for one simulated year.
    fn rate_and_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, f64) {
        match *self {
            Self::Independent(p) => (p.mu_lambda.exp(), p.mu_sigma.exp(), p.xi),
            Self::Shared(p) => {
                let z = std_normal_sample(rng);
                let lambda = (p.mu_lambda + p.alpha * z).exp().min(LAMBDA_CAP);
                (lambda, (p.mu_sigma + p.beta * z).exp(), p.xi)
            }
            Self::Hag(p) => {
                let theta = GumbelTheta::new(p.theta).expect("validated draw");
                let (w_f, w_s) = gumbel_normal_scores(theta, rng);
                let past_sd = p.phi / (1.0 - p.phi * p.phi).sqrt();
                let z = past_sd * std_normal_sample(rng) + w_f;
                let lambda = (p.mu_lambda + p.alpha * z).exp() / (1.0 - p.branching_ratio());
                (
                    lambda.min(LAMBDA_CAP),
                    (p.mu_sigma + p.beta_s * w_s).exp(),
                    p.xi,
                )
            }
        }
    }
}

fn loss_given_count<R: Rng + ?Sized>(n: u64, u: f64, sigma: f64, xi: f64, rng: &mut R) -> f64 {
    (0..n).map(|_| u + gpd_sample_raw(sigma, xi, rng)).sum()
}

/// One posterior-predictive annual aggregate loss above threshold `u`.
pub fn simulate_annual_loss<R: Rng + ?Sized>(draw: &PredictiveParams, u: f64, rng: &mut R) -> f64 {
    let (lambda, sigma, xi) = draw.rate_and_scale(rng);
    let n = poisson_raw(lambda, rng);
    loss_given_count(n, u, sigma, xi, rng)
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::arg("at least one confidence level is required"));
    }
    if levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::arg(format!("levels must lie in (0, 1): {levels:?}")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg(format!("levels must be strictly increasing: {levels:?}")));
    }
    Ok(())
}

/// Generator for simulation `index` under `seed`.
pub fn simulation_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates `m` predictive annual losses, resampling a draw per simulation.
pub fn simulate_losses(draws: &[PredictiveParams], u: f64, m: usize, seed: u64) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::arg("no posterior draws"));
    }
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::arg(format!("threshold must be positive, got {u}")));
    }
    if m == 0 {
        return Err(Error::arg("number of simulations must be positive"));
    }
    for d in draws {
        d.validate()?;
    }
    let key = ChaCha8Rng::seed_from_u64(seed).get_seed();
    Ok((0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(i);
            let j = rng.random_range(0..draws.len());
            simulate_annual_loss(&draws[j], u, &mut rng)
        })
        .collect())
}

/// VaR, CVaR and the CVaR standard error from a loss sample.
pub fn tail_measures(losses: &[f64], levels: &[f64]) -> Result<TailMeasures> {
    check_levels(levels)?;
    if losses.is_empty() {
        return Err(Error::arg("empty loss sample"));
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let mut out = TailMeasures::default();
    for &q in levels {
        let rank = ((q * m as f64).ceil() as usize).clamp(1, m);
        let var = sorted[rank - 1];
        let start = sorted.partition_point(|s| *s < var);
        let tail = &sorted[start..];
        let n = tail.len() as f64;
        let mean = tail.iter().sum::<f64>() / n;
        let se = if tail.len() > 1 {
            let v = tail.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (v / n).sqrt()
        } else {
            0.0
        };
        out.var.push(var);
        out.cvar.push(mean);
        out.se.push(se);
        out.tail_counts.push(tail.len());
    }
    out.mean = sorted.iter().sum::<f64>() / m as f64;
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TailMeasures {
    pub var: Vec<f64>,
    pub cvar: Vec<f64>,
    pub se: Vec<f64>,
    pub tail_counts: Vec<usize>,
    pub mean: f64,
}

/// Posterior-predictive VaR and CVaR of the fitted model in `draws`.
pub fn estimate_cvar(
    draws: &PosteriorDraws,
    u: f64,
    levels: &[f64],
    m: usize,
    seed: u64,
) -> Result<CvarReport> {
    let kind = draws
        .model
        .ok_or_else(|| Error::arg("draws carry no model tag"))?;
    let params = draws
        .structural_rows()
        .map(|row| PredictiveParams::from_row(kind, row))
        .collect::<Result<Vec<_>>>()?;
    estimate_cvar_from_params(kind, &params, u, levels, m, seed)
}

/// As [`estimate_cvar`], from explicit parameter vectors.
pub fn estimate_cvar_from_params(
    kind: ModelKind,
    params: &[PredictiveParams],
    u: f64,
    levels: &[f64],
    m: usize,
    seed: u64,
) -> Result<CvarReport> {
    check_levels(levels)?;
    if let Some(p) = params.iter().find(|p| p.kind() != kind) {
        return Err(Error::arg(format!("{} draw in a {kind} report", p.kind())));
    }
    let losses = simulate_losses(params, u, m, seed)?;
    let t = tail_measures(&losses, levels)?;
    let warnings = levels
        .iter()
        .zip(&t.tail_counts)
        .filter(|(_, n)| **n < MIN_TAIL_SAMPLES)
        .map(|(q, n)| format!("level {q}: only {n} samples at or above VaR"))
        .collect();
    Ok(CvarReport {
        model: kind,
        seed,
        m_draws: m,
        posterior_draws: params.len(),
        threshold: u,
        levels: levels.to_vec(),
        var: t.var,
        cvar: t.cvar,
        se: t.se,
        tail_counts: t.tail_counts,
        mean_loss: t.mean,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indep(mu_lambda: f64, mu_sigma: f64, xi: f64) -> PredictiveParams {
        PredictiveParams::Independent(IndepParams {
            mu_lambda,
            mu_sigma,
            xi,
        })
    }

    #[test]
    fn wald_identity_for_the_mean() {
        let p = indep(20f64.ln(), 1e6f64.ln(), 0.7);
        let u = 5e5;
        let losses = simulate_losses(&[p], u, 1_000_000, 7).unwrap();
        let mean = losses.iter().sum::<f64>() / losses.len() as f64;
        let expected = 20.0 * (u + 1e6 / 0.3);
        assert!((mean / expected - 1.0).abs() < 0.01, "{mean} vs {expected}");
    }

    #[test]
    fn zero_count_gives_zero_loss() {
        let p = indep(-50.0, 10.0, 0.5);
        let mut rng = simulation_rng(1, 0);
        assert_eq!(simulate_annual_loss(&p, 1.0, &mut rng), 0.0);
    }

    #[test]
    fn point_mass_gives_equal_var_and_cvar() {
        // N = 1 forced, tiny scale: every loss is u + O(1e-12)
        let losses: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut rng = simulation_rng(3, i);
                loss_given_count(1, 5e5, 1e-12, 0.01, &mut rng)
            })
            .collect();
        let t = tail_measures(&losses, &DEFAULT_LEVELS).unwrap();
        for k in 0..3 {
            assert!((t.var[k] - 5e5).abs() < 1e-6);
            assert!((t.cvar[k] - t.var[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn translation_by_threshold() {
        let (sigma, xi, delta) = (1e5, 0.6, 2.5e4);
        let sample = |u: f64| -> Vec<f64> {
            (0..20_000)
                .map(|i| loss_given_count(1, u, sigma, xi, &mut simulation_rng(9, i)))
                .collect()
        };
        let a = tail_measures(&sample(1e5), &DEFAULT_LEVELS).unwrap();
        let b = tail_measures(&sample(1e5 + delta), &DEFAULT_LEVELS).unwrap();
        for k in 0..3 {
            assert!((b.var[k] - a.var[k] - delta).abs() < 1e-6 * a.var[k]);
            assert!((b.cvar[k] - a.cvar[k] - delta).abs() < 1e-6 * a.cvar[k]);
        }
    }

    #[test]
    fn order_statistic_convention() {
        let losses: Vec<f64> = (1..=1000).map(f64::from).collect();
        let t = tail_measures(&losses, &[0.5, 0.999]).unwrap();
        assert_eq!(t.var, vec![500.0, 999.0]);
        assert_eq!(t.cvar[1], 999.5);
        assert_eq!(t.tail_counts, vec![501, 2]);
    }

    #[test]
    fn ties_at_var_are_in_the_tail() {
        let losses = [0.0, 1.0, 5.0, 5.0, 5.0];
        let t = tail_measures(&losses, &[0.7]).unwrap();
        assert_eq!(t.var[0], 5.0);
        assert_eq!(t.tail_counts[0], 3);
    }

    #[test]
    fn levels_are_validated() {
        assert!(tail_measures(&[1.0], &[0.9, 0.9]).is_err());
        assert!(tail_measures(&[1.0], &[1.0]).is_err());
        assert!(tail_measures(&[1.0], &[]).is_err());
    }

    #[test]
    fn report_is_monotone_and_flags_thin_tails() {
        let p = indep(2.0, 10.0, 0.8);
        let r = estimate_cvar_from_params(ModelKind::Independent, &[p], 1e4, &DEFAULT_LEVELS, 50_000, 5)
            .unwrap();
        for k in 0..3 {
            assert!(r.cvar[k] >= r.var[k]);
        }
        assert!(r.var.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.cvar.windows(2).all(|w| w[0] <= w[1]));
        // 50k sims leave ~2.5 samples above the 99.995% VaR
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn hag_without_memory_or_dependence_matches_shared_structure() {
        // phi = 0, theta = 1, r = 0: rate uses W^f alone and scale W^s alone
        let p = PredictiveParams::Hag(HagParams {
            phi: 0.0,
            mu_lambda: 1.0,
            alpha: 0.0,
            eta: 0.0,
            kappa: 1.0,
            mu_sigma: 5.0,
            beta_s: 0.0,
            xi: 0.3,
            theta: 1.0,
        });
        let q = indep(1.0, 5.0, 0.3);
        let a = simulate_losses(&[p], 10.0, 200_000, 1).unwrap();
        let b = simulate_losses(&[q], 10.0, 200_000, 2).unwrap();
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let expected = 1f64.exp() * (10.0 + 5f64.exp() / 0.7);
        assert!((ma / expected - 1.0).abs() < 0.02, "{ma}");
        assert!((mb / expected - 1.0).abs() < 0.02, "{mb}");
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let p = [indep(2.0, 8.0, 0.5), indep(2.5, 8.5, 0.6)];
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_losses(&p, 100.0, 20_000, 77).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn supercritical_draw_is_rejected() {
        let row = [0.7, 3.0, 0.5, 3.0, 0.5, 13.82, 0.4, 0.7, 2.0];
        assert!(PredictiveParams::from_row(ModelKind::Hag, &row).is_err());
        assert!(PredictiveParams::from_row(ModelKind::Hag, &row[..8]).is_err());
    }
}
