//! Log-likelihoods of the three nested models, with hand-written reverse
//! accumulation for the gradients.
//!
//! Gradients are returned on the natural parameter scale, in the order of
//! the corresponding `*_NAMES` constant followed by the latent blocks.

use crate::copula::gumbel_logpdf_normal_scores;
use crate::distributions::std_normal_logpdf;
use crate::error::{Error, Result};
use crate::simulator::PanelDataset;

use super::params::{HagParams, IndepParams, LatentState, SharedParams, SUBCRITICAL_LIMIT};
use super::prior::PriorSpec;

pub const INDEP_NAMES: [&str; 3] = ["mu_lambda", "mu_sigma", "xi"];
pub const SHARED_NAMES: [&str; 5] = ["mu_lambda", "alpha", "mu_sigma", "beta", "xi"];
pub const HAG_NAMES: [&str; 9] = [
    "phi", "mu_lambda", "alpha", "eta", "kappa", "mu_sigma", "beta_s", "xi", "theta",
];

/// `z[0] = w[0]`, `z[t] = phi z[t-1] + w[t]`.
pub fn ar1_scan(phi: f64, w_f: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(w_f.len());
    let mut prev = 0.0;
    for (t, &w) in w_f.iter().enumerate() {
        let cur = if t == 0 { w } else { phi * prev + w };
        z.push(cur);
        prev = cur;
    }
    z
}

/// `eta exp(-kappa) / (1 - exp(-kappa))`.
pub fn branching_ratio(eta: f64, kappa: f64) -> f64 {
    let decay = (-kappa).exp();
    eta * decay / -(-kappa).exp_m1()
}

/// Intensity in year `t = counts.len() + 1` given the earlier counts:
/// `exp(mu_lambda + alpha z_t) + sum_s eta N_s exp(-kappa (t - s))`.
pub fn hawkes_intensity(p: &HagParams, z_t: f64, counts: &[u64]) -> Result<f64> {
    let t = counts.len() + 1;
    let excitation: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = i + 1;
            p.eta * n as f64 * (-p.kappa * (t - s) as f64).exp()
        })
        .sum();
    let lambda = (p.mu_lambda + p.alpha * z_t).exp() + excitation;
    if lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(Error::IntensityOverflow { year: t, value: lambda })
    }
}

#[inline]
fn poisson_logpmf(n: u64, lambda: f64) -> f64 {
    let n = n as f64;
    if n == 0.0 {
        -lambda
    } else {
        n * lambda.ln() - lambda - libm::lgamma(n + 1.0)
    }
}

/// GPD log-likelihood of one year's exceedances at log-scale `log_sigma`.
///
/// Returns `(value, d/d log_sigma, d/d xi)`.
#[inline]
fn gpd_year(ys: &[f64], log_sigma: f64, xi: f64) -> (f64, f64, f64) {
    if ys.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let inv_sigma = (-log_sigma).exp();
    let k = 1.0 + 1.0 / xi;
    let mut sum_log = 0.0;
    let mut sum_frac = 0.0;
    let mut sum_scaled = 0.0;
    for &y in ys {
        let scaled = y * inv_sigma;
        let q = xi * scaled;
        let inv = 1.0 / (1.0 + q);
        sum_log += q.ln_1p();
        sum_frac += q * inv;
        sum_scaled += scaled * inv;
    }
    let n = ys.len() as f64;
    let value = -n * log_sigma - k * sum_log;
    let d_log_sigma = -n + k * sum_frac;
    let d_xi = sum_log / (xi * xi) - k * sum_scaled;
    (value, d_log_sigma, d_xi)
}

/// Independent model log-likelihood.
pub fn loglik_indep(p: &IndepParams, data: &PanelDataset) -> f64 {
    indep_eval(p, data, None)
}

pub(crate) fn indep_eval(p: &IndepParams, data: &PanelDataset, grad: Option<&mut [f64]>) -> f64 {
    let lambda = p.mu_lambda.exp();
    let mut value = 0.0;
    let mut d_mu_l = 0.0;
    let mut d_mu_s = 0.0;
    let mut d_xi = 0.0;
    for (&n, ys) in data.counts().iter().zip(data.exceedances()) {
        value += poisson_logpmf(n, lambda);
        d_mu_l += n as f64 - lambda;
        let (v, ds, dx) = gpd_year(ys, p.mu_sigma, p.xi);
        value += v;
        d_mu_s += ds;
        d_xi += dx;
    }
    if let Some(g) = grad {
        g[0] = d_mu_l;
        g[1] = d_mu_s;
        g[2] = d_xi;
    }
    value
}

/// Shared-factor log-likelihood given the factor path `z`. The standard
/// normal density of `z` belongs to the prior, not to this term.
pub fn loglik_shared(p: &SharedParams, z: &[f64], data: &PanelDataset) -> f64 {
    shared_eval(p, z, data, None)
}

pub(crate) fn shared_eval(
    p: &SharedParams,
    z: &[f64],
    data: &PanelDataset,
    grad: Option<&mut [f64]>,
) -> f64 {
    debug_assert_eq!(z.len(), data.years());
    let mut value = 0.0;
    let mut g_struct = [0.0; 5];
    let mut g_z = vec![0.0; z.len()];
    for (t, (&n, ys)) in data.counts().iter().zip(data.exceedances()).enumerate() {
        let lambda = (p.mu_lambda + p.alpha * z[t]).exp();
        value += poisson_logpmf(n, lambda);
        let dl = n as f64 - lambda;
        g_struct[0] += dl;
        g_struct[1] += dl * z[t];
        g_z[t] += dl * p.alpha;

        let (v, ds, dx) = gpd_year(ys, p.mu_sigma + p.beta * z[t], p.xi);
        value += v;
        g_struct[2] += ds;
        g_struct[3] += ds * z[t];
        g_z[t] += ds * p.beta;
        g_struct[4] += dx;
    }
    if let Some(g) = grad {
        g[..5].copy_from_slice(&g_struct);
        g[5..5 + z.len()].copy_from_slice(&g_z);
    }
    value
}

/// Hawkes-AR-Gumbel log-likelihood: Poisson frequency at the Hawkes
/// intensity, GPD severity at the copula-linked scale, and the Gumbel
/// copula correction on `(Phi(w_f), Phi(w_s))`.
///
/// The stress path is recomputed from `lat.w_f` and `p.phi`. Returns
/// negative infinity when the branching ratio is not subcritical.
pub fn loglik_hag(p: &HagParams, lat: &LatentState, data: &PanelDataset) -> f64 {
    hag_eval(p, &lat.w_f, &lat.w_s, data, None)
}

pub(crate) fn hag_eval(
    p: &HagParams,
    w_f: &[f64],
    w_s: &[f64],
    data: &PanelDataset,
    grad: Option<&mut [f64]>,
) -> f64 {
    let years = data.years();
    debug_assert_eq!(w_f.len(), years);
    debug_assert_eq!(w_s.len(), years);
    if p.branching_ratio() >= SUBCRITICAL_LIMIT {
        if let Some(g) = grad {
            g.fill(0.0);
        }
        return f64::NEG_INFINITY;
    }
    let counts = data.counts();
    let z = ar1_scan(p.phi, w_f);
    let decay = (-p.kappa).exp();

    let mut value = 0.0;
    // [phi, mu_l, alpha, eta, kappa, mu_s, beta_s, xi, theta]
    let mut gs = [0.0; 9];
    let mut z_bar = vec![0.0; years];
    let mut ws_bar = vec![0.0; years];
    let mut wf_bar = vec![0.0; years];

    let mut hist = 0.0; // sum_s N_s e^{-kappa (t-s)}
    let mut hist_dk = 0.0; // its kappa derivative
    for t in 0..years {
        if t > 0 {
            let carried = hist + counts[t - 1] as f64;
            hist = decay * carried;
            hist_dk = -hist + decay * hist_dk;
        }
        let base = (p.mu_lambda + p.alpha * z[t]).exp();
        let lambda = base + p.eta * hist;
        if !lambda.is_finite() {
            if let Some(g) = grad {
                g.fill(0.0);
            }
            return f64::NEG_INFINITY;
        }
        let n = counts[t];
        value += poisson_logpmf(n, lambda);
        let gl = n as f64 / lambda - 1.0;
        gs[1] += gl * base;
        gs[2] += gl * base * z[t];
        z_bar[t] += gl * base * p.alpha;
        gs[3] += gl * hist;
        gs[4] += gl * p.eta * hist_dk;

        let (v, ds, dx) = gpd_year(&data.exceedances()[t], p.mu_sigma + p.beta_s * w_s[t], p.xi);
        value += v;
        gs[5] += ds;
        gs[6] += ds * w_s[t];
        ws_bar[t] += ds * p.beta_s;
        gs[7] += dx;

        let (cv, dwf, dws, dth) = gumbel_logpdf_normal_scores(w_f[t], w_s[t], p.theta);
        value += cv;
        wf_bar[t] += dwf;
        ws_bar[t] += dws;
        gs[8] += dth;
    }

    if let Some(g) = grad {
        // reverse pass through the AR(1) scan
        for t in (0..years).rev() {
            wf_bar[t] += z_bar[t];
            if t > 0 {
                gs[0] += z_bar[t] * z[t - 1];
                z_bar[t - 1] += p.phi * z_bar[t];
            }
        }
        g[..9].copy_from_slice(&gs);
        g[9..9 + years].copy_from_slice(&wf_bar);
        g[9 + years..9 + 2 * years].copy_from_slice(&ws_bar);
    }
    value
}

fn latent_normal(ws: &[f64], grad: Option<&mut [f64]>) -> f64 {
    if let Some(g) = grad {
        for (gi, &w) in g.iter_mut().zip(ws) {
            *gi = -w;
        }
    }
    ws.iter().map(|&w| std_normal_logpdf(w)).sum()
}

pub fn logprior_indep(p: &IndepParams, priors: &PriorSpec) -> f64 {
    indep_prior(p, priors, None)
}

pub(crate) fn indep_prior(p: &IndepParams, priors: &PriorSpec, grad: Option<&mut [f64]>) -> f64 {
    let terms = [
        priors.mu_lambda.log_density_grad(p.mu_lambda),
        priors.mu_sigma.log_density_grad(p.mu_sigma),
        priors.xi.log_density_grad(p.xi),
    ];
    sum_terms(&terms, grad)
}

fn sum_terms(terms: &[(f64, f64)], grad: Option<&mut [f64]>) -> f64 {
    if let Some(g) = grad {
        for (gi, t) in g.iter_mut().zip(terms) {
            *gi = t.1;
        }
    }
    terms.iter().map(|t| t.0).sum()
}

/// Shared-model prior including the standard normal factor path.
pub fn logprior_shared(p: &SharedParams, z: &[f64], priors: &PriorSpec) -> f64 {
    shared_prior(p, z, priors, None)
}

pub(crate) fn shared_prior(
    p: &SharedParams,
    z: &[f64],
    priors: &PriorSpec,
    grad: Option<&mut [f64]>,
) -> f64 {
    let terms = [
        priors.mu_lambda.log_density_grad(p.mu_lambda),
        priors.alpha.log_density_grad(p.alpha),
        priors.mu_sigma.log_density_grad(p.mu_sigma),
        priors.beta.log_density_grad(p.beta),
        priors.xi.log_density_grad(p.xi),
    ];
    match grad {
        Some(g) => {
            let (head, tail) = g.split_at_mut(5);
            sum_terms(&terms, Some(head)) + latent_normal(z, Some(tail))
        }
        None => sum_terms(&terms, None) + latent_normal(z, None),
    }
}

/// Structural priors plus standard normal innovations; negative infinity
/// outside the support or when the branching ratio is not subcritical.
pub fn logprior_hag(p: &HagParams, lat: &LatentState, priors: &PriorSpec) -> f64 {
    hag_prior(p, &lat.w_f, &lat.w_s, priors, None)
}

pub(crate) fn hag_prior(
    p: &HagParams,
    w_f: &[f64],
    w_s: &[f64],
    priors: &PriorSpec,
    grad: Option<&mut [f64]>,
) -> f64 {
    if p.branching_ratio() >= SUBCRITICAL_LIMIT {
        if let Some(g) = grad {
            g.fill(0.0);
        }
        return f64::NEG_INFINITY;
    }
    let terms = [
        priors.phi.log_density_grad(p.phi),
        priors.mu_lambda.log_density_grad(p.mu_lambda),
        priors.alpha.log_density_grad(p.alpha),
        priors.eta.log_density_grad(p.eta),
        priors.kappa.log_density_grad(p.kappa),
        priors.mu_sigma.log_density_grad(p.mu_sigma),
        priors.beta_s.log_density_grad(p.beta_s),
        priors.xi.log_density_grad(p.xi),
        priors.theta.log_density_grad(p.theta),
    ];
    let years = w_f.len();
    match grad {
        Some(g) => {
            let (head, rest) = g.split_at_mut(9);
            let (gf, gw) = rest.split_at_mut(years);
            sum_terms(&terms, Some(head)) + latent_normal(w_f, Some(gf)) + latent_normal(w_s, Some(gw))
        }
        None => sum_terms(&terms, None) + latent_normal(w_f, None) + latent_normal(w_s, None),
    }
}
