//! Log-posterior on the unconstrained scale used by the sampler.
//!
//! Layout of the unconstrained vector:
//!
//! | model  | coordinates                                                                  |
//! |--------|------------------------------------------------------------------------------|
//! | indep  | `mu_lambda, mu_sigma, logit_xi`                                              |
//! | shared | `mu_lambda, ln alpha, mu_sigma, ln beta, logit_xi, z[1..T]`                  |
//! | hag    | `logit phi, mu_lambda, ln alpha, logit_r, ln kappa, mu_sigma, ln beta_s, logit_xi, ln(theta-1), w_f[1..T], w_s[1..T]` |
//!
//! `logit_xi` is the log-odds of `(xi - 0.01) / 1.99` and `logit_r` the
//! log-odds of `r / 0.95`, where `r` is the branching ratio; `eta` follows
//! from `r` and `kappa`. The log-Jacobian of
//! every transform is included in the density.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{XI_MAX, XI_MIN};
use crate::error::{Error, Result};
use crate::inference::LogDensity;
use crate::simulator::PanelDataset;

use super::likelihood::{
    hag_eval, hag_prior, indep_eval, indep_prior, shared_eval, shared_prior, HAG_NAMES, INDEP_NAMES,
    SHARED_NAMES,
};
use super::params::{HagParams, IndepParams, LatentState, SharedParams, SUBCRITICAL_LIMIT};
use super::prior::PriorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(rename = "indep")]
    Independent,
    Shared,
    Hag,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Independent, ModelKind::Shared, ModelKind::Hag];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Independent => "indep",
            ModelKind::Shared => "shared",
            ModelKind::Hag => "hag",
        }
    }

    pub fn structural_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Independent => &INDEP_NAMES,
            ModelKind::Shared => &SHARED_NAMES,
            ModelKind::Hag => &HAG_NAMES,
        }
    }

    /// Default NUTS target acceptance: 0.98 for the full model, 0.90 otherwise.
    pub fn default_target_accept(self) -> f64 {
        match self {
            ModelKind::Hag => 0.98,
            _ => 0.90,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Independent => "Independent",
            ModelKind::Shared => "Shared factor",
            ModelKind::Hag => "Hawkes-AR-Gumbel",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "indep" | "independent" => Ok(ModelKind::Independent),
            "shared" => Ok(ModelKind::Shared),
            "hag" => Ok(ModelKind::Hag),
            other => Err(Error::arg(format!(
                "unknown model `{other}` (expected indep, shared or hag)"
            ))),
        }
    }
}

/// A point of one model on the natural scale.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelPoint {
    Independent(IndepParams),
    Shared(SharedParams, Vec<f64>),
    Hag(HagParams, LatentState),
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln s + ln(1 - s)` for `s = sigmoid(x)`, stable for large `|x|`.
#[inline]
fn log_sigmoid_jacobian(x: f64) -> f64 {
    -x.abs() - 2.0 * (-x.abs()).exp().ln_1p()
}

const XI_RANGE: f64 = XI_MAX - XI_MIN;

#[inline]
fn xi_from_unconstrained(x: f64) -> f64 {
    XI_MIN + XI_RANGE * sigmoid(x)
}

#[inline]
fn xi_to_unconstrained(xi: f64) -> f64 {
    logit((xi - XI_MIN) / XI_RANGE)
}

/// Posterior of one model for one panel.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    kind: ModelKind,
    data: &'a PanelDataset,
    priors: PriorSpec,
}

impl<'a> Posterior<'a> {
    pub fn new(kind: ModelKind, data: &'a PanelDataset) -> Self {
        Self::with_priors(kind, data, PriorSpec::default())
    }

    pub fn with_priors(kind: ModelKind, data: &'a PanelDataset, priors: PriorSpec) -> Self {
        Self { kind, data, priors }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn data(&self) -> &PanelDataset {
        self.data
    }

    pub fn priors(&self) -> &PriorSpec {
        &self.priors
    }

    pub fn structural_dim(&self) -> usize {
        self.kind.structural_names().len()
    }

    /// Column names of a stored draw: structural parameters, then latents.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .kind
            .structural_names()
            .iter()
            .map(|s| s.to_string())
            .collect();
        let years = self.data.years();
        match self.kind {
            ModelKind::Independent => {}
            ModelKind::Shared => names.extend((1..=years).map(|t| format!("z[{t}]"))),
            ModelKind::Hag => {
                names.extend((1..=years).map(|t| format!("w_f[{t}]")));
                names.extend((1..=years).map(|t| format!("w_s[{t}]")));
            }
        }
        names
    }

    pub fn constrain(&self, x: &[f64]) -> ModelPoint {
        let years = self.data.years();
        match self.kind {
            ModelKind::Independent => ModelPoint::Independent(IndepParams {
                mu_lambda: x[0],
                mu_sigma: x[1],
                xi: xi_from_unconstrained(x[2]),
            }),
            ModelKind::Shared => ModelPoint::Shared(
                SharedParams {
                    mu_lambda: x[0],
                    alpha: x[1].exp(),
                    mu_sigma: x[2],
                    beta: x[3].exp(),
                    xi: xi_from_unconstrained(x[4]),
                },
                x[5..5 + years].to_vec(),
            ),
            ModelKind::Hag => {
                let p = hag_from_unconstrained(x);
                let lat = LatentState::new(
                    p.phi,
                    x[9..9 + years].to_vec(),
                    x[9 + years..9 + 2 * years].to_vec(),
                )
                .expect("equal innovation lengths");
                ModelPoint::Hag(p, lat)
            }
        }
    }

    pub fn unconstrain(&self, point: &ModelPoint) -> Result<Vec<f64>> {
        let years = self.data.years();
        let x = match (self.kind, point) {
            (ModelKind::Independent, ModelPoint::Independent(p)) => {
                vec![p.mu_lambda, p.mu_sigma, xi_to_unconstrained(p.xi)]
            }
            (ModelKind::Shared, ModelPoint::Shared(p, z)) if z.len() == years => {
                let mut x = vec![
                    p.mu_lambda,
                    p.alpha.ln(),
                    p.mu_sigma,
                    p.beta.ln(),
                    xi_to_unconstrained(p.xi),
                ];
                x.extend_from_slice(z);
                x
            }
            (ModelKind::Hag, ModelPoint::Hag(p, lat)) if lat.years() == years => {
                p.validate()?;
                let mut x = vec![
                    logit(p.phi),
                    p.mu_lambda,
                    p.alpha.ln(),
                    eta_to_unconstrained(p.eta, p.kappa),
                    p.kappa.ln(),
                    p.mu_sigma,
                    p.beta_s.ln(),
                    xi_to_unconstrained(p.xi),
                    (p.theta - 1.0).ln(),
                ];
                x.extend_from_slice(&lat.w_f);
                x.extend_from_slice(&lat.w_s);
                x
            }
            _ => {
                return Err(Error::arg(format!(
                    "point does not match model {} with {years} years",
                    self.kind
                )))
            }
        };
        Ok(x)
    }

    /// Natural-scale row for storage: structural parameters then latents.
    pub fn natural_row(&self, x: &[f64]) -> Vec<f64> {
        match self.constrain(x) {
            ModelPoint::Independent(p) => vec![p.mu_lambda, p.mu_sigma, p.xi],
            ModelPoint::Shared(p, z) => {
                let mut row = vec![p.mu_lambda, p.alpha, p.mu_sigma, p.beta, p.xi];
                row.extend(z);
                row
            }
            ModelPoint::Hag(p, lat) => {
                let mut row = vec![
                    p.phi, p.mu_lambda, p.alpha, p.eta, p.kappa, p.mu_sigma, p.beta_s, p.xi, p.theta,
                ];
                row.extend(lat.w_f);
                row.extend(lat.w_s);
                row
            }
        }
    }

    /// Prior medians on the unconstrained scale, latents at zero.
    pub fn prior_median(&self) -> Vec<f64> {
        let pr = &self.priors;
        let point = match self.kind {
            ModelKind::Independent => ModelPoint::Independent(IndepParams {
                mu_lambda: pr.mu_lambda.median(),
                mu_sigma: pr.mu_sigma.median(),
                xi: pr.xi.median(),
            }),
            ModelKind::Shared => ModelPoint::Shared(
                SharedParams {
                    mu_lambda: pr.mu_lambda.median(),
                    alpha: pr.alpha.median(),
                    mu_sigma: pr.mu_sigma.median(),
                    beta: pr.beta.median(),
                    xi: pr.xi.median(),
                },
                vec![0.0; self.data.years()],
            ),
            ModelKind::Hag => ModelPoint::Hag(
                HagParams {
                    phi: pr.phi.median(),
                    mu_lambda: pr.mu_lambda.median(),
                    alpha: pr.alpha.median(),
                    eta: pr.eta.median(),
                    kappa: pr.kappa.median(),
                    mu_sigma: pr.mu_sigma.median(),
                    beta_s: pr.beta_s.median(),
                    xi: pr.xi.median(),
                    theta: pr.theta.median(),
                },
                LatentState::zeros(self.data.years()),
            ),
        };
        self.unconstrain(&point).expect("median point matches model")
    }

    /// Prior medians jittered by Uniform(-0.5, 0.5) in every coordinate.
    pub fn jittered_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.prior_median()
            .into_iter()
            .map(|v| v + rng.random::<f64>() - 0.5)
            .collect()
    }

    /// Log-posterior value and gradient, failing if the gradient is not
    /// finite at a finite value.
    pub fn logpost_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut g = vec![0.0; self.dim()];
        let v = self.logp_grad(x, &mut g);
        if v.is_finite() {
            if let Some(index) = g.iter().position(|gi| !gi.is_finite()) {
                return Err(Error::NonFiniteGradient { index });
            }
        }
        Ok((v, g))
    }

    pub fn logpost(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.logp_grad(x, &mut g)
    }

    fn indep_logp(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let ModelPoint::Independent(p) = self.constrain(x) else {
            unreachable!()
        };
        let mut gl = [0.0; 3];
        let mut gp = [0.0; 3];
        let ll = indep_eval(&p, self.data, Some(&mut gl));
        let lp = indep_prior(&p, &self.priors, Some(&mut gp));
        let s = sigmoid(x[2]);
        let jac = XI_RANGE.ln() + log_sigmoid_jacobian(x[2]);
        grad[0] = gl[0] + gp[0];
        grad[1] = gl[1] + gp[1];
        grad[2] = (gl[2] + gp[2]) * XI_RANGE * s * (1.0 - s) + (1.0 - 2.0 * s);
        ll + lp + jac
    }

    fn shared_logp(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let ModelPoint::Shared(p, z) = self.constrain(x) else {
            unreachable!()
        };
        let n = self.dim();
        let mut gl = vec![0.0; n];
        let mut gp = vec![0.0; n];
        let ll = shared_eval(&p, &z, self.data, Some(&mut gl));
        let lp = shared_prior(&p, &z, &self.priors, Some(&mut gp));
        for i in 0..n {
            grad[i] = gl[i] + gp[i];
        }
        let s = sigmoid(x[4]);
        grad[1] = grad[1] * p.alpha + 1.0;
        grad[3] = grad[3] * p.beta + 1.0;
        grad[4] = grad[4] * XI_RANGE * s * (1.0 - s) + (1.0 - 2.0 * s);
        let jac = x[1] + x[3] + XI_RANGE.ln() + log_sigmoid_jacobian(x[4]);
        ll + lp + jac
    }

    fn hag_logp(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let years = self.data.years();
        let p = hag_from_unconstrained(x);
        let w_f = &x[9..9 + years];
        let w_s = &x[9 + years..9 + 2 * years];
        let n = self.dim();
        let mut gl = vec![0.0; n];
        let mut gp = vec![0.0; n];
        let lp = hag_prior(&p, w_f, w_s, &self.priors, Some(&mut gp));
        if !lp.is_finite() {
            grad.fill(0.0);
            return f64::NEG_INFINITY;
        }
        let ll = hag_eval(&p, w_f, w_s, self.data, Some(&mut gl));
        for i in 0..n {
            grad[i] = gl[i] + gp[i];
        }
        let sp = p.phi;
        let sx = sigmoid(x[7]);
        grad[0] = grad[0] * sp * (1.0 - sp) + (1.0 - 2.0 * sp);
        grad[2] = grad[2] * p.alpha + 1.0;
        let su = sigmoid(x[3]);
        // d ln(expm1 kappa) / d kappa, also d ln(eta) / d kappa at fixed u
        let dlog_cap = 1.0 / -(-p.kappa).exp_m1();
        let g_eta = grad[3];
        grad[3] = g_eta * p.eta * (1.0 - su) + (1.0 - 2.0 * su);
        grad[4] = p.kappa * (grad[4] + (g_eta * p.eta + 1.0) * dlog_cap) + 1.0;
        grad[6] = grad[6] * p.beta_s + 1.0;
        grad[7] = grad[7] * XI_RANGE * sx * (1.0 - sx) + (1.0 - 2.0 * sx);
        grad[8] = grad[8] * (p.theta - 1.0) + 1.0;
        let jac = log_sigmoid_jacobian(x[0])
            + x[2]
            + (SUBCRITICAL_LIMIT * p.kappa.exp_m1()).ln()
            + log_sigmoid_jacobian(x[3])
            + x[4]
            + x[6]
            + XI_RANGE.ln()
            + log_sigmoid_jacobian(x[7])
            + x[8];
        ll + lp + jac
    }
}

/// The excitation weight is stored relative to its subcritical ceiling:
/// `eta = 0.95 * expm1(kappa) * sigmoid(u)`, so the branching ratio is
/// `0.95 * sigmoid(u)` and the sampler never meets the `r = 0.95` wall.
fn eta_from_unconstrained(u: f64, kappa: f64) -> f64 {
    SUBCRITICAL_LIMIT * kappa.exp_m1() * sigmoid(u)
}

fn eta_to_unconstrained(eta: f64, kappa: f64) -> f64 {
    logit(eta / (SUBCRITICAL_LIMIT * kappa.exp_m1()))
}

fn hag_from_unconstrained(x: &[f64]) -> HagParams {
    let kappa = x[4].exp();
    HagParams {
        phi: sigmoid(x[0]),
        mu_lambda: x[1],
        alpha: x[2].exp(),
        eta: eta_from_unconstrained(x[3], kappa),
        kappa,
        mu_sigma: x[5],
        beta_s: x[6].exp(),
        xi: xi_from_unconstrained(x[7]),
        theta: 1.0 + x[8].exp(),
    }
}

impl LogDensity for Posterior<'_> {
    fn dim(&self) -> usize {
        let years = self.data.years();
        match self.kind {
            ModelKind::Independent => 3,
            ModelKind::Shared => 5 + years,
            ModelKind::Hag => 9 + 2 * years,
        }
    }

    fn logp_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let v = match self.kind {
            ModelKind::Independent => self.indep_logp(x, grad),
            ModelKind::Shared => self.shared_logp(x, grad),
            ModelKind::Hag => self.hag_logp(x, grad),
        };
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}
