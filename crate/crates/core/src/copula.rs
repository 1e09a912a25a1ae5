//! Bivariate Gumbel copula.
//!
//! The density is evaluated in log space with `A = l_u^theta + l_v^theta`
//! formed by log-sum-exp over `theta * ln l`, so large `theta` does not
//! overflow. Arguments are clamped to `[EPS, 1 - EPS]`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::distributions::{
    positive_stable_raw, std_normal_cdf, std_normal_log_cdf, std_normal_logpdf, std_normal_quantile,
};
use crate::error::{Error, Result};

/// Clamp applied to copula arguments before taking logs.
pub const EPS: f64 = 1e-12;

/// Gumbel dependence parameter, `theta >= 1`; `theta = 1` is independence.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GumbelTheta(f64);

impl GumbelTheta {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta >= 1.0 {
            Ok(Self(theta))
        } else {
            Err(Error::param(format!("Gumbel theta must be finite and >= 1, got {theta}")))
        }
    }

    pub const INDEPENDENCE: GumbelTheta = GumbelTheta(1.0);

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_independence(self) -> bool {
        self.0 == 1.0
    }

    /// Kendall's tau, `1 - 1/theta`.
    pub fn kendall_tau(self) -> f64 {
        1.0 - 1.0 / self.0
    }
}

fn check_unit(x: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::arg(format!("{name} must lie in [0, 1], got {x}")))
    }
}

/// `C(u, v) = exp(-[(-ln u)^theta + (-ln v)^theta]^(1/theta))`.
pub fn gumbel_cdf(u: f64, v: f64, theta: GumbelTheta) -> Result<f64> {
    check_unit(u, "u")?;
    check_unit(v, "v")?;
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(v);
    }
    if v == 1.0 {
        return Ok(u);
    }
    let th = theta.0;
    let log_a = log_sum_exp(th * (-u.ln()).ln(), th * (-v.ln()).ln());
    Ok((-(log_a / th).exp()).exp())
}

#[inline]
fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Log-density of the Gumbel copula.
///
/// `ln c = -A^(1/theta) - ln u - ln v + (theta - 1)(ln l_u + ln l_v)
///        - (2 - 1/theta) ln A + ln(A^(1/theta) + theta - 1)`
/// with `l = -ln(.)`. At `theta = 1` this is exactly zero.
pub fn gumbel_logpdf(u: f64, v: f64, theta: GumbelTheta) -> Result<f64> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(Error::arg(format!("copula arguments must be finite, got ({u}, {v})")));
    }
    check_unit(u, "u")?;
    check_unit(v, "v")?;
    if theta.is_independence() {
        return Ok(0.0);
    }
    let u = u.clamp(EPS, 1.0 - EPS);
    let v = v.clamp(EPS, 1.0 - EPS);
    Ok(log_density_core(-u.ln(), -v.ln(), theta.0).value)
}

/// Value and partial derivatives of the log-density with respect to
/// `l_u = -ln u`, `l_v = -ln v` and `theta`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CoreEval {
    pub value: f64,
    pub d_lu: f64,
    pub d_lv: f64,
    pub d_theta: f64,
}

fn log_density_core(lu: f64, lv: f64, theta: f64) -> CoreEval {
    let a = lu.ln();
    let b = lv.ln();
    let log_a = log_sum_exp(theta * a, theta * b);
    let s = (log_a / theta).exp();
    let wu = (theta * a - log_a).exp();
    let wv = (theta * b - log_a).exp();
    let k = 2.0 - 1.0 / theta;
    let denom = s + theta - 1.0;

    let value = -s + (lu + lv) + (theta - 1.0) * (a + b) - k * log_a + denom.ln();

    // d(logA)/d(l_u) = theta wu / l_u ; ds/d(l_u) = s wu / l_u
    let d_lu = 1.0 + (theta - 1.0 - s * wu - k * theta * wu + s * wu / denom) / lu;
    let d_lv = 1.0 + (theta - 1.0 - s * wv - k * theta * wv + s * wv / denom) / lv;

    let dlog_a = wu * a + wv * b;
    let ds = s * (dlog_a - log_a / theta) / theta;
    let d_theta =
        -ds + (a + b) - log_a / (theta * theta) - k * dlog_a + (ds + 1.0) / denom;

    CoreEval {
        value,
        d_lu,
        d_lv,
        d_theta,
    }
}

/// `ln l` and `d l / d w` for `l = -ln Phi(w)` with the clamp applied.
///
/// Inside the clamp the derivative is zero (flat region).
#[inline]
fn normal_score_to_l(w: f64) -> (f64, f64) {
    let upper = std_normal_cdf(-w);
    let lower = std_normal_cdf(w);
    if lower < EPS {
        return (-EPS.ln(), 0.0);
    }
    if upper < EPS {
        return (-(-EPS).ln_1p(), 0.0);
    }
    let log_phi = std_normal_log_cdf(w);
    let l = -log_phi;
    // d l / d w = -phi(w) / Phi(w)
    let mills = (std_normal_logpdf(w) - log_phi).exp();
    (l, -mills)
}

/// Gumbel copula log-density evaluated at `(Phi(w_f), Phi(w_s))` together
/// with derivatives with respect to `w_f`, `w_s` and `theta`.
///
/// Returns `(value, d_wf, d_ws, d_theta)`.
pub(crate) fn gumbel_logpdf_normal_scores(wf: f64, ws: f64, theta: f64) -> (f64, f64, f64, f64) {
    if theta == 1.0 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let (lu, dlu) = normal_score_to_l(wf);
    let (lv, dlv) = normal_score_to_l(ws);
    let e = log_density_core(lu, lv, theta);
    (e.value, e.d_lu * dlu, e.d_lv * dlv, e.d_theta)
}

/// Upper tail-dependence coefficient `2 - 2^(1/theta)`.
pub fn upper_tail_dep(theta: GumbelTheta) -> f64 {
    2.0 - 2f64.powf(1.0 / theta.0)
}

/// Exact draw from `C_theta` by the Marshall-Olkin frailty construction.
///
/// With `a = 1/theta` and `M` positive stable of index `a`,
/// `(U, V) = (exp(-(E1/M)^a), exp(-(E2/M)^a))`. Independence draws two
/// uniforms directly.
pub fn gumbel_sample<R: Rng + ?Sized>(theta: GumbelTheta, rng: &mut R) -> (f64, f64) {
    if theta.is_independence() {
        return (rng.random(), rng.random());
    }
    let a = 1.0 / theta.0;
    let m = positive_stable_raw(a, rng);
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    ((-(e1 / m).powf(a)).exp(), (-(e2 / m).powf(a)).exp())
}

/// Copula draw mapped to standard normal scores `(Phi^-1(U), Phi^-1(V))`.
/// Uniforms are clamped into `[MIN_POSITIVE, 1 - EPSILON/2]` so the scores
/// stay finite.
pub fn gumbel_normal_scores<R: Rng + ?Sized>(theta: GumbelTheta, rng: &mut R) -> (f64, f64) {
    let lo = f64::MIN_POSITIVE;
    let hi = 1.0 - f64::EPSILON / 2.0;
    let (u, v) = gumbel_sample(theta, rng);
    (
        std_normal_quantile(u.clamp(lo, hi)),
        std_normal_quantile(v.clamp(lo, hi)),
    )
}
