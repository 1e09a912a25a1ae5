//! Scalar distribution kernels: generalized Pareto, positive stable,
//! standard normal and Poisson.
//!
//! All samplers take a caller-owned [`rand::Rng`]; nothing here holds state.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Lower truncation bound on the GPD shape used by every model prior.
///
/// The exponential limit `xi -> 0` is never evaluated; callers that build
/// [`GpdParams`] from model parameters stay at or above this floor.
pub const XI_MIN: f64 = 0.01;
/// Upper truncation bound on the GPD shape.
pub const XI_MAX: f64 = 2.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Scale and shape of a generalized Pareto distribution with positive shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdParams {
    sigma: f64,
    xi: f64,
}

impl GpdParams {
    /// `sigma` must be positive and `xi` must lie in `(0, 2]`.
    pub fn new(sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param(format!("GPD scale must be positive, got {sigma}")));
        }
        if !(xi.is_finite() && xi > 0.0 && xi <= XI_MAX) {
            return Err(Error::param(format!("GPD shape must lie in (0, 2], got {xi}")));
        }
        Ok(Self { sigma, xi })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Mean of the distribution, finite only for `xi < 1`.
    pub fn mean(&self) -> f64 {
        if self.xi < 1.0 {
            self.sigma / (1.0 - self.xi)
        } else {
            f64::INFINITY
        }
    }
}

/// Log-density `-ln sigma - (1 + 1/xi) ln(1 + xi y / sigma)`.
///
/// Returns negative infinity outside the support instead of failing, so an
/// MCMC proposal that leaves the support is simply rejected.
pub fn gpd_logpdf(y: f64, p: GpdParams) -> f64 {
    gpd_logpdf_raw(y, p.sigma, p.xi)
}

#[inline]
pub(crate) fn gpd_logpdf_raw(y: f64, sigma: f64, xi: f64) -> f64 {
    if y < 0.0 {
        return f64::NEG_INFINITY;
    }
    let t = 1.0 + xi * y / sigma;
    if t <= 0.0 || !t.is_finite() {
        return f64::NEG_INFINITY;
    }
    -sigma.ln() - (1.0 + 1.0 / xi) * t.ln()
}

pub fn gpd_cdf(y: f64, p: GpdParams) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let t = 1.0 + p.xi * y / p.sigma;
    -(-(t.ln() / p.xi)).exp_m1()
}

/// Inverse CDF `(sigma/xi) ((1-p)^(-xi) - 1)` on `[0, 1)`.
pub fn gpd_quantile(prob: f64, params: GpdParams) -> Result<f64> {
    if !(0.0..1.0).contains(&prob) {
        return Err(Error::arg(format!(
            "GPD quantile requires 0 <= p < 1, got {prob}"
        )));
    }
    Ok(gpd_quantile_raw(prob, params.sigma, params.xi))
}

#[inline]
pub(crate) fn gpd_quantile_raw(prob: f64, sigma: f64, xi: f64) -> f64 {
    // (1-p)^(-xi) - 1 = expm1(-xi ln(1-p))
    sigma / xi * (-xi * (-prob).ln_1p()).exp_m1()
}

/// One GPD draw by inverse-CDF transform of a single uniform on `[0, 1)`.
pub fn gpd_sample<R: Rng + ?Sized>(params: GpdParams, rng: &mut R) -> f64 {
    gpd_sample_raw(params.sigma, params.xi, rng)
}

#[inline]
pub(crate) fn gpd_sample_raw<R: Rng + ?Sized>(sigma: f64, xi: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    gpd_quantile_raw(u, sigma, xi)
}

/// Positive stable variate with Laplace transform `E[exp(-tM)] = exp(-t^a)`,
/// drawn with the Chambers-Mallows-Stuck construction.
///
/// `a` must lie strictly inside `(0, 1)`; `a = 1` is the degenerate point
/// mass at one and belongs to the caller's independence branch.
pub fn positive_stable_sample<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param(format!(
            "positive stable index must lie in (0, 1), got {a}"
        )));
    }
    Ok(positive_stable_raw(a, rng))
}

#[inline]
pub(crate) fn positive_stable_raw<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    loop {
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let shifted = a * (v + FRAC_PI_2);
        let cos_v = v.cos();
        if cos_v <= 0.0 || w <= 0.0 {
            continue;
        }
        let m = shifted.sin() / cos_v.powf(1.0 / a)
            * ((v - shifted).cos() / w).powf((1.0 - a) / a);
        if m.is_finite() && m > 0.0 {
            return m;
        }
    }
}

pub fn std_normal_logpdf(x: f64) -> f64 {
    -0.5 * (LN_2PI + x * x)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    std_normal_logpdf(x).exp()
}

/// `Phi(x)` through the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Phi(x)`, accurate in both tails.
pub fn std_normal_log_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-std_normal_cdf(-x)).ln_1p()
    } else {
        std_normal_cdf(x).ln()
    }
}

/// Inverse of [`std_normal_cdf`] (Wichura's AS 241, relative error near 1e-16).
///
/// The endpoints map to the infinities: `p = 0` gives `-inf`, `p = 1` gives
/// `+inf`. Anything outside `[0, 1]` or NaN yields NaN.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2509.080_928_730_122_7 * r + 33_430.575_583_588_13) * r
            + 67_265.770_927_008_7)
            * r
            + 45_921.953_931_549_87)
            * r
            + 13_731.693_765_509_461)
            * r
            + 1_971.590_950_306_551_3)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5_226.495_278_852_545 * r + 28_729.085_735_721_943) * r
            + 39_307.895_800_092_71)
            * r
            + 21_213.794_301_586_597)
            * r
            + 5_394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

pub fn std_normal_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Below this mean Poisson draws use sequential inversion; at or above it
/// they use Hörmann's transformed rejection (PTRS).
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Poisson draw with mean `lambda`.
pub fn poisson_sample<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param(format!(
            "Poisson mean must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(poisson_raw(lambda, rng))
}

#[inline]
pub(crate) fn poisson_raw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda == 0.0 {
        0
    } else if lambda < POISSON_INVERSION_LIMIT {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrs(lambda, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let mut u: f64 = rng.random();
    let mut k = 0u64;
    let mut pk = (-lambda).exp();
    loop {
        if u <= pk {
            return k;
        }
        u -= pk;
        k += 1;
        pk *= lambda / k as f64;
        // guard against round-off leaving u stranded beyond the total mass
        if pk < f64::MIN_POSITIVE && k as f64 > lambda {
            return k;
        }
    }
}

fn poisson_ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= -lambda + k * loglam - libm::lgamma(k + 1.0)
        {
            return k as u64;
        }
    }
}
