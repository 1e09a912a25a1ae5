use serde::{Deserialize, Serialize};

use crate::distributions::{std_normal_cdf, std_normal_quantile, XI_MAX, XI_MIN};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// One-dimensional prior family with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Prior {
    Beta { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
    HalfNormal { sd: f64 },
    TruncNormal { mean: f64, sd: f64, lower: f64, upper: f64 },
    /// `shift + HalfNormal(sd)`.
    ShiftedHalfNormal { shift: f64, sd: f64 },
}

impl Prior {
    /// Log-density and its derivative; `(-inf, 0)` outside the support.
    pub fn log_density_grad(&self, x: f64) -> (f64, f64) {
        const OUT: (f64, f64) = (f64::NEG_INFINITY, 0.0);
        match *self {
            Prior::Beta { a, b } => {
                if !(x > 0.0 && x < 1.0) {
                    return OUT;
                }
                let log_beta = libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b);
                (
                    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - log_beta,
                    (a - 1.0) / x - (b - 1.0) / (1.0 - x),
                )
            }
            Prior::Normal { mean, sd } => normal(x, mean, sd),
            Prior::HalfNormal { sd } => half_normal(x, sd),
            Prior::ShiftedHalfNormal { shift, sd } => half_normal(x - shift, sd),
            Prior::TruncNormal {
                mean,
                sd,
                lower,
                upper,
            } => {
                if !(lower..=upper).contains(&x) {
                    return OUT;
                }
                let mass = std_normal_cdf((upper - mean) / sd) - std_normal_cdf((lower - mean) / sd);
                let (v, g) = normal(x, mean, sd);
                (v - mass.ln(), g)
            }
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        self.log_density_grad(x).0
    }

    /// Median, used as the centre of sampler initialisation.
    pub fn median(&self) -> f64 {
        match *self {
            Prior::Beta { a, b } => beta_median(a, b),
            Prior::Normal { mean, .. } => mean,
            Prior::HalfNormal { sd } => sd * std_normal_quantile(0.75),
            Prior::ShiftedHalfNormal { shift, sd } => shift + sd * std_normal_quantile(0.75),
            Prior::TruncNormal {
                mean,
                sd,
                lower,
                upper,
            } => {
                let lo = std_normal_cdf((lower - mean) / sd);
                let hi = std_normal_cdf((upper - mean) / sd);
                mean + sd * std_normal_quantile(0.5 * (lo + hi))
            }
        }
    }
}

fn normal(x: f64, mean: f64, sd: f64) -> (f64, f64) {
    let z = (x - mean) / sd;
    (-0.5 * z * z - sd.ln() - HALF_LN_2PI, -z / sd)
}

fn half_normal(x: f64, sd: f64) -> (f64, f64) {
    if x < 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let (v, g) = normal(x, 0.0, sd);
    (v + std::f64::consts::LN_2, g)
}

fn beta_median(a: f64, b: f64) -> f64 {
    // bisection on the regularised incomplete beta via midpoint quadrature
    let log_beta = libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b);
    let cdf = |x: f64| {
        let n = 4000;
        let h = x / n as f64;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - log_beta).exp()
            })
            .sum::<f64>()
            * h
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Priors for every structural parameter of the three models.
///
/// The independent and shared models reuse the corresponding entries; the
/// shared-model `beta` uses the same prior as `beta_s` but is a separate
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub phi: Prior,
    pub mu_lambda: Prior,
    pub alpha: Prior,
    pub eta: Prior,
    pub kappa: Prior,
    pub mu_sigma: Prior,
    pub beta_s: Prior,
    pub beta: Prior,
    pub xi: Prior,
    pub theta: Prior,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            phi: Prior::Beta { a: 5.0, b: 2.0 },
            mu_lambda: Prior::Normal { mean: 3.0, sd: 1.5 },
            alpha: Prior::HalfNormal { sd: 1.0 },
            eta: Prior::HalfNormal { sd: 0.3 },
            kappa: Prior::HalfNormal { sd: 1.0 },
            mu_sigma: Prior::Normal { mean: 14.0, sd: 2.0 },
            beta_s: Prior::HalfNormal { sd: 1.0 },
            beta: Prior::HalfNormal { sd: 1.0 },
            xi: Prior::TruncNormal {
                mean: 0.5,
                sd: 0.5,
                lower: XI_MIN,
                upper: XI_MAX,
            },
            theta: Prior::ShiftedHalfNormal { shift: 1.0, sd: 1.5 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_density_matches_closed_form() {
        let p = Prior::Beta { a: 5.0, b: 2.0 };
        // B(5,2) = 4! 1! / 6! = 1/30
        let expected = (0.71f64.powi(4) * 0.29 * 30.0).ln();
        assert_abs_diff_eq!(p.log_density(0.71), expected, epsilon = 1e-12);
        assert_eq!(p.log_density(0.0), f64::NEG_INFINITY);
        assert_eq!(p.log_density(-0.2), f64::NEG_INFINITY);
    }

    #[test]
    fn trunc_normal_includes_endpoints() {
        let p = PriorSpec::default().xi;
        assert!(p.log_density(0.01).is_finite());
        assert!(p.log_density(2.0).is_finite());
        assert_eq!(p.log_density(0.009), f64::NEG_INFINITY);
        assert_eq!(p.log_density(2.001), f64::NEG_INFINITY);
    }

    #[test]
    fn shifted_half_normal_support() {
        let p = PriorSpec::default().theta;
        assert!(p.log_density(1.0).is_finite());
        assert_eq!(p.log_density(0.999), f64::NEG_INFINITY);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let spec = PriorSpec::default();
        let cases = [
            (spec.phi, 0.63),
            (spec.mu_lambda, 2.1),
            (spec.alpha, 0.4),
            (spec.xi, 0.8),
            (spec.theta, 2.5),
        ];
        for (p, x) in cases {
            let h = 1e-6;
            let fd = (p.log_density(x + h) - p.log_density(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(p.log_density_grad(x).1, fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn medians() {
        assert_abs_diff_eq!(Prior::HalfNormal { sd: 1.0 }.median(), 0.674_489_75, epsilon = 1e-6);
        // Beta(5,2) median from the regularised incomplete beta: 0.7355...
        let m = Prior::Beta { a: 5.0, b: 2.0 }.median();
        assert!((m - 0.7356).abs() < 1e-3, "{m}");
        let xi = PriorSpec::default().xi.median();
        assert!(xi > 0.5 && xi < 0.7, "{xi}");
    }
}
