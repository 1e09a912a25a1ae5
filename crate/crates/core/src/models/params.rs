use serde::{Deserialize, Serialize};

use crate::distributions::{XI_MAX, XI_MIN};
use crate::error::{Error, Result};

use super::likelihood::{ar1_scan, branching_ratio};

/// Branching ratios at or above this value are non-stationary for our purposes.
pub const SUBCRITICAL_LIMIT: f64 = 0.95;

fn check_xi(xi: f64) -> Result<()> {
    if (XI_MIN..=XI_MAX).contains(&xi) {
        Ok(())
    } else {
        Err(Error::param(format!("xi must lie in [{XI_MIN}, {XI_MAX}], got {xi}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be finite, got {v}")))
    }
}

/// Independent frequency/severity model: constant rate and scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndepParams {
    pub mu_lambda: f64,
    pub mu_sigma: f64,
    pub xi: f64,
}

impl IndepParams {
    pub fn validate(&self) -> Result<()> {
        check_finite("mu_lambda", self.mu_lambda)?;
        check_finite("mu_sigma", self.mu_sigma)?;
        check_xi(self.xi)
    }
}

/// Shared Gaussian stress factor driving both rate and scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedParams {
    pub mu_lambda: f64,
    pub alpha: f64,
    pub mu_sigma: f64,
    pub beta: f64,
    pub xi: f64,
}

impl SharedParams {
    pub fn validate(&self) -> Result<()> {
        check_finite("mu_lambda", self.mu_lambda)?;
        check_nonneg("alpha", self.alpha)?;
        check_finite("mu_sigma", self.mu_sigma)?;
        check_nonneg("beta", self.beta)?;
        check_xi(self.xi)
    }
}

/// Hawkes-AR-Gumbel structural parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HagParams {
    /// AR(1) persistence of the stress path.
    pub phi: f64,
    pub mu_lambda: f64,
    /// Sensitivity of the log-rate to stress.
    pub alpha: f64,
    /// Self-excitation amplitude.
    pub eta: f64,
    /// Self-excitation decay per year.
    pub kappa: f64,
    pub mu_sigma: f64,
    /// Sensitivity of the log-scale to the severity innovation.
    pub beta_s: f64,
    pub xi: f64,
    /// Gumbel copula parameter.
    pub theta: f64,
}

impl HagParams {
    /// Ground-truth values of the reference simulation study.
    pub const fn benchmark() -> Self {
        Self {
            phi: 0.70,
            mu_lambda: 3.00,
            alpha: 0.50,
            eta: 0.30,
            kappa: 0.50,
            mu_sigma: 13.82,
            beta_s: 0.40,
            xi: 0.70,
            theta: 2.00,
        }
    }

    pub fn branching_ratio(&self) -> f64 {
        branching_ratio(self.eta, self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.is_finite() && self.phi.abs() < 1.0) {
            return Err(Error::param(format!("phi must satisfy |phi| < 1, got {}", self.phi)));
        }
        check_finite("mu_lambda", self.mu_lambda)?;
        check_nonneg("alpha", self.alpha)?;
        check_nonneg("eta", self.eta)?;
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::param(format!("kappa must be positive, got {}", self.kappa)));
        }
        check_finite("mu_sigma", self.mu_sigma)?;
        check_nonneg("beta_s", self.beta_s)?;
        check_xi(self.xi)?;
        if !(self.theta.is_finite() && self.theta >= 1.0) {
            return Err(Error::param(format!("theta must be >= 1, got {}", self.theta)));
        }
        let r = self.branching_ratio();
        if r >= SUBCRITICAL_LIMIT {
            return Err(Error::param(format!(
                "branching ratio {r:.4} violates subcriticality (< {SUBCRITICAL_LIMIT})"
            )));
        }
        Ok(())
    }
}

/// Non-centred latent state: innovations plus the derived AR(1) stress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub w_f: Vec<f64>,
    pub w_s: Vec<f64>,
    pub z: Vec<f64>,
}

impl LatentState {
    pub fn new(phi: f64, w_f: Vec<f64>, w_s: Vec<f64>) -> Result<Self> {
        if w_f.len() != w_s.len() {
            return Err(Error::param(format!(
                "innovation lengths differ: {} vs {}",
                w_f.len(),
                w_s.len()
            )));
        }
        let z = ar1_scan(phi, &w_f);
        Ok(Self { w_f, w_s, z })
    }

    pub fn zeros(years: usize) -> Self {
        Self {
            w_f: vec![0.0; years],
            w_s: vec![0.0; years],
            z: vec![0.0; years],
        }
    }

    pub fn years(&self) -> usize {
        self.w_f.len()
    }
}
