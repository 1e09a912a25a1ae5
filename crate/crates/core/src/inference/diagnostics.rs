//! Convergence diagnostics on per-chain scalar draws.
//!
//! R-hat is the rank-normalized split version, taking the larger of the
//! bulk and folded statistics. Effective sample sizes use FFT
//! autocovariances with Geyer's initial monotone sequence truncation.
//! A parameter with no variation returns `NaN` for every statistic.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::distributions::std_normal_quantile;

fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        // drop the middle draw of odd-length chains
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn is_constant(chains: &[Vec<f64>]) -> bool {
    let first = match chains.iter().flatten().next() {
        Some(v) => *v,
        None => return true,
    };
    chains.iter().flatten().all(|v| *v == first)
}

/// Average ranks (1-based, ties shared) of all draws pooled together,
/// mapped through the normal quantile with a Blom offset.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let s = pooled.len();
    let mut idx: Vec<usize> = (0..s).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    let denom = s as f64 + 0.25;
    let mut out = Vec::with_capacity(chains.len());
    let mut offset = 0;
    for c in chains {
        out.push(
            ranks[offset..offset + c.len()]
                .iter()
                .map(|r| std_normal_quantile((r - 0.375) / denom))
                .collect(),
        );
        offset += c.len();
    }
    out
}

fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| var(c)).collect::<Vec<_>>());
    let b = n * var(&means);
    let var_hat = (n - 1.0) / n * w + b / n;
    (var_hat / w).sqrt()
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Rank-normalized split R-hat.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    if chains.is_empty() || chains[0].len() < 4 || is_constant(chains) {
        return f64::NAN;
    }
    let split = split_chains(chains);
    let bulk = rhat_basic(&rank_normalize(&split));
    let pooled: Vec<f64> = split.iter().flatten().copied().collect();
    let med = median(&pooled);
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|v| (v - med).abs()).collect())
        .collect();
    let tail = rhat_basic(&rank_normalize(&folded));
    bulk.max(tail)
}

/// Biased autocovariance at all lags via zero-padded FFT.
fn autocovariance(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    buf[..n].iter().map(|c| c.re * scale).collect()
}

fn ess_raw(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    if n < 4 || is_constant(chains) {
        return f64::NAN;
    }
    let mut planner = FftPlanner::new();
    let acov: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| autocovariance(c, &mut planner))
        .collect();
    let nf = n as f64;
    let chain_mean: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let mean_var = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).sum::<f64>() / m as f64;
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += var(&chain_mean);
    }
    let mean_acov = |t: usize| acov.iter().map(|a| a[t]).sum::<f64>() / m as f64;

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[1] = rho_odd;

    let mut t = 1;
    while t < n - 3 && rho_even + rho_odd > 0.0 {
        rho_even = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(t + 2)) / var_plus;
        if rho_even + rho_odd >= 0.0 {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t - 2;
    if rho_even > 0.0 {
        rho[max_t + 1] = rho_even;
    }

    // initial monotone sequence
    let mut t = 1;
    while t + 2 <= max_t {
        let prev = rho[t - 1] + rho[t];
        if rho[t + 1] + rho[t + 2] > prev {
            rho[t + 1] = prev / 2.0;
            rho[t + 2] = prev / 2.0;
        }
        t += 2;
    }

    let total = (m * n) as f64;
    let tau = -1.0 + 2.0 * rho[..=max_t].iter().sum::<f64>() + rho[max_t + 1];
    let tau = tau.max(1.0 / total.log10());
    total / tau
}

/// Bulk effective sample size (rank-normalized split chains).
pub fn ess_bulk(chains: &[Vec<f64>]) -> f64 {
    if chains.is_empty() || is_constant(chains) {
        return f64::NAN;
    }
    ess_raw(&rank_normalize(&split_chains(chains)))
}

/// Tail effective sample size: the smaller ESS of the 5% and 95%
/// quantile indicators.
pub fn ess_tail(chains: &[Vec<f64>]) -> f64 {
    if chains.is_empty() || is_constant(chains) {
        return f64::NAN;
    }
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let indicator = |q: f64| -> Vec<Vec<f64>> {
        let cut = quantile(&pooled, q);
        chains
            .iter()
            .map(|c| c.iter().map(|v| f64::from(u8::from(*v <= cut))).collect())
            .collect()
    };
    let lo = ess_raw(&split_chains(&indicator(0.05)));
    let hi = ess_raw(&split_chains(&indicator(0.95)));
    match (lo.is_nan(), hi.is_nan()) {
        (true, true) => f64::NAN,
        (true, false) => hi,
        (false, true) => lo,
        (false, false) => lo.min(hi),
    }
}

/// Linearly interpolated sample quantile.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Shortest interval containing `floor(mass * n)` sorted draws; ties go
/// to the lower interval.
pub fn hdi(x: &[f64], mass: f64) -> (f64, f64) {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = ((mass * n as f64).floor() as usize).clamp(1, n) - 1;
    let mut best = (s[0], s[k]);
    for i in 1..n - k {
        if s[i + k] - s[i] < best.1 - best.0 {
            best = (s[i], s[i + k]);
        }
    }
    best
}

/// Posterior summary of one parameter across chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
}

impl ParamSummary {
    pub fn from_chains(name: &str, chains: &[Vec<f64>]) -> Self {
        let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
        let (lo, hi) = hdi(&pooled, 0.94);
        let sd = if pooled.len() > 1 { var(&pooled).sqrt() } else { 0.0 };
        Self {
            name: name.to_string(),
            mean: mean(&pooled),
            sd,
            hdi_low: lo,
            hdi_high: hi,
            rhat: split_rhat(chains),
            ess_bulk: ess_bulk(chains),
            ess_tail: ess_tail(chains),
        }
    }

    pub fn hdi_contains(&self, value: f64) -> bool {
        self.hdi_low <= value && value <= self.hdi_high
    }
}
