use oprisk::distributions::{gpd_cdf, GpdParams};
use oprisk::models::HagParams;
use oprisk::simulator::simulate_panel;

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let ch: f64 = (0..n - lag).map(|t| (x[t] - m) * (x[t + lag] - m)).sum();
    ch / c0
}

#[test]
fn scaled_exceedances_are_unit_gpd() {
    let p = HagParams::benchmark();
    let (data, truth) = simulate_panel(&p, 40, 5e5, 11).unwrap();
    let mut scaled = Vec::new();
    for (t, ys) in data.exceedances().iter().enumerate() {
        let sigma = (p.mu_sigma + p.beta_s * truth.latents.w_s[t]).exp();
        scaled.extend(ys.iter().map(|y| y / sigma));
    }
    assert!(scaled.len() >= 500, "only {} exceedances", scaled.len());
    let unit = GpdParams::new(1.0, p.xi).unwrap();
    let d = ks_statistic(scaled.clone(), |y| gpd_cdf(y, unit));
    let crit = 1.36 / (scaled.len() as f64).sqrt();
    assert!(d < crit, "KS {d} >= {crit} at n = {}", scaled.len());
}

#[test]
fn stress_path_autocorrelation_is_geometric() {
    let p = HagParams { mu_lambda: 0.0, eta: 0.0, ..HagParams::benchmark() };
    let (_, truth) = simulate_panel(&p, 100_000, 5e5, 3).unwrap();
    let z = &truth.latents.z;
    assert!((acf(z, 1) - 0.7).abs() < 0.01, "lag 1: {}", acf(z, 1));
    for h in 2..=5 {
        let want = 0.7f64.powi(h as i32);
        assert!((acf(z, h) - want).abs() < 0.02, "lag {h}: {} vs {want}", acf(z, h));
    }
}

#[test]
fn counts_are_overdispersed() {
    let (data, _) = simulate_panel(&HagParams::benchmark(), 10_000, 5e5, 5).unwrap();
    let c: Vec<f64> = data.counts().iter().map(|&n| n as f64).collect();
    let n = c.len() as f64;
    let mean = c.iter().sum::<f64>() / n;
    let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(var / mean > 1.5, "dispersion {}", var / mean);
}

#[test]
fn degenerate_process_has_poisson_mean() {
    let p = HagParams { alpha: 0.0, eta: 0.0, beta_s: 0.0, ..HagParams::benchmark() };
    let (data, truth) = simulate_panel(&p, 10_000, 5e5, 9).unwrap();
    let mean = data.total_events() as f64 / 10_000.0;
    let want = p.mu_lambda.exp();
    assert!((mean / want - 1.0).abs() < 0.01, "mean {mean} vs {want}");
    assert!(truth.intensities.iter().all(|&l| l == want));
}

#[test]
fn same_seed_is_bit_identical() {
    let p = HagParams::benchmark();
    assert_eq!(simulate_panel(&p, 15, 5e5, 77).unwrap(), simulate_panel(&p, 15, 5e5, 77).unwrap());
}

#[test]
fn benchmark_panel_event_count_median() {
    let p = HagParams::benchmark();
    let mut totals: Vec<u64> = (0..50)
        .map(|s| simulate_panel(&p, 15, 5e5, s).unwrap().0.total_events())
        .collect();
    totals.sort_unstable();
    let median = (totals[24] + totals[25]) as f64 / 2.0;
    assert!(
        (700.0..=1200.0).contains(&median),
        "median total events over 50 seeds is {median}"
    );
}
