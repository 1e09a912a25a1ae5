//! Fit the Hawkes-AR-Gumbel model to a synthetic panel and compare the
//! posterior with the generating parameters.
//!
//! cargo run --release --example fit_hag -- [seed] [years]

use std::time::Instant;

use oprisk::inference::{sample_posterior, SamplerConfig};
use oprisk::models::{HagParams, ModelKind, HAG_NAMES};
use oprisk::simulator::simulate_panel;

fn main() -> oprisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let years: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(15);

    let truth = HagParams::benchmark();
    let (panel, _) = simulate_panel(&truth, years, 5e5, seed)?;
    println!("{} years, {} events", panel.years(), panel.total_events());

    let cfg = SamplerConfig {
        seed,
        ..SamplerConfig::for_model(ModelKind::Hag)
    };
    let start = Instant::now();
    let draws = sample_posterior(ModelKind::Hag, &panel, &cfg)?;
    println!("sampled in {:.1?}", start.elapsed());

    let diag = draws.diagnostics();
    println!(
        "divergences {}  depth saturations {}  step sizes {:?}",
        diag.divergences, diag.tree_depth_saturations, diag.step_sizes
    );
    let values = [
        truth.phi, truth.mu_lambda, truth.alpha, truth.eta, truth.kappa,
        truth.mu_sigma, truth.beta_s, truth.xi, truth.theta,
    ];
    println!("{:<10} {:>8} {:>8} {:>8} {:>17} {:>6} {:>7}", "param", "truth", "mean", "sd", "hdi94", "rhat", "ess");
    for (j, (name, v)) in HAG_NAMES.iter().zip(values).enumerate() {
        let s = draws.summary(j);
        println!(
            "{name:<10} {v:>8.3} {:>8.3} {:>8.3} [{:>7.3},{:>7.3}] {:>6.3} {:>7.0}{}",
            s.mean,
            s.sd,
            s.hdi_low,
            s.hdi_high,
            s.rhat,
            s.ess_bulk,
            if s.hdi_contains(v) { "" } else { "  *" }
        );
    }
    Ok(())
}
