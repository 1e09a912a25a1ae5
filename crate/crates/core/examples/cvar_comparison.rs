//! Fit all three models to one synthetic panel and compare their
//! posterior-predictive CVaR.
//!
//! cargo run --release --example cvar_comparison -- [seed] [simulations]

use oprisk::cvar::{compare_reports, estimate_cvar, DEFAULT_LEVELS};
use oprisk::inference::{sample_posterior, SamplerConfig};
use oprisk::models::{HagParams, ModelKind};
use oprisk::simulator::simulate_panel;

fn main() -> oprisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let m: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1_000_000);

    let threshold = 5e5;
    let (panel, _) = simulate_panel(&HagParams::benchmark(), 15, threshold, seed)?;
    println!("panel: {} years, {} events\n", panel.years(), panel.total_events());

    let mut reports = Vec::new();
    for kind in [ModelKind::Independent, ModelKind::Shared, ModelKind::Hag] {
        let cfg = SamplerConfig {
            seed,
            ..SamplerConfig::for_model(kind)
        };
        let draws = sample_posterior(kind, &panel, &cfg)?;
        let diag = draws.diagnostics();
        println!(
            "{:<17} max R-hat {:.3}  min bulk ESS {:.0}  divergences {}",
            kind.display_name(),
            diag.max_rhat(),
            diag.min_ess_bulk(),
            diag.divergences
        );
        let report = estimate_cvar(&draws, threshold, &DEFAULT_LEVELS, m, seed)?;
        reports.push(report);
    }
    println!();
    for r in &reports {
        println!("{}", r.to_table());
    }
    println!("{}", compare_reports(&reports)?);
    Ok(())
}
