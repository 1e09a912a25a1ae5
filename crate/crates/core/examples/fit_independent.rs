//! Fit the independent and shared-factor models to one panel and save the
//! draws and diagnostics.
//!
//! cargo run --release --example fit_independent -- [seed]

use oprisk::inference::{sample_posterior, PosteriorDraws, SamplerConfig};
use oprisk::models::{HagParams, ModelKind};
use oprisk::simulator::simulate_panel;

fn main() -> oprisk::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let (panel, _) = simulate_panel(&HagParams::benchmark(), 15, 5e5, seed)?;

    for kind in [ModelKind::Independent, ModelKind::Shared] {
        let cfg = SamplerConfig {
            seed,
            ..SamplerConfig::for_model(kind)
        };
        let draws = sample_posterior(kind, &panel, &cfg)?;
        println!("{} model", kind.display_name());
        for j in 0..draws.structural {
            let s = draws.summary(j);
            println!(
                "  {:<10} {:>9.4} +- {:<7.4} hdi94 [{:.4}, {:.4}]  rhat {:.3}  ess {:.0}",
                s.name, s.mean, s.sd, s.hdi_low, s.hdi_high, s.rhat, s.ess_bulk
            );
        }

        let path = std::env::temp_dir().join(format!("draws_{kind}.csv"));
        draws.save(&path)?;
        assert_eq!(PosteriorDraws::load(&path)?, draws);
        println!("  saved {}\n{}", path.display(), draws.diagnostics().to_json()?.lines().take(6).collect::<Vec<_>>().join("\n"));
    }
    Ok(())
}
