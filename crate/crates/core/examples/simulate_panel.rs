//! Simulate a loss panel from the Hawkes-AR-Gumbel process and write it in
//! both text and JSON form.
//!
//! cargo run --release --example simulate_panel -- [seed] [years] [outdir]

use std::path::PathBuf;

use oprisk::models::HagParams;
use oprisk::simulator::{export_panel, import_panel, simulate_panel};

fn main() -> oprisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let years: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(15);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().display().to_string()));

    let p = HagParams::benchmark();
    println!("branching ratio {:.4}", p.branching_ratio());
    let (panel, truth) = simulate_panel(&p, years, 5e5, seed)?;

    println!("{:>4} {:>9} {:>6} {:>10} {:>14}", "year", "z", "count", "intensity", "max excess");
    for t in 0..panel.years() {
        let max = panel.exceedances()[t].iter().copied().fold(0.0, f64::max);
        println!(
            "{:>4} {:>9.3} {:>6} {:>10.2} {:>14.4e}",
            t + 1,
            truth.latents.z[t],
            panel.counts()[t],
            truth.intensities[t],
            max
        );
    }

    let text = dir.join("panel.txt");
    let json = dir.join("panel.json");
    export_panel(&panel, &text)?;
    export_panel(&panel, &json)?;
    assert_eq!(import_panel(&text)?, panel);
    assert_eq!(import_panel(&json)?, panel);
    println!("wrote {} and {}", text.display(), json.display());
    Ok(())
}
