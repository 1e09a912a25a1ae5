//! Sample a user-defined target with NUTS and read the convergence
//! diagnostics. The target is a correlated 2-D Gaussian written against the
//! `LogDensity` trait.

use oprisk::inference::{ess_bulk, sample_target, split_rhat, LogDensity, SamplerConfig};
use rand::Rng;

struct Correlated {
    rho: f64,
}

impl LogDensity for Correlated {
    fn dim(&self) -> usize {
        2
    }

    fn logp_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let c = 1.0 / (1.0 - self.rho * self.rho);
        grad[0] = -c * (x[0] - self.rho * x[1]);
        grad[1] = -c * (x[1] - self.rho * x[0]);
        -0.5 * c * (x[0] * x[0] - 2.0 * self.rho * x[0] * x[1] + x[1] * x[1])
    }
}

fn main() -> oprisk::Result<()> {
    let target = Correlated { rho: 0.95 };
    let cfg = SamplerConfig {
        chains: 4,
        warmup: 1000,
        draws: 1000,
        target_accept: 0.8,
        max_tree_depth: 10,
        seed: 5,
    };
    let draws = sample_target(&target, vec!["x".into(), "y".into()], &cfg, |rng| {
        vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5]
    })?;
    for j in 0..2 {
        let s = draws.summary(j);
        println!(
            "{}: mean {:.3} sd {:.3} hdi94 [{:.3}, {:.3}] rhat {:.4} ess bulk {:.0} tail {:.0}",
            s.name, s.mean, s.sd, s.hdi_low, s.hdi_high, s.rhat, s.ess_bulk, s.ess_tail
        );
    }
    let depth: f64 = draws.chains.iter().flat_map(|c| &c.tree_depth).map(|d| f64::from(*d)).sum::<f64>()
        / (cfg.chains * cfg.draws) as f64;
    println!("mean tree depth {depth:.2}, divergences {}", draws.total_divergences());

    // deliberately disagreeing chains
    let mut bad = draws.column(0);
    for v in bad[0].iter_mut() {
        *v += 1.5;
    }
    println!("after shifting chain 0: rhat {:.3}, ess {:.0}", split_rhat(&bad), ess_bulk(&bad));
    Ok(())
}
