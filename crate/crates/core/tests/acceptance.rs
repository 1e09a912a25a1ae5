//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! cargo test --release -p oprisk --test acceptance

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oprisk::copula::{gumbel_logpdf, gumbel_sample, upper_tail_dep, GumbelTheta};
use oprisk::cvar::{estimate_cvar, simulate_losses, CvarReport, PredictiveParams, DEFAULT_LEVELS};
use oprisk::distributions::{positive_stable_sample, std_normal_cdf, std_normal_pdf};
use oprisk::inference::{ess_bulk, sample_posterior, split_rhat, PosteriorDraws, SamplerConfig};
use oprisk::models::{
    loglik_hag, loglik_shared, HagParams, IndepParams, LatentState, ModelKind, Posterior, SharedParams,
};
use oprisk::simulator::{simulate_panel, PanelDataset};

const THRESHOLD: f64 = 5e5;
const RECOVERY_SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn run(&mut self, id: &str, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:<4} {name}: {} ({:.1?})", o.detail, start.elapsed());
        if !o.pass {
            self.failed.push(id.to_string());
        }
    }
}

fn copula_mass(theta: GumbelTheta) -> f64 {
    // Simpson rule in normal-score coordinates, where the density is smooth
    let (lo, hi, n) = (-9.0, 9.0, 2400usize);
    let h = (hi - lo) / n as f64;
    let weight = |i: usize| match i {
        0 => 1.0,
        i if i == n => 1.0,
        i if i % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let nodes: Vec<(f64, f64, f64)> = (0..=n)
        .map(|i| {
            let x = lo + h * i as f64;
            (std_normal_cdf(x), std_normal_pdf(x), weight(i))
        })
        .collect();
    let mut total = 0.0;
    for &(u, pu, wu) in &nodes {
        for &(v, pv, wv) in &nodes {
            let c = gumbel_logpdf(u, v, theta).unwrap().exp();
            total += wu * wv * c * pu * pv;
        }
    }
    total * h * h / 9.0
}

fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf.push(v[i]);
            i += 1;
        } else {
            buf.push(v[j]);
            inv += (mid - i) as u64;
            j += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    inv
}

/// Kendall's tau of continuous pairs in O(n log n).
fn kendall_tau(mut pairs: Vec<(f64, f64)>) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut v: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let n = v.len() as f64;
    let discordant = count_inversions(&mut v, &mut Vec::new()) as f64;
    1.0 - 4.0 * discordant / (n * (n - 1.0))
}

fn copula_criterion() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [1.01, 1.5, 2.0, 4.0] {
        let theta = GumbelTheta::new(t).unwrap();
        let mass = copula_mass(theta);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + (t * 100.0) as u64);
        let pairs: Vec<(f64, f64)> = (0..1_000_000).map(|_| gumbel_sample(theta, &mut rng)).collect();
        let tau = kendall_tau(pairs);
        let want = 1.0 - 1.0 / t;
        ok &= (mass - 1.0).abs() <= 1e-3 && (tau - want).abs() <= 0.01;
        parts.push(format!("θ={t}: mass {mass:.6}, τ {tau:.4} vs {want:.4}"));
    }
    let lu = upper_tail_dep(GumbelTheta::new(2.0).unwrap());
    ok &= (lu - (2.0 - 2f64.sqrt())).abs() < 1e-12 && (lu - 0.586).abs() < 5e-4;
    parts.push(format!("λ_U(2) {lu:.4}"));
    outcome(ok, parts.join("; "))
}

fn stable_criterion() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (k, a) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        let m: Vec<f64> = (0..1_000_000)
            .map(|_| positive_stable_sample(a, &mut rng).unwrap())
            .collect();
        for t in [0.5, 1.0, 2.0, 4.0] {
            let n = m.len() as f64;
            let vals: Vec<f64> = m.iter().map(|x| (-t * x).exp()).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let z = (mean - (-t.powf(a)).exp()).abs() / (sd / n.sqrt());
            worst = worst.max(z);
            ok &= z < 3.0;
        }
    }
    outcome(ok, format!("worst deviation {worst:.2} SE over 12 (a, t) pairs, limit 3"))
}

fn gradient_criterion(data: &PanelDataset) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in ModelKind::ALL {
        let post = Posterior::new(kind, data);
        let mut worst: f64 = 0.0;
        let mut points = 0;
        while points < 20 {
            let x = post.jittered_start(&mut rng);
            if !post.logpost(&x).is_finite() {
                continue;
            }
            let (_, g) = post.logpost_grad(&x).unwrap();
            for i in 0..x.len() {
                let h = 1e-5;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                let fd = (post.logpost(&xp) - post.logpost(&xm)) / (2.0 * h);
                worst = worst.max((g[i] - fd).abs() / fd.abs().max(1.0));
            }
            points += 1;
        }
        ok &= worst < 1e-4;
        parts.push(format!("{kind} max rel err {worst:.1e}"));
    }
    outcome(ok, parts.join(", "))
}

fn nesting_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let years = rng.random_range(3..=20);
        let (data, _) = simulate_panel(&HagParams::benchmark(), years, THRESHOLD, 4000 + k).unwrap();
        let z: Vec<f64> = (0..years).map(|_| rng.random_range(-2.5..2.5)).collect();
        let shared = SharedParams {
            mu_lambda: rng.random_range(1.0..3.5),
            alpha: rng.random_range(0.0..1.0),
            mu_sigma: rng.random_range(11.0..15.0),
            beta: rng.random_range(0.0..1.0),
            xi: rng.random_range(0.1..1.5),
        };
        let hag = HagParams {
            phi: 0.0,
            mu_lambda: shared.mu_lambda,
            alpha: shared.alpha,
            eta: 0.0,
            kappa: rng.random_range(0.2..2.0),
            mu_sigma: shared.mu_sigma,
            beta_s: shared.beta,
            xi: shared.xi,
            theta: 1.0,
        };
        let lat = LatentState::new(0.0, z.clone(), z.clone()).unwrap();
        let diff = (loglik_hag(&hag, &lat, &data) - loglik_shared(&shared, &z, &data)).abs();
        worst = worst.max(diff);
    }
    outcome(worst <= 1e-10, format!("max |Δ loglik| {worst:.2e} over 10 instances, limit 1e-10"))
}

struct Fit {
    seed: u64,
    panel: PanelDataset,
    hag: PosteriorDraws,
    elapsed: Duration,
}

fn recovery_fit(seed: u64) -> Fit {
    let (panel, _) = simulate_panel(&HagParams::benchmark(), 15, THRESHOLD, seed).unwrap();
    let cfg = SamplerConfig { seed, ..SamplerConfig::for_model(ModelKind::Hag) };
    let start = Instant::now();
    let hag = sample_posterior(ModelKind::Hag, &panel, &cfg).unwrap();
    Fit { seed, panel, hag, elapsed: start.elapsed() }
}

fn recovery_criterion(fits: &[Fit]) -> Outcome {
    let t = HagParams::benchmark();
    let checked = [
        ("phi", t.phi),
        ("alpha", t.alpha),
        ("eta", t.eta),
        ("kappa", t.kappa),
        ("mu_sigma", t.mu_sigma),
        ("beta_s", t.beta_s),
        ("xi", t.xi),
        ("theta", t.theta),
    ];
    let mut passing = 0;
    let mut parts = Vec::new();
    let mut total = Duration::ZERO;
    for f in fits {
        total += f.elapsed;
        let d = &f.hag;
        let mut inside = 0;
        let mut missed = Vec::new();
        for (name, v) in checked {
            let j = d.column_index(name).unwrap();
            if d.summary(j).hdi_contains(v) {
                inside += 1;
            } else {
                missed.push(name);
            }
        }
        let sums: Vec<_> = (0..d.structural).map(|j| d.summary(j)).collect();
        let max_rhat = sums.iter().map(|s| s.rhat).fold(0.0, f64::max);
        let min_ess = sums.iter().map(|s| s.ess_bulk).fold(f64::INFINITY, f64::min);
        let ok = inside >= 7 && max_rhat < 1.01 && min_ess > 400.0;
        passing += usize::from(ok);
        parts.push(format!(
            "seed {}: {}/8 in HDI{}, max R̂ {:.4}, min ESS {:.0}, {} div{}",
            f.seed,
            inside,
            if missed.is_empty() { String::new() } else { format!(" (missed {})", missed.join(",")) },
            max_rhat,
            min_ess,
            d.total_divergences(),
            if ok { "" } else { " ✗" }
        ));
    }
    parts.push(format!("total sampling {:.0?}, limit 15 min", total));
    let ok = passing >= 2 && total < Duration::from_secs(15 * 60);
    outcome(ok, format!("{passing}/3 seeds pass; {}", parts.join("; ")))
}

struct SeedReports {
    seed: u64,
    indep: CvarReport,
    shared: CvarReport,
    hag: CvarReport,
}

fn cvar_reports(fit: &Fit) -> SeedReports {
    let report = |draws: &PosteriorDraws| {
        estimate_cvar(draws, THRESHOLD, &DEFAULT_LEVELS, 1_000_000, fit.seed).unwrap()
    };
    let fit_model = |kind: ModelKind| {
        let cfg = SamplerConfig { seed: fit.seed, ..SamplerConfig::for_model(kind) };
        sample_posterior(kind, &fit.panel, &cfg).unwrap()
    };
    SeedReports {
        seed: fit.seed,
        indep: report(&fit_model(ModelKind::Independent)),
        shared: report(&fit_model(ModelKind::Shared)),
        hag: report(&fit.hag),
    }
}

fn ratio_criterion(reports: &[SeedReports]) -> Outcome {
    let mut passing = 0;
    let mut parts = Vec::new();
    for r in reports {
        let at = |rep: &CvarReport, q: f64| rep.cvar_at(q).unwrap();
        let hi = at(&r.hag, 0.99995) / at(&r.indep, 0.99995);
        let lo = at(&r.hag, 0.999) / at(&r.indep, 0.999);
        let sh = at(&r.shared, 0.99995) / at(&r.indep, 0.99995);
        let ok = (1.25..=1.60).contains(&hi) && (1.05..=1.30).contains(&lo) && (sh - 1.0).abs() <= 0.15;
        passing += usize::from(ok);
        parts.push(format!(
            "seed {}: HAG/indep {lo:.3} @99.9%, {hi:.3} @99.995%, shared/indep {sh:.3}{}",
            r.seed,
            if ok { "" } else { " ✗" }
        ));
    }
    outcome(passing >= 2, format!("{passing}/3 seeds pass; {}", parts.join("; ")))
}

fn magnitude_check(reports: &[SeedReports]) -> Outcome {
    let targets = [
        ("indep 99.9%", 37.9e6),
        ("indep 99.995%", 322.3e6),
        ("HAG 99.995%", 461.4e6),
    ];
    let mut passing = 0;
    let mut parts = Vec::new();
    for r in reports {
        let got = [
            r.indep.cvar_at(0.999).unwrap(),
            r.indep.cvar_at(0.99995).unwrap(),
            r.hag.cvar_at(0.99995).unwrap(),
        ];
        let ok = got
            .iter()
            .zip(targets)
            .all(|(g, (_, want))| (g / want - 1.0).abs() <= 0.5);
        passing += usize::from(ok);
        let vals: Vec<String> = got
            .iter()
            .zip(targets)
            .map(|(g, (name, want))| format!("{name} {:.1}M vs {:.1}M", g / 1e6, want / 1e6))
            .collect();
        parts.push(format!("seed {}: {}", r.seed, vals.join(", ")));
    }
    outcome(passing >= 2, format!("{passing}/3 seeds within ±50%; {}", parts.join("; ")))
}

fn wald_criterion() -> Outcome {
    let p = PredictiveParams::Independent(IndepParams {
        mu_lambda: 20f64.ln(),
        mu_sigma: 1e6f64.ln(),
        xi: 0.7,
    });
    let losses = simulate_losses(&[p], THRESHOLD, 1_000_000, 2024).unwrap();
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    let want = 20.0 * (THRESHOLD + 1e6 / 0.3);
    let rel = mean / want - 1.0;
    outcome(rel.abs() < 0.01, format!("mean {mean:.4e} vs {want:.4e}, rel {rel:+.4}, limit ±0.01"))
}

fn diagnostics_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let normal = rand_distr::StandardNormal;
    let (chains, n) = (4, 1000);
    let same: Vec<Vec<f64>> = (0..chains)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(normal)).collect())
        .collect();
    let shifted: Vec<Vec<f64>> = same
        .iter()
        .enumerate()
        .map(|(c, x)| x.iter().map(|v| v + if c < 2 { 0.0 } else { 2.0 }).collect())
        .collect();
    let r_same = split_rhat(&same);
    let r_shift = split_rhat(&shifted);
    let ess = ess_bulk(&same);
    let ess_rel = ess / (n * chains) as f64 - 1.0;
    let ok = (r_same - 1.0).abs() <= 0.01 && r_shift > 1.2 && ess_rel.abs() <= 0.15;
    outcome(
        ok,
        format!("R̂ same {r_same:.4}, R̂ shifted {r_shift:.3}, i.i.d. ESS {ess:.0} of {} ({ess_rel:+.3})", n * chains),
    )
}

fn pipeline(dir: &Path, workers: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_oprisk"))
            .current_dir(dir)
            .env("OPRISK_WORKERS", workers)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        match out.status.code() {
            // short chains may trip the convergence gate; the files are still written
            Some(0 | 5) => Ok(()),
            c => Err(format!("{args:?} exited {c:?}: {}", String::from_utf8_lossy(&out.stderr))),
        }
    };
    let master = "9";
    run(&["simulate", "--seed", master])?;
    let mut files = vec!["panel.txt".to_string(), "truth.json".to_string()];
    for model in ["indep", "shared", "hag"] {
        run(&["fit", "--seed", master, "--model", model, "--warmup", "300", "--samples", "300"])?;
        run(&["cvar", "--seed", master, "--model", model, "--simulations", "200000"])?;
        files.extend([
            format!("draws_{model}.csv"),
            format!("diagnostics_{model}.json"),
            format!("cvar_{model}.json"),
        ]);
    }
    run(&["report", "cvar_indep.json", "cvar_shared.json", "cvar_hag.json", "--table", "table.txt"])?;
    files.push("table.txt".into());
    files
        .into_iter()
        .map(|f| std::fs::read(dir.join(&f)).map(|b| (f, b)).map_err(|e| e.to_string()))
        .collect()
}

fn determinism_criterion() -> Outcome {
    let runs: Result<Vec<_>, String> = ["1", "1", "4"]
        .iter()
        .map(|w| {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            pipeline(dir.path(), w)
        })
        .collect();
    match runs {
        Err(e) => outcome(false, e),
        Ok(runs) => {
            let differing: Vec<&str> = runs[0]
                .iter()
                .zip(&runs[1])
                .zip(&runs[2])
                .filter(|((a, b), c)| a.1 != b.1 || a.1 != c.1)
                .map(|((a, _), _)| a.0.as_str())
                .collect();
            let detail = if differing.is_empty() {
                format!("{} artifacts identical across 2 runs with 1 worker and 1 with 4", runs[0].len())
            } else {
                format!("differing artifacts: {}", differing.join(", "))
            };
            outcome(differing.is_empty(), detail)
        }
    }
}

fn main() {
    let mut suite = Suite { failed: Vec::new() };
    suite.run("1", "copula correctness", copula_criterion);
    suite.run("2", "stable-law sampler", stable_criterion);
    let (benchmark_panel, _) = simulate_panel(&HagParams::benchmark(), 15, THRESHOLD, 1).unwrap();
    suite.run("3", "gradient fidelity", || gradient_criterion(&benchmark_panel));
    suite.run("4", "nesting equivalence", nesting_criterion);

    let fits: Vec<Fit> = RECOVERY_SEEDS.iter().map(|&s| recovery_fit(s)).collect();
    suite.run("5", "HAG parameter recovery", || recovery_criterion(&fits));
    let start = Instant::now();
    let reports: Vec<SeedReports> = fits.iter().map(cvar_reports).collect();
    let per_model = start.elapsed() / 9;
    suite.run("6", "CVaR ratio reproduction", || {
        let o = ratio_criterion(&reports);
        let fast = per_model < Duration::from_secs(180);
        outcome(o.pass && fast, format!("{}; {:.1?} per model fit + CVaR", o.detail, per_model))
    });
    suite.run("6m", "CVaR magnitude (±50%)", || magnitude_check(&reports));
    suite.run("7", "aggregate-mean oracle", wald_criterion);
    suite.run("8", "diagnostics sanity", diagnostics_criterion);
    suite.run("9", "pipeline determinism", determinism_criterion);

    if suite.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {}", suite.failed.join(", "));
        std::process::exit(1);
    }
}
