use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelKind;

/// VaR and CVaR of one model at several confidence levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarReport {
    pub model: ModelKind,
    pub seed: u64,
    /// Number of predictive simulations.
    pub m_draws: usize,
    /// Number of posterior draws resampled from.
    pub posterior_draws: usize,
    pub threshold: f64,
    pub levels: Vec<f64>,
    pub var: Vec<f64>,
    pub cvar: Vec<f64>,
    /// Monte Carlo standard error of each CVaR.
    pub se: Vec<f64>,
    pub tail_counts: Vec<usize>,
    pub mean_loss: f64,
    pub warnings: Vec<String>,
}

impl CvarReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("cvar report", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }

    pub fn cvar_at(&self, level: f64) -> Option<f64> {
        self.levels
            .iter()
            .position(|q| (q - level).abs() < 1e-12)
            .map(|k| self.cvar[k])
    }

    /// Aligned table of VaR, CVaR and standard error, in millions.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} model, {} simulations from {} posterior draws (seed {})",
            self.model.display_name(),
            self.m_draws,
            self.posterior_draws,
            self.seed
        );
        let _ = writeln!(s, "{:<9} {:>12} {:>12} {:>10} {:>7}", "Level", "VaR", "CVaR", "SE", "tail");
        for k in 0..self.levels.len() {
            let _ = writeln!(
                s,
                "{:<9} {:>12.1} {:>12.1} {:>10.2} {:>7}",
                format_level(self.levels[k]),
                self.var[k] / 1e6,
                self.cvar[k] / 1e6,
                self.se[k] / 1e6,
                self.tail_counts[k]
            );
        }
        let _ = writeln!(s, "(millions of monetary units)");
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

fn format_level(q: f64) -> String {
    format!("{:.3}%", 100.0 * q)
}

/// Joins reports into one CVaR table, in millions, one column per report.
///
/// With more than one report a ratio column is added: HAG over independent
/// when both are present, otherwise last over first.
pub fn compare_reports(reports: &[CvarReport]) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::arg("no reports to compare"))?;
    for r in &reports[1..] {
        let same = r.levels.len() == first.levels.len()
            && r.levels
                .iter()
                .zip(&first.levels)
                .all(|(a, b)| (a - b).abs() < 1e-12);
        if !same {
            return Err(Error::arg(format!(
                "mismatched levels: {:?} ({}) vs {:?} ({})",
                first.levels, first.model, r.levels, r.model
            )));
        }
    }

    let ratio = if reports.len() > 1 {
        let find = |k: ModelKind| reports.iter().position(|r| r.model == k);
        let (num, den) = match (find(ModelKind::Hag), find(ModelKind::Independent)) {
            (Some(h), Some(i)) => (h, i),
            _ => (reports.len() - 1, 0),
        };
        Some((num, den))
    } else {
        None
    };

    let mut s = String::new();
    let _ = write!(s, "{:<9}", "Level");
    for r in reports {
        let _ = write!(s, " {:>17}", r.model.display_name());
    }
    if let Some((n, d)) = ratio {
        let label = format!(
            "Ratio ({}/{})",
            short_name(reports[n].model),
            short_name(reports[d].model)
        );
        let _ = write!(s, " {label:>20}");
    }
    s.push('\n');
    for k in 0..first.levels.len() {
        let _ = write!(s, "{:<9}", format_level(first.levels[k]));
        for r in reports {
            let _ = write!(s, " {:>17.1}", r.cvar[k] / 1e6);
        }
        if let Some((n, d)) = ratio {
            let x = reports[n].cvar[k] / reports[d].cvar[k];
            let _ = write!(s, " {:>19.2}x", x);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CVaR in millions of monetary units");
    Ok(s)
}

fn short_name(k: ModelKind) -> &'static str {
    match k {
        ModelKind::Independent => "Indep.",
        ModelKind::Shared => "Shared",
        ModelKind::Hag => "HAG",
    }
}
