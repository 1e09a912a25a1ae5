//! Stored posterior draws, summaries and their on-disk formats.
//!
//! Draws are written as CSV with a few `#` header lines carrying the model
//! tag and per-chain adaptation results:
//!
//! ```text
//! # model=hag
//! # structural=9
//! # max_tree_depth=10
//! # chain=0 step_size=0.12 warmup_divergences=0 inv_metric=0.1;0.2;...
//! chain,iteration,divergent,tree_depth,accept_stat,phi,mu_lambda,...
//! 0,0,0,5,0.97,0.71,2.98,...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::diagnostics::ParamSummary;
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Draws and sampler statistics of one chain after warmup.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// One row per iteration, columns as in [`PosteriorDraws::names`].
    pub draws: Vec<Vec<f64>>,
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<u32>,
    pub accept_stat: Vec<f64>,
    pub step_size: f64,
    /// Adapted inverse metric on the unconstrained scale.
    pub inv_metric: Vec<f64>,
    pub warmup_divergences: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    /// `None` for draws of an arbitrary target.
    pub model: Option<ModelKind>,
    pub names: Vec<String>,
    /// The first `structural` columns are structural parameters; the rest
    /// are latent states.
    pub structural: usize,
    pub max_tree_depth: u32,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn draws_per_chain(&self) -> usize {
        self.chains.first().map_or(0, |c| c.draws.len())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Column `j` split by chain.
    pub fn column(&self, j: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(|row| row[j]).collect())
            .collect()
    }

    /// Column `j` with all chains concatenated.
    pub fn pooled(&self, j: usize) -> Vec<f64> {
        self.chains
            .iter()
            .flat_map(|c| c.draws.iter().map(move |row| row[j]))
            .collect()
    }

    /// Structural parameter vectors of every draw, chain by chain.
    pub fn structural_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.chains
            .iter()
            .flat_map(|c| c.draws.iter().map(|row| &row[..self.structural]))
    }

    /// Latent columns of every draw, chain by chain.
    pub fn latent_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.chains
            .iter()
            .flat_map(|c| c.draws.iter().map(|row| &row[self.structural..]))
    }

    pub fn summary(&self, j: usize) -> ParamSummary {
        ParamSummary::from_chains(&self.names[j], &self.column(j))
    }

    pub fn total_divergences(&self) -> usize {
        self.chains
            .iter()
            .map(|c| c.divergent.iter().filter(|d| **d).count())
            .sum()
    }

    pub fn tree_depth_saturations(&self) -> usize {
        self.chains
            .iter()
            .map(|c| {
                c.tree_depth
                    .iter()
                    .filter(|d| **d >= self.max_tree_depth)
                    .count()
            })
            .sum()
    }

    /// Summaries of the structural parameters plus sampler counts.
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            model: self.model,
            chains: self.num_chains(),
            draws_per_chain: self.draws_per_chain(),
            divergences: self.total_divergences(),
            tree_depth_saturations: self.tree_depth_saturations(),
            step_sizes: self.chains.iter().map(|c| c.step_size).collect(),
            parameters: (0..self.structural)
                .map(|j| {
                    let s = self.summary(j);
                    (s.name.clone(), s.into())
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let model = self.model.map_or("none", ModelKind::as_str);
        let _ = writeln!(s, "# model={model}");
        let _ = writeln!(s, "# structural={}", self.structural);
        let _ = writeln!(s, "# max_tree_depth={}", self.max_tree_depth);
        for (c, ch) in self.chains.iter().enumerate() {
            let metric: Vec<String> = ch.inv_metric.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(
                s,
                "# chain={c} step_size={:?} warmup_divergences={} inv_metric={}",
                ch.step_size,
                ch.warmup_divergences,
                metric.join(";")
            );
        }
        let _ = writeln!(s, "chain,iteration,divergent,tree_depth,accept_stat,{}", self.names.join(","));
        for (c, ch) in self.chains.iter().enumerate() {
            for (i, row) in ch.draws.iter().enumerate() {
                let _ = write!(
                    s,
                    "{c},{i},{},{},{:?}",
                    u8::from(ch.divergent[i]),
                    ch.tree_depth[i],
                    ch.accept_stat[i]
                );
                for v in row {
                    let _ = write!(s, ",{v:?}");
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(format!("draws line {line}"), msg);
        let mut model: Option<ModelKind> = None;
        let mut structural = None;
        let mut max_tree_depth = 10;
        let mut chains: Vec<ChainDraws> = Vec::new();
        let mut names: Option<Vec<String>> = None;

        for (ln, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let fields = parse_fields(meta).map_err(|m| err(ln, m))?;
                if let Some(m) = fields.get("model") {
                    model = match *m {
                        "none" => None,
                        other => Some(other.parse().map_err(|e: Error| err(ln, e.to_string()))?),
                    };
                } else if let Some(v) = fields.get("structural") {
                    structural = Some(v.parse::<usize>().map_err(|e| err(ln, e.to_string()))?);
                } else if let Some(v) = fields.get("max_tree_depth") {
                    max_tree_depth = v.parse().map_err(|e: std::num::ParseIntError| err(ln, e.to_string()))?;
                } else if let Some(c) = fields.get("chain") {
                    let c: usize = c.parse().map_err(|e: std::num::ParseIntError| err(ln, e.to_string()))?;
                    if c != chains.len() {
                        return Err(err(ln, format!("chain header {c} out of order")));
                    }
                    let get = |k: &str| {
                        fields
                            .get(k)
                            .copied()
                            .ok_or_else(|| err(ln, format!("missing {k}")))
                    };
                    let step_size = get("step_size")?
                        .parse()
                        .map_err(|e: std::num::ParseFloatError| err(ln, e.to_string()))?;
                    let warmup_divergences = get("warmup_divergences")?
                        .parse()
                        .map_err(|e: std::num::ParseIntError| err(ln, e.to_string()))?;
                    let inv_metric = get("inv_metric")?
                        .split(';')
                        .map(str::parse)
                        .collect::<std::result::Result<Vec<f64>, _>>()
                        .map_err(|e| err(ln, e.to_string()))?;
                    chains.push(ChainDraws {
                        draws: Vec::new(),
                        divergent: Vec::new(),
                        tree_depth: Vec::new(),
                        accept_stat: Vec::new(),
                        step_size,
                        inv_metric,
                        warmup_divergences,
                    });
                }
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            let Some(cols) = &names else {
                if cells.len() < 5 || cells[..5] != ["chain", "iteration", "divergent", "tree_depth", "accept_stat"] {
                    return Err(err(ln, "missing column header".into()));
                }
                names = Some(cells[5..].iter().map(|s| s.to_string()).collect());
                continue;
            };
            if cells.len() != cols.len() + 5 {
                return Err(err(ln, format!("expected {} columns, found {}", cols.len() + 5, cells.len())));
            }
            let c: usize = cells[0].parse().map_err(|e: std::num::ParseIntError| err(ln, e.to_string()))?;
            let ch = chains
                .get_mut(c)
                .ok_or_else(|| err(ln, format!("row for undeclared chain {c}")))?;
            let i: usize = cells[1].parse().map_err(|e: std::num::ParseIntError| err(ln, e.to_string()))?;
            if i != ch.draws.len() {
                return Err(err(ln, format!("iteration {i} out of order")));
            }
            ch.divergent.push(match cells[2] {
                "0" => false,
                "1" => true,
                other => return Err(err(ln, format!("bad divergent flag {other:?}"))),
            });
            ch.tree_depth
                .push(cells[3].parse().map_err(|e: std::num::ParseIntError| err(ln, e.to_string()))?);
            ch.accept_stat
                .push(cells[4].parse().map_err(|e: std::num::ParseFloatError| err(ln, e.to_string()))?);
            let row = cells[5..]
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(ln, e.to_string()))?;
            ch.draws.push(row);
        }

        let names = names.ok_or_else(|| Error::parse("draws", "no column header"))?;
        let structural = structural.unwrap_or(names.len());
        if structural > names.len() {
            return Err(Error::parse("draws", "structural count exceeds columns"));
        }
        if let Some(kind) = model {
            let expected = kind.structural_names();
            if structural != expected.len() || names[..structural] != *expected {
                return Err(Error::parse(
                    "draws",
                    format!("columns do not match the {kind} model"),
                ));
            }
        }
        if chains.is_empty() || chains.iter().any(|c| c.draws.is_empty()) {
            return Err(Error::parse("draws", "no draws"));
        }
        Ok(Self {
            model,
            names,
            structural,
            max_tree_depth,
            chains,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

fn parse_fields(meta: &str) -> std::result::Result<BTreeMap<&str, &str>, String> {
    meta.split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| format!("expected key=value, got {kv:?}")))
        .collect()
}

fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Per-parameter convergence summary, keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub model: Option<ModelKind>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub divergences: usize,
    pub tree_depth_saturations: usize,
    pub step_sizes: Vec<f64>,
    pub parameters: BTreeMap<String, ParamDiagnostics>,
}

/// JSON-facing copy of [`ParamSummary`]; undefined statistics are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub mean: f64,
    pub sd: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub rhat: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub ess_bulk: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub ess_tail: f64,
}

impl From<ParamSummary> for ParamDiagnostics {
    fn from(s: ParamSummary) -> Self {
        Self {
            mean: s.mean,
            sd: s.sd,
            hdi_low: s.hdi_low,
            hdi_high: s.hdi_high,
            rhat: s.rhat,
            ess_bulk: s.ess_bulk,
            ess_tail: s.ess_tail,
        }
    }
}

impl Diagnostics {
    pub fn max_rhat(&self) -> f64 {
        self.parameters
            .values()
            .map(|p| if p.rhat.is_nan() { f64::INFINITY } else { p.rhat })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess_bulk(&self) -> f64 {
        self.parameters
            .values()
            .map(|p| if p.ess_bulk.is_nan() { 0.0 } else { p.ess_bulk })
            .fold(f64::INFINITY, f64::min)
    }

    /// Names of parameters failing `rhat < max_rhat` or `ess_bulk > min_ess`.
    pub fn failures(&self, max_rhat: f64, min_ess: f64) -> Vec<String> {
        self.parameters
            .iter()
            .filter(|(_, p)| !(p.rhat < max_rhat && p.ess_bulk > min_ess))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
