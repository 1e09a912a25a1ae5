//! Annual loss panels and their two on-disk forms.
//!
//! Text form, one record per line:
//!
//! ```text
//! threshold=500000 years=2
//! year=1 count=2
//! exc=1234.5
//! exc=98765.25
//! year=2 count=0
//! ```
//!
//! JSON form: `{"threshold": 500000.0, "counts": [2, 0], "exceedances": [[1234.5, 98765.25], []]}`.
//! Floats are written with Rust's shortest round-trip formatting, so export
//! followed by import is lossless.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Observed panel: event counts per year and the threshold exceedances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    threshold: f64,
    counts: Vec<u64>,
    exceedances: Vec<Vec<f64>>,
}

impl PanelDataset {
    pub fn new(threshold: f64, exceedances: Vec<Vec<f64>>) -> Result<Self> {
        let counts = exceedances.iter().map(|e| e.len() as u64).collect();
        Self::from_parts(threshold, counts, exceedances)
    }

    /// Builds a panel and checks that `counts[t] == exceedances[t].len()`.
    pub fn from_parts(threshold: f64, counts: Vec<u64>, exceedances: Vec<Vec<f64>>) -> Result<Self> {
        let panel = Self {
            threshold,
            counts,
            exceedances,
        };
        panel.validate()?;
        Ok(panel)
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::param(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.counts.is_empty() {
            return Err(Error::param("panel must cover at least one year"));
        }
        if self.counts.len() != self.exceedances.len() {
            return Err(Error::param(format!(
                "{} counts but {} exceedance lists",
                self.counts.len(),
                self.exceedances.len()
            )));
        }
        for (t, (&n, ys)) in self.counts.iter().zip(&self.exceedances).enumerate() {
            if n as usize != ys.len() {
                return Err(Error::param(format!(
                    "year {}: count {} but {} exceedances",
                    t + 1,
                    n,
                    ys.len()
                )));
            }
            if let Some(y) = ys.iter().find(|y| !(y.is_finite() && **y > 0.0)) {
                return Err(Error::param(format!(
                    "year {}: exceedance {y} is not positive",
                    t + 1
                )));
            }
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn years(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn exceedances(&self) -> &[Vec<f64>] {
        &self.exceedances
    }

    pub fn total_events(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "threshold={:?} years={}", self.threshold, self.years());
        for (t, ys) in self.exceedances.iter().enumerate() {
            let _ = writeln!(out, "year={} count={}", t + 1, ys.len());
            for y in ys {
                let _ = writeln!(out, "exc={y:?}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::parse("panel", "empty file"))?;
        let fields = parse_fields(header, ln)?;
        let threshold: f64 = field(&fields, "threshold", ln)?;
        let years: usize = field(&fields, "years", ln)?;

        let mut counts = Vec::with_capacity(years);
        let mut exceedances: Vec<Vec<f64>> = Vec::with_capacity(years);
        for (ln, line) in lines {
            let fields = parse_fields(line, ln)?;
            match fields.first().map(|(k, _)| *k) {
                Some("year") => {
                    let year: usize = field(&fields, "year", ln)?;
                    if year != counts.len() + 1 {
                        return Err(Error::parse(
                            format!("line {ln}"),
                            format!("expected year {}, found {year}", counts.len() + 1),
                        ));
                    }
                    counts.push(field::<u64>(&fields, "count", ln)?);
                    exceedances.push(Vec::new());
                }
                Some("exc") => {
                    let y: f64 = field(&fields, "exc", ln)?;
                    let Some(current) = exceedances.last_mut() else {
                        return Err(Error::parse(format!("line {ln}"), "exceedance before any year record"));
                    };
                    current.push(y);
                }
                _ => {
                    return Err(Error::parse(format!("line {ln}"), format!("unrecognised record `{line}`")));
                }
            }
        }
        if counts.len() != years {
            return Err(Error::parse(
                "panel",
                format!("header declares {years} years, found {}", counts.len()),
            ));
        }
        Self::from_parts(threshold, counts, exceedances)
            .map_err(|e| Error::parse("panel", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PanelDataset =
            serde_json::from_str(text).map_err(|e| Error::parse("panel json", e.to_string()))?;
        raw.validate()
            .map_err(|e| Error::parse("panel json", e.to_string()))?;
        Ok(raw)
    }
}

fn parse_fields(line: &str, ln: usize) -> Result<Vec<(&str, &str)>> {
    line.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| Error::parse(format!("line {ln}"), format!("expected key=value, got `{tok}`")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str, ln: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let (_, raw) = fields
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| Error::parse(format!("line {ln}"), format!("missing `{key}`")))?;
    raw.parse()
        .map_err(|e| Error::parse(format!("line {ln}"), format!("bad `{key}` value `{raw}`: {e}")))
}

/// Writes the panel; a `.json` extension selects the JSON form.
pub fn export_panel(data: &PanelDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let body = if is_json(path) {
        data.to_json()?
    } else {
        data.to_text()
    };
    write_atomic(path, body.as_bytes())
}

/// Reads a panel in either form. JSON is detected by extension or by a
/// leading `{`.
pub fn import_panel(path: impl AsRef<Path>) -> Result<PanelDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if is_json(path) || text.trim_start().starts_with('{') {
        PanelDataset::from_json(&text)
    } else {
        PanelDataset::from_text(&text)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PanelDataset {
        PanelDataset::new(5e5, vec![vec![1.5, 2.25e6], vec![], vec![0.1]]).unwrap()
    }

    #[test]
    fn text_round_trip_keeps_empty_year() {
        let p = sample();
        let back = PanelDataset::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.counts(), &[2, 0, 1]);
    }

    #[test]
    fn json_round_trip() {
        let p = sample();
        assert_eq!(PanelDataset::from_json(&p.to_json().unwrap()).unwrap(), p);
    }

    #[test]
    fn file_round_trip_both_forms() {
        let dir = tempfile::tempdir().unwrap();
        let p = sample();
        for name in ["panel.txt", "panel.json"] {
            let path = dir.path().join(name);
            export_panel(&p, &path).unwrap();
            assert_eq!(import_panel(&path).unwrap(), p);
        }
    }

    #[test]
    fn mismatched_count_rejected() {
        let text = "threshold=1 years=1\nyear=1 count=2\nexc=1.0\n";
        let err = PanelDataset::from_text(text).unwrap_err();
        assert!(err.to_string().contains("count 2"), "{err}");
        let json = r#"{"threshold":1.0,"counts":[2],"exceedances":[[1.0]]}"#;
        assert!(PanelDataset::from_json(json).is_err());
    }

    #[test]
    fn malformed_record_reports_line() {
        let text = "threshold=1 years=1\nyear=1 count=1\nexc=abc\n";
        let err = PanelDataset::from_text(text).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let text = "threshold=1 years=2\nyear=1 count=0\n";
        assert!(PanelDataset::from_text(text).is_err());
        let text = "threshold=1 years=1\nexc=1.0\n";
        assert!(PanelDataset::from_text(text).is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(PanelDataset::new(0.0, vec![vec![]]).is_err());
        assert!(PanelDataset::new(1.0, vec![]).is_err());
        assert!(PanelDataset::new(1.0, vec![vec![-1.0]]).is_err());
        assert!(PanelDataset::from_parts(1.0, vec![1], vec![vec![]]).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_lossless(
            threshold in 1e-3f64..1e9,
            years in prop::collection::vec(prop::collection::vec(1e-9f64..1e12, 0..6), 1..8),
        ) {
            let p = PanelDataset::new(threshold, years).unwrap();
            prop_assert_eq!(PanelDataset::from_text(&p.to_text()).unwrap(), p.clone());
            prop_assert_eq!(PanelDataset::from_json(&p.to_json().unwrap()).unwrap(), p);
        }
    }
}
