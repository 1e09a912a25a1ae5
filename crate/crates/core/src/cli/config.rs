//! Flat `key = value` run configuration and seed derivation.
//!
//! ```text
//! # comments and blank lines are ignored
//! seed = 2024
//! model = hag
//! years = 15
//! levels = 0.999, 0.9995, 0.99995
//! ```
//!
//! Keys use the long flag names with `-` or `_`. Command-line flags take
//! precedence over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

/// Every key accepted in a configuration file.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "model",
    "years",
    "threshold",
    "phi",
    "mu_lambda",
    "alpha",
    "eta",
    "kappa",
    "mu_sigma",
    "beta_s",
    "xi",
    "theta",
    "panel",
    "truth",
    "draws",
    "diagnostics",
    "chains",
    "warmup",
    "samples",
    "target_accept",
    "max_tree_depth",
    "levels",
    "simulations",
    "report",
    "table",
];

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = normalize(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag value if given, otherwise the parsed file value.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config `{key}` = `{v}`: {e}"))),
        }
    }

    pub fn resolve_or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.resolve(key, flag)?.unwrap_or(default))
    }
}

/// Comma-separated confidence levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad level `{x}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Levels)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Sub-seed for one pipeline stage: `splitmix64(master ^ fnv1a(label))`.
///
/// Stage labels are `simulate`, `fit` and `cvar`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a(label))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse("seed = 5\nyears=3 # trailing\n\nmu-lambda = 2.5\n").unwrap();
        assert_eq!(cfg.resolve::<u64>("seed", None).unwrap(), Some(5));
        assert_eq!(cfg.resolve::<u64>("seed", Some(9)).unwrap(), Some(9));
        assert_eq!(cfg.resolve::<f64>("mu_lambda", None).unwrap(), Some(2.5));
        assert_eq!(cfg.resolve_or::<usize>("chains", None, 2).unwrap(), 2);
    }

    #[test]
    fn bad_config_lines() {
        assert!(ConfigFile::parse("nonsense").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("seed=1\nseed=2").is_err());
        let cfg = ConfigFile::parse("years = many").unwrap();
        assert!(cfg.resolve::<usize>("years", None).is_err());
    }

    #[test]
    fn levels_parse() {
        assert_eq!("0.999, 0.9995".parse::<Levels>().unwrap().0, vec![0.999, 0.9995]);
        assert!("0.9,x".parse::<Levels>().is_err());
    }

    #[test]
    fn seeds_split_by_label() {
        let a = derive_seed(1, "fit");
        assert_eq!(a, derive_seed(1, "fit"));
        assert_ne!(a, derive_seed(1, "cvar"));
        assert_ne!(a, derive_seed(2, "fit"));
    }
}
