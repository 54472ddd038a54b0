//! Flat `key = value` config files and value parsing shared by the commands.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys a config file may set. Dashes and underscores are interchangeable.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "lambda",
    "theta",
    "m_frac",
    "conv_window",
    "conv_tol",
    "max_steps",
    "stance_form",
    "edge_mask",
    "self_weight",
    "attach",
    "paired",
    "sizes",
    "pcts",
    "selections",
    "perturbations",
    "replicates",
    "seed",
    "workers",
    "out",
    "trajectories",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected key = value", k + 1)));
            };
            let key = normalize_key(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", k + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if given, otherwise the parsed file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key).map(|v| parse_field(key, v)).transpose()
    }

    /// Boolean switches: a set flag wins, otherwise the file decides.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        Ok(self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

pub fn parse_field<T>(field: &str, value: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("{field}: cannot parse `{value}`: {e}")))
}

/// Parses `a,b,c`, `lo..hi` or `lo..hi:step` (inclusive) into values.
/// A bare range uses `default_step`.
pub fn parse_levels(field: &str, text: &str, default_step: f64) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Usage(format!("{field}: {msg}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, parse_field::<f64>(field, step)?),
                None => (rest, default_step),
            };
            let lo: f64 = parse_field(field, lo)?;
            let hi: f64 = parse_field(field, hi)?;
            if step.is_nan() || step <= 0.0 || hi < lo {
                return Err(bad(format!("invalid range `{part}`")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            out.extend((0..=count).map(|k| lo + k as f64 * step));
        } else {
            out.push(parse_field(field, part)?);
        }
    }
    if out.is_empty() {
        return Err(bad("must not be empty".into()));
    }
    Ok(out)
}

pub fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    parse_levels("sizes", text, 10.0)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 0.0 {
                Ok(v as usize)
            } else {
                Err(CliError::Usage(format!("sizes: `{v}` is not a whole number")))
            }
        })
        .collect()
}

pub fn parse_list<T>(field: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    let items: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_field(field, p))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Usage(format!("{field}: must not be empty")));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(
            parse_levels("pcts", "5..40", 5.0).unwrap(),
            vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
        );
        assert_eq!(parse_levels("pcts", "10..20:5", 5.0).unwrap(), vec![10.0, 15.0, 20.0]);
        assert_eq!(parse_levels("pcts", "2.5, 7", 5.0).unwrap(), vec![2.5, 7.0]);
        assert_eq!(parse_sizes("10..150").unwrap().len(), 15);
        assert_eq!(parse_sizes("80").unwrap(), vec![80]);
        assert!(parse_sizes("10.5").is_err());
        assert!(parse_levels("pcts", "40..5", 5.0).is_err());
        assert!(parse_levels("pcts", "", 5.0).is_err());
    }

    #[test]
    fn config_file_parsing() {
        let cfg = ConfigFile::parse("# comment\nalpha = 0.5\nstance-form=anchored # trailing\n\n").unwrap();
        assert_eq!(cfg.pick::<f64>(None, "alpha").unwrap(), Some(0.5));
        assert_eq!(cfg.pick(Some(0.25), "alpha").unwrap(), Some(0.25));
        assert_eq!(cfg.get("stance_form"), Some("anchored"));
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("alpha").is_err());
        assert!(ConfigFile::parse("alpha = x")
            .unwrap()
            .pick::<f64>(None, "alpha")
            .is_err());
    }
}
