//! Flat, line-oriented `key = value` configuration with `[section]` headers.
//!
//! Values stay strings until a scenario asks for them, so the resolved echo
//! written next to the outputs is byte-stable. Unknown sections or keys are
//! rejected up front, naming the offending line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};

/// Section -> key -> value, with deterministic ordering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    map: BTreeMap<String, BTreeMap<String, String>>,
}

/// Allowed sections and keys.
const SCHEMA: &[(&str, &[&str])] = &[
    ("experiment", &["scenario", "out_dir", "preset"]),
    (
        "template",
        &["mu", "k", "c", "rho", "gamma", "stance_gravity", "kt", "chi0"],
    ),
    ("initial", &["phase", "chi", "chidot"]),
    (
        "integrator",
        &["h", "eps_event", "eps_vel", "max_time", "max_hops", "sample_stride", "floor_level"],
    ),
    ("sweep", &["gains", "apex_guess"]),
    ("cycle", &["gains", "transient_hops", "hops"]),
    (
        "slip",
        &[
            "mass", "gamma", "kss", "beta_s", "kst", "missing", "rho_lf", "rho_lb", "rho_rf",
            "rho_rb", "theta_td_lf", "theta_td_lb", "theta_td_rf", "theta_td_rb", "theta_lo_lf",
            "theta_lo_lb", "theta_lo_rf", "theta_lo_rb", "angle_p", "angle_d", "pd_p_meta",
            "pd_d_meta", "z0", "ydot0", "strides", "z_guess", "ydot_guess",
        ],
    ),
    (
        "tripod",
        &[
            "mass", "gamma", "kss", "beta_s", "kst", "missing", "rho_lf", "rho_lb", "rho_rf",
            "rho_rb", "theta_lf", "theta_lb", "theta_rf", "theta_rb", "hip_x", "hip_y", "z0",
            "zdot0",
        ],
    ),
    ("energetics", &["k_tau", "r_motor", "r_eff", "distance", "gains", "max_strides"]),
    ("smooth", &["input", "column", "window"]),
];

fn schema_keys(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, keys)| *keys)
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if schema_keys(name).is_none() {
                    bail!("{origin}:{}: unknown section [{name}]", lineno + 1);
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{origin}:{}: expected `key = value`, got `{line}`", lineno + 1);
            };
            let key = key.trim();
            let value = value.trim();
            let Some(section) = section.as_deref() else {
                bail!("{origin}:{}: key `{key}` outside any [section]", lineno + 1);
            };
            let allowed = schema_keys(section).expect("validated on entry");
            if !allowed.contains(&key) {
                bail!("{origin}:{}: unknown key `{key}` in [{section}]", lineno + 1);
            }
            cfg.map
                .entry(section.to_string())
                .or_default()
                .insert(key.to_string(), value.to_string());
        }
        Ok(cfg)
    }

    /// Overlay `other` on top of `self` (other wins).
    pub fn merge(&mut self, other: &Config) {
        for (section, keys) in &other.map {
            let slot = self.map.entry(section.clone()).or_default();
            for (k, v) in keys {
                slot.insert(k.clone(), v.clone());
            }
        }
    }

    /// Apply a `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects section.key=value, got `{assignment}`"))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| anyhow!("--set expects section.key=value, got `{assignment}`"))?;
        let allowed =
            schema_keys(section).ok_or_else(|| anyhow!("unknown section `{section}` in --set"))?;
        if !allowed.contains(&key) {
            bail!("unknown key `{key}` in [{section}] (--set)");
        }
        self.map
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.map.get(section).and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| anyhow!("missing required key `{key}` in [{section}]"))
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64> {
        let v = self.require(section, key)?;
        v.parse().with_context(|| format!("[{section}] {key} = `{v}` is not a number"))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => {
                v.parse().with_context(|| format!("[{section}] {key} = `{v}` is not a number"))
            }
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => {
                v.parse().with_context(|| format!("[{section}] {key} = `{v}` is not an integer"))
            }
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => bail!("[{section}] {key} = `{other}` is not a boolean"),
            },
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        let v = self.require(section, key)?;
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            bail!("[{section}] {key} is an empty list");
        }
        items
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .with_context(|| format!("[{section}] {key}: `{s}` is not a number"))
            })
            .collect()
    }

    /// Deterministic echo of the full configuration.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.map {
            let _ = writeln!(out, "[{section}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
            let _ = writeln!(out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_merge_and_echo_roundtrip() {
        let a = Config::parse("[experiment]\nscenario = gain-sweep\n\n[sweep]\ngains = 1,2\n", "a")
            .unwrap();
        let mut b = Config::parse("[sweep]\ngains = 3,4\napex_guess = 0.5\n", "b").unwrap();
        b.merge(&a);
        assert_eq!(b.get("sweep", "gains"), Some("1,2"));
        assert_eq!(b.get("sweep", "apex_guess"), Some("0.5"));
        let echo = b.to_ini();
        let again = Config::parse(&echo, "echo").unwrap();
        assert_eq!(again, b);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("[experiment]\nbogus = 1\n", "t").is_err());
        assert!(Config::parse("[nonsense]\n", "t").is_err());
        assert!(Config::parse("orphan = 1\n", "t").is_err());
        let mut c = Config::default();
        assert!(c.set("experiment.scenario=x").is_ok());
        assert!(c.set("experiment.bogus=x").is_err());
        assert!(c.set("template=x").is_err());
    }

    #[test]
    fn list_parsing() {
        let c = Config::parse("[sweep]\ngains = 4.5, 5.0,5.5\n", "t").unwrap();
        assert_eq!(c.f64_list("sweep", "gains").unwrap(), vec![4.5, 5.0, 5.5]);
        let empty = Config::parse("[sweep]\ngains = \n", "t").unwrap();
        assert!(empty.f64_list("sweep", "gains").is_err());
    }
}
