//! Resolved run configuration and its flat `key = value` file format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use betaflow::poly::{parse_rational, rational_to_f64, Rational};
use betaflow::sde::{EnsembleParams, DEFAULT_STEPS, DEFAULT_SUBSTEP_FACTOR};
use betaflow::stats::Sampler;
use betaflow::{Ensemble, EnsembleKind};
use clap::ValueEnum;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Gaussian,
    LaguerreIi,
    LaguerreI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Tridiagonal,
    SdeEndpoint,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Tridiagonal => Sampler::Tridiagonal,
            SamplerArg::SdeEndpoint => Sampler::SdeEndpoint,
        }
    }
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_owned())
        .unwrap_or_default()
}

fn parse_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T, CliError> {
    T::from_str(s, true).map_err(|_| CliError::Usage(format!("invalid value `{s}` for `{key}`")))
}

/// Every knob a command can read. Field order is the file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: EnsembleKind,
    pub particles: usize,
    /// Kept exact so `1/2` and `0.3` reach the polynomial code unrounded.
    pub c: Rational,
    pub alpha: Rational,
    pub horizon: f64,
    pub steps: usize,
    pub substep_factor: usize,
    pub seed: u64,
    pub replicas: usize,
    pub out: PathBuf,
    pub format: Format,
    pub nmax: usize,
    pub order: usize,
    pub grid_points: usize,
    pub tol: f64,
    pub sampler: SamplerArg,
    pub family: Family,
    pub nodes: usize,
    pub x_max: f64,
    pub dump_paths: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: EnsembleKind::Gaussian,
            particles: 200,
            c: Rational::from_integer(1.into()),
            alpha: Rational::from_integer(1.into()),
            horizon: 1.0,
            steps: DEFAULT_STEPS,
            substep_factor: DEFAULT_SUBSTEP_FACTOR,
            seed: 0,
            replicas: 100,
            out: PathBuf::from("out"),
            format: Format::Csv,
            nmax: 8,
            order: 1,
            grid_points: 2001,
            tol: 1e-10,
            sampler: SamplerArg::Tridiagonal,
            family: Family::Gaussian,
            nodes: 10,
            x_max: 6.0,
            dump_paths: false,
        }
    }
}

/// File keys, with accepted aliases.
const KEYS: &[(&str, &[&str])] = &[
    ("kind", &[]),
    ("N", &["particles"]),
    ("c", &[]),
    ("alpha", &[]),
    ("T", &["horizon"]),
    ("steps", &[]),
    ("substep_factor", &[]),
    ("seed", &[]),
    ("replicas", &[]),
    ("out", &[]),
    ("format", &[]),
    ("nmax", &[]),
    ("n", &["order"]),
    ("grid_points", &[]),
    ("tol", &[]),
    ("sampler", &[]),
    ("family", &[]),
    ("nodes", &[]),
    ("x_max", &[]),
    ("dump_paths", &[]),
];

fn canonical_key(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .find(|(k, aliases)| *k == key || aliases.contains(&key))
        .map(|(k, _)| *k)
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{s}` for `{key}`")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = canonical_key(key)
            .ok_or_else(|| CliError::Usage(format!("unknown config key `{key}`")))?;
        let v = value.trim();
        match key {
            "kind" => {
                self.kind = v
                    .parse()
                    .map_err(|e: betaflow::Error| CliError::Usage(e.to_string()))?
            }
            "N" => self.particles = parse_num(key, v)?,
            "c" => self.c = parse_rational(v).map_err(|e| CliError::Usage(e.to_string()))?,
            "alpha" => {
                self.alpha = parse_rational(v).map_err(|e| CliError::Usage(e.to_string()))?
            }
            "T" => self.horizon = parse_num(key, v)?,
            "steps" => self.steps = parse_num(key, v)?,
            "substep_factor" => self.substep_factor = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "replicas" => self.replicas = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "format" => self.format = parse_enum(key, v)?,
            "nmax" => self.nmax = parse_num(key, v)?,
            "n" => self.order = parse_num(key, v)?,
            "grid_points" => self.grid_points = parse_num(key, v)?,
            "tol" => self.tol = parse_num(key, v)?,
            "sampler" => self.sampler = parse_enum(key, v)?,
            "family" => self.family = parse_enum(key, v)?,
            "nodes" => self.nodes = parse_num(key, v)?,
            "x_max" => self.x_max = parse_num(key, v)?,
            "dump_paths" => self.dump_paths = parse_num(key, v)?,
            _ => unreachable!("key table and match arms diverged"),
        }
        Ok(())
    }

    /// Parses the flat format on top of `self`. Blank lines and `#` comments
    /// are skipped; a repeated key is an error.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                ))
            })?;
            let k = k.trim();
            let canon = canonical_key(k)
                .ok_or_else(|| CliError::Usage(format!("unknown config key `{k}`")))?;
            if seen.insert(canon, lineno).is_some() {
                return Err(CliError::Usage(format!("config key `{canon}` given twice")));
            }
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("kind", self.kind.to_string()),
            ("N", self.particles.to_string()),
            ("c", self.c.to_string()),
            ("alpha", self.alpha.to_string()),
            ("T", format!("{:?}", self.horizon)),
            ("steps", self.steps.to_string()),
            ("substep_factor", self.substep_factor.to_string()),
            ("seed", self.seed.to_string()),
            ("replicas", self.replicas.to_string()),
            ("out", self.out.display().to_string()),
            ("format", enum_name(&self.format)),
            ("nmax", self.nmax.to_string()),
            ("n", self.order.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("tol", format!("{:?}", self.tol)),
            ("sampler", enum_name(&self.sampler)),
            ("family", enum_name(&self.family)),
            ("nodes", self.nodes.to_string()),
            ("x_max", format!("{:?}", self.x_max)),
            ("dump_paths", self.dump_paths.to_string()),
        ]
    }

    /// Lowercase hex SHA-256 of the canonical file text.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn c_f64(&self) -> f64 {
        rational_to_f64(&self.c)
    }

    pub fn alpha_f64(&self) -> f64 {
        rational_to_f64(&self.alpha)
    }

    pub fn ensemble(&self) -> Result<Ensemble, CliError> {
        Ok(Ensemble::new(self.kind, self.c_f64(), self.alpha_f64())?)
    }

    pub fn params(&self) -> Result<EnsembleParams, CliError> {
        Ok(EnsembleParams::new(
            self.ensemble()?,
            self.particles,
            self.horizon,
            self.steps,
            self.seed,
            self.substep_factor,
        )?)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.pairs() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_text() {
        let mut cfg = RunConfig::default();
        cfg.set("c", "1/2").unwrap();
        cfg.set("kind", "laguerre").unwrap();
        cfg.set("T", "0.3").unwrap();
        cfg.set("format", "json").unwrap();
        cfg.set("family", "laguerre-ii").unwrap();
        let mut back = RunConfig::default();
        back.apply_file(&cfg.to_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.apply_file("bogus = 1"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            cfg.apply_file("seed = 1\nseed = 2"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(cfg.apply_file("seed 1"), Err(CliError::Usage(_))));
    }

    #[test]
    fn aliases_map_to_canonical_keys() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("particles = 7\n# note\n\nhorizon = 2")
            .unwrap();
        assert_eq!((cfg.particles, cfg.horizon), (7, 2.0));
        assert!(cfg.to_string().contains("N = 7\n"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), b.hash());
    }
}
