//! Ensemble selection shared by the moment, simulation and statistics layers.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gaussian,
    Laguerre,
}

impl EnsembleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Laguerre => "laguerre",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "hermite" => Ok(EnsembleKind::Gaussian),
            "laguerre" => Ok(EnsembleKind::Laguerre),
            other => Err(Error::invalid(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

/// A validated ensemble: the Gaussian family is indexed by `c`, the Laguerre
/// family by `(α, c)` with `α > 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Ensemble {
    Gaussian { c: f64 },
    Laguerre { alpha: f64, c: f64 },
}

impl Ensemble {
    pub fn gaussian(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Ensemble::Gaussian { c })
    }

    pub fn laguerre(alpha: f64, c: f64) -> Result<Self> {
        check_c(c)?;
        check_alpha(alpha)?;
        Ok(Ensemble::Laguerre { alpha, c })
    }

    /// Builds an ensemble from a kind tag; `alpha` is ignored for Gaussian.
    pub fn new(kind: EnsembleKind, c: f64, alpha: f64) -> Result<Self> {
        match kind {
            EnsembleKind::Gaussian => Self::gaussian(c),
            EnsembleKind::Laguerre => Self::laguerre(alpha, c),
        }
    }

    pub fn kind(&self) -> EnsembleKind {
        match self {
            Ensemble::Gaussian { .. } => EnsembleKind::Gaussian,
            Ensemble::Laguerre { .. } => EnsembleKind::Laguerre,
        }
    }

    pub fn c(&self) -> f64 {
        match *self {
            Ensemble::Gaussian { c } | Ensemble::Laguerre { c, .. } => c,
        }
    }

    /// `α` for the Laguerre family, `None` for Gaussian.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Ensemble::Gaussian { .. } => None,
            Ensemble::Laguerre { alpha, .. } => Some(alpha),
        }
    }
}

pub(crate) fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "c must be a finite nonnegative number, got {c}"
        )))
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "alpha must exceed 1/2, got {alpha}"
        )))
    }
}
