//! Run configuration: stretch target, constant profile and overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant regime. `Faithful` uses the constants from the analysis as
/// stated; `Desk` uses small constants so every stage does visible work on
/// instances of a few thousand points. Stretch is certified in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Faithful,
    #[default]
    Desk,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Faithful => "faithful",
            Profile::Desk => "desk",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "faithful" => Ok(Profile::Faithful),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Parameter(format!(
                "unknown profile {other:?} (expected faithful or desk)"
            ))),
        }
    }
}

/// Optional constant overrides; `None` means the profile default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    /// Neighbor constant of the short layer and global certification.
    pub c: Option<f64>,
    /// Replacement constant.
    pub c1: Option<f64>,
    /// Pair spanner constant.
    pub c2: Option<f64>,
    /// Global certification slack.
    pub b: Option<f64>,
    /// Pair spanner slack.
    pub b2: Option<f64>,
    /// Dense neighborhood threshold.
    pub f: Option<f64>,
    /// Annulus level gap factor.
    pub a: Option<f64>,
    /// Bottom level of the net hierarchy.
    pub l: Option<i32>,
}

impl Overrides {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("expected key=value, got {assignment:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let real = || -> Result<f64> {
            let x: f64 = value
                .parse()
                .map_err(|e| Error::Parameter(format!("{key}: cannot parse {value:?}: {e}")))?;
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::Parameter(format!(
                    "{key} must be positive and finite, got {value}"
                )));
            }
            Ok(x)
        };
        match key {
            "c" => self.c = Some(real()?),
            "c1" => self.c1 = Some(real()?),
            "c2" => self.c2 = Some(real()?),
            "b" => self.b = Some(real()?),
            "b2" => self.b2 = Some(real()?),
            "f" => self.f = Some(real()?),
            "a" => self.a = Some(real()?),
            "L" | "l" => {
                self.l = Some(
                    value
                        .parse()
                        .map_err(|e| Error::Parameter(format!("L: cannot parse {value:?}: {e}")))?,
                )
            }
            other => return Err(Error::Parameter(format!("unknown constant {other:?}"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eps: f64,
    pub profile: Profile,
    pub overrides: Overrides,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: 0.5,
            profile: Profile::Desk,
            overrides: Overrides::default(),
            seed: 0,
            input: None,
            output: None,
            stats: None,
        }
    }
}

/// `0 < eps <= 1/2`.
pub fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps must satisfy 0 < eps <= 1/2, got {eps}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn new(eps: f64, profile: Profile) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            eps,
            profile,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if let Some(c) = self.overrides.c {
            if c < 24.0 {
                return Err(Error::Parameter(format!("c must be at least 24, got {c}")));
            }
        }
        for (name, v) in [("c1", self.overrides.c1), ("c2", self.overrides.c2)] {
            if let Some(v) = v {
                if v < 24.0 {
                    return Err(Error::Parameter(format!("{name} must be at least 24, got {v}")));
                }
            }
        }
        for (name, v) in [("b", self.overrides.b), ("b2", self.overrides.b2)] {
            if let Some(v) = v {
                if v > 1.0 {
                    return Err(Error::Parameter(format!("{name} must lie in (0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }
}
