use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Slack on the unit-sum check and on clamping of tiny negative masses.
    pub tol_norm: f64,
    /// A verdict holds iff its margin is at least `-tol_ineq`.
    pub tol_ineq: f64,
    /// Relative convergence threshold of the root finders.
    pub tol_root: f64,
    /// Upper bound on the Poisson mass discarded by truncation.
    pub tail_eps: f64,
    /// Step for finite-difference checks.
    pub fd_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            tol_norm: 1e-10,
            tol_ineq: 1e-9,
            tol_root: 1e-12,
            tail_eps: 1e-14,
            fd_step: 1e-5,
        }
    }
}

/// Named tolerance presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    Default,
    Strict,
    Loose,
}

impl std::str::FromStr for ToleranceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Ok(ToleranceProfile::Default),
            "strict" => Ok(ToleranceProfile::Strict),
            "loose" => Ok(ToleranceProfile::Loose),
            other => Err(Error::Parameter(format!("unknown tolerance profile `{other}`"))),
        }
    }
}

impl ToleranceConfig {
    pub fn profile(profile: ToleranceProfile) -> Self {
        let base = ToleranceConfig::default();
        match profile {
            ToleranceProfile::Default => base,
            ToleranceProfile::Strict => ToleranceConfig {
                tol_norm: 1e-12,
                tol_ineq: 1e-12,
                tol_root: 1e-14,
                tail_eps: 1e-16,
                ..base
            },
            ToleranceProfile::Loose => ToleranceConfig {
                tol_norm: 1e-8,
                tol_ineq: 1e-6,
                tol_root: 1e-10,
                tail_eps: 1e-12,
                ..base
            },
        }
    }

    /// Checks that every tolerance is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tol_norm", self.tol_norm),
            ("tol_ineq", self.tol_ineq),
            ("tol_root", self.tol_root),
            ("tail_eps", self.tail_eps),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let cfg = ToleranceConfig::default();
        cfg.validate().unwrap();
        assert!(cfg.tail_eps <= 1e-12);
    }

    #[test]
    fn rejects_non_positive() {
        let cfg = ToleranceConfig { tol_root: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn profiles_parse() {
        for name in ["default", "Strict", "LOOSE"] {
            let p: ToleranceProfile = name.parse().unwrap();
            ToleranceConfig::profile(p).validate().unwrap();
        }
        assert!("bogus".parse::<ToleranceProfile>().is_err());
    }
}
