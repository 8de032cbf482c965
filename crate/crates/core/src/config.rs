//! Central tolerance record.
//!
//! Every numerical threshold used by the verifiers lives here. A TOML file
//! named by the `DLAB_TOLERANCES` environment variable may override any
//! subset of the fields.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const TOLERANCE_ENV: &str = "DLAB_TOLERANCES";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for identities (total-mass, symmetry).
    pub equality_rel: f64,
    /// Relative slack granted to inequality certificates.
    pub inequality_rel: f64,
    /// Absolute floor added to inequality certificates.
    pub inequality_abs: f64,
    /// Relative tolerance for generator/energy consistency.
    pub generator_rel: f64,
    /// Eigenvalues below `kernel * max(1, lambda_max)` count as zero.
    pub kernel: f64,
    /// Absolute tolerance (before scaling) for pointwise harmonicity tests.
    pub harmonic: f64,
    /// Relative residual target of the linear solver.
    pub solver_residual: f64,
    /// Half-width of the inconclusive band around the critical exponent 2.
    pub exponent_band: f64,
    /// Largest exponent excess over 2 still read as a logarithmic divergence.
    pub log_slack: f64,
    /// Maximal relative RMS residual of an accepted growth fit.
    pub fit_residual: f64,
    /// Relative increase over the final tenth of levels below which a
    /// resistance curve is declared bounded.
    pub bounded_increase: f64,
    /// Largest state space handled by dense spectral factorization.
    pub dense_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality_rel: 1e-12,
            inequality_rel: 1e-9,
            inequality_abs: 1e-12,
            generator_rel: 1e-10,
            kernel: 1e-10,
            harmonic: 1e-10,
            solver_residual: 1e-12,
            exponent_band: 0.1,
            log_slack: 0.01,
            fit_residual: 0.05,
            bounded_increase: 0.01,
            dense_limit: 2000,
        }
    }
}

impl Tolerances {
    /// Defaults, overridden by the file named in `DLAB_TOLERANCES` if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(TOLERANCE_ENV) {
            Some(path) => {
                let text = std::fs::read_to_string(&path)?;
                Self::from_toml(&text)
            }
            None => Ok(Self::default()),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Certificate acceptance rule: `lhs <= rhs * (1 + rel) + abs`.
    pub fn leq(&self, lhs: f64, rhs: f64) -> bool {
        lhs <= rhs * (1.0 + self.inequality_rel) + self.inequality_abs
    }

    /// Relative closeness used for identities.
    pub fn close(&self, a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override() {
        let t = Tolerances::from_toml("inequality_rel = 1e-6\n").unwrap();
        assert_eq!(t.inequality_rel, 1e-6);
        assert_eq!(t.equality_rel, 1e-12);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(Tolerances::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn leq_rule() {
        let t = Tolerances::default();
        assert!(t.leq(1.0, 1.0));
        assert!(t.leq(1.0 + 5e-10, 1.0));
        assert!(!t.leq(1.0 + 1e-8, 1.0));
        assert!(t.leq(5e-13, 0.0));
    }
}
