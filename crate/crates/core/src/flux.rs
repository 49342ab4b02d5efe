//! Flux nonlinearities and Kruzkov entropy pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The two physical nonlinearities `g`.
///
/// * `MeanField`: `g(s) = |s|` (vortex density in a type-II superconductor).
/// * `KellerSegel`: `g(s) = s (1 - s)` on `[0, 1]`, zero outside (cell density).
///
/// Both have `|g'| <= 1`, so the Lipschitz constant `K` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxModel {
    MeanField,
    KellerSegel,
}

impl FluxModel {
    #[inline]
    pub fn lipschitz(self) -> f64 {
        1.0
    }

    #[inline]
    pub fn g(self, s: f64) -> f64 {
        match self {
            FluxModel::MeanField => s.abs(),
            FluxModel::KellerSegel => {
                if (0.0..=1.0).contains(&s) {
                    s * (1.0 - s)
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative of `g`, with `g'(0) = 0` for the mean-field kink and
    /// `g' = 0` outside `(0, 1)` for Keller-Segel.
    #[inline]
    pub fn g_prime(self, s: f64) -> f64 {
        match self {
            FluxModel::MeanField => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            FluxModel::KellerSegel => {
                if s > 0.0 && s < 1.0 {
                    1.0 - 2.0 * s
                } else {
                    0.0
                }
            }
        }
    }

    pub fn entropy_pair(self, xi: f64, kind: EntropyKind) -> EntropyPair {
        EntropyPair {
            model: self,
            xi,
            kind,
        }
    }

    /// Entropy flux of `eta(s) = s^2`, normalised so that `q(0) = 0`.
    pub fn quadratic_entropy_flux(self, s: f64) -> f64 {
        match self {
            FluxModel::MeanField => s * s.abs(),
            FluxModel::KellerSegel => {
                let c = s.clamp(0.0, 1.0);
                c * c - 4.0 / 3.0 * c * c * c
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FluxModel::MeanField => "meanfield",
            FluxModel::KellerSegel => "kellersegel",
        }
    }
}

impl fmt::Display for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FluxModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "meanfield" => Ok(FluxModel::MeanField),
            "kellersegel" => Ok(FluxModel::KellerSegel),
            other => Err(format!(
                "unknown model `{other}` (expected meanfield or kellersegel)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntropyKind {
    /// `|s - xi|`
    Full,
    /// `|s - xi|_+ = max(s - xi, 0)`
    PlusPart,
    /// `|s - xi|_- = max(xi - s, 0)`
    MinusPart,
}

/// Kruzkov entropy `eta` at level `xi` together with its flux `q`,
/// `q' = eta' g'`, `q(xi) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    pub model: FluxModel,
    pub xi: f64,
    pub kind: EntropyKind,
}

impl EntropyPair {
    #[inline]
    pub fn eta(&self, s: f64) -> f64 {
        let d = s - self.xi;
        match self.kind {
            EntropyKind::Full => d.abs(),
            EntropyKind::PlusPart => d.max(0.0),
            EntropyKind::MinusPart => (-d).max(0.0),
        }
    }

    #[inline]
    pub fn q(&self, s: f64) -> f64 {
        let dg = self.model.g(s) - self.model.g(self.xi);
        match self.kind {
            EntropyKind::Full => sign(s - self.xi) * dg,
            EntropyKind::PlusPart => {
                if s > self.xi {
                    dg
                } else {
                    0.0
                }
            }
            EntropyKind::MinusPart => {
                if s < self.xi {
                    -dg
                } else {
                    0.0
                }
            }
        }
    }
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}
