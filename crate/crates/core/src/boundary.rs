//! Boundary data: the Dirichlet trace `a` for `h`, the nucleation law `b`,
//! the Robin coefficient `M(v)` and inflow detection.

use serde::{Deserialize, Serialize};

use crate::elliptic::VectorField;
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::geometry::{BoundaryFace, Grid, Side};

/// A boundary function given by a preset rather than an expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(2π s / wavelength + phase)` in arc length `s`.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        wavelength: f64,
        #[serde(default)]
        phase: f64,
    },
    PerSide {
        bottom: f64,
        right: f64,
        top: f64,
        left: f64,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Profile {
        Profile::Constant { value }
    }

    /// Presets are time independent; `t` is kept so callers do not depend on that.
    pub fn eval(&self, _t: f64, face: &BoundaryFace) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Sinusoidal {
                mean,
                amplitude,
                wavelength,
                phase,
            } => {
                mean + amplitude
                    * (2.0 * std::f64::consts::PI * face.arc_length / wavelength + phase).sin()
            }
            Profile::PerSide {
                bottom,
                right,
                top,
                left,
            } => match face.side {
                Side::Bottom => bottom,
                Side::Right => right,
                Side::Top => top,
                Side::Left => left,
            },
        }
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        grid.boundary_faces().iter().map(|f| self.eval(t, f)).collect()
    }

    /// Bounds of the profile over all possible boundary points.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Profile::Constant { value } => (value, value),
            Profile::Sinusoidal {
                mean, amplitude, ..
            } => (mean - amplitude.abs(), mean + amplitude.abs()),
            Profile::PerSide {
                bottom,
                right,
                top,
                left,
            } => {
                let v = [bottom, right, top, left];
                (
                    v.iter().copied().fold(f64::INFINITY, f64::min),
                    v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            }
        }
    }

    fn check_finite(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Sinusoidal {
                mean,
                amplitude,
                wavelength,
                phase,
            } => {
                mean.is_finite()
                    && amplitude.is_finite()
                    && phase.is_finite()
                    && wavelength.is_finite()
                    && wavelength > 0.0
            }
            Profile::PerSide {
                bottom,
                right,
                top,
                left,
            } => [bottom, right, top, left].iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "{name}: values must be finite and wavelength positive"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub a: Profile,
    pub b0: Profile,
    pub b1: f64,
    pub kappa: f64,
    #[serde(rename = "J")]
    pub j: Profile,
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData {
            a: Profile::constant(0.0),
            b0: Profile::constant(0.0),
            b1: 0.0,
            kappa: 0.5,
            j: Profile::constant(1.0),
        }
    }
}

impl BoundaryData {
    pub fn validate(&self, model: FluxModel) -> Result<()> {
        self.a.check_finite("a")?;
        self.b0.check_finite("b0")?;
        self.j.check_finite("J")?;
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "kappa = {} must lie strictly in (0, 1); the existence theory fails at kappa = 1",
                self.kappa
            )));
        }
        if !(self.b1 >= 0.0 && self.b1.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "b1 = {} must be finite and nonnegative",
                self.b1
            )));
        }
        let (b0_lo, b0_hi) = self.b0.range();
        if b0_lo < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "b0 must be nonnegative, preset reaches {b0_lo}"
            )));
        }
        if self.j.range().0 <= 0.0 {
            return Err(Error::ConfigInvalid(
                "J must be strictly positive".to_string(),
            ));
        }
        if model == FluxModel::KellerSegel && (self.b1 != 0.0 || b0_hi > 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "Keller-Segel requires b1 = 0 and 0 <= b0 <= 1 (maximum principle data condition), got b1 = {}, max b0 = {b0_hi}",
                self.b1
            )));
        }
        Ok(())
    }

    pub fn a_values(&self, grid: &Grid, t: f64) -> Vec<f64> {
        self.a.sample(grid, t)
    }

    /// `b` on every boundary face given the normal derivatives `z`.
    pub fn b_values(&self, grid: &Grid, t: f64, z: &[f64]) -> Vec<f64> {
        grid.boundary_faces()
            .iter()
            .zip(z)
            .map(|(f, &zf)| nucleation_b(self, t, f, zf))
            .collect()
    }
}

/// `b = b0 + b1 * max(|z| - J, 0)^kappa`.
pub fn nucleation_b(data: &BoundaryData, t: f64, face: &BoundaryFace, z: f64) -> f64 {
    let b0 = data.b0.eval(t, face);
    if data.b1 == 0.0 {
        return b0;
    }
    let excess = (z.abs() - data.j.eval(t, face)).max(0.0);
    b0 + data.b1 * excess.powf(data.kappa)
}

/// `M = K ||v||_∞`, with the vector max-norm taken per cell.
pub fn robin_coefficient(model: FluxModel, v: &VectorField) -> f64 {
    model.lipschitz() * v.max_norm()
}

pub fn inflow_indicator(model: FluxModel, omega_face: f64, v_dot_n: f64) -> bool {
    model.g_prime(omega_face) * v_dot_n < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn face() -> BoundaryFace {
        *Grid::new(4, 4, 1.0, 1.0).unwrap().boundary_faces().first().unwrap()
    }

    fn nucleating() -> BoundaryData {
        BoundaryData {
            a: Profile::constant(2.0),
            b0: Profile::constant(0.1),
            b1: 0.5,
            kappa: 0.5,
            j: Profile::constant(1.0),
        }
    }

    #[test]
    fn nucleation_examples() {
        let d = nucleating();
        assert!((nucleation_b(&d, 0.0, &face(), 5.0) - 1.1).abs() < 1e-15);
        assert_eq!(nucleation_b(&d, 0.0, &face(), -0.7), 0.1);
        let d0 = BoundaryData { b1: 0.0, ..d };
        assert_eq!(nucleation_b(&d0, 0.0, &face(), 50.0), 0.1);
    }

    #[test]
    fn nucleation_is_continuous_in_z() {
        let d = nucleating();
        let f = face();
        let mut prev = nucleation_b(&d, 0.0, &f, -4.0);
        let n = 80_000;
        for k in 1..=n {
            let z = -4.0 + 8.0 * k as f64 / n as f64;
            let b = nucleation_b(&d, 0.0, &f, z);
            // Hölder continuity with exponent kappa: jumps shrink like step^kappa.
            assert!((b - prev).abs() <= d.b1 * (8.0 / n as f64).powf(d.kappa) + 1e-12);
            assert!(b >= 0.0);
            prev = b;
        }
    }

    #[test]
    fn robin_coefficient_examples() {
        let g = Arc::new(Grid::new(3, 3, 1.0, 1.0).unwrap());
        let mut v = VectorField::zeros(g);
        assert_eq!(robin_coefficient(FluxModel::MeanField, &v), 0.0);
        v.values[4] = [1.0, -3.0];
        v.values[2] = [2.0, 0.5];
        assert_eq!(robin_coefficient(FluxModel::MeanField, &v), 3.0);
        for w in &mut v.values {
            w[0] *= 2.0;
            w[1] *= 2.0;
        }
        assert_eq!(robin_coefficient(FluxModel::KellerSegel, &v), 6.0);
    }

    #[test]
    fn inflow_examples() {
        assert!(inflow_indicator(FluxModel::MeanField, 1.0, -0.2));
        assert!(!inflow_indicator(FluxModel::MeanField, 1.0, 0.2));
        for vn in [-3.0, 0.0, 3.0] {
            assert!(!inflow_indicator(FluxModel::KellerSegel, 0.5, vn));
        }
    }

    #[test]
    fn profiles_evaluate() {
        let g = Grid::new(4, 2, 2.0, 1.0).unwrap();
        let p = Profile::PerSide {
            bottom: 1.0,
            right: 2.0,
            top: 3.0,
            left: 4.0,
        };
        let vals = p.sample(&g, 0.0);
        for (f, v) in g.boundary_faces().iter().zip(&vals) {
            let expect = match f.side {
                Side::Bottom => 1.0,
                Side::Right => 2.0,
                Side::Top => 3.0,
                Side::Left => 4.0,
            };
            assert_eq!(*v, expect);
        }
        let s = Profile::Sinusoidal {
            mean: 1.0,
            amplitude: 0.5,
            wavelength: g.perimeter(),
            phase: 0.0,
        };
        let (lo, hi) = s.range();
        assert!(s.sample(&g, 0.0).iter().all(|v| (lo..=hi).contains(v)));
    }

    #[test]
    fn validation_rules() {
        let ok = nucleating();
        assert!(ok.validate(FluxModel::MeanField).is_ok());
        assert!(ok.validate(FluxModel::KellerSegel).is_err());
        let bad_kappa = BoundaryData { kappa: 1.0, ..nucleating() };
        assert!(bad_kappa.validate(FluxModel::MeanField).is_err());
        let neg_b0 = BoundaryData {
            b0: Profile::Sinusoidal {
                mean: 0.1,
                amplitude: 0.2,
                wavelength: 1.0,
                phase: 0.0,
            },
            ..nucleating()
        };
        assert!(neg_b0.validate(FluxModel::MeanField).is_err());
        let ks = BoundaryData {
            b0: Profile::constant(0.3),
            b1: 0.0,
            ..nucleating()
        };
        assert!(ks.validate(FluxModel::KellerSegel).is_ok());
        let ks_high = BoundaryData {
            b0: Profile::constant(1.2),
            ..ks
        };
        assert!(ks_high.validate(FluxModel::KellerSegel).is_err());
    }

    #[test]
    fn keller_segel_b_stays_in_unit_interval() {
        let d = BoundaryData {
            b0: Profile::Sinusoidal {
                mean: 0.5,
                amplitude: 0.5,
                wavelength: 0.7,
                phase: 0.3,
            },
            b1: 0.0,
            ..nucleating()
        };
        d.validate(FluxModel::KellerSegel).unwrap();
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        for f in g.boundary_faces() {
            for z in [-100.0, -1.0, 0.0, 3.0, 1e6] {
                let b = nucleation_b(&d, 0.0, f, z);
                assert!((0.0..=1.0).contains(&b));
            }
        }
    }
}
