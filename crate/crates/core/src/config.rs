//! Run configuration: a TOML document with top-level scalars and one table
//! per boundary function, grid, initial condition and output toggles.
//!
//! ```toml
//! model = "meanfield"
//! nu = 0.01
//! t_final = 0.5
//! b1 = 0.5
//! kappa = 0.5
//!
//! [grid]
//! nx = 64
//! ny = 64
//!
//! [initial]
//! preset = "constant"
//! value = 0.0
//!
//! [a]
//! preset = "constant"
//! value = 2.0
//! ```

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryData, Profile};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::geometry::Grid;
use crate::transport::{RunOptions, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: 32,
            ny: 32,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        value: f64,
    },
    /// `base + amplitude * cos²(π r / 2 radius)` inside `r < radius`.
    Bump {
        base: f64,
        amplitude: f64,
        x: f64,
        y: f64,
        radius: f64,
    },
    TwoBump {
        base: f64,
        amplitude: f64,
        radius: f64,
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
    },
    /// Independent uniform samples in `[low, high]`, clipped to `[0, 1]`
    /// when `clip` is set. Uses the run seed.
    Random {
        low: f64,
        high: f64,
        #[serde(default)]
        clip: bool,
    },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Constant { value: 0.0 }
    }
}

fn cos2_bump(r: f64, radius: f64) -> f64 {
    if r >= radius {
        0.0
    } else {
        (std::f64::consts::FRAC_PI_2 * r / radius).cos().powi(2)
    }
}

impl InitialCondition {
    pub fn sample(&self, grid: &Grid, seed: u64) -> Vec<f64> {
        let centers = (0..grid.n_cells()).map(|c| grid.cell_center(c));
        match *self {
            InitialCondition::Constant { value } => vec![value; grid.n_cells()],
            InitialCondition::Bump {
                base,
                amplitude,
                x,
                y,
                radius,
            } => centers
                .map(|[cx, cy]| base + amplitude * cos2_bump((cx - x).hypot(cy - y), radius))
                .collect(),
            InitialCondition::TwoBump {
                base,
                amplitude,
                radius,
                x1,
                y1,
                x2,
                y2,
            } => centers
                .map(|[cx, cy]| {
                    base + amplitude
                        * (cos2_bump((cx - x1).hypot(cy - y1), radius)
                            + cos2_bump((cx - x2).hypot(cy - y2), radius))
                })
                .collect(),
            InitialCondition::Random { low, high, clip } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..grid.n_cells())
                    .map(|_| {
                        let s = low + (high - low) * rng.gen::<f64>();
                        if clip {
                            s.clamp(0.0, 1.0)
                        } else {
                            s
                        }
                    })
                    .collect()
            }
        }
    }

    /// Bounds on the sampled values.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            InitialCondition::Constant { value } => (value, value),
            InitialCondition::Bump {
                base, amplitude, ..
            } => (base.min(base + amplitude), base.max(base + amplitude)),
            InitialCondition::TwoBump {
                base, amplitude, ..
            } => (base.min(base + 2.0 * amplitude), base.max(base + 2.0 * amplitude)),
            InitialCondition::Random { low, high, clip } => {
                if clip {
                    (low.clamp(0.0, 1.0), high.clamp(0.0, 1.0))
                } else {
                    (low, high)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputToggles {
    #[serde(default)]
    pub store_gradients: bool,
    #[serde(default)]
    pub kinetic: bool,
    #[serde(default)]
    pub audit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: FluxModel,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "one")]
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Defaults to `t_final / 32`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub b1: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default = "zero_profile")]
    pub a: Profile,
    #[serde(default = "zero_profile")]
    pub b0: Profile,
    #[serde(rename = "J", default = "unit_profile")]
    pub j: Profile,
    #[serde(default)]
    pub output: OutputToggles,
}

fn one() -> f64 {
    1.0
}
fn default_nu() -> f64 {
    0.01
}
fn default_cfl() -> f64 {
    0.25
}
fn default_kappa() -> f64 {
    0.5
}
fn zero_profile() -> Profile {
    Profile::constant(0.0)
}
fn unit_profile() -> Profile {
    Profile::constant(1.0)
}

impl RunConfig {
    pub fn boundary(&self) -> BoundaryData {
        BoundaryData {
            a: self.a.clone(),
            b0: self.b0.clone(),
            b1: self.b1,
            kappa: self.kappa,
            j: self.j.clone(),
        }
    }

    pub fn output_interval(&self) -> f64 {
        self.output_interval.unwrap_or(self.t_final / 32.0)
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(
            self.grid.nx,
            self.grid.ny,
            self.grid.lx,
            self.grid.ly,
        )?))
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::ConfigInvalid(msg));
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return invalid(format!("nu = {} must be finite and nonnegative", self.nu));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return invalid(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return invalid(format!("t_final = {} must be finite and nonnegative", self.t_final));
        }
        let dt_out = self.output_interval();
        if !(dt_out > 0.0 && dt_out.is_finite()) {
            return invalid(format!("output_interval = {dt_out} must be positive"));
        }
        self.build_grid()?;
        self.boundary().validate(self.model)?;
        if let InitialCondition::Random { low, high, .. } = self.initial {
            if !(low <= high) {
                return invalid(format!("initial: low = {low} exceeds high = {high}"));
            }
        }
        if let InitialCondition::Bump { radius, .. } | InitialCondition::TwoBump { radius, .. } =
            self.initial
        {
            if !(radius > 0.0) {
                return invalid("initial: radius must be positive".to_string());
            }
        }
        if self.model == FluxModel::KellerSegel {
            let (lo, hi) = self.initial.range();
            if lo < 0.0 || hi > 1.0 {
                return invalid(format!(
                    "Keller-Segel requires initial data in [0, 1], preset spans [{lo}, {hi}]"
                ));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            t_final: self.t_final,
            cfl: self.cfl,
            output_interval: self.output_interval(),
            store_gradients: self.output.store_gradients,
        }
    }

    pub fn initial_state(&self) -> Result<State> {
        let grid = self.build_grid()?;
        let omega0 = self.initial.sample(&grid, self.seed);
        State::new(grid, self.model, self.nu, self.boundary(), omega0)
    }
}

/// Scenario files shipped with the crate, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("steady", include_str!("../configs/steady.cfg")),
    ("maxprinciple", include_str!("../configs/maxprinciple.cfg")),
    ("nucleation", include_str!("../configs/nucleation.cfg")),
    ("bump", include_str!("../configs/bump.cfg")),
];

pub fn preset(name: &str) -> Result<RunConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::ConfigInvalid(format!("unknown preset '{name}'")))?;
    load_config(text)
}

pub fn load_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text).map_err(|e| match e {
        Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
