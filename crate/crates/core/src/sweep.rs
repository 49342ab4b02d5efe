//! Vanishing-viscosity sweep: one run per `ν` on a grid refined with `ν`,
//! pairwise `L_p` distances on the coarsest grid, bound tables and
//! boundary-layer profiles.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{Grid, Side};
use crate::io::{
    write_csv, write_monitors, write_run, DISTANCES_FILE, DISTANCES_HEADER, LAYERS_FILE,
    LAYERS_HEADER, MONITORS_FILE, SWEEP_FILE, SWEEP_HEADER,
};
use crate::transport::run;

/// How the grid follows `ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridRule {
    /// `dx = min(dx_max, ν / 4)`.
    ViscousQuarter,
    /// Keep the base config's grid for every `ν`.
    Fixed,
}

impl FromStr for GridRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "nu/4" | "nu4" => Ok(GridRule::ViscousQuarter),
            "fixed" => Ok(GridRule::Fixed),
            other => Err(format!("unknown grid rule '{other}', expected nu/4 or fixed")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Scenario; `nu` and the cell counts are overridden per run.
    pub base: RunConfig,
    pub nus: Vec<f64>,
    pub grid_rule: GridRule,
    pub dx_max: f64,
    pub ps: Vec<f64>,
    /// Number of depth rows per layer profile (capped by the half-width).
    pub layer_depths: usize,
    /// Refuse grids with more cells than this.
    pub max_cells: usize,
}

/// `0.1 · 2^{-k}` for `k = 0..n`.
pub fn geometric_nus(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.1 / f64::powi(2.0, k as i32)).collect()
}

impl SweepConfig {
    pub fn new(base: RunConfig, nus: Vec<f64>) -> SweepConfig {
        let dx_max = base.grid.lx / base.grid.nx as f64;
        SweepConfig {
            base,
            nus,
            grid_rule: GridRule::ViscousQuarter,
            dx_max,
            ps: vec![1.0, 2.0, 4.0],
            layer_depths: 16,
            max_cells: 1 << 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::ConfigInvalid(m));
        if self.nus.is_empty() {
            return invalid("the nu list is empty".to_string());
        }
        if self.nus.iter().any(|n| !(*n > 0.0 && n.is_finite())) {
            return invalid("sweep viscosities must be positive".to_string());
        }
        if self.nus.windows(2).any(|w| w[1] > w[0]) {
            return invalid("sweep viscosities must be nonincreasing".to_string());
        }
        if self.ps.is_empty() || self.ps.iter().any(|p| !(*p >= 1.0)) {
            return invalid("norm exponents must be at least 1".to_string());
        }
        if !(self.dx_max > 0.0) {
            return invalid(format!("dx_max = {} must be positive", self.dx_max));
        }
        for &nu in &self.nus {
            let (nx, ny) = self.cells_for(nu);
            if nx * ny > self.max_cells {
                return invalid(format!(
                    "nu = {nu} needs a {nx}x{ny} grid, above the cap of {} cells",
                    self.max_cells
                ));
            }
        }
        self.base.validate()
    }

    /// Cell counts for one `ν`; the count per axis is rounded to the nearest
    /// integer so that halving `ν` doubles it exactly.
    pub fn cells_for(&self, nu: f64) -> (usize, usize) {
        match self.grid_rule {
            GridRule::Fixed => (self.base.grid.nx, self.base.grid.ny),
            GridRule::ViscousQuarter => {
                let dx = self.dx_max.min(nu / 4.0);
                let n = |l: f64| ((l / dx).round() as usize).max(2);
                (n(self.base.grid.lx), n(self.base.grid.ly))
            }
        }
    }

    pub fn run_config(&self, nu: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.nu = nu;
        let (nx, ny) = self.cells_for(nu);
        cfg.grid.nx = nx;
        cfg.grid.ny = ny;
        cfg
    }
}

/// Per-run scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub nu: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub steps: usize,
    pub sup_abs: f64,
    pub energy_bound: f64,
    pub final_mass: f64,
    pub min_omega: f64,
    pub max_omega: f64,
    pub worst_mass_defect: f64,
    /// `ok` or the failure message.
    pub status: String,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRow {
    pub nu: f64,
    pub face_group: String,
    pub depth: f64,
    pub depth_over_nu: f64,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub ps: Vec<f64>,
    /// `distances[i][j][k]`: max over output times of the `L_{ps[k]}`
    /// distance between runs `i` and `j`; NaN where a run failed.
    pub distances: Vec<Vec<Vec<f64>>>,
    /// `(t, mass)` at every step, per run.
    pub mass_history: Vec<Vec<(f64, f64)>>,
    pub layers: Vec<LayerRow>,
}

impl SweepReport {
    /// `D[k][k+1]` for exponent index `p`.
    pub fn consecutive(&self, p: usize) -> Vec<f64> {
        (1..self.rows.len()).map(|k| self.distances[k - 1][k][p]).collect()
    }

    /// Whether the last three consecutive distances are nonincreasing, or
    /// `None` with fewer than three pairs.
    pub fn cauchy_verdict(&self, p: usize) -> Option<bool> {
        let d = self.consecutive(p);
        if d.len() < 3 {
            return None;
        }
        let tail = &d[d.len() - 3..];
        Some(tail.iter().all(|v| v.is_finite()) && tail.windows(2).all(|w| w[1] <= w[0]))
    }

    pub fn sweep_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.nu,
                    r.nx,
                    r.ny,
                    r.dx,
                    r.steps,
                    r.sup_abs,
                    r.energy_bound,
                    r.final_mass,
                    r.min_omega,
                    r.max_omega,
                    r.worst_mass_defect,
                    r.status.replace([',', '\n'], ";")
                )
            })
            .collect()
    }

    pub fn distance_rows(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.rows.len() {
            for j in i + 1..self.rows.len() {
                for (k, p) in self.ps.iter().enumerate() {
                    out.push(format!(
                        "{},{},{},{}",
                        self.rows[i].nu, self.rows[j].nu, p, self.distances[i][j][k]
                    ));
                }
            }
        }
        out
    }

    pub fn layer_rows(&self) -> Vec<String> {
        self.layers
            .iter()
            .map(|l| format!("{},{},{},{},{}", l.nu, l.face_group, l.depth, l.depth_over_nu, l.omega))
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join(SWEEP_FILE), SWEEP_HEADER, self.sweep_rows())?;
        write_csv(&dir.join(DISTANCES_FILE), DISTANCES_HEADER, self.distance_rows())?;
        write_csv(&dir.join(LAYERS_FILE), LAYERS_HEADER, self.layer_rows())?;
        Ok(())
    }
}

/// Cell averages of a field on a grid that `fine` subdivides.
pub fn restrict_to_common_grid(fine_values: &[f64], fine: &Grid, coarse: &Grid) -> Result<Vec<f64>> {
    let (rx, ry) = coarse.refinement_ratio(fine).ok_or_else(|| {
        Error::NonNested(format!(
            "{}x{} does not subdivide into {}x{}",
            coarse.nx, coarse.ny, fine.nx, fine.ny
        ))
    })?;
    if fine_values.len() != fine.n_cells() {
        return Err(Error::FieldSize {
            expected: fine.n_cells(),
            got: fine_values.len(),
        });
    }
    let scale = 1.0 / (rx * ry) as f64;
    Ok((0..coarse.n_cells())
        .map(|c| {
            let (i, j) = coarse.cell_ij(c);
            let mut s = 0.0;
            for jj in j * ry..(j + 1) * ry {
                for ii in i * rx..(i + 1) * rx {
                    s += fine_values[fine.cell_index(ii, jj)];
                }
            }
            s * scale
        })
        .collect())
}

/// `(∫ |a - b|^p)^{1/p}` by the cell midpoint rule.
pub fn lp_distance(a: &[f64], b: &[f64], p: f64, cell_area: f64) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum();
    (s * cell_area).powf(1.0 / p)
}

/// Groups of faces for layer profiles: each side and all faces together.
pub fn face_groups(grid: &Grid) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<(String, Vec<usize>)> = Side::ALL
        .iter()
        .map(|&s| (s.name().to_string(), grid.side_faces(s).collect()))
        .collect();
    out.push(("all".to_string(), (0..grid.n_faces()).collect()));
    out
}

/// Mean of `ω` over the faces' inward cells at depths `j · d`,
/// `j = 0..=depth_count`, where `d` is the normal spacing.
/// Returns `(depth, mean ω)` rows.
pub fn layer_profile(
    grid: &Grid,
    omega: &[f64],
    faces: &[usize],
    depth_count: usize,
) -> Result<Vec<(f64, f64)>> {
    let all = grid.boundary_faces();
    let mut out = Vec::with_capacity(depth_count + 1);
    for j in 0..=depth_count {
        let mut sum = 0.0;
        let mut depth = 0.0;
        for &f in faces {
            let face = &all[f];
            depth = j as f64 * grid.normal_spacing(face.side);
            if depth > grid.half_width() {
                return Err(Error::DepthTooLarge {
                    depth,
                    half_width: grid.half_width(),
                });
            }
            let cell = grid.inward_cell(face, j).ok_or(Error::DepthTooLarge {
                depth,
                half_width: grid.half_width(),
            })?;
            sum += omega[cell];
        }
        out.push((depth, sum / faces.len().max(1) as f64));
    }
    Ok(out)
}

struct RunResult {
    row: SweepRow,
    restricted: Vec<Vec<f64>>,
    mass: Vec<(f64, f64)>,
    layers: Vec<LayerRow>,
}

/// Run every `ν` of the sweep and assemble the report. With `out` set, each
/// run's snapshots and monitors go to `out/nu_<ν>/`.
pub fn run_sweep(cfg: &SweepConfig, out: Option<&Path>) -> Result<SweepReport> {
    cfg.validate()?;
    let configs: Vec<RunConfig> = cfg.nus.iter().map(|&nu| cfg.run_config(nu)).collect();
    let coarse = configs
        .iter()
        .map(|c| c.build_grid())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by_key(|g| g.n_cells())
        .expect("nonempty sweep");
    for c in &configs {
        let g = c.build_grid()?;
        if coarse.refinement_ratio(&g).is_none() {
            return Err(Error::NonNested(format!(
                "{}x{} does not subdivide into {}x{}",
                coarse.nx, coarse.ny, g.nx, g.ny
            )));
        }
    }

    let results: Vec<RunResult> = configs
        .par_iter()
        .enumerate()
        .map(|(k, rc)| single_run(cfg, rc, &coarse, out, k))
        .collect();

    Ok(assemble(results, &cfg.ps, coarse.cell_area()))
}

fn assemble(results: Vec<RunResult>, ps: &[f64], cell_area: f64) -> SweepReport {
    let n = results.len();
    let mut distances = vec![vec![vec![0.0; ps.len()]; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            for (pk, &p) in ps.iter().enumerate() {
                let (a, b) = (&results[i], &results[j]);
                let d = if a.row.ok() && b.row.ok() && a.restricted.len() == b.restricted.len() {
                    a.restricted
                        .iter()
                        .zip(&b.restricted)
                        .map(|(x, y)| lp_distance(x, y, p, cell_area))
                        .fold(0.0, f64::max)
                } else {
                    f64::NAN
                };
                distances[i][j][pk] = d;
                distances[j][i][pk] = d;
            }
        }
        if !results[i].row.ok() {
            distances[i][i] = vec![f64::NAN; ps.len()];
        }
    }
    let mut rows = Vec::with_capacity(n);
    let mut mass_history = Vec::with_capacity(n);
    let mut layers = Vec::new();
    for r in results {
        rows.push(r.row);
        mass_history.push(r.mass);
        layers.extend(r.layers);
    }
    SweepReport {
        rows,
        ps: ps.to_vec(),
        distances,
        mass_history,
        layers,
    }
}

fn single_run(cfg: &SweepConfig, rc: &RunConfig, coarse: &Grid, out: Option<&Path>, k: usize) -> RunResult {
    let nu = rc.nu;
    let (nx, ny) = (rc.grid.nx, rc.grid.ny);
    let mut row = SweepRow {
        nu,
        nx,
        ny,
        dx: rc.grid.lx / nx as f64,
        steps: 0,
        sup_abs: f64::NAN,
        energy_bound: f64::NAN,
        final_mass: f64::NAN,
        min_omega: f64::NAN,
        max_omega: f64::NAN,
        worst_mass_defect: f64::NAN,
        status: "ok".to_string(),
    };
    let attempt = || -> Result<RunResult> {
        let output = run(rc.initial_state()?, rc.run_options())?;
        let traj = &output.trajectory;
        if let Some(dir) = out {
            let sub = dir.join(format!("nu_{k:02}_{nu}"));
            write_run(&sub, rc, traj)?;
            write_monitors(&sub.join(MONITORS_FILE), &output.monitors)?;
        }
        let restricted = traj
            .snapshots
            .iter()
            .map(|s| restrict_to_common_grid(&s.omega, &traj.grid, coarse))
            .collect::<Result<Vec<_>>>()?;
        let s = &output.summary;
        let mut row = row.clone();
        row.steps = s.steps;
        row.sup_abs = s.sup_abs;
        row.energy_bound = s.energy_bound;
        row.final_mass = s.final_mass;
        row.min_omega = s.min_omega;
        row.max_omega = s.max_omega;
        row.worst_mass_defect = s.worst_mass_defect;

        let g = &traj.grid;
        let last = traj.snapshots.last().expect("runs store the initial state");
        let mut layers = Vec::new();
        for (name, faces) in face_groups(g) {
            let d = faces
                .iter()
                .map(|&f| g.normal_spacing(g.boundary_faces()[f].side))
                .fold(0.0, f64::max);
            let depth_count = cfg.layer_depths.min((g.half_width() / d).floor() as usize);
            for (depth, omega) in layer_profile(g, &last.omega, &faces, depth_count)? {
                layers.push(LayerRow {
                    nu,
                    face_group: name.clone(),
                    depth,
                    depth_over_nu: depth / nu,
                    omega,
                });
            }
        }
        let mass = std::iter::once((0.0, traj.snapshots[0].omega.iter().sum::<f64>() * g.cell_area()))
            .chain(output.monitors.iter().map(|m| (m.t, m.report.mass_after)))
            .collect();
        Ok(RunResult {
            row,
            restricted,
            mass,
            layers,
        })
    };
    attempt().unwrap_or_else(|e| {
        row.status = e.to_string();
        RunResult {
            row,
            restricted: Vec::new(),
            mass: Vec::new(),
            layers: Vec::new(),
        }
    })
}
