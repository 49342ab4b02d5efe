//! Explicit finite-volume time stepping of
//! `ω_t + div(g(ω) v) = ν Δω` with the Robin law
//! `ν ∂ω/∂n + M(v)(ω - b) = 0`, coupled to a fresh screened Poisson solve.
//!
//! Interior faces use the local Lax-Friedrichs flux with `α = K |v·n|` and
//! the two-point diffusive flux. On a boundary face the advective flux is
//! upwinded against the nucleation value `b` where the face is inflow and
//! against the owner cell otherwise; the diffusive flux is the Robin value.

use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary::{inflow_indicator, robin_coefficient, BoundaryData};
use crate::elliptic::{
    normal_derivative, velocity, ScalarField, ScreenedPoisson, SolverOptions, VectorField,
};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::geometry::{Grid, Side};
use crate::trajectory::{Snapshot, Trajectory};

/// Runs abort once `|ω|` exceeds this.
pub const BLOW_UP: f64 = 1e6;

/// Guard against division by zero in [`stable_dt`].
const EPS0: f64 = 1e-30;

/// Local Lax-Friedrichs flux across a face with normal velocity `v_n`
/// pointing from the `L` state to the `R` state.
#[inline]
pub fn numerical_face_flux(model: FluxModel, omega_l: f64, omega_r: f64, v_n: f64) -> f64 {
    let alpha = model.lipschitz() * v_n.abs();
    0.5 * (model.g(omega_l) + model.g(omega_r)) * v_n - 0.5 * alpha * (omega_r - omega_l)
}

/// `ν ∂ω/∂n` at a boundary face from the Robin law, i.e. `-M (ω - b)`.
/// The outward diffusive flux is the negative of this value.
#[inline]
pub fn robin_diffusive_flux(omega_face_cell: f64, b_val: f64, m: f64) -> f64 {
    -m * (omega_face_cell - b_val)
}

pub fn stable_dt(grid: &Grid, model: FluxModel, v: &VectorField, nu: f64, m: f64, cfl: f64) -> f64 {
    let dx = grid.min_spacing();
    let adv = dx / (2.0 * model.lipschitz() * v.max_norm() + EPS0);
    let diff = dx * dx / (4.0 * nu + EPS0);
    let robin = dx / (2.0 * m + EPS0);
    cfl * adv.min(diff).min(robin)
}

/// Boundary treatment for [`advance`].
#[derive(Debug, Clone, Copy)]
pub enum Closure<'a> {
    /// Physical boundary with nucleation values per face and Robin coefficient.
    Robin { b: &'a [f64], m: f64 },
    /// Doubly periodic box; used for oracle comparisons.
    Periodic,
}

/// Signed totals of one conservative update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FluxTally {
    /// `Σ (outward advective flux) * face length` over boundary faces.
    pub advective_out: f64,
    /// `Σ (outward diffusive flux) * face length` over boundary faces.
    pub diffusive_out: f64,
}

/// One explicit conservative update of `omega` with a frozen cell velocity.
pub fn advance(
    model: FluxModel,
    grid: &Grid,
    omega: &[f64],
    v: &[[f64; 2]],
    nu: f64,
    closure: Closure<'_>,
    dt: f64,
) -> (Vec<f64>, FluxTally) {
    let (nx, ny, dx, dy) = (grid.nx, grid.ny, grid.dx, grid.dy);
    let periodic = matches!(closure, Closure::Periodic);
    let x_faces_per_row = if periodic { nx } else { nx - 1 };
    let y_face_rows = if periodic { ny } else { ny - 1 };

    // fx[j * x_faces_per_row + i]: flux in +x between cell i and i + 1 of row j.
    let mut fx = vec![0.0; x_faces_per_row * ny];
    fx.par_chunks_mut(x_faces_per_row)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, f) in row.iter_mut().enumerate() {
                let l = j * nx + i;
                let r = j * nx + (i + 1) % nx;
                let vn = 0.5 * (v[l][0] + v[r][0]);
                *f = numerical_face_flux(model, omega[l], omega[r], vn)
                    - nu * (omega[r] - omega[l]) / dx;
            }
        });
    // fy[j * nx + i]: flux in +y between row j and j + 1 of column i.
    let mut fy = vec![0.0; nx * y_face_rows];
    fy.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, f) in row.iter_mut().enumerate() {
            let l = j * nx + i;
            let r = ((j + 1) % ny) * nx + i;
            let vn = 0.5 * (v[l][1] + v[r][1]);
            *f = numerical_face_flux(model, omega[l], omega[r], vn)
                - nu * (omega[r] - omega[l]) / dy;
        }
    });

    let mut tally = FluxTally::default();
    // Outward total flux per boundary face.
    let mut fb = vec![0.0; if periodic { 0 } else { grid.n_faces() }];
    if let Closure::Robin { b, m } = closure {
        for (k, face) in grid.boundary_faces().iter().enumerate() {
            let w = omega[face.cell];
            let vn = v[face.cell][0] * face.normal[0] + v[face.cell][1] * face.normal[1];
            let ext = if inflow_indicator(model, w, vn) { b[k] } else { w };
            let adv = numerical_face_flux(model, w, ext, vn);
            let diff = if nu > 0.0 {
                -robin_diffusive_flux(w, b[k], m)
            } else {
                0.0
            };
            fb[k] = adv + diff;
            tally.advective_out += adv * face.area;
            tally.diffusive_out += diff * face.area;
        }
    }

    let mut out = vec![0.0; grid.n_cells()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let c = j * nx + i;
            let (west, east, south, north) = if periodic {
                let iw = (i + nx - 1) % nx;
                let js = (j + ny - 1) % ny;
                (
                    fx[j * nx + iw],
                    fx[j * nx + i],
                    fy[js * nx + i],
                    fy[j * nx + i],
                )
            } else {
                let west = if i == 0 {
                    -fb[grid.face_index(Side::Left, j)]
                } else {
                    fx[j * x_faces_per_row + i - 1]
                };
                let east = if i == nx - 1 {
                    fb[grid.face_index(Side::Right, j)]
                } else {
                    fx[j * x_faces_per_row + i]
                };
                let south = if j == 0 {
                    -fb[grid.face_index(Side::Bottom, i)]
                } else {
                    fy[(j - 1) * nx + i]
                };
                let north = if j == ny - 1 {
                    fb[grid.face_index(Side::Top, i)]
                } else {
                    fy[j * nx + i]
                };
                (west, east, south, north)
            };
            *o = omega[c] - dt * ((east - west) / dx + (north - south) / dy);
        }
    });
    (out, tally)
}

/// Cell gradient of `omega`: central differences inside, one-sided next to
/// the boundary.
pub fn cell_gradient(grid: &Grid, omega: &[f64]) -> Vec<[f64; 2]> {
    let (nx, ny, dx, dy) = (grid.nx, grid.ny, grid.dx, grid.dy);
    (0..grid.n_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c % nx, c / nx);
            let gx = if i == 0 {
                (omega[c + 1] - omega[c]) / dx
            } else if i == nx - 1 {
                (omega[c] - omega[c - 1]) / dx
            } else {
                (omega[c + 1] - omega[c - 1]) / (2.0 * dx)
            };
            let gy = if j == 0 {
                (omega[c + nx] - omega[c]) / dy
            } else if j == ny - 1 {
                (omega[c] - omega[c - nx]) / dy
            } else {
                (omega[c + nx] - omega[c - nx]) / (2.0 * dy)
            };
            [gx, gy]
        })
        .collect()
}

/// `∫|∇ω|²` from the interior face differences.
pub fn gradient_energy(grid: &Grid, omega: &[f64]) -> f64 {
    let (nx, ny, dx, dy) = (grid.nx, grid.ny, grid.dx, grid.dy);
    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut s = 0.0;
            for i in 0..nx {
                let c = j * nx + i;
                if i + 1 < nx {
                    s += ((omega[c + 1] - omega[c]) / dx).powi(2);
                }
                if j + 1 < ny {
                    s += ((omega[c + nx] - omega[c]) / dy).powi(2);
                }
            }
            s
        })
        .collect();
    rows.iter().sum::<f64>() * dx * dy
}

/// Right side of the `ω²` energy balance
/// `d/dt ∫ω² + 2ν∫|∇ω|² = -∮Q(ω) v·n - ∫(2ωg - Q)(ω - h) - 2M∮ω(ω - b)`.
#[allow(clippy::too_many_arguments)]
pub fn energy_rhs(
    model: FluxModel,
    grid: &Grid,
    omega: &[f64],
    h: &[f64],
    v: &[[f64; 2]],
    nu: f64,
    b: &[f64],
    m: f64,
) -> f64 {
    let mut boundary = 0.0;
    for (k, face) in grid.boundary_faces().iter().enumerate() {
        let wc = omega[face.cell];
        let vc = v[face.cell];
        let vn = vc[0] * face.normal[0] + vc[1] * face.normal[1];
        boundary -= model.quadratic_entropy_flux(wc) * vn * face.area;
        if nu > 0.0 {
            boundary -= 2.0 * m * wc * (wc - b[k]) * face.area;
        }
    }
    let coupling: f64 = omega
        .iter()
        .zip(h)
        .map(|(&wc, &hc)| -(2.0 * wc * model.g(wc) - model.quadratic_entropy_flux(wc)) * (wc - hc))
        .sum::<f64>()
        * grid.cell_area();
    boundary + coupling
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    /// Total outward advective boundary flux (per unit time).
    pub boundary_advective_flux: f64,
    /// Total outward Robin flux (per unit time).
    pub boundary_diffusive_flux: f64,
    pub max_omega: f64,
    pub min_omega: f64,
    pub robin_m: f64,
    pub solver_iterations: usize,
    /// `∫|∇ω|²` at the start of the step.
    pub grad_sq: f64,
    /// Residual of the discrete `ω²` energy balance over the step.
    pub energy_residual: f64,
    /// `||∇(h - h_a)(t + dt) - ∇(h - h_a)(t)||_{L²} / dt`.
    pub drift_rate: f64,
}

impl StepReport {
    /// `mass_after - mass_before + dt * (total outward flux)`.
    pub fn mass_defect(&self) -> f64 {
        self.mass_after - self.mass_before
            + self.dt * (self.boundary_advective_flux + self.boundary_diffusive_flux)
    }

    /// Scale against which [`StepReport::mass_defect`] is judged.
    pub fn mass_scale(&self, abs_mass: f64) -> f64 {
        abs_mass
            + self.dt
                * (self.boundary_advective_flux.abs() + self.boundary_diffusive_flux.abs())
    }
}

/// Solver state. `h` and `v` are kept consistent with `omega` at time `t`.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub omega: ScalarField,
    pub h: ScalarField,
    pub h_a: ScalarField,
    pub v: VectorField,
    pub model: FluxModel,
    pub nu: f64,
    pub boundary: BoundaryData,
    pub a: Vec<f64>,
    op: Arc<ScreenedPoisson>,
    pub last_solver_iterations: usize,
}

impl State {
    pub fn new(
        grid: Arc<Grid>,
        model: FluxModel,
        nu: f64,
        boundary: BoundaryData,
        omega0: Vec<f64>,
    ) -> Result<State> {
        let omega = ScalarField::new(grid.clone(), omega0, 0.0)?;
        let op = Arc::new(ScreenedPoisson::new(grid.clone()));
        let a = boundary.a_values(&grid, 0.0);
        let (h_vals, stats) = op.solve(&omega.values, &a, None, SolverOptions::default())?;
        let zero = vec![0.0; grid.n_cells()];
        let (ha_vals, _) = op.solve(&zero, &a, None, SolverOptions::default())?;
        let h = ScalarField::new(grid.clone(), h_vals, 0.0)?;
        let h_a = ScalarField::new(grid.clone(), ha_vals, 0.0)?;
        let v = velocity(&h, &a);
        Ok(State {
            t: 0.0,
            omega,
            h,
            h_a,
            v,
            model,
            nu,
            boundary,
            a,
            op,
            last_solver_iterations: stats.iterations,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.omega.grid
    }

    pub fn robin_m(&self) -> f64 {
        robin_coefficient(self.model, &self.v)
    }

    pub fn b_values(&self) -> Vec<f64> {
        let z = normal_derivative(&self.h, &self.a);
        self.boundary.b_values(self.grid(), self.t, &z)
    }

    pub fn stable_dt(&self, cfl: f64) -> f64 {
        stable_dt(self.grid(), self.model, &self.v, self.nu, self.robin_m(), cfl)
    }

    pub fn snapshot(&self, store_gradient: bool) -> Snapshot {
        Snapshot {
            t: self.t,
            omega: self.omega.values.clone(),
            h: self.h.values.clone(),
            grad: store_gradient.then(|| cell_gradient(self.grid(), &self.omega.values)),
        }
    }

    /// Advance by `dt`: flux update with the current `h`, `v`, `M` and `b`,
    /// then re-solve `h` for the new `omega` at the new time.
    pub fn step(&mut self, dt: f64) -> Result<StepReport> {
        let grid = self.grid().clone();
        let m = self.robin_m();
        let b = self.b_values();
        let mass_before = self.omega.mass();
        let energy_before = self.omega.values.iter().map(|w| w * w).sum::<f64>() * grid.cell_area();
        let grad_sq = gradient_energy(&grid, &self.omega.values);
        let rhs = energy_rhs(
            self.model,
            &grid,
            &self.omega.values,
            &self.h.values,
            &self.v.values,
            self.nu,
            &b,
            m,
        );

        let (new_omega, tally) = advance(
            self.model,
            &grid,
            &self.omega.values,
            &self.v.values,
            self.nu,
            Closure::Robin { b: &b, m },
            dt,
        );
        let t_new = self.t + dt;
        let max_abs = new_omega.iter().fold(0.0f64, |acc, w| {
            if w.is_finite() {
                acc.max(w.abs())
            } else {
                f64::INFINITY
            }
        });
        if !(max_abs <= BLOW_UP) {
            let snapshot = Snapshot {
                t: t_new,
                omega: new_omega,
                h: self.h.values.clone(),
                grad: None,
            };
            return Err(Error::BlowUp {
                t: t_new,
                max_abs,
                snapshot: Box::new(snapshot),
            });
        }

        self.a = self.boundary.a_values(&grid, t_new);
        let (h_new, stats) = self.op.solve(
            &new_omega,
            &self.a,
            Some(&self.h.values),
            SolverOptions::default(),
        )?;
        let v_old = std::mem::replace(&mut self.v, VectorField::zeros(grid.clone()));
        self.omega = ScalarField {
            grid: grid.clone(),
            values: new_omega,
            t: t_new,
        };
        self.h = ScalarField {
            grid: grid.clone(),
            values: h_new,
            t: t_new,
        };
        self.h_a.t = t_new;
        self.t = t_new;
        self.v = velocity(&self.h, &self.a);
        self.last_solver_iterations = stats.iterations;

        let drift_sq: f64 = self
            .v
            .values
            .iter()
            .zip(&v_old.values)
            .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
            .sum();
        let mass_after = self.omega.mass();
        let energy_after = self.omega.values.iter().map(|w| w * w).sum::<f64>() * grid.cell_area();
        Ok(StepReport {
            dt,
            mass_before,
            mass_after,
            boundary_advective_flux: tally.advective_out,
            boundary_diffusive_flux: tally.diffusive_out,
            max_omega: self.omega.max(),
            min_omega: self.omega.min(),
            robin_m: m,
            solver_iterations: stats.iterations,
            grad_sq,
            energy_residual: (energy_after - energy_before) / dt + 2.0 * self.nu * grad_sq - rhs,
            drift_rate: (drift_sq * grid.cell_area()).sqrt() / dt,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_final: f64,
    pub cfl: f64,
    pub output_interval: f64,
    pub store_gradients: bool,
}

/// One row of the per-step monitor table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub step: usize,
    /// Time at the end of the step.
    pub t: f64,
    pub report: StepReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    /// `sup_t max |ω|`, including the initial state.
    pub sup_abs: f64,
    pub min_omega: f64,
    pub max_omega: f64,
    /// `sqrt(ν Σ ∫|∇ω|² dt)`.
    pub energy_bound: f64,
    /// Largest `|mass defect| / mass scale` over all steps.
    pub worst_mass_defect: f64,
    /// `max |ω(t) - ω(0)|` over all steps.
    pub max_drift: f64,
    pub final_mass: f64,
    /// Largest Robin coefficient seen, i.e. `K ||v||_{L∞(Ω_T)}`.
    pub global_m: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub monitors: Vec<MonitorRow>,
    pub summary: RunSummary,
}

pub fn run(state: State, opts: RunOptions) -> Result<RunOutput> {
    run_with(state, opts, |_| {})
}

/// Integrate to `opts.t_final`, storing a snapshot at every multiple of the
/// output interval. `on_step` sees every monitor row as it is produced.
pub fn run_with(
    mut state: State,
    opts: RunOptions,
    mut on_step: impl FnMut(&MonitorRow),
) -> Result<RunOutput> {
    if !(opts.t_final >= 0.0) || !(opts.output_interval > 0.0) {
        return Err(Error::ConfigInvalid(
            "t_final must be nonnegative and output_interval positive".to_string(),
        ));
    }
    let grid = state.grid().clone();
    let omega0 = state.omega.values.clone();
    let mut snapshots = vec![state.snapshot(opts.store_gradients)];
    let mut monitors = Vec::new();
    let mut summary = RunSummary {
        steps: 0,
        sup_abs: state.omega.max_abs(),
        min_omega: state.omega.min(),
        max_omega: state.omega.max(),
        energy_bound: 0.0,
        worst_mass_defect: 0.0,
        max_drift: 0.0,
        final_mass: state.omega.mass(),
        global_m: state.robin_m(),
    };
    let mut grad_integral = 0.0;
    let n_out = (opts.t_final / opts.output_interval - 1e-9).ceil().max(0.0) as usize;
    for k in 1..=n_out {
        let t_out = if k == n_out {
            opts.t_final
        } else {
            k as f64 * opts.output_interval
        };
        while state.t < t_out {
            let remaining = t_out - state.t;
            let mut dt = state.stable_dt(opts.cfl).min(opts.output_interval);
            // Land exactly on the output time instead of leaving a sliver.
            if dt >= remaining || remaining - dt < 1e-9 * dt {
                dt = remaining;
            }
            let abs_mass = state.omega.values.iter().map(|w| w.abs()).sum::<f64>()
                * grid.cell_area();
            let report = state.step(dt)?;
            if remaining == dt {
                state.t = t_out;
                state.omega.t = t_out;
                state.h.t = t_out;
            }
            summary.steps += 1;
            summary.sup_abs = summary.sup_abs.max(report.max_omega.abs()).max(report.min_omega.abs());
            summary.min_omega = summary.min_omega.min(report.min_omega);
            summary.max_omega = summary.max_omega.max(report.max_omega);
            summary.global_m = summary.global_m.max(state.robin_m()).max(report.robin_m);
            grad_integral += report.grad_sq * dt;
            summary.worst_mass_defect = summary
                .worst_mass_defect
                .max(report.mass_defect().abs() / report.mass_scale(abs_mass).max(f64::MIN_POSITIVE));
            let drift = state
                .omega
                .values
                .iter()
                .zip(&omega0)
                .fold(0.0f64, |m, (w, w0)| m.max((w - w0).abs()));
            summary.max_drift = summary.max_drift.max(drift);
            let row = MonitorRow {
                step: summary.steps,
                t: state.t,
                report,
            };
            on_step(&row);
            monitors.push(row);
        }
        snapshots.push(state.snapshot(opts.store_gradients));
    }
    summary.energy_bound = (state.nu * grad_integral).sqrt();
    summary.final_mass = state.omega.mass();
    Ok(RunOutput {
        trajectory: Trajectory {
            grid,
            model: state.model,
            nu: state.nu,
            boundary: state.boundary.clone(),
            snapshots,
        },
        monitors,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Profile;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(nx: usize, ny: usize) -> Arc<Grid> {
        Arc::new(Grid::new(nx, ny, 1.0, 1.0).unwrap())
    }

    #[test]
    fn face_flux_examples() {
        let mf = FluxModel::MeanField;
        assert!((numerical_face_flux(mf, 0.5, 0.5, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(numerical_face_flux(mf, 3.0, -1.0, 0.0), 0.0);
        assert_eq!(numerical_face_flux(FluxModel::KellerSegel, 0.2, 0.9, 0.0), 0.0);
        // Upwind value g(1) * 1 for a monotone flux on [0, 1].
        assert!((numerical_face_flux(mf, 1.0, 0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn face_flux_consistent_and_monotone(
            s in -3.0f64..3.0, l in -3.0f64..3.0, r in -3.0f64..3.0,
            dl in 0.0f64..1.0, vn in -4.0f64..4.0, ks in any::<bool>()
        ) {
            let model = if ks { FluxModel::KellerSegel } else { FluxModel::MeanField };
            let f = numerical_face_flux(model, s, s, vn);
            prop_assert!((f - model.g(s) * vn).abs() < 1e-12);
            prop_assert!(numerical_face_flux(model, l + dl, r, vn) >= numerical_face_flux(model, l, r, vn) - 1e-12);
            prop_assert!(numerical_face_flux(model, l, r + dl, vn) <= numerical_face_flux(model, l, r, vn) + 1e-12);
        }
    }

    #[test]
    fn robin_flux_examples() {
        assert_eq!(robin_diffusive_flux(0.3, 0.3, 5.0), 0.0);
        assert_eq!(robin_diffusive_flux(0.5, 0.5, 2.0), 0.0);
        assert_eq!(robin_diffusive_flux(1.0, 0.0, 2.0), -2.0);
    }

    #[test]
    fn stable_dt_examples() {
        let g = Grid::new(100, 100, 1.0, 1.0).unwrap();
        let mut v = VectorField::zeros(Arc::new(g.clone()));
        assert!(stable_dt(&g, FluxModel::MeanField, &v, 0.0, 0.0, 0.9) > 1e20);
        v.values[7] = [1.0, 0.0];
        let dt = stable_dt(&g, FluxModel::MeanField, &v, 0.0, 0.0, 0.9);
        assert!((dt - 0.0045).abs() < 1e-15);
        let z = VectorField::zeros(Arc::new(g.clone()));
        let d1 = stable_dt(&g, FluxModel::MeanField, &z, 0.5, 0.0, 0.5);
        let d2 = stable_dt(&g, FluxModel::MeanField, &z, 1.0, 0.0, 0.5);
        assert!((d1 / d2 - 2.0).abs() < 1e-12);
    }

    /// Brute-force one-dimensional upwind update for a nonnegative state
    /// moving in `+x` with unit speed (mean-field flux `g(s) = s`).
    fn upwind_1d(row: &[f64], dt: f64, dx: f64) -> Vec<f64> {
        let n = row.len();
        (0..n)
            .map(|i| {
                let west = row[(i + n - 1) % n];
                row[i] - dt / dx * (row[i] - west)
            })
            .collect()
    }

    #[test]
    fn periodic_strip_matches_upwind_oracle() {
        let g = Grid::new(32, 3, 1.0, 3.0 / 32.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let row: Vec<f64> = (0..g.nx).map(|_| rng.gen_range(0.0..1.0)).collect();
        let omega: Vec<f64> = (0..g.ny).flat_map(|_| row.clone()).collect();
        let v = vec![[1.0, 0.0]; g.n_cells()];
        let dt = 0.4 * g.dx;
        let (next, _) = advance(FluxModel::MeanField, &g, &omega, &v, 0.0, Closure::Periodic, dt);
        let oracle = upwind_1d(&row, dt, g.dx);
        for j in 0..g.ny {
            for i in 0..g.nx {
                assert!((next[j * g.nx + i] - oracle[i]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn constant_state_is_exactly_steady() {
        let g = grid(12, 12);
        let bd = BoundaryData {
            a: Profile::constant(0.8),
            b0: Profile::constant(0.8),
            b1: 0.3,
            kappa: 0.5,
            j: Profile::constant(1.0),
        };
        let mut s = State::new(g.clone(), FluxModel::MeanField, 0.05, bd, vec![0.8; g.n_cells()]).unwrap();
        for _ in 0..100 {
            let dt = s.stable_dt(0.25).min(0.01);
            s.step(dt).unwrap();
        }
        assert!(s.omega.values.iter().all(|&w| w == 0.8));
        assert!(s.h.values.iter().all(|&w| w == 0.8));
    }

    #[test]
    fn mass_identity_holds_each_step() {
        let g = grid(16, 12);
        let bd = BoundaryData {
            a: Profile::Sinusoidal {
                mean: 2.0,
                amplitude: 1.0,
                wavelength: 1.0,
                phase: 0.0,
            },
            b0: Profile::constant(0.4),
            b1: 0.5,
            kappa: 0.5,
            j: Profile::constant(0.5),
        };
        let omega0: Vec<f64> = (0..g.n_cells())
            .map(|c| {
                let [x, y] = g.cell_center(c);
                (3.0 * x).sin() * y
            })
            .collect();
        let mut s = State::new(g.clone(), FluxModel::MeanField, 0.02, bd, omega0).unwrap();
        for _ in 0..50 {
            let abs_mass = s.omega.values.iter().map(|w| w.abs()).sum::<f64>() * g.cell_area();
            let dt = s.stable_dt(0.25);
            let r = s.step(dt).unwrap();
            assert!(r.mass_defect().abs() <= 1e-12 * r.mass_scale(abs_mass));
        }
    }

    #[test]
    fn keller_segel_stays_in_unit_interval() {
        let g = grid(20, 20);
        let bd = BoundaryData {
            a: Profile::Sinusoidal {
                mean: 1.0,
                amplitude: 3.0,
                wavelength: 1.3,
                phase: 0.2,
            },
            b0: Profile::constant(0.9),
            b1: 0.0,
            kappa: 0.5,
            j: Profile::constant(1.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let omega0: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut s = State::new(g.clone(), FluxModel::KellerSegel, 0.01, bd, omega0).unwrap();
        for _ in 0..200 {
            let dt = s.stable_dt(0.25);
            let r = s.step(dt).unwrap();
            assert!(r.min_omega >= -1e-12 && r.max_omega <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn frozen_update_preserves_order() {
        let g = grid(10, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for model in [FluxModel::MeanField, FluxModel::KellerSegel] {
            for _ in 0..20 {
                let v: Vec<[f64; 2]> = (0..g.n_cells())
                    .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                    .collect();
                let b: Vec<f64> = (0..g.n_faces()).map(|_| rng.gen_range(0.0..1.0)).collect();
                let lo: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(-0.5..1.5)).collect();
                let hi: Vec<f64> = lo.iter().map(|w| w + rng.gen_range(0.0..0.5)).collect();
                let vf = VectorField {
                    grid: g.clone(),
                    values: v.clone(),
                };
                let dt = stable_dt(&g, model, &vf, 0.0, 0.0, 0.25);
                let closure = Closure::Robin { b: &b, m: 0.0 };
                let (a1, _) = advance(model, &g, &lo, &v, 0.0, closure, dt);
                let (a2, _) = advance(model, &g, &hi, &v, 0.0, closure, dt);
                for (x, y) in a1.iter().zip(&a2) {
                    assert!(x <= &(y + 1e-13), "{model:?}: {x} > {y}");
                }
            }
        }
    }

    #[test]
    fn zero_final_time_gives_initial_snapshot_only() {
        let g = grid(6, 6);
        let s = State::new(g.clone(), FluxModel::MeanField, 0.1, BoundaryData::default(), vec![0.0; 36]).unwrap();
        let out = run(
            s,
            RunOptions {
                t_final: 0.0,
                cfl: 0.25,
                output_interval: 0.1,
                store_gradients: false,
            },
        )
        .unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(out.summary.steps, 0);
    }

    #[test]
    fn run_lands_on_output_times() {
        let g = grid(8, 8);
        let bd = BoundaryData {
            a: Profile::constant(2.0),
            b0: Profile::constant(0.5),
            ..BoundaryData::default()
        };
        let s = State::new(g.clone(), FluxModel::MeanField, 0.05, bd, vec![0.0; 64]).unwrap();
        let out = run(
            s,
            RunOptions {
                t_final: 0.1,
                cfl: 0.25,
                output_interval: 0.025,
                store_gradients: true,
            },
        )
        .unwrap();
        let times = out.trajectory.times();
        assert_eq!(times.len(), 5);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.025 * k as f64).abs() < 1e-12, "{times:?}");
        }
        assert!(out.trajectory.require_gradients().is_ok());
        assert!(out.summary.final_mass > 0.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = grid(6, 6);
        let mut s = State::new(g.clone(), FluxModel::MeanField, 0.0, BoundaryData::default(), vec![0.0; 36]).unwrap();
        s.omega.values[10] = 2e6;
        s.v.values[10] = [1.0, 0.0];
        match s.step(1e-6) {
            Err(Error::BlowUp { max_abs, .. }) => assert!(max_abs > BLOW_UP),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn gradient_of_linear_field() {
        let g = grid(7, 5);
        let omega: Vec<f64> = (0..g.n_cells())
            .map(|c| {
                let [x, y] = g.cell_center(c);
                2.0 * x - 3.0 * y
            })
            .collect();
        for gr in cell_gradient(&g, &omega) {
            assert!((gr[0] - 2.0).abs() < 1e-12 && (gr[1] + 3.0).abs() < 1e-12);
        }
    }
}
