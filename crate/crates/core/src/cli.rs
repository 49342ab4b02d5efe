//! Entry points behind the `run`, `sweep`, `audit` and `kinetic`
//! subcommands. Each one reads and writes a run directory.

use std::path::Path;

use crate::audit::{audit, test_function_family, Calibration, ResidualReport};
use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{
    read_run, write_csv, write_monitors, write_run, ENTROPY_FILE, ENTROPY_HEADER, KINETIC_FILE,
    KINETIC_HEADER, MONITORS_FILE,
};
use crate::kinetic::{kinetic_audit, KineticGrid, KineticReport};
use crate::trajectory::Trajectory;
use crate::transport::{run, RunOutput};

/// Level count used by the audits unless overridden.
pub const DEFAULT_LEVELS: usize = 128;

/// Averaging windows `T/4, T/8, T/16`.
pub fn default_windows(t_final: f64) -> Vec<f64> {
    vec![t_final / 4.0, t_final / 8.0, t_final / 16.0]
}

/// Integrate one config and write snapshots, monitors and, when toggled,
/// the kinetic and entropy reports into `out`.
pub fn execute_run(cfg: &RunConfig, out: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let output = run(cfg.initial_state()?, cfg.run_options())?;
    write_run(out, cfg, &output.trajectory)?;
    write_monitors(&out.join(MONITORS_FILE), &output.monitors)?;
    if cfg.output.kinetic {
        write_kinetic(&output.trajectory, DEFAULT_LEVELS, &default_windows(cfg.t_final), out)?;
    }
    if cfg.output.audit {
        write_audit(&output.trajectory, DEFAULT_LEVELS, None, out)?;
    }
    Ok(output)
}

/// Levels `ξ_k` used by the entropy audit: bin midpoints on `[-R-1, R+1]`.
pub fn audit_levels(traj: &Trajectory, n_xi: usize) -> Result<Vec<f64>> {
    Ok(KineticGrid::for_bound(traj.sup_abs(), n_xi)?.levels())
}

fn write_audit(traj: &Trajectory, n_xi: usize, cal: Option<Calibration>, out: &Path) -> Result<ResidualReport> {
    let g = &traj.grid;
    let family = test_function_family(traj.t_final(), g.lx, g.ly);
    let report = audit(traj, &audit_levels(traj, n_xi)?, &family, cal)?;
    write_csv(&out.join(ENTROPY_FILE), ENTROPY_HEADER, report.csv_rows())?;
    Ok(report)
}

fn write_kinetic(traj: &Trajectory, n_xi: usize, eps: &[f64], out: &Path) -> Result<KineticReport> {
    let report = kinetic_audit(traj, n_xi, eps)?;
    write_csv(&out.join(KINETIC_FILE), KINETIC_HEADER, report.csv_rows())?;
    Ok(report)
}

/// Entropy audit of an existing run directory.
pub fn execute_audit(dir: &Path, n_xi: usize, cal: Option<Calibration>) -> Result<ResidualReport> {
    let (_, traj) = read_run(dir)?;
    write_audit(&traj, n_xi, cal, dir)
}

/// Kinetic checks on an existing run directory; `eps` defaults to
/// [`default_windows`].
pub fn execute_kinetic(dir: &Path, n_xi: usize, eps: Option<Vec<f64>>) -> Result<KineticReport> {
    let (_, traj) = read_run(dir)?;
    let eps = eps.unwrap_or_else(|| default_windows(traj.t_final()));
    write_kinetic(&traj, n_xi, &eps, dir)
}
