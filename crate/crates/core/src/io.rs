//! Plain-text output: snapshot CSVs, monitor tables and the report files.
//!
//! Every numeric value is written with Rust's locale-independent float
//! formatting. Snapshot values use 17 significant digits so that reading a
//! file back reproduces the stored doubles bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{load_config_file, RunConfig};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::geometry::Grid;
use crate::trajectory::{Snapshot, Trajectory};
use crate::transport::MonitorRow;

pub const CONFIG_FILE: &str = "config.cfg";
pub const MONITORS_FILE: &str = "monitors.csv";
pub const ENTROPY_FILE: &str = "entropy_report.csv";
pub const KINETIC_FILE: &str = "kinetic_report.csv";
pub const SWEEP_FILE: &str = "sweep_report.csv";
pub const DISTANCES_FILE: &str = "distances.csv";
pub const LAYERS_FILE: &str = "layers.csv";

pub const MONITORS_HEADER: &str = "step,t,dt,mass,mass_defect,boundary_advective_flux,boundary_diffusive_flux,min_omega,max_omega,robin_m,solver_iterations,grad_sq,energy_residual,drift_rate";
pub const ENTROPY_HEADER: &str = "xi,phi_id,residual,pass";
pub const KINETIC_HEADER: &str = "quantity,eps,xi,value";
pub const SWEEP_HEADER: &str = "nu,nx,ny,dx,steps,sup_abs_omega,energy_bound,final_mass,min_omega,max_omega,worst_mass_defect,status";
pub const DISTANCES_HEADER: &str = "nu_i,nu_j,p,distance";
pub const LAYERS_HEADER: &str = "nu,face_group,depth,depth_over_nu,omega";

const SNAPSHOT_MAGIC: &str = "# vortexlayer snapshot";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub nu: f64,
    pub model: FluxModel,
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snap_{t:.9}.csv")
}

pub fn write_snapshot(path: &Path, meta: &SnapshotMeta, snap: &Snapshot) -> Result<()> {
    let n = meta.nx * meta.ny;
    if snap.omega.len() != n || snap.h.len() != n {
        return Err(Error::FieldSize {
            expected: n,
            got: snap.omega.len().min(snap.h.len()),
        });
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    writeln!(
        out,
        "# t={:.16e},nx={},ny={},lx={:.16e},ly={:.16e},nu={:.16e},model={}",
        meta.t, meta.nx, meta.ny, meta.lx, meta.ly, meta.nu, meta.model
    )?;
    let header = if snap.grad.is_some() {
        "i,j,omega,h,grad_x,grad_y"
    } else {
        "i,j,omega,h"
    };
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for c in 0..n {
        line.clear();
        let (i, j) = (c % meta.nx, c / meta.nx);
        write!(line, "{i},{j},{:.16e},{:.16e}", snap.omega[c], snap.h[c]).unwrap();
        if let Some(g) = &snap.grad {
            write!(line, ",{:.16e},{:.16e}", g[c][0], g[c][1]).unwrap();
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_meta(line: &str, path: &Path) -> Result<SnapshotMeta> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| bad("missing metadata line".to_string()))?
        .trim();
    let mut t = None;
    let mut nx = None;
    let mut ny = None;
    let mut lx = None;
    let mut ly = None;
    let mut nu = None;
    let mut model = None;
    for kv in body.split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed metadata entry `{kv}`")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("bad value for {k}: `{v}`")))
        };
        let count = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| bad(format!("bad value for {k}: `{v}`")))
        };
        match k {
            "t" => t = Some(num(v)?),
            "nx" => nx = Some(count(v)?),
            "ny" => ny = Some(count(v)?),
            "lx" => lx = Some(num(v)?),
            "ly" => ly = Some(num(v)?),
            "nu" => nu = Some(num(v)?),
            "model" => model = Some(v.parse::<FluxModel>().map_err(bad)?),
            _ => return Err(bad(format!("unknown metadata key `{k}`"))),
        }
    }
    let need = |name: &str| bad(format!("metadata lacks `{name}`"));
    Ok(SnapshotMeta {
        t: t.ok_or_else(|| need("t"))?,
        nx: nx.ok_or_else(|| need("nx"))?,
        ny: ny.ok_or_else(|| need("ny"))?,
        lx: lx.ok_or_else(|| need("lx"))?,
        ly: ly.ok_or_else(|| need("ly"))?,
        nu: nu.ok_or_else(|| need("nu"))?,
        model: model.ok_or_else(|| need("model"))?,
    })
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotMeta, Snapshot)> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    let mut next = || -> Result<Option<String>> { lines.next().transpose().map_err(Error::from) };
    match next()? {
        Some(l) if l.trim() == SNAPSHOT_MAGIC => {}
        _ => return Err(bad("not a snapshot file".to_string())),
    }
    let meta = parse_meta(&next()?.ok_or_else(|| bad("missing metadata line".to_string()))?, path)?;
    let header = next()?.ok_or_else(|| bad("missing column header".to_string()))?;
    let with_grad = match header.trim() {
        "i,j,omega,h" => false,
        "i,j,omega,h,grad_x,grad_y" => true,
        other => return Err(bad(format!("unexpected column header `{other}`"))),
    };
    let n = meta.nx * meta.ny;
    let mut omega = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    let mut grad = Vec::new();
    while let Some(line) = next()? {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let want = if with_grad { 6 } else { 4 };
        if cols.len() != want {
            return Err(bad(format!("row {} has {} columns", omega.len(), cols.len())));
        }
        let f = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("bad number `{s}`")))
        };
        omega.push(f(cols[2])?);
        h.push(f(cols[3])?);
        if with_grad {
            grad.push([f(cols[4])?, f(cols[5])?]);
        }
    }
    if omega.is_empty() {
        return Err(bad("empty payload".to_string()));
    }
    if omega.len() != n {
        return Err(bad(format!(
            "header declares {} x {} = {n} cells but payload has {} rows",
            meta.nx,
            meta.ny,
            omega.len()
        )));
    }
    let t = meta.t;
    Ok((
        meta,
        Snapshot {
            t,
            omega,
            h,
            grad: with_grad.then_some(grad),
        },
    ))
}

/// Snapshot files in `dir`, unsorted.
pub fn snapshot_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::NoSnapshots(dir.to_path_buf()));
    }
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if name.starts_with("snap_") && name.ends_with(".csv") {
            paths.push(p);
        }
    }
    if paths.is_empty() {
        return Err(Error::NoSnapshots(dir.to_path_buf()));
    }
    Ok(paths)
}

/// Write the config echo and every snapshot of a trajectory into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_toml())?;
    let meta = |t: f64| SnapshotMeta {
        t,
        nx: traj.grid.nx,
        ny: traj.grid.ny,
        lx: traj.grid.lx,
        ly: traj.grid.ly,
        nu: traj.nu,
        model: traj.model,
    };
    for s in &traj.snapshots {
        write_snapshot(&dir.join(snapshot_file_name(s.t)), &meta(s.t), s)?;
    }
    Ok(())
}

/// Load a run directory back: the config echo plus all snapshots in time order.
pub fn read_run(dir: &Path) -> Result<(RunConfig, Trajectory)> {
    let paths = snapshot_paths(dir)?;
    let cfg = load_config_file(&dir.join(CONFIG_FILE))?;
    let mut snaps = Vec::with_capacity(paths.len());
    let mut first_meta: Option<SnapshotMeta> = None;
    for p in &paths {
        let (meta, snap) = read_snapshot(p)?;
        if let Some(m) = &first_meta {
            if (m.nx, m.ny, m.model) != (meta.nx, meta.ny, meta.model) {
                return Err(Error::Snapshot {
                    path: p.clone(),
                    reason: "grid or model differs from the other snapshots".to_string(),
                });
            }
        } else {
            first_meta = Some(meta);
        }
        snaps.push(snap);
    }
    snaps.sort_by(|a, b| a.t.total_cmp(&b.t));
    let meta = first_meta.expect("at least one snapshot");
    let grid = Arc::new(Grid::new(meta.nx, meta.ny, meta.lx, meta.ly)?);
    Ok((
        cfg.clone(),
        Trajectory {
            grid,
            model: meta.model,
            nu: meta.nu,
            boundary: cfg.boundary(),
            snapshots: snaps,
        },
    ))
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_monitors(path: &Path, rows: &[MonitorRow]) -> Result<()> {
    write_csv(
        path,
        MONITORS_HEADER,
        rows.iter().map(|m| {
            let r = &m.report;
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                m.step,
                m.t,
                r.dt,
                r.mass_after,
                r.mass_defect(),
                r.boundary_advective_flux,
                r.boundary_diffusive_flux,
                r.min_omega,
                r.max_omega,
                r.robin_m,
                r.solver_iterations,
                r.grad_sq,
                r.energy_residual,
                r.drift_rate
            )
        }),
    )
}
