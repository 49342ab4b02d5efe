//! Acceptance run: every criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use vortexlayer::audit::{audit, test_function_family, Calibration, ResidualReport};
use vortexlayer::cli::{audit_levels, default_windows, DEFAULT_LEVELS};
use vortexlayer::config::{preset, RunConfig};
use vortexlayer::elliptic::{solve_screened_poisson, ScalarField};
use vortexlayer::flux::FluxModel;
use vortexlayer::geometry::Grid;
use vortexlayer::kinetic::kinetic_audit;
use vortexlayer::sweep::{geometric_nus, run_sweep, SweepConfig};
use vortexlayer::trajectory::Trajectory;
use vortexlayer::transport::{advance, run, run_with, Closure};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(out: &mut Vec<Outcome>, name: &'static str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    out.push(Outcome { name, pass, detail });
}

fn elliptic_convergence(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let pi = std::f64::consts::PI;
    let err = |n: usize| {
        let g = Arc::new(Grid::new(n, n, 1.0, 1.0).unwrap());
        let exact = |x: f64, y: f64| (pi * x).sin() * (pi * y).sin();
        let src = ScalarField::from_fn(g.clone(), 0.0, |x, y| (2.0 * pi * pi + 1.0) * exact(x, y));
        let h = solve_screened_poisson(&src, &vec![0.0; g.n_faces()]).unwrap();
        let s: f64 = (0..g.n_cells())
            .map(|c| {
                let [x, y] = g.cell_center(c);
                (h.values[c] - exact(x, y)).powi(2)
            })
            .sum();
        (s * g.cell_area()).sqrt()
    };
    let (e32, e64) = (err(32), err(64));
    let ratio = e32 / e64;
    let secs = start.elapsed().as_secs_f64();
    report(
        out,
        "elliptic convergence",
        (3.5..=4.5).contains(&ratio) && secs < 10.0,
        format!("L2 errors {e32:.3e} -> {e64:.3e}, ratio {ratio:.3} (want [3.5, 4.5]), {secs:.2} s (< 10 s)"),
    );
}

fn max_principle(out: &mut Vec<Outcome>) -> Option<Trajectory> {
    let start = Instant::now();
    let cfg = preset("maxprinciple").unwrap();
    assert_eq!((cfg.grid.nx, cfg.nu, cfg.t_final, cfg.b1), (64, 0.01, 1.0, 0.0));
    let state = cfg.initial_state().unwrap();
    let (mut lo, mut hi) = (state.omega.min(), state.omega.max());
    let res = run_with(state, cfg.run_options(), |row| {
        lo = lo.min(row.report.min_omega);
        hi = hi.max(row.report.max_omega);
    });
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(o) => {
            report(
                out,
                "Keller-Segel maximum principle",
                lo >= -1e-12 && hi <= 1.0 + 1e-12 && secs < 60.0,
                format!(
                    "min {lo:e}, max {hi:.17} over {} steps (want [-1e-12, 1 + 1e-12]), {secs:.1} s (< 60 s)",
                    o.summary.steps
                ),
            );
            Some(o.trajectory)
        }
        Err(e) => {
            report(out, "Keller-Segel maximum principle", false, format!("run failed: {e}"));
            None
        }
    }
}

fn sweep_criteria(out: &mut Vec<Outcome>) {
    let start = Instant::now();
    let base = preset("nucleation").unwrap();
    let cfg = SweepConfig::new(base, geometric_nus(6));
    let rep = match run_sweep(&cfg, None) {
        Ok(r) => r,
        Err(e) => {
            for name in ["uniform L-infinity bound", "uniform energy bound", "Cauchy proxy"] {
                report(out, name, false, format!("sweep failed: {e}"));
            }
            return;
        }
    };
    let secs = start.elapsed().as_secs_f64();
    println!("  sweep of {} runs took {secs:.1} s", rep.rows.len());
    for r in &rep.rows {
        println!(
            "  nu = {:<9} {:>3}x{:<3} steps {:>6}  sup|w| {:.6}  sqrt(nu)|grad w| {:.6}  mass defect {:.1e}  {}",
            r.nu, r.nx, r.ny, r.steps, r.sup_abs, r.energy_bound, r.worst_mass_defect, r.status
        );
    }
    let first4 = &rep.rows[..4];
    let all_ok = rep.rows.iter().all(|r| r.ok());

    let sup0 = first4[0].sup_abs;
    let sup_max = first4.iter().map(|r| r.sup_abs).fold(f64::NAN, f64::max);
    report(
        out,
        "uniform L-infinity bound",
        all_ok && sup_max <= 2.0 * sup0,
        format!("max sup|w| over nu 0.1..0.0125 = {sup_max:.6} vs 2 x {sup0:.6}"),
    );

    let e: Vec<f64> = first4.iter().map(|r| r.energy_bound).collect();
    let (emin, emax) = e.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    report(
        out,
        "uniform energy bound",
        all_ok && emin > 0.0 && emax / emin <= 3.0,
        format!("sqrt(nu)|grad w| in [{emin:.4}, {emax:.4}], spread {:.3} (<= 3)", emax / emin),
    );

    println!("  distance matrix (L1, L2, L4):");
    for line in rep.distance_rows() {
        println!("    {line}");
    }
    let d1 = rep.consecutive(0);
    let verdict = rep.cauchy_verdict(0) == Some(true);
    report(
        out,
        "Cauchy proxy",
        all_ok && verdict,
        format!(
            "consecutive L1 distances {:?}, last three nonincreasing: {verdict}",
            d1.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    );
}

fn nucleation(nu: f64, nx: usize, snapshots_per_run: f64) -> RunConfig {
    let mut cfg = preset("nucleation").unwrap();
    cfg.nu = nu;
    cfg.grid.nx = nx;
    cfg.grid.ny = nx;
    cfg.output_interval = Some(cfg.t_final / snapshots_per_run);
    cfg
}

fn audited(traj: &Trajectory, cal: Option<Calibration>) -> (ResidualReport, f64) {
    let start = Instant::now();
    let g = &traj.grid;
    let fam = test_function_family(traj.t_final(), g.lx, g.ly);
    let levels = audit_levels(traj, DEFAULT_LEVELS).unwrap();
    let rep = audit(traj, &levels, &fam, cal).unwrap();
    (rep, start.elapsed().as_secs_f64())
}

fn entropy_inequality(out: &mut Vec<Outcome>, ks: Option<&Trajectory>) {
    let baseline = run(nucleation(0.1, 10, 32.0).initial_state().unwrap(), nucleation(0.1, 10, 32.0).run_options())
        .unwrap()
        .trajectory;
    let (base_rep, base_secs) = audited(&baseline, None);
    let cal = Calibration::from_report(&base_rep);
    println!(
        "  baseline nu = 0.1, 10x10: min residual {:.3e} over {} pairs, C1 = C2 = {:.4e}, {base_secs:.2} s",
        base_rep.min_residual,
        base_rep.rows.len(),
        cal.c1
    );
    let mut runs: Vec<(String, Trajectory)> = Vec::new();
    for (nu, nx) in [(0.1, 10), (0.05, 20), (0.025, 40)] {
        let c = nucleation(nu, nx, 32.0);
        runs.push((format!("nucleation nu = {nu}"), run(c.initial_state().unwrap(), c.run_options()).unwrap().trajectory));
    }
    let bump = preset("bump").unwrap();
    runs.push(("two-bump".to_string(), run(bump.initial_state().unwrap(), bump.run_options()).unwrap().trajectory));
    let mut pass = true;
    let mut worst = String::new();
    let ks_entry = ks.map(|t| ("Keller-Segel".to_string(), t.clone()));
    for (name, traj) in runs.iter().chain(ks_entry.iter()) {
        let (rep, secs) = audited(traj, Some(cal));
        let ok = rep.pass() && secs < 120.0 && rep.rows.len() == 54 * DEFAULT_LEVELS;
        println!(
            "  {name}: min {:.3e} at (xi {:.4}, phi {}) vs -{:.3e} (dx {:.4}, dt {:.4}), {secs:.2} s: {}",
            rep.min_residual,
            rep.argmin.0,
            rep.argmin.1,
            rep.tolerance,
            rep.dx,
            rep.dt,
            if ok { "ok" } else { "below" }
        );
        if !ok {
            pass = false;
            worst = format!("{name} at {:.3e} < -{:.3e}", rep.min_residual, rep.tolerance);
        }
    }
    if ks.is_none() {
        pass = false;
        worst = "Keller-Segel trajectory unavailable".to_string();
    }
    report(
        out,
        "entropy inequality",
        pass,
        if pass {
            format!("{} runs, 54 x {} pairs each, all within C1 dx + C2 dt", runs.len() + 1, DEFAULT_LEVELS)
        } else {
            worst
        },
    );
}

fn kinetic_identities(out: &mut Vec<Outcome>) {
    let cfg = nucleation(0.025, 40, 64.0);
    let traj = run(cfg.initial_state().unwrap(), cfg.run_options()).unwrap().trajectory;
    let eps = default_windows(traj.t_final());
    let rep = kinetic_audit(&traj, DEFAULT_LEVELS, &eps).unwrap();
    let dxi = rep.grid.dxi();
    let decreasing = rep.interior.windows(2).all(|w| w[1] < w[0]);
    report(
        out,
        "kinetic identities",
        rep.reconstruct_max_error <= dxi && rep.rho_bound_max <= 0.0 && decreasing && rep.monotone && rep.support,
        format!(
            "reconstruction {:.3e} <= {dxi:.3e}, rho bound {:.3e} <= 0, interior functional {:?} for eps {:?}",
            rep.reconstruct_max_error,
            rep.rho_bound_max,
            rep.interior.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>(),
            eps
        ),
    );
}

/// Local Lax-Friedrichs with `K = 1`, written out for the checks below.
fn llf(model: FluxModel, l: f64, r: f64, vn: f64) -> f64 {
    0.5 * (model.g(l) + model.g(r)) * vn - 0.5 * vn.abs() * (r - l)
}

fn conservation(out: &mut Vec<Outcome>) {
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for (name, nu, nx) in [("nucleation", 0.05, 20), ("nucleation", 0.0125, 80), ("bump", 0.0, 0)] {
        let mut cfg = preset(name).unwrap();
        if nx > 0 {
            cfg.nu = nu;
            cfg.grid.nx = nx;
            cfg.grid.ny = nx;
        }
        let mut state = cfg.initial_state().unwrap();
        let g = state.grid().clone();
        for _ in 0..200 {
            let b = state.b_values();
            let m = state.robin_m();
            let before = state.omega.values.iter().sum::<f64>() * g.cell_area();
            let abs = state.omega.values.iter().map(|w| w.abs()).sum::<f64>() * g.cell_area();
            let mut outflow = 0.0;
            for (k, face) in g.boundary_faces().iter().enumerate() {
                let w = state.omega.values[face.cell];
                let v = state.v.values[face.cell];
                let vn = v[0] * face.normal[0] + v[1] * face.normal[1];
                let ext = if state.model.g_prime(w) * vn < 0.0 { b[k] } else { w };
                let diffusive = if state.nu > 0.0 { m * (w - b[k]) } else { 0.0 };
                outflow += (llf(state.model, w, ext, vn) + diffusive) * face.area;
            }
            let dt = state.stable_dt(cfg.cfl);
            state.step(dt).unwrap();
            let after = state.omega.values.iter().sum::<f64>() * g.cell_area();
            let defect = (after - before + dt * outflow).abs() / (abs + dt * outflow.abs());
            worst = worst.max(defect);
            steps += 1;
        }
    }

    let cfg = preset("steady").unwrap();
    let mut state = cfg.initial_state().unwrap();
    let w0 = state.omega.values.clone();
    let mut drift: f64 = 0.0;
    for _ in 0..100 {
        let dt = state.stable_dt(cfg.cfl);
        state.step(dt).unwrap();
        drift = drift.max(state.omega.values.iter().zip(&w0).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
    }
    report(
        out,
        "conservation",
        worst <= 1e-12 && drift == 0.0,
        format!("worst relative mass defect {worst:.2e} over {steps} steps (<= 1e-12), steady drift {drift} over 100 steps"),
    );
}

fn upwind_oracle(out: &mut Vec<Outcome>) {
    // Strip with a uniform frozen drift in +x, ν = 0. Periodic closure and a
    // bounded strip with inflow value b on the left face.
    let g = Grid::new(64, 4, 1.0, 4.0 / 64.0).unwrap();
    let row: Vec<f64> = (0..g.nx).map(|i| 0.5 + 0.4 * (7.0 * i as f64).sin()).collect();
    let omega: Vec<f64> = (0..g.ny).flat_map(|_| row.clone()).collect();
    let v = vec![[0.8, 0.0]; g.n_cells()];
    let dt = 0.5 * g.dx / 0.8;
    let c = 0.8 * dt / g.dx;
    let n = g.nx;
    let periodic: Vec<f64> = (0..n).map(|i| row[i] - c * (row[i] - row[(i + n - 1) % n])).collect();
    let b_in = 0.3;
    let bounded: Vec<f64> = (0..n)
        .map(|i| {
            let west = if i == 0 { b_in } else { row[i - 1] };
            row[i] - c * (row[i] - west)
        })
        .collect();
    let (p, _) = advance(FluxModel::MeanField, &g, &omega, &v, 0.0, Closure::Periodic, dt);
    let b = vec![b_in; g.n_faces()];
    let (q, _) = advance(FluxModel::MeanField, &g, &omega, &v, 0.0, Closure::Robin { b: &b, m: 0.8 }, dt);
    let mut worst: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..n {
            worst = worst.max((p[j * n + i] - periodic[i]).abs());
            worst = worst.max((q[j * n + i] - bounded[i]).abs());
        }
    }
    report(
        out,
        "1D upwind oracle",
        worst <= 1e-14,
        format!("max cell difference {worst:.2e} (<= 1e-14), periodic and inflow strips"),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut out = Vec::new();
    elliptic_convergence(&mut out);
    let ks = max_principle(&mut out);
    sweep_criteria(&mut out);
    entropy_inequality(&mut out, ks.as_ref());
    kinetic_identities(&mut out);
    conservation(&mut out);
    upwind_oracle(&mut out);
    let failed: Vec<&str> = out.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    println!(
        "{} of {} criteria passed in {:.1} s",
        out.len() - failed.len(),
        out.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for o in out.iter().filter(|o| !o.pass) {
            eprintln!("failed: {} ({})", o.name, o.detail);
        }
        ExitCode::FAILURE
    }
}
