//! Space-time quadrature of the weak entropy inequalities over a stored
//! trajectory.
//!
//! For a level `ξ` and a test function `φ >= 0` with `φ(T) = 0` the Kruzkov
//! residual is
//!
//! ```text
//! ∫∫ |ω-ξ| φ_t + sign(ω-ξ) [(g(ω)-g(ξ)) v·∇φ + g(ξ)(h-ω) φ]
//!   + ∫ |ω₀-ξ| φ(0) + M_T ∫∫_Γ |b-ξ| φ
//! ```
//!
//! with `M_T = K ||v||_{L∞(Ω_T)}`. The viscous balances for the plus and
//! minus parts use the per-time `M(t)` and subtract `ν ∫∫ η'(ω) ∇ω·∇φ`.
//!
//! Time integrals use the trapezoid rule on the snapshot times, except the
//! `η φ_t` term, which is summed by parts so that a constant `η` reproduces
//! `-η φ(0)` exactly. Space integrals use the cell (face) midpoint rule.
//!
//! Every term is linear in per-cell weights once the cell sets
//! `{ω < ξ}`, `{ω = ξ}`, `{ω > ξ}` are known, so all levels are evaluated
//! from one sort of the (snapshot, cell) values and prefix sums.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::{EntropyKind, FluxModel};
use crate::geometry::Grid;
use crate::kinetic::trapezoid_weights;
use crate::trajectory::{Frame, Trajectory};
use crate::transport::{energy_rhs, gradient_energy};

/// Absolute slack added to every tolerance to absorb summation roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// `S(u) = 6u⁵ - 15u⁴ + 10u³`, the C² step from 0 to 1 on `[0, 1]`.
#[inline]
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

#[inline]
fn smoothstep_prime(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// `β(s) = 1 - S(|s|)` on `|s| < 1`, zero outside.
#[inline]
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep(s.abs())
    }
}

#[inline]
fn bump_prime(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -smoothstep_prime(s.abs()) * s.signum()
    }
}

/// Nonnegative test function, separable as `amplitude · τ(t) · σ(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// Tensor product of quintic bumps centred at `(t, x, y)` with radii
    /// `(r_t, r_x, r_y)`.
    Bump {
        id: usize,
        center: [f64; 3],
        radii: [f64; 3],
        amplitude: f64,
    },
    /// `1` in space; in time `1` up to `t_end - eps`, then a C² descent to
    /// `0` at `t_end`.
    Ramp { id: usize, t_end: f64, eps: f64 },
}

impl TestFunction {
    pub fn bump(id: usize, center: [f64; 3], radii: [f64; 3]) -> TestFunction {
        TestFunction::Bump {
            id,
            center,
            radii,
            amplitude: 1.0,
        }
    }

    pub fn id(&self) -> usize {
        match *self {
            TestFunction::Bump { id, .. } | TestFunction::Ramp { id, .. } => id,
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            TestFunction::Bump { amplitude, .. } => amplitude,
            TestFunction::Ramp { .. } => 1.0,
        }
    }

    /// Time factor `τ(t)`.
    pub fn time_factor(&self, t: f64) -> f64 {
        match *self {
            TestFunction::Bump { center, radii, .. } => bump((t - center[0]) / radii[0]),
            TestFunction::Ramp { t_end, eps, .. } => 1.0 - smoothstep((t - (t_end - eps)) / eps),
        }
    }

    pub fn time_factor_prime(&self, t: f64) -> f64 {
        match *self {
            TestFunction::Bump { center, radii, .. } => bump_prime((t - center[0]) / radii[0]) / radii[0],
            TestFunction::Ramp { t_end, eps, .. } => -smoothstep_prime((t - (t_end - eps)) / eps) / eps,
        }
    }

    /// Space factor `σ(x, y)` and its gradient.
    pub fn space_factor(&self, x: f64, y: f64) -> (f64, [f64; 2]) {
        match *self {
            TestFunction::Bump { center, radii, .. } => {
                let (sx, sy) = ((x - center[1]) / radii[1], (y - center[2]) / radii[2]);
                let (bx, by) = (bump(sx), bump(sy));
                (
                    bx * by,
                    [bump_prime(sx) / radii[1] * by, bx * bump_prime(sy) / radii[2]],
                )
            }
            TestFunction::Ramp { .. } => (1.0, [0.0, 0.0]),
        }
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        self.amplitude() * self.time_factor(t) * self.space_factor(x, y).0
    }

    /// `(φ_t, φ_x, φ_y)`.
    pub fn derivatives(&self, t: f64, x: f64, y: f64) -> [f64; 3] {
        let a = self.amplitude();
        let (s, ds) = self.space_factor(x, y);
        let tau = self.time_factor(t);
        [
            a * self.time_factor_prime(t) * s,
            a * tau * ds[0],
            a * tau * ds[1],
        ]
    }

    /// Support must end by `t_final` and be centred in the closed domain.
    pub fn validate(&self, t_final: f64, grid: &Grid) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTestFunction(msg));
        match *self {
            TestFunction::Bump {
                id, center, radii, amplitude,
            } => {
                if radii.iter().any(|r| !(*r > 0.0)) || !(amplitude >= 0.0) {
                    return bad(format!("function {id}: radii must be positive and amplitude nonnegative"));
                }
                if center[0] < 0.0 || center[0] + radii[0] > t_final * (1.0 + 1e-12) {
                    return bad(format!(
                        "function {id}: time support [{}, {}] leaves [0, {t_final}]",
                        center[0] - radii[0],
                        center[0] + radii[0]
                    ));
                }
                let tol = 1e-12 * grid.lx.max(grid.ly);
                if center[1] < -tol || center[1] > grid.lx + tol || center[2] < -tol || center[2] > grid.ly + tol {
                    return bad(format!("function {id}: centre ({}, {}) outside the domain", center[1], center[2]));
                }
            }
            TestFunction::Ramp { id, t_end, eps } => {
                if !(eps > 0.0) || t_end > t_final * (1.0 + 1e-12) || t_end - eps < 0.0 {
                    return bad(format!("function {id}: ramp [{}, {t_end}] outside [0, {t_final}]", t_end - eps));
                }
            }
        }
        Ok(())
    }
}

/// The 54-member family: centres on `{0, T/4, T/2} × {0, lx/2, lx} ×
/// {0, ly/2, ly}` with all radii a quarter or a half of the extents.
pub fn test_function_family(t_final: f64, lx: f64, ly: f64) -> Vec<TestFunction> {
    let mut out = Vec::with_capacity(54);
    for r in [0.25, 0.5] {
        for t0 in [0.0, 0.25 * t_final, 0.5 * t_final] {
            for x0 in [0.0, 0.5 * lx, lx] {
                for y0 in [0.0, 0.5 * ly, ly] {
                    out.push(TestFunction::bump(
                        out.len(),
                        [t0, x0, y0],
                        [r * t_final, r * lx, r * ly],
                    ));
                }
            }
        }
    }
    out
}

/// The separate pieces of one entropy pairing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EntropyTerms {
    /// `∫∫ η φ_t + q v·∇φ`
    pub transport: f64,
    /// `∫∫ (g η' - q)(h - ω) φ`
    pub coupling: f64,
    /// `∫ η(ω₀) φ(0)`
    pub initial: f64,
    /// `∫∫_Γ M(t) η(b) φ`
    pub boundary_local: f64,
    /// `M_T ∫∫_Γ η(b) φ`
    pub boundary_global: f64,
    /// `ν ∫∫ η' ∇ω·∇φ`
    pub viscous: f64,
}

impl EntropyTerms {
    /// Left side of the limit inequality (global `M`, no viscous term).
    pub fn kruzkov(&self) -> f64 {
        self.transport + self.coupling + self.initial + self.boundary_global
    }

    /// Left side of the viscous balance, an estimate of the defect measure
    /// paired with `φ`.
    pub fn balance(&self) -> f64 {
        self.transport + self.coupling + self.initial + self.boundary_local - self.viscous
    }
}

/// Terms for the full, plus-part and minus-part entropies at one level.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LevelTerms {
    pub full: EntropyTerms,
    pub plus: EntropyTerms,
    pub minus: EntropyTerms,
}

impl LevelTerms {
    pub fn get(&self, kind: EntropyKind) -> &EntropyTerms {
        match kind {
            EntropyKind::Full => &self.full,
            EntropyKind::PlusPart => &self.plus,
            EntropyKind::MinusPart => &self.minus,
        }
    }
}

/// Weighted values sorted by key, with prefix sums of `C` channels.
struct Sorted<const C: usize> {
    keys: Vec<f64>,
    prefix: Vec<[f64; C]>,
}

impl<const C: usize> Sorted<C> {
    fn new(mut entries: Vec<(f64, [f64; C])>) -> Self {
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(entries.len() + 1);
        let mut acc = [0.0; C];
        prefix.push(acc);
        for (_, w) in &entries {
            for c in 0..C {
                acc[c] += w[c];
            }
            prefix.push(acc);
        }
        Sorted {
            keys: entries.into_iter().map(|e| e.0).collect(),
            prefix,
        }
    }

    /// Channel sums over `{key < ξ}`, `{key = ξ}` and `{key > ξ}`.
    fn split(&self, xi: f64) -> ([f64; C], [f64; C], [f64; C]) {
        let lo = self.keys.partition_point(|&k| k < xi);
        let hi = self.keys.partition_point(|&k| k <= xi);
        let n = self.keys.len();
        let diff = |i: usize, j: usize| {
            let mut d = [0.0; C];
            for c in 0..C {
                d[c] = self.prefix[j][c] - self.prefix[i][c];
            }
            d
        };
        (diff(0, lo), diff(lo, hi), diff(hi, n))
    }
}

/// Precomputed per-snapshot boundary data and quadrature weights.
pub struct AuditContext<'a> {
    pub traj: &'a Trajectory,
    pub frames: Vec<Frame>,
    pub times: Vec<f64>,
    /// Trapezoid weights in time.
    pub weights: Vec<f64>,
    /// `K ||v||_∞` over all snapshots.
    pub m_global: f64,
    has_gradients: bool,
}

impl<'a> AuditContext<'a> {
    pub fn new(traj: &'a Trajectory) -> Result<AuditContext<'a>> {
        if traj.len() < 2 {
            return Err(Error::InsufficientSnapshots(format!(
                "audit needs at least 2 snapshots, trajectory has {}",
                traj.len()
            )));
        }
        let frames = traj.frames();
        let times = traj.times();
        let weights = trapezoid_weights(&times);
        let m_global = frames.iter().fold(0.0f64, |m, f| m.max(f.m));
        Ok(AuditContext {
            traj,
            frames,
            times,
            weights,
            m_global,
            has_gradients: traj.require_gradients().is_ok(),
        })
    }

    /// Largest spacing between snapshots.
    pub fn dt(&self) -> f64 {
        self.times.windows(2).fold(0.0, |m, w| m.max(w[1] - w[0]))
    }

    pub fn dx(&self) -> f64 {
        self.traj.grid.min_spacing()
    }

    fn telescoping_weight(&self, phi: &TestFunction, n: usize) -> f64 {
        let last = self.times.len() - 1;
        let tau = |k: usize| phi.time_factor(self.times[k]);
        if n == 0 {
            0.5 * (tau(1) - tau(0))
        } else if n == last {
            0.5 * (tau(last) - tau(last - 1))
        } else {
            0.5 * (tau(n + 1) - tau(n - 1))
        }
    }

    /// Every entropy term of `φ` at each level.
    pub fn level_terms(&self, phi: &TestFunction, levels: &[f64]) -> Result<Vec<LevelTerms>> {
        let traj = self.traj;
        let g = &traj.grid;
        phi.validate(traj.t_final(), g)?;
        let model = traj.model;
        let area = g.cell_area();
        let amp = phi.amplitude();
        let spatial: Vec<(usize, f64, [f64; 2])> = (0..g.n_cells())
            .filter_map(|c| {
                let [x, y] = g.cell_center(c);
                let (s, ds) = phi.space_factor(x, y);
                (s != 0.0 || ds != [0.0, 0.0]).then_some((c, s, ds))
            })
            .collect();

        let mut cells: Vec<(f64, [f64; 8])> = Vec::new();
        let mut faces: Vec<(f64, [f64; 4])> = Vec::new();
        for (n, snap) in traj.snapshots.iter().enumerate() {
            let tau = phi.time_factor(snap.t);
            let tele = self.telescoping_weight(phi, n);
            let init = if n == 0 { tau } else { 0.0 };
            let w = self.weights[n];
            let frame = &self.frames[n];
            for &(c, s, ds) in &spatial {
                let om = snap.omega[c];
                let gw = model.g(om);
                let v = frame.v.values[c];
                let wt = amp * area * s * tele;
                let wi = amp * area * s * init;
                let wq = amp * area * w * tau * (v[0] * ds[0] + v[1] * ds[1]);
                let wc = amp * area * w * tau * s * (snap.h[c] - om);
                let wv = match &snap.grad {
                    Some(gr) if self.has_gradients => {
                        traj.nu * amp * area * w * tau * (gr[c][0] * ds[0] + gr[c][1] * ds[1])
                    }
                    _ => 0.0,
                };
                let ch = [wt, om * wt, wi, om * wi, wq, gw * wq, wc, wv];
                if ch.iter().any(|&x| x != 0.0) {
                    cells.push((om, ch));
                }
            }
            if tau != 0.0 {
                for (k, face) in g.boundary_faces().iter().enumerate() {
                    let (s, _) = phi.space_factor(face.midpoint[0], face.midpoint[1]);
                    if s == 0.0 {
                        continue;
                    }
                    let base = amp * face.area * w * tau * s;
                    let (wg, wl) = (self.m_global * base, frame.m * base);
                    let b = frame.b[k];
                    faces.push((b, [wg, b * wg, wl, b * wl]));
                }
            }
        }
        let cells = Sorted::new(cells);
        let faces = Sorted::new(faces);
        Ok(levels
            .iter()
            .map(|&xi| combine(model, xi, &cells, &faces))
            .collect())
    }
}

fn combine(model: FluxModel, xi: f64, cells: &Sorted<8>, faces: &Sorted<4>) -> LevelTerms {
    let gxi = model.g(xi);
    let (b, e, a) = cells.split(xi);
    let (fb, _, fa) = faces.split(xi);

    let eta_above = |w: usize| a[w + 1] - xi * a[w];
    let eta_below = |w: usize| xi * b[w] - b[w + 1];
    let q_above = a[5] - gxi * a[4];
    let q_below = b[5] - gxi * b[4];
    let bd_above = |w: usize| fa[w + 1] - xi * fa[w];
    let bd_below = |w: usize| xi * fb[w] - fb[w + 1];

    let plus = EntropyTerms {
        transport: eta_above(0) + q_above,
        coupling: gxi * a[6],
        initial: eta_above(2),
        boundary_local: bd_above(2),
        boundary_global: bd_above(0),
        viscous: a[7],
    };
    let minus = EntropyTerms {
        transport: eta_below(0) - q_below,
        coupling: -gxi * (b[6] + e[6]),
        initial: eta_below(2),
        boundary_local: bd_below(2),
        boundary_global: bd_below(0),
        viscous: -(b[7] + e[7]),
    };
    let full = EntropyTerms {
        transport: eta_above(0) + eta_below(0) + q_above - q_below,
        coupling: gxi * (a[6] - b[6]),
        initial: eta_above(2) + eta_below(2),
        boundary_local: bd_above(2) + bd_below(2),
        boundary_global: bd_above(0) + bd_below(0),
        viscous: a[7] - b[7],
    };
    LevelTerms { full, plus, minus }
}

/// Signed residual of the limit entropy inequality at `(ξ, φ)`.
pub fn kruzkov_residual(traj: &Trajectory, xi: f64, phi: &TestFunction) -> Result<f64> {
    let ctx = AuditContext::new(traj)?;
    Ok(ctx.level_terms(phi, &[xi])?[0].full.kruzkov())
}

/// Left side of the viscous balance for `|ω - ξ|₊` or `|ω - ξ|₋`, an
/// estimate of the nonnegative defect measure paired with `φ`.
pub fn viscous_entropy_balance(
    traj: &Trajectory,
    xi: f64,
    phi: &TestFunction,
    part: EntropyKind,
) -> Result<f64> {
    if traj.nu > 0.0 {
        traj.require_gradients()?;
    }
    let ctx = AuditContext::new(traj)?;
    Ok(ctx.level_terms(phi, &[xi])?[0].get(part).balance())
}

/// Both sides of the total defect bound at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureBound {
    pub xi: f64,
    /// Plus-part balance with `φ ≈ 1`.
    pub lhs: f64,
    /// `∫ |ω₀ - ξ|₊ + ∫∫_Γ M(t) |b - ξ|₊ + C g(ξ)`.
    pub rhs: f64,
    /// `lhs` minus the data terms of `rhs`; at most `C g(ξ)`.
    pub excess: f64,
    pub g_xi: f64,
}

impl MeasureBound {
    pub fn pass(&self, tolerance: f64) -> bool {
        self.lhs <= self.rhs + tolerance
    }
}

fn ramp(traj: &Trajectory, eps: f64) -> TestFunction {
    TestFunction::Ramp {
        id: usize::MAX,
        t_end: traj.t_final(),
        eps,
    }
}

/// Measure bound at each level, with `φ = 1` ramped to zero over the last
/// `eps` of the run and the constant `c` in front of `g(ξ)`.
pub fn measure_bounds(traj: &Trajectory, levels: &[f64], c: f64, eps: f64) -> Result<Vec<MeasureBound>> {
    let ctx = AuditContext::new(traj)?;
    let terms = ctx.level_terms(&ramp(traj, eps), levels)?;
    Ok(levels
        .iter()
        .zip(terms)
        .map(|(&xi, t)| {
            let p = t.plus;
            let lhs = p.balance();
            let data = p.initial + p.boundary_local;
            let g_xi = traj.model.g(xi);
            MeasureBound {
                xi,
                lhs,
                rhs: data + c * g_xi,
                excess: lhs - data,
                g_xi,
            }
        })
        .collect())
}

pub fn measure_bound_check(traj: &Trajectory, xi: f64, c: f64, eps: f64) -> Result<(f64, f64)> {
    let m = measure_bounds(traj, &[xi], c, eps)?[0];
    Ok((m.lhs, m.rhs))
}

/// Twice the largest `excess / g(ξ)` over levels with `g(ξ) > 0`, at least 0.
pub fn calibrate_measure_constant(traj: &Trajectory, levels: &[f64], eps: f64) -> Result<f64> {
    let bounds = measure_bounds(traj, levels, 0.0, eps)?;
    Ok(bounds
        .iter()
        .filter(|b| b.g_xi > 0.0)
        .fold(0.0f64, |c, b| c.max(2.0 * b.excess / b.g_xi)))
}

/// Linear tolerance model `C₁ dx + C₂ dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c1: f64,
    pub c2: f64,
}

impl Calibration {
    /// `C₁ = C₂ = 2 max(0, -min residual) / (dx + dt)` on a baseline.
    pub fn from_report(report: &ResidualReport) -> Calibration {
        let c = 2.0 * (-report.min_residual).max(0.0) / (report.dx + report.dt);
        Calibration { c1: c, c2: c }
    }

    pub fn tolerance(&self, dx: f64, dt: f64) -> f64 {
        self.c1 * dx + self.c2 * dt + ROUNDOFF_FLOOR
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub xi: f64,
    pub phi_id: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    pub min_residual: f64,
    pub argmin: (f64, usize),
    pub dx: f64,
    pub dt: f64,
    pub tolerance: f64,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.residual.is_finite()) && self.min_residual >= -self.tolerance
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{}",
                    r.xi,
                    r.phi_id,
                    r.residual,
                    u8::from(r.residual >= -self.tolerance)
                )
            })
            .collect()
    }
}

/// Kruzkov residuals over every `(ξ, φ)` pair. Without a calibration the
/// tolerance is the roundoff floor alone.
pub fn audit(
    traj: &Trajectory,
    levels: &[f64],
    family: &[TestFunction],
    calibration: Option<Calibration>,
) -> Result<ResidualReport> {
    let ctx = AuditContext::new(traj)?;
    let per_phi: Vec<Vec<LevelTerms>> = family
        .par_iter()
        .map(|phi| ctx.level_terms(phi, levels))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(levels.len() * family.len());
    for (phi, terms) in family.iter().zip(&per_phi) {
        for (&xi, t) in levels.iter().zip(terms) {
            rows.push(ResidualRow {
                xi,
                phi_id: phi.id(),
                residual: t.full.kruzkov(),
            });
        }
    }
    let worst = rows
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .copied()
        .unwrap_or(ResidualRow {
            xi: 0.0,
            phi_id: 0,
            residual: 0.0,
        });
    let (dx, dt) = (ctx.dx(), ctx.dt());
    Ok(ResidualReport {
        rows,
        min_residual: worst.residual,
        argmin: (worst.xi, worst.phi_id),
        dx,
        dt,
        tolerance: calibration.map_or(ROUNDOFF_FLOOR, |c| c.tolerance(dx, dt)),
    })
}

/// Per-run bound quantities from the stored snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMonitors {
    pub sup_abs: f64,
    /// `sqrt(ν ∫∫ |∇ω|²)` by the trapezoid rule over snapshots.
    pub energy_bound: f64,
    /// `(t_mid, residual)` of the `ω²` balance between consecutive snapshots.
    pub energy_residual: Vec<(f64, f64)>,
}

pub fn bound_monitors(traj: &Trajectory) -> Result<BoundMonitors> {
    let ctx = AuditContext::new(traj)?;
    let g = &traj.grid;
    let grad_sq: Vec<f64> = traj.snapshots.iter().map(|s| gradient_energy(g, &s.omega)).collect();
    let energy: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| s.omega.iter().map(|w| w * w).sum::<f64>() * g.cell_area())
        .collect();
    let rate: Vec<f64> = traj
        .snapshots
        .iter()
        .zip(&ctx.frames)
        .zip(&grad_sq)
        .map(|((s, f), gs)| {
            energy_rhs(traj.model, g, &s.omega, &s.h, &f.v.values, traj.nu, &f.b, f.m) - 2.0 * traj.nu * gs
        })
        .collect();
    let integral: f64 = ctx.weights.iter().zip(&grad_sq).map(|(w, gs)| w * gs).sum();
    let energy_residual = (0..traj.len() - 1)
        .map(|n| {
            let dt = ctx.times[n + 1] - ctx.times[n];
            (
                0.5 * (ctx.times[n] + ctx.times[n + 1]),
                (energy[n + 1] - energy[n]) / dt - 0.5 * (rate[n] + rate[n + 1]),
            )
        })
        .collect();
    Ok(BoundMonitors {
        sup_abs: traj.sup_abs(),
        energy_bound: (traj.nu * integral).sqrt(),
        energy_residual,
    })
}
