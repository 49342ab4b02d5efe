//! Kinetic description of a trajectory: the indicator `f = 1{ω > ξ}` on a
//! uniform level grid, its moments, the defect `F = f(1 - f)`, and the
//! finite-window trace averages `f⁰` (in time) and `f^Γ` (along normals).

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::trajectory::Trajectory;

/// Uniform level grid; level `k` is the midpoint `xi_min + (k + 1/2) Δξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticGrid {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_xi: usize,
    /// Bound `R` on `|ω|` that the grid was built for.
    pub r: f64,
}

impl KineticGrid {
    pub fn new(xi_min: f64, xi_max: f64, n_xi: usize, r: f64) -> Result<KineticGrid> {
        if !(xi_min < xi_max) || n_xi < 8 || !xi_min.is_finite() || !xi_max.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "level grid needs xi_min < xi_max and at least 8 levels, got [{xi_min}, {xi_max}] with {n_xi}"
            )));
        }
        Ok(KineticGrid {
            xi_min,
            xi_max,
            n_xi,
            r,
        })
    }

    /// Symmetric grid on `[-R - 1, R + 1]`. With an even level count zero is
    /// a bin edge, so both reconstruction integrals are resolved exactly.
    pub fn for_bound(r: f64, n_xi: usize) -> Result<KineticGrid> {
        KineticGrid::new(-r - 1.0, r + 1.0, n_xi, r)
    }

    #[inline]
    pub fn dxi(&self) -> f64 {
        (self.xi_max - self.xi_min) / self.n_xi as f64
    }

    #[inline]
    pub fn level(&self, k: usize) -> f64 {
        self.xi_min + (k as f64 + 0.5) * self.dxi()
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.n_xi).map(|k| self.level(k)).collect()
    }
}

/// `1` if `ω > ξ`, `0` if `ω <= ξ`.
#[inline]
pub fn chi(omega: f64, xi: f64) -> f64 {
    if omega > xi {
        1.0
    } else {
        0.0
    }
}

/// Values of a kinetic function on (cell, level), cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticSlice {
    pub grid: KineticGrid,
    pub n_cells: usize,
    pub f: Vec<f64>,
}

impl KineticSlice {
    pub fn from_field(grid: KineticGrid, omega: &[f64]) -> KineticSlice {
        let levels = grid.levels();
        let f = omega
            .iter()
            .flat_map(|&w| levels.iter().map(move |&xi| chi(w, xi)))
            .collect();
        KineticSlice {
            grid,
            n_cells: omega.len(),
            f,
        }
    }

    pub fn from_values(grid: KineticGrid, n_cells: usize, f: Vec<f64>) -> Result<KineticSlice> {
        if f.len() != n_cells * grid.n_xi {
            return Err(Error::FieldSize {
                expected: n_cells * grid.n_xi,
                got: f.len(),
            });
        }
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::ConfigInvalid(
                "kinetic values must lie in [0, 1]".to_string(),
            ));
        }
        Ok(KineticSlice { grid, n_cells, f })
    }

    #[inline]
    pub fn at(&self, cell: usize, k: usize) -> f64 {
        self.f[cell * self.grid.n_xi + k]
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        let n = self.grid.n_xi;
        &self.f[cell * n..(cell + 1) * n]
    }

    /// `∫_0^∞ f dξ - ∫_{-∞}^0 (1 - f) dξ` by the midpoint rule, with `f = 0`
    /// above and `f = 1` below the level range.
    pub fn reconstruct_omega(&self, cell: usize) -> f64 {
        let g = &self.grid;
        let d = g.dxi();
        self.cell(cell)
            .iter()
            .enumerate()
            .map(|(k, &fk)| {
                let lo = g.xi_min + k as f64 * d;
                let hi = lo + d;
                let pos = (hi - lo.max(0.0)).max(0.0);
                let neg = (hi.min(0.0) - lo).max(0.0);
                fk * pos - (1.0 - fk) * neg
            })
            .sum()
    }

    /// `ρ(ξ_k) = ξ_k f(ξ_k) + ∫_{ξ_k}^∞ f ds`, the tail by the midpoint rule
    /// with half of the own bin.
    pub fn rho(&self, k: usize, cell: usize) -> f64 {
        let d = self.grid.dxi();
        let fc = self.cell(cell);
        let tail: f64 = fc[k + 1..].iter().sum::<f64>() * d + 0.5 * fc[k] * d;
        self.grid.level(k) * fc[k] + tail
    }

    /// `F = f (1 - f)` elementwise.
    pub fn defect(&self) -> Vec<f64> {
        self.f.iter().map(|v| v * (1.0 - v)).collect()
    }

    /// `max (|ρ - ω f| - 2R f(1 - f) - Δξ)` over all cells and levels.
    pub fn rho_bound_check(&self, omega: &[f64]) -> f64 {
        let g = &self.grid;
        let d = g.dxi();
        let mut worst = f64::NEG_INFINITY;
        for (cell, &w) in omega.iter().enumerate().take(self.n_cells) {
            let fc = self.cell(cell);
            // Running tail sum from the top level down.
            let mut above = 0.0;
            for k in (0..g.n_xi).rev() {
                let f = fc[k];
                let rho = g.level(k) * f + above * d + 0.5 * f * d;
                let v = (rho - w * f).abs() - 2.0 * g.r * f * (1.0 - f) - d;
                worst = worst.max(v);
                above += f;
            }
        }
        worst
    }

    /// `f` nonincreasing across levels in every cell.
    pub fn is_monotone(&self) -> bool {
        (0..self.n_cells).all(|c| self.cell(c).windows(2).all(|w| w[1] <= w[0]))
    }

    /// `f = 0` on levels above `R` and `f = 1` below `-R`.
    pub fn respects_support(&self) -> bool {
        let g = &self.grid;
        (0..self.n_cells).all(|c| {
            self.cell(c).iter().enumerate().all(|(k, &f)| {
                let xi = g.level(k);
                (xi <= g.r || f == 0.0) && (xi >= -g.r || f == 1.0)
            })
        })
    }

    /// `∫ (f - f²) dξ dx`.
    pub fn interior_functional(&self, cell_area: f64) -> f64 {
        self.f.iter().map(|v| v - v * v).sum::<f64>() * self.grid.dxi() * cell_area
    }

    /// `∫ F dx` at each level.
    pub fn defect_by_level(&self, cell_area: f64) -> Vec<f64> {
        let n = self.grid.n_xi;
        let mut out = vec![0.0; n];
        for c in 0..self.n_cells {
            for (o, v) in out.iter_mut().zip(self.cell(c)) {
                *o += v * (1.0 - v) * cell_area;
            }
        }
        out
    }
}

/// Trapezoid weights of the sample times normalised by the covered span.
fn window_weights(times: &[f64]) -> Vec<f64> {
    let span = times[times.len() - 1] - times[0];
    let mut w = vec![0.0; times.len()];
    for k in 0..times.len() - 1 {
        let h = 0.5 * (times[k + 1] - times[k]) / span;
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// `f⁰ ≈ (1/ε) ∫_0^ε f dt` by the trapezoid rule over the snapshots with
/// `t <= ε`, normalised by the time those snapshots cover.
pub fn trace_time_average(traj: &Trajectory, grid: KineticGrid, eps: f64) -> Result<KineticSlice> {
    let inside: Vec<usize> = (0..traj.len())
        .filter(|&k| traj.snapshots[k].t <= eps * (1.0 + 1e-12))
        .collect();
    if inside.len() < 2 {
        return Err(Error::InsufficientSnapshots(format!(
            "window [0, {eps}] holds {} snapshot(s), need at least 2",
            inside.len()
        )));
    }
    let times: Vec<f64> = inside.iter().map(|&k| traj.snapshots[k].t).collect();
    let weights = window_weights(&times);
    let n_cells = traj.grid.n_cells();
    let levels = grid.levels();
    let mut f = vec![0.0; n_cells * grid.n_xi];
    for (&k, &w) in inside.iter().zip(&weights) {
        let omega = &traj.snapshots[k].omega;
        for (c, &wc) in omega.iter().enumerate() {
            let row = &mut f[c * grid.n_xi..(c + 1) * grid.n_xi];
            for (fv, &xi) in row.iter_mut().zip(&levels) {
                *fv += w * chi(wc, xi);
            }
        }
    }
    for v in &mut f {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(KineticSlice { grid, n_cells, f })
}

/// `f^Γ(ξ, t, x) ≈ (1/ε) ∫_0^ε f(ξ, t, x - s n) ds` for every snapshot and
/// boundary face, integrating the cell-wise constant field along the inward
/// normal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub grid: KineticGrid,
    pub eps: f64,
    pub n_snapshots: usize,
    pub n_faces: usize,
    /// Indexed `[(snapshot * n_faces + face) * n_xi + level]`.
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    #[inline]
    pub fn at(&self, snapshot: usize, face: usize, k: usize) -> f64 {
        self.values[(snapshot * self.n_faces + face) * self.grid.n_xi + k]
    }

    pub fn face(&self, snapshot: usize, face: usize) -> &[f64] {
        let n = self.grid.n_xi;
        let start = (snapshot * self.n_faces + face) * n;
        &self.values[start..start + n]
    }
}

pub fn trace_boundary_average(traj: &Trajectory, grid: KineticGrid, eps: f64) -> Result<BoundaryTrace> {
    let g = &traj.grid;
    if eps > g.half_width() {
        return Err(Error::DepthTooLarge {
            depth: eps,
            half_width: g.half_width(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::ConfigInvalid(format!("trace depth {eps} must be positive")));
    }
    let n_xi = grid.n_xi;
    let levels = grid.levels();
    let n_faces = g.n_faces();
    let mut values = vec![0.0; traj.len() * n_faces * n_xi];
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (s, snap) in traj.snapshots.iter().enumerate() {
        for (fi, face) in g.boundary_faces().iter().enumerate() {
            let d = g.normal_spacing(face.side);
            samples.clear();
            let mut j = 0;
            while (j as f64) * d < eps {
                let Some(cell) = g.inward_cell(face, j) else { break };
                let overlap = (((j + 1) as f64) * d).min(eps) - j as f64 * d;
                samples.push((snap.omega[cell], overlap / eps));
                j += 1;
            }
            // Sweep levels upward while dropping samples that fall to or below them.
            samples.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut above: f64 = samples.iter().map(|p| p.1).sum();
            let mut next = 0;
            let out = &mut values[(s * n_faces + fi) * n_xi..(s * n_faces + fi + 1) * n_xi];
            for (o, &xi) in out.iter_mut().zip(&levels) {
                while next < samples.len() && samples[next].0 <= xi {
                    above -= samples[next].1;
                    next += 1;
                }
                *o = above.clamp(0.0, 1.0);
            }
        }
    }
    Ok(BoundaryTrace {
        grid,
        eps,
        n_snapshots: traj.len(),
        n_faces,
        values,
    })
}

/// Trapezoid weights in time over the whole trajectory.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for k in 0..times.len().saturating_sub(1) {
        let h = 0.5 * (times[k + 1] - times[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// The two functionals whose vanishing forces the traces to be indicators:
/// `∫ (f⁰ - (f⁰)²) dξ dx` and `∫ |g'(ξ)(v·n)|₋ (f^Γ - (f^Γ)²) dξ dt dx`.
/// `v_dot_n[snapshot][face]` is the normal drift on each face.
pub fn trace_functionals(
    f0: &KineticSlice,
    f_gamma: &BoundaryTrace,
    model: FluxModel,
    v_dot_n: &[Vec<f64>],
    times: &[f64],
    cell_area: f64,
    face_areas: &[f64],
) -> (f64, f64) {
    let interior = f0.interior_functional(cell_area);
    let grid = &f_gamma.grid;
    let d = grid.dxi();
    let gp: Vec<f64> = grid.levels().iter().map(|&xi| model.g_prime(xi)).collect();
    let tw = trapezoid_weights(times);
    let mut boundary = 0.0;
    for (s, w) in tw.iter().enumerate().take(f_gamma.n_snapshots) {
        for (fi, area) in face_areas.iter().enumerate() {
            let vn = v_dot_n[s][fi];
            let vals = f_gamma.face(s, fi);
            let mut acc = 0.0;
            for (k, &fv) in vals.iter().enumerate() {
                let weight = (-(gp[k] * vn)).max(0.0);
                acc += weight * (fv - fv * fv);
            }
            boundary += w * area * acc * d;
        }
    }
    (interior, boundary)
}

/// Summary of the kinetic checks on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticReport {
    pub grid: KineticGrid,
    /// Largest `|reconstruct_omega - ω|` over all cells and snapshots.
    pub reconstruct_max_error: f64,
    /// Largest value of [`KineticSlice::rho_bound_check`] over snapshots.
    pub rho_bound_max: f64,
    pub monotone: bool,
    pub support: bool,
    pub eps: Vec<f64>,
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
    /// `∫ F(f⁰) dx` per level, one row per window.
    pub defect_by_level: Vec<Vec<f64>>,
}

impl KineticReport {
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = vec![
            format!("reconstruct_max_error,,,{}", self.reconstruct_max_error),
            format!("reconstruct_tolerance,,,{}", self.grid.dxi()),
            format!("rho_bound_max,,,{}", self.rho_bound_max),
            format!("monotone,,,{}", u8::from(self.monotone)),
            format!("support,,,{}", u8::from(self.support)),
        ];
        for (i, &e) in self.eps.iter().enumerate() {
            rows.push(format!("trace_interior,{e},,{}", self.interior[i]));
            rows.push(format!("trace_boundary,{e},,{}", self.boundary[i]));
            for (k, v) in self.defect_by_level[i].iter().enumerate() {
                rows.push(format!("defect_integral,{e},{},{v}", self.grid.level(k)));
            }
        }
        rows
    }
}

/// Run every kinetic check on a trajectory. The level grid covers
/// `[-R - 1, R + 1]` with `R` the observed `sup |ω|`; each window `ε` is
/// used both for `f⁰` and as the normal depth for `f^Γ` (clipped to the
/// domain half-width).
pub fn kinetic_audit(traj: &Trajectory, n_xi: usize, eps_list: &[f64]) -> Result<KineticReport> {
    if traj.is_empty() {
        return Err(Error::InsufficientSnapshots("empty trajectory".to_string()));
    }
    let grid = KineticGrid::for_bound(traj.sup_abs(), n_xi)?;
    let mut reconstruct_max_error: f64 = 0.0;
    let mut rho_bound_max = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut support = true;
    for snap in &traj.snapshots {
        let slice = KineticSlice::from_field(grid, &snap.omega);
        for (c, &w) in snap.omega.iter().enumerate() {
            reconstruct_max_error = reconstruct_max_error.max((slice.reconstruct_omega(c) - w).abs());
        }
        rho_bound_max = rho_bound_max.max(slice.rho_bound_check(&snap.omega));
        monotone &= slice.is_monotone();
        support &= slice.respects_support();
    }

    let g = &traj.grid;
    let frames = traj.frames();
    let v_dot_n: Vec<Vec<f64>> = frames
        .iter()
        .map(|fr| {
            g.boundary_faces()
                .iter()
                .map(|f| {
                    let v = fr.v.values[f.cell];
                    v[0] * f.normal[0] + v[1] * f.normal[1]
                })
                .collect()
        })
        .collect();
    let face_areas: Vec<f64> = g.boundary_faces().iter().map(|f| f.area).collect();
    let times = traj.times();

    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut defect_by_level = Vec::new();
    for &eps in eps_list {
        let f0 = trace_time_average(traj, grid, eps)?;
        let depth = eps.min(g.half_width());
        let fg = trace_boundary_average(traj, grid, depth)?;
        let (i, b) = trace_functionals(&f0, &fg, traj.model, &v_dot_n, &times, g.cell_area(), &face_areas);
        interior.push(i);
        boundary.push(b);
        defect_by_level.push(f0.defect_by_level(g.cell_area()));
    }
    Ok(KineticReport {
        grid,
        reconstruct_max_error,
        rho_bound_max,
        monotone,
        support,
        eps: eps_list.to_vec(),
        interior,
        boundary,
        defect_by_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryData;
    use crate::geometry::Grid;
    use crate::trajectory::Snapshot;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn traj_from(grid: Arc<Grid>, fields: Vec<(f64, Vec<f64>)>) -> Trajectory {
        let n = grid.n_cells();
        Trajectory {
            grid,
            model: FluxModel::MeanField,
            nu: 0.1,
            boundary: BoundaryData::default(),
            snapshots: fields
                .into_iter()
                .map(|(t, omega)| Snapshot {
                    t,
                    omega,
                    h: vec![0.0; n],
                    grad: None,
                })
                .collect(),
        }
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(0.5, 0.0), 1.0);
        assert_eq!(chi(0.5, 0.5), 0.0);
        assert_eq!(chi(-1.0, 0.0), 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(KineticGrid::new(0.0, 1.0, 7, 0.0).is_err());
        assert!(KineticGrid::new(1.0, 1.0, 16, 0.0).is_err());
        let g = KineticGrid::for_bound(2.0, 128).unwrap();
        assert_eq!((g.xi_min, g.xi_max), (-3.0, 3.0));
        assert!((g.level(0) - (-3.0 + 0.5 * g.dxi())).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_examples() {
        let g = KineticGrid::for_bound(1.0, 200).unwrap();
        let d = g.dxi();
        assert_eq!(d, 0.02);
        let s = KineticSlice::from_field(g, &[0.0, -0.7, 1.0]);
        assert_eq!(s.reconstruct_omega(0), 0.0);
        assert!((s.reconstruct_omega(1) + 0.7).abs() <= d);
        assert!((s.reconstruct_omega(2) - 1.0).abs() <= d);
    }

    /// Direct evaluation of the two indicator integrals on a fine sub-grid.
    fn reconstruct_oracle(omega: f64, lo: f64, hi: f64) -> f64 {
        let n = 1 << 16;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|k| {
                let s = lo + (k as f64 + 0.5) * h;
                if s > 0.0 {
                    chi(omega, s) * h
                } else {
                    -(1.0 - chi(omega, s)) * h
                }
            })
            .sum()
    }

    proptest! {
        #[test]
        fn reconstruction_within_level_spacing(w in -3.0f64..3.0, n in 8usize..200) {
            let g = KineticGrid::for_bound(3.0, 2 * (n / 2)).unwrap();
            let s = KineticSlice::from_field(g, &[w]);
            prop_assert!((s.reconstruct_omega(0) - w).abs() <= g.dxi());
            prop_assert!((reconstruct_oracle(w, g.xi_min, g.xi_max) - w).abs() < 1e-3);
        }

        #[test]
        fn rho_matches_closed_form(u in -2.0f64..2.0, k in 0usize..64) {
            let g = KineticGrid::for_bound(2.0, 64).unwrap();
            let s = KineticSlice::from_field(g, &[u]);
            let xi = g.level(k);
            let closed = if xi < u { u } else { 0.0 };
            prop_assert!((s.rho(k, 0) - closed).abs() <= g.dxi());
        }
    }

    #[test]
    fn rho_example() {
        let g = KineticGrid::new(-1.0, 2.0, 300, 1.0).unwrap();
        let s = KineticSlice::from_field(g, &[1.0]);
        let k = (0..g.n_xi).find(|&k| (g.level(k) - 0.505).abs() < 1e-9).unwrap();
        assert!((s.rho(k, 0) - 1.0).abs() <= g.dxi());
        let above = (0..g.n_xi).find(|&k| g.level(k) > 1.0).unwrap();
        assert_eq!(s.rho(above, 0), 0.0);
    }

    #[test]
    fn defect_examples() {
        let g = KineticGrid::for_bound(1.0, 8).unwrap();
        let s = KineticSlice::from_values(g, 1, vec![1.0, 1.0, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.defect(), vec![0.0, 0.0, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0]);
        assert!(KineticSlice::from_values(g, 1, vec![1.5; 8]).is_err());
    }

    #[test]
    fn rho_bound_on_indicator_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let omega: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let g = KineticGrid::for_bound(1.5, 128).unwrap();
        let s = KineticSlice::from_field(g, &omega);
        assert!(s.rho_bound_check(&omega) <= 0.0);
        assert!(s.is_monotone() && s.respects_support());
        let zero = KineticSlice::from_field(g, &[0.0]);
        assert!(zero.rho_bound_check(&[0.0]) <= 0.0);
    }

    #[test]
    fn rho_bound_on_half_band() {
        // f = 1 below the band, 1/2 on a band of width w, 0 above; ω is the
        // reconstructed value so the kinetic data is self-consistent.
        let r = 1.0;
        let g = KineticGrid::for_bound(r, 160).unwrap();
        for w in [0.25, 0.5, 1.0] {
            let levels = g.levels();
            let f: Vec<f64> = levels
                .iter()
                .map(|&xi| {
                    if xi < 0.0 {
                        1.0
                    } else if xi < w {
                        0.5
                    } else {
                        0.0
                    }
                })
                .collect();
            let s = KineticSlice::from_values(g, 1, f).unwrap();
            let omega = s.reconstruct_omega(0);
            assert!(s.rho_bound_check(&[omega]) <= 0.0, "w = {w}");
        }
    }

    #[test]
    fn time_average_examples() {
        let grid = Arc::new(Grid::new(2, 2, 1.0, 1.0).unwrap());
        let kg = KineticGrid::for_bound(1.0, 8).unwrap();
        let steady = traj_from(
            grid.clone(),
            (0..5).map(|k| (0.1 * k as f64, vec![0.3; 4])).collect(),
        );
        let f0 = trace_time_average(&steady, kg, 0.4).unwrap();
        assert_eq!(f0, KineticSlice::from_field(kg, &[0.3; 4]));

        let flip = traj_from(grid.clone(), vec![(0.0, vec![0.9; 4]), (0.1, vec![-0.9; 4])]);
        let f0 = trace_time_average(&flip, kg, 0.1).unwrap();
        let k = (0..kg.n_xi).find(|&k| kg.level(k).abs() < 0.3).unwrap();
        assert_eq!(f0.at(0, k), 0.5);
        assert!(f0.is_monotone());
        assert!(matches!(
            trace_time_average(&flip, kg, 0.05),
            Err(Error::InsufficientSnapshots(_))
        ));
    }

    #[test]
    fn boundary_average_examples() {
        let grid = Arc::new(Grid::new(8, 8, 1.0, 1.0).unwrap());
        let kg = KineticGrid::for_bound(1.0, 16).unwrap();
        let constant = traj_from(grid.clone(), vec![(0.0, vec![0.4; 64])]);
        let fg = trace_boundary_average(&constant, kg, 0.25).unwrap();
        let ind = KineticSlice::from_field(kg, &[0.4]);
        for f in 0..grid.n_faces() {
            assert_eq!(fg.face(0, f), ind.cell(0));
        }
        // ω = x crosses ξ = 0.125 half way into a depth-0.25 window at x = 0.
        let linear: Vec<f64> = (0..64).map(|c| grid.cell_center(c)[0]).collect();
        let lin = traj_from(grid.clone(), vec![(0.0, linear)]);
        let kg = KineticGrid::new(0.0, 0.25, 8, 1.0).unwrap();
        let fg = trace_boundary_average(&lin, kg, 0.25).unwrap();
        let left = grid.face_index(crate::geometry::Side::Left, 3);
        let k = (0..kg.n_xi).find(|&k| (kg.level(k) - 0.140625).abs() < 1e-12).unwrap();
        assert_eq!(fg.at(0, left, k), 0.5);
        assert!(matches!(
            trace_boundary_average(&lin, kg, 0.6),
            Err(Error::DepthTooLarge { .. })
        ));
    }

    #[test]
    fn trace_functional_examples() {
        let grid = Arc::new(Grid::new(4, 4, 1.0, 1.0).unwrap());
        let kg = KineticGrid::for_bound(1.0, 8).unwrap();
        let traj = traj_from(grid.clone(), vec![(0.0, vec![0.2; 16]), (0.5, vec![0.2; 16])]);
        let f0 = trace_time_average(&traj, kg, 0.5).unwrap();
        let fg = trace_boundary_average(&traj, kg, 0.5).unwrap();
        let areas: Vec<f64> = grid.boundary_faces().iter().map(|f| f.area).collect();
        let inflow = vec![vec![-1.0; grid.n_faces()]; 2];
        let (i, b) = trace_functionals(&f0, &fg, FluxModel::MeanField, &inflow, &[0.0, 0.5], grid.cell_area(), &areas);
        assert_eq!((i, b), (0.0, 0.0));

        let half = BoundaryTrace {
            values: vec![0.5; fg.values.len()],
            ..fg.clone()
        };
        let outflow = vec![vec![0.0; grid.n_faces()]; 2];
        let (_, b) = trace_functionals(&f0, &half, FluxModel::MeanField, &outflow, &[0.0, 0.5], grid.cell_area(), &areas);
        assert_eq!(b, 0.0);
        let (_, b) = trace_functionals(&f0, &half, FluxModel::MeanField, &inflow, &[0.0, 0.5], grid.cell_area(), &areas);
        assert!(b > 0.0);
    }
}
