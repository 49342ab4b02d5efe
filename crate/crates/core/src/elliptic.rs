//! Screened Poisson solves `-Δh + h = ω`, `h = a` on the boundary, and the
//! derived drift `v = -∇h` and normal derivative `∂h/∂n`.
//!
//! The discretization is the 5-point Laplacian on cell centers. Dirichlet
//! data enters through a ghost value `2a - h_P` (linear extrapolation through
//! the face midpoint), which keeps the matrix a symmetric M-matrix. The
//! linear system is solved by preconditioned conjugate gradients, either with
//! the Jacobi preconditioner or with the exact inverse of the operator by
//! fast sine transforms (the constant-coefficient operator on a rectangle is
//! diagonalized by DST-II in each direction).

use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::geometry::{Grid, Side};

/// Chunk length for parallel reductions. Partial sums are combined in chunk
/// order, so results do not depend on the number of worker threads.
const REDUCE_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub t: f64,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, t: f64) -> Result<ScalarField> {
        if values.len() != grid.n_cells() {
            return Err(Error::FieldSize {
                expected: grid.n_cells(),
                got: values.len(),
            });
        }
        Ok(ScalarField { grid, values, t })
    }

    pub fn constant(grid: Arc<Grid>, c: f64, t: f64) -> ScalarField {
        let n = grid.n_cells();
        ScalarField {
            grid,
            values: vec![c; n],
            t,
        }
    }

    pub fn from_fn(grid: Arc<Grid>, t: f64, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = (0..grid.n_cells())
            .map(|c| {
                let [x, y] = grid.cell_center(c);
                f(x, y)
            })
            .collect();
        ScalarField { grid, values, t }
    }

    /// `Σ value * cell area`.
    pub fn mass(&self) -> f64 {
        chunked_sum(&self.values) * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn zeros(grid: Arc<Grid>) -> VectorField {
        let n = grid.n_cells();
        VectorField {
            grid,
            values: vec![[0.0; 2]; n],
        }
    }

    /// `max over cells of max(|v_x|, |v_y|)`.
    pub fn max_norm(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Jacobi,
    FastSine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `||b - A x|| <= rel_tol * ||b||`.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-10,
            max_iter: 100_000,
            preconditioner: Preconditioner::FastSine,
        }
    }
}

/// Exact inverse of the screened operator by separable sine transforms.
/// With ghost value `-h_P` the 1D second difference has eigenvectors
/// `sin(π k (i + 1/2) / n)`, `k = 1..n`, and eigenvalues `4 sin²(π k / 2n)`.
#[derive(Clone)]
struct FastSine {
    nx: usize,
    ny: usize,
    tx: Arc<dyn TransformType2And3<f64>>,
    ty: Arc<dyn TransformType2And3<f64>>,
    /// `1 / eigenvalue`, stored column-major (`ky` fastest), pre-multiplied
    /// by the DST-III normalization `(2/nx)(2/ny)`.
    inv_eig: Vec<f64>,
}

impl std::fmt::Debug for FastSine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FastSine")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl FastSine {
    fn new(grid: &Grid) -> FastSine {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut planner = DctPlanner::new();
        let tx = planner.plan_dst2(nx);
        let ty = planner.plan_dst2(ny);
        let lam = |k: usize, n: usize, d: f64| {
            let s = (std::f64::consts::PI * (k + 1) as f64 / (2.0 * n as f64)).sin();
            4.0 * s * s / (d * d)
        };
        let norm = 4.0 / (nx * ny) as f64;
        let mut inv_eig = vec![0.0; nx * ny];
        for kx in 0..nx {
            for ky in 0..ny {
                inv_eig[kx * ny + ky] = norm / (1.0 + lam(kx, nx, grid.dx) + lam(ky, ny, grid.dy));
            }
        }
        FastSine {
            nx,
            ny,
            tx,
            ty,
            inv_eig,
        }
    }

    /// `z = A^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        z.copy_from_slice(r);
        let sx = self.tx.get_scratch_len();
        let sy = self.ty.get_scratch_len();
        z.par_chunks_mut(nx)
            .for_each_init(|| vec![0.0; sx], |scr, row| self.tx.process_dst2_with_scratch(row, scr));
        let mut cols = vec![0.0; nx * ny];
        transpose(z, &mut cols, nx, ny);
        cols.par_chunks_mut(ny)
            .zip(self.inv_eig.par_chunks(ny))
            .for_each_init(
                || vec![0.0; sy],
                |scr, (col, inv)| {
                    self.ty.process_dst2_with_scratch(col, scr);
                    for (c, w) in col.iter_mut().zip(inv) {
                        *c *= w;
                    }
                    self.ty.process_dst3_with_scratch(col, scr);
                },
            );
        transpose(&cols, z, ny, nx);
        z.par_chunks_mut(nx)
            .for_each_init(|| vec![0.0; sx], |scr, row| self.tx.process_dst3_with_scratch(row, scr));
    }
}

/// `dst[i * rows + j] = src[j * cols + i]` for a `rows x cols` row-major `src`.
fn transpose(src: &[f64], dst: &mut [f64], cols: usize, rows: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(i, out)| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = src[j * cols + i];
        }
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
}

/// Matrix-free screened Poisson operator for one grid.
#[derive(Debug, Clone)]
pub struct ScreenedPoisson {
    grid: Arc<Grid>,
    diag: Vec<f64>,
    cx: f64,
    cy: f64,
    fast: FastSine,
}

impl ScreenedPoisson {
    pub fn new(grid: Arc<Grid>) -> ScreenedPoisson {
        let (nx, ny) = (grid.nx, grid.ny);
        let cx = 1.0 / (grid.dx * grid.dx);
        let cy = 1.0 / (grid.dy * grid.dy);
        let mut diag = vec![0.0; grid.n_cells()];
        for j in 0..ny {
            for i in 0..nx {
                // Boundary faces carry twice the weight because of the ghost value.
                let wx = if i == 0 { 2.0 } else { 1.0 } + if i == nx - 1 { 2.0 } else { 1.0 };
                let wy = if j == 0 { 2.0 } else { 1.0 } + if j == ny - 1 { 2.0 } else { 1.0 };
                diag[j * nx + i] = 1.0 + cx * wx + cy * wy;
            }
        }
        let fast = FastSine::new(&grid);
        ScreenedPoisson {
            grid,
            diag,
            cx,
            cy,
            fast,
        }
    }

    fn precondition(&self, kind: Preconditioner, r: &[f64], z: &mut [f64]) {
        match kind {
            Preconditioner::Jacobi => z
                .par_iter_mut()
                .zip(r.par_iter().zip(self.diag.par_iter()))
                .for_each(|(zi, (ri, d))| *zi = ri / d),
            Preconditioner::FastSine => self.fast.apply(r, z),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nx = self.grid.nx;
        let ny = self.grid.ny;
        let (cx, cy) = (self.cx, self.cy);
        let diag = &self.diag;
        y.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            let base = j * nx;
            for (i, out) in row.iter_mut().enumerate() {
                let c = base + i;
                let mut acc = diag[c] * x[c];
                if i > 0 {
                    acc -= cx * x[c - 1];
                }
                if i + 1 < nx {
                    acc -= cx * x[c + 1];
                }
                if j > 0 {
                    acc -= cy * x[c - nx];
                }
                if j + 1 < ny {
                    acc -= cy * x[c + nx];
                }
                *out = acc;
            }
        });
    }

    /// Right-hand side `ω + 2a/dx²` contributions for each boundary face.
    pub fn rhs(&self, source: &[f64], a: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut b = source.to_vec();
        for (face, &av) in g.boundary_faces().iter().zip(a) {
            let c = match face.side {
                Side::Left | Side::Right => self.cx,
                Side::Bottom | Side::Top => self.cy,
            };
            b[face.cell] += 2.0 * c * av;
        }
        b
    }

    /// Preconditioned CG on `A h = b`, starting from `guess` (or from the
    /// source itself when no guess is given, so constant states are exact).
    pub fn solve(
        &self,
        source: &[f64],
        a: &[f64],
        guess: Option<&[f64]>,
        opts: SolverOptions,
    ) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.grid.n_cells();
        if source.len() != n {
            return Err(Error::FieldSize {
                expected: n,
                got: source.len(),
            });
        }
        if a.len() != self.grid.n_faces() {
            return Err(Error::FieldSize {
                expected: self.grid.n_faces(),
                got: a.len(),
            });
        }
        let b = self.rhs(source, a);
        let b_norm = dot(&b, &b).sqrt();
        if b_norm == 0.0 {
            return Ok((
                vec![0.0; n],
                SolveStats {
                    iterations: 0,
                    residual: 0.0,
                },
            ));
        }
        let tol = opts.rel_tol * b_norm;

        let mut x: Vec<f64> = match guess {
            Some(g) => g.to_vec(),
            None => source.to_vec(),
        };
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut r_norm = dot(&r, &r).sqrt();
        if r_norm <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: 0,
                    residual: r_norm / b_norm,
                },
            ));
        }

        let mut z = vec![0.0; n];
        self.precondition(opts.preconditioner, &r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = ax;
        for it in 1..=opts.max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            x.par_iter_mut()
                .zip(r.par_iter_mut())
                .zip(p.par_iter().zip(ap.par_iter()))
                .for_each(|((xi, ri), (pi, api))| {
                    *xi += alpha * pi;
                    *ri -= alpha * api;
                });
            r_norm = dot(&r, &r).sqrt();
            if !r_norm.is_finite() {
                break;
            }
            if r_norm <= tol {
                return Ok((
                    x,
                    SolveStats {
                        iterations: it,
                        residual: r_norm / b_norm,
                    },
                ));
            }
            self.precondition(opts.preconditioner, &r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut()
                .zip(z.par_iter())
                .for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        Err(Error::SolverDiverged {
            iterations: opts.max_iter,
            residual: r_norm / b_norm,
        })
    }
}

fn chunked_sum(v: &[f64]) -> f64 {
    let partial: Vec<f64> = v
        .par_chunks(REDUCE_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partial.iter().sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn solve_screened_poisson(source: &ScalarField, a: &[f64]) -> Result<ScalarField> {
    let op = ScreenedPoisson::new(source.grid.clone());
    let (h, _) = op.solve(&source.values, a, None, SolverOptions::default())?;
    Ok(ScalarField {
        grid: source.grid.clone(),
        values: h,
        t: source.t,
    })
}

/// The background field `h_a` with zero source.
pub fn solve_background(grid: Arc<Grid>, a: &[f64], t: f64) -> Result<ScalarField> {
    let zero = ScalarField::constant(grid, 0.0, t);
    solve_screened_poisson(&zero, a)
}

/// Derivative at the middle of three points at offsets `-d/2` (face value),
/// `0` (cell) and `d` (next cell): exact for quadratics.
#[inline]
fn one_sided_derivative(face: f64, here: f64, next: f64, d: f64) -> f64 {
    (4.0 * (here - face) + (next - here)) / (3.0 * d)
}

/// Gradient of `h` per cell: central differences in the interior and the
/// one-sided second-order formula through the Dirichlet trace next to the
/// boundary.
pub fn gradient(h: &ScalarField, a: &[f64]) -> VectorField {
    let g = &h.grid;
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    let u = &h.values;
    let mut out = vec![[0.0; 2]; g.n_cells()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, grad) in row.iter_mut().enumerate() {
            let c = j * nx + i;
            let gx = if i == 0 {
                let af = a[g.face_index(Side::Left, j)];
                one_sided_derivative(af, u[c], u[c + 1], dx)
            } else if i == nx - 1 {
                let af = a[g.face_index(Side::Right, j)];
                -one_sided_derivative(af, u[c], u[c - 1], dx)
            } else {
                (u[c + 1] - u[c - 1]) / (2.0 * dx)
            };
            let gy = if j == 0 {
                let af = a[g.face_index(Side::Bottom, i)];
                one_sided_derivative(af, u[c], u[c + nx], dy)
            } else if j == ny - 1 {
                let af = a[g.face_index(Side::Top, i)];
                -one_sided_derivative(af, u[c], u[c - nx], dy)
            } else {
                (u[c + nx] - u[c - nx]) / (2.0 * dy)
            };
            *grad = [gx, gy];
        }
    });
    VectorField {
        grid: g.clone(),
        values: out,
    }
}

/// `v = -∇h`.
pub fn velocity(h: &ScalarField, a: &[f64]) -> VectorField {
    let mut v = gradient(h, a);
    for w in &mut v.values {
        w[0] = -w[0];
        w[1] = -w[1];
    }
    v
}

/// Outward normal derivative `∂h/∂n` on every boundary face, from the
/// quadratic through the face value and the first two cells inward.
pub fn normal_derivative(h: &ScalarField, a: &[f64]) -> Vec<f64> {
    let g = &h.grid;
    g.boundary_faces()
        .iter()
        .zip(a)
        .map(|(face, &af)| {
            let d = g.normal_spacing(face.side);
            let f1 = h.values[face.cell];
            let f2 = h.values[g.inward_cell(face, 1).expect("grids have at least two cells per axis")];
            (8.0 * (af - f1) - (f1 - f2)) / (3.0 * d)
        })
        .collect()
}

/// Largest discrete second difference (`h_xx`, `h_yy`, `h_xy`) over interior
/// cells. Used as a W²-type control surrogate.
pub fn max_second_difference(h: &ScalarField) -> f64 {
    let g = &h.grid;
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx, g.dy);
    let u = &h.values;
    let mut m: f64 = 0.0;
    for j in 1..ny.saturating_sub(1) {
        for i in 1..nx.saturating_sub(1) {
            let c = j * nx + i;
            let hxx = (u[c + 1] - 2.0 * u[c] + u[c - 1]) / (dx * dx);
            let hyy = (u[c + nx] - 2.0 * u[c] + u[c - nx]) / (dy * dy);
            let hxy = (u[c + nx + 1] - u[c + nx - 1] - u[c - nx + 1] + u[c - nx - 1])
                / (4.0 * dx * dy);
            m = m.max(hxx.abs()).max(hyy.abs()).max(hxy.abs());
        }
    }
    m
}

/// `max |D²h| / (max|ω| + max|a|)`; should stay bounded under refinement.
pub fn second_difference_ratio(h: &ScalarField, omega: &ScalarField, a: &[f64]) -> f64 {
    let data = omega.max_abs() + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if data == 0.0 {
        return 0.0;
    }
    max_second_difference(h) / data
}
