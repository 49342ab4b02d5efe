//! Structured rectangular cell grid on `[0, lx] x [0, ly]`.
//!
//! Cells are stored row-major with `x` fastest: cell `(i, j)` has index
//! `j * nx + i` and center `((i + 1/2) dx, (j + 1/2) dy)`. Boundary faces are
//! enumerated side by side in counter-clockwise order starting at the origin
//! (bottom, right, top, left), so a face's position in the list also fixes its
//! arc length along the perimeter.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|side| side.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    /// Owner cell index.
    pub cell: usize,
    pub side: Side,
    pub normal: [f64; 2],
    pub midpoint: [f64; 2],
    /// Face length.
    pub area: f64,
    /// Arc length of the midpoint, measured counter-clockwise from the origin.
    pub arc_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    faces: Vec<BoundaryFace>,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be at least 2, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "side lengths must be positive and finite, got {lx} x {ly}"
            )));
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;

        let mut faces = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            let x = (i as f64 + 0.5) * dx;
            faces.push(BoundaryFace {
                cell: i,
                side: Side::Bottom,
                normal: Side::Bottom.normal(),
                midpoint: [x, 0.0],
                area: dx,
                arc_length: x,
            });
        }
        for j in 0..ny {
            let y = (j as f64 + 0.5) * dy;
            faces.push(BoundaryFace {
                cell: j * nx + nx - 1,
                side: Side::Right,
                normal: Side::Right.normal(),
                midpoint: [lx, y],
                area: dy,
                arc_length: lx + y,
            });
        }
        for i in (0..nx).rev() {
            let x = (i as f64 + 0.5) * dx;
            faces.push(BoundaryFace {
                cell: (ny - 1) * nx + i,
                side: Side::Top,
                normal: Side::Top.normal(),
                midpoint: [x, ly],
                area: dx,
                arc_length: lx + ly + (lx - x),
            });
        }
        for j in (0..ny).rev() {
            let y = (j as f64 + 0.5) * dy;
            faces.push(BoundaryFace {
                cell: j * nx,
                side: Side::Left,
                normal: Side::Left.normal(),
                midpoint: [0.0, y],
                area: dy,
                arc_length: 2.0 * lx + ly + (ly - y),
            });
        }

        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            faces,
        })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    #[inline]
    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(cell);
        [(i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy]
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx.min(self.dy)
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.lx + self.ly)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.lx.min(self.ly)
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Index range of the faces on one side.
    pub fn side_faces(&self, side: Side) -> std::ops::Range<usize> {
        let (nx, ny) = (self.nx, self.ny);
        match side {
            Side::Bottom => 0..nx,
            Side::Right => nx..nx + ny,
            Side::Top => nx + ny..2 * nx + ny,
            Side::Left => 2 * nx + ny..2 * (nx + ny),
        }
    }

    /// Face index of the boundary face on `side` owned by the cell at
    /// position `k` along that side (`i` for bottom/top, `j` for left/right).
    pub fn face_index(&self, side: Side, k: usize) -> usize {
        let (nx, ny) = (self.nx, self.ny);
        match side {
            Side::Bottom => k,
            Side::Right => nx + k,
            Side::Top => nx + ny + (nx - 1 - k),
            Side::Left => 2 * nx + ny + (ny - 1 - k),
        }
    }

    /// Spacing along the inward normal of a face.
    pub fn normal_spacing(&self, side: Side) -> f64 {
        match side {
            Side::Left | Side::Right => self.dx,
            Side::Bottom | Side::Top => self.dy,
        }
    }

    /// The cell `depth` steps inward from the owner of `face` (depth 0 is
    /// the owner itself), or `None` when that walks off the grid.
    pub fn inward_cell(&self, face: &BoundaryFace, depth: usize) -> Option<usize> {
        let (i, j) = self.cell_ij(face.cell);
        let (i, j) = match face.side {
            Side::Left => (i.checked_add(depth)?, j),
            Side::Right => (i.checked_sub(depth)?, j),
            Side::Bottom => (i, j.checked_add(depth)?),
            Side::Top => (i, j.checked_sub(depth)?),
        };
        (i < self.nx && j < self.ny).then(|| self.cell_index(i, j))
    }

    /// Euclidean distance from a cell center to the nearest side.
    pub fn distance_to_boundary(&self, cell: usize) -> Result<f64> {
        if cell >= self.n_cells() {
            return Err(Error::CellOutOfRange {
                cell,
                n_cells: self.n_cells(),
            });
        }
        let [x, y] = self.cell_center(cell);
        Ok(x.min(self.lx - x).min(y).min(self.ly - y))
    }

    /// Cells touching two sides at once.
    pub fn is_corner_cell(&self, cell: usize) -> bool {
        let (i, j) = self.cell_ij(cell);
        (i == 0 || i == self.nx - 1) && (j == 0 || j == self.ny - 1)
    }

    /// Per-axis refinement ratio when `fine` subdivides `self` over the same box.
    pub fn refinement_ratio(&self, fine: &Grid) -> Option<(usize, usize)> {
        let same_box = (self.lx - fine.lx).abs() <= 1e-12 * self.lx
            && (self.ly - fine.ly).abs() <= 1e-12 * self.ly;
        if !same_box || fine.nx % self.nx != 0 || fine.ny % self.ny != 0 {
            return None;
        }
        Some((fine.nx / self.nx, fine.ny / self.ny))
    }
}

pub fn build_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
    Grid::new(nx, ny, lx, ly)
}
