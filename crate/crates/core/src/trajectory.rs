//! Stored solution history and the per-snapshot quantities derived from it.

use std::sync::Arc;

use crate::boundary::{robin_coefficient, BoundaryData};
use crate::elliptic::{normal_derivative, velocity, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::geometry::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub omega: Vec<f64>,
    pub h: Vec<f64>,
    /// Cell gradient of `omega`, present when the run stores gradients.
    pub grad: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Arc<Grid>,
    pub model: FluxModel,
    pub nu: f64,
    pub boundary: BoundaryData,
    pub snapshots: Vec<Snapshot>,
}

/// Boundary and drift quantities reconstructed from one snapshot.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    pub a: Vec<f64>,
    pub v: VectorField,
    /// `∂h/∂n` per boundary face.
    pub z: Vec<f64>,
    /// Nucleation value per boundary face.
    pub b: Vec<f64>,
    /// Robin coefficient `K ||v(t)||_∞`.
    pub m: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn t_final(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn frame(&self, k: usize) -> Frame {
        let s = &self.snapshots[k];
        let h = ScalarField {
            grid: self.grid.clone(),
            values: s.h.clone(),
            t: s.t,
        };
        let a = self.boundary.a_values(&self.grid, s.t);
        let v = velocity(&h, &a);
        let z = normal_derivative(&h, &a);
        let b = self.boundary.b_values(&self.grid, s.t, &z);
        let m = robin_coefficient(self.model, &v);
        Frame {
            t: s.t,
            a,
            v,
            z,
            b,
            m,
        }
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.len()).map(|k| self.frame(k)).collect()
    }

    /// `sup |ω|` over all stored snapshots.
    pub fn sup_abs(&self) -> f64 {
        self.snapshots
            .iter()
            .flat_map(|s| s.omega.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn require_gradients(&self) -> Result<()> {
        if self.snapshots.iter().all(|s| s.grad.is_some()) && !self.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingGradients)
        }
    }
}
