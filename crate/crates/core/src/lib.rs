//! Finite-volume solver and verification harness for the viscous
//! hyperbolic-elliptic system `ω_t + div(g(ω) v) = ν Δω`, `v = -∇h`,
//! `-Δh + h = ω`, with Robin nucleation boundary conditions.

pub mod audit;
pub mod boundary;
pub mod cli;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod flux;
pub mod geometry;
pub mod io;
pub mod kinetic;
pub mod sweep;
pub mod trajectory;
pub mod transport;

pub use error::{Error, Result};
