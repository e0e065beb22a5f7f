//! Particle distributions from minimizing the density error of a kernel
//! interpolation, with a boundary integral standing in for missing neighbours
//! near walls.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod kernel;
pub mod lattice;
pub mod particles;
pub mod relaxation;
pub mod workflow;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{LevelSet, LevelSetField, Shape, Vec2};
pub use kernel::{Dimension, KernelSpec};
pub use lattice::{LatticeSpec, LatticeType};
pub use particles::{CellLayout, NeighborGrid, ParticleSet, Topology};
pub use relaxation::{relax, EnergyTrace, RelaxationConfig, Relaxer, Scheme, TraceRecord};
