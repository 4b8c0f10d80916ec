//! High-order 2D mesh r-adaptation.
//!
//! Builds target elements by applying a metric tensor field to the straight-sided
//! elements of an initial mesh, then relocates mesh nodes (connectivity fixed) to
//! minimize a hyperelastic deformation energy measured between each current
//! curvilinear element and its target. Boundary nodes slide along analytic curves;
//! corner nodes stay put.
//!
//! Module map:
//! - [`reference`]: reference elements, nodal sets, quadrature, Lagrange bases
//! - [`mesh`]: mesh representation and structured generators
//! - [`geometry`]: boundary curves (segments, arcs) with closed-form projection
//! - [`metric`]: metric tensor algebra and the Gaussian ring refinement field
//! - [`mapping`]: current/ideal/target Jacobians and the deformation gradient
//! - [`energy`]: strain-energy density, mesh energy, analytic node gradients
//! - [`optimizer`]: Gauss-Seidel node relocation with Armijo backtracking
//! - [`io`]: HOMESH plain-text mesh format and run reports
//! - [`svg`]: curved-edge SVG rendering
//! - [`config`]: run configuration, presets, and the full adaptation pipeline

// `!(x > 0.0)` in validation guards is deliberate: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod energy;
pub mod geometry;
pub mod io;
pub mod mapping;
pub mod mesh;
pub mod metric;
pub mod optimizer;
pub mod reference;
pub mod svg;

pub use config::{run_adapt, MeshSource, MetricSpec, RunConfig};
pub use energy::{EnergyBreakdown, MaterialConstants};
pub use geometry::{BoundaryCurve, CurveKind};
pub use mapping::{RefBasis, TargetScaling, TargetTables};
pub use mesh::{Coord2, Element, Mesh};
pub use metric::{GaussianRingProfile, MetricField, MetricTensor};
pub use optimizer::{optimize, optimize_with_tables, validity_scan, AdaptReport, OptimizerConfig};
pub use reference::{ReferenceElement, Shape};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("singular matrix in {0}")]
    Singular(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
