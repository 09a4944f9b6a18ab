//! Geometric BSDEs and the return risk measures they induce.
//!
//! A geometric BSDE `−dY/Y = f̃ dt − Z dW` with positive terminal value is solved
//! through its logarithm, an ordinary quadratic BSDE. The crate provides the
//! transforms between the geometric, ordinary, log-quadratic and two-driver forms,
//! lattice and regression solvers, a catalog of return drivers with assumption
//! audits, axiom checks for the induced risk measures, and comparison bounds.

// `!(x > 0.0)` style guards are deliberate: they reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coeff;
pub mod driver;
pub mod drivers;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod riskmeasure;
pub mod solver;
pub mod terminal;
pub mod transforms;

pub use coeff::{CoefficientBundle, TimeFn};
pub use driver::{AssumptionId, DriverSpec, DriverTraits, Family, PushKind, TransformRecord, VolatilityMap, YDomain};
pub use ensemble::PathEnsemble;
pub use error::{Error, Result};
pub use field::{SolutionField, SolverMeta, SupportKind};
pub use grid::TimeGrid;
pub use lattice::{Lattice, Window};
pub use solver::{SolverConfig, Support};
pub use terminal::{Positivity, TerminalCondition, TerminalSpec};
pub use bounds::{bihari_bound, comparison_certificate, psi, psi_inv, PropertyReport};
pub use drivers::{catalog_get, list_catalog, AssumptionAudit, CatalogEntry, Verdict};
pub use riskmeasure::{Axiom, AxiomReport, DynamicEvaluation, InstanceSet, MeasureKind};
