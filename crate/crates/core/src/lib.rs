//! Transport distances between probability densities on finite graphs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtins;
pub mod error;
pub mod export;
pub mod flow;
pub mod graph;
pub mod means;
pub mod oracles;
pub mod prox;
pub mod roots;
pub mod solver;
pub mod time_grid;
pub mod validate;

pub use error::{Error, Result};
pub use graph::MarkovGraph;
pub use means::{Mean, MeanKind};
pub use time_grid::{BoundaryPair, DensityPath, IntervalEdgeField, IntervalNodeField, TimeGrid};
pub use solver::{solve_free_endpoint, solve_geodesic, GeodesicSolution, PrimalDualSolver, SolverConfig};
