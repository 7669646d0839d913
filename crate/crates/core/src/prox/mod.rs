//! Proximal maps and projections used by the primal-dual splitting.

pub mod ce;
pub mod cones;
pub mod entropy;
pub mod splitting;

pub use ce::{CEProjector, CeMode};
pub use cones::{project_k, project_k_hinted, project_k_top, project_parabola_b};
pub use entropy::{prox_dual_entropy, EntropyKind};
pub use splitting::{project_jeq, project_jpm_interval, prox_dual_jpm_interval, JavgProjector, Pins};
