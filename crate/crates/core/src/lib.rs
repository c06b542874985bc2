//! Exact identification of intervention effects in discrete Bayesian
//! networks with regime indicators.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod identify;
pub mod io;
pub mod model;
pub mod regimes;

pub use error::{Error, Result};
pub use graph::{Dag, Node, NodeKind, NodeSet};
pub use identify::{identify, CausalQuery, EffectKind, IdentificationResult, Roles, Sequence, Status};
pub use model::{Cpt, Dataset, Model, ObservedDistribution, Table, Variable};
pub use regimes::{Plan, Regime};

/// Conditioning slices with less mass than this are positivity violations.
pub const POSITIVITY_EPS: f64 = 1e-12;
/// Tolerance for tables that must sum to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Default tolerance when comparing identified and oracle answers.
pub const COMPARISON_TOL: f64 = 1e-9;
