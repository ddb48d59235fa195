//! Near neighbor search on the unit sphere via alpha-near-neighbor graphs.
//!
//! The crate is organized around six pieces:
//!
//! - [`geometry`]: spherical cap and wedge volumes (asymptotic log-volumes,
//!   exact finite-dimension quadrature, and Monte-Carlo estimators), the
//!   density parameter `mu`, and the greedy-walk stall level `gamma_max`.
//! - [`instance`]: random datasets on the sphere, planted-neighbor instances,
//!   and the adversarial instance that defeats greedy graph search.
//! - [`graph`]: the alpha-near-neighbor graph itself (two points are adjacent
//!   iff their inner product is at least alpha), with insert/delete support.
//! - [`search`]: greedy walks with a fixed improvement slack, random restarts,
//!   and success-rate estimation.
//! - [`tradeoffs`]: closed-form query/space exponent curves for the sparse and
//!   dense regimes, including the lattice-sieving exponent curve.
//! - [`experiment`]: a reproducible experiment runner (success sweeps,
//!   exponent fits, stall-level profiles) plus dataset/graph file formats
//!   in [`io`].

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod graph;
pub mod instance;
pub mod io;
pub mod rng;
mod vecmath;
pub mod search;
pub mod tradeoffs;

pub use error::Error;
pub use graph::{AlphaGraph, GraphStats};
pub use instance::{Dataset, InstanceSpec, PlantedQuery, UnitVector};
pub use search::{QueryConfig, WalkResult};
pub use tradeoffs::TradeoffPoint;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
