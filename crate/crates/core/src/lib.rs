//! Lifetimes of series and parallel systems with general (warm) standby
//! units, and grid-based checks of stochastic-order relations between them.

pub mod error;
pub mod grid;
pub mod lifetimes;
pub mod orders;
pub mod quadrature;
pub mod standby;
pub mod stream;
pub mod systems;
pub mod verdict;

pub use error::{Error, Result};
pub use grid::{Grid, GridDescriptor};
pub use lifetimes::{Lifetime, LifetimeDistribution};
pub use orders::{check_order, implication_audit, sp_series_delta2, OrderKind, OrderVerdict};
pub use standby::{ModelFunction, StandbyComposite, TimeMap};
pub use systems::{SystemSpec, Topology};
pub use verdict::GridVerdict;
