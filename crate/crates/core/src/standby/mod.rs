//! Warm-standby units: model functions and the composite lifetime `X ⊛ Y`.
//!
//! The standby `Y` ages in a milder environment at rate set by `γ` while the
//! primary `X` works. If it survives storage until `X` fails at time `u`, it
//! switches in with virtual age `ω(u)` and runs as `[Y - ω(u) | Y > ω(u)]`.

mod composite;
mod model_function;

pub use composite::{StandbyComposite, StorageLife};
pub use model_function::{
    ModelFunction, ModelFunctionAudit, ModelFunctionValues, Reduction, TimeMap, AUDIT_TOL,
};
