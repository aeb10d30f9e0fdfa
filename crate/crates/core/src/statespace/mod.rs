//! Structural state-space models: component assembly, Kalman filtering,
//! smoothing, forward simulation and posterior state simulation.

mod filter;
mod model;
mod simulate;
mod smoother;
mod spec;

pub use filter::{kalman_filter, FilterResult};
pub use model::{build_state_space, StateLayout, StateSpaceModel, DIFFUSE_VARIANCE};
pub use simulate::{simulate_forward, simulate_forward_from, simulate_states, SimulatedPath, SimulationSmoother};
pub use smoother::{kalman_smoother, SmootherResult};
pub use spec::{ComponentSpec, CovarianceSet, SeriesComponents, ShockKind};
