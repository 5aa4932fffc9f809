//! Numerical laboratory for pointwise Lyapunov exponents of holomorphic
//! maps: orbits, inverse-branch telescopes and the derivative lower bounds
//! they imply.

pub mod bounds;
pub mod conformal;
pub mod cycles;
pub mod map;
pub mod numeric;
pub mod orbit;
pub mod pipeline;
pub mod telescope;

pub use map::{Family, MapError, MapSpec, SingularSet};
pub use orbit::{GeometryConstants, Orbit};
pub use telescope::{TailDistribution, TelescopeResult};
