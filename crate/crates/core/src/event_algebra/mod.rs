//! Event algebras: the power set of a finite history space, and finite unions
//! of cylinder ("homogeneous") events for a particle in `ℝ^d`.

mod finite;
mod homogeneous;
mod region;

pub use finite::{FiniteEvent, FiniteSampleSpace, History};
pub use homogeneous::{
    disjoint_decomposition, homogeneous_intersection, pad_to_common_times, ContinuumEvent,
    HomogeneousEvent, SampledTrajectory,
};
pub use region::{Interval, Region};

/// Tolerance used when merging time tuples.
pub(crate) const TIME_EPS: f64 = 1e-12;
