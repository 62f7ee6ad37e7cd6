//! Restricted evolution of a particle in `ℝ^d` through closed-form
//! propagators, with composite Gauss–Legendre quadrature on a truncated box.

mod esck;
mod evolution;
mod grid;
mod propagator;
mod quadrature;
mod reconstruct;
mod state;

pub use esck::{check_esck, EsckQuadrature, EsckReport};
pub use evolution::{
    decoherence_continuum, evolve_back_to_initial, restricted_evolution_event,
    restricted_evolution_homogeneous, BoxProvenance, ContinuumFunctional, Evolved, Evolver,
    DEFAULT_ORDER, DEFAULT_PANEL_PHASE,
};
pub use grid::{Axis, Grid, WaveFunction};
pub use propagator::{
    PropagatorKind, PropagatorSpec, PropagatorValue, StepKind, CAUSTIC_TOL, NEAR_CAUSTIC_TOL,
};
pub use quadrature::{composite_panels, extrapolate_to_zero, ConvergenceLadder, GaussLegendre};
pub use reconstruct::{
    lemma4_reconstruct, reconstruct_step_function, step_error, CoverPiece, Lemma4Params,
    Reconstruction,
};
pub use state::InitialState;
