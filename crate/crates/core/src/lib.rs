//! Computational quantum measure theory.
//!
//! The crate builds decoherence functionals from unitary dynamics, checks the
//! decoherence-functional axioms, constructs the History Hilbert space as the
//! quotient of the free vector space on an event algebra, and compares it with
//! the standard Hilbert space both for finite configuration spaces and for a
//! particle whose dynamics is given by a closed-form propagator.
//!
//! Module map:
//!
//! * [`event_algebra`]: finite power-set algebras (bitsets) and continuum
//!   cylinder events built from boxes.
//! * [`dynamics`]: unitary schedules, restricted evolution, the decoherence
//!   functional and axiom checks for finite systems.
//! * [`gns`]: the free vector space `H₁`, its degenerate inner product, the
//!   quotient space `H₂`, the map `f₀` and onto-witnesses.
//! * [`continuum`]: propagators, oscillatory quadrature, restricted evolution
//!   of wave functions and the constructive reconstruction of step functions.

pub mod continuum;
pub mod dynamics;
pub mod error;
pub mod event_algebra;
pub mod gns;
pub mod linalg;

pub use error::{Error, Result};
pub use linalg::C64;
