//! Charged particle in a Paul trap with a continuously monitored
//! quantum-nondemolition (QND) variable.
//!
//! * [`trapcore`]: trap parameters, periodic stiffness, time grid, config files.
//! * [`mathieu`]: classical trajectories and Floquet stability.
//! * [`qnd`]: the QND family `A = σ(f q + p)` with `f = −m ẋ/x`.
//! * [`rpi`]: closed-form restricted propagator, readout density and ratio law.
//! * [`oracle`]: lattice Gaussian-integral propagators used for validation.
//!
//! Numerical code is generic over [`Real`] (`f32`/`f64`); the `*64` aliases
//! below fix the scalar to `f64`.

pub mod error;
pub mod mathieu;
pub mod oracle;
pub mod qnd;
pub mod rpi;
pub mod scalar;
pub mod trapcore;
pub mod tridiag;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TrapConfig64 = trapcore::TrapConfig<f64>;
pub type TimeGrid64 = trapcore::TimeGrid<f64>;
pub type Trajectory64 = mathieu::Trajectory<f64>;
pub type MonodromyReport64 = mathieu::MonodromyReport<f64>;
pub type QndElement64 = qnd::QndElement<f64>;
pub type ReadoutRecord64 = rpi::ReadoutRecord<f64>;
pub type PropagatorResult64 = rpi::PropagatorResult<f64>;
pub type ProbabilityResult64 = rpi::ProbabilityResult<f64>;
pub type LatticeAction64 = oracle::LatticeAction<f64>;
pub type LatticeResult64 = oracle::LatticeResult<f64>;

pub type TrapConfig32 = trapcore::TrapConfig<f32>;
pub type TimeGrid32 = trapcore::TimeGrid<f32>;
pub type Trajectory32 = mathieu::Trajectory<f32>;
