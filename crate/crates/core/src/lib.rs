//! Simulation of two-qubit gates between trapped ions coupled through a
//! shared vibrational mode: the lightshift gate driven at the double
//! resonance `δ = 0, Ω' = ν/2`, and the Cirac-Zoller gate on the red
//! sideband with travelling or standing waves.
//!
//! Units: `ħ = 1`, frequencies in units of the lowest mode frequency `ν₁`,
//! times in `1/ν₁`. The numerical core is generic over [`scalar::Real`];
//! the aliases below fix the scalar.

pub mod error;
pub mod gates;
pub mod hamiltonians;
pub mod linalg;
pub mod metrics;
pub mod modespectrum;
pub mod propagator;
pub mod scalar;
pub mod statespace;

pub use error::{Error, Result};
pub use hamiltonians::{Generator, WaveType};
pub use propagator::{Method, PropagationSettings};
pub use statespace::{Frame, Level, Transition};

pub type Config = hamiltonians::SystemConfig<f64>;
pub type State = statespace::StateVector<f64>;
pub type Operator = statespace::OperatorMatrix<f64>;
pub type Matrix = linalg::CMatrix<f64>;
pub type Eigen = linalg::HermitianEigen<f64>;
pub type Full = hamiltonians::FullHamiltonian<f64>;
pub type Stationary = propagator::StationaryPropagator<f64>;

pub type Config32 = hamiltonians::SystemConfig<f32>;
pub type State32 = statespace::StateVector<f32>;
pub type Operator32 = statespace::OperatorMatrix<f32>;
pub type Matrix32 = linalg::CMatrix<f32>;
