//! Construction and verification of radially symmetric breathers of the
//! semilinear curl-curl wave equation
//!
//! ```text
//! s(x) ∂ₜ²U + ∇×∇×U + q(x) U ± V(x) |U|^{p-1} U = 0
//! ```
//!
//! by reduction to the oscillators `ÿ + y ± |y|^{p-1} y = 0`.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod breather;
pub mod coefficients;
pub mod error;
pub mod expansions;
pub mod oscillator;
pub mod phase_plane;
pub mod quadrature;
pub mod radial;
pub mod roots;
pub mod scalar;
pub mod verifier;

pub use breather::{BreatherSpec, ComplexBreather, DecayReport, PhaseShift};
pub use coefficients::{CoefficientProfile, HypothesisReport, ProfileConfig};
pub use error::{Error, Result};
pub use expansions::{compute_constants, ExpansionCoefficients, FitReport};
pub use phase_plane::{OrbitEnergy, PeriodMap, PeriodSettings, Sign};
pub use scalar::Real;
pub use verifier::{ResidualReport, SweepSettings};

pub type PeriodMap64 = PeriodMap<f64>;
pub type Profile = CoefficientProfile<f64>;
pub type Breather = BreatherSpec<f64>;
pub type Oscillator64 = oscillator::Oscillator<f64>;
pub type Monochromatic = ComplexBreather<f64>;
