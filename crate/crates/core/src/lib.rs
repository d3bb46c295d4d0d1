//! Orlicz–Finsler geometry of S¹-invariant Kähler potentials on ℂP¹.
//!
//! Potentials are handled through their symplectic (Legendre dual) potentials
//! on the moment interval, where geodesics are linear, rooftop envelopes are
//! pointwise maxima and Monge–Ampère measures push forward to Lebesgue
//! measure. Every numerical type is generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix `f64`.

pub mod banded;
pub mod battery;
pub mod epsgeodesic;
pub mod error;
pub mod flow;
pub mod measure;
pub mod metrics;
pub mod orlicz;
pub mod quad;
pub mod random;
pub mod scalar;
pub mod toric;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Weight = weights::YoungWeight<f64>;
pub type Conjugate = weights::ConjugateWeight<f64>;
pub type Measure = measure::DiscreteMeasure<f64>;
pub type Potential = toric::SymplecticPotential<f64>;
pub type Geodesic = toric::GeodesicSegment<f64>;
