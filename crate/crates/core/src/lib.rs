//! Free rotation of a coin with triaxial inertia and its limiting heads probability.
//!
//! The coin is a rigid body with principal moments `Ix <= Iy < Iz`, the last
//! about the face normal. Its orientation is integrated in Euler angles
//! `(phi, theta, psi)` relative to the fixed angular momentum; heads means the
//! normal points up in the reference frame.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod probability;
pub mod quadrature;

pub use analysis::{ArcsineParams, EnvelopeCase, NutationBounds, OrbitLaw, QuarticCoefficients, ThetaDensity};
pub use dynamics::{InertiaTensor, InitialConditions, TossState, Trajectory};
pub use error::{Error, Result};
pub use geometry::{EulerAngles, MomentumDirection, RotationMatrix, UnitVector3};
pub use montecarlo::{MagnitudeDensity, McEstimate, McReport, McSetup};
pub use probability::{HeadsProbability, ProbabilityMethod, Theta0Sample};
pub use quadrature::QuadResult;
