//! Foliations of the strip |x₂| ≤ ε for cubic boundary data, the Bellman candidate they
//! carry, and numerical checks of its diagonal concavity and C¹ gluing.

pub mod boundary;
pub mod error;
pub mod export;
pub mod field;
pub mod ode;
pub mod patches;
pub mod regimes;
pub mod spine;
pub mod verify;

pub use boundary::{canonicalize, BoundaryPair, Cubic, DiscriminantClass, Side, StripPoint, SymmetryRecord};
pub use error::{Error, Result};
pub use regimes::{build_foliation, regime_at, Foliation, Leaf, Problem, Regime};
pub use spine::TraceControls;
pub use verify::{verify_built, verify_foliation, verify_slope_monotone, Status, VerificationReport, VerifyConfig};
