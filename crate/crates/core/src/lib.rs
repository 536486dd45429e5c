//! Periodic solutions of the scalar delay equation `x'(t) = a(t) f(x(t - 1))`
//! with a two-level periodic coefficient and relay negative feedback.
//!
//! - [`model`]: the coefficient and nonlinearity, sharp or smoothed.
//! - [`exact`]: event-driven piecewise-affine solutions of the sharp system.
//! - [`maps`]: closed-form return maps, fixed points, 2-cycles and verdicts.
//! - [`numeric`]: fixed-step integration of the smoothed system.
//! - [`analysis`]: table regression, coexistence checks, scans and smoothing studies.

pub mod analysis;
pub mod exact;
pub mod maps;
pub mod model;
pub mod numeric;

pub use exact::{propagate, propagate_from, ConstantHistory, PiecewisePath, ShapeSignature, Sign};
pub use maps::{classify, AffineMap1D, Classification, HStar, Kind};
pub use model::{Model, Params, Profile, Smoothing};
