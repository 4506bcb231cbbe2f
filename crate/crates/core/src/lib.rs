//! Liénard systems `ẍ + f(x)ẋ + g(x) = 0` with a prescribed number of limit
//! cycles: curve construction by interval-wise extension, a half-return map
//! shooting solver, amplitude estimates and verification of the
//! exactly-N-cycles hypotheses.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construction;
pub mod curves;
pub mod cycles;
pub mod dynamics;
pub mod ode;
pub mod roots;

pub use curves::{ArcSegment, LinearSegment, OddPiecewiseCurve, RestoringFunction, Segment};
pub use dynamics::{IntegratorConfig, LienardSystem};
