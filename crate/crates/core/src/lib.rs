//! Two-mode (cw/ccw) ring-resonator cavity QED with phase-disordered
//! emitters.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod badcavity;
pub mod bosonic;
pub mod config;
pub mod correlation;
pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod kerr;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod ode;
pub mod space;
pub mod superop;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
