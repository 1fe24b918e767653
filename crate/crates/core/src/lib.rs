//! Numerical laboratory for the value distribution of Yosida-type
//! quasimeromorphic mappings in ℝⁿ.
//!
//! The crate is organised bottom-up:
//!
//! * [`sphere`]: chordal geometry on the compactified space ℝⁿ ∪ {∞}.
//! * [`zoo`]: explicit mappings with known dimension and distortion, plus the
//!   translation and p-rescaling transforms.
//! * [`hoelder`]: finite-scale spherical Hölder quotients and the Yosida /
//!   p-Yosida indicators built on them.
//! * [`sequence`]: weighted sequence distances, M_p / μ_p detection and the
//!   a-point separation statistic.
//! * [`counting`]: counting functions, the average counting function A_f(r)
//!   by two independent routes, oscillation profiles and growth fits.

pub mod argument;
pub mod counting;
pub mod error;
pub mod hoelder;
pub mod sequence;
pub mod sphere;
pub mod zoo;

mod par;
mod sampling;

pub use error::{Error, Result};
pub use sphere::ExtendedPoint;
pub use zoo::{MapDescriptor, Mapping};
