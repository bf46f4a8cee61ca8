//! Spin-3/2 (Rarita-Schwinger) field operators on curved spacetimes: metric
//! geometry, tetrads and spinor connections, the wave operator and its
//! constraints, gauge checks and a sampled identity suite.

#![allow(clippy::needless_range_loop)]
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod identity_suite;
pub mod rs_operator;
pub mod spacetimes;
pub mod spin_frame;
pub mod spinor;

pub use error::{Error, Result};
