//! Seismic response of two identical adjacent shear buildings coupled by
//! viscoelastic dampers, and multi-objective search for damper placements.

pub mod bench;
pub mod enumeration;
pub mod error;
pub mod ground_motion;
pub mod metrics;
pub mod model;
pub mod moea;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
