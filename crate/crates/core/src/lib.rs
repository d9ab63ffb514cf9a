//! Design-to-fabrication toolchain for n-bar tensegrity structures.
//!
//! The pipeline runs in this order:
//!
//! 1. [`model`]: topology map and material parameters.
//! 2. [`formfind`]: equilibrium shape by spring strain-energy minimization.
//! 3. [`structural`] and [`clearance`]: static sag, natural frequencies,
//!    mode shapes and strut-to-strut distances.
//! 4. [`scaffold`]: reorientation, strut angles and vertical-post layout.
//! 5. [`export`]: assembly report, DXF cut files and post cut list.

pub mod clearance;
pub mod error;
pub mod export;
pub mod formfind;
pub mod model;
pub mod scaffold;
pub mod structural;

pub use error::{Error, Result};
pub use model::{Configuration, MaterialSpec, TopologyMap, Vec3};
