//! Piecewise mixture Laplace and geometric noise mechanisms for
//! differentially private count and histogram release.
//!
//! The crate is organized bottom-up: [`mechanism`] holds parameterizations and
//! exact distributions, [`analytics`] closed-form moments, [`sampling`] seeded
//! samplers, [`accounting`] privacy loss and budget bookkeeping, [`query`] the
//! tabular release engine, and [`bench`] the sweep, simulation and audit harness.

pub mod accounting;
pub mod analytics;
pub mod bench;
pub mod error;
pub mod gof;
pub mod mechanism;
pub mod numeric;
pub mod query;
pub mod sampling;

pub use error::{Error, Result};
pub use mechanism::{MechanismSpec, MixtureParams, NoiseModel};
pub use sampling::SeededStream;
