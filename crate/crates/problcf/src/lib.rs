//! Probabilistic low-cycle-fatigue life modeling.
//!
//! The model in this crate treats fatigue crack initiation as a Poisson
//! point process on the loaded surface. Its mean measure is tied to the
//! Coffin-Manson-Basquin strain-life curve, which makes the life to first
//! crack Weibull-distributed with a shape `m` shared across geometries and
//! strain levels, and a scale that shrinks with surface area as
//! `(A/a_ref)^(-1/m)`. From five material parameters
//! `(sigma_f, b, eps_f, c, m)` plus the elastic modulus, the crate predicts
//! full life distributions for specimens and meshed components, calibrates
//! those parameters from strain-controlled campaigns by maximum likelihood,
//! quantifies their uncertainty by parametric bootstrap, checks the Weibull
//! and shared-shape assumptions on held-out quotients, and simulates
//! synthetic campaigns.
//!
//! Strain amplitudes are absolute fractions (0.004, not 0.4%); areas are
//! mm^2; lives are cycles.

pub mod bootstrap;
pub mod calibration;
pub mod campaign;
pub mod cli;
pub mod cmb;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod life;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod surface;

pub use campaign::{Campaign, TestRecord};
pub use cmb::{CmbParams, MaterialModel};
pub use error::{Error, Result};
pub use life::LifeDistribution;
pub use surface::{SurfaceElement, SurfaceMesh};

/// Version stamp echoed into every JSON artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema tag written into every JSON artifact so downstream consumers can
/// detect format drift.
pub const SCHEMA_VERSION: u32 = 1;
