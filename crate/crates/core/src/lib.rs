//! Elastic ray tracing and amplitude transport in piecewise-smooth
//! isotropic media, with the ray-transform and density-PDE probes used for
//! travel-time tomography.

pub mod amplitude;
pub mod error;
pub mod field;
pub mod interface_ops;
pub mod medium;
pub mod ode;
pub mod quad;
pub mod raytrace;
pub mod tomography;

pub use error::{Error, Result};
pub use field::{AnalyticField, Jet};
pub use medium::{Bounds, ElasticMedium, Interface, Mode, Params, Region, Side, SideHint};
