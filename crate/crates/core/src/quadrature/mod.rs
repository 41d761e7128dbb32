//! Radial quadrature around the singularity z = 0.
//!
//! Integrals over ℝⁿ∖{0} are split into directions (±1 in one dimension,
//! equally spaced angles in two) and radial panels: geometric shells inside
//! the compensator radius, geometric panels outside it, refined at kernel
//! and function breakpoints. All integrals used by the other modules go
//! through [`radial::Engine`].

pub mod gauss;
pub(crate) mod integrals;
pub(crate) mod radial;
mod scheme;

pub use integrals::{
    compensated_integral, default_eps_sequence, drift_correction, pv_limit, truncated_integral, PVEstimate,
};
pub use radial::{InnerResult, Remainder};
pub use scheme::AnnulusScheme;
