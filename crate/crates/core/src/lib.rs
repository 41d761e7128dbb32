//! Numerical toolkit for non-symmetric jump kernels k(x, y) on ℝⁿ, n = 1, 2.
//!
//! * [`kernels`]: kernels, the split k = k_s + k_a, stable-like kernels
//! * [`quadrature`]: truncated, compensated and principal-value integrals
//! * [`conditions`]: sampled integrability checks
//! * [`forms`]: the bilinear forms ℰ, η_n, η and their properties
//! * [`operators`]: L, Λ, L̃, B, the killing term κ and L* = Λ + κ

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod conditions;
pub mod error;
pub mod forms;
pub mod function;
pub mod geometry;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use function::{ContractionPart, FunctionSpec, GridFunction};
pub use geometry::{Lattice, Point, Region};
pub use kernels::{split, stable_like_kernel, weight_w, AlphaFunction, Density, JumpKernel, KernelSpec, SplitKernel};
pub use quadrature::{AnnulusScheme, PVEstimate};
pub use conditions::{ConditionId, ConditionReport, ConditionSetup, Sampling, Verdict, Witness};
pub use forms::{FormQuadrature, FormValue};
pub use operators::{OperatorEvaluation, OperatorId};
