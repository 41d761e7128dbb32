//! Serializable kernel descriptions, as found in run configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, dist};

use super::expr::Expr;
use super::{stable_like_kernel, AlphaFunction, JumpKernel};

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSpec {
    Constant { value: f64 },
    Tanh { base: f64, amplitude: f64, scale: f64 },
    Sine { base: f64, amplitude: f64, frequency: f64 },
}

impl AlphaSpec {
    pub fn build(&self) -> Result<AlphaFunction> {
        match *self {
            AlphaSpec::Constant { value } => AlphaFunction::constant(value),
            AlphaSpec::Tanh { base, amplitude, scale } => AlphaFunction::tanh(base, amplitude, scale),
            AlphaSpec::Sine { base, amplitude, frequency } => AlphaFunction::sine(base, amplitude, frequency),
        }
    }
}

/// Density on r_min ≤ |x−y| < r_max, with separate values for jumps in the
/// positive (`forward`) and negative (`backward`) first-coordinate direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub r_min: f64,
    pub r_max: f64,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    StableLike {
        #[serde(default = "one")]
        dim: usize,
        alpha: AlphaSpec,
    },
    ConstantAlpha {
        #[serde(default = "one")]
        dim: usize,
        alpha: f64,
    },
    Piecewise {
        #[serde(default = "one")]
        dim: usize,
        bands: Vec<Band>,
    },
    Expression {
        #[serde(default = "one")]
        dim: usize,
        expr: String,
        #[serde(default)]
        symmetric: bool,
        #[serde(default)]
        breaks: Vec<f64>,
    },
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::StableLike { dim, .. }
            | KernelSpec::ConstantAlpha { dim, .. }
            | KernelSpec::Piecewise { dim, .. }
            | KernelSpec::Expression { dim, .. } => *dim,
        }
    }

    pub fn alpha(&self) -> Result<Option<AlphaFunction>> {
        match self {
            KernelSpec::StableLike { alpha, .. } => alpha.build().map(Some),
            KernelSpec::ConstantAlpha { alpha, .. } => AlphaFunction::constant(*alpha).map(Some),
            _ => Ok(None),
        }
    }

    pub fn build(&self) -> Result<JumpKernel> {
        let dim = self.dim();
        check_dim(dim)?;
        match self {
            KernelSpec::StableLike { alpha, .. } => stable_like_kernel(&alpha.build()?, dim),
            KernelSpec::ConstantAlpha { alpha, .. } => stable_like_kernel(&AlphaFunction::constant(*alpha)?, dim),
            KernelSpec::Piecewise { bands, .. } => piecewise_kernel(dim, bands),
            KernelSpec::Expression { expr, symmetric, breaks, .. } => {
                let e = Expr::parse(expr)?;
                let label = format!("expression[{}]", e.source());
                Ok(JumpKernel::from_fn(dim, label, *symmetric, move |x, y| e.eval(dim, x, y))?
                    .with_radial_breaks(breaks.clone()))
            }
        }
    }
}

pub fn piecewise_kernel(dim: usize, bands: &[Band]) -> Result<JumpKernel> {
    for b in bands {
        if !(b.r_min >= 0.0 && b.r_min < b.r_max) {
            return Err(Error::InvalidArgument(format!("band radii must satisfy 0 <= r_min < r_max, got {b:?}")));
        }
        if !(b.forward >= 0.0 && b.backward >= 0.0) {
            return Err(Error::Domain(format!("band densities must be nonnegative, got {b:?}")));
        }
    }
    let bands = bands.to_vec();
    let symmetric = bands.iter().all(|b| b.forward == b.backward);
    let breaks: Vec<f64> = bands.iter().flat_map(|b| [b.r_min, b.r_max]).collect();
    let kernel = JumpKernel::from_fn(dim, "piecewise", symmetric, move |x, y| {
        let r = dist(x, y, dim);
        let dz = y[0] - x[0];
        bands
            .iter()
            .filter(|b| r >= b.r_min && r < b.r_max)
            .map(|b| {
                if dz > 0.0 {
                    b.forward
                } else if dz < 0.0 {
                    b.backward
                } else {
                    0.5 * (b.forward + b.backward)
                }
            })
            .sum()
    })?;
    Ok(kernel.with_radial_breaks(breaks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Density;

    #[test]
    fn stable_spec_builds() {
        let k = KernelSpec::StableLike { dim: 1, alpha: AlphaSpec::Tanh { base: 1.0, amplitude: 0.1, scale: 1.0 } };
        assert_eq!(k.dim(), 1);
        assert!(!k.build().unwrap().symmetric_hint());
        assert!(k.alpha().unwrap().is_some());
    }

    #[test]
    fn piecewise_band_values() {
        let k = piecewise_kernel(1, &[Band { r_min: 1.0, r_max: 2.0, forward: 4.0, backward: 0.0 }]).unwrap();
        assert_eq!(k.eval(&[0.0, 0.0], &[1.5, 0.0]), 4.0);
        assert_eq!(k.eval(&[0.0, 0.0], &[-1.5, 0.0]), 0.0);
        assert_eq!(k.eval(&[0.0, 0.0], &[0.5, 0.0]), 0.0);
        assert_eq!(Density::radial_breaks(&k), &[1.0, 2.0]);
    }

    #[test]
    fn expression_kernel() {
        let spec = KernelSpec::Expression { dim: 1, expr: "r^(-2)/pi".into(), symmetric: true, breaks: vec![] };
        let k = spec.build().unwrap();
        assert!((k.eval(&[0.0, 0.0], &[2.0, 0.0]) - 0.25 / std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::ConstantAlpha { dim: 1, alpha: 2.0 }.build().is_err());
        assert!(KernelSpec::ConstantAlpha { dim: 3, alpha: 1.0 }.build().is_err());
        assert!(KernelSpec::Expression { dim: 1, expr: "r +".into(), symmetric: false, breaks: vec![] }
            .build()
            .is_err());
    }
}
