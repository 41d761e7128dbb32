use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::geometry::{dot, norm, Point};
use crate::kernels::{stable_like_kernel, AlphaFunction};
use crate::quadrature::integrals::generator_parts;
use crate::quadrature::AnnulusScheme;

/// L e_ξ(x) against −|ξ|^{α(x)} e_ξ(x), real and imaginary parts separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolResidual {
    pub alpha: f64,
    pub xi: Point,
    pub x: Point,
    /// (Re, Im) of L e_ξ(x).
    pub numeric: [f64; 2],
    /// (Re, Im) of −|ξ|^{α(x)} e_ξ(x).
    pub exact: [f64; 2],
    /// Complex modulus of numeric − exact.
    pub residual: f64,
    /// residual / |ξ|^{α(x)} (0 when ξ = 0).
    pub relative: f64,
    /// Far-field error bound of the quadrature.
    pub tail_bound: f64,
}

pub fn symbol_check(af: &AlphaFunction, dim: usize, xi: &Point, x: &Point, scheme: &AnnulusScheme) -> Result<SymbolResidual> {
    scheme.validate()?;
    if xi.iter().chain(x.iter()).any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("frequency and point must be finite".into()));
    }
    let a = af.value(x);
    let k = norm(xi, dim);
    let theta = dot(xi, x, dim);
    let mag = k.powf(a);
    let exact = [-mag * theta.cos(), -mag * theta.sin()];
    if k == 0.0 {
        // e_0 ≡ 1
        return Ok(SymbolResidual {
            alpha: a,
            xi: *xi,
            x: *x,
            numeric: [0.0, 0.0],
            exact: [0.0, 0.0],
            residual: 0.0,
            relative: 0.0,
            tail_bound: 0.0,
        });
    }
    let kern = stable_like_kernel(af, dim)?;
    let re = GridFunction::wave(dim, *xi, 0.0, 1.0)?;
    let im = GridFunction::wave(dim, *xi, -std::f64::consts::FRAC_PI_2, 1.0)?;
    let (vr, ar) = generator_parts::<2>(scheme, &[&kern], &re, x)?;
    let (vi, ai) = generator_parts::<2>(scheme, &[&kern], &im, x)?;
    let numeric = [vr[0] + vr[1], vi[0] + vi[1]];
    let residual = (numeric[0] - exact[0]).hypot(numeric[1] - exact[1]);
    Ok(SymbolResidual {
        alpha: a,
        xi: *xi,
        x: *x,
        numeric,
        exact,
        residual,
        relative: residual / mag,
        tail_bound: ar.tail_bound + ai.tail_bound,
    })
}
