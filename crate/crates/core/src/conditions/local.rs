//! Per-point integrals behind the condition checks. All of them split at
//! |z| = 1: inner shells below, geometric panels and tails above.

use crate::error::Result;
use crate::geometry::{norm, Point};
use crate::kernels::{Density, JumpKernel, SplitKernel, Tail};
use crate::quadrature::radial::Engine;
use crate::quadrature::AnnulusScheme;

/// The scheme with the split radius pinned to 1.
pub(crate) fn unit_scheme(s: &AnnulusScheme) -> AnnulusScheme {
    let mut s = *s;
    s.r_break = 1.0;
    if s.eps_min >= 1.0 {
        s.eps_min = 1e-3;
    }
    s.r_max = s.r_max.max(1.0);
    s
}

fn engine(s: &AnnulusScheme, k: &JumpKernel, x: &Point) -> Engine {
    Engine::new(s, k.dim())
        .with_breaks(Density::radial_breaks(k))
        .with_resolution(Density::resolution(k, x))
        .with_variation(k.transposed().far_variation(x))
}

/// ∫_{0<|z|≤1} f(z) dz.
fn near(s: &AnnulusScheme, k: &JumpKernel, x: &Point, f: &dyn Fn(&Point) -> Result<f64>) -> Result<f64> {
    let g = |z: &Point| -> Result<[f64; 1]> { Ok([f(z)?]) };
    Ok(engine(s, k, x).inner(&g)?.values[0])
}

/// ∫_{|z|≥1} f(z) dz, using `tail` when it is exact.
fn far(
    s: &AnnulusScheme,
    k: &JumpKernel,
    x: &Point,
    f: &dyn Fn(&Point) -> Result<f64>,
    tail: Option<&dyn Fn(f64) -> Tail>,
) -> Result<f64> {
    if let Some(t) = tail {
        let t1 = t(1.0);
        if t1.error_bound == Some(0.0) {
            return Ok(t1.estimate);
        }
    }
    let g = |z: &Point| -> Result<[f64; 1]> { Ok([f(z)?]) };
    let r = engine(s, k, x).far(1.0, s.r_max, &g)?;
    let rest = match tail {
        Some(t) => t(r.end).estimate,
        // no tail formula: geometric panels the rest of the way
        None if r.end < s.r_max => {
            let plain = Engine::new(s, k.dim()).with_breaks(Density::radial_breaks(k));
            plain.far(r.end, s.r_max, &g)?.values[0]
        }
        None => 0.0,
    };
    Ok(r.values[0] + rest)
}

/// ∫ (1 ∧ |z|²) k_s(x, x+z) dz.
pub fn a0_density(sk: &SplitKernel, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    let s = unit_scheme(scheme);
    let ks = sk.symmetric();
    let dim = sk.dim();
    let inner = near(&s, sk.base(), x, &|z| {
        let r = norm(z, dim);
        Ok(r * r * ks.at(x, z)?)
    })?;
    Ok(inner + far_symmetric_mass(sk, x, scheme)?)
}

/// ∫_{|z|≥1} k_s(x, x+z) dz.
pub fn far_symmetric_mass(sk: &SplitKernel, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    let s = unit_scheme(scheme);
    let ks = sk.symmetric();
    far(&s, sk.base(), x, &|z| ks.at(x, z), Some(&|r| ks.tail(x, r)))
}

fn ratio(ka: f64, ks: f64) -> f64 {
    if ks == 0.0 {
        0.0
    } else {
        ka * ka / ks
    }
}

/// h(x) = ∫ k_a(x, y)² / k_s(x, y) dy, integrand 0 where k_s = 0.
pub fn sector_density(sk: &SplitKernel, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    if sk.antisymmetric().vanishes() {
        return Ok(0.0);
    }
    let s = unit_scheme(scheme);
    let (ks, ka) = (sk.symmetric(), sk.antisymmetric());
    let f = |z: &Point| -> Result<f64> {
        let s_val = ks.at(x, z)?;
        if s_val < 0.0 {
            return Err(crate::error::Error::NegativeKernel {
                x: *x,
                y: crate::geometry::add(x, z),
                value: s_val,
            });
        }
        Ok(ratio(ka.at(x, z)?, s_val))
    };
    Ok(near(&s, sk.base(), x, &f)? + far(&s, sk.base(), x, &f, None)?)
}

/// ∫_{|z|≥1} |k_a(x, x+z)| dz.
pub fn far_antisymmetric_mass(sk: &SplitKernel, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    if sk.antisymmetric().vanishes() {
        return Ok(0.0);
    }
    let s = unit_scheme(scheme);
    let ka = sk.antisymmetric();
    far(&s, sk.base(), x, &|z| Ok(ka.at(x, z)?.abs()), None)
}

/// ∫_{0<|z|<1} |k_a(x, x+z)|^γ dz.
pub fn near_antisymmetric_power(sk: &SplitKernel, gamma: f64, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    if sk.antisymmetric().vanishes() {
        return Ok(0.0);
    }
    let s = unit_scheme(scheme);
    let ka = sk.antisymmetric();
    near(&s, sk.base(), x, &|z| Ok(ka.at(x, z)?.abs().powf(gamma)))
}

/// Largest |k_a|^{2−γ}/k_s(x, x+z) over 0 < |z| ≤ 1 on the radius ladder
/// 2^{−j/4} (all engine directions), returned for the ladder cut at 2^{−20}
/// and at the full depth 2^{−40}, plus the maximizing offset.
pub fn near_ratio_sup(
    sk: &SplitKernel,
    gamma: f64,
    x: &Point,
    scheme: &AnnulusScheme,
) -> Result<(f64, f64, Point)> {
    if sk.antisymmetric().vanishes() {
        return Ok((0.0, 0.0, [0.0; 2]));
    }
    let (ks, ka) = (sk.symmetric(), sk.antisymmetric());
    let e = engine(&unit_scheme(scheme), sk.base(), x);
    let floor = Density::resolution(sk.base(), x);
    let (mut shallow, mut deep, mut arg) = (0.0f64, 0.0f64, [0.0; 2]);
    for j in 0..=160 {
        let r = 2f64.powf(-(j as f64) / 4.0);
        if r <= floor {
            break;
        }
        for (d, _) in e.directions() {
            let z = [d[0] * r, d[1] * r];
            let s_val = ks.at(x, &z)?;
            let v = if s_val == 0.0 { 0.0 } else { ka.at(x, &z)?.abs().powf(2.0 - gamma) / s_val };
            if !v.is_finite() {
                return Err(crate::error::Error::Domain(format!("ratio is not finite at |z| = {r:e}")));
            }
            if v > deep {
                deep = v;
                arg = z;
            }
            if j <= 80 {
                shallow = shallow.max(v);
            }
        }
    }
    Ok((shallow, deep, arg))
}

/// ∫_{0<|z|≤1} |z| |k_a(x, x+z)| dz.
pub fn cond4_density(sk: &SplitKernel, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    if sk.antisymmetric().vanishes() {
        return Ok(0.0);
    }
    let s = unit_scheme(scheme);
    let ka = sk.antisymmetric();
    let dim = sk.dim();
    near(&s, sk.base(), x, &|z| Ok(norm(z, dim) * ka.at(x, z)?.abs()))
}

/// ∫_{0<|z|≤1} |z| j*(x, z) dz with
/// j*(x, z) = |j(x, x+z) − j(x, x−z)| + |j(x+z, x) − j(x−z, x)|.
pub fn h3_density(j: &JumpKernel, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    if j.symmetric_hint() && j.alpha().is_some() {
        return Ok(0.0);
    }
    let s = unit_scheme(scheme);
    let dim = j.dim();
    near(&s, j, x, &|z| Ok(norm(z, dim) * (j.forward_odd(x, z)?.abs() + j.backward_odd(x, z)?.abs())))
}
