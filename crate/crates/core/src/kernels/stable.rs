//! Stable-like kernels k(x,y) = w(x)|x−y|^{−n−α(x)}.

use crate::error::{Error, Result};
use crate::geometry::{check_dim, dist};
use crate::quadrature::gauss::GaussLegendre;
use crate::special::{digamma, gamma};

use super::{AlphaFunction, JumpKernel, KernelKind};

/// w(α, n) = α 2^{α−1} Γ((α+n)/2) / (π^{n/2} Γ(1−α/2)).
pub fn weight_w(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("exponent must lie in (0, 2), got {alpha}")));
    }
    if n == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (alpha + nf))
        / (std::f64::consts::PI.powf(0.5 * nf) * gamma(1.0 - 0.5 * alpha)))
}

/// d/dα ln w(α, n).
fn log_weight_slope(alpha: f64, n: usize) -> f64 {
    1.0 / alpha + std::f64::consts::LN_2 + 0.5 * digamma(0.5 * (alpha + n as f64)) + 0.5 * digamma(1.0 - 0.5 * alpha)
}

/// F(a) − F(b) for F(t) = w(t, n)·ρ^{−n−t}, given δ = a − b computed
/// accurately by the caller. Relative accuracy is kept as δ → 0.
pub(crate) fn power_difference(n: usize, rho: f64, a: f64, b: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    let wb = weight_w(b, n)?;
    let dlogw = if delta.abs() > 0.05 {
        (weight_w(a, n)? / wb).ln()
    } else {
        // ∫_b^a (ln w)' by 6-point Gauss–Legendre; avoids the rounding noise
        // of Γ in the ratio when w(a)/w(b) is close to 1
        GaussLegendre::new(6).integrate(0.0, 1.0, |s| log_weight_slope(b + s * delta, n)) * delta
    };
    let fb = wb * rho.powf(-(n as f64) - b);
    Ok(fb * (dlogw - delta * rho.ln()).exp_m1())
}

/// ∫_R^∞ cos(ξr) r^{−s} dr for ξR large, by repeated integration by parts:
/// ∫_R^∞ e^{iξr} r^{−s} dr = −e^{iξR} Σ_k (s)_k R^{−s−k} / (iξ)^{k+1}.
pub(crate) fn cos_power_tail(xi: f64, s: f64, radius: f64) -> Option<f64> {
    let xi = xi.abs();
    if xi * radius < 4.0 * (s + 8.0) {
        return None;
    }
    // c_k = (s)_k / (iξ)^{k+1}, kept as (re, im)
    let (mut cr, mut ci) = (0.0, -1.0 / xi);
    let (mut sr, mut si) = (0.0, 0.0);
    let mut rpow = radius.powf(-s);
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let (tr, ti) = (cr * rpow, ci * rpow);
        let mag = tr.hypot(ti);
        if mag > last {
            break;
        }
        sr += tr;
        si += ti;
        if mag <= 1e-18 * sr.hypot(si) {
            break;
        }
        last = mag;
        // multiply by (s + k)/(iξ) = −i (s + k)/ξ
        let f = (s + k as f64) / xi;
        (cr, ci) = (ci * f, -cr * f);
        rpow /= radius;
    }
    let (c, sn) = ((xi * radius).cos(), (xi * radius).sin());
    Some(-(c * sr - sn * si))
}

pub fn stable_like_kernel(af: &AlphaFunction, n: usize) -> Result<JumpKernel> {
    check_dim(n)?;
    // w is smooth in α; a fine sample plus a small margin bounds it on [α₁, α₂]
    let (a1, a2) = (af.alpha1(), af.alpha2());
    let mut weight_max = 0.0f64;
    for i in 0..=256 {
        let a = a1 + (a2 - a1) * i as f64 / 256.0;
        weight_max = weight_max.max(weight_w(a, n)?);
    }
    weight_max *= 1.01;

    let symmetric = af.is_constant();
    let label = format!("stable_like[n={n}, {}]", af.label());
    let kernel = if let Some(a) = af.constant_value() {
        let w = weight_w(a, n)?;
        let p = -(n as f64) - a;
        JumpKernel::from_fn(n, label, symmetric, move |x, y| w * dist(x, y, n).powf(p))?
    } else {
        let alpha = af.clone();
        JumpKernel::from_fn(n, label, symmetric, move |x, y| {
            let a = alpha.value(x);
            match weight_w(a, n) {
                Ok(w) => w * dist(x, y, n).powf(-(n as f64) - a),
                Err(_) => f64::NAN,
            }
        })?
    };
    let weight = af.constant_value().map(|a| weight_w(a, n)).transpose()?;
    Ok(kernel.with_kind(KernelKind::StableLike { alpha: af.clone(), weight_max, weight }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::split;
    use std::f64::consts::PI;

    #[test]
    fn weight_reference_values() {
        assert!((weight_w(1.0, 1).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((weight_w(0.5, 1).unwrap() - 1.0 / (2.0 * (2.0 * PI).sqrt())).abs() < 1e-14);
        // n = 2, α = 1: Γ(3/2)/(π Γ(1/2)) = 1/(2π)
        assert!((weight_w(1.0, 2).unwrap() - 0.5 / PI).abs() < 1e-14);
    }

    #[test]
    fn weight_positive_and_domain_checked() {
        for i in 0..50 {
            let a = 0.05 + 1.9 * i as f64 / 49.0;
            for n in [1, 2] {
                assert!(weight_w(a, n).unwrap() > 0.0);
            }
        }
        assert!(weight_w(0.0, 1).is_err());
        assert!(weight_w(2.0, 1).is_err());
        assert!(weight_w(f64::NAN, 1).is_err());
    }

    #[test]
    fn constant_alpha_kernel_values() {
        let k = stable_like_kernel(&AlphaFunction::constant(1.0).unwrap(), 1).unwrap();
        assert!(k.symmetric_hint());
        for z in [0.1, 0.5, 3.0] {
            let v = k.eval(&[0.0, 0.0], &[z, 0.0]);
            assert!((v - 1.0 / (PI * z * z)).abs() < 1e-13 * v);
        }
    }

    #[test]
    fn variable_alpha_kernel() {
        let af = AlphaFunction::sine(1.0, 0.25, 1.0).unwrap();
        let k = stable_like_kernel(&af, 1).unwrap();
        assert!(!k.symmetric_hint());
        assert!((k.eval(&[0.0, 0.0], &[1.0, 0.0]) - 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn power_difference_matches_subtraction() {
        for (rho, a, b) in [(0.3, 1.2, 0.9), (2.0, 1.0, 1.00001), (1e-3, 0.7, 0.70000001)] {
            let f = |t: f64| weight_w(t, 1).unwrap() * f64::powf(rho, -1.0 - t);
            let d = power_difference(1, rho, a, b, a - b).unwrap();
            let direct = f(a) - f(b);
            assert!((d - direct).abs() <= 1e-7 * direct.abs(), "{d} vs {direct}");
        }
        // tiny δ: compare with derivative
        let (rho, b, delta) = (0.01, 1.3, 1e-14);
        let d = power_difference(2, rho, b + delta, b, delta).unwrap();
        let h = 1e-5;
        let f = |t: f64| weight_w(t, 2).unwrap() * f64::powf(rho, -2.0 - t);
        let slope = (f(b + h) - f(b - h)) / (2.0 * h);
        assert!((d / delta - slope).abs() < 1e-6 * slope.abs());
    }

    #[test]
    fn oscillatory_tail_matches_quadrature() {
        let (xi, s, r) = (2.0, 2.0, 40.0);
        let got = cos_power_tail(xi, s, r).unwrap();
        // brute force: composite Simpson to a far cutoff, remainder bounded by R^{-s}/ξ
        let end = 4000.0;
        let n = 4_000_000;
        let h = (end - r) / n as f64;
        let f = |t: f64| (xi * t).cos() * t.powf(-s);
        let mut acc = f(r) + f(end);
        for i in 1..n {
            acc += f(r + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let want = acc * h / 3.0;
        assert!((got - want).abs() < 2.0 * end.powf(-s) / xi, "{got} vs {want}");
        assert!(cos_power_tail(1.0, 2.0, 1.0).is_none());
    }

    #[test]
    fn split_antisymmetry_at_many_pairs() {
        let af = AlphaFunction::tanh(1.0, 0.1, 1.0).unwrap();
        let k = stable_like_kernel(&af, 1).unwrap();
        let sk = split(&k).unwrap();
        let mut s = 12345u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 8.0 - 4.0
        };
        for _ in 0..1000 {
            let x = [next(), 0.0];
            let y = [next(), 0.0];
            if x == y {
                continue;
            }
            let (ka, kat) = (sk.ka(&x, &y).unwrap(), sk.ka(&y, &x).unwrap());
            let ks = sk.ks(&x, &y).unwrap();
            assert_eq!(ka, -kat);
            assert_eq!(ks, sk.ks(&y, &x).unwrap());
            let base = k.eval(&x, &y);
            assert!((ks + ka - base).abs() <= 1e-14 * base, "x={x:?} y={y:?} ks={ks} ka={ka} base={base} rel={}", (ks + ka - base) / base);
            assert!(ka.abs() <= ks);
        }
    }
}
