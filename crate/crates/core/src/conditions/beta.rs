//! Integrals of the modulus of continuity β of α over (0, 1].
//!
//! With r = e^{−s} every integral becomes ∫₀^∞ g(s) ds with an integrand
//! that decays exponentially when the integral is finite; panels of unit
//! width are added until that decay is observed.

use serde::{Deserialize, Serialize};

use crate::kernels::{AlphaFunction, BetaProfile, BetaSampler};
use crate::geometry::Region;
use crate::quadrature::gauss::GaussLegendre;

/// Largest s = −ln r considered.
const S_MAX: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineIntegral {
    pub value: f64,
    pub converged: bool,
    /// Where the panel sum stopped.
    pub s_end: f64,
}

/// ∫₀^∞ g(s) ds for nonnegative g.
pub fn half_line(g: &dyn Fn(f64) -> f64) -> HalfLineIntegral {
    let gl = GaussLegendre::new(12);
    let mut total = 0.0;
    let mut prev = f64::INFINITY;
    let mut quiet = 0;
    let mut a = 0.0;
    while a < S_MAX {
        let b = a + 1.0;
        let m = gl.integrate(a, b, g);
        if !m.is_finite() {
            return HalfLineIntegral { value: f64::INFINITY, converged: false, s_end: b };
        }
        total += m;
        quiet = if m < prev && m <= 1e-15 * total { quiet + 1 } else { 0 };
        prev = m;
        a = b;
        if quiet >= 3 || (total == 0.0 && a >= 60.0) {
            return HalfLineIntegral { value: total, converged: true, s_end: a };
        }
    }
    HalfLineIntegral { value: total, converged: false, s_end: a }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaIntegrals {
    pub alpha2: f64,
    /// ∫₀¹ (β(r)|log r|)² r^{−1−α₂} dr.
    pub main: HalfLineIntegral,
    /// ∫₀¹ β(r)|log r| r^{−1−α₂} dr.
    pub lebesgue: HalfLineIntegral,
    /// ∫₀¹ β(r)|log r| r^{−α₂} dr.
    pub cs_lhs: HalfLineIntegral,
    /// (1 − 2γ)^{−1/2} · main^{1/2} with γ = max(0, (α₂ − 1)/2).
    pub cs_rhs: f64,
    pub cs_gamma: f64,
}

/// The three β integrals for a modulus given as a function of r.
pub fn beta_integrals(beta: &dyn Fn(f64) -> f64, alpha2: f64) -> BetaIntegrals {
    let b = |s: f64| beta((-s).exp());
    let main = half_line(&|s| {
        let v = b(s) * s;
        v * v * (alpha2 * s).exp()
    });
    let lebesgue = half_line(&|s| b(s) * s * (alpha2 * s).exp());
    let cs_lhs = half_line(&|s| b(s) * s * ((alpha2 - 1.0) * s).exp());
    let cs_gamma = (0.5 * (alpha2 - 1.0)).max(0.0);
    let cs_rhs = if main.converged { main.value.sqrt() / (1.0 - 2.0 * cs_gamma).sqrt() } else { f64::INFINITY };
    BetaIntegrals { alpha2, main, lebesgue, cs_lhs, cs_rhs, cs_gamma }
}

/// β as a function of r from a sampled profile: linear in ln r between
/// ladder radii, constant above the largest and a power law below the
/// smallest, with the exponent fitted on the last octave.
pub(crate) struct ProfileModulus<'a> {
    profile: &'a BetaProfile,
    exponent: f64,
}

impl<'a> ProfileModulus<'a> {
    pub fn new(profile: &'a BetaProfile, steps_per_octave: usize) -> Self {
        let v = &profile.values;
        let exponent = if v.len() > steps_per_octave && v[0] > 0.0 {
            (v[steps_per_octave] / v[0]).log2()
        } else {
            f64::INFINITY
        };
        Self { profile, exponent }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn eval(&self, r: f64) -> f64 {
        let (radii, values) = (&self.profile.radii, &self.profile.values);
        let n = radii.len();
        if n == 0 {
            return 0.0;
        }
        if r <= radii[0] {
            if values[0] == 0.0 {
                return 0.0;
            }
            return values[0] * (r / radii[0]).powf(self.exponent);
        }
        if r >= radii[n - 1] {
            return values[n - 1];
        }
        let i = radii.partition_point(|q| *q <= r) - 1;
        let t = (r / radii[i]).ln() / (radii[i + 1] / radii[i]).ln();
        values[i] + t * (values[i + 1] - values[i])
    }
}

/// Sampled β on `domain` and its integrals.
pub(crate) fn sampled_beta_integrals(
    af: &AlphaFunction,
    domain: &Region,
    sampler: &BetaSampler,
) -> (BetaIntegrals, f64, usize) {
    let profile = sampler.profile(af, domain, 1.0);
    let m = ProfileModulus::new(&profile, sampler.steps_per_octave as usize);
    let ints = beta_integrals(&|r| m.eval(r), af.alpha2());
    (ints, m.exponent(), profile.samples)
}
