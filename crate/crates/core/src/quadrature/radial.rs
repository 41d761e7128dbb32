use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::geometry::Point;

use super::gauss::GaussLegendre;
use super::AnnulusScheme;

/// Outcome of the adaptive inner refinement on 0 < |z| ≤ r_break.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Remainder {
    /// Extrapolated size of the part of the ball not integrated.
    pub estimate: f64,
    /// Radius of the innermost shell that was integrated.
    pub innermost: f64,
    pub shells: usize,
}

impl Remainder {
    pub const NONE: Remainder = Remainder { estimate: 0.0, innermost: 0.0, shells: 0 };

    pub fn combine(self, other: Remainder) -> Remainder {
        Remainder {
            estimate: self.estimate + other.estimate,
            innermost: if self.shells == 0 {
                other.innermost
            } else if other.shells == 0 {
                self.innermost
            } else {
                self.innermost.min(other.innermost)
            },
            shells: self.shells.max(other.shells),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerResult<const K: usize> {
    pub values: [f64; K],
    pub remainder: Remainder,
}

/// Result of integrating outward to the numerical far radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FarResult<const K: usize> {
    pub values: [f64; K],
    /// Radius where integration actually stopped (≥ the requested end).
    pub end: f64,
    /// Extrapolated mass beyond `end` (used only when the density has no
    /// tail formula).
    pub extrapolated: f64,
}

/// Multiple of the variation length integrated numerically by `far`.
const VARIATION_SPAN: f64 = 256.0;

/// Directions, radial panels and Gauss–Legendre rule for one base point.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    dim: usize,
    scheme: AnnulusScheme,
    dirs: Vec<(Point, f64)>,
    splits: Vec<f64>,
    feature: f64,
    reach: f64,
    /// Panel width limit for the density and the radius it applies to.
    variation: f64,
    variation_reach: f64,
    resolution: f64,
    gl: GaussLegendre,
}

impl Engine {
    pub fn new(scheme: &AnnulusScheme, dim: usize) -> Self {
        let mut e = Self {
            dim,
            scheme: *scheme,
            dirs: Vec::new(),
            splits: Vec::new(),
            feature: f64::INFINITY,
            reach: f64::INFINITY,
            variation: f64::INFINITY,
            variation_reach: f64::INFINITY,
            resolution: 0.0,
            gl: GaussLegendre::new(scheme.nodes_per_annulus),
        };
        e.set_directions(scheme.directions());
        e
    }

    pub fn set_directions(&mut self, m: usize) {
        self.dirs = if self.dim == 1 {
            vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0)]
        } else {
            let m = (m + m % 2).max(2);
            let w = 2.0 * std::f64::consts::PI / m as f64;
            (0..m)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    ([t.cos(), t.sin()], w)
                })
                .collect()
        };
    }

    /// Refine panels for `u` seen from `x`: breakpoints (1D), feature length,
    /// and the radius beyond which u(x+z) = 0.
    pub fn with_function(mut self, u: &GridFunction, x: &Point) -> Self {
        if self.dim == 1 {
            self.splits.extend(u.breakpoints().iter().map(|b| (b - x[0]).abs()).filter(|r| *r > 0.0));
        }
        self.feature = self.feature.min(u.feature_length());
        let reach = u.reach(x);
        self.reach = if self.reach.is_finite() { self.reach.max(reach) } else { reach };
        self.normalize();
        self
    }

    pub fn with_breaks(mut self, radii: &[f64]) -> Self {
        self.splits.extend(radii.iter().copied().filter(|r| *r > 0.0 && r.is_finite()));
        self.normalize();
        self
    }

    /// Keep panels narrower than `len` out to `VARIATION_SPAN·len`; `far`
    /// stops there and leaves the rest to the caller's tail.
    pub fn with_variation(mut self, len: f64) -> Self {
        if len.is_finite() && len > 0.0 {
            self.variation = self.variation.min(len);
            self.variation_reach = VARIATION_SPAN * self.variation;
        }
        self
    }

    /// Inner shells stop above this radius (see `Density::resolution`).
    pub fn with_resolution(mut self, r: f64) -> Self {
        self.resolution = self.resolution.max(r);
        self
    }

    fn normalize(&mut self) {
        self.splits.sort_by(f64::total_cmp);
        self.splits.dedup();
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn scheme(&self) -> &AnnulusScheme {
        &self.scheme
    }

    fn panel_points(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        let g = self.scheme.growth;
        let mut pts = vec![a];
        let mut r = a * g;
        while r < b * (1.0 - 1e-14) {
            pts.push(r);
            r *= g;
        }
        pts.extend(self.splits.iter().copied().filter(|s| *s > a && *s < b));
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|p, q| (*p - *q).abs() <= 1e-15 * q.abs());
        if self.feature.is_finite() || self.variation.is_finite() {
            let mut refined = Vec::with_capacity(pts.len());
            for w in pts.windows(2) {
                refined.push(w[0]);
                let mut width = f64::INFINITY;
                if w[0] < self.reach {
                    width = self.feature;
                }
                if w[0] < self.variation_reach {
                    width = width.min(self.variation);
                }
                if width.is_finite() {
                    let n = ((w[1] - w[0]) / width).ceil() as usize;
                    for i in 1..n {
                        refined.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
                    }
                }
            }
            refined.push(b);
            pts = refined;
        }
        if pts.len() > self.scheme.max_panels {
            return Err(Error::NoConvergence(format!(
                "radial range [{a:e}, {b:e}] needs {} panels, budget is {}",
                pts.len() - 1,
                self.scheme.max_panels
            )));
        }
        Ok(pts)
    }

    /// Directions and their angular weights.
    pub fn directions(&self) -> &[(Point, f64)] {
        &self.dirs
    }

    /// ∫_a^b f(ρ·dir) ρ^{n−1} dρ along one direction.
    pub fn ray<const K: usize, F>(&self, dir: &Point, a: f64, b: f64, f: &F) -> Result<[f64; K]>
    where
        F: Fn(&Point) -> Result<[f64; K]> + ?Sized,
    {
        let mut acc = [0.0; K];
        if !(b > a) {
            return Ok(acc);
        }
        let cap = self.scheme.magnitude_cap;
        for w in self.panel_points(a, b)?.windows(2) {
            for (rho, wr) in self.gl.mapped(w[0], w[1]) {
                let vals = f(&[dir[0] * rho, dir[1] * rho])?;
                let jac = if self.dim == 1 { wr } else { wr * rho };
                for k in 0..K {
                    if !(vals[k].abs() <= cap) {
                        return Err(Error::QuadratureOverflow { radius: rho, magnitude: vals[k].abs(), cap });
                    }
                    acc[k] += jac * vals[k];
                }
            }
        }
        Ok(acc)
    }

    /// ∫_{a ≤ |z| ≤ b} f(z) dz per channel, plus ∫ Σ_k |f_k|.
    pub fn annulus<const K: usize, F>(&self, a: f64, b: f64, f: &F) -> Result<([f64; K], f64)>
    where
        F: Fn(&Point) -> Result<[f64; K]> + ?Sized,
    {
        let mut acc = [0.0; K];
        let mut mass = 0.0;
        if !(b > a) {
            return Ok((acc, mass));
        }
        let pts = self.panel_points(a, b)?;
        let cap = self.scheme.magnitude_cap;
        for &(d, wd) in &self.dirs {
            for w in pts.windows(2) {
                for (rho, wr) in self.gl.mapped(w[0], w[1]) {
                    let z = [d[0] * rho, d[1] * rho];
                    let vals = f(&z)?;
                    let jac = if self.dim == 1 { wd * wr } else { wd * wr * rho };
                    for k in 0..K {
                        let v = vals[k];
                        if !(v.abs() <= cap) {
                            if v.is_nan() {
                                return Err(Error::Domain(format!("integrand is NaN at |z|={rho:e}")));
                            }
                            return Err(Error::QuadratureOverflow { radius: rho, magnitude: v.abs(), cap });
                        }
                        acc[k] += jac * v;
                        mass += jac * v.abs();
                    }
                }
            }
        }
        Ok((acc, mass))
    }

    /// Shells [r_break·g^{−j−1}, r_break·g^{−j}] down to eps_min, then further
    /// until the geometric extrapolation of the shell masses is below the
    /// tolerance.
    pub fn inner<const K: usize, F>(&self, f: &F) -> Result<InnerResult<K>>
    where
        F: Fn(&Point) -> Result<[f64; K]> + ?Sized,
    {
        let s = &self.scheme;
        let g = s.growth;
        let mut values = [0.0; K];
        let mut hi = s.r_break;
        let mut masses: Vec<f64> = Vec::new();
        let mut shells = 0usize;
        let mut calm = 0usize;
        loop {
            let lo = hi / g;
            if lo < self.resolution {
                // cannot refine further: accept a decaying shell sequence
                let n = masses.len();
                let last = masses.last().copied().unwrap_or(0.0);
                if last == 0.0 {
                    return Ok(InnerResult { values, remainder: Remainder { estimate: 0.0, innermost: hi, shells } });
                }
                if n >= 2 && masses[n - 2] > last {
                    let q = last / masses[n - 2];
                    let est = last * q / (1.0 - q);
                    return Ok(InnerResult { values, remainder: Remainder { estimate: est, innermost: hi, shells } });
                }
                return Err(Error::NoConvergence(format!(
                    "inner shells reached the kernel resolution {:e} without decay",
                    self.resolution
                )));
            }
            let (v, m) = self.annulus(lo, hi, f)?;
            for k in 0..K {
                values[k] += v[k];
            }
            masses.push(m);
            shells += 1;
            hi = lo;
            if lo > s.eps_min * (1.0 + 1e-12) {
                continue;
            }
            let tol = s.inner_tolerance(masses.iter().sum());
            let n = masses.len();
            if m == 0.0 && (n < 2 || masses[n - 2] == 0.0) {
                return Ok(InnerResult { values, remainder: Remainder { estimate: 0.0, innermost: lo, shells } });
            }
            if n >= 2 && masses[n - 2] > 0.0 {
                let q = m / masses[n - 2];
                if q < 1.0 {
                    let est = m * q / (1.0 - q);
                    calm = if est <= tol { calm + 1 } else { 0 };
                    if calm >= 2 {
                        return Ok(InnerResult { values, remainder: Remainder { estimate: est, innermost: lo, shells } });
                    }
                } else {
                    calm = 0;
                }
            }
            if lo < s.inner_floor {
                return Err(Error::NoConvergence(format!(
                    "inner shells reached |z| = {lo:e} with mass {m:e} still above tolerance {tol:e}"
                )));
            }
        }
    }

    /// ∫_{a ≤ |z| ≤ end} in whole geometric blocks, end ≥ b, except that
    /// `end` never passes the variation reach; the mass ratio of the last two blocks
    /// gives an extrapolated bound for |z| > end.
    pub fn far<const K: usize, F>(&self, a: f64, b: f64, f: &F) -> Result<FarResult<K>>
    where
        F: Fn(&Point) -> Result<[f64; K]> + ?Sized,
    {
        let mut values = [0.0; K];
        let (mut prev, mut last) = (f64::NAN, f64::NAN);
        let mut lo = a;
        // whole blocks past b, but never past the variation reach
        let cap = self.variation_reach.max(a);
        let b = b.min(cap);
        // blocks of four growth steps keep the call count low
        let step = self.scheme.growth.powi(4);
        while lo < b {
            let hi = (lo * step).min(cap);
            let (v, m) = self.annulus(lo, hi, f)?;
            for k in 0..K {
                values[k] += v[k];
            }
            prev = last;
            last = m;
            lo = hi;
        }
        let extrapolated = if last == 0.0 {
            0.0
        } else if prev > last {
            let q = last / prev;
            last * q / (1.0 - q)
        } else {
            f64::INFINITY
        };
        Ok(FarResult { values, end: lo, extrapolated })
    }
}
