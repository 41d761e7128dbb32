use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::geometry::{dot, norm, scale, Point};
use crate::kernels::Density;

use super::radial::{Engine, Remainder};
use super::AnnulusScheme;

/// Partial values of a principal-value (or vague) limit along a decreasing
/// sequence of truncation radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PVEstimate {
    pub eps_sequence: Vec<f64>,
    pub partials: Vec<f64>,
    /// Last partial.
    pub value: f64,
    pub converged: bool,
    pub last_delta: f64,
    pub tolerance: f64,
}

impl PVEstimate {
    pub(crate) fn from_partials(eps_sequence: Vec<f64>, partials: Vec<f64>, scheme: &AnnulusScheme) -> Self {
        let value = partials.last().copied().unwrap_or(0.0);
        let last_delta = match partials.len() {
            0 | 1 => f64::INFINITY,
            n => (partials[n - 1] - partials[n - 2]).abs(),
        };
        let tolerance = scheme.tolerance(value);
        Self { eps_sequence, partials, value, converged: last_delta <= tolerance, last_delta, tolerance }
    }
}

/// εₘ = 2^{−m}, m = 1..20.
pub fn default_eps_sequence() -> Vec<f64> {
    (1..=20).map(|m| 2f64.powi(-m)).collect()
}

pub(crate) fn check_eps_sequence(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || !eps.iter().all(|e| *e > 0.0 && e.is_finite()) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps sequence must be nonempty, positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Error accounting for one radial integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub inner: Remainder,
    /// Bound on the error of the far field beyond the last panel.
    pub tail_bound: f64,
}

impl Accuracy {
    pub const EXACT: Accuracy = Accuracy { inner: Remainder::NONE, tail_bound: 0.0 };
}

/// Base point data shared by every integrand built on a function.
pub(crate) struct Probe<'a> {
    pub u: &'a GridFunction,
    pub x: Point,
    pub ux: f64,
    pub grad: Point,
    pub dim: usize,
}

impl<'a> Probe<'a> {
    pub fn new(u: &'a GridFunction, x: &Point) -> Self {
        Self { u, x: *x, ux: u.value(x), grad: u.gradient(x), dim: u.dim() }
    }

    /// ¼[(r₊ + r₋)(D₊ + D₋) + (i₊ − i₋)(D₊ − D₋)], which sums over ±z to
    /// i₊D₊ + i₋D₋ while avoiding the first-order cancellation between the
    /// two directions (r = second-order remainder, i = increment).
    pub fn symmetric_truncated(&self, d: &dyn Density, z: &Point) -> Result<f64> {
        let mz = scale(z, -1.0);
        let rp = self.u.remainder(&self.x, z);
        let rm = self.u.remainder(&self.x, &mz);
        let ip = self.u.increment(&self.x, z);
        let im = self.u.increment(&self.x, &mz);
        let dp = d.at(&self.x, z)?;
        let dm = d.at(&self.x, &mz)?;
        let odd = d.odd(&self.x, z)?;
        Ok(0.25 * ((rp + rm) * (dp + dm) + (ip - im) * odd))
    }

    pub fn plain(&self, d: &dyn Density, z: &Point) -> Result<f64> {
        Ok(self.u.increment(&self.x, z) * d.at(&self.x, z)?)
    }

    pub fn compensated(&self, d: &dyn Density, z: &Point) -> Result<f64> {
        Ok(self.u.remainder(&self.x, z) * d.at(&self.x, z)?)
    }

    /// Drift integrand ½∇u·z (D(z) − D(−z)).
    pub fn drift(&self, d: &dyn Density, z: &Point) -> Result<f64> {
        let gz = dot(&self.grad, z, self.dim);
        if gz == 0.0 {
            return Ok(0.0);
        }
        Ok(0.5 * gz * d.odd(&self.x, z)?)
    }

    /// Tail of ∫_{|z|>R} (u(x+z) − u(x)) D dz and a bound on its error.
    pub fn far_tail(&self, d: &dyn Density, radius: f64, u_far: bool) -> (f64, f64) {
        let t = d.tail(&self.x, radius);
        let mut est = -self.ux * t.estimate;
        let mut bound = match t.error_bound {
            Some(b) => self.ux.abs() * b,
            None => f64::NAN,
        };
        if u_far {
            // u(x+z) still nonzero beyond R: plane waves only
            let (xi, phase, amp) = self.u.wave_parameters().expect("non-compact function must be a plane wave");
            let theta = dot(&xi, &self.x, self.dim) + phase;
            match d.cos_tail(&self.x, &xi, theta, radius) {
                Some(c) => est += amp * c,
                None => bound += amp.abs() * t.estimate.abs() + t.error_bound.unwrap_or(f64::NAN),
            }
        }
        (est, bound)
    }
}

/// Numerical far radius for function problems.
pub(crate) struct FarPlan {
    /// Where panel integration stops.
    pub end: f64,
    /// True when u(x+z) may be nonzero beyond `end`.
    pub u_far: bool,
}

pub(crate) fn far_plan(engine: &Engine, u: &GridFunction, exact_tails: bool) -> FarPlan {
    let s = engine.scheme();
    let reach = engine.reach();
    if reach.is_finite() {
        let end = if exact_tails { reach.max(s.r_break) } else { reach.max(s.r_max) };
        return FarPlan { end, u_far: false };
    }
    // plane wave: integrate a fixed number of periods past the compensator radius
    let k = u.wave_parameters().map(|(xi, _, _)| norm(&xi, u.dim())).unwrap_or(0.0);
    let end = if k > 0.0 { (200.0 / k).max(4.0 * s.r_break) } else { 4.0 * s.r_break };
    FarPlan { end, u_far: true }
}

/// Far-field integration from `from` outward for K channels. `tails(R)`
/// returns (estimate, error bound or NaN when unknown) per channel.
pub(crate) fn far_field<const K: usize>(
    engine: &Engine,
    from: f64,
    plan: &FarPlan,
    f: &(dyn Fn(&Point) -> Result<[f64; K]> + Sync),
    tails: &dyn Fn(f64) -> [(f64, f64); K],
) -> Result<([f64; K], f64)> {
    let mut values = [0.0; K];
    let mut bound = 0.0;
    if plan.end <= from {
        let t = tails(from);
        for k in 0..K {
            values[k] = t[k].0;
            bound += t[k].1;
        }
        return Ok((values, bound));
    }
    let (end, extrapolated) = if plan.u_far || plan.end <= engine.scheme().r_break * 4.0 {
        let (v, _) = engine.annulus(from, plan.end, f)?;
        values = v;
        (plan.end, f64::NAN)
    } else {
        let r = engine.far(from, plan.end, f)?;
        values = r.values;
        (r.end, r.extrapolated)
    };
    let t = tails(end);
    for k in 0..K {
        values[k] += t[k].0;
        bound += if t[k].1.is_nan() { extrapolated } else { t[k].1 };
    }
    if bound.is_nan() {
        bound = f64::INFINITY;
    }
    Ok((values, bound))
}

fn resolution(d: &[&dyn Density], x: &Point) -> f64 {
    d.iter().fold(0.0, |a, d| a.max(d.resolution(x)))
}

fn variation(d: &[&dyn Density], x: &Point) -> f64 {
    d.iter().fold(f64::INFINITY, |a, d| a.min(d.far_variation(x)))
}

pub(crate) fn check_resolution(res: f64, eps: &[f64]) -> Result<()> {
    match eps.last() {
        Some(e) if *e < res => Err(Error::Domain(format!(
            "truncation radius {e:e} is below the kernel resolution {res:e} at this point"
        ))),
        _ => Ok(()),
    }
}

fn exact_tails(d: &[&dyn Density], x: &Point) -> bool {
    d.iter().all(|d| d.tail(x, 1.0).error_bound == Some(0.0))
}

/// Compensated integrals and drift terms for several densities on shared
/// nodes: channels [comp_0 .. comp_{K−1}, drift_0 .. drift_{K−1}], N = 2K.
pub(crate) fn generator_parts<const N: usize>(
    scheme: &AnnulusScheme,
    dens: &[&dyn Density],
    u: &GridFunction,
    x: &Point,
) -> Result<([f64; N], Accuracy)> {
    let k = dens.len();
    assert_eq!(N, 2 * k, "channel count must be twice the number of densities");
    if u.is_constant() {
        return Ok(([0.0; N], Accuracy::EXACT));
    }
    let dim = u.dim();
    let breaks: Vec<f64> = dens.iter().flat_map(|d| d.radial_breaks().iter().copied()).collect();
    let engine = Engine::new(scheme, dim).with_function(u, x).with_breaks(&breaks).with_resolution(resolution(dens, x)).with_variation(variation(dens, x));
    let p = Probe::new(u, x);

    let inner = |z: &Point| -> Result<[f64; N]> {
        let mut out = [0.0; N];
        for (i, d) in dens.iter().enumerate() {
            out[i] = p.compensated(*d, z)?;
            out[k + i] = p.drift(*d, z)?;
        }
        Ok(out)
    };
    let ir = engine.inner(&inner)?;

    let plan = far_plan(&engine, u, exact_tails(dens, x));
    let outer = |z: &Point| -> Result<[f64; N]> {
        let mut out = [0.0; N];
        for (i, d) in dens.iter().enumerate() {
            out[i] = p.plain(*d, z)?;
        }
        Ok(out)
    };
    let tails = |r: f64| -> [(f64, f64); N] {
        let mut t = [(0.0, 0.0); N];
        for (i, d) in dens.iter().enumerate() {
            t[i] = p.far_tail(*d, r, plan.u_far);
        }
        t
    };
    let (fv, tail_bound) = far_field(&engine, scheme.r_break, &plan, &outer, &tails)?;
    let mut values = ir.values;
    for i in 0..N {
        values[i] += fv[i];
    }
    Ok((values, Accuracy { inner: ir.remainder, tail_bound }))
}

/// ∫ (u(x+z) − u(x)) D(x, z) dz over all z ≠ 0, for densities where this is
/// absolutely convergent.
pub(crate) fn absolute_parts<const K: usize>(
    scheme: &AnnulusScheme,
    dens: &[&dyn Density],
    u: &GridFunction,
    x: &Point,
) -> Result<([f64; K], Accuracy)> {
    assert_eq!(K, dens.len());
    if u.is_constant() || dens.iter().all(|d| d.vanishes()) {
        return Ok(([0.0; K], Accuracy::EXACT));
    }
    let breaks: Vec<f64> = dens.iter().flat_map(|d| d.radial_breaks().iter().copied()).collect();
    let engine =
        Engine::new(scheme, u.dim()).with_function(u, x).with_breaks(&breaks).with_resolution(resolution(dens, x)).with_variation(variation(dens, x));
    let p = Probe::new(u, x);
    let f = |z: &Point| -> Result<[f64; K]> {
        let mut out = [0.0; K];
        for (i, d) in dens.iter().enumerate() {
            out[i] = p.plain(*d, z)?;
        }
        Ok(out)
    };
    let ir = engine.inner(&f)?;
    let plan = far_plan(&engine, u, exact_tails(dens, x));
    let tails = |r: f64| -> [(f64, f64); K] {
        let mut t = [(0.0, 0.0); K];
        for (i, d) in dens.iter().enumerate() {
            t[i] = p.far_tail(*d, r, plan.u_far);
        }
        t
    };
    let (fv, tail_bound) = far_field(&engine, scheme.r_break, &plan, &f, &tails)?;
    let mut values = ir.values;
    for i in 0..K {
        values[i] += fv[i];
    }
    Ok((values, Accuracy { inner: ir.remainder, tail_bound }))
}

/// Γ(x) = ∫ (u(x+z) − u(x))(v(x+z) − v(x)) D(x, z) dz over all z ≠ 0.
pub(crate) fn energy_density(
    scheme: &AnnulusScheme,
    d: &dyn Density,
    u: &GridFunction,
    v: &GridFunction,
    x: &Point,
) -> Result<(f64, Accuracy)> {
    if u.is_constant() || v.is_constant() || d.vanishes() {
        return Ok((0.0, Accuracy::EXACT));
    }
    let engine = Engine::new(scheme, u.dim())
        .with_function(u, x)
        .with_function(v, x)
        .with_breaks(d.radial_breaks())
        .with_resolution(d.resolution(x))
        .with_variation(d.far_variation(x));
    let f = |z: &Point| -> Result<[f64; 1]> {
        let a = u.increment(x, z);
        if a == 0.0 {
            return Ok([0.0]);
        }
        Ok([a * v.increment(x, z) * d.at(x, z)?])
    };
    let ir = engine.inner(&f)?;
    let plan = far_plan(&engine, u, exact_tails(&[d], x));
    if plan.u_far {
        return Err(Error::InvalidArgument("energy needs compactly supported functions".into()));
    }
    let uv = u.value(x) * v.value(x);
    let tails = |r: f64| {
        let t = d.tail(x, r);
        [(uv * t.estimate, t.error_bound.map_or(f64::NAN, |b| uv.abs() * b))]
    };
    let (fv, tail_bound) = far_field(&engine, scheme.r_break, &plan, &f, &tails)?;
    Ok((ir.values[0] + fv[0], Accuracy { inner: ir.remainder, tail_bound }))
}

/// ∫_{y+z ∉ region} D(y, z) dz for y inside the box `region`, with an error
/// bound for the far field.
pub(crate) fn outside_mass(
    scheme: &AnnulusScheme,
    d: &dyn Density,
    region: &crate::geometry::Region,
    y: &Point,
) -> Result<(f64, f64)> {
    let engine = Engine::new(scheme, d.dim()).with_breaks(d.radial_breaks()).with_variation(d.far_variation(y));
    let f = |z: &Point| -> Result<[f64; 1]> { Ok([d.at(y, z)?]) };
    let big = region.max_distance(y).max(scheme.r_break);
    let mut acc = 0.0;
    for (dir, w) in engine.directions() {
        let e = region.exit_distance(y, dir);
        if e < big {
            acc += w * engine.ray(dir, e, big, &f)?[0];
        }
    }
    let t = d.tail(y, big);
    if t.error_bound == Some(0.0) {
        return Ok((acc + t.estimate, 0.0));
    }
    let far = engine.far(big, scheme.r_max, &f)?;
    let t = d.tail(y, far.end);
    let bound = t.error_bound.unwrap_or(far.extrapolated);
    Ok((acc + far.values[0] + t.estimate, bound))
}

/// Partials ∫_{|z|≥εₘ} (u(x+z) − u(x)) D(x, z) dz for every m, computed
/// cumulatively, with the error bound of the common far field.
pub(crate) fn truncated_partials(
    scheme: &AnnulusScheme,
    d: &dyn Density,
    u: &GridFunction,
    x: &Point,
    eps: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_eps_sequence(eps)?;
    if u.is_constant() {
        return Ok((vec![0.0; eps.len()], 0.0));
    }
    check_resolution(d.resolution(x), eps)?;
    let engine =
        Engine::new(scheme, u.dim()).with_function(u, x).with_breaks(d.radial_breaks()).with_variation(d.far_variation(x));
    let p = Probe::new(u, x);
    let near = |z: &Point| -> Result<[f64; 1]> { Ok([p.symmetric_truncated(d, z)?]) };
    let far = |z: &Point| -> Result<[f64; 1]> { Ok([p.plain(d, z)?]) };
    let plan = far_plan(&engine, u, exact_tails(&[d], x));
    let tails = |r: f64| [p.far_tail(d, r, plan.u_far)];

    // |z| ≥ max(ε₁, r_break) once
    let first = eps[0];
    let split = first.max(scheme.r_break);
    let (fv, bound) = far_field(&engine, split, &plan, &far, &tails)?;
    let mut acc = fv[0];
    if first < scheme.r_break {
        acc += engine.annulus(first, scheme.r_break, &near)?.0[0];
    }
    let mut partials = Vec::with_capacity(eps.len());
    partials.push(acc);
    for w in eps.windows(2) {
        let (lo, hi) = (w[1], w[0]);
        let add = if hi <= scheme.r_break {
            engine.annulus(lo, hi, &near)?.0[0]
        } else if lo >= scheme.r_break {
            engine.annulus(lo, hi, &far)?.0[0]
        } else {
            engine.annulus(lo, scheme.r_break, &near)?.0[0] + engine.annulus(scheme.r_break, hi, &far)?.0[0]
        };
        acc += add;
        partials.push(acc);
    }
    Ok((partials, bound))
}

/// ∫_{|z|≥eps} (u(x+z) − u(x)) k(x, x+z) dz.
pub fn truncated_integral(
    k: &dyn Density,
    u: &GridFunction,
    x: &Point,
    eps: f64,
    scheme: &AnnulusScheme,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation radius must be positive, got {eps}")));
    }
    Ok(truncated_partials(scheme, k, u, x, &[eps])?.0[0])
}

/// ∫ (u(x+z) − u(x) − ∇u(x)·z 1_{|z|≤r_break}) k(x, x+z) dz.
pub fn compensated_integral(k: &dyn Density, u: &GridFunction, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    Ok(generator_parts::<2>(scheme, &[k], u, x)?.0[0])
}

/// ½∇u(x)·∫_{0<|z|≤r_break} z (k(x,x+z) − k(x,x−z)) dz.
pub fn drift_correction(k: &dyn Density, u: &GridFunction, x: &Point, scheme: &AnnulusScheme) -> Result<f64> {
    Ok(generator_parts::<2>(scheme, &[k], u, x)?.0[1])
}

/// Principal value lim_m ∫_{|z|≥εₘ} (u(x+z) − u(x)) k(x, x+z) dz along the
/// given sequence. Non-convergence is reported, not raised.
pub fn pv_limit(
    k: &dyn Density,
    u: &GridFunction,
    x: &Point,
    eps_sequence: &[f64],
    scheme: &AnnulusScheme,
) -> Result<PVEstimate> {
    let (partials, _) = truncated_partials(scheme, k, u, x, eps_sequence)?;
    Ok(PVEstimate::from_partials(eps_sequence.to_vec(), partials, scheme))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{split, stable_like_kernel, AlphaFunction, JumpKernel};
    use std::f64::consts::PI;

    fn bump1() -> GridFunction {
        GridFunction::bump(1, [0.1, 0.0], 1.0, 1.0, 4, 32).unwrap()
    }

    /// Composite Simpson on [a, b] with n (even) panels.
    fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn zero_function_gives_zero() {
        let k = stable_like_kernel(&AlphaFunction::constant(1.0).unwrap(), 1).unwrap();
        let u = GridFunction::constant(1, 0.0).unwrap();
        let s = AnnulusScheme::default();
        assert_eq!(truncated_integral(&k, &u, &[0.0, 0.0], 0.1, &s).unwrap(), 0.0);
        assert_eq!(compensated_integral(&k, &u, &[0.0, 0.0], &s).unwrap(), 0.0);
        let pv = pv_limit(&k, &u, &[0.0, 0.0], &default_eps_sequence(), &s).unwrap();
        assert!(pv.converged && pv.value == 0.0);
    }

    #[test]
    fn odd_function_truncated_is_zero() {
        // odd about x = 0 with an even kernel
        let k = stable_like_kernel(&AlphaFunction::constant(0.8).unwrap(), 1).unwrap();
        let lat = crate::geometry::Lattice::new(crate::geometry::Region::interval(-2.0, 2.0).unwrap(), [4, 1]).unwrap();
        let u = GridFunction::sampled(lat, vec![0.0, -1.0, 0.0, 1.0, 0.0]).unwrap();
        let v = truncated_integral(&k, &u, &[0.0, 0.0], 0.3, &AnnulusScheme::default()).unwrap();
        assert!(v.abs() < 1e-13, "{v}");
    }

    #[test]
    fn truncated_matches_brute_force() {
        let k = stable_like_kernel(&AlphaFunction::constant(1.0).unwrap(), 1).unwrap();
        let u = bump1();
        let x = [0.0, 0.0];
        let got = truncated_integral(&k, &u, &x, 0.5, &AnnulusScheme::default()).unwrap();
        // oracle: integrate both sides on [0.5, 10] by Simpson, exact tail beyond
        let ux = u.value(&x);
        let f = |r: f64| (u.value(&[r, 0.0]) + u.value(&[-r, 0.0]) - 2.0 * ux) / (PI * r * r);
        let mut want = 0.0;
        // split at the support edges
        for (a, b) in [(0.5, 0.9), (0.9, 1.1), (1.1, 10.0)] {
            want += simpson(a, b, 200_000, f);
        }
        want += -2.0 * ux / (PI * 10.0);
        assert!((got - want).abs() < 1e-6 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn compensated_matches_brute_force_half_alpha() {
        let af = AlphaFunction::constant(0.5).unwrap();
        let k = stable_like_kernel(&af, 1).unwrap();
        let u = bump1();
        let x = [0.0, 0.0];
        let got = compensated_integral(&k, &u, &x, &AnnulusScheme::default()).unwrap();
        let w = crate::kernels::weight_w(0.5, 1).unwrap();
        let ux = u.value(&x);
        // even part of the integrand; the compensator cancels between ±r
        let f = |r: f64| w * (u.value(&[r, 0.0]) + u.value(&[-r, 0.0]) - 2.0 * ux) * r.powf(-1.5);
        // substitute r = t² near 0 to remove the r^{-1/2} singularity
        let g = |t: f64| if t == 0.0 { 0.0 } else { 2.0 * t * f(t * t) };
        let mut want = simpson(0.0, 0.9f64.sqrt(), 200_000, g);
        want += simpson(0.9, 1.1, 20_000, f) + simpson(1.1, 50.0, 400_000, f);
        want += -2.0 * ux * w * 50f64.powf(-0.5) / 0.5;
        assert!((got - want).abs() < 1e-6 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn drift_vanishes_for_even_kernels_and_flat_points() {
        let k = stable_like_kernel(&AlphaFunction::constant(1.3).unwrap(), 1).unwrap();
        let s = AnnulusScheme::default();
        assert_eq!(drift_correction(&k, &bump1(), &[0.4, 0.0], &s).unwrap(), 0.0);
        let u = GridFunction::bump(1, [0.0, 0.0], 1.0, 1.0, 4, 8).unwrap();
        let var = stable_like_kernel(&AlphaFunction::sine(1.0, 0.25, 1.0).unwrap(), 1).unwrap();
        let sk = split(&var).unwrap();
        assert_eq!(drift_correction(&sk.symmetric(), &u, &[0.0, 0.0], &s).unwrap(), 0.0);
    }

    #[test]
    fn drift_matches_brute_force() {
        let af = AlphaFunction::sine(1.0, 0.25, 1.0).unwrap();
        let k = stable_like_kernel(&af, 1).unwrap();
        let sk = split(&k).unwrap();
        // bump with u'(0) = 1: centre 0.5, radius 1, p = 2 ⇒ u' = −4(x−c)(1−(x−c)²) = 1.5 at 0; rescale
        let u = GridFunction::bump(1, [0.5, 0.0], 1.0, 1.0 / 1.5, 2, 16).unwrap();
        assert!((u.gradient(&[0.0, 0.0])[0] - 1.0).abs() < 1e-14);
        let got = drift_correction(&sk.symmetric(), &u, &[0.0, 0.0], &AnnulusScheme::default()).unwrap();
        // ½∫_{−1}^{1} z (k_s(0,z) − k_s(0,−z)) dz = ∫_0^1 r (k_s(0,r) − k_s(0,−r)) dr
        let ks = |a: f64, b: f64| 0.5 * (k.eval(&[a, 0.0], &[b, 0.0]) + k.eval(&[b, 0.0], &[a, 0.0]));
        // r = e^{−s} removes the logarithmic singularity at r = 0
        let f = |s: f64| {
            let r = (-s).exp();
            r * r * (ks(0.0, r) - ks(0.0, -r))
        };
        let want = simpson(0.0, 40.0, 400_000, f);
        assert!((got - want).abs() < 1e-5 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn pv_equals_compensated_plus_drift() {
        let af = AlphaFunction::tanh(1.0, 0.1, 1.0).unwrap();
        let k = stable_like_kernel(&af, 1).unwrap();
        let sk = split(&k).unwrap();
        let ks = sk.symmetric();
        let u = bump1();
        let s = AnnulusScheme::default();
        let eps: Vec<f64> = (1..=40).map(|m| 2f64.powi(-m)).collect();
        for x in [[0.0, 0.0], [0.4, 0.0], [-0.6, 0.0]] {
            let pv = pv_limit(&ks, &u, &x, &eps, &s).unwrap();
            let c = compensated_integral(&ks, &u, &x, &s).unwrap();
            let d = drift_correction(&ks, &u, &x, &s).unwrap();
            assert!((pv.value - (c + d)).abs() < 1e-6, "x={x:?}: {} vs {}", pv.value, c + d);
        }
    }

    #[test]
    fn linearity_in_u() {
        let k = stable_like_kernel(&AlphaFunction::tanh(1.0, 0.2, 1.0).unwrap(), 1).unwrap();
        let s = AnnulusScheme::default();
        let u = bump1();
        let u3 = GridFunction::bump(1, [0.1, 0.0], 1.0, 3.0, 4, 32).unwrap();
        let x = [0.2, 0.0];
        let a = compensated_integral(&k, &u, &x, &s).unwrap();
        let b = compensated_integral(&k, &u3, &x, &s).unwrap();
        assert!((b - 3.0 * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn generic_kernel_tail_is_bounded() {
        // k = |z|^{-2}/π written as a plain closure: no tail formula
        let k = JumpKernel::from_fn(1, "closure", true, |x, y| 1.0 / (PI * (x[0] - y[0]).powi(2))).unwrap();
        let stable = stable_like_kernel(&AlphaFunction::constant(1.0).unwrap(), 1).unwrap();
        let s = AnnulusScheme::default();
        let u = bump1();
        let x = [0.3, 0.0];
        let (a, acc) = generator_parts::<2>(&s, &[&k], &u, &x).unwrap();
        let b = compensated_integral(&stable, &u, &x, &s).unwrap();
        assert!((a[0] - b).abs() < 1e-7, "{} vs {b}", a[0]);
        assert!(acc.tail_bound.is_finite() && acc.tail_bound < 1e-7);
    }
}
