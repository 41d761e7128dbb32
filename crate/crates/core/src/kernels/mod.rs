//! Jump kernels on ℝⁿ (n = 1, 2), their symmetric/antisymmetric split and
//! the views through which quadrature sees a kernel.

mod alpha;
pub mod expr;
mod spec;
mod stable;

use std::fmt;
use std::sync::Arc;

pub use alpha::{beta_modulus, AlphaFunction, BetaProfile, BetaSample, BetaSampler};
pub use spec::{piecewise_kernel, AlphaSpec, Band, KernelSpec};
pub use stable::{stable_like_kernel, weight_w};

use crate::error::{Error, Result};
use crate::geometry::{add, check_dim, norm, scale, sphere_measure, sub, Point};

type EvalFn = dyn Fn(&Point, &Point) -> f64 + Send + Sync;

/// Mass of a kernel view outside the ball of radius `radius` around `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    /// Value added to an integral in place of the far field.
    pub estimate: f64,
    /// Upper bound on the absolute error of `estimate`; `None` when unknown.
    pub error_bound: Option<f64>,
}

impl Tail {
    pub const UNKNOWN: Tail = Tail { estimate: 0.0, error_bound: None };

    pub fn exact(value: f64) -> Self {
        Self { estimate: value, error_bound: Some(0.0) }
    }
}

/// A jump density seen from the starting point: `at(x, z)` is the density
/// of a jump from `x` to `x + z`. Offsets are passed separately from `x` so
/// that |z| far below the spacing of floats near `x` stays meaningful.
pub trait Density: Sync {
    fn dim(&self) -> usize;

    fn at(&self, x: &Point, z: &Point) -> Result<f64>;

    /// at(x, z) − at(x, −z).
    fn odd(&self, x: &Point, z: &Point) -> Result<f64> {
        Ok(self.at(x, z)? - self.at(x, &scale(z, -1.0))?)
    }

    /// ∫_{|z|>radius} at(x, z) dz.
    fn tail(&self, x: &Point, radius: f64) -> Tail;

    /// ∫_{|z|>radius} cos(θ + ξ·z) at(x, z) dz, when a closed form is known.
    fn cos_tail(&self, _x: &Point, _xi: &Point, _theta: f64, _radius: f64) -> Option<f64> {
        None
    }

    /// Radii |z| across which the density may jump.
    fn radial_breaks(&self) -> &[f64] {
        &[]
    }

    /// Length over which the density keeps varying along rays far from x.
    fn far_variation(&self, _x: &Point) -> f64 {
        f64::INFINITY
    }

    /// True when the density is identically zero (lets quadrature skip work).
    fn vanishes(&self) -> bool {
        false
    }

    /// Smallest |z| at which `at(x, z)` is meaningful. Closures evaluated at
    /// the point pair (x, x+z) cannot see offsets below the float spacing
    /// near x.
    fn resolution(&self, _x: &Point) -> f64 {
        0.0
    }
}

/// 2^{−30}·max(1, |x|_∞): keeps at least 22 bits of z in fl(x + z).
fn point_form_resolution(x: &Point) -> f64 {
    2f64.powi(-30) * x[0].abs().max(x[1].abs()).max(1.0)
}

#[derive(Clone)]
pub(crate) enum KernelKind {
    Generic,
    /// k(x,y) = w(α(x)) |x−y|^{−n−α(x)}.
    StableLike { alpha: AlphaFunction, weight_max: f64, weight: Option<f64> },
}

/// Nonnegative jump density k(x, y), x ≠ y.
#[derive(Clone)]
pub struct JumpKernel {
    dim: usize,
    label: String,
    symmetric_hint: bool,
    eval: Arc<EvalFn>,
    kind: KernelKind,
    breaks: Vec<f64>,
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpKernel")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("symmetric_hint", &self.symmetric_hint)
            .finish()
    }
}

impl JumpKernel {
    pub fn from_fn(
        dim: usize,
        label: impl Into<String>,
        symmetric_hint: bool,
        eval: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            label: label.into(),
            symmetric_hint,
            eval: Arc::new(eval),
            kind: KernelKind::Generic,
            breaks: Vec::new(),
        })
    }

    /// Declare radii where the kernel is discontinuous so quadrature panels
    /// can be aligned with them.
    pub fn with_radial_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| b.is_finite() && *b > 0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub(crate) fn with_kind(mut self, kind: KernelKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn symmetric_hint(&self) -> bool {
        self.symmetric_hint
    }

    pub fn alpha(&self) -> Option<&AlphaFunction> {
        match &self.kind {
            KernelKind::StableLike { alpha, .. } => Some(alpha),
            KernelKind::Generic => None,
        }
    }

    /// Raw density; does not check the sign.
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        (self.eval)(x, y)
    }

    /// Density with the nonnegativity check.
    pub fn try_eval(&self, x: &Point, y: &Point) -> Result<f64> {
        let v = (self.eval)(x, y);
        if v >= 0.0 {
            Ok(v)
        } else if v.is_nan() {
            Err(Error::Domain(format!("kernel '{}' returned NaN at x={x:?}, y={y:?}", self.label)))
        } else {
            Err(Error::NegativeKernel { x: *x, y: *y, value: v })
        }
    }

    /// k(x, x+z).
    pub fn jump(&self, x: &Point, z: &Point) -> Result<f64> {
        match &self.kind {
            KernelKind::StableLike { alpha, weight, .. } => {
                let a = alpha.value(x);
                let w = match weight {
                    Some(w) => *w,
                    None => weight_w(a, self.dim)?,
                };
                Ok(w * norm(z, self.dim).powf(-(self.dim as f64) - a))
            }
            KernelKind::Generic => self.try_eval(x, &add(x, z)),
        }
    }

    /// k(x+z, x).
    pub fn jump_back(&self, x: &Point, z: &Point) -> Result<f64> {
        match &self.kind {
            KernelKind::StableLike { alpha, weight, .. } => {
                let a = alpha.value(&add(x, z));
                let w = match weight {
                    Some(w) => *w,
                    None => weight_w(a, self.dim)?,
                };
                Ok(w * norm(z, self.dim).powf(-(self.dim as f64) - a))
            }
            KernelKind::Generic => self.try_eval(&add(x, z), x),
        }
    }

    /// k(x, x+z) − k(x, x−z).
    pub fn forward_odd(&self, x: &Point, z: &Point) -> Result<f64> {
        match &self.kind {
            KernelKind::StableLike { .. } => Ok(0.0),
            KernelKind::Generic => Ok(self.jump(x, z)? - self.jump(x, &scale(z, -1.0))?),
        }
    }

    /// k(x+z, x) − k(x−z, x).
    pub fn backward_odd(&self, x: &Point, z: &Point) -> Result<f64> {
        let mz = scale(z, -1.0);
        match &self.kind {
            KernelKind::StableLike { alpha, .. } if !alpha.is_constant() => {
                let delta = alpha.delta(x, z, &mz);
                let (a, b) = (alpha.value(&add(x, z)), alpha.value(&add(x, &mz)));
                stable::power_difference(self.dim, norm(z, self.dim), a, b, delta)
            }
            KernelKind::StableLike { .. } => Ok(0.0),
            KernelKind::Generic => Ok(self.jump_back(x, z)? - self.jump_back(x, &mz)?),
        }
    }

    /// k(x, x+z) − k(x+z, x).
    pub fn skew(&self, x: &Point, z: &Point) -> Result<f64> {
        if self.symmetric_hint {
            return Ok(0.0);
        }
        match &self.kind {
            KernelKind::StableLike { alpha, .. } => {
                let delta = alpha.delta(x, &[0.0, 0.0], z);
                let (a, b) = (alpha.value(x), alpha.value(&add(x, z)));
                stable::power_difference(self.dim, norm(z, self.dim), a, b, delta)
            }
            KernelKind::Generic => Ok(self.jump(x, z)? - self.jump_back(x, z)?),
        }
    }

    fn resolution_at(&self, x: &Point) -> f64 {
        match self.kind {
            KernelKind::StableLike { .. } => 0.0,
            KernelKind::Generic => point_form_resolution(x),
        }
    }

    /// 1/Lip(α) for variable-index kernels: α(x+z) moves on that scale
    /// however far out z is.
    fn backward_variation(&self) -> f64 {
        match &self.kind {
            KernelKind::StableLike { alpha, .. } if !alpha.is_constant() => match alpha.lipschitz() {
                Some(l) if l > 0.0 => 1.0 / l,
                _ => f64::INFINITY,
            },
            _ => f64::INFINITY,
        }
    }

    pub fn transposed(&self) -> Transposed<'_> {
        Transposed(self)
    }

    /// Oscillatory tail for kernels even in z at x: 2w cos θ ∫_R^∞ cos(|ξ|r) r^{−1−α} dr
    /// (one dimension only).
    fn forward_cos_tail(&self, x: &Point, xi: &Point, theta: f64, radius: f64) -> Option<f64> {
        match &self.kind {
            KernelKind::StableLike { alpha, .. } if self.dim == 1 => {
                let a = alpha.value(x);
                let w = weight_w(a, 1).ok()?;
                if xi[0] == 0.0 {
                    return Some(theta.cos() * w * 2.0 * radius.powf(-a) / a);
                }
                Some(2.0 * w * theta.cos() * stable::cos_power_tail(xi[0], 1.0 + a, radius)?)
            }
            _ => None,
        }
    }

    fn forward_tail(&self, x: &Point, radius: f64) -> Tail {
        match &self.kind {
            KernelKind::StableLike { alpha, .. } => {
                let a = alpha.value(x);
                match weight_w(a, self.dim) {
                    Ok(w) => Tail::exact(w * sphere_measure(self.dim) * radius.powf(-a) / a),
                    Err(_) => Tail::UNKNOWN,
                }
            }
            KernelKind::Generic => Tail::UNKNOWN,
        }
    }

    /// Far field of y ↦ k(x+z, x): α frozen at the far points along a few
    /// directions; the error bound uses the global bounds of α and w.
    fn backward_tail(&self, x: &Point, radius: f64) -> Tail {
        match &self.kind {
            KernelKind::StableLike { alpha, weight_max, .. } => {
                let dirs: Vec<Point> = if self.dim == 1 {
                    vec![[1.0, 0.0], [-1.0, 0.0]]
                } else {
                    (0..8)
                        .map(|i| {
                            let t = std::f64::consts::PI * i as f64 / 4.0;
                            [t.cos(), t.sin()]
                        })
                        .collect()
                };
                let share = sphere_measure(self.dim) / dirs.len() as f64;
                let mut est = 0.0;
                let mass = |a: f64| weight_w(a, self.dim).unwrap_or(*weight_max) * radius.powf(-a) / a;
                for d in &dirs {
                    let frozen = || mass(alpha.value(&add(x, &scale(d, radius))));
                    est += share * alpha.ray_period_mean(d, radius, mass).unwrap_or_else(frozen);
                }
                let a1 = alpha.alpha1();
                let bound = weight_max * sphere_measure(self.dim) * radius.powf(-a1) / a1;
                Tail { estimate: est, error_bound: Some(bound) }
            }
            KernelKind::Generic => Tail::UNKNOWN,
        }
    }
}

impl Density for JumpKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, x: &Point, z: &Point) -> Result<f64> {
        self.jump(x, z)
    }

    fn odd(&self, x: &Point, z: &Point) -> Result<f64> {
        self.forward_odd(x, z)
    }

    fn tail(&self, x: &Point, radius: f64) -> Tail {
        self.forward_tail(x, radius)
    }

    fn cos_tail(&self, x: &Point, xi: &Point, theta: f64, radius: f64) -> Option<f64> {
        self.forward_cos_tail(x, xi, theta, radius)
    }

    fn radial_breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn resolution(&self, x: &Point) -> f64 {
        self.resolution_at(x)
    }
}

/// The kernel seen from the target: (x, y) ↦ k(y, x).
#[derive(Clone, Copy)]
pub struct Transposed<'a>(pub &'a JumpKernel);

impl Density for Transposed<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn at(&self, x: &Point, z: &Point) -> Result<f64> {
        self.0.jump_back(x, z)
    }

    fn odd(&self, x: &Point, z: &Point) -> Result<f64> {
        self.0.backward_odd(x, z)
    }

    fn tail(&self, x: &Point, radius: f64) -> Tail {
        if self.0.symmetric_hint {
            return self.0.forward_tail(x, radius);
        }
        self.0.backward_tail(x, radius)
    }

    fn cos_tail(&self, x: &Point, xi: &Point, theta: f64, radius: f64) -> Option<f64> {
        if self.0.symmetric_hint {
            self.0.forward_cos_tail(x, xi, theta, radius)
        } else {
            None
        }
    }

    fn radial_breaks(&self) -> &[f64] {
        &self.0.breaks
    }

    fn far_variation(&self, _x: &Point) -> f64 {
        self.0.backward_variation()
    }

    fn resolution(&self, x: &Point) -> f64 {
        self.0.resolution_at(x)
    }
}

/// k split into k_s = ½(k + kᵀ) and k_a = ½(k − kᵀ); evaluation is lazy.
#[derive(Debug, Clone)]
pub struct SplitKernel {
    base: JumpKernel,
}

/// Split a kernel into symmetric and antisymmetric parts.
///
/// Evaluation stays lazy; the kernel is probed on a small deterministic set
/// of pairs so that obviously invalid (negative) kernels are rejected early.
pub fn split(k: &JumpKernel) -> Result<SplitKernel> {
    let probes = [-2.0, -0.7, -0.1, 0.0, 0.3, 1.1, 2.5];
    for &a in &probes {
        for &b in &probes {
            if a == b {
                continue;
            }
            let (x, y) = if k.dim == 1 { ([a, 0.0], [b, 0.0]) } else { ([a, 0.5 * b], [b, -0.3 * a]) };
            k.try_eval(&x, &y)?;
        }
    }
    Ok(SplitKernel { base: k.clone() })
}

impl SplitKernel {
    /// Split without the probing done by [`split`].
    pub(crate) fn from_trusted(k: &JumpKernel) -> Self {
        Self { base: k.clone() }
    }

    pub fn base(&self) -> &JumpKernel {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn ks(&self, x: &Point, y: &Point) -> Result<f64> {
        let a = self.base.try_eval(x, y)?;
        let b = self.base.try_eval(y, x)?;
        Ok(0.5 * (a + b))
    }

    /// Evaluated from the lexicographically smaller point so that
    /// k_a(x, y) = −k_a(y, x) holds exactly.
    pub fn ka(&self, x: &Point, y: &Point) -> Result<f64> {
        if (x[0], x[1]) <= (y[0], y[1]) {
            Ok(0.5 * self.base.skew(x, &sub(y, x))?)
        } else {
            Ok(-0.5 * self.base.skew(y, &sub(x, y))?)
        }
    }

    pub fn symmetric(&self) -> SymmetricPart<'_> {
        SymmetricPart(&self.base)
    }

    pub fn antisymmetric(&self) -> AntisymmetricPart<'_> {
        AntisymmetricPart(&self.base)
    }
}

#[derive(Clone, Copy)]
pub struct SymmetricPart<'a>(pub &'a JumpKernel);

impl Density for SymmetricPart<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn at(&self, x: &Point, z: &Point) -> Result<f64> {
        Ok(0.5 * (self.0.jump(x, z)? + self.0.jump_back(x, z)?))
    }

    fn odd(&self, x: &Point, z: &Point) -> Result<f64> {
        Ok(0.5 * (self.0.forward_odd(x, z)? + self.0.backward_odd(x, z)?))
    }

    fn tail(&self, x: &Point, radius: f64) -> Tail {
        let f = self.0.forward_tail(x, radius);
        let b = Transposed(self.0).tail(x, radius);
        combine_tails(f, b, 0.5)
    }

    fn cos_tail(&self, x: &Point, xi: &Point, theta: f64, radius: f64) -> Option<f64> {
        if self.0.symmetric_hint {
            self.0.forward_cos_tail(x, xi, theta, radius)
        } else {
            None
        }
    }

    fn radial_breaks(&self) -> &[f64] {
        &self.0.breaks
    }

    fn far_variation(&self, _x: &Point) -> f64 {
        self.0.backward_variation()
    }

    fn resolution(&self, x: &Point) -> f64 {
        self.0.resolution_at(x)
    }
}

#[derive(Clone, Copy)]
pub struct AntisymmetricPart<'a>(pub &'a JumpKernel);

impl Density for AntisymmetricPart<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn at(&self, x: &Point, z: &Point) -> Result<f64> {
        Ok(0.5 * self.0.skew(x, z)?)
    }

    fn odd(&self, x: &Point, z: &Point) -> Result<f64> {
        Ok(0.5 * (self.0.skew(x, z)? - self.0.skew(x, &scale(z, -1.0))?))
    }

    fn tail(&self, x: &Point, radius: f64) -> Tail {
        if self.0.symmetric_hint {
            return Tail::exact(0.0);
        }
        let f = self.0.forward_tail(x, radius);
        let b = Transposed(self.0).tail(x, radius);
        combine_tails(f, b, -0.5)
    }

    fn radial_breaks(&self) -> &[f64] {
        &self.0.breaks
    }

    fn far_variation(&self, _x: &Point) -> f64 {
        self.0.backward_variation()
    }

    fn resolution(&self, x: &Point) -> f64 {
        self.0.resolution_at(x)
    }

    fn vanishes(&self) -> bool {
        self.0.symmetric_hint
    }
}

fn combine_tails(f: Tail, b: Tail, sign_b: f64) -> Tail {
    let error_bound = match (f.error_bound, b.error_bound) {
        (Some(e1), Some(e2)) => Some(0.5 * e1 + 0.5 * e2),
        _ => None,
    };
    Tail { estimate: 0.5 * f.estimate + sign_b * b.estimate, error_bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_sided(a: f64, b: f64) -> JumpKernel {
        JumpKernel::from_fn(1, "two-sided", false, move |x, y| {
            let d = y[0] - x[0];
            if d.abs() <= 1.0 {
                0.0
            } else if d > 0.0 {
                a
            } else {
                b
            }
        })
        .unwrap()
    }

    #[test]
    fn symmetric_kernel_has_no_antisymmetric_part() {
        let k = JumpKernel::from_fn(1, "inverse square", true, |x, y| (x[0] - y[0]).powi(-2)).unwrap();
        let sk = split(&k).unwrap();
        for (a, b) in [(0.0, 0.5), (-1.0, 2.0), (3.0, 2.9)] {
            let (x, y) = ([a, 0.0], [b, 0.0]);
            assert_eq!(sk.ks(&x, &y).unwrap(), k.eval(&x, &y));
            assert_eq!(sk.ka(&x, &y).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_sided_kernel_split() {
        let (a, b) = (3.0, 1.0);
        let sk = split(&two_sided(a, b)).unwrap();
        let x = [0.0, 0.0];
        assert_eq!(sk.ks(&x, &[2.0, 0.0]).unwrap(), (a + b) / 2.0);
        assert_eq!(sk.ka(&x, &[2.0, 0.0]).unwrap(), (a - b) / 2.0);
        assert_eq!(sk.ka(&x, &[-2.0, 0.0]).unwrap(), -(a - b) / 2.0);
        assert_eq!(sk.ks(&x, &[0.5, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn negative_kernel_is_rejected() {
        let k = JumpKernel::from_fn(1, "bad", false, |x, y| y[0] - x[0]).unwrap();
        assert!(matches!(split(&k), Err(Error::NegativeKernel { .. })));
    }
}
