//! Variable order α(x) and its sampled modulus of continuity β(r).

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, scale, Point, Region};

type AlphaFn = dyn Fn(&Point) -> f64 + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Constant,
    Tanh { amplitude: f64, scale: f64 },
    Sine { amplitude: f64, frequency: f64 },
    Custom,
}

/// Exponent field α: ℝⁿ → [α₁, α₂] ⊂ (0, 2).
#[derive(Clone)]
pub struct AlphaFunction {
    f: Arc<AlphaFn>,
    alpha1: f64,
    alpha2: f64,
    lipschitz: Option<f64>,
    constant: Option<f64>,
    form: Form,
    label: String,
}

impl fmt::Debug for AlphaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlphaFunction")
            .field("label", &self.label)
            .field("alpha1", &self.alpha1)
            .field("alpha2", &self.alpha2)
            .finish()
    }
}

fn check_bounds(alpha1: f64, alpha2: f64) -> Result<()> {
    if !(alpha1 > 0.0 && alpha1 <= alpha2 && alpha2 < 2.0) {
        return Err(Error::Domain(format!(
            "exponent bounds must satisfy 0 < alpha1 <= alpha2 < 2, got [{alpha1}, {alpha2}]"
        )));
    }
    Ok(())
}

impl AlphaFunction {
    /// Custom field with stated bounds. The bounds are checked on a coarse
    /// sample around the origin; evaluations outside them are not clamped.
    pub fn new(
        label: impl Into<String>,
        alpha1: f64,
        alpha2: f64,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_bounds(alpha1, alpha2)?;
        let out = Self {
            f: Arc::new(f),
            alpha1,
            alpha2,
            lipschitz: None,
            constant: None,
            form: Form::Custom,
            label: label.into(),
        };
        for i in -40..=40 {
            for j in [-3.0, 0.0, 3.0] {
                let p = [i as f64 * 0.25, j];
                let a = out.value(&p);
                if !(a >= alpha1 - 1e-12 && a <= alpha2 + 1e-12) {
                    return Err(Error::Domain(format!(
                        "alpha({p:?}) = {a} lies outside the stated bounds [{alpha1}, {alpha2}]"
                    )));
                }
            }
        }
        Ok(out)
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        check_bounds(alpha, alpha)?;
        Ok(Self {
            f: Arc::new(move |_| alpha),
            alpha1: alpha,
            alpha2: alpha,
            lipschitz: Some(0.0),
            constant: Some(alpha),
            form: Form::Constant,
            label: format!("alpha={alpha}"),
        })
    }

    /// α(x) = base + amplitude·tanh(x₁/scale).
    pub fn tanh(base: f64, amplitude: f64, scale_len: f64) -> Result<Self> {
        if !(scale_len > 0.0) {
            return Err(Error::InvalidArgument(format!("tanh scale must be positive, got {scale_len}")));
        }
        let a = amplitude.abs();
        check_bounds(base - a, base + a)?;
        Ok(Self {
            f: Arc::new(move |x| base + amplitude * (x[0] / scale_len).tanh()),
            alpha1: base - a,
            alpha2: base + a,
            lipschitz: Some(a / scale_len),
            constant: (amplitude == 0.0).then_some(base),
            form: Form::Tanh { amplitude, scale: scale_len },
            label: format!("{base}+{amplitude}*tanh(x/{scale_len})"),
        })
    }

    /// α(x) = base + amplitude·sin(frequency·x₁).
    pub fn sine(base: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        let a = amplitude.abs();
        check_bounds(base - a, base + a)?;
        Ok(Self {
            f: Arc::new(move |x| base + amplitude * (frequency * x[0]).sin()),
            alpha1: base - a,
            alpha2: base + a,
            lipschitz: Some(a * frequency.abs()),
            constant: (amplitude == 0.0 || frequency == 0.0).then_some(base),
            form: Form::Sine { amplitude, frequency },
            label: format!("{base}+{amplitude}*sin({frequency}*x)"),
        })
    }

    pub fn with_lipschitz(mut self, m: f64) -> Self {
        self.lipschitz = Some(m);
        self
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    /// α(x+a) − α(x+b), accurate when a and b are close even if the
    /// rounded points x+a and x+b coincide.
    pub fn delta(&self, x: &Point, a: &Point, b: &Point) -> f64 {
        if self.constant.is_some() {
            return 0.0;
        }
        match self.form {
            Form::Tanh { amplitude, scale } => {
                let p = (x[0] + a[0]) / scale;
                let q = (x[0] + b[0]) / scale;
                if p.abs() > 300.0 || q.abs() > 300.0 {
                    return self.value(&add(x, a)) - self.value(&add(x, b));
                }
                amplitude * ((a[0] - b[0]) / scale).sinh() / (p.cosh() * q.cosh())
            }
            Form::Sine { amplitude, frequency } => {
                let mid = frequency * (x[0] + 0.5 * (a[0] + b[0]));
                2.0 * amplitude * mid.cos() * (0.5 * frequency * (a[0] - b[0])).sin()
            }
            _ => self.value(&add(x, a)) - self.value(&add(x, b)),
        }
    }

    /// Mean of g(α) over one period of α along the ray x + r·d beyond
    /// `radius`, for fields that keep oscillating there and whose period is
    /// short next to `radius`.
    pub(crate) fn ray_period_mean(&self, d: &Point, radius: f64, g: impl Fn(f64) -> f64) -> Option<f64> {
        let Form::Sine { amplitude, frequency } = self.form else {
            return None;
        };
        let k = (frequency * d[0]).abs();
        if self.constant.is_some() || k * radius < 16.0 * std::f64::consts::PI {
            return None;
        }
        let base = self.alpha1 + amplitude.abs();
        let m = 64;
        let sum: f64 = (0..m)
            .map(|i| g(base + amplitude * (2.0 * std::f64::consts::PI * i as f64 / m as f64).sin()))
            .sum();
        Some(sum / m as f64)
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    /// Lipschitz constant, when known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// One sampled value of β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSample {
    pub r: f64,
    pub value: f64,
    pub samples: usize,
}

/// β sampled on the offset ladder, as a running maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub samples: usize,
}

/// Sampling plan for β(r) = sup_{|x−y|≤r} |α(x) − α(y)|.
///
/// Base points lie on the lattice `spacing·ℤⁿ` intersected with the domain;
/// offsets lie on the fixed ladder `2^{k/steps_per_octave}`. Both are
/// anchored independently of the domain and of r, so enlarging either one
/// only adds pairs and the estimate can only grow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSampler {
    pub spacing: f64,
    pub steps_per_octave: u32,
    /// Smallest ladder offset is 2^{−min_octave}.
    pub min_octave: u32,
    /// Directions in the upper half plane (two dimensions only).
    pub directions: usize,
}

impl Default for BetaSampler {
    fn default() -> Self {
        Self { spacing: 2f64.powi(-10), steps_per_octave: 16, min_octave: 40, directions: 4 }
    }
}

impl BetaSampler {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            Self::default()
        } else {
            Self { spacing: 2f64.powi(-5), steps_per_octave: 4, min_octave: 30, directions: 4 }
        }
    }

    fn base_points(&self, domain: &Region) -> Vec<Point> {
        let axis = |i: usize| -> Vec<f64> {
            let lo = (domain.lower[i] / self.spacing).ceil() as i64;
            let hi = (domain.upper[i] / self.spacing).floor() as i64;
            (lo..=hi).map(|k| k as f64 * self.spacing).collect()
        };
        let xs = axis(0);
        if domain.dim == 1 {
            return xs.into_iter().map(|x| [x, 0.0]).collect();
        }
        let ys = axis(1);
        ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect()
    }

    fn directions(&self, dim: usize) -> Vec<Point> {
        if dim == 1 {
            return vec![[1.0, 0.0]];
        }
        let m = self.directions.max(1);
        (0..m)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / m as f64;
                [t.cos(), t.sin()]
            })
            .collect()
    }

    fn ladder(&self, r_max: f64) -> Vec<f64> {
        let s = self.steps_per_octave.max(1) as i64;
        let k_min = -(self.min_octave as i64) * s;
        let mut out = Vec::new();
        let mut k = k_min;
        loop {
            let r = 2f64.powf(k as f64 / s as f64);
            if r > r_max * (1.0 + 1e-12) {
                break;
            }
            out.push(r);
            k += 1;
        }
        out
    }

    /// Largest |α(x) − α(x + δ·d)| over base points and directions, with
    /// both points in the domain, for each offset.
    fn raw_max(&self, af: &AlphaFunction, domain: &Region, offsets: &[f64]) -> (Vec<f64>, usize) {
        let pts = self.base_points(domain);
        let dirs = self.directions(domain.dim);
        let per_point: Vec<Vec<f64>> = pts
            .par_iter()
            .map(|x| {
                let ax = af.value(x);
                offsets
                    .iter()
                    .map(|&d| {
                        let mut m = 0.0f64;
                        for dir in &dirs {
                            let y = add(x, &scale(dir, d));
                            if domain.contains(&y) {
                                m = m.max((af.value(&y) - ax).abs());
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0f64; offsets.len()];
        for row in &per_point {
            for (o, v) in out.iter_mut().zip(row) {
                *o = o.max(*v);
            }
        }
        (out, pts.len() * dirs.len() * offsets.len())
    }

    /// Running maximum on the ladder up to `r_max`.
    pub fn profile(&self, af: &AlphaFunction, domain: &Region, r_max: f64) -> BetaProfile {
        let radii = self.ladder(r_max);
        if af.is_constant() {
            let n = radii.len();
            return BetaProfile { radii, values: vec![0.0; n], samples: 0 };
        }
        let (mut values, samples) = self.raw_max(af, domain, &radii);
        for i in 1..values.len() {
            values[i] = values[i].max(values[i - 1]);
        }
        BetaProfile { radii, values, samples }
    }

    pub fn sample(&self, af: &AlphaFunction, r: f64, domain: &Region) -> BetaSample {
        if af.is_constant() || !(r > 0.0) {
            return BetaSample { r, value: 0.0, samples: 0 };
        }
        let mut offsets = self.ladder(r);
        if offsets.last().is_none_or(|&l| l < r) {
            offsets.push(r);
        }
        let (raw, samples) = self.raw_max(af, domain, &offsets);
        let value = raw.into_iter().fold(0.0, f64::max);
        BetaSample { r, value, samples }
    }
}

/// Sampled lower estimate of β(r) over pairs in `domain`.
pub fn beta_modulus(af: &AlphaFunction, r: f64, domain: &Region) -> BetaSample {
    BetaSampler::for_dim(domain.dim).sample(af, r, domain)
}
