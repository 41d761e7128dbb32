//! Test functions u, v, f, g: polynomial bumps, plane waves, constants and
//! piecewise-linear lattice data, plus the contraction u⁺∧1 used by the
//! Markov check.
//!
//! Besides values and gradients every variant provides the increment
//! u(x+z) − u(x) and the second-order remainder u(x+z) − u(x) − ∇u(x)·z
//! without catastrophic cancellation for small |z|; the quadrature goes
//! down to |z| ~ 1e−20 and relies on this.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, check_dim, dot, norm, point_from_slice, scale, sub, Lattice, Point, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionPart {
    /// u⁺ ∧ 1
    Clipped,
    /// u − u⁺ ∧ 1
    Excess,
}

#[derive(Debug, Clone)]
enum Shape {
    /// amplitude·(1 − |x−c|²/ρ²)₊^power
    Bump { center: Point, radius: f64, amplitude: f64, power: u32 },
    /// amplitude·cos(ξ·x + phase)
    Wave { xi: Point, phase: f64, amplitude: f64 },
    Constant(f64),
    /// Piecewise linear (1D) or linear on the two triangles of each cell (2D).
    Sampled { values: Arc<Vec<f64>> },
    Contracted { base: Box<GridFunction>, part: ContractionPart },
}

/// A test function together with the lattice used for outer (dx) integrals.
#[derive(Debug, Clone)]
pub struct GridFunction {
    dim: usize,
    shape: Shape,
    lattice: Option<Lattice>,
    label: String,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// sin t − t without cancellation.
fn sin_minus_id(t: f64) -> f64 {
    if t.abs() < 0.5 {
        let t2 = t * t;
        // Horner on −t³/3! + t⁵/5! − … through t¹⁵
        let mut s = 0.0;
        let mut k = 15.0;
        while k >= 3.0 {
            let fact: f64 = (1..=(k as u32)).map(|i| i as f64).product();
            let sign = if ((k as u32 - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
            s = s * t2 + sign / fact;
            k -= 2.0;
        }
        s * t2 * t
    } else {
        t.sin() - t
    }
}

impl GridFunction {
    /// Polynomial bump supported on the ball of radius `radius`; C^{power−1}.
    pub fn bump(dim: usize, center: Point, radius: f64, amplitude: f64, power: u32, cells: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(radius > 0.0) || power < 2 {
            return Err(Error::InvalidArgument(format!(
                "bump needs radius > 0 and power >= 2, got radius={radius}, power={power}"
            )));
        }
        let region = Region::new(dim, sub(&center, &[radius, radius]), add(&center, &[radius, radius]))?;
        let lattice = Lattice::new(region, [cells.max(1), cells.max(1)])?;
        Ok(Self {
            dim,
            shape: Shape::Bump { center, radius, amplitude, power },
            lattice: Some(lattice),
            label: format!("bump(c={:?}, r={radius}, a={amplitude}, p={power})", &center[..dim]),
        })
    }

    pub fn wave(dim: usize, xi: Point, phase: f64, amplitude: f64) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            shape: Shape::Wave { xi, phase, amplitude },
            lattice: None,
            label: format!("wave(xi={:?}, phase={phase})", &xi[..dim]),
        })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, shape: Shape::Constant(value), lattice: None, label: format!("const({value})") })
    }

    /// Lattice data, node order as in [`Lattice::nodes`]. Values on the
    /// boundary of the lattice region must vanish.
    pub fn sampled(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        let counts = lattice.node_counts();
        if values.len() != counts[0] * counts[1] {
            return Err(Error::InvalidArgument(format!(
                "expected {} lattice values, got {}",
                counts[0] * counts[1],
                values.len()
            )));
        }
        let dim = lattice.dim();
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let on_edge = i == 0 || i + 1 == counts[0] || (dim == 2 && (j == 0 || j + 1 == counts[1]));
                let v = values[j * counts[0] + i];
                if !v.is_finite() || (on_edge && v != 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sampled values must be finite and vanish on the lattice boundary (node [{i}, {j}] = {v})"
                    )));
                }
            }
        }
        Ok(Self { dim, shape: Shape::Sampled { values: Arc::new(values) }, lattice: Some(lattice), label: "sampled".into() })
    }

    /// u⁺∧1 or u − u⁺∧1, applied pointwise.
    pub fn contracted(base: &GridFunction, part: ContractionPart) -> Self {
        let name = match part {
            ContractionPart::Clipped => "clip",
            ContractionPart::Excess => "excess",
        };
        Self {
            dim: base.dim,
            shape: Shape::Contracted { base: Box::new(base.clone()), part },
            lattice: base.lattice,
            label: format!("{name}({})", base.label),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Replace the outer-integration lattice (same region, different cell count).
    pub fn with_cells(mut self, cells: usize) -> Self {
        if let Some(l) = &mut self.lattice {
            if !matches!(self.shape, Shape::Sampled { .. }) {
                l.cells = [cells.max(1), if self.dim == 1 { 1 } else { cells.max(1) }];
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    /// Closed box outside which the function vanishes; `None` when not
    /// compactly supported.
    pub fn support(&self) -> Option<Region> {
        match &self.shape {
            Shape::Wave { .. } => None,
            Shape::Constant(c) => (*c == 0.0).then(|| Region::new(self.dim, [0.0; 2], [0.0; 2]).unwrap()),
            Shape::Contracted { base, .. } => base.support(),
            _ => self.lattice.map(|l| l.region),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            Shape::Constant(c) => *c == 0.0,
            Shape::Bump { amplitude, .. } | Shape::Wave { amplitude, .. } => *amplitude == 0.0,
            Shape::Sampled { values } => values.iter().all(|v| *v == 0.0),
            Shape::Contracted { .. } => false,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Constant(_)) || self.is_zero()
    }

    /// (ξ, phase, amplitude) for plane waves.
    pub fn wave_parameters(&self) -> Option<(Point, f64, f64)> {
        match &self.shape {
            Shape::Wave { xi, phase, amplitude } => Some((*xi, *phase, *amplitude)),
            _ => None,
        }
    }

    /// Largest |z| for which u(x+z) may be nonzero.
    pub fn reach(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Constant(_) if self.is_zero() => 0.0,
            _ => match self.support() {
                Some(r) => r.max_distance(x),
                None => f64::INFINITY,
            },
        }
    }

    /// Panel width below which GL on the function's smooth pieces is exact
    /// or nearly so.
    pub fn feature_length(&self) -> f64 {
        match &self.shape {
            Shape::Bump { radius, .. } => {
                if self.dim == 1 {
                    0.5 * radius
                } else {
                    0.25 * radius
                }
            }
            Shape::Wave { xi, .. } => {
                let k = norm(xi, self.dim);
                if k > 0.0 {
                    0.5 * std::f64::consts::PI / k
                } else {
                    f64::INFINITY
                }
            }
            Shape::Constant(_) => f64::INFINITY,
            Shape::Sampled { .. } => {
                if self.dim == 1 {
                    f64::INFINITY
                } else {
                    let h = self.lattice.unwrap().spacing();
                    0.5 * h[0].min(h[1])
                }
            }
            Shape::Contracted { base, .. } => base.feature_length(),
        }
    }

    /// One-dimensional points where the function or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.dim != 1 {
            return Vec::new();
        }
        match &self.shape {
            Shape::Bump { center, radius, .. } => vec![center[0] - radius, center[0] + radius],
            Shape::Sampled { .. } => self.lattice.unwrap().nodes().iter().map(|p| p[0]).collect(),
            Shape::Contracted { base, .. } => {
                let mut b = base.breakpoints();
                b.extend(base.crossings(0.0));
                b.extend(base.crossings(1.0));
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            }
            _ => Vec::new(),
        }
    }

    /// 1D points where u crosses `level`, for the shapes where this is known.
    fn crossings(&self, level: f64) -> Vec<f64> {
        match &self.shape {
            Shape::Sampled { values } => {
                let nodes = self.lattice.unwrap().nodes();
                let mut out = Vec::new();
                for i in 0..values.len().saturating_sub(1) {
                    let (a, b) = (values[i] - level, values[i + 1] - level);
                    if a * b < 0.0 {
                        let t = a / (a - b);
                        out.push(nodes[i][0] + t * (nodes[i + 1][0] - nodes[i][0]));
                    }
                }
                out
            }
            Shape::Bump { center, radius, amplitude, power } => {
                if level <= 0.0 || level >= *amplitude {
                    return Vec::new();
                }
                let s = (1.0 - (level / amplitude).powf(1.0 / *power as f64)).sqrt();
                vec![center[0] - s * radius, center[0] + s * radius]
            }
            _ => Vec::new(),
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Bump { center, radius, amplitude, power } => {
                let s2 = norm(&sub(x, center), self.dim).powi(2) / (radius * radius);
                if s2 < 1.0 {
                    amplitude * (1.0 - s2).powi(*power as i32)
                } else {
                    0.0
                }
            }
            Shape::Wave { xi, phase, amplitude } => amplitude * (dot(xi, x, self.dim) + phase).cos(),
            Shape::Constant(c) => *c,
            Shape::Sampled { values } => self.sampled_value(values, x),
            Shape::Contracted { base, part } => {
                let u = base.value(x);
                let c = u.clamp(0.0, 1.0);
                match part {
                    ContractionPart::Clipped => c,
                    ContractionPart::Excess => u - c,
                }
            }
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        match &self.shape {
            Shape::Bump { center, radius, amplitude, power } => {
                let d = sub(x, center);
                let s2 = norm(&d, self.dim).powi(2) / (radius * radius);
                if s2 < 1.0 {
                    let f = -2.0 * amplitude * *power as f64 * (1.0 - s2).powi(*power as i32 - 1) / (radius * radius);
                    let mut g = scale(&d, f);
                    if self.dim == 1 {
                        g[1] = 0.0;
                    }
                    g
                } else {
                    [0.0, 0.0]
                }
            }
            Shape::Wave { xi, phase, amplitude } => {
                let s = -amplitude * (dot(xi, x, self.dim) + phase).sin();
                if self.dim == 1 {
                    [s * xi[0], 0.0]
                } else {
                    scale(xi, s)
                }
            }
            Shape::Constant(_) => [0.0, 0.0],
            Shape::Sampled { values } => self.sampled_gradient(values, x),
            Shape::Contracted { base, part } => {
                let u = base.value(x);
                let inside = u > 0.0 && u < 1.0;
                let g = base.gradient(x);
                match part {
                    ContractionPart::Clipped if inside => g,
                    ContractionPart::Excess if !inside => g,
                    _ => [0.0, 0.0],
                }
            }
        }
    }

    /// u(x+z) − u(x).
    pub fn increment(&self, x: &Point, z: &Point) -> f64 {
        match &self.shape {
            Shape::Bump { .. } => self.bump_increment(x, z, false),
            Shape::Wave { xi, phase, amplitude } => {
                let th = dot(xi, x, self.dim) + phase;
                let t = dot(xi, z, self.dim);
                -2.0 * amplitude * (th + 0.5 * t).sin() * (0.5 * t).sin()
            }
            Shape::Constant(_) => 0.0,
            Shape::Sampled { values } if self.dim == 1 => self.sampled_increment_1d(values, x, z),
            Shape::Contracted { base, part } => {
                let a = base.value(x);
                let d = base.increment(x, z);
                let b = a + d;
                let inside = |t: f64| t > 0.0 && t < 1.0;
                // on one linear piece of t ↦ t⁺∧1 the clipped increment is d or 0
                let clipped = if inside(a) && inside(b) {
                    d
                } else if (a <= 0.0 && b <= 0.0) || (a >= 1.0 && b >= 1.0) {
                    0.0
                } else {
                    b.clamp(0.0, 1.0) - a.clamp(0.0, 1.0)
                };
                match part {
                    ContractionPart::Clipped => clipped,
                    ContractionPart::Excess => d - clipped,
                }
            }
            _ => self.value(&add(x, z)) - self.value(x),
        }
    }

    /// u(x+z) − u(x) − ∇u(x)·z.
    pub fn remainder(&self, x: &Point, z: &Point) -> f64 {
        match &self.shape {
            Shape::Bump { .. } => self.bump_increment(x, z, true),
            Shape::Wave { xi, phase, amplitude } => {
                let th = dot(xi, x, self.dim) + phase;
                let t = dot(xi, z, self.dim);
                let half = (0.5 * t).sin();
                amplitude * (-2.0 * th.cos() * half * half - th.sin() * sin_minus_id(t))
            }
            Shape::Constant(_) => 0.0,
            _ => self.increment(x, z) - dot(&self.gradient(x), z, self.dim),
        }
    }

    fn bump_increment(&self, x: &Point, z: &Point, compensated: bool) -> f64 {
        let Shape::Bump { center, radius, amplitude, power } = &self.shape else { unreachable!() };
        let s = scale(&sub(x, center), 1.0 / radius);
        let zeta = scale(z, 1.0 / radius);
        let q0 = 1.0 - norm(&s, self.dim).powi(2);
        let delta = -(2.0 * dot(&s, &zeta, self.dim) + norm(&zeta, self.dim).powi(2));
        if q0 > 0.0 && q0 + delta > 0.0 {
            // (q0 + δ)^p − q0^p expanded in δ; the linear term's gradient part is dropped when compensating
            let p = *power;
            let mut sum = 0.0;
            for k in (2..=p).rev() {
                sum += binomial(p, k) * q0.powi((p - k) as i32) * delta.powi(k as i32);
            }
            let lin = p as f64 * q0.powi(p as i32 - 1);
            let first = if compensated { -norm(&zeta, self.dim).powi(2) } else { delta };
            amplitude * (sum + lin * first)
        } else {
            let inc = self.value(&add(x, z)) - self.value(x);
            if compensated {
                inc - dot(&self.gradient(x), z, self.dim)
            } else {
                inc
            }
        }
    }

    fn cell_1d(&self, t: f64) -> Option<(usize, f64)> {
        let l = self.lattice.as_ref()?;
        let (a, b) = (l.region.lower[0], l.region.upper[0]);
        if !(t >= a && t <= b) {
            return None;
        }
        let h = l.spacing()[0];
        let i = (((t - a) / h).floor() as usize).min(l.cells[0] - 1);
        Some((i, (t - a) / h - i as f64))
    }

    fn sampled_value(&self, values: &[f64], x: &Point) -> f64 {
        if self.dim == 1 {
            match self.cell_1d(x[0]) {
                Some((i, s)) => values[i] + s * (values[i + 1] - values[i]),
                None => 0.0,
            }
        } else {
            match self.cell_2d(x) {
                Some((i, j, s, t)) => {
                    let (v00, v10, v01, v11) = self.corners(values, i, j);
                    if s >= t {
                        v00 + s * (v10 - v00) + t * (v11 - v10)
                    } else {
                        v00 + t * (v01 - v00) + s * (v11 - v01)
                    }
                }
                None => 0.0,
            }
        }
    }

    fn sampled_gradient(&self, values: &[f64], x: &Point) -> Point {
        let l = self.lattice.unwrap();
        let h = l.spacing();
        if self.dim == 1 {
            let slope = |i: usize| (values[i + 1] - values[i]) / h[0];
            match self.cell_1d(x[0]) {
                Some((i, s)) => {
                    // at an interior node use the central difference
                    if s == 0.0 && i > 0 {
                        [0.5 * (slope(i - 1) + slope(i)), 0.0]
                    } else {
                        [slope(i), 0.0]
                    }
                }
                None => [0.0, 0.0],
            }
        } else {
            match self.cell_2d(x) {
                Some((i, j, s, t)) => {
                    let (v00, v10, v01, v11) = self.corners(values, i, j);
                    if s >= t {
                        [(v10 - v00) / h[0], (v11 - v10) / h[1]]
                    } else {
                        [(v11 - v01) / h[0], (v01 - v00) / h[1]]
                    }
                }
                None => [0.0, 0.0],
            }
        }
    }

    /// Exact increment of the piecewise-linear interpolant: for short jumps
    /// the slope is integrated cell by cell instead of subtracting values.
    fn sampled_increment_1d(&self, values: &[f64], x: &Point, z: &Point) -> f64 {
        let l = self.lattice.unwrap();
        let h = l.spacing()[0];
        if z[0].abs() >= h {
            return self.sampled_value(values, &add(x, z)) - self.sampled_value(values, x);
        }
        let (a, b) = (l.region.lower[0], l.region.upper[0]);
        if !(x[0] >= a && x[0] <= b) {
            // start outside the support: only the part of [x, x+z] inside counts
            let (lo, hi) = if z[0] >= 0.0 { (x[0], x[0] + z[0]) } else { (x[0] + z[0], x[0]) };
            if hi <= a || lo >= b {
                return 0.0;
            }
            return self.sampled_value(values, &add(x, z));
        }
        let slope = |i: usize| (values[i + 1] - values[i]) / h;
        let (mut i, _) = self.cell_1d(x[0]).unwrap();
        let start = a + i as f64 * h;
        if z[0] < 0.0 && x[0] == start && i > 0 {
            i -= 1;
        }
        let cell_lo = a + i as f64 * h;
        let cell_hi = if i + 1 == l.cells[0] { b } else { a + (i + 1) as f64 * h };
        let room = if z[0] >= 0.0 { cell_hi - x[0] } else { x[0] - cell_lo };
        let d = z[0].abs();
        let sign = z[0].signum();
        if d <= room {
            return slope(i) * z[0];
        }
        // |z| < h crosses at most one node
        let next = if z[0] >= 0.0 { (i + 1 < l.cells[0]).then(|| i + 1) } else { i.checked_sub(1) };
        let rest = next.map_or(0.0, |j| slope(j) * (d - room));
        sign * (slope(i) * room + rest)
    }

    fn cell_2d(&self, x: &Point) -> Option<(usize, usize, f64, f64)> {
        let l = self.lattice.as_ref()?;
        if !l.region.contains(x) {
            return None;
        }
        let h = l.spacing();
        let loc = |k: usize| {
            let u = (x[k] - l.region.lower[k]) / h[k];
            let i = (u.floor() as usize).min(l.cells[k] - 1);
            (i, u - i as f64)
        };
        let (i, s) = loc(0);
        let (j, t) = loc(1);
        Some((i, j, s, t))
    }

    fn corners(&self, values: &[f64], i: usize, j: usize) -> (f64, f64, f64, f64) {
        let n0 = self.lattice.unwrap().node_counts()[0];
        let at = |a: usize, b: usize| values[b * n0 + a];
        (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1))
    }
}

/// Serializable function description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Bump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "unit")]
        amplitude: f64,
        #[serde(default = "default_power")]
        power: u32,
        #[serde(default = "default_cells")]
        cells: usize,
    },
    Wave {
        xi: Vec<f64>,
        #[serde(default)]
        phase: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    Constant {
        #[serde(default = "one_dim")]
        dim: usize,
        value: f64,
    },
    Sampled {
        lower: Vec<f64>,
        upper: Vec<f64>,
        cells: Vec<usize>,
        values: Vec<f64>,
    },
}

fn unit() -> f64 {
    1.0
}
fn default_power() -> u32 {
    4
}
fn default_cells() -> usize {
    32
}
fn one_dim() -> usize {
    1
}

impl FunctionSpec {
    pub fn dim(&self) -> usize {
        match self {
            FunctionSpec::Bump { center, .. } => center.len(),
            FunctionSpec::Wave { xi, .. } => xi.len(),
            FunctionSpec::Constant { dim, .. } => *dim,
            FunctionSpec::Sampled { lower, .. } => lower.len(),
        }
    }

    pub fn build(&self) -> Result<GridFunction> {
        match self {
            FunctionSpec::Bump { center, radius, amplitude, power, cells } => {
                GridFunction::bump(center.len(), point_from_slice(center)?, *radius, *amplitude, *power, *cells)
            }
            FunctionSpec::Wave { xi, phase, amplitude } => {
                GridFunction::wave(xi.len(), point_from_slice(xi)?, *phase, *amplitude)
            }
            FunctionSpec::Constant { dim, value } => GridFunction::constant(*dim, *value),
            FunctionSpec::Sampled { lower, upper, cells, values } => {
                let dim = lower.len();
                if upper.len() != dim || cells.len() != dim {
                    return Err(Error::InvalidArgument("sampled function: lower, upper and cells must have equal length".into()));
                }
                let region = Region::new(dim, point_from_slice(lower)?, point_from_slice(upper)?)?;
                let c = [cells[0], if dim == 2 { cells[1] } else { 1 }];
                GridFunction::sampled(Lattice::new(region, c)?, values.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(u: &GridFunction, x: &Point) -> Point {
        let h = 1e-6;
        let mut g = [0.0; 2];
        for k in 0..u.dim() {
            let mut a = *x;
            let mut b = *x;
            a[k] += h;
            b[k] -= h;
            g[k] = (u.value(&a) - u.value(&b)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn bump_gradient_matches_finite_differences() {
        for dim in [1, 2] {
            let u = GridFunction::bump(dim, [0.2, -0.1], 1.3, 1.7, 4, 16).unwrap();
            for p in [[0.0, 0.0], [0.5, 0.3], [-0.9, 0.2], [1.2, -0.4]] {
                let g = u.gradient(&p);
                let f = fd_grad(&u, &p);
                for k in 0..dim {
                    assert!((g[k] - f[k]).abs() < 1e-6, "dim {dim} at {p:?}: {g:?} vs {f:?}");
                }
            }
        }
    }

    #[test]
    fn bump_remainder_is_accurate_for_tiny_steps() {
        let u = GridFunction::bump(1, [0.0, 0.0], 1.0, 1.0, 4, 16).unwrap();
        let x = [0.3, 0.0];
        // u'' at x for (1 − s²)^4: 8(1−s²)^2(7s² − 1)
        let s2: f64 = 0.09;
        let h = 8.0 * (1.0 - s2).powi(2) * (7.0 * s2 - 1.0);
        for e in [1e-4, 1e-8, 1e-12, 1e-16] {
            let r = u.remainder(&x, &[e, 0.0]);
            let want = 0.5 * h * e * e;
            assert!((r - want).abs() <= 1e-3 * want.abs() + 1e-300, "e={e}: {r} vs {want}");
        }
        // away from tiny steps the expansion agrees with plain subtraction
        let z = [0.4, 0.0];
        let direct = u.value(&add(&x, &z)) - u.value(&x) - u.gradient(&x)[0] * 0.4;
        assert!((u.remainder(&x, &z) - direct).abs() < 1e-15);
        let z = [0.9, 0.0];
        let direct = u.value(&add(&x, &z)) - u.value(&x);
        assert!((u.increment(&x, &z) - direct).abs() < 1e-15);
    }

    #[test]
    fn wave_remainder_matches_series() {
        let u = GridFunction::wave(1, [2.0, 0.0], 0.3, 1.0).unwrap();
        let x = [0.7, 0.0];
        let th = 2.0 * 0.7 + 0.3f64;
        for e in [1e-3, 1e-7, 1e-11] {
            let t = 2.0 * e;
            let want = -0.5 * th.cos() * t * t + th.sin() * t * t * t / 6.0;
            let r = u.remainder(&x, &[e, 0.0]);
            assert!((r - want).abs() <= 1e-6 * want.abs(), "{r} vs {want}");
        }
        // sin(0.3) − 0.3 to 20 digits
        assert!((sin_minus_id(0.3) + 0.004_479_793_338_660_424_9).abs() < 2e-18);
    }

    #[test]
    fn sampled_interpolation_and_increments() {
        let lat = Lattice::new(Region::interval(0.0, 4.0).unwrap(), [4, 1]).unwrap();
        let u = GridFunction::sampled(lat, vec![0.0, 1.0, 3.0, 2.0, 0.0]).unwrap();
        assert_eq!(u.value(&[1.5, 0.0]), 2.0);
        assert_eq!(u.gradient(&[1.5, 0.0])[0], 2.0);
        assert_eq!(u.gradient(&[1.0, 0.0])[0], 1.5);
        assert!((u.increment(&[0.9, 0.0], &[0.2, 0.0]) - (0.1 + 0.2)).abs() < 1e-15);
        assert!((u.increment(&[1.1, 0.0], &[-0.2, 0.0]) + 0.3).abs() < 1e-15);
        assert_eq!(u.increment(&[1.5, 0.0], &[1e-14, 0.0]), 2e-14);
        assert_eq!(u.value(&[5.0, 0.0]), 0.0);
        assert!(GridFunction::sampled(lat, vec![1.0, 1.0, 3.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn sampled_2d_is_continuous_across_diagonal() {
        let lat = Lattice::new(Region::new(2, [0.0, 0.0], [2.0, 2.0]).unwrap(), [2, 2]).unwrap();
        let mut vals = vec![0.0; 9];
        vals[4] = 1.0;
        let u = GridFunction::sampled(lat, vals).unwrap();
        assert_eq!(u.value(&[1.0, 1.0]), 1.0);
        let a = u.value(&[0.5 + 1e-12, 0.5]);
        let b = u.value(&[0.5, 0.5 + 1e-12]);
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn contraction_parts_add_up() {
        let u = GridFunction::bump(1, [0.0, 0.0], 1.0, 2.5, 4, 16).unwrap();
        let c = GridFunction::contracted(&u, ContractionPart::Clipped);
        let e = GridFunction::contracted(&u, ContractionPart::Excess);
        for i in -12..=12 {
            let x = [i as f64 * 0.1, 0.0];
            let (cu, eu) = (c.value(&x), e.value(&x));
            assert!((0.0..=1.0).contains(&cu));
            assert!((cu + eu - u.value(&x)).abs() < 1e-15);
            let g = add(&c.gradient(&x), &e.gradient(&x));
            assert!((g[0] - u.gradient(&x)[0]).abs() < 1e-12);
        }
        let b = c.breakpoints();
        assert_eq!(b.len(), 4);
        // increments agree with value differences, and are exact multiples
        // of the base increment for tiny steps
        for (x, z) in [(0.1, 0.3), (0.9, -0.5), (-0.7, 0.05), (0.3, 1e-13)] {
            let (x, z) = ([x, 0.0], [z, 0.0]);
            for f in [&c, &e] {
                let direct = f.value(&add(&x, &z)) - f.value(&x);
                assert!((f.increment(&x, &z) - direct).abs() < 1e-14);
            }
        }
        let x = [0.95, 0.0];
        assert_eq!(c.increment(&x, &[1e-17, 0.0]), u.increment(&x, &[1e-17, 0.0]));
        assert_eq!(e.increment(&x, &[1e-17, 0.0]), 0.0);
    }

    #[test]
    fn spec_builds() {
        let s = FunctionSpec::Bump { center: vec![0.5], radius: 1.0, amplitude: 1.0, power: 4, cells: 8 };
        let u = s.build().unwrap();
        assert_eq!(u.dim(), 1);
        assert_eq!(u.value(&[0.5, 0.0]), 1.0);
        assert!(u.support().unwrap().contains(&[1.4, 0.0]));
    }
}
