//! Points, boxes and uniform lattices in one or two dimensions.
//!
//! A point is always stored as `[f64; 2]`; in one dimension the second
//! coordinate is ignored and kept at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss::GaussLegendre;

pub type Point = [f64; 2];

pub const ORIGIN: Point = [0.0, 0.0];

pub fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")))
    }
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point, dim: usize) -> f64 {
    if dim == 1 {
        a[0] * b[0]
    } else {
        a[0] * b[0] + a[1] * b[1]
    }
}

#[inline]
pub fn norm(a: &Point, dim: usize) -> f64 {
    if dim == 1 {
        a[0].abs()
    } else {
        a[0].hypot(a[1])
    }
}

#[inline]
pub fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    norm(&sub(a, b), dim)
}

/// Surface measure of the unit sphere: 2 in one dimension, 2π in two.
pub fn sphere_measure(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * std::f64::consts::PI
    }
}

/// Point from a coordinate slice of length `dim`.
pub fn point_from_slice(coords: &[f64]) -> Result<Point> {
    match coords.len() {
        1 => Ok([coords[0], 0.0]),
        2 => Ok([coords[0], coords[1]]),
        n => Err(Error::InvalidArgument(format!("point must have 1 or 2 coordinates, got {n}"))),
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub dim: usize,
    pub lower: Point,
    pub upper: Point,
}

impl Region {
    pub fn new(dim: usize, lower: Point, upper: Point) -> Result<Self> {
        check_dim(dim)?;
        for i in 0..dim {
            if !(lower[i] <= upper[i]) {
                return Err(Error::InvalidArgument(format!(
                    "region lower bound {} exceeds upper bound {} on axis {i}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self { dim, lower, upper })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(1, [a, 0.0], [b, 0.0])
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|i| p[i] >= self.lower[i] && p[i] <= self.upper[i])
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut out = *self;
        for i in 0..self.dim {
            out.lower[i] = self.lower[i].min(other.lower[i]);
            out.upper[i] = self.upper[i].max(other.upper[i]);
        }
        out
    }

    pub fn expand(&self, margin: f64) -> Region {
        let mut out = *self;
        for i in 0..self.dim {
            out.lower[i] -= margin;
            out.upper[i] += margin;
        }
        out
    }

    /// Largest distance from `p` to any point of the box.
    pub fn max_distance(&self, p: &Point) -> f64 {
        let mut far = [0.0; 2];
        for i in 0..self.dim {
            far[i] = (p[i] - self.lower[i]).abs().max((p[i] - self.upper[i]).abs());
        }
        norm(&far, self.dim)
    }

    /// Distance along the ray `p + t·dir` (t > 0) until it leaves the box.
    /// Assumes `p` lies inside.
    pub fn exit_distance(&self, p: &Point, dir: &Point) -> f64 {
        let mut t = f64::INFINITY;
        for i in 0..self.dim {
            if dir[i] > 0.0 {
                t = t.min((self.upper[i] - p[i]) / dir[i]);
            } else if dir[i] < 0.0 {
                t = t.min((self.lower[i] - p[i]) / dir[i]);
            }
        }
        t.max(0.0)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.upper[i] - self.lower[i]).product()
    }
}

/// Uniform lattice of `counts[i]` cells per axis over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub region: Region,
    pub cells: [usize; 2],
}

impl Lattice {
    pub fn new(region: Region, cells: [usize; 2]) -> Result<Self> {
        for i in 0..region.dim {
            if cells[i] == 0 {
                return Err(Error::InvalidArgument("lattice needs at least one cell per axis".into()));
            }
        }
        let mut cells = cells;
        if region.dim == 1 {
            cells[1] = 1;
        }
        Ok(Self { region, cells })
    }

    /// Lattice with spacing no larger than `spacing` on every axis.
    pub fn with_spacing(region: Region, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidArgument(format!("lattice spacing must be positive, got {spacing}")));
        }
        let mut cells = [1usize; 2];
        for i in 0..region.dim {
            let w = region.upper[i] - region.lower[i];
            // guard against 0.3/0.1 = 2.9999999999999996
            cells[i] = ((w / spacing) - 1e-9).ceil().max(1.0) as usize;
        }
        Self::new(region, cells)
    }

    pub fn dim(&self) -> usize {
        self.region.dim
    }

    pub fn spacing(&self) -> Point {
        let mut h = [0.0; 2];
        for i in 0..self.dim() {
            h[i] = (self.region.upper[i] - self.region.lower[i]) / self.cells[i] as f64;
        }
        h
    }

    pub fn node_counts(&self) -> [usize; 2] {
        let mut n = [1usize; 2];
        for i in 0..self.dim() {
            n[i] = self.cells[i] + 1;
        }
        n
    }

    pub fn node(&self, idx: [usize; 2]) -> Point {
        let h = self.spacing();
        let mut p = [0.0; 2];
        for i in 0..self.dim() {
            p[i] = if idx[i] == self.cells[i] {
                self.region.upper[i]
            } else {
                self.region.lower[i] + idx[i] as f64 * h[i]
            };
        }
        p
    }

    /// All lattice nodes, first axis fastest.
    pub fn nodes(&self) -> Vec<Point> {
        let n = self.node_counts();
        let mut out = Vec::with_capacity(n[0] * n[1]);
        for j in 0..n[1] {
            for i in 0..n[0] {
                out.push(self.node([i, j]));
            }
        }
        out
    }

    /// Lattice with each cell split into `factor` cells per axis; contains
    /// every node of `self`.
    pub fn refine(&self, factor: usize) -> Lattice {
        let mut cells = self.cells;
        for i in 0..self.dim() {
            cells[i] *= factor.max(1);
        }
        Lattice { region: self.region, cells }
    }

    /// Composite Gauss–Legendre rule with `per_cell` nodes per axis in every
    /// cell. `per_cell == 1` is the midpoint rule.
    pub fn cell_rule(&self, per_cell: usize) -> Vec<(Point, f64)> {
        let gl = GaussLegendre::new(per_cell.max(1));
        let h = self.spacing();
        let dim = self.dim();
        let axis = |i: usize| -> Vec<(f64, f64)> {
            let mut pts = Vec::with_capacity(self.cells[i] * gl.len());
            for c in 0..self.cells[i] {
                let a = self.region.lower[i] + c as f64 * h[i];
                for (t, w) in gl.iter() {
                    pts.push((a + 0.5 * h[i] * (t + 1.0), 0.5 * h[i] * w));
                }
            }
            pts
        };
        let xs = axis(0);
        if dim == 1 {
            return xs.into_iter().map(|(x, w)| ([x, 0.0], w)).collect();
        }
        let ys = axis(1);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &(y, wy) in &ys {
            for &(x, wx) in &xs {
                out.push(([x, y], wx * wy));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_rule_integrates_polynomials() {
        let lat = Lattice::with_spacing(Region::interval(-1.0, 2.0).unwrap(), 0.25).unwrap();
        let s: f64 = lat.cell_rule(2).iter().map(|(p, w)| w * p[0].powi(3)).sum();
        assert!((s - (16.0 - 1.0) / 4.0).abs() < 1e-13);
        let mid: f64 = lat.cell_rule(1).iter().map(|(_, w)| w).sum();
        assert!((mid - 3.0).abs() < 1e-14);
    }

    #[test]
    fn refined_lattice_contains_nodes() {
        let lat = Lattice::with_spacing(Region::interval(-2.0, 2.0).unwrap(), 0.5).unwrap();
        let fine = lat.refine(2).nodes();
        for p in lat.nodes() {
            assert!(fine.iter().any(|q| (q[0] - p[0]).abs() < 1e-15));
        }
    }

    #[test]
    fn exit_distance_in_box() {
        let b = Region::new(2, [-1.0, -1.0], [1.0, 2.0]).unwrap();
        let d = b.exit_distance(&[0.0, 0.0], &[0.0, 1.0]);
        assert!((d - 2.0).abs() < 1e-15);
        let d = b.exit_distance(&[0.5, 0.0], &[-1.0, 0.0]);
        assert!((d - 1.5).abs() < 1e-15);
    }
}
