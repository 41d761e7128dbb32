//! The bilinear forms ℰ, η_n and η on compactly supported functions, and
//! the Markov, lower-bound and sector checks built on them.
//!
//! Outer integrals use the composite Gauss–Legendre rule of a lattice; the
//! inner integrals are the radial quadratures of [`crate::quadrature`].


use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{ContractionPart, GridFunction};
use crate::geometry::{Lattice, Point};
use crate::kernels::{Density, JumpKernel, SplitKernel};
use crate::quadrature::integrals::{absolute_parts, energy_density, outside_mass, truncated_partials, Accuracy};
use crate::quadrature::AnnulusScheme;

/// Default tolerance for the sign checks.
pub const FORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormQuadrature {
    pub scheme: AnnulusScheme,
    /// Gauss–Legendre nodes per lattice cell and axis for the outer integral.
    pub per_cell: usize,
}

impl Default for FormQuadrature {
    fn default() -> Self {
        Self { scheme: AnnulusScheme::default(), per_cell: 6 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FormDiagnostics {
    /// Number of outer quadrature nodes with a nonzero contribution.
    pub pair_count: usize,
    /// Smallest inner radius reached over all outer nodes.
    pub truncation_level: f64,
    /// Σ |w| · extrapolated inner remainder.
    pub inner_remainder: f64,
    /// Σ |w| · far-field error bound.
    pub tail_bound: f64,
}

impl FormDiagnostics {
    fn merge(&mut self, other: &FormDiagnostics) {
        self.pair_count += other.pair_count;
        self.truncation_level = match (self.truncation_level, other.truncation_level) {
            (a, 0.0) => a,
            (0.0, b) => b,
            (a, b) => a.min(b),
        };
        self.inner_remainder += other.inner_remainder;
        self.tail_bound += other.tail_bound;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    /// ½ℰ(u, v).
    pub symmetric_part: f64,
    /// ∬ (u(x) − u(y)) v(y) k_a(x, y) dx dy.
    pub antisymmetric_part: f64,
    pub total: f64,
    pub diagnostics: FormDiagnostics,
}

/// Outer nodes and weights: the lattice of `u` and `v` if they share one,
/// otherwise the union box at the finer spacing.
fn shared_rule(u: &GridFunction, v: &GridFunction, per_cell: usize) -> Result<Vec<(Point, f64)>> {
    let (lu, lv) = match (u.lattice(), v.lattice()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument("forms need compactly supported functions on a lattice".into())),
    };
    if lu == lv {
        return Ok(lu.cell_rule(per_cell));
    }
    let h = lu.spacing().iter().take(u.dim()).chain(lv.spacing().iter().take(v.dim())).copied().fold(f64::INFINITY, f64::min);
    Ok(Lattice::with_spacing(lu.region.union(&lv.region), h)?.cell_rule(per_cell))
}

fn own_rule(v: &GridFunction, per_cell: usize) -> Result<Vec<(Point, f64)>> {
    v.lattice()
        .map(|l| l.cell_rule(per_cell))
        .ok_or_else(|| Error::InvalidArgument(format!("function '{}' has no lattice", v.label())))
}

fn check_dims(u: &GridFunction, v: &GridFunction, dim: usize) -> Result<()> {
    if u.dim() != dim || v.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: u is {}D, v is {}D, kernel is {}D",
            u.dim(),
            v.dim(),
            dim
        )));
    }
    Ok(())
}

/// Σ w·f(x) over the rule, evaluated in parallel and summed in rule order.
fn outer_sum<F>(rule: &[(Point, f64)], f: F) -> Result<(f64, FormDiagnostics)>
where
    F: Fn(&Point) -> Result<Option<(f64, Accuracy)>> + Sync,
{
    let parts: Vec<Result<Option<(f64, Accuracy)>>> = rule.par_iter().map(|(x, _)| f(x)).collect();
    let mut sum = 0.0;
    let mut diag = FormDiagnostics::default();
    for ((_, w), part) in rule.iter().zip(parts) {
        if let Some((value, acc)) = part? {
            sum += w * value;
            diag.merge(&FormDiagnostics {
                pair_count: 1,
                truncation_level: acc.inner.innermost,
                inner_remainder: w.abs() * acc.inner.estimate.abs(),
                tail_bound: w.abs() * acc.tail_bound,
            });
        }
    }
    Ok((sum, diag))
}

/// ∫ u v dx with the lattice rule of `v` (or of `u` if `v` has none).
pub fn inner_product(u: &GridFunction, v: &GridFunction, per_cell: usize) -> Result<f64> {
    let rule = own_rule(v, per_cell).or_else(|_| own_rule(u, per_cell))?;
    Ok(rule.iter().map(|(x, w)| w * u.value(x) * v.value(x)).sum())
}

fn energy_with_diagnostics(
    u: &GridFunction,
    v: &GridFunction,
    ks: &dyn Density,
    q: &FormQuadrature,
) -> Result<(f64, FormDiagnostics)> {
    check_dims(u, v, ks.dim())?;
    if ks.vanishes() || u.is_zero() || v.is_zero() {
        return Ok((0.0, FormDiagnostics::default()));
    }
    let rule = shared_rule(u, v, q.per_cell)?;
    let region = match (u.support(), v.support()) {
        (Some(a), Some(b)) => a.union(&b),
        _ => return Err(Error::InvalidArgument("forms need compactly supported functions".into())),
    };
    // ℰ = ∫_S Γ(x) dx + ∫_S u v (y) ∫_{x∉S} k_s(x, y) dx dy, using the symmetry of k_s
    outer_sum(&rule, |x| {
        let (gamma, mut acc) = energy_density(&q.scheme, ks, u, v, x)?;
        let uv = u.value(x) * v.value(x);
        let mut value = gamma;
        if uv != 0.0 {
            let (mass, bound) = outside_mass(&q.scheme, ks, &region, x)?;
            value += uv * mass;
            acc.tail_bound += uv.abs() * bound;
        }
        Ok(Some((value, acc)))
    })
}

/// ℰ(u, v) = ∬_{x≠y} (u(x) − u(y))(v(x) − v(y)) k_s(x, y) dx dy.
pub fn energy_e(u: &GridFunction, v: &GridFunction, sk: &SplitKernel, q: &FormQuadrature) -> Result<f64> {
    Ok(energy_with_diagnostics(u, v, &sk.symmetric(), q)?.0)
}

/// η_n(u, v) = −⟨L_n u, v⟩ with L_n truncated at |y − x| ≥ 1/n.
pub fn eta_n(u: &GridFunction, v: &GridFunction, k: &JumpKernel, n_trunc: usize, q: &FormQuadrature) -> Result<f64> {
    Ok(eta_n_sequence(u, v, k, &[n_trunc], q)?[0])
}

/// η_n for every n in `ns` (any order), sharing the radial work.
pub fn eta_n_sequence(
    u: &GridFunction,
    v: &GridFunction,
    k: &JumpKernel,
    ns: &[usize],
    q: &FormQuadrature,
) -> Result<Vec<f64>> {
    check_dims(u, v, k.dim())?;
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("n_trunc must be at least 1".into()));
    }
    let mut sorted: Vec<usize> = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if v.is_zero() || u.is_constant() {
        return Ok(vec![0.0; ns.len()]);
    }
    let eps: Vec<f64> = sorted.iter().map(|n| 1.0 / *n as f64).collect();
    let rule = own_rule(v, q.per_cell)?;
    let parts: Vec<Result<Option<Vec<f64>>>> = rule
        .par_iter()
        .map(|(x, _)| {
            let vx = v.value(x);
            if vx == 0.0 {
                return Ok(None);
            }
            let (partials, _) = truncated_partials(&q.scheme, k, u, x, &eps)?;
            Ok(Some(partials.into_iter().map(|p| -p * vx).collect()))
        })
        .collect();
    let mut sums = vec![0.0; sorted.len()];
    for ((_, w), part) in rule.iter().zip(parts) {
        if let Some(p) = part? {
            for (s, pi) in sums.iter_mut().zip(p) {
                *s += w * pi;
            }
        }
    }
    Ok(ns.iter().map(|n| sums[sorted.binary_search(n).unwrap()]).collect())
}

/// η(u, v) = ½ℰ(u, v) + ∬ (u(x) − u(y)) v(y) k_a(x, y) dx dy.
///
/// The second term is −∫ v(y) Au(y) dy with
/// Au(y) = ∫ (u(y+z) − u(y)) k_a(y, y+z) dz, which converges absolutely.
pub fn eta(u: &GridFunction, v: &GridFunction, sk: &SplitKernel, q: &FormQuadrature) -> Result<FormValue> {
    let (energy, mut diagnostics) = energy_with_diagnostics(u, v, &sk.symmetric(), q)?;
    let ka = sk.antisymmetric();
    let antisymmetric_part = if ka.vanishes() || v.is_zero() || u.is_constant() {
        0.0
    } else {
        let rule = own_rule(v, q.per_cell)?;
        let (s, d) = outer_sum(&rule, |y| {
            let vy = v.value(y);
            if vy == 0.0 {
                return Ok(None);
            }
            let ([au], acc) = absolute_parts::<1>(&q.scheme, &[&ka], u, y)?;
            Ok(Some((-vy * au, acc)))
        })?;
        diagnostics.merge(&d);
        s
    };
    let symmetric_part = 0.5 * energy;
    Ok(FormValue { symmetric_part, antisymmetric_part, total: symmetric_part + antisymmetric_part, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    /// η(u⁺∧1, u − u⁺∧1).
    pub value: FormValue,
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluates η(u⁺∧1, u − u⁺∧1); passes iff the total is ≥ −tol.
pub fn markov_check(u: &GridFunction, sk: &SplitKernel, tol: f64, q: &FormQuadrature) -> Result<MarkovReport> {
    let clipped = GridFunction::contracted(u, ContractionPart::Clipped);
    let excess = GridFunction::contracted(u, ContractionPart::Excess);
    let value = eta(&clipped, &excess, sk, q)?;
    let pass = value.total >= -tol;
    Ok(MarkovReport { value, tolerance: tol, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub eta_uu: FormValue,
    pub eta_vv: FormValue,
    pub eta_uv: FormValue,
    pub norm_u_sq: f64,
    pub norm_v_sq: f64,
    /// α₀ = ½ sup ĥ.
    pub alpha0: f64,
    /// min over u, v of η(w, w) + α₀‖w‖².
    pub lower_bound_margin: f64,
    pub lower_pass: bool,
    pub sector_c: f64,
    /// |η(u, v)|.
    pub sector_lhs: f64,
    /// c·√(η(u,u) + α₀‖u‖²)·√(η(v,v) + α₀‖v‖²).
    pub sector_rhs: f64,
    pub sector_pass: bool,
    /// Smallest c for which the sector inequality holds on this pair.
    pub min_sector_c: f64,
    /// |antisymmetric part of η(u, v)|.
    pub cauchy_schwarz_lhs: f64,
    /// √ℰ(u,u)·√(sup ĥ)·‖v‖.
    pub cauchy_schwarz_rhs: f64,
    pub cauchy_schwarz_pass: bool,
    pub tolerance: f64,
}

/// Lower bound, sector and Cauchy–Schwarz checks for one pair, given the
/// estimate `h_sup` of sup h.
pub fn bound_checks(
    u: &GridFunction,
    v: &GridFunction,
    sk: &SplitKernel,
    h_sup: f64,
    sector_c: f64,
    tol: f64,
    q: &FormQuadrature,
) -> Result<BoundReport> {
    if !(h_sup >= 0.0) {
        return Err(Error::InvalidArgument(format!("h_sup must be nonnegative, got {h_sup}")));
    }
    let eta_uu = eta(u, u, sk, q)?;
    let eta_vv = eta(v, v, sk, q)?;
    let eta_uv = eta(u, v, sk, q)?;
    let norm_u_sq = inner_product(u, u, q.per_cell)?;
    let norm_v_sq = inner_product(v, v, q.per_cell)?;
    let alpha0 = 0.5 * h_sup;
    let mu = eta_uu.total + alpha0 * norm_u_sq;
    let mv = eta_vv.total + alpha0 * norm_v_sq;
    let lower_bound_margin = mu.min(mv);
    let sector_lhs = eta_uv.total.abs();
    let scale = mu.max(0.0).sqrt() * mv.max(0.0).sqrt();
    let sector_rhs = sector_c * scale;
    let min_sector_c = if scale > 0.0 {
        sector_lhs / scale
    } else if sector_lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let cauchy_schwarz_lhs = eta_uv.antisymmetric_part.abs();
    let cauchy_schwarz_rhs = (2.0 * eta_uu.symmetric_part).max(0.0).sqrt() * h_sup.sqrt() * norm_v_sq.max(0.0).sqrt();
    Ok(BoundReport {
        lower_pass: lower_bound_margin >= -tol,
        sector_pass: sector_lhs <= sector_rhs + tol,
        cauchy_schwarz_pass: cauchy_schwarz_lhs <= cauchy_schwarz_rhs + tol,
        eta_uu,
        eta_vv,
        eta_uv,
        norm_u_sq,
        norm_v_sq,
        alpha0,
        lower_bound_margin,
        sector_c,
        sector_lhs,
        sector_rhs,
        min_sector_c,
        cauchy_schwarz_lhs,
        cauchy_schwarz_rhs,
        tolerance: tol,
    })
}
