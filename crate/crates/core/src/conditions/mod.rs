//! Sampled checks of the integrability conditions on a kernel.
//!
//! A supremum over x ∈ ℝⁿ cannot be computed. Every check samples x on the
//! nodes of a lattice over a user-declared region (plus probe points) and
//! once more on the lattice refined by two; the verdict is evidence on that
//! region, not proof.

mod beta;
mod local;
#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Lattice, Point, Region};
use crate::kernels::{BetaSampler, SplitKernel};
use crate::operators::killing_partials;
use crate::quadrature::{default_eps_sequence, AnnulusScheme};

pub use beta::{beta_integrals, half_line, BetaIntegrals, HalfLineIntegral};
pub use local::{
    a0_density, cond4_density, far_antisymmetric_mass, far_symmetric_mass, h3_density, near_antisymmetric_power,
    near_ratio_sup, sector_density,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms, non_camel_case_types)]
pub enum ConditionId {
    A0,
    A1,
    A2,
    A3,
    COND2,
    COND4,
    H1,
    H2,
    H3,
    H4,
    H5,
    WEAKLIMIT,
    BETA_INT,
}

impl ConditionId {
    pub const ALL: [ConditionId; 13] = [
        Self::A0,
        Self::A1,
        Self::A2,
        Self::A3,
        Self::COND2,
        Self::COND4,
        Self::H1,
        Self::H2,
        Self::H3,
        Self::H4,
        Self::H5,
        Self::WEAKLIMIT,
        Self::BETA_INT,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::A0 => "A0",
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3 => "A3",
            Self::COND2 => "COND2",
            Self::COND4 => "COND4",
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::H5 => "H5",
            Self::WEAKLIMIT => "WEAKLIMIT",
            Self::BETA_INT => "BETA_INT",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        Self::ALL
            .iter()
            .find(|c| c.as_str() == up)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown condition '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Witness {
    fn at(x: &Point, dim: usize, value: f64) -> Self {
        Self { x: x[..dim].to_vec(), y: None, value, note: None }
    }

    fn failed(x: &Point, dim: usize, e: &Error) -> Self {
        Self { x: x[..dim].to_vec(), y: None, value: f64::NAN, note: Some(e.to_string()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub witness_points: Vec<Witness>,
    pub verdict: Verdict,
    pub samples: usize,
    /// Region the verdict speaks about.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
    /// Secondary numbers (L² norms, coarse estimates, bounds).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(id: ConditionId, regions: Vec<Region>) -> Self {
        Self {
            condition_id: id,
            estimate: 0.0,
            gamma: None,
            witness_points: Vec::new(),
            verdict: Verdict::Pass,
            samples: 0,
            regions,
            extras: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn extra(&mut self, key: &str, v: f64) {
        self.extras.insert(key.to_string(), v);
    }
}

/// Where and how densely x is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Cells per axis of the coarse lattice; the fine lattice has twice as many.
    pub cells: usize,
    /// Extra points evaluated at both levels.
    pub probes: Vec<Point>,
    /// Relative growth of an estimate under refinement still called stable.
    pub stability: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { cells: 8, probes: Vec::new(), stability: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionSetup {
    pub region: Option<Region>,
    /// Compact sets for H5 and WEAKLIMIT; defaults to `region`.
    pub compacts: Vec<Region>,
    pub sampling: Sampling,
    /// Exponent for A2 and A3, in (0, 1].
    pub gamma: f64,
    pub scheme: AnnulusScheme,
    pub eps_sequence: Vec<f64>,
}

impl Default for ConditionSetup {
    fn default() -> Self {
        Self {
            region: None,
            compacts: Vec::new(),
            sampling: Sampling::default(),
            gamma: 1.0,
            scheme: AnnulusScheme::default(),
            eps_sequence: default_eps_sequence(),
        }
    }
}

/// Sample points: fine lattice nodes then probes; `coarse[i]` marks the
/// points that belong to the unrefined level.
struct SamplePoints {
    points: Vec<Point>,
    coarse: Vec<bool>,
    /// Trapezoid weights on the fine and coarse lattices (0 for probes).
    fine_w: Vec<f64>,
    coarse_w: Vec<f64>,
}

fn sample_points(regions: &[Region], sampling: &Sampling) -> Result<SamplePoints> {
    if regions.is_empty() {
        return Err(Error::InvalidArgument("condition checks need a region".into()));
    }
    let cells = sampling.cells.max(1);
    let mut sp = SamplePoints { points: Vec::new(), coarse: Vec::new(), fine_w: Vec::new(), coarse_w: Vec::new() };
    for region in regions {
        let dim = region.dim;
        let fine = Lattice::new(*region, [2 * cells, 2 * cells])?;
        let n = fine.node_counts();
        let h = fine.spacing();
        let weight = |i: usize, last: usize, step: f64| {
            if last == 0 {
                1.0
            } else if i == 0 || i == last {
                0.5 * step
            } else {
                step
            }
        };
        for j in 0..n[1] {
            for i in 0..n[0] {
                sp.points.push(fine.node([i, j]));
                let is_coarse = i % 2 == 0 && (dim == 1 || j % 2 == 0);
                sp.coarse.push(is_coarse);
                let mut wf = weight(i, n[0] - 1, h[0]);
                let mut wc = if i % 2 == 0 { weight(i / 2, cells, 2.0 * h[0]) } else { 0.0 };
                if dim == 2 {
                    wf *= weight(j, n[1] - 1, h[1]);
                    wc *= if j % 2 == 0 { weight(j / 2, cells, 2.0 * h[1]) } else { 0.0 };
                }
                sp.fine_w.push(wf);
                sp.coarse_w.push(wc);
            }
        }
    }
    for p in &sampling.probes {
        sp.points.push(*p);
        sp.coarse.push(true);
        sp.fine_w.push(0.0);
        sp.coarse_w.push(0.0);
    }
    Ok(sp)
}

fn evaluate<F>(sp: &SamplePoints, f: F) -> Vec<Result<f64>>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    sp.points.par_iter().map(|x| f(x).and_then(|v| finite(v, x))).collect()
}

fn finite(v: f64, x: &Point) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NoConvergence(format!("local integral is {v} at x={x:?}")))
    }
}

/// Sup or L² aggregation of per-point values.
#[derive(Clone, Copy, PartialEq)]
enum Aggregate {
    Sup,
    L2,
}

fn aggregate(sp: &SamplePoints, values: &[f64], how: Aggregate) -> (f64, f64) {
    match how {
        Aggregate::Sup => {
            let fine = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let coarse = values.iter().zip(&sp.coarse).filter(|(_, c)| **c).fold(0.0f64, |m, (v, _)| m.max(v.abs()));
            (fine, coarse)
        }
        Aggregate::L2 => {
            let f: f64 = values.iter().zip(&sp.fine_w).map(|(v, w)| w * v * v).sum();
            let c: f64 = values.iter().zip(&sp.coarse_w).map(|(v, w)| w * v * v).sum();
            (f.sqrt(), c.sqrt())
        }
    }
}

/// Fills estimate, witnesses and verdict from per-point results. Kernel
/// sign errors abort the whole check.
fn finish(
    mut rep: ConditionReport,
    sp: &SamplePoints,
    results: Vec<Result<f64>>,
    how: Aggregate,
    stability: f64,
    dim: usize,
) -> Result<(ConditionReport, Vec<f64>)> {
    rep.samples = sp.points.len();
    let mut values = Vec::with_capacity(results.len());
    for (x, r) in sp.points.iter().zip(results) {
        match r {
            Ok(v) => values.push(v),
            Err(e @ Error::NegativeKernel { .. }) => return Err(e),
            Err(e) => {
                if rep.witness_points.len() < 5 {
                    rep.witness_points.push(Witness::failed(x, dim, &e));
                }
                rep.verdict = Verdict::Fail;
                values.push(f64::NAN);
            }
        }
    }
    if rep.verdict == Verdict::Fail {
        rep.estimate = f64::INFINITY;
        return Ok((rep, values));
    }
    let (fine, coarse) = aggregate(sp, &values, how);
    rep.estimate = fine;
    rep.extra("coarse_estimate", coarse);
    if how == Aggregate::Sup {
        if let Some((i, v)) = values.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())) {
            rep.witness_points.push(Witness::at(&sp.points[i], dim, *v));
        }
    }
    if fine > coarse * (1.0 + stability) + 1e-300 {
        rep.verdict = Verdict::Inconclusive;
        rep.notes.push(format!("estimate grew from {coarse:e} to {fine:e} under one refinement"));
    }
    Ok((rep, values))
}

fn region_of(setup: &ConditionSetup) -> Result<Region> {
    setup.region.ok_or_else(|| Error::InvalidArgument("condition checks need a region".into()))
}

fn check_dim(sk: &SplitKernel, r: &Region) -> Result<()> {
    if sk.dim() != r.dim {
        return Err(Error::InvalidArgument(format!("kernel is {}D but region is {}D", sk.dim(), r.dim)));
    }
    Ok(())
}

fn sampled<F>(
    id: ConditionId,
    sk: &SplitKernel,
    regions: &[Region],
    sampling: &Sampling,
    how: Aggregate,
    f: F,
) -> Result<(ConditionReport, Vec<f64>, SamplePoints)>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    for r in regions {
        check_dim(sk, r)?;
    }
    let sp = sample_points(regions, sampling)?;
    let results = evaluate(&sp, f);
    let (rep, values) = finish(ConditionReport::new(id, regions.to_vec()), &sp, results, how, sampling.stability, sk.dim())?;
    Ok((rep, values, sp))
}

/// Sup of x ↦ ∫ (1 ∧ |z|²) k_s(x, x+z) dz over the region; its L² norm is
/// reported as the extra `l2_norm`.
pub fn check_a0(sk: &SplitKernel, region: &Region, sampling: &Sampling, scheme: &AnnulusScheme) -> Result<ConditionReport> {
    let (mut rep, values, sp) =
        sampled(ConditionId::A0, sk, &[*region], sampling, Aggregate::Sup, |x| a0_density(sk, x, scheme))?;
    if rep.verdict != Verdict::Fail {
        let (l2, l2c) = aggregate(&sp, &values, Aggregate::L2);
        rep.extra("l2_norm", l2);
        rep.extra("l2_norm_coarse", l2c);
    }
    Ok(rep)
}

/// L² norm over the region of the A0 function.
pub fn check_h1(sk: &SplitKernel, region: &Region, sampling: &Sampling, scheme: &AnnulusScheme) -> Result<ConditionReport> {
    let (mut rep, values, sp) =
        sampled(ConditionId::H1, sk, &[*region], sampling, Aggregate::L2, |x| a0_density(sk, x, scheme))?;
    if rep.verdict != Verdict::Fail {
        rep.extra("sup", aggregate(&sp, &values, Aggregate::Sup).0);
    }
    Ok(rep)
}

/// Sampled sup of h(x) = ∫ k_a²/k_s. Reported as COND2 (or H4, the same
/// condition).
pub fn check_sector_ratio(
    sk: &SplitKernel,
    region: &Region,
    sampling: &Sampling,
    scheme: &AnnulusScheme,
) -> Result<ConditionReport> {
    Ok(sampled(ConditionId::COND2, sk, &[*region], sampling, Aggregate::Sup, |x| sector_density(sk, x, scheme))?.0)
}

/// C₁, C₂ and C₃ as three reports (A1, A2, A3). The A3 report also holds
/// the comparison h(x) ≤ C₂C₃ + C₁ at every sample point.
pub fn check_fu(
    sk: &SplitKernel,
    gamma: f64,
    region: &Region,
    sampling: &Sampling,
    scheme: &AnnulusScheme,
) -> Result<Vec<ConditionReport>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let regions = [*region];
    let (mut a1, _, _) =
        sampled(ConditionId::A1, sk, &regions, sampling, Aggregate::Sup, |x| far_antisymmetric_mass(sk, x, scheme))?;
    let (mut a2, _, _) = sampled(ConditionId::A2, sk, &regions, sampling, Aggregate::Sup, |x| {
        near_antisymmetric_power(sk, gamma, x, scheme)
    })?;
    a1.gamma = Some(gamma);
    a2.gamma = Some(gamma);

    // C₃ is a sup over pairs: per point, the ladder sup and its maximizer
    let sp = sample_points(&regions, sampling)?;
    let per_point: Vec<Result<(f64, f64, Point)>> =
        sp.points.par_iter().map(|x| near_ratio_sup(sk, gamma, x, scheme)).collect();
    let mut a3 = ConditionReport::new(ConditionId::A3, regions.to_vec());
    a3.gamma = Some(gamma);
    a3.samples = sp.points.len();
    let dim = sk.dim();
    let (mut deep, mut shallow, mut coarse) = (0.0f64, 0.0f64, 0.0f64);
    let mut best: Option<Witness> = None;
    for (i, r) in per_point.into_iter().enumerate() {
        let x = &sp.points[i];
        match r {
            Ok((s, d, z)) => {
                shallow = shallow.max(s);
                if sp.coarse[i] {
                    coarse = coarse.max(d);
                }
                if d > deep || best.is_none() {
                    deep = deep.max(d);
                    let y = crate::geometry::add(x, &z);
                    best = Some(Witness { x: x[..dim].to_vec(), y: Some(y[..dim].to_vec()), value: d, note: None });
                }
            }
            Err(e @ Error::NegativeKernel { .. }) => return Err(e),
            Err(e) => {
                a3.verdict = Verdict::Fail;
                if a3.witness_points.len() < 5 {
                    a3.witness_points.push(Witness::failed(x, dim, &e));
                }
            }
        }
    }
    a3.estimate = if a3.verdict == Verdict::Fail { f64::INFINITY } else { deep };
    a3.extra("coarse_estimate", coarse);
    a3.extra("ladder_sup_to_2^-20", shallow);
    if a3.verdict != Verdict::Fail {
        if let Some(w) = best {
            a3.witness_points.push(w);
        }
        let stab = sampling.stability;
        if deep > shallow * (1.0 + stab) + 1e-300 {
            a3.verdict = Verdict::Inconclusive;
            a3.notes.push(format!("ratio still growing toward the diagonal: {shallow:e} at |z| ≥ 2^-20, {deep:e} below"));
        } else if deep > coarse * (1.0 + stab) + 1e-300 {
            a3.verdict = Verdict::Inconclusive;
            a3.notes.push(format!("estimate grew from {coarse:e} to {deep:e} under one refinement"));
        }
    }

    // h ≤ C₂C₃ + C₁ at every sample
    if [&a1, &a2, &a3].iter().all(|r| r.verdict != Verdict::Fail) {
        let bound = a2.estimate * a3.estimate + a1.estimate;
        let hs: Vec<Result<f64>> = evaluate(&sp, |x| sector_density(sk, x, scheme));
        let mut h_max = 0.0f64;
        let mut violations = 0;
        for (i, h) in hs.into_iter().enumerate() {
            let h = h?;
            h_max = h_max.max(h);
            let tol = scheme.tolerance(bound);
            if h > bound + tol {
                violations += 1;
                if a3.witness_points.len() < 6 {
                    let mut w = Witness::at(&sp.points[i], dim, h);
                    w.note = Some(format!("h(x) = {h:e} exceeds C2*C3 + C1 = {bound:e}"));
                    a3.witness_points.push(w);
                }
            }
        }
        a3.extra("h_max", h_max);
        a3.extra("c2c3_plus_c1", bound);
        a3.extra("bound_violations", violations as f64);
        if violations > 0 {
            a3.verdict = Verdict::Fail;
            a3.notes.push(format!("h(x) <= C2*C3 + C1 violated at {violations} sample points"));
        }
    }
    Ok(vec![a1, a2, a3])
}

enum Trend {
    /// Last step within the scheme tolerance.
    Settled,
    /// Steps shrink by a steady factor; carries the bound on what is left.
    Geometric(f64),
    /// Steps do not shrink; carries the last step.
    Stalled(f64),
    Unclear,
}

/// Classifies the tail of a sequence of partials by comparing the largest
/// step in the last four with the largest in the four before. A per-step
/// shrink factor below `STALL` means the remaining steps sum to a finite
/// amount; sign changes in the steps do not matter.
fn partial_trend(p: &[f64], scheme: &AnnulusScheme) -> Trend {
    const STALL: f64 = 0.99;
    const HALF: usize = 4;
    let n = p.len();
    if n >= 2 && (p[n - 1] - p[n - 2]).abs() <= scheme.tolerance(p[n - 1]) {
        return Trend::Settled;
    }
    if n < 2 * HALF + 1 {
        return Trend::Unclear;
    }
    let step = |i: usize| (p[i] - p[i - 1]).abs();
    let early = (n - 2 * HALF..n - HALF).map(step).fold(0.0f64, f64::max);
    let late = (n - HALF..n).map(step).fold(0.0f64, f64::max);
    let rho = (late / early).powf(1.0 / HALF as f64);
    if rho < STALL {
        Trend::Geometric(late * rho / (1.0 - rho))
    } else if rho.is_finite() {
        Trend::Stalled(step(n - 1))
    } else {
        Trend::Unclear
    }
}

/// sup over x in the compacts and over the ε-sequence of
/// |∫_{|z|≥ε} j_a(x, x+z) dz| (H5), and of the same integral of
/// j(x+z, x) − j(x, x+z) (WEAKLIMIT, twice the H5 partials).
pub fn check_local_pv_bound(
    sk: &SplitKernel,
    compacts: &[Region],
    sampling: &Sampling,
    eps_sequence: &[f64],
    scheme: &AnnulusScheme,
) -> Result<Vec<ConditionReport>> {
    for r in compacts {
        check_dim(sk, r)?;
    }
    crate::quadrature::integrals::check_eps_sequence(eps_sequence)?;
    let sp = sample_points(compacts, sampling)?;
    let dim = sk.dim();
    let raw: Vec<Result<(Vec<f64>, f64)>> =
        sp.points.par_iter().map(|x| killing_partials(sk.base(), x, eps_sequence, scheme)).collect();
    let mut h5 = ConditionReport::new(ConditionId::H5, compacts.to_vec());
    h5.samples = sp.points.len();
    let (mut fine, mut coarse) = (0.0f64, 0.0f64);
    let mut argmax: Option<(usize, f64)> = None;
    let mut undecided = 0usize;
    for (i, r) in raw.into_iter().enumerate() {
        let x = &sp.points[i];
        let partials = match r {
            Ok((p, _)) => p,
            Err(e @ Error::NegativeKernel { .. }) => return Err(e),
            Err(e) => {
                h5.verdict = Verdict::Fail;
                if h5.witness_points.len() < 5 {
                    h5.witness_points.push(Witness::failed(x, dim, &e));
                }
                continue;
            }
        };
        // partials of −2∫ j_a; H5 uses ∫ j_a
        let half: Vec<f64> = partials.iter().map(|p| -0.5 * p).collect();
        let mut m = half.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        match partial_trend(&half, scheme) {
            Trend::Settled => {}
            Trend::Geometric(rest) => m = m.max(half[half.len() - 1].abs() + rest),
            Trend::Stalled(step) => {
                h5.verdict = Verdict::Fail;
                if h5.witness_points.len() < 5 {
                    let n = half.len();
                    let mut w = Witness::at(x, dim, half[n - 1]);
                    w.note = Some(format!("partials still moving by {step:e} per step at eps = {:e}", eps_sequence[n - 1]));
                    h5.witness_points.push(w);
                }
            }
            Trend::Unclear => undecided += 1,
        }
        if argmax.is_none_or(|(_, v)| m > v) {
            argmax = Some((i, m));
        }
        fine = fine.max(m);
        if sp.coarse[i] {
            coarse = coarse.max(m);
        }
    }
    if h5.verdict == Verdict::Fail {
        h5.estimate = f64::INFINITY;
    } else {
        h5.estimate = fine;
        if let Some((i, v)) = argmax {
            h5.witness_points.push(Witness::at(&sp.points[i], dim, v));
        }
        if undecided > 0 {
            h5.verdict = Verdict::Inconclusive;
            h5.notes.push(format!("partials neither settle nor decay geometrically at {undecided} points"));
        } else if fine > coarse * (1.0 + sampling.stability) + 1e-300 {
            h5.verdict = Verdict::Inconclusive;
            h5.notes.push(format!("estimate grew from {coarse:e} to {fine:e} under one refinement"));
        }
    }
    h5.extra("coarse_estimate", coarse);
    let mut weak = h5.clone();
    weak.condition_id = ConditionId::WEAKLIMIT;
    weak.estimate = 2.0 * h5.estimate;
    weak.extra("coarse_estimate", 2.0 * coarse);
    for w in &mut weak.witness_points {
        if w.note.is_none() {
            w.value *= 2.0;
        }
    }
    Ok(vec![h5, weak])
}

/// COND4, H2 and H3.
pub fn check_misc_integrability(
    sk: &SplitKernel,
    region: &Region,
    sampling: &Sampling,
    scheme: &AnnulusScheme,
) -> Result<Vec<ConditionReport>> {
    let regions = [*region];
    let (cond4, _, _) =
        sampled(ConditionId::COND4, sk, &regions, sampling, Aggregate::Sup, |x| cond4_density(sk, x, scheme))?;

    // H2: finite sup or finite L² norm on the region
    let (mut h2, values, sp) =
        sampled(ConditionId::H2, sk, &regions, sampling, Aggregate::Sup, |x| far_symmetric_mass(sk, x, scheme))?;
    if h2.verdict != Verdict::Fail {
        let (l2, l2c) = aggregate(&sp, &values, Aggregate::L2);
        h2.extra("l2_norm", l2);
        h2.extra("l2_norm_coarse", l2c);
        if h2.verdict == Verdict::Inconclusive && l2 <= l2c * (1.0 + sampling.stability) {
            h2.verdict = Verdict::Pass;
            h2.notes.push("sup not stable under refinement; L2 norm is".into());
        }
    }

    let (mut h3, values, sp) =
        sampled(ConditionId::H3, sk, &regions, sampling, Aggregate::L2, |x| h3_density(sk.base(), x, scheme))?;
    if h3.verdict != Verdict::Fail {
        h3.extra("sup", aggregate(&sp, &values, Aggregate::Sup).0);
    }
    Ok(vec![cond4, h2, h3])
}

/// ∫₀¹ (β(r)|log r|)² r^{−1−α₂} dr from β sampled on `domain`, with the
/// first-moment integral and the Cauchy–Schwarz comparison as extras.
pub fn check_beta_integral(af: &crate::kernels::AlphaFunction, domain: &Region) -> ConditionReport {
    let mut rep = ConditionReport::new(ConditionId::BETA_INT, vec![*domain]);
    let fine = BetaSampler::for_dim(domain.dim);
    let coarse = BetaSampler {
        spacing: 2.0 * fine.spacing,
        steps_per_octave: (fine.steps_per_octave / 2).max(1),
        ..fine
    };
    let (ints, exponent, samples) = beta::sampled_beta_integrals(af, domain, &fine);
    let (ints_c, _, _) = beta::sampled_beta_integrals(af, domain, &coarse);
    rep.samples = samples;
    rep.estimate = if ints.main.converged { ints.main.value } else { f64::INFINITY };
    rep.extra("alpha2", ints.alpha2);
    rep.extra("coarse_estimate", ints_c.main.value);
    rep.extra("lebesgue_integral", if ints.lebesgue.converged { ints.lebesgue.value } else { f64::INFINITY });
    rep.extra("cs_lhs", if ints.cs_lhs.converged { ints.cs_lhs.value } else { f64::INFINITY });
    rep.extra("cs_rhs", ints.cs_rhs);
    rep.extra("cs_gamma", ints.cs_gamma);
    if exponent.is_finite() {
        rep.extra("small_r_exponent", exponent);
    }
    if !ints.main.converged {
        rep.verdict = Verdict::Fail;
        rep.witness_points.push(Witness {
            x: vec![],
            y: None,
            value: exponent,
            note: Some(format!(
                "integral does not settle by r = e^-{}; fitted small-r exponent {exponent} vs alpha2/2 = {}",
                ints.main.s_end,
                0.5 * ints.alpha2
            )),
        });
        return rep;
    }
    if ints.main.value > ints_c.main.value * (1.0 + 0.05) + 1e-300 {
        rep.verdict = Verdict::Inconclusive;
        rep.notes.push(format!("estimate grew from {:e} to {:e} under refinement", ints_c.main.value, ints.main.value));
    }
    if ints.cs_lhs.converged && ints.cs_lhs.value > ints.cs_rhs * (1.0 + 1e-9) {
        rep.notes.push("Cauchy-Schwarz comparison violated".into());
        rep.verdict = Verdict::Fail;
    }
    rep
}

/// Runs the requested checks, sharing the setup. Reports come back in
/// the order of `ids`.
pub fn check_conditions(sk: &SplitKernel, ids: &[ConditionId], setup: &ConditionSetup) -> Result<Vec<ConditionReport>> {
    setup.scheme.validate()?;
    let region = || region_of(setup);
    let s = &setup.scheme;
    let sampling = &setup.sampling;
    let mut cache: BTreeMap<ConditionId, ConditionReport> = BTreeMap::new();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        if let Some(r) = cache.get(id) {
            out.push(r.clone());
            continue;
        }
        let reports: Vec<ConditionReport> = match id {
            ConditionId::A0 => vec![check_a0(sk, &region()?, sampling, s)?],
            ConditionId::H1 => vec![check_h1(sk, &region()?, sampling, s)?],
            ConditionId::COND2 | ConditionId::H4 => {
                let r = check_sector_ratio(sk, &region()?, sampling, s)?;
                let mut h4 = r.clone();
                h4.condition_id = ConditionId::H4;
                vec![r, h4]
            }
            ConditionId::A1 | ConditionId::A2 | ConditionId::A3 => check_fu(sk, setup.gamma, &region()?, sampling, s)?,
            ConditionId::COND4 | ConditionId::H2 | ConditionId::H3 => {
                check_misc_integrability(sk, &region()?, sampling, s)?
            }
            ConditionId::H5 | ConditionId::WEAKLIMIT => {
                let compacts = if setup.compacts.is_empty() { vec![region()?] } else { setup.compacts.clone() };
                check_local_pv_bound(sk, &compacts, sampling, &setup.eps_sequence, s)?
            }
            ConditionId::BETA_INT => {
                let mut r = match sk.base().alpha() {
                    Some(af) => check_beta_integral(af, &region()?),
                    None => {
                        let mut r = ConditionReport::new(ConditionId::BETA_INT, vec![region()?]);
                        r.verdict = Verdict::Inconclusive;
                        r.estimate = f64::NAN;
                        r.notes.push("kernel has no index function alpha(x)".into());
                        r
                    }
                };
                r.regions = vec![region()?];
                vec![r]
            }
        };
        for r in reports {
            cache.insert(r.condition_id, r);
        }
        out.push(cache[id].clone());
    }
    Ok(out)
}
