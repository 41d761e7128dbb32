use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::geometry::Point;
use crate::kernels::{Density, JumpKernel};
use crate::quadrature::integrals::{check_eps_sequence, check_resolution};
use crate::quadrature::radial::Engine;
use crate::quadrature::{AnnulusScheme, PVEstimate};

/// Values within ±SIGN_BAND count as zero in sign summaries.
pub const SIGN_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSummary {
    Zero,
    Nonpositive,
    Nonnegative,
    Mixed,
    /// No point converged.
    Unresolved,
}

impl SignSummary {
    pub fn of(values: impl IntoIterator<Item = f64>, band: f64) -> Self {
        let (mut any, mut neg, mut pos) = (false, false, false);
        for v in values {
            any = true;
            neg |= v < -band;
            pos |= v > band;
        }
        match (any, neg, pos) {
            (false, _, _) => Self::Unresolved,
            (true, false, false) => Self::Zero,
            (true, true, false) => Self::Nonpositive,
            (true, false, true) => Self::Nonnegative,
            (true, true, true) => Self::Mixed,
        }
    }
}

/// κ̂_ε(x) = −2∫_{|y−x|≥ε} j_a(x,y) dy along a truncation sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillingTerm {
    pub kernel: String,
    pub points: Vec<Point>,
    pub eps_sequence: Vec<f64>,
    /// partials[i][m] = κ̂_{εₘ}(points[i]).
    pub partials: Vec<Vec<f64>>,
    /// Last partial where the sequence is Cauchy, otherwise `None`.
    pub values: Vec<Option<f64>>,
    pub converged: Vec<bool>,
    pub last_delta: Vec<f64>,
    /// Error bound of the common far field |y − x| ≥ max(ε₁, r_break).
    pub tail_bound: Vec<f64>,
    pub errors: Vec<Option<String>>,
    pub sign_summary: SignSummary,
}

impl KillingTerm {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }

    /// Largest |κ̂_ε(x)| over all points and truncations.
    pub fn sup_abs_partial(&self) -> f64 {
        self.partials.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Partials of −2∫_{|z|≥εₘ} j_a(x, x+z) dz and the far-field error bound.
pub(crate) fn killing_partials(
    j: &JumpKernel,
    x: &Point,
    eps: &[f64],
    scheme: &AnnulusScheme,
) -> Result<(Vec<f64>, f64)> {
    if j.symmetric_hint() {
        return Ok((vec![0.0; eps.len()], 0.0));
    }
    check_resolution(Density::resolution(j, x), eps)?;
    let engine = Engine::new(scheme, j.dim())
        .with_breaks(Density::radial_breaks(j))
        .with_variation(j.transposed().far_variation(x));
    // −2 · ½(j(x,x+z) − j(x+z,x))
    let f = |z: &Point| -> Result<[f64; 1]> { Ok([-j.skew(x, z)?]) };
    let split = eps[0].max(scheme.r_break);
    let far = engine.far(split, scheme.r_max, &f)?;
    let ka = crate::kernels::AntisymmetricPart(j);
    let tail = ka.tail(x, far.end);
    let mut acc = far.values[0] - 2.0 * tail.estimate;
    let bound = match tail.error_bound {
        Some(b) => 2.0 * b,
        None => far.extrapolated,
    };
    if eps[0] < split {
        acc += engine.annulus(eps[0], split, &f)?.0[0];
    }
    let mut out = Vec::with_capacity(eps.len());
    out.push(acc);
    for w in eps.windows(2) {
        acc += engine.annulus(w[1], w[0], &f)?.0[0];
        out.push(acc);
    }
    Ok((out, bound))
}

/// κ̂_ε at each point along `eps_sequence`. Per-point failures are stored in
/// `errors`; convergence uses the scheme's limit tolerance.
pub fn killing_term(j: &JumpKernel, points: &[Point], eps_sequence: &[f64], scheme: &AnnulusScheme) -> Result<KillingTerm> {
    scheme.validate()?;
    check_eps_sequence(eps_sequence)?;
    let raw: Vec<Result<(Vec<f64>, f64)>> =
        points.par_iter().map(|x| killing_partials(j, x, eps_sequence, scheme)).collect();
    let n = points.len();
    let mut kt = KillingTerm {
        kernel: j.label().to_string(),
        points: points.to_vec(),
        eps_sequence: eps_sequence.to_vec(),
        partials: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        converged: Vec::with_capacity(n),
        last_delta: Vec::with_capacity(n),
        tail_bound: Vec::with_capacity(n),
        errors: Vec::with_capacity(n),
        sign_summary: SignSummary::Unresolved,
    };
    for r in raw {
        match r {
            Ok((partials, bound)) => {
                let est = PVEstimate::from_partials(eps_sequence.to_vec(), partials.clone(), scheme);
                kt.values.push(est.converged.then_some(est.value));
                kt.converged.push(est.converged);
                kt.last_delta.push(est.last_delta);
                kt.tail_bound.push(bound);
                kt.partials.push(partials);
                kt.errors.push(None);
            }
            Err(e) => {
                kt.values.push(None);
                kt.converged.push(false);
                kt.last_delta.push(f64::INFINITY);
                kt.tail_bound.push(f64::INFINITY);
                kt.partials.push(Vec::new());
                kt.errors.push(Some(e.to_string()));
            }
        }
    }
    kt.sign_summary = SignSummary::of(kt.values.iter().flatten().copied(), SIGN_BAND);
    Ok(kt)
}

/// Vague form of κ: partials of ∫ φ(x) κ̂_ε(x) dx for a compactly supported
/// test function φ, using the cell rule of φ's lattice.
pub fn smeared_killing(
    j: &JumpKernel,
    phi: &GridFunction,
    eps_sequence: &[f64],
    per_cell: usize,
    scheme: &AnnulusScheme,
) -> Result<PVEstimate> {
    scheme.validate()?;
    check_eps_sequence(eps_sequence)?;
    let lattice = phi
        .lattice()
        .ok_or_else(|| Error::InvalidArgument("smearing function must be compactly supported".into()))?;
    let rule = lattice.cell_rule(per_cell);
    let parts: Vec<Result<Vec<f64>>> = rule
        .par_iter()
        .map(|(x, w)| {
            let p = phi.value(x);
            if p == 0.0 {
                return Ok(vec![0.0; eps_sequence.len()]);
            }
            let (k, _) = killing_partials(j, x, eps_sequence, scheme)?;
            Ok(k.into_iter().map(|v| w * p * v).collect())
        })
        .collect();
    let mut sums = vec![0.0; eps_sequence.len()];
    for p in parts {
        for (s, v) in sums.iter_mut().zip(p?) {
            *s += v;
        }
    }
    Ok(PVEstimate::from_partials(eps_sequence.to_vec(), sums, scheme))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubMarkovVerdict {
    pub sign: SignSummary,
    /// κ ≤ SIGN_BAND at every converged point and no point unresolved.
    pub nonpositive: bool,
    pub unresolved_points: usize,
    pub interpretation: String,
}

/// Sign verdict on a killing term: κ ≤ 0 (within ±SIGN_BAND) means the dual
/// semigroup is sub-Markovian.
pub fn submarkov_sign(kt: &KillingTerm) -> SubMarkovVerdict {
    let unresolved = kt.values.iter().filter(|v| v.is_none()).count();
    let sign = kt.sign_summary;
    let nonpositive = unresolved == 0 && matches!(sign, SignSummary::Zero | SignSummary::Nonpositive);
    let interpretation = if nonpositive {
        "kappa <= 0 at all sampled points: the dual semigroup is sub-Markovian".to_string()
    } else if unresolved > 0 {
        format!("{unresolved} point(s) without a converged kappa: no conclusion")
    } else {
        format!("kappa is {sign:?} on the sampled points: sub-Markov property of the dual not established").to_lowercase()
    };
    SubMarkovVerdict { sign, nonpositive, unresolved_points: unresolved, interpretation }
}
