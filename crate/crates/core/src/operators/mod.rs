//! Pointwise generators L, Λ, L̃, B and L* = Λ + κ, the killing term κ and
//! the symbol check for stable-like kernels.
//!
//! Per-point numerical failures are recorded in the evaluation and do not
//! abort the whole call.

mod killing;
mod symbol;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::geometry::Point;
use crate::kernels::{JumpKernel, SplitKernel};
use crate::quadrature::integrals::{absolute_parts, generator_parts, Accuracy};
use crate::quadrature::{pv_limit, AnnulusScheme};

pub(crate) use killing::killing_partials;
pub use killing::{killing_term, smeared_killing, submarkov_sign, KillingTerm, SignSummary, SubMarkovVerdict, SIGN_BAND};
pub use symbol::{symbol_check, SymbolResidual};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorId {
    #[serde(rename = "L")]
    L,
    #[serde(rename = "LAMBDA")]
    Lambda,
    #[serde(rename = "LTILDE")]
    Ltilde,
    #[serde(rename = "LSTAR")]
    Lstar,
    #[serde(rename = "B")]
    B,
}

impl std::str::FromStr for OperatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L" => Ok(Self::L),
            "LAMBDA" => Ok(Self::Lambda),
            "LTILDE" => Ok(Self::Ltilde),
            "LSTAR" => Ok(Self::Lstar),
            "B" => Ok(Self::B),
            _ => Err(Error::InvalidArgument(format!("unknown operator '{s}' (expected L, LAMBDA, LTILDE, LSTAR or B)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    /// Extrapolated mass of the inner ball left out.
    pub inner_remainder: f64,
    /// Smallest radius reached by the inner shells.
    pub innermost: f64,
    /// Error bound of the far field (kernel tail).
    pub tail_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv_converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv_last_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PointDiagnostics {
    fn from_accuracy(a: &Accuracy) -> Self {
        Self { inner_remainder: a.inner.estimate, innermost: a.inner.innermost, tail_bound: a.tail_bound, ..Self::default() }
    }

    fn failed(e: &Error) -> Self {
        Self { error: Some(e.to_string()), ..Self::default() }
    }
}

/// Values of one operator at a list of points. `values[i]` is `None` when
/// the evaluation failed; the reason is in `diagnostics[i].error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorEvaluation {
    pub operator: OperatorId,
    pub kernel: String,
    pub function: String,
    pub points: Vec<Point>,
    pub values: Vec<Option<f64>>,
    pub diagnostics: Vec<PointDiagnostics>,
    /// For L*: max over points of |(Λ + κ)u − (2L̃ + κ − L)u|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<f64>,
}

impl OperatorEvaluation {
    pub fn all_ok(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// All values, or the first per-point error.
    pub fn require(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .zip(&self.diagnostics)
            .zip(&self.points)
            .map(|((v, d), p)| {
                v.ok_or_else(|| {
                    Error::NoConvergence(format!(
                        "{:?} at {p:?}: {}",
                        self.operator,
                        d.error.as_deref().unwrap_or("no value")
                    ))
                })
            })
            .collect()
    }
}

fn check_dims(kdim: usize, u: &GridFunction, points: &[Point]) -> Result<()> {
    if kdim != u.dim() {
        return Err(Error::InvalidArgument(format!("kernel has dimension {kdim}, function has {}", u.dim())));
    }
    if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Error::InvalidArgument("evaluation points must be finite".into()));
    }
    Ok(())
}

/// Deterministic parallel map over points (order preserved).
fn per_point<T: Send>(points: &[Point], f: impl Fn(&Point) -> T + Sync) -> Vec<T> {
    points.par_iter().map(&f).collect()
}

fn evaluation(
    operator: OperatorId,
    kernel: &str,
    u: &GridFunction,
    points: &[Point],
    results: Vec<Result<(f64, PointDiagnostics)>>,
) -> OperatorEvaluation {
    let mut values = Vec::with_capacity(results.len());
    let mut diagnostics = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok((v, d)) => {
                values.push(Some(v));
                diagnostics.push(d);
            }
            Err(e) => {
                values.push(None);
                diagnostics.push(PointDiagnostics::failed(&e));
            }
        }
    }
    OperatorEvaluation {
        operator,
        kernel: kernel.to_string(),
        function: u.label().to_string(),
        points: points.to_vec(),
        values,
        diagnostics,
        identity_residual: None,
    }
}

fn single(
    operator: OperatorId,
    j: &JumpKernel,
    u: &GridFunction,
    points: &[Point],
    scheme: &AnnulusScheme,
) -> Result<OperatorEvaluation> {
    // always on the shared nodes of the triplet so L, Λ, L̃ and L* agree
    let t = apply_triplet(j, u, points, scheme)?;
    Ok(match operator {
        OperatorId::L => t.l,
        OperatorId::Lambda => t.lambda,
        _ => t.ltilde,
    })
}

/// Lu(x) = ∫(u(x+z) − u(x) − ∇u(x)·z 1_{|z|≤1}) j(x,x+z) dz
///        + ½∇u(x)·∫_{|z|≤1} z (j(x,x+z) − j(x,x−z)) dz.
pub fn apply_l(j: &JumpKernel, u: &GridFunction, points: &[Point], scheme: &AnnulusScheme) -> Result<OperatorEvaluation> {
    single(OperatorId::L, j, u, points, scheme)
}

/// Λ: as L with j(x+z, x) in place of j(x, x+z).
pub fn apply_lambda(
    j: &JumpKernel,
    u: &GridFunction,
    points: &[Point],
    scheme: &AnnulusScheme,
) -> Result<OperatorEvaluation> {
    single(OperatorId::Lambda, j, u, points, scheme)
}

/// L̃: as L with the symmetric part j_s.
pub fn apply_ltilde(
    sk: &SplitKernel,
    u: &GridFunction,
    points: &[Point],
    scheme: &AnnulusScheme,
) -> Result<OperatorEvaluation> {
    single(OperatorId::Ltilde, sk.base(), u, points, scheme)
}

/// L, Λ and L̃ evaluated on one shared set of quadrature nodes per point, so
/// that L + Λ − 2L̃ only carries rounding error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorTriplet {
    pub l: OperatorEvaluation,
    pub lambda: OperatorEvaluation,
    pub ltilde: OperatorEvaluation,
}

impl GeneratorTriplet {
    /// max over points of |Lu + Λu − 2L̃u|; `None` if any point failed.
    pub fn algebra_residual(&self) -> Option<f64> {
        let mut worst = 0.0f64;
        for i in 0..self.l.values.len() {
            let r = self.l.values[i]? + self.lambda.values[i]? - 2.0 * self.ltilde.values[i]?;
            worst = worst.max(r.abs());
        }
        Some(worst)
    }
}

pub fn apply_triplet(
    j: &JumpKernel,
    u: &GridFunction,
    points: &[Point],
    scheme: &AnnulusScheme,
) -> Result<GeneratorTriplet> {
    scheme.validate()?;
    check_dims(j.dim(), u, points)?;
    let jt = j.transposed();
    let sk = SplitKernel::from_trusted(j);
    let js = sk.symmetric();
    let raw = per_point(points, |x| generator_parts::<6>(scheme, &[j, &jt, &js], u, x));
    let pick = |k: usize| -> Vec<Result<(f64, PointDiagnostics)>> {
        raw.iter()
            .map(|r| match r {
                Ok((v, acc)) => Ok((v[k] + v[k + 3], PointDiagnostics::from_accuracy(acc))),
                Err(e) => Err(e.clone()),
            })
            .collect()
    };
    Ok(GeneratorTriplet {
        l: evaluation(OperatorId::L, j.label(), u, points, pick(0)),
        lambda: evaluation(OperatorId::Lambda, j.label(), u, points, pick(1)),
        ltilde: evaluation(OperatorId::Ltilde, j.label(), u, points, pick(2)),
    })
}

/// Bu(x) = PV∫(u(y) − u(x)) k_s(x,y) dy + ∫(u(y) − u(x)) k_a(x,y) dy, the
/// principal value taken along `eps_sequence`. Non-convergence of the PV is
/// flagged in the diagnostics; the last partial is still reported.
pub fn apply_b(
    sk: &SplitKernel,
    u: &GridFunction,
    points: &[Point],
    eps_sequence: &[f64],
    scheme: &AnnulusScheme,
) -> Result<OperatorEvaluation> {
    scheme.validate()?;
    check_dims(sk.dim(), u, points)?;
    crate::quadrature::integrals::check_eps_sequence(eps_sequence)?;
    let ks = sk.symmetric();
    let ka = sk.antisymmetric();
    let results = per_point(points, |x| {
        let pv = pv_limit(&ks, u, x, eps_sequence, scheme)?;
        let (a, acc) = absolute_parts::<1>(scheme, &[&ka], u, x)?;
        let mut d = PointDiagnostics::from_accuracy(&acc);
        d.pv_converged = Some(pv.converged);
        d.pv_last_delta = Some(pv.last_delta);
        Ok((pv.value + a[0], d))
    });
    Ok(evaluation(OperatorId::B, sk.base().label(), u, points, results))
}

/// L*u = Λu + κu. κ is taken from [`killing_term`] along `eps_sequence`;
/// a point where u ≠ 0 and κ did not converge is an
/// [`Error::UnresolvedKilling`]. The identity (Λ + κ)u = (2L̃ + κ − L)u is
/// checked on shared nodes and reported as `identity_residual`.
pub fn apply_lstar(
    j: &JumpKernel,
    u: &GridFunction,
    points: &[Point],
    eps_sequence: &[f64],
    scheme: &AnnulusScheme,
) -> Result<OperatorEvaluation> {
    let t = apply_triplet(j, u, points, scheme)?;
    let kt = killing_term(j, points, eps_sequence, scheme)?;
    let mut out = t.lambda.clone();
    out.operator = OperatorId::Lstar;
    let mut worst = 0.0f64;
    for (i, x) in points.iter().enumerate() {
        let ux = u.value(x);
        let kappa = if ux == 0.0 {
            kt.values[i].unwrap_or(0.0)
        } else {
            match kt.values[i] {
                Some(k) => k,
                None => return Err(Error::UnresolvedKilling { point: *x }),
            }
        };
        if let (Some(lam), Some(l), Some(lt)) = (t.lambda.values[i], t.l.values[i], t.ltilde.values[i]) {
            let lhs = lam + kappa * ux;
            let rhs = 2.0 * lt + kappa * ux - l;
            worst = worst.max((lhs - rhs).abs());
            out.values[i] = Some(lhs);
        }
    }
    out.identity_residual = Some(worst);
    Ok(out)
}
