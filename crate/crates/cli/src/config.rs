//! Run configuration: what to build and which requests to execute.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use jumpform::conditions::{ConditionId, Sampling};
use jumpform::geometry::point_from_slice;
use jumpform::{AnnulusScheme, FormQuadrature, FunctionSpec, KernelSpec, Lattice, Point, Region};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub quadrature: AnnulusScheme,
    #[serde(default)]
    pub forms: FormQuadrature,
    /// Box over which conditions are sampled.
    #[serde(default)]
    pub region: Option<BoxSpec>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionSpec>,
    #[serde(default)]
    pub conditions: ConditionBlock,
    #[serde(default)]
    pub requests: Vec<Request>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn region(&self) -> Result<Region, CliError> {
        if self.lower.len() != self.upper.len() {
            return Err(CliError::Config("box lower and upper must have the same length".into()));
        }
        Ok(Region::new(self.lower.len(), point_from_slice(&self.lower)?, point_from_slice(&self.upper)?)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionBlock {
    pub ids: Vec<ConditionId>,
    /// Exponent for A2 and A3.
    pub gamma: Option<f64>,
    /// Compact sets for H5 and WEAKLIMIT; the region when empty.
    pub compacts: Vec<BoxSpec>,
    pub sampling: Sampling,
    pub eps_sequence: Option<Vec<f64>>,
}

/// Evaluation points: an explicit list or the nodes of a lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSet {
    List(Vec<Vec<f64>>),
    Lattice { lower: Vec<f64>, upper: Vec<f64>, cells: Vec<usize> },
}

impl PointSet {
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        match self {
            PointSet::List(ps) => ps.iter().map(|p| Ok(point_from_slice(p)?)).collect(),
            PointSet::Lattice { lower, upper, cells } => {
                let region = BoxSpec { lower: lower.clone(), upper: upper.clone() }.region()?;
                if cells.len() != region.dim {
                    return Err(CliError::Config("lattice cells must have one entry per axis".into()));
                }
                let c = [cells[0], if region.dim == 2 { cells[1] } else { 1 }];
                Ok(Lattice::new(region, c)?.nodes())
            }
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            PointSet::List(ps) => ps.first().map(Vec::len),
            PointSet::Lattice { lower, .. } => Some(lower.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorChoice {
    L,
    Lambda,
    Ltilde,
    B,
    Lstar,
    /// L, Λ and L̃ together, with the residual of L + Λ − 2L̃.
    Triplet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormChoice {
    Energy,
    Eta,
    EtaN,
    InnerProduct,
    Markov,
    Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Apply {
        operator: OperatorChoice,
        function: String,
        points: PointSet,
        #[serde(default)]
        eps_sequence: Option<Vec<f64>>,
    },
    Form {
        form: FormChoice,
        u: String,
        #[serde(default)]
        v: Option<String>,
        /// Truncation levels for `eta_n`.
        #[serde(default)]
        n: Vec<usize>,
        /// sup h for `bounds`; estimated from the region when absent.
        #[serde(default)]
        h_sup: Option<f64>,
        #[serde(default)]
        sector_c: Option<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Kappa {
        points: PointSet,
        #[serde(default)]
        eps_sequence: Option<Vec<f64>>,
    },
    Symbol {
        /// Constant index; the kernel's index function when absent.
        #[serde(default)]
        alpha: Option<f64>,
        xi: Vec<f64>,
        #[serde(default)]
        x: Option<Vec<f64>>,
    },
}

impl Request {
    pub fn op(&self) -> Op {
        match self {
            Request::Apply { .. } => Op::Apply,
            Request::Form { .. } => Op::Form,
            Request::Kappa { .. } => Op::Kappa,
            Request::Symbol { .. } => Op::Symbol,
        }
    }

    /// Function names the request refers to, with their JSON field names.
    pub fn function_refs(&self) -> Vec<(&'static str, &str)> {
        match self {
            Request::Apply { function, .. } => vec![("function", function.as_str())],
            Request::Form { u, v, .. } => {
                let mut out = vec![("u", u.as_str())];
                if let Some(v) = v {
                    out.push(("v", v.as_str()));
                }
                out
            }
            _ => Vec::new(),
        }
    }
}

/// Kind of work, used to select a subset of a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Check,
    Apply,
    Form,
    Kappa,
    Symbol,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_abs: Option<f64>,
    pub tol_rel: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("schema: {e}")))
    }

    /// Quadrature scheme with the tolerance overrides applied.
    pub fn scheme(&self) -> AnnulusScheme {
        let mut s = self.quadrature;
        if let Some(a) = self.tolerances.tol_abs {
            s.tol_abs = a;
        }
        if let Some(r) = self.tolerances.tol_rel {
            s.tol_rel = r;
        }
        s
    }

    pub fn forms_quadrature(&self) -> FormQuadrature {
        FormQuadrature { scheme: self.scheme(), ..self.forms }
    }
}
