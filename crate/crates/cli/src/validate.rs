//! Schema and cross-reference checks that run no numerics.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use jumpform::kernels::AlphaSpec;
use jumpform::KernelSpec;

use crate::config::{BoxSpec, FormChoice, PointSet, Request, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Location in the config, e.g. `requests[2].function`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic { path: path.into(), message: message.into() });
    }
}

/// Reads and checks a config file. Only I/O problems are errors; everything
/// else comes back as diagnostics.
pub fn validate_file(path: &Path) -> Result<Vec<Diagnostic>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(validate_text(&text))
}

pub fn validate_text(text: &str) -> Vec<Diagnostic> {
    match serde_json::from_str::<RunConfig>(text) {
        Ok(cfg) => validate(&cfg),
        Err(e) => vec![Diagnostic { path: String::new(), message: format!("schema: {e}") }],
    }
}

fn exponent_bounds(spec: &KernelSpec) -> Option<(f64, f64)> {
    match spec {
        KernelSpec::StableLike { alpha, .. } => Some(match *alpha {
            AlphaSpec::Constant { value } => (value, value),
            AlphaSpec::Tanh { base, amplitude, .. } | AlphaSpec::Sine { base, amplitude, .. } => {
                (base - amplitude.abs(), base + amplitude.abs())
            }
        }),
        KernelSpec::ConstantAlpha { alpha, .. } => Some((*alpha, *alpha)),
        _ => None,
    }
}

fn check_eps(d: &mut Diagnostics, path: &str, eps: &Option<Vec<f64>>) {
    if let Some(eps) = eps {
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) || eps.windows(2).any(|w| w[1] >= w[0])
        {
            d.push(path, "eps_sequence must be nonempty, positive and strictly decreasing");
        }
    }
}

fn check_box(d: &mut Diagnostics, path: &str, b: &BoxSpec, dim: usize) {
    match b.region() {
        Ok(r) if r.dim != dim => d.push(path, format!("box is {}-dimensional, kernel is {dim}-dimensional", r.dim)),
        Ok(_) => {}
        Err(e) => d.push(path, e.to_string()),
    }
}

fn check_points(d: &mut Diagnostics, path: &str, p: &PointSet, dim: usize) {
    if let Err(e) = p.points() {
        d.push(path, e.to_string());
        return;
    }
    let bad = match p {
        PointSet::List(ps) => ps.iter().any(|q| q.len() != dim),
        PointSet::Lattice { .. } => p.dim() != Some(dim),
    };
    if bad {
        d.push(path, format!("points must have {dim} coordinate(s)"));
    }
}

/// All diagnostics for a parsed config, in config order.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut d = Diagnostics(Vec::new());
    let dim = cfg.kernel.dim();

    let mut kernel_ok = true;
    if let Some((a1, a2)) = exponent_bounds(&cfg.kernel) {
        if !(a1 > 0.0 && a2 < 2.0) {
            kernel_ok = false;
            d.push(
                "kernel.alpha",
                format!("exponent range [{a1}, {a2}] leaves the domain (0, 2) on which the weight w(alpha) is defined"),
            );
        }
    }
    if kernel_ok {
        if let Err(e) = cfg.kernel.build() {
            d.push("kernel", e.to_string());
        }
    }
    if let Err(e) = cfg.scheme().validate() {
        d.push("quadrature", e.to_string());
    }
    if cfg.forms.per_cell == 0 {
        d.push("forms.per_cell", "per_cell must be at least 1");
    }
    if cfg.threads == Some(0) {
        d.push("threads", "thread count must be at least 1");
    }
    if let Some(r) = &cfg.region {
        check_box(&mut d, "region", r, dim);
    }

    for (name, f) in &cfg.functions {
        let path = format!("functions.{name}");
        if f.dim() != dim {
            d.push(&path, format!("function is {}-dimensional, kernel is {dim}-dimensional", f.dim()));
        } else if let Err(e) = f.build() {
            d.push(&path, e.to_string());
        }
    }

    let c = &cfg.conditions;
    if !c.ids.is_empty() && cfg.region.is_none() {
        d.push("region", "conditions are sampled over a region; none is given");
    }
    if let Some(g) = c.gamma {
        if !(g > 0.0 && g <= 1.0) {
            d.push("conditions.gamma", format!("gamma must lie in (0, 1], got {g}"));
        }
    }
    for (i, b) in c.compacts.iter().enumerate() {
        check_box(&mut d, &format!("conditions.compacts[{i}]"), b, dim);
    }
    if c.sampling.cells == 0 {
        d.push("conditions.sampling.cells", "cells must be at least 1");
    }
    for (i, p) in c.sampling.probes.iter().enumerate() {
        if p.iter().any(|v| !v.is_finite()) {
            d.push(format!("conditions.sampling.probes[{i}]"), "probe coordinates must be finite");
        }
    }
    check_eps(&mut d, "conditions.eps_sequence", &c.eps_sequence);

    for (i, req) in cfg.requests.iter().enumerate() {
        let base = format!("requests[{i}]");
        for (field, name) in req.function_refs() {
            if !cfg.functions.contains_key(name) {
                d.push(format!("{base}.{field}"), format!("undefined function \"{name}\""));
            }
        }
        match req {
            Request::Apply { points, eps_sequence, .. } => {
                check_points(&mut d, &format!("{base}.points"), points, dim);
                check_eps(&mut d, &format!("{base}.eps_sequence"), eps_sequence);
            }
            Request::Form { form, v, n, h_sup, sector_c, .. } => {
                let needs_v = !matches!(form, FormChoice::Markov);
                if needs_v && v.is_none() {
                    d.push(format!("{base}.v"), "this form needs a second function v");
                }
                if *form == FormChoice::EtaN && (n.is_empty() || n.contains(&0)) {
                    d.push(format!("{base}.n"), "eta_n needs truncation levels n >= 1");
                }
                if *form == FormChoice::Bounds && h_sup.is_none() && cfg.region.is_none() {
                    d.push(format!("{base}.h_sup"), "give h_sup or a region to estimate it on");
                }
                if let Some(h) = h_sup {
                    if !(*h >= 0.0) {
                        d.push(format!("{base}.h_sup"), "h_sup must be nonnegative");
                    }
                }
                if let Some(c) = sector_c {
                    if !(*c > 0.0) {
                        d.push(format!("{base}.sector_c"), "sector_c must be positive");
                    }
                }
            }
            Request::Kappa { points, eps_sequence } => {
                check_points(&mut d, &format!("{base}.points"), points, dim);
                check_eps(&mut d, &format!("{base}.eps_sequence"), eps_sequence);
            }
            Request::Symbol { alpha, xi, x } => {
                if xi.len() != dim {
                    d.push(format!("{base}.xi"), format!("xi must have {dim} coordinate(s)"));
                }
                if let Some(x) = x {
                    if x.len() != dim {
                        d.push(format!("{base}.x"), format!("x must have {dim} coordinate(s)"));
                    }
                }
                match alpha {
                    Some(a) if !(*a > 0.0 && *a < 2.0) => {
                        d.push(format!("{base}.alpha"), format!("alpha = {a} leaves the domain (0, 2)"))
                    }
                    None if exponent_bounds(&cfg.kernel).is_none() => {
                        d.push(format!("{base}.alpha"), "the kernel has no index function; give alpha")
                    }
                    _ => {}
                }
            }
        }
    }
    d.0
}
