//! Executes a validated config: conditions first, then requests, each in
//! config order.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use jumpform::conditions::{check_conditions, check_sector_ratio, ConditionSetup};
use jumpform::forms::{bound_checks, energy_e, eta, eta_n_sequence, inner_product, markov_check, FORM_TOL};
use jumpform::geometry::point_from_slice;
use jumpform::operators::{
    apply_b, apply_l, apply_lambda, apply_lstar, apply_ltilde, apply_triplet, killing_term, symbol_check,
};
use jumpform::quadrature::default_eps_sequence;
use jumpform::{split, AlphaFunction, ConditionId, GridFunction, JumpKernel, SplitKernel, Verdict};

use crate::config::{FormChoice, Op, OperatorChoice, Request, RunConfig};
use crate::error::CliError;
use crate::report::{RequestResult, RunReport, Status};
use crate::validate::validate;

/// Relative symbol residual below which a symbol request passes.
pub const SYMBOL_TOL: f64 = 1e-3;

/// SHA-256 of the config with the thread count and output paths cleared.
pub fn config_digest(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.threads = None;
    c.output = Default::default();
    let text = serde_json::to_string(&c).expect("config serializes");
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Runs everything in `cfg` (or only the work of kind `only`) on a pool of
/// `threads` workers.
pub fn run(cfg: &RunConfig, only: Option<Op>, threads: usize) -> Result<RunReport, CliError> {
    let diags = validate(cfg);
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let results = pool.install(|| execute(cfg, only))?;
    Ok(RunReport::new(config_digest(cfg), results, start.elapsed().as_secs_f64()))
}

struct Context<'a> {
    cfg: &'a RunConfig,
    kernel: JumpKernel,
    split: Result<SplitKernel, String>,
}

fn execute(cfg: &RunConfig, only: Option<Op>) -> Result<Vec<RequestResult>, CliError> {
    let kernel = cfg.kernel.build()?;
    let split = split(&kernel).map_err(|e| e.to_string());
    let ctx = Context { cfg, kernel, split };

    let mut out = Vec::new();
    if only.is_none() || only == Some(Op::Check) {
        out.extend(conditions(&ctx)?);
    }
    let selected: Vec<(usize, &Request)> =
        cfg.requests.iter().enumerate().filter(|(_, r)| only.is_none() || only == Some(r.op())).collect();
    let done: Vec<RequestResult> = selected.par_iter().map(|(i, r)| request(&ctx, *i, r)).collect();
    out.extend(done);
    Ok(out)
}

fn condition_setup(cfg: &RunConfig) -> Result<ConditionSetup, CliError> {
    let c = &cfg.conditions;
    let region = cfg.region.as_ref().map(|b| b.region()).transpose()?;
    Ok(ConditionSetup {
        region,
        compacts: c.compacts.iter().map(|b| b.region()).collect::<Result<_, _>>()?,
        sampling: c.sampling.clone(),
        gamma: c.gamma.unwrap_or(1.0),
        scheme: cfg.scheme(),
        eps_sequence: c.eps_sequence.clone().unwrap_or_else(default_eps_sequence),
    })
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Inconclusive => Status::Inconclusive,
    }
}

fn conditions(ctx: &Context) -> Result<Vec<RequestResult>, CliError> {
    let ids = &ctx.cfg.conditions.ids;
    if ids.is_empty() {
        return Ok(Vec::new());
    }
    let setup = condition_setup(ctx.cfg)?;
    let source = |i: usize| format!("conditions.ids[{i}]");
    let sk = match &ctx.split {
        Ok(sk) => sk,
        Err(e) => {
            return Ok(ids.iter().enumerate().map(|(i, id)| RequestResult::failed(Op::Check, source(i), id.to_string(), e)).collect())
        }
    };
    let one = |i: usize, id: ConditionId, r: jumpform::Result<jumpform::ConditionReport>| match r {
        Ok(rep) => RequestResult::ok(Op::Check, source(i), id.to_string(), verdict_status(rep.verdict), &rep),
        Err(e) => RequestResult::failed(Op::Check, source(i), id.to_string(), e.to_string()),
    };
    Ok(match check_conditions(sk, ids, &setup) {
        Ok(reports) => ids.iter().zip(reports).enumerate().map(|(i, (id, r))| one(i, *id, Ok(r))).collect(),
        // Localize the failure: one error entry per condition that cannot be computed.
        Err(_) => ids
            .iter()
            .enumerate()
            .map(|(i, id)| one(i, *id, check_conditions(sk, &[*id], &setup).map(|mut v| v.remove(0))))
            .collect(),
    })
}

fn function(ctx: &Context, name: &str) -> Result<GridFunction, String> {
    let spec = ctx.cfg.functions.get(name).ok_or_else(|| format!("undefined function \"{name}\""))?;
    Ok(spec.build().map_err(|e| e.to_string())?.with_label(name))
}

fn label(r: &Request) -> String {
    match r {
        Request::Apply { operator, function, .. } => format!("apply {operator:?} {function}").to_lowercase(),
        Request::Form { form, u, v, .. } => match v {
            Some(v) => format!("{form:?}({u}, {v})").to_lowercase(),
            None => format!("{form:?}({u})").to_lowercase(),
        },
        Request::Kappa { .. } => "kappa".into(),
        Request::Symbol { xi, .. } => format!("symbol xi={xi:?}"),
    }
}

fn request(ctx: &Context, i: usize, r: &Request) -> RequestResult {
    let source = format!("requests[{i}]");
    let label = label(r);
    match evaluate(ctx, r) {
        Ok((status, payload)) => RequestResult::ok(r.op(), source, label, status, &payload),
        Err(e) => RequestResult::failed(r.op(), source, label, e),
    }
}

fn sk<'a>(ctx: &'a Context) -> Result<&'a SplitKernel, String> {
    ctx.split.as_ref().map_err(Clone::clone)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, String> {
    serde_json::to_value(v).map_err(|e| e.to_string())
}

fn evaluate(ctx: &Context, r: &Request) -> Result<(Status, serde_json::Value), String> {
    let scheme = ctx.cfg.scheme();
    let q = ctx.cfg.forms_quadrature();
    let e = |e: jumpform::Error| e.to_string();
    match r {
        Request::Apply { operator, function: name, points, eps_sequence } => {
            let u = function(ctx, name)?;
            let pts = points.points().map_err(|e| e.to_string())?;
            let eps = eps_sequence.clone().unwrap_or_else(default_eps_sequence);
            let j = &ctx.kernel;
            let eval = match operator {
                OperatorChoice::L => apply_l(j, &u, &pts, &scheme).map_err(e)?,
                OperatorChoice::Lambda => apply_lambda(j, &u, &pts, &scheme).map_err(e)?,
                OperatorChoice::Ltilde => apply_ltilde(sk(ctx)?, &u, &pts, &scheme).map_err(e)?,
                OperatorChoice::B => apply_b(sk(ctx)?, &u, &pts, &eps, &scheme).map_err(e)?,
                OperatorChoice::Lstar => apply_lstar(j, &u, &pts, &eps, &scheme).map_err(e)?,
                OperatorChoice::Triplet => {
                    let t = apply_triplet(j, &u, &pts, &scheme).map_err(e)?;
                    let ok = t.l.all_ok() && t.lambda.all_ok() && t.ltilde.all_ok();
                    let mut v = to_value(&t)?;
                    v["algebra_residual"] = json!(t.algebra_residual());
                    return Ok((if ok { Status::Pass } else { Status::Inconclusive }, v));
                }
            };
            let pv_ok = eval.diagnostics.iter().all(|d| d.pv_converged != Some(false));
            let status = if eval.all_ok() && pv_ok { Status::Pass } else { Status::Inconclusive };
            Ok((status, to_value(&eval)?))
        }
        Request::Form { form, u, v, n, h_sup, sector_c, tolerance } => {
            let fu = function(ctx, u)?;
            let fv = v.as_deref().map(|v| function(ctx, v)).transpose()?;
            let need_v = || fv.as_ref().ok_or_else(|| "this form needs a second function v".to_string());
            let tol = tolerance.unwrap_or(FORM_TOL);
            match form {
                FormChoice::Energy => Ok((Status::Pass, json!(energy_e(&fu, need_v()?, sk(ctx)?, &q).map_err(e)?))),
                FormChoice::Eta => Ok((Status::Pass, to_value(&eta(&fu, need_v()?, sk(ctx)?, &q).map_err(e)?)?)),
                FormChoice::InnerProduct => {
                    Ok((Status::Pass, json!(inner_product(&fu, need_v()?, q.per_cell).map_err(e)?)))
                }
                FormChoice::EtaN => {
                    let vals = eta_n_sequence(&fu, need_v()?, &ctx.kernel, n, &q).map_err(e)?;
                    let seq: Vec<_> = n.iter().zip(&vals).map(|(n, v)| json!({ "n": n, "value": v })).collect();
                    Ok((Status::Pass, json!({ "sequence": seq })))
                }
                FormChoice::Markov => {
                    let rep = markov_check(&fu, sk(ctx)?, tol, &q).map_err(e)?;
                    Ok((if rep.pass { Status::Pass } else { Status::Fail }, to_value(&rep)?))
                }
                FormChoice::Bounds => {
                    let sk = sk(ctx)?;
                    let h = match h_sup {
                        Some(h) => *h,
                        None => {
                            let region = ctx.cfg.region.as_ref().ok_or("give h_sup or a region")?;
                            let region = region.region().map_err(|e| e.to_string())?;
                            let rep = check_sector_ratio(sk, &region, &ctx.cfg.conditions.sampling, &scheme).map_err(e)?;
                            rep.estimate
                        }
                    };
                    let c = sector_c.unwrap_or(1.0);
                    let rep = bound_checks(&fu, need_v()?, sk, h, c, tol, &q).map_err(e)?;
                    // Without a configured c the sector check is reported but not judged.
                    let sector_ok = sector_c.is_none() || rep.sector_pass;
                    let pass = rep.lower_pass && rep.cauchy_schwarz_pass && sector_ok;
                    let mut v = to_value(&rep)?;
                    v["h_sup"] = json!(h);
                    v["sector_judged"] = json!(sector_c.is_some());
                    Ok((if pass { Status::Pass } else { Status::Fail }, v))
                }
            }
        }
        Request::Kappa { points, eps_sequence } => {
            let pts = points.points().map_err(|e| e.to_string())?;
            let eps = eps_sequence.clone().unwrap_or_else(default_eps_sequence);
            let kt = killing_term(&ctx.kernel, &pts, &eps, &scheme).map_err(e)?;
            let status = if kt.all_converged() { Status::Pass } else { Status::Inconclusive };
            Ok((status, to_value(&kt)?))
        }
        Request::Symbol { alpha, xi, x } => {
            let af = match alpha {
                Some(a) => AlphaFunction::constant(*a).map_err(e)?,
                None => ctx.cfg.kernel.alpha().map_err(e)?.ok_or("the kernel has no index function; give alpha")?,
            };
            let dim = ctx.cfg.kernel.dim();
            let xi = point_from_slice(xi).map_err(e)?;
            let x = match x {
                Some(x) => point_from_slice(x).map_err(e)?,
                None => [0.0; 2],
            };
            let rep = symbol_check(&af, dim, &xi, &x, &scheme).map_err(e)?;
            let status = if rep.relative <= SYMBOL_TOL { Status::Pass } else { Status::Fail };
            Ok((status, to_value(&rep)?))
        }
    }
}
