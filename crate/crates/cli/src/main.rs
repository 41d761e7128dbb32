use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use jumpform::ConditionId;
use jumpform_cli::config::{FormChoice, OperatorChoice};
use jumpform_cli::{run, validate_file, CliError, Op, PointSet, Request, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "jumpform", version, about = "Checks, forms and operators for non-symmetric jump kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; overrides the config.
    #[arg(long, global = true, env = "JUMPFORM_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Condition checks; `--conditions` replaces the config's list.
    Check {
        #[arg(long, value_delimiter = ',')]
        conditions: Vec<ConditionId>,
    },
    /// A bilinear form; with `--u` a single request replaces the config's.
    Form {
        #[arg(long, value_enum, default_value_t = FormArg::Eta)]
        form: FormArg,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        v: Option<String>,
        /// Truncation levels for eta_n.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        h_sup: Option<f64>,
        #[arg(long)]
        sector_c: Option<f64>,
    },
    /// An operator at points; with `--op` a single request replaces the config's.
    Apply {
        #[arg(long)]
        op: Option<OpArg>,
        #[arg(long)]
        function: Option<String>,
        /// `grid` (the region lattice) or points like `0.1;0.5` / `0,1;1,0`.
        #[arg(long)]
        points: Option<String>,
    },
    /// The killing term at points.
    Kappa {
        #[arg(long)]
        points: Option<String>,
    },
    /// Symbol check of the stable-like generator on a plane wave.
    Symbol {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        xi: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Schema and cross-reference diagnostics, no numerics.
    Validate,
    /// Everything in the config.
    Run,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Energy,
    Eta,
    EtaN,
    InnerProduct,
    Markov,
    Bounds,
}

#[derive(Clone, Copy)]
struct OpArg(OperatorChoice);

impl std::str::FromStr for OpArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let op = match s.to_ascii_uppercase().as_str() {
            "L" => OperatorChoice::L,
            "LAMBDA" => OperatorChoice::Lambda,
            "LTILDE" => OperatorChoice::Ltilde,
            "B" => OperatorChoice::B,
            "LSTAR" => OperatorChoice::Lstar,
            "TRIPLET" => OperatorChoice::Triplet,
            _ => return Err(format!("unknown operator '{s}' (expected L, LAMBDA, LTILDE, LSTAR, B or TRIPLET)")),
        };
        Ok(OpArg(op))
    }
}

fn form_choice(f: FormArg) -> FormChoice {
    match f {
        FormArg::Energy => FormChoice::Energy,
        FormArg::Eta => FormChoice::Eta,
        FormArg::EtaN => FormChoice::EtaN,
        FormArg::InnerProduct => FormChoice::InnerProduct,
        FormArg::Markov => FormChoice::Markov,
        FormArg::Bounds => FormChoice::Bounds,
    }
}

fn parse_points(s: &str, cfg: &RunConfig) -> Result<PointSet, CliError> {
    if s.eq_ignore_ascii_case("grid") {
        let r = cfg.region.as_ref().ok_or_else(|| CliError::Config("--points grid needs a region in the config".into()))?;
        let cells = vec![cfg.conditions.sampling.cells; r.lower.len()];
        return Ok(PointSet::Lattice { lower: r.lower.clone(), upper: r.upper.clone(), cells });
    }
    let pts = s
        .split(';')
        .map(|p| {
            p.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| CliError::Config(format!("--points '{p}': {e}"))))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PointSet::List(pts))
}

fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let path = path.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RunConfig::from_json(&text)
}

/// Replaces the config's work of one kind with the request built from flags.
fn only(cfg: &mut RunConfig, op: Op, req: Option<Request>) {
    if let Some(req) = req {
        cfg.requests.retain(|r| r.op() != op);
        cfg.requests.push(req);
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn csv_bytes(report: &RunReport) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(buf)
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    let g = &cli.global;
    if let Command::Validate = cli.command {
        let path = g.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
        let diags = validate_file(path)?;
        let text = serde_json::to_string_pretty(&diags).map_err(|e| CliError::Output(e.to_string()))?;
        emit(g.out.as_deref(), format!("{text}\n").as_bytes())?;
        return Ok(if diags.is_empty() { 0 } else { 4 });
    }

    let mut cfg = load(g.config.as_deref())?;
    if g.tol_abs.is_some() {
        cfg.tolerances.tol_abs = g.tol_abs;
    }
    if g.tol_rel.is_some() {
        cfg.tolerances.tol_rel = g.tol_rel;
    }
    let op = match &cli.command {
        Command::Check { conditions } => {
            if !conditions.is_empty() {
                cfg.conditions.ids = conditions.clone();
            }
            Some(Op::Check)
        }
        Command::Form { form, u, v, n, h_sup, sector_c } => {
            let req = u.clone().map(|u| Request::Form {
                form: form_choice(*form),
                u,
                v: v.clone(),
                n: n.clone(),
                h_sup: *h_sup,
                sector_c: *sector_c,
                tolerance: None,
            });
            only(&mut cfg, Op::Form, req);
            Some(Op::Form)
        }
        Command::Apply { op, function, points } => {
            if let Some(OpArg(operator)) = op {
                let function = function.clone().ok_or_else(|| CliError::Config("--op needs --function".into()))?;
                let points = parse_points(points.as_deref().unwrap_or("grid"), &cfg)?;
                only(&mut cfg, Op::Apply, Some(Request::Apply { operator: *operator, function, points, eps_sequence: None }));
            }
            Some(Op::Apply)
        }
        Command::Kappa { points } => {
            if let Some(p) = points {
                let points = parse_points(p, &cfg)?;
                only(&mut cfg, Op::Kappa, Some(Request::Kappa { points, eps_sequence: None }));
            }
            Some(Op::Kappa)
        }
        Command::Symbol { alpha, xi, x } => {
            if !xi.is_empty() {
                let x = if x.is_empty() { None } else { Some(x.clone()) };
                only(&mut cfg, Op::Symbol, Some(Request::Symbol { alpha: *alpha, xi: xi.clone(), x }));
            }
            Some(Op::Symbol)
        }
        Command::Run => None,
        Command::Validate => unreachable!(),
    };

    let threads = g
        .threads
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if threads == 0 {
        return Err(CliError::Config("thread count must be at least 1".into()));
    }
    let report = run(&cfg, op, threads)?;

    if let Some(p) = &cfg.output.json {
        std::fs::write(p, report.to_json()).map_err(|e| CliError::io(p, e))?;
    }
    if let Some(p) = &cfg.output.csv {
        std::fs::write(p, csv_bytes(&report)?).map_err(|e| CliError::io(p, e))?;
    }

    let bytes = match (g.format, op) {
        (Format::Csv, _) => csv_bytes(&report)?,
        (Format::Json, None) => format!("{}\n", report.to_json()).into_bytes(),
        // Subcommands print the bare results: one payload, or an array.
        (Format::Json, Some(kind)) => {
            let items: Vec<Value> = report
                .results
                .iter()
                .map(|r| r.payload.clone().unwrap_or_else(|| serde_json::json!({ "source": r.source, "error": r.error })))
                .collect();
            let doc = if items.len() == 1 && kind != Op::Check { items[0].clone() } else { Value::Array(items) };
            let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
            format!("{text}\n").into_bytes()
        }
    };
    emit(g.out.as_deref(), &bytes)?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("jumpform: {e}");
            if let CliError::Invalid(diags) = &e {
                for d in diags {
                    eprintln!("  {d}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
