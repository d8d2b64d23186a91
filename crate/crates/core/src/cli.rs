//! Command-line front end: `check`, `subsolution`, `solve`, `verify`, `sweep`.
//!
//! Exit codes: 0 on success, 1 on numeric failure or a failed check,
//! 2 on malformed input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::discretization::DiscreteField;
use crate::error::{Error, Result};
use crate::fixed_point::{assess, iterate_gamma, ProblemInstance, SolveReport};
use crate::frozen::build_subsolution;
use crate::reaction::{Convection, Singular};
use crate::verifier::verify_solution;

#[derive(Debug, Parser)]
#[command(
    name = "robin-convection",
    version,
    about = "Singular Robin problems with convection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of mesh elements, overriding the config.
    #[arg(long, global = true)]
    pub mesh: Option<usize>,
    /// Iterate even when the existence conditions fail.
    #[arg(long = "override", global = true)]
    pub allow_override: bool,
    /// Starts for the multi-start checks.
    #[arg(long, global = true)]
    pub starts: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print hypothesis report and condition verdicts.
    Check,
    /// Build the positive subsolution and write it as CSV.
    Subsolution,
    /// Run the fixed-point iteration.
    Solve,
    /// Run the verifier suite on a solution CSV.
    Verify {
        /// Solution CSV; defaults to `<out>/solution.csv`.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Solve over a parameter grid.
    Sweep,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Parameter grid; absent axes are held at the instance value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c5: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: ProblemInstance,
    #[serde(default)]
    pub options: RunOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    /// Parses JSON, naming the offending path on failure.
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            format!("config error at `{path}`: {}", e.into_inner())
        })
    }
}

/// Exit status carrying a message for stderr.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn numeric(err: Error) -> Failure {
    let code = if matches!(err, Error::InvalidArgument(_)) {
        2
    } else {
        1
    };
    Failure {
        code,
        message: err.to_string(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

struct Context {
    config: RunConfig,
    out: PathBuf,
    seed: u64,
    starts: usize,
}

fn load(cli: &Cli) -> std::result::Result<Context, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| usage("--config PATH is required"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut config = RunConfig::from_json(&text).map_err(usage)?;
    if let Some(n) = cli.mesh.or(config.options.mesh) {
        config.instance.n_elements = n;
    }
    if cli.allow_override {
        config.instance.allow_override = true;
    }
    config
        .instance
        .validate()
        .map_err(|e| usage(e.to_string()))?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.options.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| Failure {
        code: 1,
        message: format!("cannot create {}: {e}", out.display()),
    })?;
    let seed = cli.seed.or(config.options.seed).unwrap_or(0);
    let starts = cli.starts.or(config.options.starts).unwrap_or(1);
    Ok(Context {
        config,
        out,
        seed,
        starts,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> std::result::Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::result::Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_field(path: &Path, field: &DiscreteField) -> std::result::Result<(), Failure> {
    let mut buf = Vec::new();
    field.write_csv(&mut buf).map_err(numeric)?;
    write_file(path, &buf)
}

fn dispatch(cli: &Cli) -> std::result::Result<i32, Failure> {
    let ctx = load(cli)?;
    match &cli.command {
        Command::Check => check(&ctx),
        Command::Subsolution => subsolution(&ctx),
        Command::Solve => solve(&ctx),
        Command::Verify { solution } => verify(&ctx, solution.as_deref()),
        Command::Sweep => sweep(&ctx),
    }
}

fn check(ctx: &Context) -> std::result::Result<i32, Failure> {
    let a = assess(&ctx.config.instance).map_err(numeric)?;
    let text = serde_json::to_string_pretty(&a).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    println!("{text}");
    write_json(&ctx.out.join("check.json"), &a)?;
    Ok(if a.hypotheses.holds() { 0 } else { 1 })
}

#[derive(Serialize)]
struct SubsolutionSummary {
    delta_used: f64,
    min: f64,
    max: f64,
}

fn subsolution(ctx: &Context) -> std::result::Result<i32, Failure> {
    let inst = &ctx.config.instance;
    let mesh = inst.mesh().map_err(numeric)?;
    let (ul, delta_used) = build_subsolution(
        &inst.operator,
        &inst.reaction,
        inst.beta,
        mesh,
        inst.mode,
        inst.delta0,
        inst.preconditioner,
    )
    .map_err(numeric)?;
    write_field(&ctx.out.join("u_lower.csv"), &ul)?;
    let summary = SubsolutionSummary {
        delta_used,
        min: ul.min(),
        max: ul.max(),
    };
    println!(
        "{}",
        serde_json::to_string(&summary).map_err(|e| Failure {
            code: 1,
            message: e.to_string()
        })?
    );
    Ok(0)
}

fn write_report(out: &Path, report: &SolveReport) -> std::result::Result<(), Failure> {
    write_field(&out.join("solution.csv"), &report.solution)?;
    write_json(&out.join("report.json"), report)?;
    let mut buf = Vec::new();
    report.write_history_csv(&mut buf).map_err(numeric)?;
    write_file(&out.join("history.csv"), &buf)
}

fn solve(ctx: &Context) -> std::result::Result<i32, Failure> {
    match iterate_gamma(&ctx.config.instance) {
        Ok(report) => {
            write_report(&ctx.out, &report)?;
            println!("converged in {} outer iterations", report.outer_iterations);
            Ok(0)
        }
        Err(Error::OuterNonConvergence(report)) => {
            write_report(&ctx.out, &report)?;
            Err(Failure {
                code: 1,
                message: format!(
                    "no convergence in {} outer iterations",
                    report.outer_iterations
                ),
            })
        }
        Err(e) => Err(numeric(e)),
    }
}

fn verify(ctx: &Context, solution: Option<&Path>) -> std::result::Result<i32, Failure> {
    let path = solution
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.out.join("solution.csv"));
    let file =
        fs::File::open(&path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    let u = DiscreteField::read_csv(file).map_err(|e| usage(e.to_string()))?;
    let mut inst = ctx.config.instance.clone();
    inst.n_elements = u.mesh().n_elements();
    let report = verify_solution(&inst, &u, ctx.starts, ctx.seed).map_err(numeric)?;
    write_json(&ctx.out.join("verification.json"), &report)?;
    for c in &report.checks {
        let status = if c.passed {
            "pass"
        } else if c.asserted {
            "FAIL"
        } else {
            "info"
        };
        println!(
            "{status:4} {:28} observed {:.3e} tolerance {:.3e}",
            c.name, c.observed, c.tolerance
        );
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

#[derive(Serialize)]
struct SweepRow {
    params: Vec<f64>,
    converged: &'static str,
    outer_iters: usize,
    residual: f64,
    min_u: f64,
    w1p: f64,
}

fn sorted(v: &Option<Vec<f64>>) -> Option<Vec<f64>> {
    v.as_ref().map(|v| {
        let mut v = v.clone();
        v.sort_by(f64::total_cmp);
        v
    })
}

fn apply(inst: &mut ProblemInstance, name: &str, value: f64) -> std::result::Result<(), Failure> {
    match (name, &mut inst.reaction.g, &mut inst.reaction.f) {
        ("lambda", Singular::PowerSingular { lambda, .. }, _) => *lambda = value,
        ("gamma", Singular::PowerSingular { gamma, .. }, _) => *gamma = value,
        ("c5", _, Convection::Affine { c, .. } | Convection::BoundedGradient { c, .. }) => {
            *c = value
        }
        ("beta", _, _) => inst.beta = value,
        _ => {
            return Err(usage(format!(
                "sweep axis `{name}` does not apply to this instance"
            )))
        }
    }
    Ok(())
}

fn sweep(ctx: &Context) -> std::result::Result<i32, Failure> {
    let spec = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| usage("sweep needs a `sweep` section in the config"))?;
    let axes: Vec<(&str, Vec<f64>)> = [
        ("lambda", sorted(&spec.lambda)),
        ("gamma", sorted(&spec.gamma)),
        ("c5", sorted(&spec.c5)),
        ("beta", sorted(&spec.beta)),
    ]
    .into_iter()
    .filter_map(|(n, v)| v.map(|v| (n, v)))
    .collect();
    if axes.is_empty() || axes.iter().any(|(_, v)| v.is_empty()) {
        return Err(usage("sweep needs at least one non-empty axis"));
    }
    let mut rows = Vec::new();
    let mut all_ok = true;
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    for flat in 0..total {
        let mut inst = ctx.config.instance.clone();
        // Mixed-radix decode, last axis fastest.
        let mut rest = flat;
        let mut params = vec![0.0; axes.len()];
        for (k, (_, v)) in axes.iter().enumerate().rev() {
            params[k] = v[rest % v.len()];
            rest /= v.len();
        }
        for ((name, _), &value) in axes.iter().zip(&params) {
            apply(&mut inst, name, value)?;
        }
        let row = match inst.validate().and_then(|_| iterate_gamma(&inst)) {
            Ok(r) => SweepRow {
                params,
                converged: "true",
                outer_iters: r.outer_iterations,
                residual: r.history.last().map_or(f64::NAN, |h| h.residual),
                min_u: r.solution.min(),
                w1p: r.history.last().map_or(f64::NAN, |h| h.w1p_norm),
            },
            Err(Error::RefusedInstance(_)) => SweepRow {
                params,
                converged: "refused",
                outer_iters: 0,
                residual: f64::NAN,
                min_u: f64::NAN,
                w1p: f64::NAN,
            },
            Err(Error::OuterNonConvergence(r)) => {
                all_ok = false;
                SweepRow {
                    params,
                    converged: "false",
                    outer_iters: r.outer_iterations,
                    residual: r.history.last().map_or(f64::NAN, |h| h.residual),
                    min_u: r.solution.min(),
                    w1p: r.history.last().map_or(f64::NAN, |h| h.w1p_norm),
                }
            }
            Err(e) => {
                all_ok = false;
                eprintln!("sweep point {params:?}: {e}");
                SweepRow {
                    params,
                    converged: "false",
                    outer_iters: 0,
                    residual: f64::NAN,
                    min_u: f64::NAN,
                    w1p: f64::NAN,
                }
            }
        };
        rows.push(row);
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure {
        code: 1,
        message: e.to_string(),
    };
    let mut header: Vec<String> = axes.iter().map(|(n, _)| n.to_string()).collect();
    header.extend(["converged", "outer_iters", "residual", "min_u", "w1p"].map(String::from));
    wtr.write_record(&header).map_err(io)?;
    for r in &rows {
        let mut rec: Vec<String> = r.params.iter().map(f64::to_string).collect();
        rec.push(r.converged.to_string());
        rec.push(r.outer_iters.to_string());
        rec.extend([r.residual, r.min_u, r.w1p].iter().map(f64::to_string));
        wtr.write_record(&rec).map_err(io)?;
    }
    let buf = wtr.into_inner().map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    write_file(&ctx.out.join("sweep.csv"), &buf)?;
    println!("{} sweep points written", rows.len());
    Ok(if all_ok { 0 } else { 1 })
}

/// Parses a config file without running anything.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text).map_err(Error::InvalidArgument)
}
