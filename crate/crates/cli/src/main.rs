use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_core::catalog::MetricDoc;
use finsler_core::list_builtins;
use finsler_forms::{parse_scenario, run_scenario, Format, MetricRef, OutputSpec, Report, RunError, Scenario, TaskDoc, TaskKind};
use serde_json::{json, Map, Value};

/// Numerical Finsler geometry: tensors, curvature, horizontal Laplacians and
/// sphere-bundle integrals, driven by scenario files or one-shot subcommands.
///
/// Exit status: 0 when every task passes, 1 when a task fails its tolerance,
/// 2 on configuration errors, 3 when a computation errors, 4 on i/o errors.
/// FINSLER_THREADS caps the number of worker threads.
#[derive(Parser)]
#[command(name = "finsler-forms", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Built-in metric id, or a path to a JSON metric document.
    #[arg(long, default_value = "euclidean")]
    metric: String,
    /// `default` or counts such as `32x32:64`.
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckName {
    RicciIdentity,
    Adjointness,
    Divergence,
    Bochner,
    Harmonic,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandName {
    Volume,
    Norm,
    Inner,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print tensors of the Cartan tower at a point.
    Tensor {
        /// `x¹,…,xⁿ` or `x¹,…,xⁿ,y¹,…,yⁿ`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
        /// Any of g, ginv, C, T, ell, G, N, Gamma, Cv (default: all).
        #[arg(long, value_delimiter = ',')]
        name: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Print curvature tensors at a point.
    Curvature {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
        /// Any of Rhh, P, Q, Rflag, Ricci (default: all).
        #[arg(long, value_delimiter = ',')]
        name: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the horizontal Laplacian of a built-in form at seeded points.
    Laplacian {
        #[arg(long)]
        form: String,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate over the sphere bundle.
    Integrate {
        #[arg(long, value_enum, default_value = "volume")]
        integrand: IntegrandName,
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        other: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        expected: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run one verification check.
    Check {
        #[arg(value_enum)]
        which: CheckName,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        psi: Option<String>,
        /// Form for divergence and harmonic checks.
        #[arg(long)]
        form: Option<String>,
        /// Vector field for ricci-identity and bochner checks.
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// For `harmonic`: the verdict the form should get.
        #[arg(long)]
        expect: Option<bool>,
        #[command(flatten)]
        common: Common,
    },
    /// List built-in metrics, forms, vector fields and default grids.
    List,
}

fn metric_ref(arg: &str) -> Result<MetricRef, RunError> {
    let path = Path::new(arg);
    if arg.ends_with(".json") || path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let doc: MetricDoc =
            serde_json::from_str(&text).map_err(|e| RunError::Config(format!("metric document {arg}: {e}")))?;
        return Ok(MetricRef::Doc(doc));
    }
    Ok(MetricRef::Builtin(arg.to_string()))
}

/// Object of the given entries, dropping `null`s.
fn params(entries: Vec<(&str, Value)>) -> Value {
    Value::Object(
        entries
            .into_iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| (k.to_string(), v))
            .collect::<Map<_, _>>(),
    )
}

fn single(common: Common, kind: TaskKind, params: Value) -> Result<Scenario, RunError> {
    Ok(Scenario {
        metric: metric_ref(&common.metric)?,
        tasks: vec![TaskDoc {
            kind,
            params,
            tolerance: common.tolerance,
        }],
        grid: Some(common.grid),
        output: Some(OutputSpec {
            path: common.out,
            format: common.format,
        }),
        seed: common.seed,
    })
}

fn names(v: Vec<String>) -> Value {
    if v.is_empty() {
        Value::Null
    } else {
        json!(v)
    }
}

fn scenario(cmd: Cmd) -> Result<Scenario, RunError> {
    match cmd {
        Cmd::Run { scenario, out, format } => {
            let mut sc = parse_scenario(&std::fs::read_to_string(&scenario)?)?;
            if out.is_some() || format.is_some() {
                let o = sc.output.get_or_insert(OutputSpec {
                    path: None,
                    format: Format::Json,
                });
                if out.is_some() {
                    o.path = out;
                }
                if let Some(f) = format {
                    o.format = f;
                }
            }
            Ok(sc)
        }
        Cmd::Tensor { at, name, common } => {
            single(common, TaskKind::Tensor, params(vec![("at", json!(at)), ("names", names(name))]))
        }
        Cmd::Curvature { at, name, common } => {
            single(common, TaskKind::Curvature, params(vec![("at", json!(at)), ("names", names(name))]))
        }
        Cmd::Laplacian { form, points, common } => single(
            common,
            TaskKind::Laplacian,
            params(vec![("form", json!(form)), ("points", json!(points))]),
        ),
        Cmd::Integrate {
            integrand,
            form,
            other,
            expected,
            common,
        } => {
            let integrand = match integrand {
                IntegrandName::Volume => "volume",
                IntegrandName::Norm => "norm",
                IntegrandName::Inner => "inner",
            };
            single(
                common,
                TaskKind::Integrate,
                params(vec![
                    ("integrand", json!(integrand)),
                    ("form", json!(form)),
                    ("other", json!(other)),
                    ("expected", json!(expected)),
                ]),
            )
        }
        Cmd::Check {
            which,
            degree,
            phi,
            psi,
            form,
            field,
            samples,
            expect,
            common,
        } => {
            let (kind, entries) = match which {
                CheckName::Harmonic => {
                    let form = form.ok_or_else(|| RunError::Config("check harmonic needs --form".into()))?;
                    (TaskKind::Harmonic, vec![("form", json!(form)), ("expect", json!(expect))])
                }
                CheckName::RicciIdentity => (
                    TaskKind::Check,
                    vec![
                        ("check", json!("ricci-identity")),
                        ("samples", json!(samples)),
                        ("field", json!(field)),
                    ],
                ),
                CheckName::Adjointness => (
                    TaskKind::Check,
                    vec![
                        ("check", json!("adjointness")),
                        ("degree", json!(degree)),
                        ("phi", json!(phi)),
                        ("psi", json!(psi)),
                    ],
                ),
                CheckName::Divergence => (
                    TaskKind::Check,
                    vec![("check", json!("divergence")), ("form", json!(form))],
                ),
                CheckName::Bochner => (
                    TaskKind::Check,
                    vec![("check", json!("bochner")), ("field", json!(field))],
                ),
            };
            single(common, kind, params(entries))
        }
        Cmd::List => unreachable!("handled before scenario construction"),
    }
}

fn emit(report: &Report, output: Option<&OutputSpec>) -> Result<(), RunError> {
    let format = output.map(|o| o.format).unwrap_or_default();
    let text = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match output.and_then(|o| o.path.as_ref()) {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    for t in &report.tasks {
        eprintln!(
            "task {} {}: {}",
            t.index,
            t.kind,
            if t.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}

fn threads_from_env() -> Result<(), RunError> {
    let Ok(v) = std::env::var("FINSLER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Config(format!("FINSLER_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, RunError> {
    threads_from_env()?;
    if let Cmd::List = cli.cmd {
        println!("{}", serde_json::to_string_pretty(&list_builtins()).expect("catalog serializes"));
        return Ok(true);
    }
    let sc = scenario(cli.cmd)?;
    let report = run_scenario(&sc)?;
    emit(&report, sc.output.as_ref())?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("finsler-forms: {e}");
            ExitCode::from(match e {
                RunError::Config(_) => 2,
                RunError::Task { .. } => 3,
                RunError::Io(_) => 4,
            })
        }
    }
}
