//! Scenario documents, their parameters, and validation into a runnable plan.

use std::fmt;
use std::path::PathBuf;

use finsler_core::catalog::MetricDoc;
use finsler_core::fields::VectorField;
use finsler_core::{builtin_form, builtin_metric, builtin_vector_field, FinslerError, Form64, Grid64, SpherePoint64, Structure64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::RunError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub metric: MetricRef,
    pub tasks: Vec<TaskDoc>,
    /// `"default"` or counts such as `"32x32:64"` (base axes, then fiber axes).
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub seed: u64,
}

/// A built-in id or an inline metric document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricRef {
    Builtin(String),
    Doc(MetricDoc),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Tensor,
    Curvature,
    Laplacian,
    Harmonic,
    Integrate,
    Check,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Tensor => "tensor",
            TaskKind::Curvature => "curvature",
            TaskKind::Laplacian => "laplacian",
            TaskKind::Harmonic => "harmonic",
            TaskKind::Integrate => "integrate",
            TaskKind::Check => "check",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub kind: TaskKind,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

pub const TENSOR_NAMES: &[&str] = &["g", "ginv", "C", "T", "ell", "G", "N", "Gamma", "Cv"];
pub const CURVATURE_NAMES: &[&str] = &["Rhh", "P", "Q", "Rflag", "Ricci"];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointParams {
    /// `n` base coordinates, optionally followed by `n` direction components.
    at: Vec<f64>,
    #[serde(default)]
    names: Option<Vec<String>>,
}

fn default_points() -> usize {
    8
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LaplacianParams {
    form: String,
    #[serde(default = "default_points")]
    points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicParams {
    form: String,
    #[serde(default)]
    expect: Option<bool>,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum IntegrandKind {
    Volume,
    Norm,
    Inner,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegrateParams {
    integrand: IntegrandKind,
    #[serde(default)]
    form: Option<String>,
    #[serde(default)]
    other: Option<String>,
    #[serde(default)]
    expected: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
enum CheckParams {
    RicciIdentity {
        #[serde(default = "default_points")]
        samples: usize,
        #[serde(default)]
        field: Option<String>,
    },
    Adjointness {
        #[serde(default)]
        degree: Option<usize>,
        #[serde(default)]
        phi: Option<String>,
        #[serde(default)]
        psi: Option<String>,
    },
    Divergence {
        #[serde(default)]
        form: Option<String>,
    },
    Bochner {
        #[serde(default)]
        field: Option<String>,
    },
}

pub(crate) enum Integrand {
    Volume,
    Inner(Form64, Form64),
}

pub(crate) enum Job {
    Tensor { point: SpherePoint64, names: Vec<String> },
    Curvature { point: SpherePoint64, names: Vec<String> },
    Laplacian { form: Form64, points: Vec<SpherePoint64> },
    Harmonic { form: Form64, expect: Option<bool> },
    Integrate { integrand: Integrand, expected: Option<f64> },
    RicciIdentity { samples: Vec<(SpherePoint64, String, VectorField<f64>)> },
    Adjointness { phi: Form64, psi: Form64 },
    Divergence { form: Form64 },
    Bochner { label: String, field: VectorField<f64> },
}

pub(crate) struct PlannedTask {
    pub kind: TaskKind,
    pub job: Job,
    pub tolerance: Option<f64>,
    /// Parameters with defaults filled in, echoed into the report.
    pub resolved: Value,
}

pub(crate) struct Plan {
    pub structure: Structure64,
    pub metric_label: String,
    pub grid: Grid64,
    pub grid_spec: String,
    pub tasks: Vec<PlannedTask>,
}

fn config(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn lift(e: FinslerError) -> RunError {
    match e {
        FinslerError::Config(m) => RunError::Config(m),
        other => RunError::Config(other.to_string()),
    }
}

pub fn parse_grid(spec: &str, s: &Structure64) -> Result<Grid64, RunError> {
    if spec == "default" {
        return Grid64::default_for(s).map_err(lift);
    }
    let counts = |part: &str| -> Result<Vec<usize>, RunError> {
        part.split('x')
            .map(|c| c.trim().parse::<usize>().map_err(|_| config(format!("bad grid count '{c}' in '{spec}'"))))
            .collect()
    };
    let (base, fiber) = spec
        .split_once(':')
        .ok_or_else(|| config(format!("grid '{spec}' is not of the form <base>:<fiber>, e.g. 32x32:64")))?;
    Grid64::new(&s.chart, &counts(base)?, &counts(fiber)?).map_err(lift)
}

pub fn load_metric(m: &MetricRef) -> Result<(Structure64, String), RunError> {
    match m {
        MetricRef::Builtin(id) => Ok((builtin_metric(id).map_err(lift)?, id.clone())),
        MetricRef::Doc(doc) => Ok((doc.build().map_err(lift)?, format!("{}-{}d", doc.family, doc.dim))),
    }
}

fn params<P: DeserializeOwned>(index: usize, kind: TaskKind, v: &Value) -> Result<P, RunError> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| config(format!("task {index} ({kind}): {e}")))
}

fn point(s: &Structure64, at: &[f64]) -> Result<SpherePoint64, RunError> {
    let n = s.dim;
    let (x, u) = match at.len() {
        l if l == n => {
            let mut u = vec![0.0; n];
            u[0] = 1.0;
            (at.to_vec(), u)
        }
        l if l == 2 * n => (at[..n].to_vec(), at[n..].to_vec()),
        l => return Err(config(format!("a point needs {n} or {} numbers, got {l}", 2 * n))),
    };
    s.check_point(&x, &u).map_err(lift)?;
    s.normalize_to_indicatrix(&x, &u).map_err(lift)
}

fn names(given: Option<Vec<String>>, known: &[&str]) -> Result<Vec<String>, RunError> {
    let list = given.unwrap_or_else(|| known.iter().map(|s| s.to_string()).collect());
    if list.is_empty() {
        return Err(config("empty name list"));
    }
    for n in &list {
        if !known.contains(&n.as_str()) {
            return Err(config(format!("unknown quantity '{n}'; known: {}", known.join(", "))));
        }
    }
    Ok(list)
}

fn points(s: &Structure64, count: usize, seed: u64) -> Vec<SpherePoint64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| s.random_sphere_point(&mut rng)).collect()
}

/// Check every task against its operation's preconditions, building all
/// forms, fields and sample points. No geometry is evaluated here beyond
/// placing points on the indicatrix.
pub(crate) fn plan(sc: &Scenario) -> Result<Plan, RunError> {
    let (s, metric_label) = load_metric(&sc.metric)?;
    let grid_spec = sc.grid.clone().unwrap_or_else(|| "default".into());
    let grid = parse_grid(&grid_spec, &s)?;
    if sc.tasks.is_empty() {
        return Err(config("scenario has no tasks"));
    }
    let n = s.dim;
    let mut tasks = Vec::with_capacity(sc.tasks.len());
    for (i, doc) in sc.tasks.iter().enumerate() {
        if let Some(t) = doc.tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return Err(config(format!("task {i}: tolerance must be a non-negative number")));
            }
        }
        let seed = sc.seed.wrapping_add(i as u64);
        let form = |id: &str| builtin_form(id, n).map_err(|e| config(format!("task {i}: {}", lift(e))));
        let field = |id: &str| builtin_vector_field(id, n).map_err(|e| config(format!("task {i}: {}", lift(e))));
        let (job, resolved) = match doc.kind {
            TaskKind::Tensor | TaskKind::Curvature => {
                let p: PointParams = params(i, doc.kind, &doc.params)?;
                let known = if doc.kind == TaskKind::Tensor { TENSOR_NAMES } else { CURVATURE_NAMES };
                let names = names(p.names, known)?;
                let point = point(&s, &p.at).map_err(|e| config(format!("task {i}: {e}")))?;
                let resolved = serde_json::json!({"at": p.at, "names": names});
                let job = if doc.kind == TaskKind::Tensor {
                    Job::Tensor { point, names }
                } else {
                    Job::Curvature { point, names }
                };
                (job, resolved)
            }
            TaskKind::Laplacian => {
                let p: LaplacianParams = params(i, doc.kind, &doc.params)?;
                let resolved = serde_json::json!({"form": p.form, "points": p.points});
                (
                    Job::Laplacian {
                        form: form(&p.form)?,
                        points: points(&s, p.points, seed),
                    },
                    resolved,
                )
            }
            TaskKind::Harmonic => {
                let p: HarmonicParams = params(i, doc.kind, &doc.params)?;
                let resolved = serde_json::json!({"form": p.form, "expect": p.expect});
                (
                    Job::Harmonic {
                        form: form(&p.form)?,
                        expect: p.expect,
                    },
                    resolved,
                )
            }
            TaskKind::Integrate => {
                let p: IntegrateParams = params(i, doc.kind, &doc.params)?;
                let need = |f: &Option<String>, what: &str| {
                    f.clone().ok_or_else(|| config(format!("task {i}: integrand needs '{what}'")))
                };
                let (integrand, resolved) = match p.integrand {
                    IntegrandKind::Volume => (Integrand::Volume, serde_json::json!({"integrand": "volume"})),
                    IntegrandKind::Norm => {
                        let a = need(&p.form, "form")?;
                        let f = form(&a)?;
                        (Integrand::Inner(f.clone(), f), serde_json::json!({"integrand": "norm", "form": a}))
                    }
                    IntegrandKind::Inner => {
                        let (a, b) = (need(&p.form, "form")?, need(&p.other, "other")?);
                        let (fa, fb) = (form(&a)?, form(&b)?);
                        if fa.degree() != fb.degree() {
                            return Err(config(format!(
                                "task {i}: inner product of a {}-form with a {}-form",
                                fa.degree(),
                                fb.degree()
                            )));
                        }
                        (
                            Integrand::Inner(fa, fb),
                            serde_json::json!({"integrand": "inner", "form": a, "other": b}),
                        )
                    }
                };
                let mut resolved = resolved;
                resolved["expected"] = serde_json::json!(p.expected);
                (
                    Job::Integrate {
                        integrand,
                        expected: p.expected,
                    },
                    resolved,
                )
            }
            TaskKind::Check => match params::<CheckParams>(i, doc.kind, &doc.params)? {
                CheckParams::RicciIdentity { samples, field: id } => {
                    let pts = points(&s, samples, seed);
                    let mut out = Vec::with_capacity(samples);
                    for (k, p) in pts.into_iter().enumerate() {
                        let label = id.clone().unwrap_or_else(|| format!("random:{}", seed.wrapping_add(k as u64)));
                        let f = field(&label)?;
                        out.push((p, label, f));
                    }
                    let resolved = serde_json::json!({"check": "ricci-identity", "samples": samples, "field": id});
                    (Job::RicciIdentity { samples: out }, resolved)
                }
                CheckParams::Adjointness { degree, phi, psi } => {
                    let p = match (degree, &phi) {
                        (Some(p), _) => p,
                        (None, Some(id)) => form(id)?.degree(),
                        (None, None) => 1,
                    };
                    if p >= n {
                        return Err(config(format!("task {i}: adjointness needs degree below {n}, got {p}")));
                    }
                    let phi = phi.unwrap_or_else(|| format!("random:{p}:{seed}"));
                    let psi = psi.unwrap_or_else(|| format!("random:{}:{}", p + 1, seed.wrapping_add(1)));
                    let (fa, fb) = (form(&phi)?, form(&psi)?);
                    if fa.degree() != p || fb.degree() != p + 1 {
                        return Err(config(format!(
                            "task {i}: adjointness pairs a {p}-form with a {}-form, got degrees {} and {}",
                            p + 1,
                            fa.degree(),
                            fb.degree()
                        )));
                    }
                    let resolved = serde_json::json!({"check": "adjointness", "degree": p, "phi": phi, "psi": psi});
                    (Job::Adjointness { phi: fa, psi: fb }, resolved)
                }
                CheckParams::Divergence { form: id } => {
                    let id = id.unwrap_or_else(|| format!("random:1:{seed}"));
                    let f = form(&id)?;
                    if f.degree() != 1 {
                        return Err(config(format!("task {i}: divergence check takes a 1-form")));
                    }
                    let resolved = serde_json::json!({"check": "divergence", "form": id});
                    (Job::Divergence { form: f }, resolved)
                }
                CheckParams::Bochner { field: id } => {
                    let id = id.unwrap_or_else(|| format!("random:{seed}"));
                    let f = field(&id)?;
                    let resolved = serde_json::json!({"check": "bochner", "field": id});
                    (Job::Bochner { label: id, field: f }, resolved)
                }
            },
        };
        tasks.push(PlannedTask {
            kind: doc.kind,
            job,
            tolerance: doc.tolerance,
            resolved,
        });
    }
    Ok(Plan {
        structure: s,
        metric_label,
        grid,
        grid_spec,
        tasks,
    })
}
