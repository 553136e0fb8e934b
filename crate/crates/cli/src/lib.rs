//! Scenario runner behind the `finsler-forms` binary.
//!
//! A scenario names a metric, a quadrature grid and a list of tasks; running
//! it validates everything up front, executes the tasks in order and returns
//! a [`Report`] whose JSON form is byte-stable for a fixed scenario and seed
//! (wall-time fields aside).

pub mod report;
pub mod scenario;

use std::collections::BTreeMap;
use std::time::Instant;

use finsler_core::connection::{cartan_coefficients, FD_STEP};
use finsler_core::curvature::curvature_at;
use finsler_core::linalg::PIVOT_THRESHOLD;
use finsler_core::metric::{INDICATRIX_TOL, RENORMALIZE_TOL};
use finsler_core::quadrature::{inner_products, total_volume, HARMONIC_GRID_FLOOR};
use finsler_core::{
    adjointness_defect, bochner_integral, divergence_integral_check, horizontal_laplacian, is_h_harmonic,
    laplacian_expansion_p, ricci_identity_residual, FinslerError, Structure64,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use report::{Record, Report, TaskReport, CSV_HEADER};
pub use scenario::{Format, MetricRef, OutputSpec, Scenario, TaskDoc, TaskKind};

use scenario::{Integrand, Job, Plan, PlannedTask};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The scenario is malformed; nothing was computed.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("task {index} ({kind}) failed: {source}")]
    Task {
        index: usize,
        kind: TaskKind,
        source: FinslerError,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn parse_scenario(text: &str) -> Result<Scenario, RunError> {
    serde_json::from_str(text).map_err(|e| RunError::Config(format!("scenario: {e}")))
}

/// SHA-256 of the scenario's canonical JSON (keys sorted, defaults filled in).
pub fn scenario_hash(sc: &Scenario) -> String {
    let canonical = serde_json::to_value(sc).expect("scenario serializes");
    let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("value serializes"));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn engine_tolerances() -> BTreeMap<String, f64> {
    [
        ("indicatrix", INDICATRIX_TOL),
        ("renormalize", RENORMALIZE_TOL),
        ("cholesky_pivot", PIVOT_THRESHOLD),
        ("fd_step", FD_STEP),
        ("harmonic_grid_floor", HARMONIC_GRID_FLOOR),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn default_tolerance(job: &Job) -> Option<f64> {
    match job {
        Job::Tensor { .. } | Job::Curvature { .. } => None,
        Job::Laplacian { .. } => Some(1e-5),
        Job::Harmonic { .. } => Some(1e-8),
        Job::Integrate { expected, .. } => expected.map(|_| 1e-6),
        Job::RicciIdentity { .. } => Some(1e-5),
        Job::Adjointness { .. } => Some(1e-4),
        Job::Divergence { .. } => Some(1e-5),
        Job::Bochner { .. } => Some(1e-6),
    }
}

struct Outcome {
    pass: bool,
    summary: BTreeMap<String, Value>,
    records: Vec<Record>,
}

fn summary<const N: usize>(entries: [(&str, Value); N]) -> BTreeMap<String, Value> {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn execute(s: &Structure64, grid: &finsler_core::Grid64, task: &PlannedTask, tol: Option<f64>) -> Result<Outcome, FinslerError> {
    let tol_or = |d: f64| tol.unwrap_or(d);
    let mut records = Vec::new();
    let out = match &task.job {
        Job::Tensor { point, names } => {
            let (x, y) = (&point.x, &point.y);
            let conn = names
                .iter()
                .any(|n| matches!(n.as_str(), "G" | "N" | "Gamma" | "Cv"))
                .then(|| cartan_coefficients(s, x, y))
                .transpose()?;
            for name in names {
                let t = match name.as_str() {
                    "g" => s.fundamental_tensor(x, y)?,
                    "ginv" => s.inverse_metric(x, y)?,
                    "C" => s.cartan_tensor(x, y)?,
                    "T" => s.cartan_trace(x, y)?,
                    "ell" => s.hilbert_form(x, y)?,
                    other => {
                        let c = conn.as_ref().expect("connection computed");
                        match other {
                            "G" => c.spray.clone(),
                            "N" => c.nl.clone(),
                            "Gamma" => c.gamma.clone(),
                            _ => c.cv.clone(),
                        }
                    }
                };
                Record::tensor(&mut records, name, &t);
            }
            let mut sm = summary([]);
            if let Some(c) = &conn {
                sm.insert("nonlinear_defect".into(), json!(c.nonlinear_defect()));
            }
            Outcome {
                pass: true,
                summary: sm,
                records,
            }
        }
        Job::Curvature { point, names } => {
            let c = curvature_at(s, &point.x, &point.y)?;
            for name in names {
                let t = match name.as_str() {
                    "Rhh" => &c.hh,
                    "P" => &c.hv,
                    "Q" => &c.vv,
                    "Rflag" => &c.flag,
                    _ => &c.ricci,
                };
                Record::tensor(&mut records, name, t);
            }
            Outcome {
                pass: true,
                summary: summary([]),
                records,
            }
        }
        Job::Laplacian { form, points } => {
            let lap = horizontal_laplacian(s, form)?;
            let expansion = (form.degree() > 0).then(|| laplacian_expansion_p(s, form)).transpose()?;
            let mut defect = 0.0f64;
            let mut max_abs = 0.0f64;
            for p in points {
                let v = lap.eval(s, &p.x, &p.y)?;
                max_abs = max_abs.max(v.max_abs());
                if let Some(e) = &expansion {
                    let w = e.eval(s, &p.x, &p.y)?;
                    defect = defect.max(v.max_diff(&w) / (1.0 + v.max_abs()));
                }
                Record::tensor(&mut records, "laplacian", &v);
            }
            let l2 = inner_products(s, &[(&lap, &lap)], grid)?[0].max(0.0).sqrt();
            let tol = tol_or(1e-5);
            Outcome {
                pass: defect <= tol,
                summary: summary([
                    ("max_abs", json!(max_abs)),
                    ("l2_norm", json!(l2)),
                    ("expansion_defect", json!(expansion.as_ref().map(|_| defect))),
                    ("harmonic", json!(l2 <= 1e-8)),
                ]),
                records,
            }
        }
        Job::Harmonic { form, expect } => {
            let r = is_h_harmonic(s, form, grid, tol_or(1e-8))?;
            Outcome {
                pass: r.equivalence_holds && expect.map_or(true, |e| e == r.harmonic),
                summary: summary([
                    ("laplacian_norm", json!(r.laplacian_norm)),
                    ("dh_norm", json!(r.dh_norm)),
                    ("delta_h_norm", json!(r.delta_h_norm)),
                    ("derived_tol", json!(r.derived_tol)),
                    ("harmonic", json!(r.harmonic)),
                    ("equivalence_holds", json!(r.equivalence_holds)),
                    ("energy_defect", json!(r.energy_defect)),
                ]),
                records,
            }
        }
        Job::Integrate { integrand, expected } => {
            let value = match integrand {
                Integrand::Volume => total_volume(s, grid)?,
                Integrand::Inner(a, b) => inner_products(s, &[(a, b)], grid)?[0],
            };
            let deviation = expected.map(|e| (value - e).abs() / (1.0 + e.abs()));
            Outcome {
                pass: deviation.map_or(true, |d| d <= tol_or(1e-6)),
                summary: summary([
                    ("value", json!(value)),
                    ("expected", json!(expected)),
                    ("deviation", json!(deviation)),
                ]),
                records,
            }
        }
        Job::RicciIdentity { samples } => {
            let mut worst = 0.0f64;
            let mut paths = Vec::new();
            for (p, label, field) in samples {
                let (res, path) = ricci_identity_residual(s, field, &p.x, &p.y)?;
                let m = res.max_abs();
                worst = worst.max(m);
                records.push(Record {
                    quantity: "residual".into(),
                    x: p.x.clone(),
                    y: p.y.clone(),
                    component: label.clone(),
                    value: m,
                });
                paths.push(format!("{path:?}"));
            }
            paths.dedup();
            Outcome {
                pass: worst <= tol_or(1e-5),
                summary: summary([("max_residual", json!(worst)), ("derivative_path", json!(paths))]),
                records,
            }
        }
        Job::Adjointness { phi, psi } => {
            let r = adjointness_defect(s, phi, psi, grid)?;
            Outcome {
                pass: r.defect <= tol_or(1e-4),
                summary: summary([("lhs", json!(r.lhs)), ("rhs", json!(r.rhs)), ("defect", json!(r.defect))]),
                records,
            }
        }
        Job::Divergence { form } => {
            let r = divergence_integral_check(s, form, grid)?;
            Outcome {
                pass: r.defect <= tol_or(1e-5),
                summary: summary([
                    ("integral", json!(r.integral)),
                    ("norm", json!(r.norm)),
                    ("defect", json!(r.defect)),
                    ("warning", json!(r.warning)),
                ]),
                records,
            }
        }
        Job::Bochner { label, field } => {
            let r = bochner_integral(s, field, grid)?;
            let mut sm = summary([
                ("field", json!(label)),
                ("k_integral", json!(r.k_integral)),
                ("grad_norm_integral", json!(r.grad_norm_integral)),
                ("sum", json!(r.sum)),
                ("divergence_integral", json!(r.divergence_integral)),
            ]);
            if !s.chart.is_fully_periodic() {
                sm.insert(
                    "warning".into(),
                    json!("chart is not fully periodic: boundary flux through the excluded margins enters the sum"),
                );
            }
            Outcome {
                pass: r.sum >= -tol_or(1e-6),
                summary: sm,
                records,
            }
        }
    };
    Ok(out)
}

fn run_plan(sc: &Scenario, plan: Plan) -> Result<Report, RunError> {
    let start = Instant::now();
    let s = &plan.structure;
    let mut tasks = Vec::with_capacity(plan.tasks.len());
    for (index, task) in plan.tasks.iter().enumerate() {
        let t0 = Instant::now();
        let tol = task.tolerance.or_else(|| default_tolerance(&task.job));
        let out = execute(s, &plan.grid, task, tol).map_err(|source| RunError::Task {
            index,
            kind: task.kind,
            source,
        })?;
        tasks.push(TaskReport {
            index,
            kind: task.kind.to_string(),
            params: task.resolved.clone(),
            tolerance: tol,
            pass: out.pass,
            summary: out.summary,
            records: out.records,
            wall_time_s: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(Report {
        engine: format!("finsler-core {}", env!("CARGO_PKG_VERSION")),
        scenario_hash: scenario_hash(sc),
        seed: sc.seed,
        metric: report::MetricSummary {
            label: plan.metric_label.clone(),
            family: s.family_name().to_string(),
            dim: s.dim,
        },
        grid: report::GridSummary {
            spec: plan.grid_spec.clone(),
            base: plan.grid.base_counts.clone(),
            fiber: plan.grid.fiber_counts.clone(),
            nodes: plan.grid.node_count(),
        },
        tolerances: engine_tolerances(),
        pass: tasks.iter().all(|t| t.pass),
        tasks,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Validate the whole scenario, then run its tasks in order.
pub fn run_scenario(sc: &Scenario) -> Result<Report, RunError> {
    let plan = scenario::plan(sc)?;
    run_plan(sc, plan)
}
