//! Named built-in structures, forms and vector fields, and the JSON metric
//! document used by configuration files.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::fields::{TrigPoly, TrigTerm, VectorField};
use crate::forms::HorizontalForm;
use crate::metric::{ChartSpec, CovectorField, CustomMetric, Family, FinslerStructure, MatrixField};
use crate::quadrature::default_counts;

/// Polar margin of the built-in sphere chart.
pub const SPHERE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct MetricInfo {
    pub id: &'static str,
    pub family: &'static str,
    pub dim: usize,
    pub description: &'static str,
}

const METRICS: &[MetricInfo] = &[
    MetricInfo {
        id: "euclidean",
        family: "euclidean",
        dim: 2,
        description: "flat torus [0,2π)²",
    },
    MetricInfo {
        id: "euclidean-3",
        family: "euclidean",
        dim: 3,
        description: "flat torus [0,2π)³",
    },
    MetricInfo {
        id: "riemannian-sphere",
        family: "riemannian",
        dim: 2,
        description: "unit round sphere in the (θ,φ) chart, poles cut at 0.05",
    },
    MetricInfo {
        id: "conformal-torus",
        family: "riemannian",
        dim: 2,
        description: "exp(0.2 cos x¹)·δ on the torus",
    },
    MetricInfo {
        id: "randers-torus",
        family: "randers",
        dim: 2,
        description: "|y| + b·y with b = (0.5, 0) on the torus",
    },
    MetricInfo {
        id: "wavy-randers-torus",
        family: "randers",
        dim: 2,
        description: "|y| + b(x)·y with b = (0.3 cos x², 0.2 sin x¹)",
    },
    MetricInfo {
        id: "quartic-torus",
        family: "custom",
        dim: 2,
        description: "sqrt(|y|² + 0.1 Σ(y^i)⁴/|y|²) on the torus",
    },
];

const FORMS: &[&str] = &["dx1", "dx2", "dx1^dx2", "sin-x1", "sin-x1-dx1", "sin-x1-dx2", "cos-x1-dx1", "cos-x1-dx1^dx2"];
const VECTOR_FIELDS: &[&str] = &["e1", "e2", "sin-x1-e1", "rotation"];

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub dim: usize,
    pub base: Vec<usize>,
    pub fiber: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Builtins {
    pub metrics: Vec<MetricInfo>,
    pub forms: Vec<&'static str>,
    pub vector_fields: Vec<&'static str>,
    pub default_grids: Vec<GridInfo>,
}

/// Everything addressable by name, in a fixed order.
pub fn list_builtins() -> Builtins {
    Builtins {
        metrics: METRICS.to_vec(),
        forms: FORMS.to_vec(),
        vector_fields: VECTOR_FIELDS.to_vec(),
        default_grids: [2, 3]
            .into_iter()
            .map(|n| {
                let (base, fiber) = default_counts(n).expect("supported dimension");
                GridInfo { dim: n, base, fiber }
            })
            .collect(),
    }
}

fn trig(amp: f64, freq: Vec<i32>, phase: f64) -> TrigTerm<f64> {
    TrigTerm { amp, freq, phase }
}

pub fn builtin_metric(id: &str) -> Result<FinslerStructure<f64>> {
    let s = match id {
        "euclidean" => FinslerStructure::euclidean_torus(2),
        "euclidean-3" => FinslerStructure::euclidean_torus(3),
        "riemannian-sphere" => FinslerStructure::round_sphere(SPHERE_MARGIN),
        "conformal-torus" => FinslerStructure::new(
            Family::Riemannian {
                a: MatrixField::Conformal {
                    base: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    log_scale: TrigPoly {
                        constant: 0.0,
                        terms: vec![trig(0.1, vec![1, 0], 0.0)],
                    },
                },
            },
            2,
            ChartSpec::torus(2),
        )?,
        "randers-torus" => FinslerStructure::randers_torus(&[0.5, 0.0]),
        "wavy-randers-torus" => FinslerStructure::new(
            Family::Randers {
                a: MatrixField::identity(2),
                b: CovectorField::Trig {
                    components: vec![
                        TrigPoly {
                            constant: 0.0,
                            terms: vec![trig(0.3, vec![0, 1], 0.0)],
                        },
                        TrigPoly::sin_axis(2, 0, 0.2),
                    ],
                },
            },
            2,
            ChartSpec::torus(2),
        )?,
        "quartic-torus" => FinslerStructure::new(
            Family::Custom(CustomMetric::Quartic { eps: 0.1 }),
            2,
            ChartSpec::torus(2),
        )?,
        other => {
            return Err(FinslerError::Config(format!(
                "unknown metric id '{other}'; known: {}",
                METRICS.iter().map(|m| m.id).collect::<Vec<_>>().join(", ")
            )))
        }
    };
    Ok(s)
}

fn parse_seed(s: &str, what: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| FinslerError::Config(format!("bad seed '{s}' in {what} id")))
}

/// Built-in form by id, or `random:<degree>:<seed>`.
pub fn builtin_form(id: &str, dim: usize) -> Result<HorizontalForm<f64>> {
    if let Some(rest) = id.strip_prefix("random:") {
        let (p, seed) = rest
            .split_once(':')
            .ok_or_else(|| FinslerError::Config(format!("expected random:<degree>:<seed>, got '{id}'")))?;
        let p: usize = p
            .parse()
            .map_err(|_| FinslerError::Config(format!("bad degree in '{id}'")))?;
        if p > dim {
            return Err(FinslerError::Config(format!("degree {p} exceeds dimension {dim}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(parse_seed(seed, "form")?);
        return Ok(HorizontalForm::random(&mut rng, dim, p, 2, 2, true));
    }
    let one = || TrigPoly::constant(1.0);
    let sin1 = || TrigPoly::sin_axis(dim, 0, 1.0);
    let cos1 = || TrigPoly::cos_axis(dim, 0, 1.0);
    let mut f = match id {
        "dx1" => HorizontalForm::monomial(dim, &[0], one()),
        "dx2" => HorizontalForm::monomial(dim, &[1], one()),
        "dx1^dx2" => HorizontalForm::monomial(dim, &[0, 1], one()),
        "sin-x1" => HorizontalForm::monomial(dim, &[], sin1()),
        "sin-x1-dx1" => HorizontalForm::monomial(dim, &[0], sin1()),
        "sin-x1-dx2" => HorizontalForm::monomial(dim, &[1], sin1()),
        "cos-x1-dx1" => HorizontalForm::monomial(dim, &[0], cos1()),
        "cos-x1-dx1^dx2" => HorizontalForm::monomial(dim, &[0, 1], cos1()),
        other => Err(FinslerError::Config(format!(
            "unknown form id '{other}'; known: {}, random:<degree>:<seed>",
            FORMS.join(", ")
        ))),
    }
    .map_err(|e| match e {
        FinslerError::Config(_) => e,
        other => FinslerError::Config(format!("form '{id}' in dimension {dim}: {other}")),
    })?;
    f.label = id.to_string();
    Ok(f)
}

/// Built-in vector field by id, or `random:<seed>`.
pub fn builtin_vector_field(id: &str, dim: usize) -> Result<VectorField<f64>> {
    if let Some(seed) = id.strip_prefix("random:") {
        let mut rng = ChaCha8Rng::seed_from_u64(parse_seed(seed, "vector field")?);
        return Ok(VectorField::random(&mut rng, dim, 2, 2));
    }
    let axis = |k: usize| -> Result<VectorField<f64>> {
        if k >= dim {
            return Err(FinslerError::Config(format!("'{id}' needs dimension > {k}")));
        }
        Ok(VectorField::coordinate(dim, k))
    };
    match id {
        "e1" => axis(0),
        "e2" | "rotation" => axis(1),
        "sin-x1-e1" => {
            let mut comps = vec![TrigPoly::zero(); dim];
            comps[0] = TrigPoly::sin_axis(dim, 0, 1.0);
            Ok(VectorField::new(comps))
        }
        other => Err(FinslerError::Config(format!(
            "unknown vector field id '{other}'; known: {}, random:<seed>",
            VECTOR_FIELDS.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Plain(Vec<Vec<f64>>),
    Field(MatrixField<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovectorSpec {
    Plain(Vec<f64>),
    Field(CovectorField<f64>),
}

/// Metric as written in configuration files.
///
/// `{"family":"randers","dim":2,"a":[[1,0],[0,1]],"b":[0.5,0],"chart":{...}}`;
/// custom structures name a built-in expression: `{"family":"custom","dim":2,"id":"quartic","eps":0.1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDoc {
    pub family: String,
    pub dim: usize,
    #[serde(default)]
    pub a: Option<MatrixSpec>,
    #[serde(default)]
    pub b: Option<CovectorSpec>,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub chart: Option<ChartSpec<f64>>,
}

impl MetricDoc {
    pub fn build(&self) -> Result<FinslerStructure<f64>> {
        let n = self.dim;
        let a = || match &self.a {
            None => MatrixField::identity(n),
            Some(MatrixSpec::Plain(m)) => MatrixField::Constant { value: m.clone() },
            Some(MatrixSpec::Field(f)) => f.clone(),
        };
        let family = match self.family.as_str() {
            "euclidean" => Family::Euclidean,
            "riemannian" => Family::Riemannian { a: a() },
            "randers" => {
                let b = match &self.b {
                    None => return Err(FinslerError::Config("randers metric needs a covector 'b'".into())),
                    Some(CovectorSpec::Plain(v)) => CovectorField::Constant { value: v.clone() },
                    Some(CovectorSpec::Field(f)) => f.clone(),
                };
                Family::Randers { a: a(), b }
            }
            "custom" => match self.id.as_deref() {
                Some("quartic") => Family::Custom(CustomMetric::Quartic {
                    eps: self.eps.unwrap_or(0.1),
                }),
                other => {
                    return Err(FinslerError::Config(format!(
                        "unknown custom metric id {other:?}; known: quartic"
                    )))
                }
            },
            other => {
                return Err(FinslerError::Config(format!(
                    "unknown family '{other}'; expected euclidean, riemannian, randers or custom"
                )))
            }
        };
        let chart = self.chart.clone().unwrap_or_else(|| ChartSpec::torus(n));
        FinslerStructure::new(family, n, chart).map_err(|e| match e {
            FinslerError::Config(_) => e,
            other => FinslerError::Config(format!("invalid metric: {other}")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_metric_builds() {
        for m in list_builtins().metrics {
            let s = builtin_metric(m.id).unwrap();
            assert_eq!(s.dim, m.dim);
            assert_eq!(s.family_name(), m.family);
        }
    }

    #[test]
    fn randers_document_violating_the_invariant() {
        let doc: MetricDoc = serde_json::from_str(r#"{"family":"randers","dim":2,"b":[1.2,0]}"#).unwrap();
        match doc.build() {
            Err(FinslerError::Config(msg)) => assert!(msg.contains("Randers invariant"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_listed_form_builds() {
        for id in list_builtins().forms {
            builtin_form(id, 2).unwrap();
        }
        assert_eq!(builtin_form("random:1:7", 2).unwrap().degree(), 1);
    }
}
