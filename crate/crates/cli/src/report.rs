//! Report model and its JSON and CSV renderings.

use std::collections::BTreeMap;

use finsler_core::scalar::Sig17;
use finsler_core::tensor::multi_index;
use finsler_core::TensorValue64;
use serde::Serialize;
use serde_json::Value;

/// Fixed CSV header. `x`, `y` and `component` hold space-separated lists.
pub const CSV_HEADER: [&str; 7] = ["task", "kind", "quantity", "x", "y", "component", "value"];

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub quantity: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub component: String,
    pub value: f64,
}

impl Record {
    pub fn scalar(quantity: &str, value: f64) -> Self {
        Record {
            quantity: quantity.into(),
            x: vec![],
            y: vec![],
            component: String::new(),
            value,
        }
    }

    pub fn tensor(out: &mut Vec<Record>, quantity: &str, t: &TensorValue64) {
        let rank = t.rank();
        for (flat, v) in t.data.iter().enumerate() {
            let component = multi_index(t.n, rank, flat)
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            out.push(Record {
                quantity: quantity.into(),
                x: t.x.clone(),
                y: t.y.clone(),
                component,
                value: *v,
            });
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub kind: String,
    pub params: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub summary: BTreeMap<String, Value>,
    pub records: Vec<Record>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub spec: String,
    pub base: Vec<usize>,
    pub fiber: Vec<usize>,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub label: String,
    pub family: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub engine: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub metric: MetricSummary,
    pub grid: GridSummary,
    pub tolerances: BTreeMap<String, f64>,
    pub tasks: Vec<TaskReport>,
    pub pass: bool,
    pub wall_time_s: f64,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|a| Sig17(*a).to_string()).collect::<Vec<_>>().join(" ")
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per record, then one row per numeric summary entry and a
    /// `pass` row (1 or 0) for each task.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for t in &self.tasks {
            let idx = t.index.to_string();
            let mut row = |q: &str, x: &[f64], y: &[f64], c: &str, v: f64| {
                w.write_record([idx.as_str(), t.kind.as_str(), q, &join(x), &join(y), c, &Sig17(v).to_string()])
                    .expect("in-memory write");
            };
            for r in &t.records {
                row(&r.quantity, &r.x, &r.y, &r.component, r.value);
            }
            for (k, v) in &t.summary {
                if let Some(f) = v.as_f64() {
                    row(k, &[], &[], "", f);
                }
            }
            row("pass", &[], &[], "", if t.pass { 1.0 } else { 0.0 });
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
