use finsler_core::{builtin_metric, list_builtins};
use finsler_forms::{parse_scenario, run_scenario, scenario_hash, Report, RunError, CSV_HEADER};
use serde_json::Value;

fn run(text: &str) -> Result<Report, RunError> {
    run_scenario(&parse_scenario(text)?)
}

fn without_wall_time(mut v: Value) -> Value {
    match &mut v {
        Value::Object(m) => {
            m.remove("wall_time_s");
            for (_, x) in m.iter_mut() {
                *x = without_wall_time(x.take());
            }
        }
        Value::Array(a) => {
            for x in a.iter_mut() {
                *x = without_wall_time(x.take());
            }
        }
        _ => {}
    }
    v
}

#[test]
fn flat_torus_ricci_identity_is_exact() {
    let r = run(r#"{"metric":"euclidean","tasks":[{"kind":"check","params":{"check":"ricci-identity"}}]}"#).unwrap();
    assert!(r.pass);
    let worst = r.tasks[0].summary["max_residual"].as_f64().unwrap();
    assert!(worst <= 1e-8, "{worst}");
    assert!(r.tasks[0].records.iter().all(|rec| rec.value <= 1e-8));
}

#[test]
fn randers_torus_adjointness_in_degree_one() {
    let r = run(
        r#"{"metric":"randers-torus","seed":7,
            "tasks":[{"kind":"check","params":{"check":"adjointness","degree":1}}]}"#,
    )
    .unwrap();
    assert!(r.pass);
    let defect = r.tasks[0].summary["defect"].as_f64().unwrap();
    assert!(defect <= 1e-4, "{defect}");
}

#[test]
fn oversized_randers_drift_is_a_config_error() {
    let e = run(
        r#"{"metric":{"family":"randers","dim":2,"b":[1.2,0]},
            "tasks":[{"kind":"tensor","params":{"at":[0.1,0.2]}}]}"#,
    )
    .unwrap_err();
    match e {
        RunError::Config(msg) => assert!(msg.contains("Randers invariant"), "{msg}"),
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn malformed_tasks_fail_before_any_math() {
    for text in [
        r#"{"metric":"euclidean","tasks":[{"kind":"tensor","params":{"at":[0.1]}}]}"#,
        r#"{"metric":"euclidean","tasks":[{"kind":"tensor","params":{"at":[0,0],"names":["nope"]}}]}"#,
        r#"{"metric":"no-such-metric","tasks":[]}"#,
        r#"{"metric":"euclidean","grid":"7x","tasks":[]}"#,
        r#"{"metric":"euclidean","tasks":[{"kind":"check","params":{"check":"adjointness","degree":1,"phi":"dx1","psi":"dx1"}}]}"#,
        r#"{"metric":"euclidean","tasks":[],"extra":1}"#,
    ] {
        assert!(matches!(run(text), Err(RunError::Config(_))), "{text}");
    }
}

#[test]
fn catalog_lists_loadable_ids_in_a_stable_order() {
    let a = list_builtins();
    let ids: Vec<&str> = a.metrics.iter().map(|m| m.id).collect();
    for required in ["euclidean", "riemannian-sphere", "randers-torus"] {
        assert!(ids.contains(&required), "{required}");
    }
    for id in &ids {
        builtin_metric(id).unwrap();
    }
    let b = list_builtins();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

const MIXED: &str = r#"{
    "metric": "wavy-randers-torus",
    "grid": "8x8:16",
    "seed": 11,
    "tasks": [
        {"kind": "tensor", "params": {"at": [0.3, 1.1], "names": ["g", "C"]}},
        {"kind": "laplacian", "params": {"form": "sin-x1-dx1", "points": 3}},
        {"kind": "integrate", "params": {"integrand": "volume"}}
    ]
}"#;

#[test]
fn reports_are_deterministic_apart_from_wall_time() {
    let a = run(MIXED).unwrap();
    let b = run(MIXED).unwrap();
    let ja = without_wall_time(serde_json::from_str(&a.to_json()).unwrap());
    let jb = without_wall_time(serde_json::from_str(&b.to_json()).unwrap());
    assert_eq!(ja, jb);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.seed, 11);
    assert_eq!(a.scenario_hash, scenario_hash(&parse_scenario(MIXED).unwrap()));
    assert!(a.tolerances.contains_key("indicatrix"));
}

#[test]
fn scenario_hash_tracks_content() {
    let a = parse_scenario(MIXED).unwrap();
    let b = parse_scenario(&MIXED.replace("\"seed\": 11", "\"seed\": 12")).unwrap();
    assert_ne!(scenario_hash(&a), scenario_hash(&b));
    assert_eq!(scenario_hash(&a).len(), 64);
}

#[test]
fn csv_has_the_fixed_header_and_full_precision() {
    let r = run(MIXED).unwrap();
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), CSV_HEADER.len(), "{line}");
        let mantissa = cols[6].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{line}");
        cols[6].parse::<f64>().unwrap();
        rows += 1;
    }
    assert!(rows > 0);
}
