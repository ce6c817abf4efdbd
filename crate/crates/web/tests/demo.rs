use gaussalign_web::{cluster_json, compare_json, interpolate_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn path_starts_and_ends_at_the_inputs() {
    let a = [0.0, 0.0, 2.0, 0.3, 1.0];
    let b = [1.0, -1.0, 0.5, 0.0, 3.0];
    let v = parse(interpolate_json(&a, &b, &[0.0, 0.5, 1.0]).unwrap());
    let path = v["path"].as_array().unwrap();
    for (got, want) in [(&path[0], a), (&path[2], b)] {
        for k in 0..5 {
            assert!((got[k].as_f64().unwrap() - want[k]).abs() < 1e-10);
        }
    }
    assert!(v["distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn igw_ignores_rotation_but_w2_does_not() {
    let a = [0.0, 0.0, 3.0, 0.0, 1.0];
    let b = [0.0, 0.0, 1.0, 0.0, 3.0];
    let v = parse(compare_json(&a, &b, 0).unwrap());
    assert!(v["igw"].as_f64().unwrap() < 1e-9);
    assert!(v["w2"].as_f64().unwrap() > 0.5);
    assert!(v["closed_form"].is_f64());
}

#[test]
fn cluster_demo_recovers_groups() {
    let v = parse(cluster_json(1, 3, 12, 6, 0.05, true).unwrap());
    assert_eq!(v["labels"].as_array().unwrap().len(), 36);
    assert_eq!(v["coords"].as_array().unwrap().len(), 36);
    assert!(v["ari"].as_f64().unwrap() > 0.8);
}

#[test]
fn malformed_gaussians_are_rejected() {
    assert!(interpolate_json(&[0.0, 0.0, 1.0], &[0.0; 5], &[0.5]).is_err());
    assert!(compare_json(&[0.0, 0.0, 1.0, 2.0, 1.0], &[0.0, 0.0, 1.0, 0.0, 1.0], 0).is_err());
}
