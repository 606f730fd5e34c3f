use ethiplan_web::{encounter_cost, plan, probability_field};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn plan_hits_terminal_targets() {
    let v = parse(plan(0.0, 10.0, 2.0, 1.0, 15.0));
    let (d, l_dot) = (floats(&v["d"]), floats(&v["l_dot"]));
    assert!((d.last().unwrap() - 1.0).abs() < 1e-9);
    assert!((l_dot.last().unwrap() - 15.0).abs() < 1e-9);
    let a = floats(&v["longitudinal"]);
    assert!((a[3] - 1.25).abs() < 1e-12 && (a[4] + 0.3125).abs() < 1e-12);
    assert_eq!(floats(&v["tau"]).len(), 21);
}

#[test]
fn plan_clamps_actions_and_rejects_bad_state() {
    let v = parse(plan(0.0, 5.0, 9.0, -3.0, 100.0));
    assert_eq!(floats(&v["clamped"])[0], 2.0);
    assert!(plan(f64::NAN, 5.0, 2.0, 0.0, 5.0).is_err());
    assert!(plan(0.0, -1.0, 2.0, 0.0, 5.0).is_err());
}

#[test]
fn field_peaks_at_the_mean_and_vanishes_outside_the_gate() {
    let v = parse(probability_field(0.0, 0.0, 1.0, 10.0, 21));
    let p = floats(&v["probability"]);
    assert_eq!(p.len(), 21 * 21);
    assert_eq!(p[10 * 21 + 10], 1.0);
    assert_eq!(p[0], 0.0);
    let gated = v["gated"].as_u64().unwrap() as usize;
    assert_eq!(gated, p.iter().filter(|x| **x > 0.0).count());
    // symmetric about the origin for aligned boxes
    assert!((p[10 * 21 + 12] - p[10 * 21 + 8]).abs() < 1e-15);
    assert!(probability_field(0.0, 0.0, 1.0, 10.0, 1).is_err());
    assert!(probability_field(0.0, 0.0, 0.0, 10.0, 5).is_err());
}

#[test]
fn encounter_cost_matches_components() {
    let v = parse(encounter_cost(0.5, 10.0, 0.0, 1500.0, 75.0, 1.2));
    let dv = v["delta_v_ego"].as_f64().unwrap();
    assert!((dv - 75.0 / 1575.0 * 10.0).abs() < 1e-12);
    let (b, e, m) = (v["bayes"].as_f64().unwrap(), v["equality"].as_f64().unwrap(), v["maximin"].as_f64().unwrap());
    assert!((v["total"].as_f64().unwrap() - 3.33 * (b + e + m)).abs() < 1e-12);
    // the lighter party bears more harm
    assert!(v["harm_other"].as_f64().unwrap() > v["harm_ego"].as_f64().unwrap());
    let zero = parse(encounter_cost(0.0, 10.0, 0.0, 1500.0, 75.0, 1.2));
    assert_eq!(zero["bayes"].as_f64().unwrap(), 0.0);
    assert!(encounter_cost(1.5, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
}
