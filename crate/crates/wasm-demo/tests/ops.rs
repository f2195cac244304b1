use rsdp_wasm::ops;
use serde_json::Value;

const MODEL: &str = r#"
dim = 1
regimes = 2
assume = ["con-q"]

[[regime]]
a = -1.0
sigma = 1.0

[[regime]]
a = -2.0
sigma = 1.0

[[rate]]
from = 1
to = 2
a = 1.0
b = 0.5
v = [1.0]

[[rate]]
from = 2
to = 1
a = 3.0
b = -0.5
v = [1.0]

[constants]
alpha = [-2.0, -4.0]
"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn check_reports_constants() {
    let v = parse(&ops::check(MODEL).unwrap());
    assert_eq!(v["h"], 3.5);
    assert_eq!(v["m"], 7.0);
    assert_eq!(v["c_q"], 0.5);
    assert!(v["eta_alpha"].as_f64().unwrap() > 0.0);
    let con_q = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["assumption"] == "con-q")
        .unwrap();
    assert_eq!(con_q["status"], "pass");
}

#[test]
fn intervals_tile_the_exit_rates() {
    let v = parse(&ops::intervals(MODEL, &[0.0]).unwrap());
    let iv = v["intervals"].as_array().unwrap();
    assert_eq!(iv.len(), 2);
    let len = |k: usize| iv[k]["hi"].as_f64().unwrap() - iv[k]["lo"].as_f64().unwrap();
    assert_eq!(len(0), 1.0);
    assert_eq!(len(1), 3.0);
    assert!(v["total"].as_f64().unwrap() <= v["m"].as_f64().unwrap());
    assert!(ops::intervals(MODEL, &[0.0, 1.0]).is_err());
}

#[test]
fn simulate_is_seeded() {
    let a = ops::simulate(MODEL, &[0.5], 1, 0.01, 1.0, 7).unwrap();
    assert_eq!(a, ops::simulate(MODEL, &[0.5], 1, 0.01, 1.0, 7).unwrap());
    assert_ne!(a, ops::simulate(MODEL, &[0.5], 1, 0.01, 1.0, 8).unwrap());
    let v = parse(&a);
    assert_eq!(v["t"].as_array().unwrap().len(), 101);
    assert_eq!(v["x"][0][0], 0.5);
    assert_eq!(v["regime"][0], 1);
}

#[test]
fn bad_input_is_an_error() {
    assert!(ops::check("dim = ").is_err());
    assert!(ops::simulate(MODEL, &[0.5], 3, 0.01, 1.0, 1).is_err());
    assert!(ops::simulate(MODEL, &[0.5], 1, 1e-6, 1.0, 1).is_err());
    assert!(ops::simulate(MODEL, &[0.5], 1, -0.1, 1.0, 1).is_err());
}
