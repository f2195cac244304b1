//! Browser bindings for a few `rsdp` operations. Each export takes a model in
//! TOML form and returns a JSON string; the plain functions in [`ops`] do the
//! work and are what the native tests exercise.

use wasm_bindgen::prelude::*;

pub mod ops {
    use rsdp::dominate::alpha_bound;
    use rsdp::integrate::simulate_states;
    use rsdp::model::config::ModelConfig;
    use rsdp::model::{validate_model, GridSpec, Status};
    use rsdp::skorokhod::IntervalTable;
    use rsdp::RsdpModel;
    use serde_json::json;

    /// Longest horizon / step ratio the demo will simulate.
    pub const MAX_STEPS: usize = 200_000;

    fn model(toml: &str) -> Result<RsdpModel, String> {
        ModelConfig::parse(toml)
            .and_then(|c| c.build())
            .map_err(|e| e.to_string())
    }

    /// Assumption verdicts, `H`, `c_q`, `M` and `η_α` on the default grid.
    pub fn check(toml: &str) -> Result<String, String> {
        let m = model(toml)?;
        let grid = GridSpec::default_for(m.dim()).map_err(|e| e.to_string())?;
        let report = validate_model(&m, &grid).map_err(|e| e.to_string())?;
        let verdicts: Vec<_> = report
            .verdicts
            .iter()
            .map(|v| {
                json!({
                    "assumption": v.assumption.name(),
                    "status": match v.status {
                        Status::Pass => "pass",
                        Status::Fail => "fail",
                        Status::Skipped => "skipped",
                    },
                    "note": v.note,
                })
            })
            .collect();
        let eta_alpha = alpha_bound(&m, &grid).ok().map(|(_, sb)| sb.eta);
        let b = &report.bounds;
        Ok(json!({
            "dim": m.dim(),
            "regimes": m.n_regimes(),
            "h": b.h,
            "c_q": b.c_q,
            "m": b.m,
            "eta_alpha": eta_alpha,
            "verdicts": verdicts,
        })
        .to_string())
    }

    /// The switching intervals `Γ_ij(x)` on `[0, M)`.
    pub fn intervals(toml: &str, x: &[f64]) -> Result<String, String> {
        let m = model(toml)?;
        if x.len() != m.dim() {
            return Err(format!(
                "x has {} coordinates, the model has dimension {}",
                x.len(),
                m.dim()
            ));
        }
        let table = IntervalTable::build(m.rates(), x).map_err(|e| e.to_string())?;
        Ok(json!({
            "m": m.m(),
            "total": table.total(),
            "intervals": table.entries(),
        })
        .to_string())
    }

    /// One Euler–Maruyama path recorded at every step.
    pub fn simulate(toml: &str, x0: &[f64], i0: usize, delta: f64, horizon: f64, seed: u64) -> Result<String, String> {
        let m = model(toml)?;
        if !(delta > 0.0 && horizon > 0.0) {
            return Err("delta and horizon must be positive".into());
        }
        let steps = (horizon / delta).round() as usize;
        if steps == 0 || steps > MAX_STEPS {
            return Err(format!("horizon / delta must be between 1 and {MAX_STEPS}"));
        }
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * delta).collect();
        let states = simulate_states(&m, delta, x0, i0, &times, seed, 0).map_err(|e| e.to_string())?;
        let (x, regime): (Vec<Vec<f64>>, Vec<usize>) = states.into_iter().unzip();
        Ok(json!({ "t": times, "x": x, "regime": regime }).to_string())
    }
}

#[wasm_bindgen(js_name = checkModel)]
pub fn check_model(toml: &str) -> Result<String, JsError> {
    ops::check(toml).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = switchIntervals)]
pub fn switch_intervals(toml: &str, x: Vec<f64>) -> Result<String, JsError> {
    ops::intervals(toml, &x).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulatePath)]
pub fn simulate_path(
    toml: &str,
    x0: Vec<f64>,
    i0: usize,
    delta: f64,
    horizon: f64,
    seed: u64,
) -> Result<String, JsError> {
    ops::simulate(toml, &x0, i0, delta, horizon, seed).map_err(|e| JsError::new(&e))
}
