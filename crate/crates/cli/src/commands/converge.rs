use rsdp::integrate::{strong_error, ErrorReport, StrongErrorConfig};
use rsdp::model::{validate_model, Assumption, Status};
use serde::Serialize;

use super::{csv_line, opt, report_missing, Context};
use crate::config::section;
use crate::error::{CliError, Verdict};
use crate::manifest::{Experiment, Run};

#[derive(Debug, Serialize)]
struct ConvergeOutput {
    report: ErrorReport,
    slope: Option<f64>,
    /// "undefined" when the fit is not defined.
    slope_status: String,
    slope_threshold: f64,
    errors_strictly_decreasing: bool,
    /// `mismatch / (δ^½ + ∫E|X − Y|)` per step size.
    mismatch_ratios: Vec<f64>,
}

fn to_csv(report: &ErrorReport) -> String {
    let mut s = String::from(
        "delta,error_mean,error_se,error_ci_lo,error_ci_hi,mismatch_mean,mismatch_se,integrated_error_mean,paths\n",
    );
    for r in &report.rows {
        s.push_str(&csv_line(&[
            r.delta.to_string(),
            r.error.mean.to_string(),
            r.error.std_error.to_string(),
            r.error_ci.0.to_string(),
            r.error_ci.1.to_string(),
            r.mismatch.mean.to_string(),
            r.mismatch.std_error.to_string(),
            r.integrated_error.mean.to_string(),
            r.paths.to_string(),
        ]));
    }
    s
}

pub fn run(ctx: &Context) -> Result<Verdict, CliError> {
    let p = section(&ctx.loaded.config.converge, "converge")?;
    let cfg = StrongErrorConfig {
        deltas: p.deltas.clone(),
        delta_ref: p.delta_ref,
        horizon: p.horizon,
        paths: p.paths,
        seed: ctx.seed,
        x0: p.x0.clone(),
        i0: p.i0,
    };
    cfg.check()?;
    let model = ctx.loaded.model()?;
    model.check_state(&cfg.x0, cfg.i0)?;
    let grid = ctx.loaded.grid(model.dim())?;
    let checks = validate_model(&model, &grid)?;
    for a in [Assumption::H1, Assumption::H2] {
        if let Some(v) = checks.get(a).filter(|v| v.status == Status::Fail) {
            return Err(CliError::Assumption(format!(
                "{a} fails: {}",
                v.note.as_deref().unwrap_or("see `rsdp check`")
            )));
        }
    }

    let experiments = vec![Experiment::new(
        "strong_error",
        ctx.seed,
        &["drive", "brownian"],
        cfg.paths,
    )];
    let mut run = Run::begin(
        &ctx.out,
        "converge",
        &ctx.loaded.hash,
        ctx.seed,
        experiments,
        &["converge.csv", "converge.json"],
    )?;
    let report = strong_error(&model, &cfg)?;

    let slope = report.slope.as_ref().map(|f| f.slope);
    let slope_status = match (slope, &report.slope_note) {
        (Some(s), _) => s.to_string(),
        (None, Some(note)) => note.clone(),
        (None, None) => "undefined".into(),
    };
    let mismatch_ratios = report
        .rows
        .iter()
        .map(|r| r.mismatch.mean / (r.delta.sqrt() + r.integrated_error.mean))
        .collect();
    let verdict = match slope {
        None => Verdict::Success,
        Some(s) if s >= p.slope_threshold => Verdict::Success,
        Some(s) => Verdict::Threshold(format!("fitted slope {s} < {}", p.slope_threshold)),
    };
    println!("delta          error          mismatch");
    for r in &report.rows {
        println!("{:<14} {:<14.6e} {:.6e}", r.delta, r.error.mean, r.mismatch.mean);
    }
    println!(
        "slope: {}",
        if slope.is_some() {
            opt(slope)
        } else {
            format!("undefined ({slope_status})")
        }
    );

    run.write("converge.csv", &to_csv(&report))?;
    let output = ConvergeOutput {
        errors_strictly_decreasing: report.errors_strictly_decreasing(),
        report,
        slope,
        slope_status,
        slope_threshold: p.slope_threshold,
        mismatch_ratios,
    };
    run.write_json("converge.json", &output)?;
    report_missing(run.finish()?)?;
    Ok(verdict)
}
