use rsdp::measure::{invariant_convergence, InvariantConfig, InvariantReport};
use rsdp::rng::child_seed;
use serde::Serialize;

use super::{report_missing, Context};
use crate::config::section;
use crate::error::{CliError, Verdict};
use crate::manifest::{Experiment, Run};

#[derive(Debug, Serialize)]
struct InvariantOutput {
    report: InvariantReport,
    threshold: f64,
    final_distances: Vec<f64>,
    strictly_decreasing: bool,
}

pub fn run(ctx: &Context) -> Result<Verdict, CliError> {
    let p = section(&ctx.loaded.config.invariant, "invariant")?;
    if p.inits.is_empty() {
        return Err(CliError::Config(
            "invariant.inits must list at least one initial condition".into(),
        ));
    }
    let model = ctx.loaded.model()?;
    let grid = ctx.loaded.grid(model.dim())?;
    let cfg = InvariantConfig {
        inits: p.inits.iter().map(|c| (c.x.clone(), c.i)).collect(),
        times: p.times.clone(),
        delta: p.delta,
        paths: p.paths,
        seed: ctx.seed,
        probe_shift: p.probe_shift,
        cap: p.cap,
    };
    for (x, i) in &cfg.inits {
        model.check_state(x, *i)?;
    }
    let experiments = cfg
        .inits
        .iter()
        .enumerate()
        .map(|(k, (x0, i0))| {
            let seed = child_seed(ctx.seed, &format!("invariant:{x0:?}:{i0}"), 0);
            Experiment::new(&format!("init_{}", k + 1), seed, &["drive", "brownian"], cfg.paths)
        })
        .collect();
    let mut run = Run::begin(
        &ctx.out,
        "invariant",
        &ctx.loaded.hash,
        ctx.seed,
        experiments,
        &["invariant.csv", "invariant.json"],
    )?;
    let report = invariant_convergence(&model, &grid, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let final_distances: Vec<f64> = report.distances.iter().filter_map(|d| d.last().copied()).collect();
    let csv = report.to_csv();
    print!("{csv}");
    run.write("invariant.csv", &csv)?;
    let over: Vec<f64> = final_distances
        .iter()
        .copied()
        .filter(|&d| !(d < p.threshold))
        .collect();
    let output = InvariantOutput {
        strictly_decreasing: report.strictly_decreasing(),
        report,
        threshold: p.threshold,
        final_distances,
    };
    run.write_json("invariant.json", &output)?;
    report_missing(run.finish()?)?;
    Ok(if over.is_empty() {
        Verdict::Success
    } else {
        Verdict::Threshold(format!("final-time distances {over:?} not below {}", p.threshold))
    })
}
