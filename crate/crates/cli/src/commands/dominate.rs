use rsdp::dominate::{
    build_dominating, domination_check, eta_bar, exp_functional_chain, feynman_kac, feynman_kac_decay,
    DominatingMatrix, DominationConfig, DominationReport, Orientation,
};
use rsdp::model::check_birth_death;
use rsdp::rng::child_seed;
use rsdp::stats::{linear_fit, Estimate};
use serde::Serialize;

use super::{csv_line, opt, report_missing, Context};
use crate::config::{require_paths, section};
use crate::error::{CliError, Verdict};
use crate::manifest::{Experiment, Run};

#[derive(Debug, Serialize)]
struct Row {
    t: f64,
    feynman_kac: f64,
    chain: Estimate,
    /// `(chain − oracle) / se`.
    z: Option<f64>,
    model: DominationReport,
}

#[derive(Debug, Serialize)]
struct DominateOutput {
    dominating: DominatingMatrix,
    lambda: Vec<f64>,
    eta_bar: f64,
    /// Decay exponent of the oracle curve over `times`.
    oracle_decay: Option<f64>,
    /// Decay exponent fitted to the Monte Carlo chain curve.
    chain_decay: Option<f64>,
    violations: usize,
    events_checked: usize,
    identical_paths: usize,
    functional_exceedances: usize,
    rows: Vec<Row>,
}

fn condition_error(dm: &DominatingMatrix) -> CliError {
    let witness = dm
        .witness
        .as_ref()
        .map(|w| format!(" (witness x = {:?})", w.x))
        .unwrap_or_default();
    CliError::Assumption(format!("domination condition fails: {}{witness}", dm.condition))
}

pub fn run(ctx: &Context) -> Result<Verdict, CliError> {
    let p = section(&ctx.loaded.config.dominate, "dominate")?;
    require_paths(p.paths, "dominate.paths")?;
    let chain_paths = p.chain_paths.unwrap_or(p.paths);
    require_paths(chain_paths, "dominate.chain_paths")?;
    if p.times.is_empty() || p.times.iter().any(|&t| !(t > 0.0)) {
        return Err(CliError::Config("dominate.times must be nonempty and positive".into()));
    }
    let model = ctx.loaded.model()?;
    model.check_state(&p.x0, p.i0)?;
    let grid = ctx.loaded.grid(model.dim())?;
    let lambda = p
        .lambda
        .clone()
        .or_else(|| model.constants().alpha.clone())
        .ok_or_else(|| CliError::Config("set dominate.lambda or declare constants.alpha".into()))?;
    let bd = check_birth_death(&model, &grid);
    if !bd.is_birth_death {
        return Err(CliError::Assumption(
            bd.note.unwrap_or_else(|| "rates are not birth-death".into()),
        ));
    }
    let orientation = Orientation::from_weights(&lambda)?;
    let dm = build_dominating(&model, &grid, orientation)?;
    if !dm.condition_holds {
        return Err(condition_error(&dm));
    }
    let sb = eta_bar(&dm, &lambda)?;
    let chain_seed = child_seed(ctx.seed, "chain", 0);
    let experiments = vec![
        Experiment::new("domination", ctx.seed, &["drive", "brownian"], p.paths),
        Experiment::new("chain_functional", chain_seed, &["drive"], chain_paths),
    ];
    let mut run = Run::begin(
        &ctx.out,
        "dominate",
        &ctx.loaded.hash,
        ctx.seed,
        experiments,
        &["dominate.json", "feynman_kac.csv"],
    )?;

    let rate = model.m().max(dm.total_rate());
    let mut rows = Vec::new();
    for &t in &p.times {
        let cfg = DominationConfig {
            horizon: t,
            delta: p.delta,
            paths: p.paths,
            seed: ctx.seed,
            x0: p.x0.clone(),
            i0: p.i0,
            lambda: lambda.clone(),
        };
        let report = domination_check(&model, &dm, &cfg)?;
        let fk = feynman_kac(dm.n, &dm.q, &lambda, t, p.i0)?;
        let chain = exp_functional_chain(&dm, &lambda, t, chain_paths, chain_seed, p.i0, rate)?;
        let z = (chain.std_error > 0.0).then(|| (chain.mean - fk) / chain.std_error);
        rows.push(Row {
            t,
            feynman_kac: fk,
            chain,
            z,
            model: report,
        });
    }
    let oracle_decay = feynman_kac_decay(dm.n, &dm.q, &lambda, p.i0, &p.times)
        .ok()
        .map(|f| -f.slope);
    let logs: Vec<f64> = rows.iter().map(|r| r.chain.mean.ln()).collect();
    let chain_decay = linear_fit(&p.times, &logs).map(|f| -f.slope);

    let violations: usize = rows.iter().map(|r| r.model.violations).sum();
    let exceedances: usize = rows.iter().map(|r| r.model.functional_exceedances).sum();
    let worst_z = rows.iter().filter_map(|r| r.z).map(f64::abs).fold(0.0, f64::max);
    let mut failures = Vec::new();
    if violations > 0 {
        failures.push(format!("{violations} domination violations"));
    }
    if exceedances > 0 {
        failures.push(format!(
            "{exceedances} paths with the model functional above the chain's"
        ));
    }
    if worst_z > p.max_z {
        failures.push(format!("chain estimate {worst_z:.2} standard errors from the oracle"));
    }

    let mut csv = String::from("t,feynman_kac,chain_mean,chain_se,z,model_mean,model_se,violations,identical_paths\n");
    for r in &rows {
        csv.push_str(&csv_line(&[
            r.t.to_string(),
            r.feynman_kac.to_string(),
            r.chain.mean.to_string(),
            r.chain.std_error.to_string(),
            opt(r.z),
            r.model.model_functional.mean.to_string(),
            r.model.model_functional.std_error.to_string(),
            r.model.violations.to_string(),
            r.model.identical_paths.to_string(),
        ]));
    }
    println!("orientation: {:?}  eta_bar = {}", dm.orientation, sb.eta);
    print!("{csv}");

    let identical_paths = rows.last().map_or(0, |r| r.model.identical_paths);
    let output = DominateOutput {
        violations,
        events_checked: rows.iter().map(|r| r.model.events_checked).sum(),
        identical_paths,
        functional_exceedances: exceedances,
        dominating: dm,
        lambda,
        eta_bar: sb.eta,
        oracle_decay,
        chain_decay,
        rows,
    };
    println!(
        "violations: {}  identical paths at t = {}: {}/{}",
        output.violations,
        last_t(&p.times),
        output.identical_paths,
        p.paths
    );
    run.write("feynman_kac.csv", &csv)?;
    run.write_json("dominate.json", &output)?;
    report_missing(run.finish()?)?;
    Ok(if failures.is_empty() {
        Verdict::Success
    } else {
        Verdict::Threshold(failures.join("; "))
    })
}

fn last_t(times: &[f64]) -> f64 {
    times[times.len() - 1]
}
