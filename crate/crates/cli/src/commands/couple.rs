use rsdp::couple::{
    contraction_rate, coupling_time_bound_gauss, coupling_time_bound_limit, coupling_times, fit_tail,
    fixed_env_meeting, moment_bound, summarize, survival_curve, ContractionConfig, ContractionReport,
    CouplingBoundParams, CouplingConfig, CouplingStats, FixedEnvConfig, FixedEnvReport, MeetingTimes, MomentConfig,
    MomentReport,
};
use rsdp::rng::child_seed;
use rsdp::stats::Outcome;
use serde::Serialize;

use super::{csv_line, opt, report_missing, Context};
use crate::config::{require_paths, section};
use crate::error::{CliError, Verdict};
use crate::manifest::{Experiment, Run};

#[derive(Debug, Serialize)]
struct FixedEnvRow {
    report: FixedEnvReport,
    /// The same bound by the Gauss–Legendre rule.
    bound_gauss: f64,
    bound_relative_gap: f64,
}

#[derive(Debug, Serialize)]
struct Sensitivity {
    epsilon: f64,
    coupled_fraction: f64,
    meet_mean: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Tail {
    times: Vec<f64>,
    survival: Vec<f64>,
    theta: Option<f64>,
    tolerance: f64,
    outcome: Outcome,
}

#[derive(Debug, Serialize)]
struct CoupleOutput {
    bound_params: CouplingBoundParams,
    /// `−2F(∞)`.
    bound_limit: f64,
    env: usize,
    coupling: CouplingConfig,
    stats: CouplingStats,
    min_coupled_fraction: f64,
    /// The same paths rerun with the meeting threshold multiplied by 10.
    epsilon_sensitivity: Sensitivity,
    fixed_env: Vec<FixedEnvRow>,
    tail: Option<Tail>,
    contraction: Option<ContractionReport>,
    moments: Option<MomentReport>,
}

fn times_csv(times: &[MeetingTimes]) -> String {
    let mut s = String::from("path,meet,tau,fixed_env_meet\n");
    for (p, m) in times.iter().enumerate() {
        s.push_str(&csv_line(&[p.to_string(), opt(m.t), opt(m.tau), opt(m.t1)]));
    }
    s
}

pub fn run(ctx: &Context) -> Result<Verdict, CliError> {
    let p = section(&ctx.loaded.config.couple, "couple")?;
    require_paths(p.paths, "couple.paths")?;
    let model = ctx.loaded.model()?;
    model.check_state(&p.x, p.i)?;
    model.check_state(&p.y, p.j)?;
    let grid = ctx.loaded.grid(model.dim())?;
    let params = CouplingBoundParams::from_model(&model).map_err(|e| CliError::Assumption(e.to_string()))?;
    let env = match (p.env, model.constants().a4) {
        (Some(e), _) => e,
        (None, Some(a4)) => a4.regime,
        (None, None) => unreachable!("from_model requires A4"),
    };
    if !model.regimes().contains(env) {
        return Err(CliError::Config(format!("couple.env = {env} is not a regime")));
    }
    let coupling = CouplingConfig {
        delta: p.delta,
        horizon: p.horizon,
        epsilon: p.epsilon,
        designated: p.designated,
        rule: p.rule,
        seed: ctx.seed,
    };
    let fixed_seed = |k: usize| child_seed(ctx.seed, "fixed-env", k as u64);
    let contraction_seed = child_seed(ctx.seed, "contraction", 0);
    let moment_seed = child_seed(ctx.seed, "moments", 0);

    let tags = ["couple-drive-x", "couple-drive-y", "couple-brownian"];
    let mut experiments = vec![Experiment::new("coupling", ctx.seed, &tags, p.paths)];
    let mut outputs = vec!["couple.json", "couple_times.csv"];
    if let Some(f) = &p.fixed_env {
        require_paths(f.paths, "couple.fixed_env.paths")?;
        for k in 0..f.distances.len() {
            experiments.push(Experiment::new(
                &format!("fixed_env_{k}"),
                fixed_seed(k),
                &["fixed-env"],
                f.paths,
            ));
        }
        outputs.push("fixed_env.csv");
    }
    if p.tail.is_some() {
        outputs.push("tau_survival.csv");
    }
    if let Some(c) = &p.contraction {
        require_paths(c.paths, "couple.contraction.paths")?;
        experiments.push(Experiment::new("contraction", contraction_seed, &tags, c.paths));
        outputs.push("contraction.csv");
    }
    if let Some(m) = &p.moments {
        require_paths(m.paths, "couple.moments.paths")?;
        for k in 0..m.scales.len() {
            let seed = child_seed(moment_seed, "moment", k as u64);
            experiments.push(Experiment::new(
                &format!("moments_{k}"),
                seed,
                &["drive", "brownian"],
                m.paths,
            ));
        }
        outputs.push("moments.csv");
    }
    let mut run = Run::begin(&ctx.out, "couple", &ctx.loaded.hash, ctx.seed, experiments, &outputs)?;

    let start = (p.x.as_slice(), p.i);
    let other = (p.y.as_slice(), p.j);
    let times = coupling_times(&model, start, other, &coupling, p.paths)?;
    let stats = summarize(&times, p.epsilon);
    let coarse_cfg = CouplingConfig {
        epsilon: p.epsilon * 10.0,
        ..coupling.clone()
    };
    let coarse = summarize(
        &coupling_times(&model, start, other, &coarse_cfg, p.paths)?,
        coarse_cfg.epsilon,
    );
    let epsilon_sensitivity = Sensitivity {
        epsilon: coarse_cfg.epsilon,
        coupled_fraction: coarse.coupled_fraction,
        meet_mean: coarse.meet.map(|e| e.mean),
    };

    let mut fails = Vec::new();
    let mut inconclusive = Vec::new();
    if 2 * (stats.paths - stats.coupled) > stats.paths {
        inconclusive.push(format!(
            "{} of {} paths censored at Tmax = {}",
            stats.paths - stats.coupled,
            stats.paths,
            p.horizon
        ));
    } else if stats.coupled_fraction < p.min_coupled_fraction {
        fails.push(format!(
            "coupled fraction {} < {}",
            stats.coupled_fraction, p.min_coupled_fraction
        ));
    }

    let mut fixed_env = Vec::new();
    if let Some(f) = &p.fixed_env {
        let mut csv = String::from("distance,mean,se,censored,bound,bound_gauss,outcome\n");
        for (k, &r) in f.distances.iter().enumerate() {
            let mut x = vec![0.0; model.dim()];
            let mut y = vec![0.0; model.dim()];
            x[0] = r / 2.0;
            y[0] = -r / 2.0;
            let cfg = FixedEnvConfig {
                delta: f.delta,
                horizon: f.horizon,
                paths: f.paths,
                seed: fixed_seed(k),
                epsilon: p.epsilon,
                tolerance: f.tolerance,
            };
            let report = fixed_env_meeting(&model, env, &x, &y, &cfg)?;
            let bound_gauss = coupling_time_bound_gauss(&params, r);
            match report.outcome {
                Outcome::Fails => fails.push(format!("fixed environment at |x - y| = {r}: {}", report.note)),
                Outcome::Inconclusive => {
                    inconclusive.push(format!("fixed environment at |x - y| = {r}: {}", report.note))
                }
                _ => {}
            }
            csv.push_str(&csv_line(&[
                r.to_string(),
                report.mean.mean.to_string(),
                report.mean.std_error.to_string(),
                report.censored.to_string(),
                report.bound.to_string(),
                bound_gauss.to_string(),
                format!("{:?}", report.outcome),
            ]));
            fixed_env.push(FixedEnvRow {
                bound_relative_gap: (report.bound - bound_gauss).abs() / report.bound.abs().max(f64::MIN_POSITIVE),
                bound_gauss,
                report,
            });
        }
        run.write("fixed_env.csv", &csv)?;
    }

    let tail = p.tail.as_ref().map(|t| {
        let taus: Vec<Option<f64>> = times.iter().map(|m| m.tau).collect();
        let survival = survival_curve(&taus, &t.times);
        let (theta, outcome) = fit_tail(&t.times, &survival, p.paths, t.tolerance);
        Tail {
            times: t.times.clone(),
            survival,
            theta,
            tolerance: t.tolerance,
            outcome,
        }
    });
    if let Some(t) = &tail {
        if t.outcome == Outcome::Fails {
            fails.push(format!("tau survival exceeds exp(-theta t)(1 + {})", t.tolerance));
        }
        let mut csv = String::from("t,survival,envelope\n");
        for (&s, &v) in t.times.iter().zip(&t.survival) {
            let env = t.theta.map(|th| (-th * s).exp() * (1.0 + t.tolerance));
            csv.push_str(&csv_line(&[s.to_string(), v.to_string(), opt(env)]));
        }
        run.write("tau_survival.csv", &csv)?;
    }

    let contraction = match &p.contraction {
        None => None,
        Some(c) => {
            let cfg = ContractionConfig {
                coupling: CouplingConfig {
                    horizon: c.horizon,
                    seed: contraction_seed,
                    ..coupling.clone()
                },
                paths: c.paths,
                record_every: c.record_every,
                fit_window: c.fit_window,
                tolerance: c.tolerance,
            };
            let report = contraction_rate(&model, &grid, start, other, &cfg)?;
            if report.outcome == Outcome::Fails {
                fails.push(format!("contraction: {}", report.note));
            }
            let mut csv = String::from("t,mean_sq,se\n");
            for ((t, m), s) in report.times.iter().zip(&report.mean_sq).zip(&report.std_error) {
                csv.push_str(&csv_line(&[t.to_string(), m.to_string(), s.to_string()]));
            }
            run.write("contraction.csv", &csv)?;
            Some(report)
        }
    };

    let moments = match &p.moments {
        None => None,
        Some(m) => {
            let cfg = MomentConfig {
                delta: m.delta,
                horizon: m.horizon,
                record_every: m.record_every,
                paths: m.paths,
                seed: moment_seed,
                i0: m.i0,
                scales: m.scales.clone(),
                spread_limit: m.spread_limit,
            };
            let report = moment_bound(&model, &grid, &cfg)?;
            if report.outcome == Outcome::Fails {
                fails.push(format!("moments: {}", report.note));
            }
            let mut csv = String::from("t");
            for r in &report.rows {
                csv.push_str(&format!(",x0_{}", r.x0_norm));
            }
            csv.push('\n');
            for (k, t) in report.times.iter().enumerate() {
                let mut cells = vec![t.to_string()];
                cells.extend(report.rows.iter().map(|r| r.second_moment[k].to_string()));
                csv.push_str(&csv_line(&cells));
            }
            run.write("moments.csv", &csv)?;
            Some(report)
        }
    };

    println!(
        "coupled {}/{} (fraction {}) by Tmax = {}; with epsilon x 10: {}",
        stats.coupled, stats.paths, stats.coupled_fraction, p.horizon, epsilon_sensitivity.coupled_fraction
    );
    if let Some(m) = &stats.meet {
        println!("E T (coupled paths) = {} +/- {}", m.mean, m.std_error);
    }
    if let Some(t) = &stats.tau {
        println!(
            "E tau (realized) = {} +/- {}, censored {}",
            t.mean, t.std_error, stats.tau_censored
        );
    }
    for row in &fixed_env {
        let r = &row.report;
        println!(
            "fixed env |x - y| = {}: E T1 = {} +/- {} vs bound {} ({:?})",
            r.distance, r.mean.mean, r.mean.std_error, r.bound, r.outcome
        );
    }

    run.write("couple_times.csv", &times_csv(&times))?;
    let output = CoupleOutput {
        bound_limit: coupling_time_bound_limit(&params),
        bound_params: params,
        env,
        coupling,
        stats,
        min_coupled_fraction: p.min_coupled_fraction,
        epsilon_sensitivity,
        fixed_env,
        tail,
        contraction,
        moments,
    };
    run.write_json("couple.json", &output)?;
    report_missing(run.finish()?)?;
    Ok(if !fails.is_empty() {
        Verdict::Threshold(fails.join("; "))
    } else if !inconclusive.is_empty() {
        Verdict::Inconclusive(format!("{}; raise Tmax", inconclusive.join("; ")))
    } else {
        Verdict::Success
    })
}
