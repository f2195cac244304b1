use rsdp::couple::CouplingBoundParams;
use rsdp::dominate::{alpha_bound, build_dominating, eta_bar, Orientation};
use rsdp::model::{validate_model, AssumptionReport, Status};
use serde::Serialize;

use super::{report_missing, Context};
use crate::error::{CliError, Verdict};
use crate::manifest::Run;

#[derive(Debug, Serialize)]
struct CheckOutput {
    report: AssumptionReport,
    h: f64,
    c_q: f64,
    m: f64,
    eta_bar: Option<f64>,
    eta_bar_note: Option<String>,
    eta_alpha: Option<f64>,
    eta_alpha_note: Option<String>,
    /// Set when a `[couple]` section is present but the A4 constants are not usable.
    a4_required: Option<String>,
    failures: Vec<String>,
}

pub fn run(ctx: &Context) -> Result<Verdict, CliError> {
    let model = ctx.loaded.model()?;
    let grid = ctx.loaded.grid(model.dim())?;
    let mut run = Run::begin(
        &ctx.out,
        "check",
        &ctx.loaded.hash,
        ctx.seed,
        Vec::new(),
        &["check.json"],
    )?;
    let report = validate_model(&model, &grid)?;

    let lambda = ctx
        .loaded
        .config
        .dominate
        .as_ref()
        .and_then(|d| d.lambda.clone())
        .or_else(|| model.constants().alpha.clone());
    let (eta_bar_value, eta_bar_note) = match &lambda {
        None => (
            None,
            Some("no weights: set dominate.lambda or constants.alpha".to_string()),
        ),
        Some(l) => match Orientation::from_weights(l)
            .and_then(|o| build_dominating(&model, &grid, o))
            .and_then(|dm| eta_bar(&dm, l))
        {
            Ok(sb) => (Some(sb.eta), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    let (eta_alpha, eta_alpha_note) = match alpha_bound(&model, &grid) {
        Ok((_, sb)) => (Some(sb.eta), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let a4_required = match (&ctx.loaded.config.couple, CouplingBoundParams::from_model(&model)) {
        (Some(_), Err(e)) => Some(e.to_string()),
        _ => None,
    };

    let mut failures: Vec<String> = report
        .failures()
        .iter()
        .map(|v| {
            let why = v
                .note
                .clone()
                .or_else(|| v.witness.as_ref().map(|w| format!("{} at x = {:?}", w.note, w.x)))
                .unwrap_or_else(|| "failed".into());
            format!("{}: {why}", v.assumption)
        })
        .collect();
    if let Some(msg) = &a4_required {
        failures.push(msg.clone());
    }

    let b = &report.bounds;
    println!(
        "model: {} (dim {}, {} regimes)",
        ctx.loaded.model_path.display(),
        model.dim(),
        model.n_regimes()
    );
    println!("grid: [{}, {}] x {} points per axis", grid.lo, grid.hi, grid.points);
    for v in &report.verdicts {
        let status = match v.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped",
        };
        let declared = if v.declared { " (declared)" } else { "" };
        print!("  {:<6} {status}{declared}", v.assumption.name());
        if let Some(note) = &v.note {
            print!("  {note}");
        }
        if let Some(w) = &v.witness {
            print!("  witness x = {:?}", w.x);
        }
        println!();
    }
    println!("H = {}  c_q = {}  M = {}", b.h, b.c_q, b.m);
    match eta_bar_value {
        Some(e) => println!("eta_bar = {e}"),
        None => println!("eta_bar unavailable: {}", eta_bar_note.as_deref().unwrap_or("")),
    }
    match eta_alpha {
        Some(e) => println!("eta_alpha = {e}"),
        None => println!("eta_alpha unavailable: {}", eta_alpha_note.as_deref().unwrap_or("")),
    }

    let verdict = if failures.is_empty() {
        Verdict::Success
    } else {
        Verdict::Assumption(failures.join("; "))
    };
    let output = CheckOutput {
        h: b.h,
        c_q: b.c_q,
        m: b.m,
        report,
        eta_bar: eta_bar_value,
        eta_bar_note,
        eta_alpha,
        eta_alpha_note,
        a4_required,
        failures,
    };
    run.write_json("check.json", &output)?;
    report_missing(run.finish()?)?;
    Ok(verdict)
}
