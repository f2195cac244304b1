use rsdp::integrate::{simulate_states, TimeGrid};
use rsdp::rng::child_seed;
use rsdp::skorokhod::sample_drive;

use super::{csv_line, report_missing, Context};
use crate::config::section;
use crate::error::{CliError, Verdict};
use crate::manifest::{Experiment, Run};

pub fn run(ctx: &Context) -> Result<Verdict, CliError> {
    let p = section(&ctx.loaded.config.simulate, "simulate")?;
    let grid = TimeGrid::new(p.delta, p.horizon)?;
    let model = ctx.loaded.model()?;
    model.check_state(&p.x0, p.i0)?;
    let experiment = Experiment {
        name: format!("path_{}", p.path),
        seed: ctx.seed,
        tags: vec!["drive".into(), "brownian".into()],
        paths: 1,
        path_seeds: vec![child_seed(ctx.seed, "drive", p.path)],
    };
    let mut run = Run::begin(
        &ctx.out,
        "simulate",
        &ctx.loaded.hash,
        ctx.seed,
        vec![experiment],
        &["path.csv", "drive.csv"],
    )?;

    let times: Vec<f64> = (0..=grid.steps).map(|k| grid.time(k)).collect();
    let states = simulate_states(&model, p.delta, &p.x0, p.i0, &times, ctx.seed, p.path)?;
    let mut csv = String::from("t");
    for d in 1..=model.dim() {
        csv.push_str(&format!(",x{d}"));
    }
    csv.push_str(",regime\n");
    for (t, (x, i)) in times.iter().zip(&states) {
        let mut cells = vec![t.to_string()];
        cells.extend(x.iter().map(|v| v.to_string()));
        cells.push(i.to_string());
        csv.push_str(&csv_line(&cells));
    }
    run.write("path.csv", &csv)?;

    // The drive simulate_states consumed, for replay.
    let drive = sample_drive(grid.steps as f64 * p.delta, model.m(), ctx.seed, p.path);
    let mut buf = Vec::new();
    drive.write_csv(&mut buf)?;
    run.write("drive.csv", &String::from_utf8(buf).expect("ascii csv"))?;
    println!(
        "{} steps, {} drive events, final state {:?}",
        grid.steps,
        drive.len(),
        states.last()
    );
    report_missing(run.finish()?)?;
    Ok(Verdict::Success)
}
