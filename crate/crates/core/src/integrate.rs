//! Euler–Maruyama with grid-frozen switching, strong error and switching mismatch.
//!
//! On each cell `[kδ, (k+1)δ)` the drift uses `(Y(kδ), Λ′(kδ))` and every drive
//! event in the cell switches `Λ′` with the interval table built at `Y(kδ)`.
//! With constant σ the path is stored as `Y(t) = x₀ + D(t) + σW(t)` where `D` is
//! the accumulated drift, piecewise linear on the grid. Paths that share one
//! Brownian path differ only through `D`, so `sup_t |Y_ref − Y_δ|` is attained
//! on the finest grid and is computed exactly there.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::matvec;
use crate::model::RsdpModel;
use crate::parallel::try_map_indexed;
use crate::rng::{stream, StreamRng};
use crate::skorokhod::{sample_drive, IntervalTable, PoissonDrive, SwitchPath};
use crate::stats::{linear_fit, Estimate, LinearFit};
use crate::{Error, Result};

/// Smallest path count accepted by the strong-error estimator.
pub const MIN_ERROR_PATHS: usize = 100;

/// Relative tolerance when checking that one step divides another.
const DIVIDES_TOL: f64 = 1e-9;

/// Uniform grid `kδ` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub delta: f64,
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(delta: f64, horizon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1)"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        let steps = ratio(horizon, delta)
            .ok_or_else(|| Error::invalid("delta", format!("{delta} does not divide the horizon {horizon}")))?;
        Ok(TimeGrid { delta, horizon, steps })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.delta
    }

    /// `t_δ = ⌊t/δ⌋δ`.
    pub fn floor(&self, t: f64) -> f64 {
        (t / self.delta).floor() * self.delta
    }

    /// Index of the cell containing `t`, clamped to the last cell.
    pub fn cell(&self, t: f64) -> usize {
        ((t / self.delta).floor() as usize).min(self.steps.saturating_sub(1))
    }
}

/// `a / b` when it is a positive integer up to rounding.
pub fn ratio(a: f64, b: f64) -> Option<usize> {
    let r = (a / b).round();
    (r >= 1.0 && (r * b - a).abs() <= DIVIDES_TOL * a.abs().max(b.abs())).then_some(r as usize)
}

/// Brownian increments on the finest grid with cumulative values.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dim: usize,
    pub dt: f64,
    pub steps: usize,
    /// `W(k·dt)`, `(steps + 1) × dim`, accumulated increment by increment.
    cumulative: Vec<f64>,
}

impl BrownianPath {
    pub fn sample(dim: usize, dt: f64, steps: usize, rng: &mut StreamRng) -> Self {
        let scale = dt.sqrt();
        let mut cumulative = vec![0.0; (steps + 1) * dim];
        for k in 0..steps {
            for d in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                cumulative[(k + 1) * dim + d] = cumulative[k * dim + d] + scale * z;
            }
        }
        BrownianPath {
            dim,
            dt,
            steps,
            cumulative,
        }
    }

    pub fn seeded(dim: usize, dt: f64, steps: usize, base: u64, index: u64) -> Self {
        Self::sample(dim, dt, steps, &mut stream(base, "brownian", index))
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// `W(k·dt)`.
    pub fn at(&self, k: usize) -> &[f64] {
        &self.cumulative[k * self.dim..(k + 1) * self.dim]
    }

    /// Sum of the finest increments on `[k0·dt, k1·dt)`, in order.
    pub fn increment(&self, k0: usize, k1: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in k0..k1 {
            for d in 0..self.dim {
                out[d] += self.cumulative[(k + 1) * self.dim + d] - self.cumulative[k * self.dim + d];
            }
        }
    }
}

/// One EM realization on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub delta: f64,
    pub horizon: f64,
    pub dim: usize,
    /// `Y(kδ)`, `(steps + 1) × dim`.
    pub x: Vec<f64>,
    /// Accumulated drift `D(kδ)`, same layout as `x`.
    pub drift: Vec<f64>,
    pub regimes: SwitchPath,
}

impl SamplePath {
    pub fn steps(&self) -> usize {
        self.x.len() / self.dim - 1
    }

    pub fn x_at(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps()).map(|k| k as f64 * self.delta)
    }

    /// `D(t)` at `t = m·(δ/r)` by linear interpolation inside the cell.
    #[inline]
    fn drift_fine(&self, m: usize, r: usize, d: usize) -> f64 {
        let k = m / r;
        let rem = m % r;
        let a = self.drift[k * self.dim + d];
        if rem == 0 {
            return a;
        }
        let b = self.drift[(k + 1) * self.dim + d];
        a + (b - a) * (rem as f64 / r as f64)
    }
}

/// The EM path on step `delta` driven by `drive` and `brownian`.
pub fn em_path(
    model: &RsdpModel,
    delta: f64,
    drive: &PoissonDrive,
    brownian: &BrownianPath,
    x0: &[f64],
    i0: usize,
) -> Result<SamplePath> {
    model.check_state(x0, i0)?;
    let sigma = model
        .coeffs()
        .constant_sigma()
        .ok_or_else(|| Error::Unsupported("the EM scheme needs a constant diffusion matrix".into()))?;
    let r = ratio(delta, brownian.dt).ok_or_else(|| {
        Error::invalid(
            "delta",
            format!("{delta} is not a multiple of the Brownian step {}", brownian.dt),
        )
    })?;
    if !brownian.steps.is_multiple_of(r) {
        return Err(Error::invalid("delta", "must divide the horizon"));
    }
    if brownian.dim != model.dim() {
        return Err(Error::invalid("brownian", "dimension mismatch"));
    }
    let dim = model.dim();
    let steps = brownian.steps / r;
    let mut x = Vec::with_capacity((steps + 1) * dim);
    let mut drift = vec![0.0; (steps + 1) * dim];
    x.extend_from_slice(x0);
    let mut regimes = SwitchPath::constant(i0);
    let mut table = IntervalTable::empty(model.n_regimes());
    let mut b = vec![0.0; dim];
    let mut sw = vec![0.0; dim];
    let mut i = i0;
    let mut ev = 0;
    let (times, marks) = (&drive.times, &drive.marks);
    for k in 0..steps {
        let t0 = k as f64 * delta;
        let t1 = (k + 1) as f64 * delta;
        let yk = &x[k * dim..(k + 1) * dim];
        model.coeffs().drift(yk, i, &mut b);
        // Events in [t0, t1) switch with the table frozen at Y(t0).
        let mut built = false;
        while ev < times.len() && times[ev] < t1 {
            if times[ev] >= t0 {
                if !built {
                    table.rebuild(model.rates(), yk)?;
                    built = true;
                }
                let j = table.apply(i, marks[ev]);
                if j != i {
                    regimes.push(times[ev], j);
                    i = j;
                }
            }
            ev += 1;
        }
        let w = brownian.at((k + 1) * r);
        matvec(dim, &sigma, w, &mut sw);
        for d in 0..dim {
            let dk = drift[k * dim + d] + b[d] * delta;
            drift[(k + 1) * dim + d] = dk;
            let v = x0[d] + dk + sw[d];
            if !v.is_finite() {
                return Err(Error::Divergence { time: t1, path: None });
            }
            x.push(v);
        }
    }
    Ok(SamplePath {
        delta,
        horizon: steps as f64 * delta,
        dim,
        x,
        drift,
        regimes,
    })
}

/// The truth proxy: the same scheme on the Brownian path's own step.
pub fn reference_path(
    model: &RsdpModel,
    drive: &PoissonDrive,
    brownian: &BrownianPath,
    x0: &[f64],
    i0: usize,
) -> Result<SamplePath> {
    em_path(model, brownian.dt, drive, brownian, x0, i0)
}

/// Pathwise comparison of a coarse path against the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDiscrepancy {
    /// `sup_{t ≤ T} |X_ref(t) − Y(t)|`.
    pub sup_error: f64,
    /// `∫₀ᵀ |X_ref(s) − Y(s)| ds` (trapezoid on the finest grid).
    pub integrated_error: f64,
    /// Measure of `{s ≤ T : Λ_ref(s) ≠ Λ′(s)}`.
    pub mismatch: f64,
}

/// Compares two paths built on one Brownian path; `fine.delta` must divide `coarse.delta`.
pub fn compare_paths(fine: &SamplePath, coarse: &SamplePath) -> Result<PathDiscrepancy> {
    let r = ratio(coarse.delta, fine.delta)
        .ok_or_else(|| Error::invalid("delta", "reference step must divide the coarse step"))?;
    let dim = fine.dim;
    let mut sup = 0.0f64;
    let mut integral = 0.0;
    let mut prev = 0.0;
    for m in 0..=fine.steps() {
        let mut e2 = 0.0;
        for d in 0..dim {
            let diff = fine.drift[m * dim + d] - coarse.drift_fine(m, r, d);
            e2 += diff * diff;
        }
        let e = e2.sqrt();
        sup = sup.max(e);
        if m > 0 {
            integral += 0.5 * (prev + e) * fine.delta;
        }
        prev = e;
    }
    Ok(PathDiscrepancy {
        sup_error: sup,
        integrated_error: integral,
        mismatch: fine.regimes.disagreement(&coarse.regimes, fine.horizon),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongErrorConfig {
    pub deltas: Vec<f64>,
    pub delta_ref: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub i0: usize,
}

impl StrongErrorConfig {
    pub fn check(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::invalid("deltas", "need at least one step size"));
        }
        for &d in &self.deltas {
            if ratio(d, self.delta_ref).is_none() {
                return Err(Error::invalid(
                    "delta_ref",
                    format!("{} does not divide delta = {d}", self.delta_ref),
                ));
            }
            TimeGrid::new(d, self.horizon)?;
        }
        TimeGrid::new(self.delta_ref, self.horizon)?;
        if self.paths < MIN_ERROR_PATHS {
            return Err(Error::invalid("paths", format!("need at least {MIN_ERROR_PATHS}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub delta: f64,
    pub error: Estimate,
    pub error_ci: (f64, f64),
    pub mismatch: Estimate,
    /// `∫₀ᵀ E|X(s) − Y(s)| ds`.
    pub integrated_error: Estimate,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    /// Fit of `log error` against `log δ`; `None` when undefined.
    pub slope: Option<LinearFit>,
    pub slope_note: Option<String>,
}

impl ErrorReport {
    pub fn errors_strictly_decreasing(&self) -> bool {
        let mut rows: Vec<&ErrorRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        rows.windows(2).all(|w| w[1].error.mean < w[0].error.mean)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,error_mean,error_ci_lo,error_ci_hi,mismatch,paths\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.delta, r.error.mean, r.error_ci.0, r.error_ci.1, r.mismatch.mean, r.paths
            ));
        }
        s
    }
}

/// Fits `log e = c + s·log δ`; undefined when fewer than 3 positive errors.
pub fn fit_order(deltas: &[f64], errors: &[f64]) -> (Option<LinearFit>, Option<String>) {
    if deltas.len() < 3 {
        return (None, Some("undefined: fewer than 3 step sizes".into()));
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return (None, Some("undefined: zero error".into()));
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    (linear_fit(&lx, &ly), None)
}

/// `E sup_{t≤T} |X − Y|`, mismatch and integrated error for each δ, on common random numbers.
pub fn strong_error(model: &RsdpModel, cfg: &StrongErrorConfig) -> Result<ErrorReport> {
    cfg.check()?;
    model.check_state(&cfg.x0, cfg.i0)?;
    let steps_ref = TimeGrid::new(cfg.delta_ref, cfg.horizon)?.steps;
    let per_path = try_map_indexed(cfg.paths, |p| -> Result<Vec<PathDiscrepancy>> {
        let drive = sample_drive(cfg.horizon, model.m(), cfg.seed, p as u64);
        let w = BrownianPath::seeded(model.dim(), cfg.delta_ref, steps_ref, cfg.seed, p as u64);
        let with_path = |e: Error| match e {
            Error::Divergence { time, .. } => Error::Divergence { time, path: Some(p) },
            other => other,
        };
        let fine = reference_path(model, &drive, &w, &cfg.x0, cfg.i0).map_err(with_path)?;
        cfg.deltas
            .iter()
            .map(|&d| {
                let coarse = em_path(model, d, &drive, &w, &cfg.x0, cfg.i0).map_err(with_path)?;
                compare_paths(&fine, &coarse)
            })
            .collect()
    })?;
    let rows: Vec<ErrorRow> = cfg
        .deltas
        .iter()
        .enumerate()
        .map(|(l, &delta)| {
            let col = |f: fn(&PathDiscrepancy) -> f64| -> Vec<f64> { per_path.iter().map(|p| f(&p[l])).collect() };
            let error = Estimate::from_samples(&col(|p| p.sup_error));
            ErrorRow {
                delta,
                error,
                error_ci: error.interval(1.96),
                mismatch: Estimate::from_samples(&col(|p| p.mismatch)),
                integrated_error: Estimate::from_samples(&col(|p| p.integrated_error)),
                paths: cfg.paths,
            }
        })
        .collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error.mean).collect();
    let (slope, slope_note) = fit_order(&cfg.deltas, &errs);
    Ok(ErrorReport {
        rows,
        slope,
        slope_note,
    })
}

/// `∫₀ᵀ P(Λ(s) ≠ Λ′(s)) ds` for one δ against the reference step.
pub fn mismatch_integral(model: &RsdpModel, delta: f64, cfg: &StrongErrorConfig) -> Result<Estimate> {
    let one = StrongErrorConfig {
        deltas: vec![delta],
        ..cfg.clone()
    };
    Ok(strong_error(model, &one)?.rows[0].mismatch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSample {
    pub s: f64,
    pub estimate: Estimate,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementCheck {
    pub delta: f64,
    pub c1: f64,
    pub samples: Vec<IncrementSample>,
    pub pass: bool,
}

/// Sub-steps per EM cell used to place the sample times `s` inside cells.
const INCREMENT_SUBSTEPS: usize = 8;

/// Checks `E|Y(s) − Y(s_δ)| ≤ 2C₁δ^{1/2}` at the last sub-step of four cells.
pub fn increment_check(
    model: &RsdpModel,
    delta: f64,
    horizon: f64,
    paths: usize,
    seed: u64,
    x0: &[f64],
    i0: usize,
) -> Result<IncrementCheck> {
    let c1 = model
        .constants()
        .c1
        .ok_or_else(|| Error::invalid("c1", "the increment bound needs a declared C1"))?;
    let grid = TimeGrid::new(delta, horizon)?;
    if paths == 0 {
        return Err(Error::invalid("paths", "must be >= 1"));
    }
    let dt = delta / INCREMENT_SUBSTEPS as f64;
    let fine_steps = grid.steps * INCREMENT_SUBSTEPS;
    let cells: Vec<usize> = (0..4).map(|q| (q * grid.steps) / 4).collect();
    let sigma = model
        .coeffs()
        .constant_sigma()
        .ok_or_else(|| Error::Unsupported("the EM scheme needs a constant diffusion matrix".into()))?;
    let dim = model.dim();
    let per_path = try_map_indexed(paths, |p| -> Result<Vec<f64>> {
        let drive = sample_drive(horizon, model.m(), seed, p as u64);
        let w = BrownianPath::seeded(dim, dt, fine_steps, seed, p as u64);
        let path = em_path(model, delta, &drive, &w, x0, i0)?;
        let mut dw = vec![0.0; dim];
        let mut sdw = vec![0.0; dim];
        Ok(cells
            .iter()
            .map(|&k| {
                let m0 = k * INCREMENT_SUBSTEPS;
                let m1 = m0 + INCREMENT_SUBSTEPS - 1;
                w.increment(m0, m1, &mut dw);
                matvec(dim, &sigma, &dw, &mut sdw);
                let frac = (INCREMENT_SUBSTEPS - 1) as f64 / INCREMENT_SUBSTEPS as f64;
                (0..dim)
                    .map(|d| {
                        let db = path.drift[(k + 1) * dim + d] - path.drift[k * dim + d];
                        let v = db * frac + sdw[d];
                        v * v
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    })?;
    let bound = 2.0 * c1 * delta.sqrt();
    let samples: Vec<IncrementSample> = cells
        .iter()
        .enumerate()
        .map(|(q, &k)| {
            let vals: Vec<f64> = per_path.iter().map(|v| v[q]).collect();
            let estimate = Estimate::from_samples(&vals);
            IncrementSample {
                s: (k as f64 + (INCREMENT_SUBSTEPS - 1) as f64 / INCREMENT_SUBSTEPS as f64) * delta,
                estimate,
                bound,
                pass: estimate.mean <= bound + 3.0 * estimate.std_error,
            }
        })
        .collect();
    Ok(IncrementCheck {
        delta,
        c1,
        pass: samples.iter().all(|s| s.pass),
        samples,
    })
}

/// EM on the fly, recording `(X(t), Λ(t))` at the requested grid-aligned times.
///
/// Unlike [`em_path`] the diffusion may depend on `(x, i)`; the Brownian and
/// drive streams are derived from `(seed, index)` as in the batch estimators.
pub fn simulate_states(
    model: &RsdpModel,
    delta: f64,
    x0: &[f64],
    i0: usize,
    times: &[f64],
    seed: u64,
    index: u64,
) -> Result<Vec<(Vec<f64>, usize)>> {
    model.check_state(x0, i0)?;
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let dim = model.dim();
    let mut out = Vec::with_capacity(times.len());
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut slots: Vec<Option<(Vec<f64>, usize)>> = vec![None; times.len()];
    let record_steps: Vec<usize> = times.iter().map(|&t| (t / delta).round() as usize).collect();
    let steps = (horizon / delta).round() as usize;
    let drive = sample_drive(steps as f64 * delta, model.m(), seed, index);
    let mut rng = stream(seed, "brownian", index);
    let mut x = x0.to_vec();
    let mut i = i0;
    let mut b = vec![0.0; dim];
    let mut s = vec![0.0; dim * dim];
    let mut dw = vec![0.0; dim];
    let mut sdw = vec![0.0; dim];
    let mut table = IntervalTable::empty(model.n_regimes());
    let sq = delta.sqrt();
    let mut ev = 0;
    let mut next = 0;
    for k in 0..=steps {
        while next < order.len() && record_steps[order[next]] == k {
            slots[order[next]] = Some((x.clone(), i));
            next += 1;
        }
        if k == steps {
            break;
        }
        let t1 = (k + 1) as f64 * delta;
        model.coeffs().drift(&x, i, &mut b);
        model.coeffs().diffusion(&x, i, &mut s);
        let mut built = false;
        while ev < drive.times.len() && drive.times[ev] < t1 {
            if !built {
                table.rebuild(model.rates(), &x)?;
                built = true;
            }
            i = table.apply(i, drive.marks[ev]);
            ev += 1;
        }
        for v in dw.iter_mut() {
            *v = sq * rng.sample::<f64, _>(StandardNormal);
        }
        matvec(dim, &s, &dw, &mut sdw);
        for d in 0..dim {
            x[d] += b[d] * delta + sdw[d];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                time: t1,
                path: Some(index as usize),
            });
        }
    }
    for slot in slots {
        out.push(slot.ok_or_else(|| Error::invalid("times", "must be nonnegative multiples of delta"))?);
    }
    Ok(out)
}
