//! Reflection coupling of two copies, meeting times, and the fixed-environment
//! coupling-time bound.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dominate::{alpha_bound, build_dominating, Orientation};
use crate::integrate::simulate_states;
use crate::linalg::{dot, matvec, norm};
use crate::model::{GridSpec, RsdpModel};
use crate::parallel::try_map_indexed;
use crate::quadrature::{composite_gauss, integrate, integrate_to_infinity};
use crate::rng::{child_seed, stream, StreamRng};
use crate::skorokhod::{sample_drive_with, IntervalTable, PoissonDrive, SwitchPath};
use crate::stats::{linear_fit, Estimate, LinearFit, Outcome};
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// `I − 2uu*` for a unit vector `u`, row-major.
pub fn reflection_matrix(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut r = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            r[a * n + b] = f64::from(u8::from(a == b)) - 2.0 * u[a] * u[b];
        }
    }
    r
}

fn unit(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let r = norm(&z);
    (r > 0.0).then(|| z.iter().map(|v| v / r).collect())
}

/// Noise increments `(σx·dW, σy·(I − 2ūū*)·dW)` with `ū = (x − y)/|x − y|`;
/// synchronous `(σx·dW, σy·dW)` when `x = y`.
pub fn reflected_increment(x: &[f64], y: &[f64], sx: &[f64], sy: &[f64], dw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    matvec(n, sx, dw, &mut dx);
    match unit(x, y) {
        Some(u) => {
            let p = 2.0 * dot(&u, dw);
            let r: Vec<f64> = dw.iter().zip(&u).map(|(w, u)| w - p * u).collect();
            matvec(n, sy, &r, &mut dy);
        }
        None => matvec(n, sy, dw, &mut dy),
    }
    (dx, dy)
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// The stacked noise matrix `G = (σx ; σy(I − 2ūū*))`, `2n × n` row-major.
pub fn stacked_noise(x: &[f64], y: &[f64], sx: &[f64], sy: &[f64]) -> Vec<f64> {
    let n = x.len();
    let lower = match unit(x, y) {
        Some(u) => matmul(n, sy, &reflection_matrix(&u)),
        None => sy.to_vec(),
    };
    let mut g = sx.to_vec();
    g.extend(lower);
    g
}

/// The joint diffusion matrix `a(x,i,y,j) = [[σxσx*, c], [c*, σyσy*]]` with
/// `c = σx(I − 2ūū*)σy*`, `2n × 2n` row-major.
pub fn joint_covariance(x: &[f64], y: &[f64], sx: &[f64], sy: &[f64]) -> Vec<f64> {
    let n = x.len();
    let r = match unit(x, y) {
        Some(u) => reflection_matrix(&u),
        None => {
            let mut id = vec![0.0; n * n];
            for k in 0..n {
                id[k * n + k] = 1.0;
            }
            id
        }
    };
    let sxt = transpose(n, sx);
    let syt = transpose(n, sy);
    let axx = matmul(n, sx, &sxt);
    let ayy = matmul(n, sy, &syt);
    let c = matmul(n, &matmul(n, sx, &r), &syt);
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            a[i * m + j] = axx[i * n + j];
            a[i * m + n + j] = c[i * n + j];
            a[(n + i) * m + j] = c[j * n + i];
            a[(n + i) * m + n + j] = ayy[i * n + j];
        }
    }
    a
}

/// `(tr A, Ā, B)` for the pair: `A` is the covariance of `d(X − Y)`,
/// `Ā = ⟨ū, Aū⟩` and `B = ⟨x − y, b_x − b_y⟩`.
pub fn pair_diagnostics(x: &[f64], y: &[f64], bx: &[f64], by: &[f64], sx: &[f64], sy: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let r = match unit(x, y) {
        Some(u) => reflection_matrix(&u),
        None => return (0.0, 0.0, 0.0),
    };
    let d: Vec<f64> = sx.iter().zip(matmul(n, sy, &r)).map(|(a, b)| a - b).collect();
    let a = matmul(n, &d, &transpose(n, &d));
    let tr = (0..n).map(|k| a[k * n + k]).sum();
    let u = unit(x, y).unwrap_or_default();
    let mut au = vec![0.0; n];
    matvec(n, &a, &u, &mut au);
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let db: Vec<f64> = bx.iter().zip(by).map(|(a, b)| a - b).collect();
    (tr, dot(&u, &au), dot(&z, &db))
}

/// Which common regimes allow the pair to be glued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeetRule {
    /// Any `Λ = Λ′`.
    AnyRegime,
    /// Only `Λ = Λ′ = designated`.
    Designated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub delta: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub designated: usize,
    pub rule: MeetRule,
    pub seed: u64,
}

impl CouplingConfig {
    pub fn new(delta: f64, horizon: f64, seed: u64) -> Self {
        CouplingConfig {
            delta,
            horizon,
            epsilon: DEFAULT_EPSILON,
            designated: 1,
            rule: MeetRule::AnyRegime,
            seed,
        }
    }

    fn check(&self, model: &RsdpModel) -> Result<usize> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1)"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", "must be nonnegative"));
        }
        if !model.regimes().contains(self.designated) {
            return Err(Error::invalid("designated", "not a regime of the model"));
        }
        Ok((self.horizon / self.delta).round().max(1.0) as usize)
    }
}

/// Meeting times of one coupled path; `None` means censored at `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeetingTimes {
    pub tau: Option<f64>,
    /// Time the full pair `(X, Λ)`, `(Y, Λ′)` is glued.
    pub t: Option<f64>,
    /// Meeting time of the fixed-environment diffusion pair.
    pub t1: Option<f64>,
    pub horizon: f64,
}

/// One coupled path recorded on the step grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPair {
    pub delta: f64,
    pub dim: usize,
    /// `X(kδ)` and `Y(kδ)`, `(steps + 1) × dim`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: SwitchPath,
    pub lambda_prime: SwitchPath,
    pub drive_x: PoissonDrive,
    pub drive_y: PoissonDrive,
    pub coupled: bool,
    pub glue_time: Option<f64>,
}

/// Euler stepper for the reflected pair. Meeting inside a step is detected by the
/// segment's closest approach to 0 (`≤ ε`) or, failing that, by the Brownian-bridge
/// probability `exp(−2|Z₀||Z₁|/(Ā h))` that the radial part crossed 0.
struct Pair<'a> {
    model: &'a RsdpModel,
    eps: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    i: usize,
    j: usize,
    glued: bool,
    bx: Vec<f64>,
    by: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    dw: Vec<f64>,
    nx: Vec<f64>,
    ny: Vec<f64>,
}

impl<'a> Pair<'a> {
    fn new(model: &'a RsdpModel, eps: f64, x: &[f64], i: usize, y: &[f64], j: usize) -> Self {
        let n = model.dim();
        Pair {
            model,
            eps,
            x: x.to_vec(),
            y: y.to_vec(),
            i,
            j,
            glued: false,
            bx: vec![0.0; n],
            by: vec![0.0; n],
            sx: vec![0.0; n * n],
            sy: vec![0.0; n * n],
            dw: vec![0.0; n],
            nx: vec![0.0; n],
            ny: vec![0.0; n],
        }
    }

    fn distance(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn glue(&mut self) {
        for (a, b) in self.x.iter_mut().zip(self.y.iter_mut()) {
            let m = 0.5 * (*a + *b);
            *a = m;
            *b = m;
        }
        self.j = self.i;
        self.glued = true;
    }

    /// Advances the diffusion by `h`; returns the fraction of `h` at which the pair met.
    fn diffuse(&mut self, h: f64, rng: &mut StreamRng, may_meet: bool) -> Option<f64> {
        let n = self.x.len();
        let sq = h.sqrt();
        for w in self.dw.iter_mut() {
            *w = sq * rng.sample::<f64, _>(StandardNormal);
        }
        let coeffs = self.model.coeffs();
        coeffs.drift(&self.x, self.i, &mut self.bx);
        coeffs.diffusion(&self.x, self.i, &mut self.sx);
        matvec(n, &self.sx, &self.dw, &mut self.nx);
        if self.glued {
            for d in 0..n {
                self.x[d] += self.bx[d] * h + self.nx[d];
            }
            self.y.copy_from_slice(&self.x);
            return None;
        }
        coeffs.drift(&self.y, self.j, &mut self.by);
        coeffs.diffusion(&self.y, self.j, &mut self.sy);
        let z0: Vec<f64> = self.x.iter().zip(&self.y).map(|(a, b)| a - b).collect();
        let r0 = norm(&z0);
        let mut abar = 0.0;
        if r0 > 0.0 {
            let u: Vec<f64> = z0.iter().map(|v| v / r0).collect();
            let p = 2.0 * dot(&u, &self.dw);
            let refl: Vec<f64> = self.dw.iter().zip(&u).map(|(w, u)| w - p * u).collect();
            matvec(n, &self.sy, &refl, &mut self.ny);
            // Radial variance rate |(σx − σyR)* ū|².
            let sxt = transpose(n, &self.sx);
            let syt = transpose(n, &self.sy);
            let mut v1 = vec![0.0; n];
            let mut v2 = vec![0.0; n];
            matvec(n, &sxt, &u, &mut v1);
            matvec(n, &syt, &u, &mut v2);
            let q = 2.0 * dot(&u, &v2);
            abar = v1
                .iter()
                .zip(&v2)
                .zip(&u)
                .map(|((a, b), u)| (a - (b - q * u)).powi(2))
                .sum();
        } else {
            matvec(n, &self.sy, &self.dw, &mut self.ny);
        }
        for d in 0..n {
            self.x[d] += self.bx[d] * h + self.nx[d];
            self.y[d] += self.by[d] * h + self.ny[d];
        }
        let coin: f64 = rng.random();
        if !may_meet {
            return None;
        }
        let z1: Vec<f64> = self.x.iter().zip(&self.y).map(|(a, b)| a - b).collect();
        let dz: Vec<f64> = z1.iter().zip(&z0).map(|(a, b)| a - b).collect();
        let dd = dot(&dz, &dz);
        let s = if dd > 0.0 {
            (-dot(&z0, &dz) / dd).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let closest: Vec<f64> = z0.iter().zip(&dz).map(|(a, b)| a + s * b).collect();
        let met = norm(&closest) <= self.eps || (abar > 0.0 && coin < (-2.0 * r0 * norm(&z1) / (abar * h)).exp());
        if met {
            self.glue();
            Some(s)
        } else {
            None
        }
    }

    fn finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

struct PairRun {
    times: MeetingTimes,
    /// `|X − Y|²` at the recorded steps.
    sq: Vec<f64>,
    path: Option<CouplingPair>,
}

fn may_meet(rule: MeetRule, designated: usize, i: usize, j: usize) -> bool {
    i == j && (rule == MeetRule::AnyRegime || i == designated)
}

fn run_coupling(
    model: &RsdpModel,
    start: (&[f64], usize),
    other: (&[f64], usize),
    cfg: &CouplingConfig,
    steps: usize,
    index: u64,
    record: &[usize],
    keep: bool,
) -> Result<PairRun> {
    let horizon = steps as f64 * cfg.delta;
    let m = model.m();
    let drive_x = sample_drive_with(horizon, m, &mut stream(cfg.seed, "couple-drive-x", index));
    let drive_y = sample_drive_with(horizon, m, &mut stream(cfg.seed, "couple-drive-y", index));
    let mut rng = stream(cfg.seed, "couple-brownian", index);
    let mut pair = Pair::new(model, cfg.epsilon, start.0, start.1, other.0, other.1);
    let n_reg = model.n_regimes();
    let mut table_x = IntervalTable::empty(n_reg);
    let mut table_y = IntervalTable::empty(n_reg);
    let mut lam = SwitchPath::constant(start.1);
    let mut lam_p = SwitchPath::constant(other.1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sq = Vec::with_capacity(record.len());
    let mut next_rec = 0;
    let mut times = MeetingTimes {
        tau: None,
        t: None,
        t1: None,
        horizon,
    };
    let check_tau = |p: &Pair, t: f64, times: &mut MeetingTimes| {
        if times.tau.is_none() && p.i == cfg.designated && p.j == cfg.designated {
            times.tau = Some(t);
        }
    };
    check_tau(&pair, 0.0, &mut times);
    if may_meet(cfg.rule, cfg.designated, pair.i, pair.j) && pair.distance() <= cfg.epsilon {
        pair.glue();
        times.t = Some(0.0);
    }
    let (mut ex, mut ey) = (0, 0);
    for k in 0..=steps {
        while next_rec < record.len() && record[next_rec] == k {
            sq.push(if pair.glued { 0.0 } else { pair.distance().powi(2) });
            next_rec += 1;
        }
        if keep {
            xs.extend_from_slice(&pair.x);
            ys.extend_from_slice(&pair.y);
        }
        if k == steps {
            break;
        }
        let t1 = (k + 1) as f64 * cfg.delta;
        let mut t = k as f64 * cfg.delta;
        loop {
            let tx = drive_x.times.get(ex).copied().filter(|&s| s < t1);
            let ty = if pair.glued {
                None
            } else {
                drive_y.times.get(ey).copied().filter(|&s| s < t1)
            };
            let (te, from_x) = match (tx, ty) {
                (Some(a), Some(b)) => (a.min(b), a <= b),
                (Some(a), None) => (a, true),
                (None, Some(b)) => (b, false),
                (None, None) => (t1, true),
            };
            let h = te - t;
            if h > 0.0 {
                let meet = may_meet(cfg.rule, cfg.designated, pair.i, pair.j);
                let was_glued = pair.glued;
                if let Some(s) = pair.diffuse(h, &mut rng, meet && !was_glued) {
                    times.t = Some(t + s * h);
                }
                if !pair.finite() {
                    return Err(Error::Divergence {
                        time: te,
                        path: Some(index as usize),
                    });
                }
            }
            t = te;
            if tx.is_none() && ty.is_none() {
                break;
            }
            if from_x {
                table_x.rebuild(model.rates(), &pair.x)?;
                pair.i = table_x.apply(pair.i, drive_x.marks[ex]);
                ex += 1;
                if pair.glued {
                    pair.j = pair.i;
                }
            } else {
                table_y.rebuild(model.rates(), &pair.y)?;
                pair.j = table_y.apply(pair.j, drive_y.marks[ey]);
                ey += 1;
            }
            if keep {
                lam.push(te, pair.i);
                lam_p.push(te, pair.j);
            }
            check_tau(&pair, te, &mut times);
            if !pair.glued && may_meet(cfg.rule, cfg.designated, pair.i, pair.j) && pair.distance() <= cfg.epsilon {
                pair.glue();
                times.t = Some(te);
            }
        }
    }
    let path = keep.then(|| CouplingPair {
        delta: cfg.delta,
        dim: model.dim(),
        x: xs,
        y: ys,
        lambda: lam,
        lambda_prime: lam_p,
        drive_x,
        drive_y,
        coupled: pair.glued,
        glue_time: times.t,
    });
    Ok(PairRun { times, sq, path })
}

/// One reflection-coupled path from `(x, i)` and `(y, j)`, recorded on the step grid.
pub fn simulate_coupling(
    model: &RsdpModel,
    start: (&[f64], usize),
    other: (&[f64], usize),
    cfg: &CouplingConfig,
    index: u64,
) -> Result<(CouplingPair, MeetingTimes)> {
    model.check_state(start.0, start.1)?;
    model.check_state(other.0, other.1)?;
    let steps = cfg.check(model)?;
    let run = run_coupling(model, start, other, cfg, steps, index, &[], true)?;
    Ok((run.path.expect("path kept"), run.times))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub paths: usize,
    pub epsilon: f64,
    pub coupled: usize,
    pub coupled_fraction: f64,
    /// Over paths where `T` was realized.
    pub meet: Option<Estimate>,
    pub tau: Option<Estimate>,
    pub tau_censored: usize,
    /// Paths with both times realized and `τ > T`.
    pub tau_after_meet: usize,
}

fn realized(v: &[Option<f64>]) -> Option<Estimate> {
    let r: Vec<f64> = v.iter().flatten().copied().collect();
    (!r.is_empty()).then(|| Estimate::from_samples(&r))
}

/// Meeting times over `paths` coupled paths.
pub fn coupling_times(
    model: &RsdpModel,
    start: (&[f64], usize),
    other: (&[f64], usize),
    cfg: &CouplingConfig,
    paths: usize,
) -> Result<Vec<MeetingTimes>> {
    model.check_state(start.0, start.1)?;
    model.check_state(other.0, other.1)?;
    let steps = cfg.check(model)?;
    try_map_indexed(paths, |p| {
        run_coupling(model, start, other, cfg, steps, p as u64, &[], false).map(|r| r.times)
    })
}

pub fn coupling_experiment(
    model: &RsdpModel,
    start: (&[f64], usize),
    other: (&[f64], usize),
    cfg: &CouplingConfig,
    paths: usize,
) -> Result<CouplingStats> {
    if paths == 0 {
        return Err(Error::invalid("paths", "must be >= 1"));
    }
    let times = coupling_times(model, start, other, cfg, paths)?;
    Ok(summarize(&times, cfg.epsilon))
}

pub fn summarize(times: &[MeetingTimes], epsilon: f64) -> CouplingStats {
    let meet: Vec<Option<f64>> = times.iter().map(|m| m.t).collect();
    let tau: Vec<Option<f64>> = times.iter().map(|m| m.tau).collect();
    let coupled = meet.iter().filter(|t| t.is_some()).count();
    CouplingStats {
        paths: times.len(),
        epsilon,
        coupled,
        coupled_fraction: coupled as f64 / times.len().max(1) as f64,
        meet: realized(&meet),
        tau: realized(&tau),
        tau_censored: tau.iter().filter(|t| t.is_none()).count(),
        tau_after_meet: times
            .iter()
            .filter(|m| matches!((m.tau, m.t), (Some(a), Some(b)) if a > b))
            .count(),
    }
}

/// Empirical survival `P(τ ≥ t)` and the anchored exponential fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTail {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    /// Rate of the least-squares line through `log S(0) = 0`; `None` when no
    /// time `t > 0` has enough survivors.
    pub theta: Option<f64>,
    pub tolerance: f64,
    pub outcome: Outcome,
    pub tau: Option<Estimate>,
    pub censored: usize,
    pub dominating_irreducible: bool,
}

/// Minimum survivor count for a point to enter the fit.
pub const TAIL_MIN_SURVIVORS: usize = 10;

pub fn survival_curve(taus: &[Option<f64>], times: &[f64]) -> Vec<f64> {
    let n = taus.len().max(1) as f64;
    times
        .iter()
        .map(|&t| taus.iter().filter(|tau| tau.is_none_or(|s| s >= t)).count() as f64 / n)
        .collect()
}

/// Fits `θ̂` to `log S(t) ≈ −θ t` and checks `S(t) ≤ exp(−θ̂ t)·(1 + tolerance)` on the grid.
pub fn fit_tail(times: &[f64], survival: &[f64], paths: usize, tolerance: f64) -> (Option<f64>, Outcome) {
    let min = TAIL_MIN_SURVIVORS as f64 / paths.max(1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &s) in times.iter().zip(survival) {
        if t > 0.0 && s >= min {
            num += t * s.ln();
            den += t * t;
        }
    }
    if den == 0.0 {
        let zero = times.iter().zip(survival).all(|(&t, &s)| t == 0.0 || s == 0.0);
        return (None, if zero { Outcome::Vacuous } else { Outcome::Inconclusive });
    }
    let theta = -num / den;
    let ok = theta > 0.0
        && times
            .iter()
            .zip(survival)
            .all(|(&t, &s)| s <= (-theta * t).exp() * (1.0 + tolerance));
    (Some(theta), Outcome::from_bool(ok))
}

pub fn tau_tail(
    model: &RsdpModel,
    grid: &GridSpec,
    start: (&[f64], usize),
    other: (&[f64], usize),
    cfg: &CouplingConfig,
    paths: usize,
    curve_times: &[f64],
    tolerance: f64,
) -> Result<TauTail> {
    let dm = build_dominating(model, grid, Orientation::Standard)?;
    let times = coupling_times(model, start, other, cfg, paths)?;
    let taus: Vec<Option<f64>> = times.iter().map(|m| m.tau).collect();
    let survival = survival_curve(&taus, curve_times);
    let (theta, outcome) = fit_tail(curve_times, &survival, paths, tolerance);
    Ok(TauTail {
        times: curve_times.to_vec(),
        survival,
        theta,
        tolerance,
        outcome,
        tau: realized(&taus),
        censored: taus.iter().filter(|t| t.is_none()).count(),
        dominating_irreducible: dm.is_irreducible(),
    })
}

/// `τ` for two independent chains with constant generator `q` (row-major `N×N`),
/// simulated directly on the product chain with exponential clocks.
pub fn product_chain_tau(
    n: usize,
    q: &[f64],
    start: (usize, usize),
    designated: usize,
    paths: usize,
    seed: u64,
) -> Result<Estimate> {
    if q.len() != n * n || !(1..=n).contains(&start.0) || !(1..=n).contains(&start.1) {
        return Err(Error::invalid("q", "expected an N×N generator and regimes in 1..=N"));
    }
    let exit = |i: usize| -> f64 { (0..n).filter(|&j| j != i - 1).map(|j| q[(i - 1) * n + j]).sum() };
    let samples: Vec<f64> = try_map_indexed(paths, |p| -> Result<f64> {
        let mut rng = stream(seed, "product-chain", p as u64);
        let (mut a, mut b) = start;
        let mut t = 0.0;
        for _ in 0..10_000_000 {
            if a == designated && b == designated {
                return Ok(t);
            }
            let (ra, rb) = (exit(a), exit(b));
            let total = ra + rb;
            if total <= 0.0 {
                break;
            }
            t += rng.sample::<f64, _>(Exp1) / total;
            let mover = if rng.random::<f64>() * total < ra { 0 } else { 1 };
            let from = if mover == 0 { a } else { b };
            let mut u = rng.random::<f64>() * exit(from);
            let mut to = from;
            for j in 1..=n {
                if j == from {
                    continue;
                }
                let r = q[(from - 1) * n + (j - 1)];
                if u < r {
                    to = j;
                    break;
                }
                u -= r;
            }
            if mover == 0 {
                a = to;
            } else {
                b = to;
            }
        }
        Err(Error::Unsupported("designated pair is not reachable".into()))
    })?;
    Ok(Estimate::from_samples(&samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig {
    pub coupling: CouplingConfig,
    pub paths: usize,
    /// Record `E|X − Y|²` every this many steps.
    pub record_every: usize,
    pub fit_window: (f64, f64),
    /// Relative tolerance on `η_α`.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub mean_sq: Vec<f64>,
    pub std_error: Vec<f64>,
    pub initial: f64,
    pub fit: Option<LinearFit>,
    /// `−slope` of `log E|X − Y|²` over the fit window.
    pub rate: Option<f64>,
    /// `−slope` over the last third of the recorded curve with nonzero values.
    pub tail_rate: Option<f64>,
    pub eta_alpha: f64,
    pub outcome: Outcome,
    pub note: String,
}

fn log_fit(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<LinearFit> {
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= lo && t <= hi && v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    if t.len() < 3 {
        return None;
    }
    linear_fit(&t, &v)
}

/// Monte Carlo `t ↦ E|X(t) − Y(t)|²` under reflection coupling (glued pairs
/// contribute 0) and its fitted decay rate against `η_α`.
pub fn contraction_rate(
    model: &RsdpModel,
    grid: &GridSpec,
    start: (&[f64], usize),
    other: (&[f64], usize),
    cfg: &ContractionConfig,
) -> Result<ContractionReport> {
    model.check_state(start.0, start.1)?;
    model.check_state(other.0, other.1)?;
    if cfg.paths == 0 || cfg.record_every == 0 {
        return Err(Error::invalid("paths", "paths and record_every must be >= 1"));
    }
    let (_, sb) = alpha_bound(model, grid)?;
    let c = &cfg.coupling;
    let steps = c.check(model)?;
    let record: Vec<usize> = (0..=steps).step_by(cfg.record_every).collect();
    let times: Vec<f64> = record.iter().map(|&k| k as f64 * c.delta).collect();
    let runs = try_map_indexed(cfg.paths, |p| {
        run_coupling(model, start, other, c, steps, p as u64, &record, false).map(|r| r.sq)
    })?;
    let mut mean_sq = Vec::with_capacity(record.len());
    let mut std_error = Vec::with_capacity(record.len());
    for k in 0..record.len() {
        let col: Vec<f64> = runs.iter().map(|r| r[k]).collect();
        let e = Estimate::from_samples(&col);
        mean_sq.push(e.mean);
        std_error.push(e.std_error);
    }
    let fit = log_fit(&times, &mean_sq, cfg.fit_window.0, cfg.fit_window.1);
    let rate = fit.as_ref().map(|f| -f.slope);
    let last = times
        .iter()
        .zip(&mean_sq)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, _)| t)
        .fold(0.0, f64::max);
    let tail_rate = log_fit(&times, &mean_sq, 2.0 * last / 3.0, last).map(|f| -f.slope);
    let eta = sb.eta;
    let (outcome, note) = if eta <= 0.0 {
        (
            Outcome::Vacuous,
            format!("eta_alpha = {eta} <= 0: contraction bound vacuous"),
        )
    } else {
        match rate {
            None => (
                Outcome::Inconclusive,
                "fewer than 3 positive points in the fit window".into(),
            ),
            Some(r) => (
                Outcome::from_bool(r >= eta * (1.0 - cfg.tolerance)),
                format!("fitted rate {r} vs eta_alpha {eta}"),
            ),
        }
    };
    let initial = start.0.iter().zip(other.0).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(ContractionReport {
        times,
        mean_sq,
        std_error,
        initial,
        fit,
        rate,
        tail_rate,
        eta_alpha: eta,
        outcome,
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub delta: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub paths: usize,
    pub seed: u64,
    pub i0: usize,
    /// Initial points are `scale · e₁`.
    pub scales: Vec<f64>,
    /// Upper limit on max/min of the per-scale ratios.
    pub spread_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub x0_norm: f64,
    pub second_moment: Vec<f64>,
    pub sup_second_moment: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub times: Vec<f64>,
    pub rows: Vec<MomentRow>,
    /// max/min of the ratios `sup_t E|X|² / (1 + |x₀|²)`.
    pub spread: f64,
    pub eta_alpha: Option<f64>,
    pub outcome: Outcome,
    pub note: String,
}

/// `sup_t E|X(t)|² / (1 + |x₀|²)` for each initial scale.
pub fn moment_bound(model: &RsdpModel, grid: &GridSpec, cfg: &MomentConfig) -> Result<MomentReport> {
    if cfg.paths == 0 || cfg.record_every == 0 || cfg.scales.is_empty() {
        return Err(Error::invalid(
            "paths",
            "paths, record_every and scales must be nonempty",
        ));
    }
    let steps = (cfg.horizon / cfg.delta).round() as usize;
    let times: Vec<f64> = (0..=steps)
        .step_by(cfg.record_every)
        .map(|k| k as f64 * cfg.delta)
        .collect();
    let dim = model.dim();
    let mut rows = Vec::new();
    for (k, &scale) in cfg.scales.iter().enumerate() {
        let mut x0 = vec![0.0; dim];
        x0[0] = scale;
        let seed = child_seed(cfg.seed, "moment", k as u64);
        let states = try_map_indexed(cfg.paths, |p| {
            simulate_states(model, cfg.delta, &x0, cfg.i0, &times, seed, p as u64)
        })?;
        let second_moment: Vec<f64> = (0..times.len())
            .map(|t| states.iter().map(|s| dot(&s[t].0, &s[t].0)).sum::<f64>() / cfg.paths as f64)
            .collect();
        let sup = second_moment.iter().cloned().fold(0.0, f64::max);
        rows.push(MomentRow {
            x0_norm: scale.abs(),
            ratio: sup / (1.0 + scale * scale),
            sup_second_moment: sup,
            second_moment,
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    let eta = alpha_bound(model, grid).ok().map(|(_, sb)| sb.eta);
    let (outcome, note) = match eta {
        Some(e) if e > 0.0 => (
            Outcome::from_bool(spread <= cfg.spread_limit),
            format!("ratio spread {spread} vs limit {}", cfg.spread_limit),
        ),
        Some(e) => (
            Outcome::NotApplicable,
            format!("bound not applicable: eta_alpha = {e} <= 0"),
        ),
        None => (
            Outcome::NotApplicable,
            "bound not applicable: A1 constants missing or unusable".into(),
        ),
    };
    Ok(MomentReport {
        times,
        rows,
        spread,
        eta_alpha: eta,
        outcome,
        note,
    })
}

/// Constants of the fixed-environment coupling-time bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingBoundParams {
    pub c2: f64,
    pub c3: f64,
    pub beta: f64,
    pub p: f64,
}

impl CouplingBoundParams {
    pub fn new(c2: f64, c3: f64, beta: f64, p: f64) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::Unsupported(format!(
                "coupling-time bound needs p > 2 (got p = {p})"
            )));
        }
        if !(c2 > 0.0) || !(c3 > 0.0) || !beta.is_finite() || !p.is_finite() {
            return Err(Error::invalid("a4", "need C2 > 0, C3 > 0 and finite beta, p"));
        }
        Ok(CouplingBoundParams { c2, c3, beta, p })
    }

    /// From the model's declared A3/A4 constants.
    pub fn from_model(model: &RsdpModel) -> Result<Self> {
        let k = model.constants();
        match (k.c2, k.a4) {
            (Some(c2), Some(a4)) => Self::new(c2, a4.c3, a4.beta, a4.p),
            _ => Err(Error::invalid(
                "a4",
                "A4 required: declare C2 and the A4 constants (beta, C3, p)",
            )),
        }
    }

    pub fn alpha(&self) -> f64 {
        4.0 * self.c2 * self.c2
    }

    pub fn gamma(&self, r: f64) -> f64 {
        (self.beta * r * r - self.c3 * r.powf(self.p)) / self.alpha()
    }

    /// `ψ(s + v) − ψ(s)` where `C = exp ψ`, computed from the offset `v` so that
    /// small offsets at large `s` keep their precision.
    fn log_c_step(&self, s: f64, v: f64) -> f64 {
        let a = self.alpha();
        let pow_diff = if s > 0.0 {
            s.powf(self.p) * (self.p * (v / s).ln_1p()).exp_m1()
        } else {
            v.powf(self.p)
        };
        self.beta * v * (2.0 * s + v) / (2.0 * a) - self.c3 * pow_diff / (self.p * a)
    }

    /// `C(r) = exp(∫₁ʳ γ(u)/u du)`.
    pub fn c(&self, r: f64) -> f64 {
        self.log_c_step(1.0, r - 1.0).exp()
    }

    /// `C(s)⁻¹ ∫_s^∞ C(u)/α du` by adaptive quadrature.
    pub fn inner(&self, s: f64) -> f64 {
        let slope = self.gamma(s.max(1e-300)) / s.max(1e-300);
        let width = 1.0 / slope.abs().max(1.0);
        integrate_to_infinity(|v| self.log_c_step(s, v).exp(), 0.0, width, 1e-10, 1e-16) / self.alpha()
    }

    fn inner_gauss(&self, s: f64) -> f64 {
        let mut w = 1.0;
        while self.log_c_step(s, w) > -60.0 || self.gamma(s + w) > 0.0 {
            w *= 2.0;
        }
        composite_gauss(|v| self.log_c_step(s, v).exp(), 0.0, w, 64, 20) / self.alpha()
    }
}

/// `−2F(r) = 2∫₀ʳ C(s)⁻¹ ∫_s^∞ C(u)/α(u) du ds` by adaptive Gauss–Kronrod.
pub fn coupling_time_bound(params: &CouplingBoundParams, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    2.0 * integrate(|s| params.inner(s), 0.0, r, 1e-10)
}

/// The same double integral by a fixed composite Gauss–Legendre rule.
pub fn coupling_time_bound_gauss(params: &CouplingBoundParams, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    2.0 * composite_gauss(|s| params.inner_gauss(s), 0.0, r, 64, 20)
}

/// `−2F(∞)`, finite because `p > 2`.
pub fn coupling_time_bound_limit(params: &CouplingBoundParams) -> f64 {
    2.0 * integrate_to_infinity(|s| params.inner(s), 0.0, 1.0, 1e-10, 1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEnvConfig {
    pub delta: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEnvReport {
    pub env: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance: f64,
    /// Mean of `T⁽¹⁾` with censored paths counted at the horizon.
    pub mean: Estimate,
    pub censored: usize,
    pub bound: f64,
    pub outcome: Outcome,
    pub note: String,
}

/// `T⁽¹⁾` for one reflected pair with both regimes frozen at `env`.
pub fn fixed_env_time(
    model: &RsdpModel,
    env: usize,
    x: &[f64],
    y: &[f64],
    cfg: &FixedEnvConfig,
    index: u64,
) -> Result<Option<f64>> {
    let steps = (cfg.horizon / cfg.delta).round().max(1.0) as usize;
    let mut pair = Pair::new(model, cfg.epsilon, x, env, y, env);
    if pair.distance() <= cfg.epsilon {
        return Ok(Some(0.0));
    }
    let mut rng = stream(cfg.seed, "fixed-env", index);
    for k in 0..steps {
        if let Some(s) = pair.diffuse(cfg.delta, &mut rng, true) {
            return Ok(Some((k as f64 + s) * cfg.delta));
        }
        if !pair.finite() {
            return Err(Error::Divergence {
                time: (k + 1) as f64 * cfg.delta,
                path: Some(index as usize),
            });
        }
    }
    Ok(None)
}

/// Empirical `E T⁽¹⁾` in the fixed environment against `−2F(|x − y|)`.
pub fn fixed_env_meeting(
    model: &RsdpModel,
    env: usize,
    x: &[f64],
    y: &[f64],
    cfg: &FixedEnvConfig,
) -> Result<FixedEnvReport> {
    model.check_state(x, env)?;
    model.check_state(y, env)?;
    if cfg.paths == 0 || !(cfg.delta > 0.0) || !(cfg.horizon > 0.0) {
        return Err(Error::invalid("paths", "need paths >= 1, delta > 0, horizon > 0"));
    }
    let params = CouplingBoundParams::from_model(model)?;
    let times = try_map_indexed(cfg.paths, |p| fixed_env_time(model, env, x, y, cfg, p as u64))?;
    let censored = times.iter().filter(|t| t.is_none()).count();
    let samples: Vec<f64> = times.iter().map(|t| t.unwrap_or(cfg.horizon)).collect();
    let mean = Estimate::from_samples(&samples);
    let distance = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let bound = coupling_time_bound(&params, distance);
    let (outcome, note) = if 2 * censored > cfg.paths {
        (Outcome::Inconclusive, "inconclusive; raise Tmax".to_string())
    } else {
        (
            Outcome::from_bool(mean.mean <= bound * (1.0 + cfg.tolerance)),
            format!("E T1 = {} vs bound {bound}", mean.mean),
        )
    };
    Ok(FixedEnvReport {
        env,
        x: x.to_vec(),
        y: y.to_vec(),
        distance,
        mean,
        censored,
        bound,
        outcome,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{A4Constants, CoefficientSet, DeclaredConstants, RateFunction, RegimeCoefficients};
    use rand::SeedableRng;

    fn linear_model(a: &[f64], s: f64, rates: RateFunction, alpha: bool) -> RsdpModel {
        let regs = a.iter().map(|&a| RegimeCoefficients::linear(1, a, s)).collect();
        let constants = DeclaredConstants {
            alpha: alpha.then(|| a.iter().map(|a| -2.0 * a).collect()),
            ..Default::default()
        };
        RsdpModel::new(rates, CoefficientSet::parametric(1, regs, constants).unwrap()).unwrap()
    }

    fn two_state(a: &[f64], s: f64) -> RsdpModel {
        linear_model(a, s, RateFunction::constant(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(), true)
    }

    fn cubic_model(c3: f64) -> RsdpModel {
        let reg = RegimeCoefficients {
            a: vec![0.0],
            c: vec![0.0],
            cubic: 1.0,
            sigma: vec![2f64.sqrt()],
        };
        let constants = DeclaredConstants {
            c2: Some(2f64.sqrt()),
            a4: Some(A4Constants {
                regime: 1,
                beta: 0.0,
                c3,
                p: 4.0,
            }),
            ..Default::default()
        };
        RsdpModel::new(
            RateFunction::constant(1, vec![0.0]).unwrap(),
            CoefficientSet::parametric(1, vec![reg], constants).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn synchronous_and_one_dimensional_reflection() {
        let (dx, dy) = reflected_increment(
            &[1.0, 2.0],
            &[1.0, 2.0],
            &[2.0, 0.0, 0.0, 2.0],
            &[2.0, 0.0, 0.0, 2.0],
            &[0.3, -0.1],
        );
        assert_eq!(dx, dy);
        let (dx, dy) = reflected_increment(&[1.0], &[-1.0], &[0.7], &[0.7], &[0.4]);
        assert_eq!(dx[0], 0.7 * 0.4);
        assert!((dy[0] + 0.7 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn stacked_noise_reproduces_joint_covariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            for _ in 0..50 {
                let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect() };
                let (x, y, sx, sy) = (draw(n), draw(n), draw(n * n), draw(n * n));
                let g = stacked_noise(&x, &y, &sx, &sy);
                let a = joint_covariance(&x, &y, &sx, &sy);
                let m = 2 * n;
                for r in 0..m {
                    for c in 0..m {
                        let ggt: f64 = (0..n).map(|k| g[r * n + k] * g[c * n + k]).sum();
                        assert!((ggt - a[r * m + c]).abs() < 1e-12);
                    }
                }
                let u = unit(&x, &y).unwrap();
                let rm = reflection_matrix(&u);
                let rr = matmul(n, &rm, &rm);
                for r in 0..n {
                    for c in 0..n {
                        assert_eq!(rm[r * n + c], rm[c * n + r]);
                        assert!((rr[r * n + c] - f64::from(u8::from(r == c))).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn diagnostics_lower_bound_matches_ellipticity() {
        // σ = s·I gives Ā = 4s² exactly.
        let (tr, abar, b) = pair_diagnostics(
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[-1.0, 0.0],
            &[0.0, -1.0],
            &[0.5, 0.0, 0.0, 0.5],
            &[0.5, 0.0, 0.0, 0.5],
        );
        assert!((abar - 1.0).abs() < 1e-12);
        assert!((tr - abar).abs() < 1e-12);
        assert!((b + 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_starts_meet_at_zero() {
        let m = two_state(&[1.0, 2.0], 1.0);
        let cfg = CouplingConfig::new(0.01, 1.0, 1);
        let (pair, t) = simulate_coupling(&m, (&[0.3], 1), (&[0.3], 1), &cfg, 0).unwrap();
        assert_eq!((t.t, t.tau), (Some(0.0), Some(0.0)));
        assert_eq!(pair.x, pair.y);
        assert_eq!(pair.lambda, pair.lambda_prime);
        let (_, t) = simulate_coupling(&m, (&[0.3], 2), (&[0.3], 2), &cfg, 0).unwrap();
        assert_eq!(t.t, Some(0.0));
        let (_, t) = simulate_coupling(&m, (&[-1.0], 1), (&[4.0], 1), &cfg, 0).unwrap();
        assert_eq!(t.tau, Some(0.0));
    }

    #[test]
    fn glued_pairs_never_separate() {
        let m = two_state(&[1.0, 2.0], 1.0);
        let cfg = CouplingConfig::new(0.01, 10.0, 5);
        let mut glued = 0;
        for p in 0..20 {
            let (pair, t) = simulate_coupling(&m, (&[-2.0], 1), (&[2.0], 2), &cfg, p).unwrap();
            let Some(tg) = t.t else { continue };
            glued += 1;
            let k0 = (tg / cfg.delta).floor() as usize + 1;
            assert_eq!(pair.x[k0..], pair.y[k0..]);
            for k in 0..200 {
                let s = tg + k as f64 * 0.05;
                assert_eq!(pair.lambda.regime_at(s), pair.lambda_prime.regime_at(s));
            }
            for &(s, _) in &pair.lambda.switches {
                assert!(pair.drive_x.times.contains(&s));
            }
        }
        assert!(glued >= 15);
    }

    #[test]
    fn tau_precedes_meeting_in_the_designated_environment() {
        let m = two_state(&[1.0, 2.0], 1.0);
        let mut cfg = CouplingConfig::new(0.01, 10.0, 9);
        cfg.rule = MeetRule::Designated;
        let times = coupling_times(&m, (&[-1.0], 2), (&[1.5], 1), &cfg, 300).unwrap();
        assert!(times.iter().filter(|t| t.t.is_some()).count() > 250);
        assert_eq!(summarize(&times, cfg.epsilon).tau_after_meet, 0);
    }

    #[test]
    fn tau_matches_product_chain() {
        let q = vec![-1.0, 1.0, 1.0, -1.0];
        let oracle = product_chain_tau(2, &q, (2, 2), 1, 20000, 3).unwrap();
        assert!((oracle.mean - 2.0).abs() < 3.0 * oracle.std_error);
        // Gluing only in the designated state keeps the two chains independent up to τ.
        let m = two_state(&[1.0, 1.0], 1.0);
        let mut cfg = CouplingConfig::new(0.02, 40.0, 4);
        cfg.rule = MeetRule::Designated;
        let stats = coupling_experiment(&m, (&[0.0], 2), (&[1.0], 2), &cfg, 4000).unwrap();
        let tau = stats.tau.unwrap();
        let se = (tau.std_error.powi(2) + oracle.std_error.powi(2)).sqrt();
        assert!(
            (tau.mean - oracle.mean).abs() < 3.0 * se,
            "{} vs {}",
            tau.mean,
            oracle.mean
        );
    }

    #[test]
    fn tail_fit_cases() {
        let times = [0.0, 1.0, 2.0];
        assert_eq!(fit_tail(&times, &[1.0, 0.0, 0.0], 100, 0.1), (None, Outcome::Vacuous));
        let s: Vec<f64> = times.iter().map(|t| (-0.5 * t).exp()).collect();
        let (theta, out) = fit_tail(&times, &s, 1000, 0.1);
        assert!((theta.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(out, Outcome::Holds);
    }

    #[test]
    fn contraction_of_identical_starts_is_zero() {
        let m = two_state(&[1.0, 2.0], 1.0);
        let cfg = ContractionConfig {
            coupling: CouplingConfig::new(0.01, 2.0, 1),
            paths: 20,
            record_every: 10,
            fit_window: (0.0, 1.0),
            tolerance: 0.2,
        };
        let r = contraction_rate(&m, &GridSpec::default(), (&[0.5], 1), (&[0.5], 1), &cfg).unwrap();
        assert!(r.mean_sq.iter().all(|&v| v == 0.0));
        assert_eq!(r.initial, 0.0);
    }

    #[test]
    fn single_regime_contraction() {
        // Z = X − Y solves dZ = −aZ dt + 2σ dW until it hits 0: E Z² decays like
        // e^{−2at} while |Z| ≫ σ/√a and like e^{−at} (killed OU) afterwards.
        let a = 1.0;
        let m = linear_model(&[a], 0.05, RateFunction::constant(1, vec![0.0]).unwrap(), true);
        let cfg = ContractionConfig {
            coupling: CouplingConfig::new(0.005, 3.0, 2),
            paths: 400,
            record_every: 10,
            fit_window: (0.0, 2.0),
            tolerance: 0.1,
        };
        let r = contraction_rate(&m, &GridSpec::default(), (&[-2.0], 1), (&[2.0], 1), &cfg).unwrap();
        assert_eq!(r.mean_sq[0], 16.0);
        assert!((r.eta_alpha - 2.0 * a).abs() < 1e-12);
        assert_eq!(r.outcome, Outcome::Holds, "{}", r.note);
    }

    #[test]
    fn killed_difference_decays_at_rate_a() {
        let a = 1.0;
        let m = linear_model(&[a], 1.0, RateFunction::constant(1, vec![0.0]).unwrap(), true);
        let cfg = ContractionConfig {
            coupling: CouplingConfig::new(0.002, 6.0, 3),
            paths: 4000,
            record_every: 50,
            fit_window: (2.0, 5.0),
            tolerance: 0.1,
        };
        let r = contraction_rate(&m, &GridSpec::default(), (&[-1.0], 1), (&[1.0], 1), &cfg).unwrap();
        let rate = r.rate.unwrap();
        assert!((rate - a).abs() < 0.25 * a, "rate {rate}");
    }

    #[test]
    fn deterministic_decay_moments() {
        let m = linear_model(
            &[1.0, 1.0],
            0.0,
            RateFunction::constant(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            true,
        );
        let cfg = MomentConfig {
            delta: 0.001,
            horizon: 2.0,
            record_every: 100,
            paths: 2,
            seed: 1,
            i0: 1,
            scales: vec![1.0, 10.0, 100.0],
            spread_limit: 5.0,
        };
        let r = moment_bound(&m, &GridSpec::default(), &cfg).unwrap();
        for row in &r.rows {
            assert!(row.ratio <= 1.0);
            let want = row.x0_norm.powi(2) * (-2.0f64 * 2.0).exp();
            assert!((row.second_moment.last().unwrap() - want).abs() < 0.01 * want);
        }
        assert_eq!(r.outcome, Outcome::Holds);
    }

    #[test]
    fn brownian_moments_are_not_bounded() {
        let m = linear_model(&[0.0], 1.0, RateFunction::constant(1, vec![0.0]).unwrap(), true);
        let cfg = MomentConfig {
            delta: 0.01,
            horizon: 4.0,
            record_every: 50,
            paths: 500,
            seed: 1,
            i0: 1,
            scales: vec![1.0],
            spread_limit: 5.0,
        };
        let r = moment_bound(&m, &GridSpec::default(), &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::NotApplicable);
        let curve = &r.rows[0].second_moment;
        assert!(curve.last().unwrap() > &(3.0 * curve[0]));
    }

    #[test]
    fn coupling_bound_quadratures_agree() {
        let p = CouplingBoundParams::new(1.0, 1.0, 0.0, 4.0).unwrap();
        assert_eq!(coupling_time_bound(&p, 0.0), 0.0);
        assert!((p.c(2.0) - (-(16.0f64 - 1.0) / 16.0).exp()).abs() < 1e-15);
        let gk = coupling_time_bound(&p, 1.0);
        let gl = coupling_time_bound_gauss(&p, 1.0);
        assert!(((gk - gl) / gl).abs() < 1e-6, "{gk} vs {gl}");
        let mut prev = 0.0;
        for k in 1..=20 {
            let v = coupling_time_bound(&p, 0.5 * k as f64);
            assert!(v >= prev);
            prev = v;
        }
        assert!(prev <= coupling_time_bound_limit(&p) + 1e-9);
        let wide = CouplingBoundParams::new(2f64.sqrt(), 0.25, 0.0, 4.0).unwrap();
        let limit = coupling_time_bound_limit(&wide);
        assert!(limit.is_finite() && limit > coupling_time_bound(&wide, 5.0));
        let q = CouplingBoundParams::new(1.0, 0.5, 1.0, 3.0).unwrap();
        let (gk, gl) = (coupling_time_bound(&q, 3.0), coupling_time_bound_gauss(&q, 3.0));
        assert!(((gk - gl) / gl).abs() < 1e-6);
        assert!(matches!(
            CouplingBoundParams::new(1.0, 1.0, 0.0, 2.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn fixed_environment_meeting_under_valid_constants() {
        let m = cubic_model(0.25);
        let cfg = FixedEnvConfig {
            delta: 1e-3,
            horizon: 20.0,
            paths: 400,
            seed: 8,
            epsilon: DEFAULT_EPSILON,
            tolerance: 0.05,
        };
        let same = fixed_env_meeting(&m, 1, &[0.4], &[0.4], &cfg).unwrap();
        assert_eq!(same.mean.mean, 0.0);
        let r = fixed_env_meeting(&m, 1, &[0.5], &[-0.5], &cfg).unwrap();
        assert_eq!(r.censored, 0);
        assert_eq!(r.outcome, Outcome::Holds, "{}", r.note);
        let missing = two_state(&[1.0, 2.0], 1.0);
        let err = fixed_env_meeting(&missing, 1, &[0.0], &[1.0], &cfg).unwrap_err();
        assert!(err.to_string().contains("A4 required"));
    }
}
