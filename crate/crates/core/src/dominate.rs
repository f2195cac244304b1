//! The state-independent dominating chain and spectral decay of exponential functionals.

use serde::{Deserialize, Serialize};

use crate::integrate::{em_path, BrownianPath, TimeGrid};
use crate::linalg::{expm_times_ones, spectral_abscissa, spectral_abscissa_2x2, to_dmatrix};
use crate::model::{check_birth_death, GridSpec, RsdpModel, Witness, CONSTANCY_TOL};
use crate::parallel::{map_indexed, try_map_indexed};
use crate::skorokhod::{evolve_fixed, sample_drive, IntervalTable, PoissonDrive, SwitchPath};
use crate::stats::{exp_mean_from_logs, linear_fit, Estimate, LinearFit};
use crate::{Error, Result};

/// Which way the bounds are taken.
///
/// `Standard` (nondecreasing weights) uses `sup` upward and `inf` downward rates
/// and dominates from above; `Reversed` (nonincreasing weights, two regimes)
/// swaps them and dominates from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Standard,
    Reversed,
}

impl Orientation {
    /// Orientation matching the monotonicity of `weights`; constant weights are standard.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let up = weights.windows(2).all(|w| w[0] <= w[1]);
        let down = weights.windows(2).all(|w| w[0] >= w[1]);
        match (up, down) {
            (true, _) => Ok(Orientation::Standard),
            (false, true) => Ok(Orientation::Reversed),
            _ => Err(Error::NonMonotoneWeights {
                weights: weights.to_vec(),
            }),
        }
    }

    fn accepts(&self, weights: &[f64]) -> bool {
        match self {
            Orientation::Standard => weights.windows(2).all(|w| w[0] <= w[1]),
            Orientation::Reversed => weights.windows(2).all(|w| w[0] >= w[1]),
        }
    }

    /// Whether `lo` and `hi` respect the domination order.
    #[inline]
    pub fn dominated(&self, regime: usize, bar: usize) -> bool {
        match self {
            Orientation::Standard => regime <= bar,
            Orientation::Reversed => regime >= bar,
        }
    }
}

/// Birth–death generator `Q̄` built from rate bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominatingMatrix {
    pub n: usize,
    /// Row-major conservative generator.
    pub q: Vec<f64>,
    pub orientation: Orientation,
    /// Whether the pair-sum condition needed for pathwise domination holds.
    pub condition_holds: bool,
    pub condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl DominatingMatrix {
    /// Wraps an explicit generator (no model, condition vacuous).
    pub fn from_generator(n: usize, q: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::invalid("q", "expected an N×N matrix"));
        }
        Ok(DominatingMatrix {
            n,
            q,
            orientation,
            condition_holds: true,
            condition: "explicit generator".into(),
            witness: None,
        })
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i - 1) * self.n + (j - 1)]
    }

    pub fn is_irreducible(&self) -> bool {
        crate::model::validate::irreducible(self.n, |i, j| self.rate(i, j) > 0.0)
    }

    /// The fixed interval table of `Q̄` in the usual enumeration order.
    pub fn table(&self) -> Result<IntervalTable> {
        IntervalTable::from_matrix(self.n, &self.q)
    }

    /// `Σ_i q̄_i`, the mark width the table uses.
    pub fn total_rate(&self) -> f64 {
        (1..=self.n).map(|i| -self.rate(i, i)).sum()
    }
}

fn birth_death_generator(n: usize, up: impl Fn(usize) -> f64, down: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 1..n {
        q[(i - 1) * n + i] = up(i);
        q[i * n + (i - 1)] = down(i);
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| q[i * n + j]).sum();
        q[i * n + i] = -s;
    }
    q
}

/// Builds `Q̄` for `orientation` and reports the pair-sum condition.
///
/// Standard: `q̄_{i,i+1} = sup q_{i,i+1}`, `q̄_{i+1,i} = inf q_{i+1,i}`, with the
/// two-state condition `q̄₁₂ + q̄₂₁ ≤ q₁₂(x) + q₂₁(x)` or its birth–death
/// generalization. Reversed (two regimes only): `q̄₁₂ = inf q₁₂`,
/// `q̄₂₁ = sup q₂₁`, which dominates from below provided
/// `q₁₂(x) + q₂₁(x) ≤ q̄₁₂ + q̄₂₁` for all `x`.
pub fn build_dominating(model: &RsdpModel, grid: &GridSpec, orientation: Orientation) -> Result<DominatingMatrix> {
    let n = model.n_regimes();
    if let Some((from, to)) = model.rates().birth_death_violation() {
        return Err(Error::NotBirthDeath { from, to });
    }
    let b = model.bounds();
    match orientation {
        Orientation::Standard => {
            let q = birth_death_generator(n, |i| b.sup(i, i + 1), |i| b.inf(i + 1, i));
            let bd = check_birth_death(model, grid);
            Ok(DominatingMatrix {
                n,
                q,
                orientation,
                condition_holds: bd.m1_holds,
                condition: if n == 2 { "con-q".into() } else { "m1".into() },
                witness: bd.witness,
            })
        }
        Orientation::Reversed => {
            if n > 2 {
                return Err(Error::Unsupported(
                    "reversed orientation is only defined for two regimes".into(),
                ));
            }
            let q = birth_death_generator(n, |i| b.inf(i, i + 1), |i| b.sup(i + 1, i));
            let mut dm = DominatingMatrix {
                n,
                q,
                orientation,
                condition_holds: true,
                condition: "reversed con-q".into(),
                witness: None,
            };
            if n == 2 {
                let bar = b.inf(1, 2) + b.sup(2, 1);
                let range = model.rates().sum_range(&[(1, 2), (2, 1)]);
                let sup = if range.exact {
                    range.sup
                } else {
                    grid.points(model.dim())
                        .iter()
                        .map(|x| model.rates().rate(x, 1, 2) + model.rates().rate(x, 2, 1))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                if sup > bar + CONSTANCY_TOL {
                    let pts = grid.points(model.dim());
                    let x = pts
                        .iter()
                        .max_by(|a, b| {
                            let s = |x: &[f64]| model.rates().rate(x, 1, 2) + model.rates().rate(x, 2, 1);
                            s(a).total_cmp(&s(b))
                        })
                        .cloned()
                        .unwrap_or_default();
                    dm.condition_holds = false;
                    dm.witness = Some(Witness {
                        note: format!("q12(x) + q21(x) exceeds inf q12 + sup q21 = {bar}"),
                        x,
                        y: None,
                        regime: Some(1),
                    });
                }
            }
            Ok(dm)
        }
    }
}

/// `Q̄_λ = Q̄ + diag(λ)` and `η̄ = −max Re spec Q̄_λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBound {
    pub lambda: Vec<f64>,
    pub q_lambda: Vec<f64>,
    pub eta: f64,
    /// Closed-form value for two regimes, as a cross-check.
    pub eta_closed_form: Option<f64>,
}

/// `η̄` for a generator and weights, without orientation checks.
pub fn spectral_eta(n: usize, q: &[f64], lambda: &[f64]) -> Result<SpectralBound> {
    if lambda.len() != n || q.len() != n * n {
        return Err(Error::invalid("lambda", format!("expected {n} weights")));
    }
    let mut ql = q.to_vec();
    for i in 0..n {
        ql[i * n + i] += lambda[i];
    }
    let eta = -spectral_abscissa(&to_dmatrix(n, &ql))?;
    let eta_closed_form = (n == 2).then(|| -spectral_abscissa_2x2([[ql[0], ql[1]], [ql[2], ql[3]]]));
    Ok(SpectralBound {
        lambda: lambda.to_vec(),
        q_lambda: ql,
        eta,
        eta_closed_form,
    })
}

/// `η̄` for `Q̄`, rejecting weights whose monotonicity contradicts its orientation.
pub fn eta_bar(dm: &DominatingMatrix, lambda: &[f64]) -> Result<SpectralBound> {
    if !dm.orientation.accepts(lambda) {
        return Err(Error::NonMonotoneWeights {
            weights: lambda.to_vec(),
        });
    }
    spectral_eta(dm.n, &dm.q, lambda)
}

/// `Q^α` with the ordering chosen by `α`, and `η_α`.
pub fn alpha_bound(model: &RsdpModel, grid: &GridSpec) -> Result<(DominatingMatrix, SpectralBound)> {
    let alpha = model
        .constants()
        .alpha
        .clone()
        .ok_or_else(|| Error::invalid("alpha", "A1 constants are required"))?;
    let orientation = Orientation::from_weights(&alpha)?;
    let dm = build_dominating(model, grid, orientation)?;
    let sb = eta_bar(&dm, &alpha)?;
    Ok((dm, sb))
}

/// `(exp(t·Q̄_λ)·𝟙)_{i0}`, the exact exponential functional of the chain from `i0`.
pub fn feynman_kac(n: usize, q: &[f64], lambda: &[f64], t: f64, i0: usize) -> Result<f64> {
    let sb = spectral_eta(n, q, lambda)?;
    Ok(expm_times_ones(&to_dmatrix(n, &sb.q_lambda), t)[i0 - 1])
}

/// Slope fit of `log (exp(t·Q̄_λ)·𝟙)_{i0}` over `times`; the decay rate is `−slope`.
pub fn feynman_kac_decay(n: usize, q: &[f64], lambda: &[f64], i0: usize, times: &[f64]) -> Result<LinearFit> {
    let logs = times
        .iter()
        .map(|&t| feynman_kac(n, q, lambda, t, i0).map(f64::ln))
        .collect::<Result<Vec<_>>>()?;
    linear_fit(times, &logs).ok_or_else(|| Error::invalid("times", "need two distinct times"))
}

/// Runs the chain on `drive` with the fixed table of `Q̄`.
pub fn simulate_dominating(dm: &DominatingMatrix, drive: &PoissonDrive, i0: usize) -> Result<SwitchPath> {
    if dm.total_rate() > drive.rate + CONSTANCY_TOL {
        return Err(Error::invalid(
            "drive",
            format!(
                "mark width {} is below the chain's total rate {}",
                drive.rate,
                dm.total_rate()
            ),
        ));
    }
    Ok(evolve_fixed(&dm.table()?, drive, i0))
}

/// `E exp(∫₀ᵗ λ_{Λ̄(s)} ds)` by Monte Carlo on drives of width `rate`, log-scale safe.
pub fn exp_functional_chain(
    dm: &DominatingMatrix,
    lambda: &[f64],
    t: f64,
    paths: usize,
    seed: u64,
    i0: usize,
    rate: f64,
) -> Result<Estimate> {
    if !(t > 0.0) || paths == 0 {
        return Err(Error::invalid("paths", "need t > 0 and at least one path"));
    }
    if lambda.len() != dm.n {
        return Err(Error::invalid("lambda", format!("expected {} weights", dm.n)));
    }
    let table = dm.table()?;
    if table.total() > rate + CONSTANCY_TOL {
        return Err(Error::invalid("rate", "below the chain's total rate"));
    }
    let logs = map_indexed(paths, |p| {
        let drive = sample_drive(t, rate, seed, p as u64);
        evolve_fixed(&table, &drive, i0).integrate(lambda, t)
    });
    Ok(exp_mean_from_logs(&logs))
}

/// Per-path outcome of running `Λ` (EM switching) and `Λ̄` on one drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPath {
    pub log_model: f64,
    pub log_chain: f64,
    /// Event times (including 0) where the order `Λ ≤ Λ̄` (or `≥`) fails.
    pub violations: usize,
    pub events: usize,
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationConfig {
    pub horizon: f64,
    pub delta: f64,
    pub paths: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub i0: usize,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub orientation: Orientation,
    pub paths: usize,
    pub events_checked: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub identical_paths: usize,
    /// Paths on which the model's functional exceeded the chain's.
    pub functional_exceedances: usize,
    pub model_functional: Estimate,
    pub chain_functional: Estimate,
}

/// Counts order violations between `Λ` and `Λ̄` at time 0 and every drive event.
pub fn count_violations(
    orientation: Orientation,
    lambda_path: &SwitchPath,
    bar_path: &SwitchPath,
    drive: &PoissonDrive,
) -> (usize, usize) {
    let mut bad = usize::from(!orientation.dominated(lambda_path.initial, bar_path.initial));
    let (mut a, mut b) = (0, 0);
    let (mut ia, mut ib) = (lambda_path.initial, bar_path.initial);
    for &t in &drive.times {
        while a < lambda_path.switches.len() && lambda_path.switches[a].0 <= t {
            ia = lambda_path.switches[a].1;
            a += 1;
        }
        while b < bar_path.switches.len() && bar_path.switches[b].0 <= t {
            ib = bar_path.switches[b].1;
            b += 1;
        }
        if !orientation.dominated(ia, ib) {
            bad += 1;
        }
    }
    (bad, drive.len() + 1)
}

/// Runs the model (EM, step `delta`) and `Λ̄` on shared drives and checks domination
/// and the path-matched order of exponential functionals.
pub fn domination_check(model: &RsdpModel, dm: &DominatingMatrix, cfg: &DominationConfig) -> Result<DominationReport> {
    model.check_state(&cfg.x0, cfg.i0)?;
    if cfg.lambda.len() != model.n_regimes() {
        return Err(Error::invalid("lambda", "one weight per regime"));
    }
    if !dm.orientation.accepts(&cfg.lambda) {
        return Err(Error::NonMonotoneWeights {
            weights: cfg.lambda.clone(),
        });
    }
    let grid = TimeGrid::new(cfg.delta, cfg.horizon)?;
    let table = dm.table()?;
    let per_path = try_map_indexed(cfg.paths, |p| -> Result<MatchedPath> {
        let drive = sample_drive(cfg.horizon, model.m(), cfg.seed, p as u64);
        let w = BrownianPath::seeded(model.dim(), cfg.delta, grid.steps, cfg.seed, p as u64);
        let path = em_path(model, cfg.delta, &drive, &w, &cfg.x0, cfg.i0).map_err(|e| match e {
            Error::Divergence { time, .. } => Error::Divergence { time, path: Some(p) },
            other => other,
        })?;
        let bar = evolve_fixed(&table, &drive, cfg.i0);
        let (violations, events) = count_violations(dm.orientation, &path.regimes, &bar, &drive);
        Ok(MatchedPath {
            log_model: path.regimes.integrate(&cfg.lambda, cfg.horizon),
            log_chain: bar.integrate(&cfg.lambda, cfg.horizon),
            violations,
            events,
            identical: path.regimes == bar,
        })
    })?;
    let violations: usize = per_path.iter().map(|p| p.violations).sum();
    let lm: Vec<f64> = per_path.iter().map(|p| p.log_model).collect();
    let lc: Vec<f64> = per_path.iter().map(|p| p.log_chain).collect();
    Ok(DominationReport {
        orientation: dm.orientation,
        paths: cfg.paths,
        events_checked: per_path.iter().map(|p| p.events).sum(),
        violations,
        first_violation: per_path.iter().position(|p| p.violations > 0),
        identical_paths: per_path.iter().filter(|p| p.identical).count(),
        functional_exceedances: per_path.iter().filter(|p| p.log_model > p.log_chain).count(),
        model_functional: exp_mean_from_logs(&lm),
        chain_functional: exp_mean_from_logs(&lc),
    })
}
