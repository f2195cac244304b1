//! Empirical measures on `ℝⁿ × S`, the Wasserstein-ρ distance, and convergence
//! of time-t laws.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dominate::alpha_bound;
use crate::integrate::simulate_states;
use crate::linalg::distance;
use crate::model::{validate_model, GridSpec, RsdpModel};
use crate::parallel::{map_indexed, try_map_indexed};
use crate::rng::{child_seed, stream};
use crate::{Error, Result};

pub const DEFAULT_SAMPLE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub i: usize,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, i: usize) -> Self {
        LabeledSample { x, i }
    }
}

/// Equal-weight samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    samples: Vec<LabeledSample>,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<LabeledSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(
                "samples",
                "an empirical measure needs at least one sample",
            ));
        }
        if let Some(s) = samples.iter().find(|s| s.i == 0 || s.x.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("samples", format!("bad sample {:?}", s)));
        }
        Ok(EmpiricalMeasure { samples })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of samples in each regime `1..=n`.
    pub fn regime_mass(&self, n: usize) -> Vec<f64> {
        let mut mass = vec![0.0; n];
        for s in &self.samples {
            if s.i <= n {
                mass[s.i - 1] += 1.0;
            }
        }
        let m = self.len() as f64;
        mass.iter_mut().for_each(|v| *v /= m);
        mass
    }

    /// `m` samples chosen without replacement, deterministic in `seed`.
    pub fn subsample(&self, m: usize, seed: u64) -> EmpiricalMeasure {
        if m >= self.len() {
            return self.clone();
        }
        let mut rng = stream(seed, "subsample", self.len() as u64);
        let mut idx = sample(&mut rng, self.len(), m).into_vec();
        idx.sort_unstable();
        EmpiricalMeasure {
            samples: idx.into_iter().map(|k| self.samples[k].clone()).collect(),
        }
    }
}

/// `ρ((x,i),(y,j)) = 1_{i≠j} + |x − y|`.
pub fn rho(a: &LabeledSample, b: &LabeledSample) -> f64 {
    f64::from(u8::from(a.i != b.i)) + distance(&a.x, &b.x)
}

/// Fractional bits of the fixed-point ground cost. Costs are rounded to
/// multiples of `2^-COST_FRACTION_BITS` once, after which the assignment and
/// every matching sum are exact integer arithmetic.
pub const COST_FRACTION_BITS: i32 = 40;

/// Costs above this (in fixed-point units) are rejected.
const COST_LIMIT: f64 = 1e30;

fn quantize(c: f64) -> Result<i128> {
    let scaled = c * 2f64.powi(COST_FRACTION_BITS);
    if !(scaled.is_finite() && scaled < COST_LIMIT) {
        return Err(Error::invalid(
            "samples",
            format!("ground cost {c} is not finite or too large"),
        ));
    }
    Ok(scaled.round() as i128)
}

/// Integer cost types the assignment solver runs on.
pub trait FixedCost: Copy + Ord + std::ops::Sub<Output = Self> + std::ops::AddAssign + std::ops::SubAssign {
    const ZERO: Self;
    const MAX: Self;
}

impl FixedCost for i64 {
    const ZERO: Self = 0;
    const MAX: Self = i64::MAX;
}

impl FixedCost for i128 {
    const ZERO: Self = 0;
    const MAX: Self = i128::MAX;
}

/// Minimum-cost perfect matching on a square integer cost matrix (row-major),
/// by shortest augmenting paths with dual potentials. Returns the column
/// assigned to each row. Entries must be nonnegative and small enough that
/// `4 (m + 1) max cost` does not overflow.
pub fn assignment<C: FixedCost>(m: usize, cost: &[C]) -> Vec<usize> {
    // 1-based arrays; column 0 is the virtual start.
    let inf = C::MAX;
    let mut u = vec![C::ZERO; m + 1];
    let mut v = vec![C::ZERO; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![inf; m + 1];
    let mut used = vec![false; m + 1];
    for r in 1..=m {
        row_of[0] = r;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * m..i0 * m];
            let ui = u[i0];
            for j in 1..=m {
                if !used[j] {
                    let cur = row[j - 1] - ui - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0; m];
    for j in 1..=m {
        col[row_of[j] - 1] = j - 1;
    }
    col
}

/// Average cost of a matching, from the exact integer total.
pub fn matching_cost(m: usize, cost: &[i128], col: &[usize]) -> f64 {
    let total: i128 = col.iter().enumerate().map(|(r, &k)| cost[r * m + k]).sum();
    total as f64 / 2f64.powi(COST_FRACTION_BITS) / m as f64
}

/// Fixed-point `ρ` costs, row-major.
pub fn cost_matrix(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Vec<i128>> {
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for a in &mu.samples {
        for b in &nu.samples {
            c.push(quantize(rho(a, b))?);
        }
    }
    Ok(c)
}

/// Exact `W_ρ(μ, ν)` by optimal assignment on the fixed-point costs. Unequal sizes are reduced to the
/// smaller size by subsampling with `seed`.
pub fn wasserstein_rho(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cap: usize, seed: u64) -> Result<f64> {
    let m = mu.len().min(nu.len());
    if m > cap {
        return Err(Error::SampleCapExceeded { m, cap });
    }
    let (a, b) = (mu.subsample(m, seed), nu.subsample(m, child_seed(seed, "other", 0)));
    let cost = cost_matrix(&a, &b)?;
    let max = cost.iter().copied().max().unwrap_or(0);
    // The i64 solver is about twice as fast; both return an optimal matching,
    // and the optimal integer total is unique.
    let col = if max.saturating_mul(4 * (m as i128 + 1)) < i64::MAX as i128 {
        let narrow: Vec<i64> = cost.iter().map(|&c| c as i64).collect();
        assignment(m, &narrow)
    } else {
        assignment(m, &cost)
    };
    Ok(matching_cost(m, &cost, &col))
}

/// Minimum over all `m!` bijections; for checking small instances.
pub fn wasserstein_rho_brute_force(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let m = mu.len();
    if nu.len() != m || m > 10 {
        return Err(Error::invalid("samples", "brute force needs equal sizes m <= 10"));
    }
    let cost = cost_matrix(mu, nu)?;
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = matching_cost(m, &cost, &perm);
    // Heap's algorithm.
    let mut c = vec![0; m];
    let mut k = 0;
    while k < m {
        if c[k] < k {
            if k % 2 == 0 {
                perm.swap(0, k);
            } else {
                perm.swap(c[k], k);
            }
            best = best.min(matching_cost(m, &cost, &perm));
            c[k] += 1;
            k = 0;
        } else {
            c[k] = 0;
            k += 1;
        }
    }
    Ok(best)
}

/// Total-variation distance of the regime marginals, a lower bound on `W_ρ`.
pub fn regime_mass_mismatch(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    let n = mu.samples.iter().chain(&nu.samples).map(|s| s.i).max().unwrap_or(1);
    let (p, q) = (mu.regime_mass(n), nu.regime_mass(n));
    0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantConfig {
    pub inits: Vec<(Vec<f64>, usize)>,
    pub times: Vec<f64>,
    pub delta: f64,
    /// Samples per initial condition.
    pub paths: usize,
    pub seed: u64,
    /// Shift `s` of the stationarity probe `W(law_t, law_{t+s})`.
    pub probe_shift: f64,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub times: Vec<f64>,
    /// Ordered pairs `(a, b)` of init indices, `a < b`.
    pub pairs: Vec<(usize, usize)>,
    /// `distances[p][t]` for pair `p` at `times[t]`.
    pub distances: Vec<Vec<f64>>,
    /// `stationarity[k][t] = W(law_t, law_{t+s})` from init `k`.
    pub stationarity: Vec<Vec<f64>>,
    /// `noise_floor[k][t]`: distance between the two halves of init `k`'s batch.
    pub noise_floor: Vec<Vec<f64>>,
    pub hypotheses_hold: bool,
    pub warnings: Vec<String>,
}

impl InvariantReport {
    /// Rows: time; columns: init pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (a, b) in &self.pairs {
            out.push_str(&format!(",w_{}_{}", a + 1, b + 1));
        }
        for k in 0..self.stationarity.len() {
            out.push_str(&format!(",probe_{},floor_{}", k + 1, k + 1));
        }
        out.push('\n');
        for (ti, t) in self.times.iter().enumerate() {
            out.push_str(&t.to_string());
            for d in &self.distances {
                out.push_str(&format!(",{}", d[ti]));
            }
            for k in 0..self.stationarity.len() {
                out.push_str(&format!(",{},{}", self.stationarity[k][ti], self.noise_floor[k][ti]));
            }
            out.push('\n');
        }
        out
    }

    /// Whether every pair's distance strictly decreases along `times`.
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.iter().all(|d| d.windows(2).all(|w| w[1] < w[0]))
    }
}

/// Hypothesis check for the invariant-measure theorem; failures become warnings.
pub fn hypothesis_warnings(model: &RsdpModel, grid: &GridSpec) -> Vec<String> {
    let mut warnings = Vec::new();
    match validate_model(model, grid) {
        Ok(report) => {
            for v in report.failures() {
                warnings.push(format!("{} failed: {}", v.assumption, v.note.as_deref().unwrap_or("")));
            }
        }
        Err(e) => warnings.push(format!("assumption check failed: {e}")),
    }
    match alpha_bound(model, grid) {
        Ok((dm, sb)) => {
            if sb.eta <= 0.0 {
                warnings.push(format!("eta_alpha = {} <= 0", sb.eta));
            }
            if !dm.is_irreducible() {
                warnings.push("Q^alpha is reducible".into());
            }
        }
        Err(e) => warnings.push(format!("eta_alpha unavailable: {e}")),
    }
    warnings
}

/// `W_ρ` between time-t laws of every ordered pair of initial conditions, plus the
/// stationarity probe and split-batch noise floor for each initial condition.
pub fn invariant_convergence(model: &RsdpModel, grid: &GridSpec, cfg: &InvariantConfig) -> Result<InvariantReport> {
    if cfg.inits.is_empty() {
        return Err(Error::invalid("inits", "need at least one initial condition"));
    }
    if cfg.times.is_empty() || cfg.paths < 2 {
        return Err(Error::invalid("times", "need times and at least 2 paths"));
    }
    if cfg.paths > cfg.cap {
        return Err(Error::SampleCapExceeded {
            m: cfg.paths,
            cap: cfg.cap,
        });
    }
    for (x, i) in &cfg.inits {
        model.check_state(x, *i)?;
    }
    let mut all_times = cfg.times.clone();
    all_times.extend(cfg.times.iter().map(|t| t + cfg.probe_shift));
    let nt = cfg.times.len();
    // laws[k][t]: the batch from init k at all_times[t].
    let mut laws: Vec<Vec<EmpiricalMeasure>> = Vec::new();
    for (x0, i0) in &cfg.inits {
        // Keyed by the initial condition itself, so repeated inits share samples.
        let seed = child_seed(cfg.seed, &format!("invariant:{x0:?}:{i0}"), 0);
        let states = try_map_indexed(cfg.paths, |p| {
            simulate_states(model, cfg.delta, x0, *i0, &all_times, seed, p as u64)
        })?;
        let per_time = (0..all_times.len())
            .map(|t| {
                EmpiricalMeasure::new(
                    states
                        .iter()
                        .map(|s| LabeledSample::new(s[t].0.clone(), s[t].1))
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        laws.push(per_time);
    }
    let pairs: Vec<(usize, usize)> = (0..cfg.inits.len())
        .flat_map(|a| ((a + 1)..cfg.inits.len()).map(move |b| (a, b)))
        .collect();
    enum Cell {
        Pair(usize, usize, usize),
        Probe(usize, usize),
        Floor(usize, usize),
    }
    let mut cells = Vec::new();
    for &(a, b) in &pairs {
        for t in 0..nt {
            cells.push(Cell::Pair(a, b, t));
        }
    }
    for k in 0..cfg.inits.len() {
        for t in 0..nt {
            cells.push(Cell::Probe(k, t));
            cells.push(Cell::Floor(k, t));
        }
    }
    let half = cfg.paths / 2;
    let values = map_indexed(cells.len(), |c| -> Result<f64> {
        let seed = child_seed(cfg.seed, "transport", c as u64);
        match cells[c] {
            Cell::Pair(a, b, t) => wasserstein_rho(&laws[a][t], &laws[b][t], cfg.cap, seed),
            Cell::Probe(k, t) => wasserstein_rho(&laws[k][t], &laws[k][nt + t], cfg.cap, seed),
            Cell::Floor(k, t) => {
                let s = laws[k][t].samples();
                let first = EmpiricalMeasure::new(s[..half].to_vec())?;
                let second = EmpiricalMeasure::new(s[half..2 * half].to_vec())?;
                wasserstein_rho(&first, &second, cfg.cap, seed)
            }
        }
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut it = values.into_iter();
    let distances: Vec<Vec<f64>> = pairs
        .iter()
        .map(|_| (0..nt).map(|_| it.next().unwrap()).collect())
        .collect();
    let mut stationarity = vec![vec![0.0; nt]; cfg.inits.len()];
    let mut noise_floor = vec![vec![0.0; nt]; cfg.inits.len()];
    for k in 0..cfg.inits.len() {
        for t in 0..nt {
            stationarity[k][t] = it.next().unwrap();
            noise_floor[k][t] = it.next().unwrap();
        }
    }
    let warnings = hypothesis_warnings(model, grid);
    Ok(InvariantReport {
        times: cfg.times.clone(),
        pairs,
        distances,
        stationarity,
        noise_floor,
        hypotheses_hold: warnings.is_empty(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientSet, DeclaredConstants, RateFunction, RegimeCoefficients};
    use rand::{Rng, SeedableRng};

    fn s(x: f64, i: usize) -> LabeledSample {
        LabeledSample::new(vec![x], i)
    }

    fn emp(v: &[(f64, usize)]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(v.iter().map(|&(x, i)| s(x, i)).collect()).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&s(0.0, 1), &s(0.0, 1)), 0.0);
        assert_eq!(rho(&s(0.0, 1), &s(3.0, 2)), 4.0);
        assert_eq!(rho(&s(0.0, 1), &s(3.0, 1)), 3.0);
    }

    #[test]
    fn transport_examples() {
        let mu = emp(&[(0.0, 1), (1.0, 1)]);
        assert_eq!(wasserstein_rho(&mu, &mu, 10, 0).unwrap(), 0.0);
        assert_eq!(
            wasserstein_rho(&emp(&[(0.0, 1)]), &emp(&[(3.0, 2)]), 10, 0).unwrap(),
            4.0
        );
        let nu = emp(&[(0.0, 1), (1.0, 2)]);
        assert_eq!(wasserstein_rho(&mu, &nu, 10, 0).unwrap(), 0.5);
        assert_eq!(wasserstein_rho_brute_force(&mu, &nu).unwrap(), 0.5);
        assert!(matches!(
            wasserstein_rho(&mu, &nu, 1, 0),
            Err(Error::SampleCapExceeded { m: 2, cap: 1 })
        ));
        assert!(EmpiricalMeasure::new(vec![]).is_err());
    }

    #[test]
    fn unequal_sizes_are_subsampled_deterministically() {
        let mu = emp(&[(0.0, 1), (1.0, 1), (2.0, 2), (5.0, 1)]);
        let nu = emp(&[(0.5, 1), (1.5, 2)]);
        let a = wasserstein_rho(&mu, &nu, 10, 3).unwrap();
        assert_eq!(a, wasserstein_rho(&mu, &nu, 10, 3).unwrap());
        assert_eq!(mu.subsample(2, 3).len(), 2);
    }

    fn random_measure(rng: &mut impl Rng, m: usize, dim: usize) -> EmpiricalMeasure {
        EmpiricalMeasure::new(
            (0..m)
                .map(|_| {
                    let x = (0..dim).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                    LabeledSample::new(x, rng.random_range(1..=3))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for trial in 0..200 {
            let m = 1 + trial % 7;
            let mu = random_measure(&mut rng, m, 2);
            let nu = random_measure(&mut rng, m, 2);
            let w = wasserstein_rho(&mu, &nu, 10, 0).unwrap();
            assert_eq!(w, wasserstein_rho_brute_force(&mu, &nu).unwrap());
            assert!(w + 1e-12 >= regime_mass_mismatch(&mu, &nu));
            assert_eq!(w, wasserstein_rho(&nu, &mu, 10, 0).unwrap());
        }
    }

    #[test]
    fn wide_costs_take_the_i128_solver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for m in 2..=7 {
            let far = |rng: &mut rand_chacha::ChaCha8Rng| {
                EmpiricalMeasure::new(
                    (0..m)
                        .map(|_| s(rng.random::<f64>() * 2e6 - 1e6, rng.random_range(1..=2)))
                        .collect(),
                )
                .unwrap()
            };
            let (mu, nu) = (far(&mut rng), far(&mut rng));
            assert_eq!(
                wasserstein_rho(&mu, &nu, 10, 0).unwrap(),
                wasserstein_rho_brute_force(&mu, &nu).unwrap()
            );
        }
        let huge = EmpiricalMeasure::new(vec![s(1e300, 1)]).unwrap();
        let other = EmpiricalMeasure::new(vec![s(-1e300, 1)]).unwrap();
        assert!(wasserstein_rho(&huge, &other, 10, 0).is_err());
    }

    #[test]
    fn integer_costs_are_exact_at_scale() {
        // Points on a shifted lattice: the optimal matching pairs k with k.
        let m = 300;
        let mu = EmpiricalMeasure::new((0..m).map(|k| s(k as f64, 1)).collect()).unwrap();
        let nu = EmpiricalMeasure::new((0..m).rev().map(|k| s(k as f64 + 0.5, 1)).collect()).unwrap();
        assert_eq!(wasserstein_rho(&mu, &nu, 1000, 0).unwrap(), 0.5);
    }

    fn ou_model() -> RsdpModel {
        let regs = vec![
            RegimeCoefficients::linear(1, 1.0, 1.0),
            RegimeCoefficients::linear(1, 2.0, 1.0),
        ];
        let constants = DeclaredConstants {
            alpha: Some(vec![-2.0, -4.0]),
            ..Default::default()
        };
        RsdpModel::new(
            RateFunction::constant(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            CoefficientSet::parametric(1, regs, constants).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identical_inits_and_seeds_give_zero() {
        let cfg = InvariantConfig {
            inits: vec![(vec![1.0], 1), (vec![1.0], 1)],
            times: vec![0.5, 1.0],
            delta: 0.01,
            paths: 40,
            seed: 2,
            probe_shift: 1.0,
            cap: DEFAULT_SAMPLE_CAP,
        };
        let r = invariant_convergence(&ou_model(), &GridSpec::default(), &cfg).unwrap();
        assert!(r.distances[0].iter().all(|&d| d == 0.0));
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        assert_eq!(
            r,
            invariant_convergence(&ou_model(), &GridSpec::default(), &cfg).unwrap()
        );
        let other = InvariantConfig { seed: 3, ..cfg.clone() };
        let r2 = invariant_convergence(&ou_model(), &GridSpec::default(), &other).unwrap();
        assert!(r2.distances[0].iter().all(|&d| d == 0.0));
        assert_ne!(r.stationarity, r2.stationarity);
        assert!(r.to_csv().starts_with("t,w_1_2,probe_1,floor_1,probe_2,floor_2\n"));
    }

    #[test]
    fn distance_decays_from_separated_inits() {
        let cfg = InvariantConfig {
            inits: vec![(vec![-5.0], 1), (vec![5.0], 2)],
            times: vec![0.5, 1.0, 3.0],
            delta: 0.01,
            paths: 200,
            seed: 4,
            probe_shift: 2.0,
            cap: DEFAULT_SAMPLE_CAP,
        };
        let r = invariant_convergence(&ou_model(), &GridSpec::default(), &cfg).unwrap();
        assert!(r.strictly_decreasing(), "{:?}", r.distances);
        assert!(r.distances[0][0] > 3.0);
        assert!(r.distances[0][2] < 1.0);
    }
}
