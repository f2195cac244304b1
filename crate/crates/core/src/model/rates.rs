//! Transition-rate functions `q_ij(x)` and their analytic bounds.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::linalg::{dot, norm};
use crate::{Error, Result};

/// Saturating rate `clamp(a + b·tanh(⟨v, x⟩), 0, cap)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturatingRate {
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub v: Vec<f64>,
    #[serde(default = "infinite_cap", skip_serializing_if = "is_infinite")]
    pub cap: f64,
}

fn infinite_cap() -> f64 {
    f64::INFINITY
}

fn is_infinite(v: &f64) -> bool {
    v.is_infinite()
}

impl SaturatingRate {
    pub fn constant(a: f64) -> Self {
        SaturatingRate {
            a,
            b: 0.0,
            v: Vec::new(),
            cap: f64::INFINITY,
        }
    }

    pub fn tanh(a: f64, b: f64, v: Vec<f64>) -> Self {
        SaturatingRate {
            a,
            b,
            v,
            cap: f64::INFINITY,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.is_flat() {
            return self.at_tau(0.0);
        }
        self.at_tau(dot(&self.v, x).tanh())
    }

    /// Value as a function of `τ = tanh(⟨v, x⟩) ∈ (-1, 1)`.
    #[inline]
    pub fn at_tau(&self, tau: f64) -> f64 {
        (self.a + self.b * tau).clamp(0.0, self.cap)
    }

    /// True when the rate does not depend on `x`.
    pub fn is_flat(&self) -> bool {
        self.b == 0.0 || self.v.iter().all(|&c| c == 0.0)
    }

    pub fn sup(&self) -> f64 {
        if self.is_flat() {
            self.at_tau(0.0)
        } else {
            self.at_tau(-1.0).max(self.at_tau(1.0))
        }
    }

    pub fn inf(&self) -> f64 {
        if self.is_flat() {
            self.at_tau(0.0)
        } else {
            self.at_tau(-1.0).min(self.at_tau(1.0))
        }
    }

    /// Exact global Lipschitz constant in `x`.
    ///
    /// The derivative along `v` is `b·|v|·(1 - τ²)` where the clamp is inactive,
    /// so the constant is attained at the in-band `τ` closest to zero.
    pub fn lipschitz(&self) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        // In-band set {τ : 0 < a + bτ < cap}, intersected with [-1, 1].
        let r0 = -self.a / self.b;
        let r1 = (self.cap - self.a) / self.b;
        let (mut lo, mut hi) = if r0 <= r1 { (r0, r1) } else { (r1, r0) };
        lo = lo.max(-1.0);
        hi = hi.min(1.0);
        if lo >= hi {
            return 0.0;
        }
        let closest = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else if lo > 0.0 {
            lo
        } else {
            hi
        };
        self.b.abs() * norm(&self.v) * (1.0 - closest * closest)
    }

    /// Breakpoints of `τ ↦ at_tau(τ)` inside `[-1, 1]`, endpoints included.
    fn tau_breakpoints(&self, sign: f64, out: &mut Vec<f64>) {
        out.push(-1.0);
        out.push(1.0);
        if self.b != 0.0 {
            let b = self.b * sign;
            for level in [0.0, self.cap] {
                if level.is_finite() {
                    let t = (level - self.a) / b;
                    if t > -1.0 && t < 1.0 {
                        out.push(t);
                    }
                }
            }
        }
    }
}

/// User-supplied rate function, bounds estimated on a grid.
pub type RateFn = dyn Fn(&[f64], usize, usize) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct ProgrammaticRates {
    pub n_regimes: usize,
    pub dim: usize,
    pub birth_death: bool,
    pub safety_factor: f64,
    func: Arc<RateFn>,
    bounds: RateBounds,
}

impl fmt::Debug for ProgrammaticRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProgrammaticRates")
            .field("n_regimes", &self.n_regimes)
            .field("dim", &self.dim)
            .field("birth_death", &self.birth_death)
            .field("safety_factor", &self.safety_factor)
            .finish_non_exhaustive()
    }
}

impl ProgrammaticRates {
    /// Wraps `func` (1-based regimes) and estimates its bounds on `grid`.
    ///
    /// Sup, Lipschitz constant and `H` are widened by `safety_factor`, inf is
    /// shrunk by it. Growth between the grid box and its doubled box beyond the
    /// safety factor is reported as unbounded rates.
    pub fn new(
        n_regimes: usize,
        dim: usize,
        birth_death: bool,
        grid: &GridSpec,
        safety_factor: f64,
        func: Arc<RateFn>,
    ) -> Result<Self> {
        if safety_factor < 1.0 {
            return Err(Error::invalid("safety_factor", "must be >= 1"));
        }
        let bounds = estimate_bounds(n_regimes, dim, grid, safety_factor, func.as_ref())?;
        Ok(ProgrammaticRates {
            n_regimes,
            dim,
            birth_death,
            safety_factor,
            func,
            bounds,
        })
    }

    pub fn eval(&self, x: &[f64], i: usize, j: usize) -> f64 {
        (self.func)(x, i, j)
    }
}

fn estimate_bounds(n: usize, dim: usize, grid: &GridSpec, safety: f64, func: &RateFn) -> Result<RateBounds> {
    let scan = |g: &GridSpec| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut sup = vec![0.0; n * n];
        let mut inf = vec![f64::INFINITY; n * n];
        let mut row_sup = vec![0.0f64; n];
        for x in g.points(dim) {
            for i in 1..=n {
                let mut row = 0.0;
                for j in (1..=n).filter(|&j| j != i) {
                    let q = func(&x, i, j);
                    if !q.is_finite() {
                        return Err(Error::NonFinite {
                            what: "rate",
                            x: x.clone(),
                            regime: i,
                        });
                    }
                    if q < 0.0 {
                        return Err(Error::NegativeRate {
                            from: i,
                            to: j,
                            x: x.clone(),
                            value: q,
                        });
                    }
                    let k = (i - 1) * n + (j - 1);
                    sup[k] = f64::max(sup[k], q);
                    inf[k] = f64::min(inf[k], q);
                    row += q;
                }
                row_sup[i - 1] = row_sup[i - 1].max(row);
            }
        }
        Ok((sup, inf, row_sup))
    };
    let (sup, inf, row_sup) = scan(grid)?;
    let (sup_wide, _, _) = scan(&grid.scaled(2.0))?;
    for (k, (&s, &w)) in sup.iter().zip(&sup_wide).enumerate() {
        if w > safety * s + 1e-9 {
            return Err(Error::UnboundedRates {
                detail: format!(
                    "sup q_{}{} grows from {s} on the grid box to {w} on the doubled box",
                    k / n + 1,
                    k % n + 1
                ),
            });
        }
    }
    let c_q = grid_lipschitz(n, dim, grid, func) * safety;
    let h = row_sup.iter().cloned().fold(0.0, f64::max) * safety;
    let mut inf: Vec<f64> = inf
        .iter()
        .map(|v| if v.is_finite() { v / safety } else { 0.0 })
        .collect();
    for i in 0..n {
        inf[i * n + i] = 0.0;
    }
    Ok(RateBounds {
        n_regimes: n,
        sup: sup.iter().map(|v| v * safety).collect(),
        inf,
        h,
        m: (n * n.saturating_sub(1)) as f64 * h,
        c_q,
        exact: false,
    })
}

/// Largest difference quotient between grid neighbours along each axis.
pub(crate) fn grid_lipschitz<F: Fn(&[f64], usize, usize) -> f64 + ?Sized>(
    n: usize,
    dim: usize,
    grid: &GridSpec,
    func: &F,
) -> f64 {
    let step = grid.step();
    let mut best = 0.0f64;
    for x in grid.points(dim) {
        for axis in 0..dim {
            if x[axis] + step > grid.hi + 1e-12 {
                continue;
            }
            let mut y = x.clone();
            y[axis] += step;
            for i in 1..=n {
                for j in (1..=n).filter(|&j| j != i) {
                    let d = (func(&x, i, j) - func(&y, i, j)).abs() / step;
                    best = best.max(d);
                }
            }
        }
    }
    best
}

/// Per-pair bounds and the derived constants `H`, `M`, `c_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub n_regimes: usize,
    /// Row-major `N×N`, `sup_x q_ij(x)`; diagonal is zero.
    pub sup: Vec<f64>,
    /// Row-major `N×N`, `inf_x q_ij(x)`; diagonal is zero.
    pub inf: Vec<f64>,
    pub h: f64,
    pub m: f64,
    pub c_q: f64,
    /// True for closed-form bounds, false for grid estimates.
    pub exact: bool,
}

impl RateBounds {
    pub fn sup(&self, i: usize, j: usize) -> f64 {
        self.sup[(i - 1) * self.n_regimes + (j - 1)]
    }

    pub fn inf(&self, i: usize, j: usize) -> f64 {
        self.inf[(i - 1) * self.n_regimes + (j - 1)]
    }
}

/// The rate function of a model.
#[derive(Debug, Clone)]
pub enum RateFunction {
    /// State-independent rates, row-major `N×N` with ignored diagonal.
    Constant {
        n_regimes: usize,
        rates: Vec<f64>,
    },
    /// Bounded-parametric family; `None` entries are identically zero.
    Parametric {
        n_regimes: usize,
        pairs: Vec<Option<SaturatingRate>>,
    },
    Programmatic(ProgrammaticRates),
}

impl RateFunction {
    pub fn constant(n_regimes: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != n_regimes * n_regimes {
            return Err(Error::invalid("rates", "expected an N×N matrix"));
        }
        for i in 1..=n_regimes {
            for j in (1..=n_regimes).filter(|&j| j != i) {
                let q = rates[(i - 1) * n_regimes + (j - 1)];
                if !q.is_finite() {
                    return Err(Error::NonFinite {
                        what: "rate",
                        x: Vec::new(),
                        regime: i,
                    });
                }
                if q < 0.0 {
                    return Err(Error::NegativeRate {
                        from: i,
                        to: j,
                        x: Vec::new(),
                        value: q,
                    });
                }
            }
        }
        Ok(RateFunction::Constant { n_regimes, rates })
    }

    /// Parametric rates from `(i, j, rate)` triples (1-based); missing pairs are zero.
    pub fn parametric(
        n_regimes: usize,
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, SaturatingRate)>,
    ) -> Result<Self> {
        let mut pairs = vec![None; n_regimes * n_regimes];
        for (i, j, r) in entries {
            if i == j || i == 0 || j == 0 || i > n_regimes || j > n_regimes {
                return Err(Error::invalid(
                    "rates",
                    format!("pair ({i}, {j}) is not an off-diagonal pair of 1..={n_regimes}"),
                ));
            }
            if !r.v.is_empty() && r.v.len() != dim {
                return Err(Error::invalid(
                    "rates",
                    format!("direction of q_{i}{j} has length {} != dim {dim}", r.v.len()),
                ));
            }
            if !(r.a.is_finite() && r.b.is_finite() && r.v.iter().all(|c| c.is_finite())) {
                return Err(Error::NonFinite {
                    what: "rate parameter",
                    x: Vec::new(),
                    regime: i,
                });
            }
            if r.a < 0.0 {
                return Err(Error::NegativeRate {
                    from: i,
                    to: j,
                    x: Vec::new(),
                    value: r.a,
                });
            }
            if r.cap.is_nan() || r.cap < 0.0 {
                return Err(Error::invalid("cap", format!("q_{i}{j} cap must be >= 0")));
            }
            let k = (i - 1) * n_regimes + (j - 1);
            if pairs[k].is_some() {
                return Err(Error::invalid("rates", format!("pair ({i}, {j}) given twice")));
            }
            pairs[k] = Some(r);
        }
        Ok(RateFunction::Parametric { n_regimes, pairs })
    }

    pub fn n_regimes(&self) -> usize {
        match self {
            RateFunction::Constant { n_regimes, .. } => *n_regimes,
            RateFunction::Parametric { n_regimes, .. } => *n_regimes,
            RateFunction::Programmatic(p) => p.n_regimes,
        }
    }

    /// `q_ij(x)` for regimes `i ≠ j` (1-based); zero on the diagonal.
    #[inline]
    pub fn rate(&self, x: &[f64], i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match self {
            RateFunction::Constant { n_regimes, rates } => rates[(i - 1) * n_regimes + (j - 1)],
            RateFunction::Parametric { n_regimes, pairs } => {
                pairs[(i - 1) * n_regimes + (j - 1)].as_ref().map_or(0.0, |r| r.eval(x))
            }
            RateFunction::Programmatic(p) => p.eval(x, i, j),
        }
    }

    /// Total exit rate `q_i(x)`.
    pub fn exit_rate(&self, x: &[f64], i: usize) -> f64 {
        (1..=self.n_regimes()).map(|j| self.rate(x, i, j)).sum()
    }

    /// Full conservative generator `Q(x)`, row-major.
    pub fn generator(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_regimes();
        let mut q = vec![0.0; n * n];
        for i in 1..=n {
            let mut total = 0.0;
            for j in (1..=n).filter(|&j| j != i) {
                let v = self.rate(x, i, j);
                q[(i - 1) * n + (j - 1)] = v;
                total += v;
            }
            q[(i - 1) * n + (i - 1)] = -total;
        }
        q
    }

    /// True when `x ↦ q_ij(x)` is constant for every pair.
    pub fn is_state_independent(&self) -> bool {
        match self {
            RateFunction::Constant { .. } => true,
            RateFunction::Parametric { pairs, .. } => pairs.iter().flatten().all(SaturatingRate::is_flat),
            RateFunction::Programmatic(_) => false,
        }
    }

    /// Structural birth–death check: `q_ij ≡ 0` whenever `|i - j| ≥ 2`.
    ///
    /// Returns the first offending pair.
    pub fn birth_death_violation(&self) -> Option<(usize, usize)> {
        let n = self.n_regimes();
        let far_pairs = (1..=n)
            .flat_map(|i| (1..=n).map(move |j| (i, j)))
            .filter(|&(i, j)| i.abs_diff(j) >= 2);
        match self {
            RateFunction::Constant { rates, .. } => far_pairs
                .into_iter()
                .find(|&(i, j)| rates[(i - 1) * n + (j - 1)] != 0.0),
            RateFunction::Parametric { pairs, .. } => far_pairs
                .into_iter()
                .find(|&(i, j)| pairs[(i - 1) * n + (j - 1)].as_ref().is_some_and(|r| r.sup() > 0.0)),
            RateFunction::Programmatic(p) => {
                if p.birth_death {
                    None
                } else {
                    far_pairs.into_iter().find(|&(i, j)| p.bounds.sup(i, j) > 0.0)
                }
            }
        }
    }

    pub fn is_birth_death(&self) -> bool {
        self.birth_death_violation().is_none()
    }

    /// Bounds and constants; closed form except for programmatic rates.
    pub fn bounds(&self) -> RateBounds {
        let n = self.n_regimes();
        match self {
            RateFunction::Programmatic(p) => p.bounds.clone(),
            _ => {
                let mut sup = vec![0.0; n * n];
                let mut inf = vec![0.0; n * n];
                let mut c_q = 0.0f64;
                let mut exact = true;
                for i in 1..=n {
                    for j in (1..=n).filter(|&j| j != i) {
                        let k = (i - 1) * n + (j - 1);
                        match self {
                            RateFunction::Constant { rates, .. } => {
                                sup[k] = rates[k];
                                inf[k] = rates[k];
                            }
                            RateFunction::Parametric { pairs, .. } => {
                                if let Some(r) = &pairs[k] {
                                    sup[k] = r.sup();
                                    inf[k] = r.inf();
                                    c_q = c_q.max(r.lipschitz());
                                }
                            }
                            RateFunction::Programmatic(_) => unreachable!(),
                        }
                    }
                }
                let mut h = 0.0f64;
                for i in 1..=n {
                    let range = self.row_range(i);
                    exact &= range.exact;
                    h = h.max(range.sup);
                }
                RateBounds {
                    n_regimes: n,
                    sup,
                    inf,
                    h,
                    m: (n * n.saturating_sub(1)) as f64 * h,
                    c_q,
                    exact,
                }
            }
        }
    }

    /// Range of the total exit rate `q_i(x)` over `ℝⁿ`.
    pub fn row_range(&self, i: usize) -> SumRange {
        let n = self.n_regimes();
        let terms: Vec<(usize, usize)> = (1..=n).filter(|&j| j != i).map(|j| (i, j)).collect();
        self.sum_range(&terms)
    }

    /// Range over `ℝⁿ` of `Σ q_ij(x)` across the given pairs.
    ///
    /// Parametric terms are grouped by direction line. Within a group whose
    /// directions are equal up to sign, the sum is piecewise linear in
    /// `τ = tanh(⟨v, x⟩)` and its range is read off the breakpoints. When the
    /// group directions are linearly independent the group ranges add exactly;
    /// otherwise the sum of group ranges is returned as an enclosure.
    pub fn sum_range(&self, terms: &[(usize, usize)]) -> SumRange {
        match self {
            RateFunction::Constant { n_regimes, rates } => {
                let s: f64 = terms
                    .iter()
                    .map(|&(i, j)| {
                        if i == j {
                            0.0
                        } else {
                            rates[(i - 1) * n_regimes + (j - 1)]
                        }
                    })
                    .sum();
                SumRange {
                    sup: s,
                    inf: s,
                    exact: true,
                }
            }
            RateFunction::Parametric { n_regimes, pairs } => {
                let active: Vec<&SaturatingRate> = terms
                    .iter()
                    .filter(|&&(i, j)| i != j)
                    .filter_map(|&(i, j)| pairs[(i - 1) * n_regimes + (j - 1)].as_ref())
                    .collect();
                parametric_sum_range(&active)
            }
            RateFunction::Programmatic(p) => {
                let (sup, inf): (f64, f64) = terms.iter().fold((0.0, 0.0), |(s, i), &(a, b)| {
                    if a == b {
                        (s, i)
                    } else {
                        (s + p.bounds.sup(a, b), i + p.bounds.inf(a, b))
                    }
                });
                SumRange { sup, inf, exact: false }
            }
        }
    }
}

/// Range of a sum of rate functions over `ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRange {
    pub sup: f64,
    pub inf: f64,
    /// False when the range is an enclosure rather than the exact sup/inf.
    pub exact: bool,
}

fn parametric_sum_range(terms: &[&SaturatingRate]) -> SumRange {
    let mut constant = 0.0;
    // Groups of (direction, [(term, sign)]).
    let mut groups: Vec<(Vec<f64>, Vec<(&SaturatingRate, f64)>)> = Vec::new();
    let mut exact = true;
    for &t in terms {
        if t.is_flat() {
            constant += t.at_tau(0.0);
            continue;
        }
        let mut placed = false;
        for (dir, members) in groups.iter_mut() {
            if dir.iter().zip(&t.v).all(|(a, b)| a == b) {
                members.push((t, 1.0));
                placed = true;
            } else if dir.iter().zip(&t.v).all(|(a, b)| *a == -b) {
                members.push((t, -1.0));
                placed = true;
            }
            if placed {
                break;
            }
        }
        if !placed {
            groups.push((t.v.clone(), vec![(t, 1.0)]));
        }
    }
    if groups.len() > 1 {
        let dim = groups[0].0.len();
        let cols: Vec<f64> = groups.iter().flat_map(|(d, _)| d.iter().cloned()).collect();
        let m = DMatrix::from_column_slice(dim, groups.len(), &cols);
        if m.rank(1e-12) < groups.len() {
            exact = false;
        }
    }
    let mut sup = constant;
    let mut inf = constant;
    for (_, members) in &groups {
        let mut taus = Vec::new();
        for (r, s) in members {
            r.tau_breakpoints(*s, &mut taus);
        }
        let eval = |tau: f64| -> f64 { members.iter().map(|(r, s)| r.at_tau(s * tau)).sum() };
        let vals: Vec<f64> = taus.iter().map(|&t| eval(t)).collect();
        sup += vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        inf += vals.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    SumRange { sup, inf, exact }
}
