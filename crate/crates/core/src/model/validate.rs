//! Assumption checks: analytic where the family allows it, grid-sampled otherwise.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::coeffs::{Coefficients, RegimeCoefficients};
use super::grid::GridSpec;
use super::rates::{RateBounds, RateFunction, SumRange};
use super::RsdpModel;
use crate::linalg::{distance, dot, frobenius_norm, spectral_norm, sym_eigenpair};
use crate::{Error, Result};

/// Absolute tolerance for constancy and inequality checks.
pub const CONSTANCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Assumption {
    Q1,
    Q2,
    Q3,
    A1,
    A2,
    A3,
    A4,
    H1,
    H2,
    #[serde(rename = "con-q")]
    ConQ,
    #[serde(rename = "m1")]
    M1,
}

impl Assumption {
    pub fn name(&self) -> &'static str {
        match self {
            Assumption::Q1 => "Q1",
            Assumption::Q2 => "Q2",
            Assumption::Q3 => "Q3",
            Assumption::A1 => "A1",
            Assumption::A2 => "A2",
            Assumption::A3 => "A3",
            Assumption::A4 => "A4",
            Assumption::H1 => "H1",
            Assumption::H2 => "H2",
            Assumption::ConQ => "con-q",
            Assumption::M1 => "m1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "Q1" => Assumption::Q1,
            "Q2" => Assumption::Q2,
            "Q3" => Assumption::Q3,
            "A1" => Assumption::A1,
            "A2" => Assumption::A2,
            "A3" => Assumption::A3,
            "A4" => Assumption::A4,
            "H1" => Assumption::H1,
            "H2" => Assumption::H2,
            "con-q" => Assumption::ConQ,
            "m1" => Assumption::M1,
            _ => return None,
        })
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    GridSampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not evaluated: constants not declared or structure not applicable.
    Skipped,
}

/// A point or pair demonstrating a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<usize>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub assumption: Assumption,
    pub declared: bool,
    pub method: Method,
    pub status: Status,
    pub evidence: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    fn new(assumption: Assumption, method: Method, status: Status) -> Self {
        Verdict {
            assumption,
            declared: false,
            method,
            status,
            evidence: BTreeMap::new(),
            witness: None,
            note: None,
        }
    }

    fn skipped(assumption: Assumption, note: &str) -> Self {
        let mut v = Verdict::new(assumption, Method::Analytic, Status::Skipped);
        v.note = Some(note.to_string());
        v
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.evidence.insert(key.to_string(), value);
        self
    }

    fn with_witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub grid: GridSpec,
    pub bounds: RateBounds,
    pub birth_death: BirthDeathCheck,
    pub verdicts: Vec<Verdict>,
}

impl AssumptionReport {
    pub fn get(&self, a: Assumption) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.assumption == a)
    }

    /// Declared assumptions that failed.
    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts
            .iter()
            .filter(|v| v.declared && v.status == Status::Fail)
            .collect()
    }

    pub fn all_declared_pass(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn holds(&self, a: Assumption) -> bool {
        self.get(a).is_some_and(Verdict::passed)
    }
}

/// Birth–death structure and the domination condition on pair sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathCheck {
    pub is_birth_death: bool,
    /// For `N = 2` this is the two-state condition `q̄₁₂ + q̄₂₁ ≤ q₁₂(x) + q₂₁(x)`.
    pub m1_holds: bool,
    pub method: Method,
    /// Range of `q_{i,i+1} + q_{i+1,i}` for `i = 1..N−1`.
    pub pair_sums: Vec<SumRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Structural birth–death test plus the pair-sum condition.
pub fn check_birth_death(model: &RsdpModel, grid: &GridSpec) -> BirthDeathCheck {
    let rates = model.rates();
    let n = model.n_regimes();
    let bounds = model.bounds();
    if let Some((i, j)) = rates.birth_death_violation() {
        return BirthDeathCheck {
            is_birth_death: false,
            m1_holds: false,
            method: Method::Analytic,
            pair_sums: Vec::new(),
            witness: None,
            note: Some(format!("q_{i}{j} is not identically zero")),
        };
    }
    let pair_sums: Vec<SumRange> = (1..n).map(|i| rates.sum_range(&[(i, i + 1), (i + 1, i)])).collect();
    let analytic = !matches!(rates, RateFunction::Programmatic(_)) && pair_sums.iter().all(|s| s.exact);
    let method = if analytic {
        Method::Analytic
    } else {
        Method::GridSampled
    };
    let mut check = BirthDeathCheck {
        is_birth_death: true,
        m1_holds: true,
        method,
        pair_sums: pair_sums.clone(),
        witness: None,
        note: None,
    };
    if n < 2 {
        return check;
    }
    let pair_sum = |x: &[f64], i: usize| rates.rate(x, i, i + 1) + rates.rate(x, i + 1, i);
    let points = grid.points(model.dim());
    // Interior pairs: the sum must not depend on x.
    for i in 1..n - 1 {
        let varies = if analytic {
            pair_sums[i - 1].sup - pair_sums[i - 1].inf > CONSTANCY_TOL
        } else {
            let s0 = pair_sum(&points[0], i);
            points.iter().any(|x| (pair_sum(x, i) - s0).abs() > CONSTANCY_TOL)
        };
        if varies {
            let (lo, hi) = extreme_points(&points, |x| pair_sum(x, i));
            check.m1_holds = false;
            check.witness = Some(Witness {
                x: lo.clone(),
                y: Some(hi.clone()),
                regime: Some(i),
                note: format!(
                    "q_{i}{a} + q_{a}{i} takes {} at x and {} at y",
                    pair_sum(&lo, i),
                    pair_sum(&hi, i),
                    a = i + 1
                ),
            });
            return check;
        }
    }
    // Last pair: sup q_{N−1,N} + inf q_{N,N−1} ≤ q_{N−1,N}(x) + q_{N,N−1}(x).
    let k = n - 1;
    let bar = bounds.sup(k, n) + bounds.inf(n, k);
    let inf_sum = if analytic {
        pair_sums[k - 1].inf
    } else {
        points.iter().map(|x| pair_sum(x, k)).fold(f64::INFINITY, f64::min)
    };
    if bar > inf_sum + CONSTANCY_TOL {
        let (lo, _) = extreme_points(&points, |x| pair_sum(x, k));
        check.m1_holds = false;
        check.witness = Some(Witness {
            note: format!(
                "q̄_{k}{n} + q̄_{n}{k} = {bar} > q_{k}{n}(x) + q_{n}{k}(x) = {}",
                pair_sum(&lo, k)
            ),
            x: lo,
            y: None,
            regime: Some(k),
        });
    }
    check
}

fn extreme_points(points: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut lo = (f64::INFINITY, 0);
    let mut hi = (f64::NEG_INFINITY, 0);
    for (k, x) in points.iter().enumerate() {
        let v = f(x);
        if v < lo.0 {
            lo = (v, k);
        }
        if v > hi.0 {
            hi = (v, k);
        }
    }
    (points[lo.1].clone(), points[hi.1].clone())
}

/// Runs every check on `grid` and marks those the model declares.
pub fn validate_model(model: &RsdpModel, grid: &GridSpec) -> Result<AssumptionReport> {
    grid.check()?;
    let dim = model.dim();
    let n = model.n_regimes();
    let points = grid.points(dim);
    check_finite(model, &points)?;

    let mut verdicts = vec![check_q1(model, &points), check_q2(model), check_q3(model, grid)];
    let pairs = candidate_pairs(dim, grid, &points);
    verdicts.push(check_a1(model, &pairs));
    verdicts.push(check_a2(model, &points));
    verdicts.push(check_a3(model, &points));
    verdicts.push(check_a4(model, &pairs));
    verdicts.push(check_h1(model, &points));
    verdicts.push(check_h2(model, &pairs));

    let bd = check_birth_death(model, grid);
    let cond = if n == 2 { Assumption::ConQ } else { Assumption::M1 };
    let other = if n == 2 { Assumption::M1 } else { Assumption::ConQ };
    let mut v = if !bd.is_birth_death {
        let mut v = Verdict::new(cond, bd.method, Status::Fail);
        v.note = bd.note.clone();
        v
    } else {
        let mut v = Verdict::new(cond, bd.method, if bd.m1_holds { Status::Pass } else { Status::Fail })
            .with_witness(bd.witness.clone());
        if let Some(last) = bd.pair_sums.last() {
            v = v.with("pair_sum_inf", last.inf).with("pair_sum_sup", last.sup);
        }
        v
    };
    if n == 1 {
        v.status = Status::Pass;
        v.note = Some("single regime".into());
    }
    verdicts.push(v);
    verdicts.push(Verdict::skipped(
        other,
        if n == 2 { "N = 2 uses con-q" } else { "m1 covers N != 2" },
    ));

    let declared = model.declared();
    for v in &mut verdicts {
        v.declared = declared.contains(&v.assumption)
            || (v.assumption == Assumption::ConQ && declared.contains(&Assumption::M1) && n == 2)
            || (v.assumption == Assumption::M1 && declared.contains(&Assumption::ConQ) && n != 2);
    }
    Ok(AssumptionReport {
        grid: *grid,
        bounds: model.bounds().clone(),
        birth_death: bd,
        verdicts,
    })
}

fn check_finite(model: &RsdpModel, points: &[Vec<f64>]) -> Result<()> {
    let dim = model.dim();
    let n = model.n_regimes();
    let mut b = vec![0.0; dim];
    let mut s = vec![0.0; dim * dim];
    for x in points {
        for i in 1..=n {
            model.coeffs().drift(x, i, &mut b);
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "drift",
                    x: x.clone(),
                    regime: i,
                });
            }
            model.coeffs().diffusion(x, i, &mut s);
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "diffusion",
                    x: x.clone(),
                    regime: i,
                });
            }
            for j in (1..=n).filter(|&j| j != i) {
                let q = model.rates().rate(x, i, j);
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
            }
        }
    }
    Ok(())
}

/// Strong connectivity of the directed graph with edges `{(i, j) : positive(i, j)}`.
pub(crate) fn irreducible(n: usize, positive: impl Fn(usize, usize) -> bool) -> bool {
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n + 1];
        let mut stack = vec![1usize];
        seen[1] = true;
        while let Some(i) = stack.pop() {
            for j in 1..=n {
                let edge = if forward { positive(i, j) } else { positive(j, i) };
                if j != i && !seen[j] && edge {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen[1..].iter().all(|&s| s)
    };
    reach_all(true) && reach_all(false)
}

fn check_q1(model: &RsdpModel, points: &[Vec<f64>]) -> Verdict {
    let n = model.n_regimes();
    let rates = model.rates();
    let bounds = model.bounds();
    let analytic = !matches!(rates, RateFunction::Programmatic(_));
    if analytic && irreducible(n, |i, j| bounds.inf(i, j) > 0.0) {
        return Verdict::new(Assumption::Q1, Method::Analytic, Status::Pass).with("points_checked", 0.0);
    }
    let origin = vec![0.0; model.dim()];
    if analytic && !irreducible(n, |i, j| bounds.sup(i, j) > 0.0) {
        return Verdict::new(Assumption::Q1, Method::Analytic, Status::Fail).with_witness(Some(Witness {
            x: origin,
            y: None,
            regime: None,
            note: "positive-rate graph is reducible for every x".into(),
        }));
    }
    let mut checked = 0.0;
    for x in std::iter::once(&origin).chain(points) {
        checked += 1.0;
        if !irreducible(n, |i, j| rates.rate(x, i, j) > 0.0) {
            return Verdict::new(Assumption::Q1, Method::GridSampled, Status::Fail)
                .with("points_checked", checked)
                .with_witness(Some(Witness {
                    x: x.clone(),
                    y: None,
                    regime: None,
                    note: "positive-rate graph is reducible at x".into(),
                }));
        }
    }
    Verdict::new(Assumption::Q1, Method::GridSampled, Status::Pass).with("points_checked", checked)
}

fn rate_method(model: &RsdpModel) -> Method {
    if model.bounds().exact {
        Method::Analytic
    } else {
        Method::GridSampled
    }
}

fn check_q2(model: &RsdpModel) -> Verdict {
    let b = model.bounds();
    let mut v = Verdict::new(Assumption::Q2, rate_method(model), Status::Pass)
        .with("H", b.h)
        .with("M", b.m);
    if !b.exact && !matches!(model.rates(), RateFunction::Programmatic(_)) {
        v.note = Some("H is an upper bound (sum of per-term sups)".into());
    }
    v
}

fn check_q3(model: &RsdpModel, grid: &GridSpec) -> Verdict {
    let b = model.bounds();
    let method = if matches!(model.rates(), RateFunction::Programmatic(_)) {
        Method::GridSampled
    } else {
        Method::Analytic
    };
    let n = model.n_regimes();
    let rates = model.rates();
    let f = |x: &[f64], i: usize, j: usize| rates.rate(x, i, j);
    let grid_cq = super::rates::grid_lipschitz(n, model.dim(), grid, &f);
    Verdict::new(Assumption::Q3, method, Status::Pass)
        .with("c_q", b.c_q)
        .with("c_q_grid", grid_cq)
}

/// Pairs for grid-sampled inequality checks: axis neighbours, `(x, −x)` and `(x, 0)`.
fn candidate_pairs(dim: usize, grid: &GridSpec, points: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let step = grid.step();
    let mut out = Vec::new();
    for x in points {
        for axis in 0..dim {
            if x[axis] + step <= grid.hi + 1e-12 {
                let mut y = x.clone();
                y[axis] += step;
                out.push((x.clone(), y));
            }
        }
        if x.iter().any(|&c| c != 0.0) {
            out.push((x.clone(), x.iter().map(|c| -c).collect()));
            out.push((x.clone(), vec![0.0; dim]));
        }
    }
    out
}

struct PairTerms {
    inner: f64,
    sigma_sq: f64,
    r: f64,
}

fn pair_terms(model: &RsdpModel, x: &[f64], y: &[f64], i: usize) -> PairTerms {
    let dim = model.dim();
    let mut bx = vec![0.0; dim];
    let mut by = vec![0.0; dim];
    model.coeffs().drift(x, i, &mut bx);
    model.coeffs().drift(y, i, &mut by);
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let db: Vec<f64> = bx.iter().zip(&by).map(|(a, b)| a - b).collect();
    let mut sx = vec![0.0; dim * dim];
    let mut sy = vec![0.0; dim * dim];
    model.coeffs().diffusion(x, i, &mut sx);
    model.coeffs().diffusion(y, i, &mut sy);
    let ds: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
    let fro = frobenius_norm(&ds);
    PairTerms {
        inner: dot(&z, &db),
        sigma_sq: fro * fro,
        r: distance(x, y),
    }
}

fn parametric(model: &RsdpModel) -> Option<&[RegimeCoefficients]> {
    match &model.coeffs().kind {
        Coefficients::Parametric(r) => Some(r),
        Coefficients::Programmatic { .. } => None,
    }
}

/// Pair along the top eigenvector of `sym A`, symmetric about the origin.
fn symmetric_pair(dir: &[f64], r: f64) -> (Vec<f64>, Vec<f64>) {
    (
        dir.iter().map(|c| c * r / 2.0).collect(),
        dir.iter().map(|c| -c * r / 2.0).collect(),
    )
}

fn check_a1(model: &RsdpModel, pairs: &[(Vec<f64>, Vec<f64>)]) -> Verdict {
    let Some(alpha) = model.constants().alpha.clone() else {
        return Verdict::skipped(Assumption::A1, "alpha not declared");
    };
    let dim = model.dim();
    if let Some(regs) = parametric(model) {
        let mut v = Verdict::new(Assumption::A1, Method::Analytic, Status::Pass);
        for (k, r) in regs.iter().enumerate() {
            let i = k + 1;
            let (lam, dir) = sym_eigenpair(dim, &r.a, true);
            let need = if r.cubic >= 0.0 { 2.0 * lam } else { f64::INFINITY };
            v = v.with(&format!("alpha_min_{i}"), need);
            if alpha[k] < need - CONSTANCY_TOL && v.status == Status::Pass {
                v.status = Status::Fail;
                let rr = if r.cubic < 0.0 {
                    (2.0 * (lam - alpha[k] / 2.0).abs() / -r.cubic).sqrt().max(1.0) * 4.0
                } else {
                    1e-3
                };
                let (x, y) = symmetric_pair(&dir, rr);
                let t = pair_terms(model, &x, &y, i);
                v.witness = Some(Witness {
                    note: format!(
                        "2<x-y, b(x)-b(y)> = {} > alpha_{i}|x-y|^2 = {}",
                        2.0 * t.inner,
                        alpha[k] * t.r * t.r
                    ),
                    x,
                    y: Some(y),
                    regime: Some(i),
                });
            }
        }
        return v;
    }
    let mut v = Verdict::new(Assumption::A1, Method::GridSampled, Status::Pass);
    for i in 1..=model.n_regimes() {
        let mut need = f64::NEG_INFINITY;
        for (x, y) in pairs {
            let t = pair_terms(model, x, y, i);
            let ratio = (2.0 * t.inner + 2.0 * t.sigma_sq) / (t.r * t.r);
            need = need.max(ratio);
            if ratio > alpha[i - 1] + CONSTANCY_TOL && v.status == Status::Pass {
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    x: x.clone(),
                    y: Some(y.clone()),
                    regime: Some(i),
                    note: format!("ratio {ratio} > alpha_{i} = {}", alpha[i - 1]),
                });
            }
        }
        v = v.with(&format!("alpha_min_{i}"), need);
    }
    v
}

fn check_a2(model: &RsdpModel, points: &[Vec<f64>]) -> Verdict {
    let Some(c1) = model.constants().c1 else {
        return Verdict::skipped(Assumption::A2, "C1 not declared");
    };
    let dim = model.dim();
    if let Some(regs) = parametric(model) {
        let mut v = Verdict::new(Assumption::A2, Method::Analytic, Status::Pass);
        let mut sup = 0.0f64;
        for (k, r) in regs.iter().enumerate() {
            if r.a.iter().any(|&a| a != 0.0) || r.cubic != 0.0 {
                let far = vec![1e6; dim];
                let mut b = vec![0.0; dim];
                r.drift(&far, &mut b);
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    note: format!(
                        "|b(x)| = {} grows without bound",
                        b.iter().map(|c| c * c).sum::<f64>().sqrt()
                    ),
                    x: far,
                    y: None,
                    regime: Some(k + 1),
                });
                return v.with("C1_min", f64::INFINITY);
            }
            let c: f64 = r.c.iter().map(|c| c * c).sum::<f64>().sqrt();
            sup = sup.max(c + frobenius_norm(&r.sigma));
        }
        if c1 < sup - CONSTANCY_TOL {
            v.status = Status::Fail;
            v.witness = Some(Witness {
                x: vec![0.0; dim],
                y: None,
                regime: None,
                note: format!("|b| + |sigma|_HS = {sup} > C1 = {c1}"),
            });
        }
        return v.with("C1_min", sup);
    }
    let mut v = Verdict::new(Assumption::A2, Method::GridSampled, Status::Pass);
    let mut sup = 0.0f64;
    let mut b = vec![0.0; dim];
    let mut s = vec![0.0; dim * dim];
    for x in points {
        for i in 1..=model.n_regimes() {
            model.coeffs().drift(x, i, &mut b);
            model.coeffs().diffusion(x, i, &mut s);
            let val = b.iter().map(|c| c * c).sum::<f64>().sqrt() + frobenius_norm(&s);
            sup = sup.max(val);
            if val > c1 + CONSTANCY_TOL && v.status == Status::Pass {
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    x: x.clone(),
                    y: None,
                    regime: Some(i),
                    note: format!("|b| + |sigma|_HS = {val} > C1 = {c1}"),
                });
            }
        }
    }
    v.with("C1_min", sup)
}

fn check_a3(model: &RsdpModel, points: &[Vec<f64>]) -> Verdict {
    let Some(c2) = model.constants().c2 else {
        return Verdict::skipped(Assumption::A3, "C2 not declared");
    };
    let dim = model.dim();
    let (method, candidates): (Method, Vec<Vec<f64>>) = if model.coeffs().sigma_regime_only() {
        (Method::Analytic, vec![vec![0.0; dim]])
    } else {
        (Method::GridSampled, points.to_vec())
    };
    let mut v = Verdict::new(Assumption::A3, method, Status::Pass);
    let mut worst = f64::INFINITY;
    let mut s = vec![0.0; dim * dim];
    for x in &candidates {
        for i in 1..=model.n_regimes() {
            model.coeffs().diffusion(x, i, &mut s);
            let (lam, u) = sym_eigenpair(dim, &s, false);
            worst = worst.min(lam);
            if lam < c2 - CONSTANCY_TOL && v.status == Status::Pass {
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    x: x.clone(),
                    y: None,
                    regime: Some(i),
                    note: format!("u*sigma*u = {lam} < C2 = {c2} for u = {u:?}"),
                });
            }
        }
    }
    debug_assert!(worst.is_finite());
    v.with("C2_max", worst)
}

/// `sup_{|x−y|=r} ⟨x−y, b(x)−b(y)⟩ − β r² + C₃ rᵖ` for the parametric family.
///
/// The linear part is maximised along the top eigenvector of `sym A` and the
/// cubic part at `x = −y` on the same line, using `⟨x−y, |x|²x−|y|²y⟩ ≥ |x−y|⁴/4`
/// with equality there, so the two maximisers coincide.
fn a4_excess(lam: f64, cubic: f64, beta: f64, c3: f64, p: f64, r: f64) -> f64 {
    (lam - beta) * r * r - cubic * r.powi(4) / 4.0 + c3 * r.powf(p)
}

fn check_a4(model: &RsdpModel, pairs: &[(Vec<f64>, Vec<f64>)]) -> Verdict {
    let Some(a4) = model.constants().a4 else {
        return Verdict::skipped(Assumption::A4, "A4 constants not declared");
    };
    let dim = model.dim();
    let i0 = a4.regime;
    if let Some(regs) = parametric(model) {
        let r = &regs[i0 - 1];
        let (lam, dir) = sym_eigenpair(dim, &r.a, true);
        let excess = |rr: f64| a4_excess(lam, r.cubic, a4.beta, a4.c3, a4.p, rr);
        let (method, holds) = if r.cubic == 0.0 {
            (Method::Analytic, false)
        } else if r.cubic > 0.0 && a4.p == 4.0 {
            (
                Method::Analytic,
                a4.beta >= lam - CONSTANCY_TOL && a4.c3 <= r.cubic / 4.0 + CONSTANCY_TOL,
            )
        } else if r.cubic < 0.0 {
            (Method::Analytic, false)
        } else {
            let holds = radial_scan().all(|rr| excess(rr) <= CONSTANCY_TOL * rr * rr);
            (Method::GridSampled, holds)
        };
        let mut v = Verdict::new(Assumption::A4, method, if holds { Status::Pass } else { Status::Fail })
            .with("beta_min", lam)
            .with("cubic", r.cubic)
            .with("regime", i0 as f64);
        if r.cubic > 0.0 && a4.p == 4.0 {
            v = v.with("C3_max", r.cubic / 4.0);
        }
        if !holds {
            if let Some(rr) = radial_scan().find(|&rr| excess(rr) > CONSTANCY_TOL * rr * rr) {
                let (x, y) = symmetric_pair(&dir, rr);
                v.witness = Some(Witness {
                    note: format!(
                        "<x-y, b(x)-b(y)> exceeds beta|x-y|^2 - C3|x-y|^p by {} at |x-y| = {rr}",
                        excess(rr)
                    ),
                    x,
                    y: Some(y),
                    regime: Some(i0),
                });
            }
        }
        return v;
    }
    let mut v = Verdict::new(Assumption::A4, Method::GridSampled, Status::Pass).with("regime", i0 as f64);
    let mut worst = f64::NEG_INFINITY;
    for (x, y) in pairs {
        let t = pair_terms(model, x, y, i0);
        let lhs = t.inner + t.sigma_sq;
        let rhs = a4.beta * t.r * t.r - a4.c3 * t.r.powf(a4.p);
        worst = worst.max(lhs - rhs);
        if lhs > rhs + CONSTANCY_TOL && v.status == Status::Pass {
            v.status = Status::Fail;
            v.witness = Some(Witness {
                x: x.clone(),
                y: Some(y.clone()),
                regime: Some(i0),
                note: format!("lhs {lhs} > rhs {rhs}"),
            });
        }
    }
    v.with("max_excess", worst)
}

/// Log-spaced radii from 1e-4 to 1e4.
fn radial_scan() -> impl Iterator<Item = f64> {
    (0..=800).map(|k| 10f64.powf(-4.0 + k as f64 * 0.01))
}

fn check_h1(model: &RsdpModel, points: &[Vec<f64>]) -> Verdict {
    let dim = model.dim();
    if let Some(regs) = parametric(model) {
        let s0 = &regs[0].sigma;
        let bad = regs.iter().position(|r| &r.sigma != s0);
        let mut v = Verdict::new(
            Assumption::H1,
            Method::Analytic,
            if bad.is_none() { Status::Pass } else { Status::Fail },
        );
        if let Some(k) = bad {
            v.witness = Some(Witness {
                x: vec![0.0; dim],
                y: None,
                regime: Some(k + 1),
                note: format!("sigma of regime {} differs from regime 1", k + 1),
            });
        }
        return v;
    }
    let mut s0 = vec![0.0; dim * dim];
    model.coeffs().diffusion(&points[0], 1, &mut s0);
    let mut s = vec![0.0; dim * dim];
    let mut v = Verdict::new(Assumption::H1, Method::GridSampled, Status::Pass);
    'outer: for x in points {
        for i in 1..=model.n_regimes() {
            model.coeffs().diffusion(x, i, &mut s);
            if s.iter().zip(&s0).any(|(a, b)| (a - b).abs() > CONSTANCY_TOL) {
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    x: x.clone(),
                    y: None,
                    regime: Some(i),
                    note: "sigma differs from its value at the first grid point".into(),
                });
                break 'outer;
            }
        }
    }
    v
}

fn check_h2(model: &RsdpModel, pairs: &[(Vec<f64>, Vec<f64>)]) -> Verdict {
    let Some(c4) = model.constants().c4 else {
        return Verdict::skipped(Assumption::H2, "C4 not declared");
    };
    let dim = model.dim();
    if let Some(regs) = parametric(model) {
        let mut v = Verdict::new(Assumption::H2, Method::Analytic, Status::Pass);
        let mut need = 0.0f64;
        for (k, r) in regs.iter().enumerate() {
            if r.cubic != 0.0 {
                let (x, y) = (vec![100.0; dim], vec![101.0; dim]);
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    x,
                    y: Some(y),
                    regime: Some(k + 1),
                    note: "cubic drift is not globally Lipschitz".into(),
                });
                return v.with("C4_min", f64::INFINITY);
            }
            need = need.max(spectral_norm(dim, &r.a));
        }
        if c4 < need - CONSTANCY_TOL {
            v.status = Status::Fail;
            v.witness = Some(Witness {
                x: vec![0.0; dim],
                y: None,
                regime: None,
                note: format!("max |A_i|_2 = {need} > C4 = {c4}"),
            });
        }
        return v.with("C4_min", need);
    }
    let mut v = Verdict::new(Assumption::H2, Method::GridSampled, Status::Pass);
    let mut need = 0.0f64;
    let mut bx = vec![0.0; dim];
    let mut by = vec![0.0; dim];
    for (x, y) in pairs {
        for i in 1..=model.n_regimes() {
            model.coeffs().drift(x, i, &mut bx);
            model.coeffs().drift(y, i, &mut by);
            let ratio = distance(&bx, &by) / distance(x, y);
            need = need.max(ratio);
            if ratio > c4 + CONSTANCY_TOL && v.status == Status::Pass {
                v.status = Status::Fail;
                v.witness = Some(Witness {
                    x: x.clone(),
                    y: Some(y.clone()),
                    regime: Some(i),
                    note: format!("|b(x)-b(y)|/|x-y| = {ratio} > C4 = {c4}"),
                });
            }
        }
    }
    v.with("C4_min", need)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn model(
        q: Vec<(usize, usize, SaturatingRate)>,
        n: usize,
        regs: Vec<RegimeCoefficients>,
        constants: DeclaredConstants,
    ) -> RsdpModel {
        let dim = regs[0].c.len();
        let rates = RateFunction::parametric(n, dim, q).unwrap();
        let coeffs = CoefficientSet::parametric(dim, regs, constants).unwrap();
        RsdpModel::new(rates, coeffs).unwrap()
    }

    fn c(a: f64) -> SaturatingRate {
        SaturatingRate::constant(a)
    }

    #[test]
    fn constant_two_state_passes() {
        let m = model(
            vec![(1, 2, c(1.0)), (2, 1, c(2.0))],
            2,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        );
        let r = validate_model(&m, &GridSpec::default()).unwrap();
        for a in [Assumption::Q1, Assumption::Q2, Assumption::Q3] {
            assert!(r.holds(a), "{a}");
        }
        assert_eq!(r.get(Assumption::Q2).unwrap().evidence["H"], 2.0);
        assert_eq!(r.get(Assumption::Q3).unwrap().evidence["c_q"], 0.0);
        assert!(r.all_declared_pass());
    }

    #[test]
    fn reducible_chain_fails_q1_at_origin() {
        let m = model(
            vec![(2, 1, c(1.0))],
            2,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        );
        let r = validate_model(&m, &GridSpec::default()).unwrap();
        let v = r.get(Assumption::Q1).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.witness.as_ref().unwrap().x, vec![0.0]);
        assert!(!r.all_declared_pass());
    }

    #[test]
    fn tanh_rate_q2_q3() {
        let m = model(
            vec![(1, 2, SaturatingRate::tanh(1.0, 0.5, vec![1.0])), (2, 1, c(2.0))],
            2,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        );
        let r = validate_model(&m, &GridSpec::default()).unwrap();
        let q2 = r.get(Assumption::Q2).unwrap();
        assert_eq!(q2.method, Method::Analytic);
        assert_eq!(q2.evidence["H"], 2.0);
        let q3 = r.get(Assumption::Q3).unwrap();
        assert_eq!(q3.evidence["c_q"], 0.5);
        assert!(q3.evidence["c_q_grid"] <= 0.5);
    }

    #[test]
    fn cancellation_satisfies_con_q() {
        // s(x) = 0.25 (1 + tanh x) ∈ [0, 0.5].
        let m = model(
            vec![
                (1, 2, SaturatingRate::tanh(1.25, 0.25, vec![1.0])),
                (2, 1, SaturatingRate::tanh(2.75, -0.25, vec![1.0])),
            ],
            2,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        );
        let bd = check_birth_death(&m, &GridSpec::default());
        assert!(bd.is_birth_death && bd.m1_holds);
        assert_eq!(bd.method, Method::Analytic);
        assert_eq!(bd.pair_sums[0].inf, 4.0);
    }

    #[test]
    fn con_q_failure_has_witness() {
        let m = model(
            vec![(1, 2, SaturatingRate::tanh(1.25, 0.25, vec![1.0])), (2, 1, c(2.0))],
            2,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        )
        .with_assumed([Assumption::ConQ]);
        let bd = check_birth_death(&m, &GridSpec::default());
        assert!(!bd.m1_holds);
        assert_eq!(bd.witness.as_ref().unwrap().x, vec![-10.0]);
        let r = validate_model(&m, &GridSpec::default()).unwrap();
        assert_eq!(r.failures()[0].assumption, Assumption::ConQ);
    }

    #[test]
    fn far_jump_is_not_birth_death() {
        let m = model(
            vec![
                (1, 2, c(1.0)),
                (1, 3, SaturatingRate::tanh(0.0, 1.0, vec![1.0])),
                (2, 1, c(1.0)),
                (2, 3, c(1.0)),
                (3, 2, c(1.0)),
            ],
            3,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 3],
            DeclaredConstants::default(),
        );
        let bd = check_birth_death(&m, &GridSpec::default());
        assert!(!bd.is_birth_death);
    }

    #[test]
    fn cubic_a4_constant_is_one_quarter() {
        let cubic = RegimeCoefficients {
            a: vec![0.0],
            c: vec![0.0],
            cubic: 1.0,
            sigma: vec![2f64.sqrt()],
        };
        let declared = |c3: f64| DeclaredConstants {
            c2: Some(2f64.sqrt()),
            a4: Some(A4Constants {
                regime: 1,
                beta: 0.0,
                c3,
                p: 4.0,
            }),
            ..Default::default()
        };
        let ok = model(vec![], 1, vec![cubic.clone()], declared(0.25));
        let r = validate_model(&ok, &GridSpec::default()).unwrap();
        assert!(r.holds(Assumption::A4));
        assert!(r.holds(Assumption::A3));
        let bad = model(vec![], 1, vec![cubic], declared(1.0));
        let r = validate_model(&bad, &GridSpec::default()).unwrap();
        let v = r.get(Assumption::A4).unwrap();
        assert_eq!(v.status, Status::Fail);
        let w = v.witness.as_ref().unwrap();
        assert!((w.x[0] + w.y.as_ref().unwrap()[0]).abs() < 1e-12);
    }

    #[test]
    fn linear_drift_constants() {
        let consts = DeclaredConstants {
            alpha: Some(vec![-2.0, -4.0]),
            c4: Some(2.0),
            ..Default::default()
        };
        let m = model(
            vec![(1, 2, c(1.0)), (2, 1, c(2.0))],
            2,
            vec![
                RegimeCoefficients::linear(1, 1.0, 1.0),
                RegimeCoefficients::linear(1, 2.0, 1.0),
            ],
            consts,
        );
        let r = validate_model(&m, &GridSpec::default()).unwrap();
        assert!(r.holds(Assumption::A1));
        assert!(r.holds(Assumption::H1));
        assert!(r.holds(Assumption::H2));
        assert_eq!(r.get(Assumption::A2).unwrap().status, Status::Skipped);
        let tight = DeclaredConstants {
            alpha: Some(vec![-2.5, -4.0]),
            ..Default::default()
        };
        let m = model(
            vec![(1, 2, c(1.0)), (2, 1, c(2.0))],
            2,
            vec![
                RegimeCoefficients::linear(1, 1.0, 1.0),
                RegimeCoefficients::linear(1, 2.0, 1.0),
            ],
            tight,
        );
        let r = validate_model(&m, &GridSpec::default()).unwrap();
        let v = r.get(Assumption::A1).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.witness.as_ref().unwrap().regime, Some(1));
    }

    #[test]
    fn validation_is_deterministic() {
        let m = model(
            vec![(1, 2, SaturatingRate::tanh(1.0, 0.5, vec![1.0])), (2, 1, c(2.0))],
            2,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        );
        let g = GridSpec::default();
        assert_eq!(validate_model(&m, &g).unwrap(), validate_model(&m, &g).unwrap());
    }
}
