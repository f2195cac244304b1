//! Interval tables, the jump function `h`, Poisson drives and switch paths.
//!
//! For a point `x` the mark space `[0, M)` is cut into consecutive left-closed,
//! right-open intervals `Γ_ij(x)` of length `q_ij(x)`, enumerated row by row
//! (`(1,2), …, (1,N), (2,1), (2,3), …`). A drive event with mark `ξ` moves
//! regime `i` to `l` exactly when `ξ ∈ Γ_il(x)`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::model::RateFunction;
use crate::rng::{stream, StreamRng};
use crate::{Error, Result};

/// One interval `Γ_ij = [lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub from: usize,
    pub to: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    #[inline]
    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTable {
    n: usize,
    anchor: Vec<f64>,
    entries: Vec<Interval>,
}

impl IntervalTable {
    pub fn empty(n: usize) -> Self {
        IntervalTable {
            n,
            anchor: Vec::new(),
            entries: Vec::with_capacity(n * n.saturating_sub(1)),
        }
    }

    /// Table for the rates at `x`.
    pub fn build(rates: &RateFunction, x: &[f64]) -> Result<Self> {
        let mut t = IntervalTable::empty(rates.n_regimes());
        t.rebuild(rates, x)?;
        Ok(t)
    }

    /// Rebuilds in place, reusing the allocation.
    pub fn rebuild(&mut self, rates: &RateFunction, x: &[f64]) -> Result<()> {
        self.n = rates.n_regimes();
        self.anchor.clear();
        self.anchor.extend_from_slice(x);
        self.entries.clear();
        let mut acc = 0.0;
        for i in 1..=self.n {
            for j in (1..=self.n).filter(|&j| j != i) {
                let q = rates.rate(x, i, j);
                if !(q >= 0.0) {
                    return Err(Error::NegativeRate {
                        from: i,
                        to: j,
                        x: x.to_vec(),
                        value: q,
                    });
                }
                self.entries.push(Interval {
                    from: i,
                    to: j,
                    lo: acc,
                    hi: acc + q,
                });
                acc += q;
            }
        }
        Ok(())
    }

    /// Table for a state-independent generator (row-major, diagonal ignored).
    pub fn from_matrix(n: usize, q: &[f64]) -> Result<Self> {
        let rates = RateFunction::constant(n, q.to_vec())?;
        IntervalTable::build(&rates, &[])
    }

    pub fn n_regimes(&self) -> usize {
        self.n
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn entries(&self) -> &[Interval] {
        &self.entries
    }

    /// The interval `Γ_ij`.
    pub fn get(&self, i: usize, j: usize) -> Option<&Interval> {
        if i == j || i == 0 || j == 0 || i > self.n || j > self.n {
            return None;
        }
        let k = (i - 1) * (self.n - 1) + if j < i { j - 1 } else { j - 2 };
        self.entries.get(k)
    }

    /// `Σ_i q_i(x)`, the right end of the last interval.
    pub fn total(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.hi)
    }

    /// `h(x, i, z)`: displacement `l − i` if `z ∈ Γ_il`, else 0.
    #[inline]
    pub fn h(&self, i: usize, z: f64) -> i64 {
        self.target(i, z).map_or(0, |l| l as i64 - i as i64)
    }

    /// The regime `l` with `z ∈ Γ_il`, if any.
    #[inline]
    pub fn target(&self, i: usize, z: f64) -> Option<usize> {
        if self.n < 2 {
            return None;
        }
        let row = &self.entries[(i - 1) * (self.n - 1)..i * (self.n - 1)];
        row.iter().find(|e| e.contains(z)).map(|e| e.to)
    }

    /// Regime after a drive event with mark `z` from regime `i`.
    #[inline]
    pub fn apply(&self, i: usize, z: f64) -> usize {
        self.target(i, z).unwrap_or(i)
    }
}

/// `h(x, i, z)` for a table built at `x`.
pub fn h_eval(table: &IntervalTable, i: usize, z: f64) -> i64 {
    table.h(i, z)
}

/// Lebesgue measure of `Γ_ij(x) Δ Γ_ij(y)`.
pub fn symm_diff_measure(rates: &RateFunction, x: &[f64], y: &[f64], i: usize, j: usize) -> Result<f64> {
    let tx = IntervalTable::build(rates, x)?;
    let ty = IntervalTable::build(rates, y)?;
    let (Some(a), Some(b)) = (tx.get(i, j), ty.get(i, j)) else {
        return Err(Error::invalid(
            "pair",
            format!("({i}, {j}) is not an off-diagonal pair"),
        ));
    };
    Ok(interval_symm_diff(a, b))
}

pub fn interval_symm_diff(a: &Interval, b: &Interval) -> f64 {
    let overlap = (a.hi.min(b.hi) - a.lo.max(b.lo)).max(0.0);
    a.len() + b.len() - 2.0 * overlap
}

/// Where a drive's randomness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriveSeed {
    pub base: u64,
    pub index: u64,
}

/// Realized Poisson point process on `[0, T] × [0, M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonDrive {
    pub horizon: f64,
    pub rate: f64,
    pub times: Vec<f64>,
    pub marks: Vec<f64>,
    pub seed: Option<DriveSeed>,
}

impl PoissonDrive {
    pub fn empty(horizon: f64, rate: f64) -> Self {
        PoissonDrive {
            horizon,
            rate,
            times: Vec::new(),
            marks: Vec::new(),
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().cloned().zip(self.marks.iter().cloned())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# horizon={} rate={}", self.horizon, self.rate)?;
        writeln!(w, "k,time,mark")?;
        for (k, (t, z)) in self.events().enumerate() {
            writeln!(w, "{},{},{}", k + 1, t, z)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut drive = PoissonDrive::empty(0.0, 0.0);
        let bad = |line: usize, msg: &str| Error::Config(format!("drive csv line {line}: {msg}"));
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad(lineno, "bad header"))?;
                    let v: f64 = v.parse().map_err(|_| bad(lineno, "bad number"))?;
                    match k {
                        "horizon" => drive.horizon = v,
                        "rate" => drive.rate = v,
                        _ => return Err(bad(lineno, "unknown header key")),
                    }
                }
                continue;
            }
            if line.trim().is_empty() || line.starts_with("k,") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(lineno, "expected k,time,mark"));
            }
            let t: f64 = cols[1].parse().map_err(|_| bad(lineno, "bad time"))?;
            let z: f64 = cols[2].parse().map_err(|_| bad(lineno, "bad mark"))?;
            if drive.times.last().is_some_and(|&p| t <= p) {
                return Err(bad(lineno, "times must increase"));
            }
            drive.times.push(t);
            drive.marks.push(z);
        }
        Ok(drive)
    }
}

/// Samples the drive on `[0, horizon]` with intensity `rate` per unit time.
pub fn sample_drive_with(horizon: f64, rate: f64, rng: &mut StreamRng) -> PoissonDrive {
    let mut drive = PoissonDrive::empty(horizon, rate);
    if rate <= 0.0 || horizon <= 0.0 {
        return drive;
    }
    let gaps = Exp::new(rate).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t > horizon {
            break;
        }
        drive.times.push(t);
        drive.marks.push(rng.random::<f64>() * rate);
    }
    drive
}

/// Drive number `index` derived from `base`.
pub fn sample_drive(horizon: f64, rate: f64, base: u64, index: u64) -> PoissonDrive {
    let mut rng = stream(base, "drive", index);
    let mut d = sample_drive_with(horizon, rate, &mut rng);
    d.seed = Some(DriveSeed { base, index });
    d
}

/// Piecewise-constant, right-continuous regime path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchPath {
    pub initial: usize,
    /// `(time, new_regime)` at each realized switch, increasing in time.
    pub switches: Vec<(f64, usize)>,
}

impl SwitchPath {
    pub fn constant(i: usize) -> Self {
        SwitchPath {
            initial: i,
            switches: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, i: usize) {
        if self.last() != i {
            self.switches.push((t, i));
        }
    }

    pub fn last(&self) -> usize {
        self.switches.last().map_or(self.initial, |s| s.1)
    }

    pub fn regime_at(&self, t: f64) -> usize {
        let k = self.switches.partition_point(|s| s.0 <= t);
        if k == 0 {
            self.initial
        } else {
            self.switches[k - 1].1
        }
    }

    /// `∫₀ᵀ λ_{Λ(s)} ds` for per-regime weights `lambda` (1-based regimes).
    pub fn integrate(&self, lambda: &[f64], horizon: f64) -> f64 {
        let mut acc = 0.0;
        let mut t = 0.0;
        let mut i = self.initial;
        for &(s, j) in &self.switches {
            if s >= horizon {
                break;
            }
            acc += lambda[i - 1] * (s - t);
            t = s;
            i = j;
        }
        acc + lambda[i - 1] * (horizon - t)
    }

    /// Measure of `{s ∈ [0, T] : self(s) ≠ other(s)}`.
    pub fn disagreement(&self, other: &SwitchPath, horizon: f64) -> f64 {
        let mut a = self.switches.iter().peekable();
        let mut b = other.switches.iter().peekable();
        let (mut ia, mut ib) = (self.initial, other.initial);
        let mut t = 0.0;
        let mut acc = 0.0;
        loop {
            let na = a.peek().map_or(f64::INFINITY, |s| s.0);
            let nb = b.peek().map_or(f64::INFINITY, |s| s.0);
            let next = na.min(nb).min(horizon);
            if ia != ib {
                acc += next - t;
            }
            if next >= horizon {
                return acc;
            }
            t = next;
            if na == next {
                ia = a.next().expect("peeked").1;
            }
            if nb == next {
                ib = b.next().expect("peeked").1;
            }
        }
    }
}

/// Evolves the regime on `drive`, building the table at `x_at(ς_k)` for each event.
pub fn evolve_switch<F>(rates: &RateFunction, drive: &PoissonDrive, mut x_at: F, i0: usize) -> Result<SwitchPath>
where
    F: FnMut(f64) -> Vec<f64>,
{
    let mut path = SwitchPath::constant(i0);
    let mut table = IntervalTable::empty(rates.n_regimes());
    let mut i = i0;
    for (t, z) in drive.events() {
        table.rebuild(rates, &x_at(t))?;
        let j = table.apply(i, z);
        if j != i {
            path.push(t, j);
            i = j;
        }
    }
    Ok(path)
}

/// Evolves the regime against a fixed table, e.g. that of a constant generator.
pub fn evolve_fixed(table: &IntervalTable, drive: &PoissonDrive, i0: usize) -> SwitchPath {
    let mut path = SwitchPath::constant(i0);
    let mut i = i0;
    for (t, z) in drive.events() {
        let j = table.apply(i, z);
        if j != i {
            path.push(t, j);
            i = j;
        }
    }
    path
}
