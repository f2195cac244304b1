//! Small numerical statistics helpers used by the Monte Carlo experiments.

use serde::{Deserialize, Serialize};

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                std_error: f64::NAN,
                count: 0,
            };
        }
        let mut s = CompensatedSum::default();
        samples.iter().for_each(|&v| s.add(v));
        let mean = s.value() / n as f64;
        let mut ss = CompensatedSum::default();
        samples.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
        let var = if n > 1 { ss.value() / (n - 1) as f64 } else { 0.0 };
        Estimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            count: n,
        }
    }

    /// Normal-approximation interval `mean ± z·se`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }
}

/// Ordinary least squares fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual.
    pub residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    Some(LinearFit {
        slope,
        intercept,
        residual: (rss / nf).sqrt(),
    })
}

/// Mean of `exp(l_i)` and its standard error, computed without overflow.
pub fn exp_mean_from_logs(logs: &[f64]) -> Estimate {
    let n = logs.len();
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || !shift.is_finite() {
        return Estimate::from_samples(&[]);
    }
    let scaled: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let e = Estimate::from_samples(&scaled);
    let factor = shift.exp();
    Estimate {
        mean: e.mean * factor,
        std_error: e.std_error * factor,
        count: n,
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let f = cdf(v);
            let lo = f - k as f64 / n;
            let hi = (k + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Verdict of an empirical check against a theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Holds,
    Fails,
    /// The bound being tested is trivially true or undefined here.
    Vacuous,
    NotApplicable,
    Inconclusive,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Holds
        } else {
            Outcome::Fails
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn exp_mean_handles_huge_logs() {
        let e = exp_mean_from_logs(&[800.0, 800.0]);
        assert!(e.mean.is_infinite() || e.mean > 1e300);
        let e = exp_mean_from_logs(&[0.0, 0.0, 0.0]);
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }
}
