//! Drift and diffusion coefficients with their declared constants.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, matvec};
use crate::{Error, Result};

/// One regime of the parametric family `b(x) = A x + c − κ|x|² x`, `σ(x) = Σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCoefficients {
    /// Row-major `n×n`.
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub cubic: f64,
    /// Row-major `n×n`.
    pub sigma: Vec<f64>,
}

impl RegimeCoefficients {
    /// `b(x) = −a·x` in dimension `dim` with `σ = s·I`.
    pub fn linear(dim: usize, a: f64, s: f64) -> Self {
        RegimeCoefficients {
            a: scaled_identity(dim, -a),
            c: vec![0.0; dim],
            cubic: 0.0,
            sigma: scaled_identity(dim, s),
        }
    }

    #[inline]
    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        matvec(n, &self.a, x, out);
        let k = if self.cubic != 0.0 { self.cubic * dot(x, x) } else { 0.0 };
        for r in 0..n {
            out[r] += self.c[r] - k * x[r];
        }
    }
}

pub fn scaled_identity(dim: usize, s: f64) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for k in 0..dim {
        m[k * dim + k] = s;
    }
    m
}

/// Coefficients supplied as code. Regimes are 1-based.
pub trait CoefficientProvider: Send + Sync {
    fn drift(&self, x: &[f64], i: usize, out: &mut [f64]);
    /// Row-major `n×n`.
    fn diffusion(&self, x: &[f64], i: usize, out: &mut [f64]);
}

#[derive(Clone)]
pub enum Coefficients {
    Parametric(Vec<RegimeCoefficients>),
    Programmatic {
        provider: Arc<dyn CoefficientProvider>,
        /// Caller's promise that σ does not depend on `(x, i)`.
        constant_sigma: bool,
        /// Caller's promise that σ depends on the regime only.
        regime_sigma: bool,
    },
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Parametric(r) => f.debug_tuple("Parametric").field(r).finish(),
            Coefficients::Programmatic {
                constant_sigma,
                regime_sigma,
                ..
            } => f
                .debug_struct("Programmatic")
                .field("constant_sigma", constant_sigma)
                .field("regime_sigma", regime_sigma)
                .finish_non_exhaustive(),
        }
    }
}

/// Constants of the strong-dissipativity condition at one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A4Constants {
    pub regime: usize,
    pub beta: f64,
    pub c3: f64,
    pub p: f64,
}

/// Constants declared alongside the coefficients; `None` means not declared.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a4: Option<A4Constants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c4: Option<f64>,
}

impl DeclaredConstants {
    pub fn check(&self, n_regimes: usize) -> Result<()> {
        if let Some(alpha) = &self.alpha {
            if alpha.len() != n_regimes {
                return Err(Error::invalid(
                    "alpha",
                    format!("expected {n_regimes} values, got {}", alpha.len()),
                ));
            }
            if alpha.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid("alpha", "must be finite"));
            }
        }
        if let Some(c2) = self.c2 {
            if !(c2 > 0.0 && c2.is_finite()) {
                return Err(Error::invalid("c2", "must be > 0"));
            }
        }
        if let Some(a4) = &self.a4 {
            if a4.regime == 0 || a4.regime > n_regimes {
                return Err(Error::invalid("a4.regime", format!("must lie in 1..={n_regimes}")));
            }
            if !(a4.p > 2.0) {
                return Err(Error::invalid("a4.p", "must be > 2"));
            }
            if !(a4.c3 > 0.0 && a4.c3.is_finite()) {
                return Err(Error::invalid("a4.c3", "must be > 0"));
            }
            if !a4.beta.is_finite() {
                return Err(Error::invalid("a4.beta", "must be finite"));
            }
        }
        for (name, v) in [("c1", self.c1), ("c4", self.c4)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(name, "must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub dim: usize,
    pub kind: Coefficients,
    pub constants: DeclaredConstants,
}

impl CoefficientSet {
    pub fn parametric(dim: usize, regimes: Vec<RegimeCoefficients>, constants: DeclaredConstants) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be >= 1"));
        }
        if regimes.is_empty() {
            return Err(Error::invalid("regimes", "need at least one regime"));
        }
        for (k, r) in regimes.iter().enumerate() {
            let i = k + 1;
            if r.a.len() != dim * dim || r.sigma.len() != dim * dim || r.c.len() != dim {
                return Err(Error::invalid(
                    "coefficients",
                    format!("regime {i}: A and sigma must be {dim}x{dim}, c of length {dim}"),
                ));
            }
            let finite = r.a.iter().chain(&r.c).chain(&r.sigma).all(|v| v.is_finite());
            if !finite || !r.cubic.is_finite() {
                return Err(Error::NonFinite {
                    what: "coefficient parameter",
                    x: Vec::new(),
                    regime: i,
                });
            }
        }
        constants.check(regimes.len())?;
        Ok(CoefficientSet {
            dim,
            kind: Coefficients::Parametric(regimes),
            constants,
        })
    }

    pub fn programmatic(
        dim: usize,
        provider: Arc<dyn CoefficientProvider>,
        constant_sigma: bool,
        regime_sigma: bool,
        constants: DeclaredConstants,
    ) -> Self {
        CoefficientSet {
            dim,
            kind: Coefficients::Programmatic {
                provider,
                constant_sigma,
                regime_sigma: regime_sigma || constant_sigma,
            },
            constants,
        }
    }

    /// Number of regimes, when the family fixes it.
    pub fn regime_count(&self) -> Option<usize> {
        match &self.kind {
            Coefficients::Parametric(r) => Some(r.len()),
            Coefficients::Programmatic { .. } => None,
        }
    }

    #[inline]
    pub fn drift(&self, x: &[f64], i: usize, out: &mut [f64]) {
        match &self.kind {
            Coefficients::Parametric(r) => r[i - 1].drift(x, out),
            Coefficients::Programmatic { provider, .. } => provider.drift(x, i, out),
        }
    }

    #[inline]
    pub fn diffusion(&self, x: &[f64], i: usize, out: &mut [f64]) {
        match &self.kind {
            Coefficients::Parametric(r) => out.copy_from_slice(&r[i - 1].sigma),
            Coefficients::Programmatic { provider, .. } => provider.diffusion(x, i, out),
        }
    }

    /// True when σ depends on the regime only.
    pub fn sigma_regime_only(&self) -> bool {
        match &self.kind {
            Coefficients::Parametric(_) => true,
            Coefficients::Programmatic { regime_sigma, .. } => *regime_sigma,
        }
    }

    /// The common σ matrix when σ is constant in `(x, i)`.
    pub fn constant_sigma(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Coefficients::Parametric(r) => {
                let s = &r[0].sigma;
                r.iter().all(|q| &q.sigma == s).then(|| s.clone())
            }
            Coefficients::Programmatic {
                provider,
                constant_sigma,
                ..
            } => constant_sigma.then(|| {
                let mut s = vec![0.0; self.dim * self.dim];
                provider.diffusion(&vec![0.0; self.dim], 1, &mut s);
                s
            }),
        }
    }
}
