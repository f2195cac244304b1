//! Model definition: regimes, rate functions, coefficients and derived constants.

mod coeffs;
pub mod config;
mod grid;
mod rates;
pub(crate) mod validate;

use serde::{Deserialize, Serialize};

pub use coeffs::{
    scaled_identity, A4Constants, CoefficientProvider, CoefficientSet, Coefficients, DeclaredConstants,
    RegimeCoefficients,
};
pub use grid::{GridSpec, DEFAULT_GRID_MAX_DIM};
pub use rates::{ProgrammaticRates, RateBounds, RateFn, RateFunction, SaturatingRate, SumRange};
pub use validate::{
    check_birth_death, validate_model, Assumption, AssumptionReport, BirthDeathCheck, Method, Status, Verdict, Witness,
    CONSTANCY_TOL,
};

use crate::{Error, Result};

/// The regime labels `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeSet {
    n: usize,
}

impl RegimeSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("regimes", "need at least one regime"));
        }
        Ok(RegimeSet { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        (1..=self.n).contains(&i)
    }

    pub fn labels(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n
    }
}

/// A regime-switching diffusion: dimension, regimes, rates, coefficients.
///
/// Immutable after construction; the rate bounds and the mark-space width
/// `M = N(N−1)H` are computed once here.
#[derive(Debug, Clone)]
pub struct RsdpModel {
    dim: usize,
    regimes: RegimeSet,
    rates: RateFunction,
    coeffs: CoefficientSet,
    bounds: RateBounds,
    assumed: Vec<Assumption>,
}

impl RsdpModel {
    pub fn new(rates: RateFunction, coeffs: CoefficientSet) -> Result<Self> {
        let regimes = RegimeSet::new(rates.n_regimes())?;
        if let Some(k) = coeffs.regime_count() {
            if k != regimes.len() {
                return Err(Error::invalid(
                    "coefficients",
                    format!("{k} coefficient regimes for {} rate regimes", regimes.len()),
                ));
            }
        }
        coeffs.constants.check(regimes.len())?;
        let bounds = rates.bounds();
        if !(bounds.h.is_finite() && bounds.c_q.is_finite()) {
            return Err(Error::UnboundedRates {
                detail: format!("H = {}, c_q = {}", bounds.h, bounds.c_q),
            });
        }
        Ok(RsdpModel {
            dim: coeffs.dim,
            regimes,
            rates,
            coeffs,
            bounds,
            assumed: Vec::new(),
        })
    }

    /// Adds assumptions the caller asserts beyond those implied by declared constants.
    pub fn with_assumed(mut self, assumed: impl IntoIterator<Item = Assumption>) -> Self {
        for a in assumed {
            if !self.assumed.contains(&a) {
                self.assumed.push(a);
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regimes(&self) -> RegimeSet {
        self.regimes
    }

    pub fn n_regimes(&self) -> usize {
        self.regimes.len()
    }

    pub fn rates(&self) -> &RateFunction {
        &self.rates
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn constants(&self) -> &DeclaredConstants {
        &self.coeffs.constants
    }

    pub fn bounds(&self) -> &RateBounds {
        &self.bounds
    }

    /// Mark-space width `N(N−1)H`.
    pub fn m(&self) -> f64 {
        self.bounds.m
    }

    pub fn assumed(&self) -> &[Assumption] {
        &self.assumed
    }

    /// Assumptions whose verdicts decide pass/fail of a check.
    pub fn declared(&self) -> Vec<Assumption> {
        let c = self.constants();
        let mut out = vec![Assumption::Q1, Assumption::Q2, Assumption::Q3];
        let implied = [
            (c.alpha.is_some(), Assumption::A1),
            (c.c1.is_some(), Assumption::A2),
            (c.c2.is_some(), Assumption::A3),
            (c.a4.is_some(), Assumption::A4),
            (c.c4.is_some(), Assumption::H2),
        ];
        out.extend(implied.iter().filter(|(on, _)| *on).map(|(_, a)| *a));
        for a in &self.assumed {
            if !out.contains(a) {
                out.push(*a);
            }
        }
        out.sort();
        out
    }

    pub fn check_state(&self, x: &[f64], i: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(
                "x",
                format!("expected dimension {}, got {}", self.dim, x.len()),
            ));
        }
        if !self.regimes.contains(i) {
            return Err(Error::invalid(
                "regime",
                format!("{i} is not in 1..={}", self.n_regimes()),
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("x", "must be finite"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(q12: SaturatingRate, q21: SaturatingRate) -> RsdpModel {
        let rates = RateFunction::parametric(2, 1, [(1, 2, q12), (2, 1, q21)]).unwrap();
        let coeffs = CoefficientSet::parametric(
            1,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0); 2],
            DeclaredConstants::default(),
        )
        .unwrap();
        RsdpModel::new(rates, coeffs).unwrap()
    }

    #[test]
    fn constant_rate_bounds() {
        let m = two_state(SaturatingRate::constant(1.0), SaturatingRate::constant(2.0));
        let b = m.bounds();
        assert_eq!((b.sup(1, 2), b.inf(1, 2)), (1.0, 1.0));
        assert_eq!(b.h, 2.0);
        assert_eq!(m.m(), 4.0);
        assert_eq!(b.c_q, 0.0);
    }

    #[test]
    fn tanh_rate_bounds() {
        let m = two_state(SaturatingRate::tanh(1.0, 0.5, vec![1.0]), SaturatingRate::constant(2.0));
        let b = m.bounds();
        assert_eq!((b.sup(1, 2), b.inf(1, 2)), (1.5, 0.5));
        assert_eq!(b.h, 2.0);
        assert_eq!(b.c_q, 0.5);
    }

    #[test]
    fn single_regime_has_no_marks() {
        let coeffs = CoefficientSet::parametric(
            1,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0)],
            DeclaredConstants::default(),
        )
        .unwrap();
        let m = RsdpModel::new(RateFunction::constant(1, vec![0.0]).unwrap(), coeffs).unwrap();
        assert_eq!(m.bounds().h, 0.0);
        assert_eq!(m.m(), 0.0);
    }

    #[test]
    fn regime_count_mismatch() {
        let coeffs = CoefficientSet::parametric(
            1,
            vec![RegimeCoefficients::linear(1, 1.0, 1.0)],
            DeclaredConstants::default(),
        )
        .unwrap();
        let rates = RateFunction::constant(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(RsdpModel::new(rates, coeffs).is_err());
    }
}
