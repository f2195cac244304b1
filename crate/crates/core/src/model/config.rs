//! TOML model files.
//!
//! ```toml
//! dim = 1
//! regimes = 2
//! assume = ["con-q"]
//!
//! [[regime]]
//! a = [[-1.0]]      # or a scalar s meaning s·I
//! c = [0.0]
//! sigma = 1.0
//!
//! [[rate]]
//! from = 1
//! to = 2
//! a = 1.0
//! b = 0.5
//! v = [1.0]
//!
//! [constants]
//! alpha = [-2.0, -4.0]
//! ```

use serde::{Deserialize, Serialize};

use super::coeffs::{scaled_identity, CoefficientSet, Coefficients, DeclaredConstants, RegimeCoefficients};
use super::rates::{RateFunction, SaturatingRate};
use super::validate::Assumption;
use super::RsdpModel;
use crate::{Error, Result};

/// Square matrix given either as rows or as a multiple of the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn to_row_major(&self, dim: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            MatrixSpec::Scalar(s) => Ok(scaled_identity(dim, *s)),
            MatrixSpec::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Config(format!("`{name}` must be a {dim}x{dim} matrix")));
                }
                Ok(rows.iter().flatten().cloned().collect())
            }
        }
    }

    fn from_row_major(dim: usize, m: &[f64]) -> Self {
        let s = m[0];
        if m == scaled_identity(dim, s).as_slice() {
            MatrixSpec::Scalar(s)
        } else {
            MatrixSpec::Rows(m.chunks(dim).map(<[f64]>::to_vec).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub a: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub cubic: f64,
    pub sigma: MatrixSpec,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub from: usize,
    pub to: usize,
    pub a: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub regimes: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assume: Vec<String>,
    #[serde(rename = "regime")]
    pub regime_coeffs: Vec<RegimeConfig>,
    #[serde(default, rename = "rate", skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<RateConfig>,
    #[serde(default)]
    pub constants: DeclaredConstants,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<RsdpModel> {
        let dim = self.dim;
        if dim == 0 {
            return Err(Error::Config("`dim` must be >= 1".into()));
        }
        if self.regime_coeffs.len() != self.regimes {
            return Err(Error::Config(format!(
                "{} [[regime]] tables for regimes = {}",
                self.regime_coeffs.len(),
                self.regimes
            )));
        }
        let regs = self
            .regime_coeffs
            .iter()
            .map(|r| {
                Ok(RegimeCoefficients {
                    a: r.a.to_row_major(dim, "a")?,
                    c: r.c.clone().unwrap_or_else(|| vec![0.0; dim]),
                    cubic: r.cubic,
                    sigma: r.sigma.to_row_major(dim, "sigma")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rates = RateFunction::parametric(
            self.regimes,
            dim,
            self.rates.iter().map(|r| {
                (
                    r.from,
                    r.to,
                    SaturatingRate {
                        a: r.a,
                        b: r.b,
                        v: r.v.clone(),
                        cap: r.cap.unwrap_or(f64::INFINITY),
                    },
                )
            }),
        )?;
        let assumed = self
            .assume
            .iter()
            .map(|s| Assumption::parse(s).ok_or_else(|| Error::Config(format!("unknown assumption `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = CoefficientSet::parametric(dim, regs, self.constants.clone())?;
        Ok(RsdpModel::new(rates, coeffs)?.with_assumed(assumed))
    }

    /// The config of a parametric model; `None` for programmatic parts.
    pub fn from_model(model: &RsdpModel) -> Option<Self> {
        let dim = model.dim();
        let Coefficients::Parametric(regs) = &model.coeffs().kind else {
            return None;
        };
        let n = model.n_regimes();
        let mut rates = Vec::new();
        for i in 1..=n {
            for j in (1..=n).filter(|&j| j != i) {
                let r = match model.rates() {
                    RateFunction::Constant { rates, .. } => {
                        let q = rates[(i - 1) * n + (j - 1)];
                        (q != 0.0).then(|| SaturatingRate::constant(q))
                    }
                    RateFunction::Parametric { pairs, .. } => pairs[(i - 1) * n + (j - 1)].clone(),
                    RateFunction::Programmatic(_) => return None,
                };
                if let Some(r) = r {
                    rates.push(RateConfig {
                        from: i,
                        to: j,
                        a: r.a,
                        b: r.b,
                        v: r.v,
                        cap: r.cap.is_finite().then_some(r.cap),
                    });
                }
            }
        }
        Some(ModelConfig {
            dim,
            regimes: n,
            assume: model.assumed().iter().map(|a| a.name().to_string()).collect(),
            regime_coeffs: regs
                .iter()
                .map(|r| RegimeConfig {
                    a: MatrixSpec::from_row_major(dim, &r.a),
                    c: r.c.iter().any(|&v| v != 0.0).then(|| r.c.clone()),
                    cubic: r.cubic,
                    sigma: MatrixSpec::from_row_major(dim, &r.sigma),
                })
                .collect(),
            rates,
            constants: model.constants().clone(),
        })
    }
}
