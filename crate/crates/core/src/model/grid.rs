use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest dimension for which the default grid is used.
pub const DEFAULT_GRID_MAX_DIM: usize = 3;

/// Tensor grid on the box `[lo, hi]ⁿ` with `points` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: -10.0,
            hi: 10.0,
            points: 41,
        }
    }
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = GridSpec { lo, hi, points };
        g.check()?;
        Ok(g)
    }

    /// The default grid, refused above dimension 3.
    pub fn default_for(dim: usize) -> Result<Self> {
        if dim > DEFAULT_GRID_MAX_DIM {
            return Err(Error::invalid(
                "grid",
                format!("no default grid for dimension {dim} > {DEFAULT_GRID_MAX_DIM}; set one explicitly"),
            ));
        }
        Ok(GridSpec::default())
    }

    pub fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::invalid("grid", "need finite lo < hi"));
        }
        if self.points < 2 {
            return Err(Error::invalid("grid", "need at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|k| self.lo + h * k as f64).collect()
    }

    /// Same resolution on a box scaled about the origin.
    pub fn scaled(&self, factor: f64) -> GridSpec {
        GridSpec {
            lo: self.lo * factor,
            hi: self.hi * factor,
            points: self.points,
        }
    }

    /// All grid nodes in lexicographic order (last axis fastest).
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let axis = self.axis();
        let total = self.points.pow(dim as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            out.push(idx.iter().map(|&k| axis[k]).collect());
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < self.points {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }
}
