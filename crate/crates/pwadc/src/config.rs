//! Tolerances, caps and sampling parameters.
//!
//! Every geometric predicate derives its tolerance from the LP feasibility
//! tolerance `eps_feas`; the geometric tolerances sit one order above it.

use serde::{Deserialize, Serialize};

use crate::scalar::{cst, Scalar};

/// Numerical tolerances shared by the LP kernel and the geometry layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute LP feasibility tolerance.
    pub feas: f64,
    /// Geometric comparison tolerance (hyperplane dedup, containment).
    pub geo: f64,
    /// Minimum Chebyshev radius for "full-dimensional".
    pub dim: f64,
    /// Continuity tolerance across shared facets.
    pub cont: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-8,
            geo: 1e-7,
            dim: 1e-7,
            cont: 1e-6,
        }
    }
}

/// Run-wide configuration: tolerances, complexity caps, sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tol: Tolerances,
    /// Hard cap on arrangement cell counts.
    pub cell_cap: usize,
    /// Hard cap on explored critical regions.
    pub region_cap: usize,
    /// Default sample count for sampling-certified properties.
    pub samples: usize,
    /// RNG seed for every sampling-based check.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            cell_cap: 100_000,
            region_cap: 100_000,
            samples: 10_000,
            seed: 42,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), String> {
        let t = &self.tol;
        for (name, v) in [
            ("feas", t.feas),
            ("geo", t.geo),
            ("dim", t.dim),
            ("cont", t.cont),
        ] {
            if !(v > 0.0) {
                return Err(format!("tolerance `{name}` must be positive, got {v}"));
            }
        }
        if self.cell_cap == 0 || self.region_cap == 0 {
            return Err("caps must be at least 1".into());
        }
        Ok(())
    }

    pub fn feas<T: Scalar>(&self) -> T {
        cst(self.tol.feas)
    }
    pub fn geo<T: Scalar>(&self) -> T {
        cst(self.tol.geo)
    }
    pub fn dim_tol<T: Scalar>(&self) -> T {
        cst(self.tol.dim)
    }
    pub fn cont<T: Scalar>(&self) -> T {
        cst(self.tol.cont)
    }
}
