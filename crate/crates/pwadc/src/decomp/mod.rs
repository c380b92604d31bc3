//! Difference-of-convex decompositions of PWA functions.
//!
//! `f = g - h` with `g`, `h` convex PWA. Three construction routes share
//! the [`Decomposition`] result type; see the module docs of [`folds`],
//! [`opt`] and [`novel`].

pub mod folds;
pub mod novel;
pub mod opt;

use crate::arrange::Cell;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::pwa::PwaFunction;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Folds,
    Optim,
    Novel,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Folds => "Folds",
            Method::Optim => "Optim",
            Method::Novel => "Novel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "folds" => Some(Method::Folds),
            "optim" => Some(Method::Optim),
            "novel" => Some(Method::Novel),
            _ => None,
        }
    }
}

/// Fold-arrangement summary attached to novel decompositions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArrangementStats {
    /// Distinct fold hyperplanes after dedup.
    pub hyperplanes: usize,
    /// Full-dimensional cells.
    pub cells: usize,
}

#[derive(Clone, Debug, Default)]
pub struct DecompStats {
    pub cells_g: usize,
    pub cells_h: usize,
    pub lp_calls: u64,
    pub wall_time_s: f64,
    /// Whether the optimization-based route went through hyperplane
    /// arrangement regularization first.
    pub regularized: bool,
    pub arrangement: Option<ArrangementStats>,
    /// The pipelines only produce polyhedral (hence convex) domains; the
    /// flag travels with serialized decompositions so the max-minus-max
    /// form can refuse dubious hand-made inputs.
    pub domain_convex: bool,
}

/// A valid decomposition: `g` and `h` convex PWA with `f = g - h` on the
/// shared domain.
#[derive(Clone, Debug)]
pub struct Decomposition<T> {
    pub g: PwaFunction<T>,
    pub h: PwaFunction<T>,
    pub method: Method,
    pub stats: DecompStats,
}

impl<T: Scalar> Decomposition<T> {
    /// `g(x) - h(x)`.
    pub fn eval(&self, x: &ndarray::Array1<T>, cfg: &crate::config::Config) -> crate::error::Result<T> {
        Ok(self.g.eval(x, cfg)? - self.h.eval(x, cfg)?)
    }
}

/// For each cell, the lowest region index of `f` whose interior contains
/// the cell's Chebyshev center. When the center sits exactly on a shared
/// (fold-free) facet, closed containment breaks the tie; the label is
/// still value-correct because coinciding pieces are what let a cell span
/// several regions in the first place.
pub(crate) fn labels_for_cells<T: Scalar>(
    f: &PwaFunction<T>,
    cells: &[Cell<T>],
    cfg: &Config,
) -> Result<Vec<usize>> {
    let geo: T = cfg.geo();
    let mut labels = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let (center, _) = cell.poly.chebyshev();
        let strict = f
            .regions
            .iter()
            .position(|r| r.contains_interior(&center, geo));
        let label = match strict {
            Some(i) => i,
            None => f
                .regions
                .iter()
                .position(|r| r.contains(&center, geo))
                .ok_or(Error::LabelNotFound { cell: ci })?,
        };
        labels.push(label);
    }
    Ok(labels)
}
