//! Continuous piecewise affine functions on polyhedral partitions.
//!
//! A `PwaFunction` is a list of affine pieces over a matching list of
//! full-dimensional regions with pairwise disjoint interiors, together with
//! the explicit domain polyhedron. Validation, point evaluation, neighbor
//! detection and fold classification live here.

use std::collections::BTreeSet;

use ndarray::{concatenate, Array1, Axis};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geom::{facet_dim_check, Polyhedron};
use crate::lp::{self, LinearProgram, LpStatus, VarBound};
use crate::sample;
use crate::scalar::{cst, Scalar};

/// One affine segment `x ↦ aᵀx + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece<T> {
    pub a: Array1<T>,
    pub b: T,
}

impl<T: Scalar> AffinePiece<T> {
    pub fn new(a: Array1<T>, b: T) -> Result<Self> {
        if !a.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidInput("non-finite affine piece".into()));
        }
        Ok(Self { a, b })
    }

    pub fn zero(n: usize) -> Self {
        Self { a: Array1::zeros(n), b: T::zero() }
    }

    #[inline]
    pub fn eval(&self, x: &Array1<T>) -> T {
        self.a.dot(x) + self.b
    }

    /// Componentwise closeness within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        (self.b - other.b).abs() <= tol
            && self
                .a
                .iter()
                .zip(other.a.iter())
                .all(|(&x, &y)| (x - y).abs() <= tol)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        Self { a: &self.a - &other.a, b: self.b - other.b }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { a: &self.a + &other.a, b: self.b + other.b }
    }
}

/// Index-pair sets of the fold structure: neighbors `I`, convex folds `V`,
/// concave folds `A` (all pairs stored with `i < j`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FoldSets {
    pub neighbors: BTreeSet<(usize, usize)>,
    pub convex: BTreeSet<(usize, usize)>,
    pub concave: BTreeSet<(usize, usize)>,
}

impl FoldSets {
    pub fn check_invariants(&self) -> bool {
        self.convex.is_disjoint(&self.concave)
            && self.convex.is_subset(&self.neighbors)
            && self.concave.is_subset(&self.neighbors)
    }
}

/// Violations reported by [`PwaFunction::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Region `region` has an empty interior.
    EmptyInterior { region: usize },
    /// Regions `i` and `j` overlap in a full-dimensional set.
    InteriorOverlap { i: usize, j: usize },
    /// Pieces `i` and `j` disagree by `residual` somewhere on the shared
    /// boundary.
    Discontinuity { i: usize, j: usize, residual: f64 },
    /// A sampled domain point landed in no region.
    CoverageGap { point: Vec<f64> },
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Continuous PWA function `f(x) = a_iᵀx + b_i` for `x` in region `i`.
#[derive(Clone, Debug)]
pub struct PwaFunction<T> {
    n: usize,
    pub pieces: Vec<AffinePiece<T>>,
    pub regions: Vec<Polyhedron<T>>,
    pub domain: Polyhedron<T>,
}

impl<T: Scalar> PwaFunction<T> {
    pub fn new(
        n: usize,
        pieces: Vec<AffinePiece<T>>,
        regions: Vec<Polyhedron<T>>,
        domain: Polyhedron<T>,
    ) -> Result<Self> {
        if pieces.is_empty() || pieces.len() != regions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} pieces vs {} regions",
                pieces.len(),
                regions.len()
            )));
        }
        if domain.dim() != n
            || pieces.iter().any(|p| p.a.len() != n)
            || regions.iter().any(|r| r.dim() != n)
        {
            return Err(Error::DimensionMismatch(
                "piece/region dimension differs from the declared dimension".into(),
            ));
        }
        Ok(Self { n, pieces, regions, domain })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Index of the first region containing `x` within `tol`.
    pub fn locate(&self, x: &Array1<T>, tol: T) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(x, tol))
    }

    /// Value at `x`: the first containing region decides (ties across
    /// shared facets are value-identical for a continuous function).
    pub fn eval(&self, x: &Array1<T>, cfg: &Config) -> Result<T> {
        match self.locate(x, cfg.geo()) {
            Some(i) => Ok(self.pieces[i].eval(x)),
            None => Err(Error::OutOfDomain),
        }
    }

    /// Difference `(a_i - a_j, b_i - b_j)` of two pieces.
    pub fn piece_diff(&self, i: usize, j: usize) -> AffinePiece<T> {
        self.pieces[i].sub(&self.pieces[j])
    }

    /// Exactly the pairs `i < j` whose regions share an `(n-1)`-facet.
    pub fn neighbor_pairs(&self, cfg: &Config) -> Result<BTreeSet<(usize, usize)>> {
        let s = self.regions.len();
        let geo: T = cfg.geo();
        let mut pairs = BTreeSet::new();
        let boxes: Vec<_> = self.regions.iter().map(|r| r.bounding_box()).collect();
        for i in 0..s {
            for j in i + 1..s {
                // Bounding boxes must touch for a shared facet to exist.
                let (ref lo_i, ref hi_i) = boxes[i];
                let (ref lo_j, ref hi_j) = boxes[j];
                let mut disjoint = false;
                for k in 0..self.n {
                    if lo_i[k] > hi_j[k] + geo || lo_j[k] > hi_i[k] + geo {
                        disjoint = true;
                        break;
                    }
                }
                if disjoint {
                    continue;
                }
                if facet_dim_check(&self.regions[i], &self.regions[j], cfg)? {
                    pairs.insert((i, j));
                }
            }
        }
        Ok(pairs)
    }

    /// Classify each neighbor pair as a convex or concave fold.
    ///
    /// The sign of `δ = (a_i - a_j)ᵀc + (b_i - b_j)` at the Chebyshev
    /// center `c` of `X_i` decides: for a continuous function the piece
    /// difference vanishes on the shared facet and keeps one sign on all
    /// of `X_i`, so one interior sample suffices. Pairs with `|δ|` below
    /// the fold tolerance have coinciding pieces and join neither set.
    pub fn classify_folds(&self, neighbors: &BTreeSet<(usize, usize)>, _cfg: &Config) -> FoldSets {
        let mut folds = FoldSets { neighbors: neighbors.clone(), ..Default::default() };
        for &(i, j) in neighbors {
            let diff = self.piece_diff(i, j);
            let (center, _) = self.regions[i].chebyshev();
            let delta = diff.eval(&center);
            let a_norm = diff.a.dot(&diff.a).sqrt();
            let c_norm = center.dot(&center).sqrt();
            let eps_fold = cst::<T>(1e-9) * (T::one() + a_norm * c_norm);
            if delta > eps_fold {
                folds.convex.insert((i, j));
            } else if delta < -eps_fold {
                folds.concave.insert((i, j));
            }
        }
        folds
    }

    /// Report-style validation: empty interiors, pairwise interior
    /// overlaps, discontinuities across shared boundaries, and sampled
    /// domain coverage.
    pub fn validate(&self, cfg: &Config) -> Result<ValidationReport> {
        let mut report = ValidationReport::default();
        let geo: T = cfg.geo();
        let cont: T = cfg.cont();

        for (i, r) in self.regions.iter().enumerate() {
            if !r.is_full_dim(cfg) {
                report.violations.push(Violation::EmptyInterior { region: i });
            }
        }

        let s = self.regions.len();
        for i in 0..s {
            for j in i + 1..s {
                let v = concatenate(
                    Axis(0),
                    &[self.regions[i].rows().view(), self.regions[j].rows().view()],
                )
                .unwrap();
                let w = concatenate(
                    Axis(0),
                    &[self.regions[i].rhs().view(), self.regions[j].rhs().view()],
                )
                .unwrap();
                let inter = Polyhedron::new(v, w)?;
                let radius = inter.chebyshev_radius();
                if radius < -geo {
                    continue; // no shared points at all
                }
                if radius >= cfg.dim_tol() {
                    report.violations.push(Violation::InteriorOverlap { i, j });
                    continue;
                }
                // Continuity: the piece difference must vanish on the whole
                // shared set; two LPs bound it from above and below.
                let diff = self.piece_diff(i, j);
                let mut worst = T::zero();
                for sign in [T::one(), -T::one()] {
                    // sign=+1 minimizes aᵀx (lower extreme of the difference),
                    // sign=-1 maximizes it; both extremes must be ~0.
                    let lp = LinearProgram::inequality_form(
                        diff.a.mapv(|v| v * sign),
                        inter.rows().clone(),
                        inter.rhs().clone(),
                        vec![VarBound::free(); self.n],
                    )?;
                    let res = lp::solve(&lp)?;
                    if let (LpStatus::Optimal, Some(obj)) = (res.status, res.objective) {
                        let extreme = (sign * obj + diff.b).abs();
                        worst = worst.max(extreme);
                    }
                }
                if worst > cont {
                    report.violations.push(Violation::Discontinuity {
                        i,
                        j,
                        residual: worst.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }

        // Sampled domain coverage.
        let mut rng = sample::rng(cfg.seed);
        let mut misses = 0usize;
        for _ in 0..cfg.samples {
            let Some(x) = sample::sample_polyhedron(&mut rng, &self.domain, geo, 1000) else {
                break;
            };
            if self.locate(&x, geo).is_none() {
                misses += 1;
                if report.violations.len() < 16 {
                    report.violations.push(Violation::CoverageGap {
                        point: x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
                    });
                }
            }
        }
        let _ = misses;
        Ok(report)
    }
}

/// Build the 1-D test models used across the crate: |x| on [-1,1].
#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn abs_model() -> PwaFunction<f64> {
        PwaFunction::new(
            1,
            vec![
                AffinePiece::new(ndarray::array![-1.0], 0.0).unwrap(),
                AffinePiece::new(ndarray::array![1.0], 0.0).unwrap(),
            ],
            vec![
                Polyhedron::from_box(&[-1.0], &[0.0]).unwrap(),
                Polyhedron::from_box(&[0.0], &[1.0]).unwrap(),
            ],
            Polyhedron::from_box(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap()
    }

    pub fn neg_abs_model() -> PwaFunction<f64> {
        PwaFunction::new(
            1,
            vec![
                AffinePiece::new(ndarray::array![1.0], 0.0).unwrap(),
                AffinePiece::new(ndarray::array![-1.0], 0.0).unwrap(),
            ],
            vec![
                Polyhedron::from_box(&[-1.0], &[0.0]).unwrap(),
                Polyhedron::from_box(&[0.0], &[1.0]).unwrap(),
            ],
            Polyhedron::from_box(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap()
    }

    /// Zigzag: -x on [-2,0], x on [0,1], -x+2 on [1,2].
    pub fn zigzag_model() -> PwaFunction<f64> {
        PwaFunction::new(
            1,
            vec![
                AffinePiece::new(ndarray::array![-1.0], 0.0).unwrap(),
                AffinePiece::new(ndarray::array![1.0], 0.0).unwrap(),
                AffinePiece::new(ndarray::array![-1.0], 2.0).unwrap(),
            ],
            vec![
                Polyhedron::from_box(&[-2.0], &[0.0]).unwrap(),
                Polyhedron::from_box(&[0.0], &[1.0]).unwrap(),
                Polyhedron::from_box(&[1.0], &[2.0]).unwrap(),
            ],
            Polyhedron::from_box(&[-2.0], &[2.0]).unwrap(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use ndarray::array;

    fn cfg() -> Config {
        Config { samples: 500, ..Config::default() }
    }

    #[test]
    fn abs_model_is_valid() {
        let report = abs_model().validate(&cfg()).unwrap();
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn zigzag_model_is_valid() {
        // The (1,2) piece difference has a nonzero offset; continuity must
        // still hold exactly on the shared facet x = 1.
        let report = zigzag_model().validate(&cfg()).unwrap();
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn offset_mismatch_is_a_discontinuity() {
        // Same partition as |x| but the second piece is x + 0.5.
        let f = PwaFunction::new(
            1,
            vec![
                AffinePiece::new(array![-1.0], 0.0).unwrap(),
                AffinePiece::new(array![1.0], 0.5).unwrap(),
            ],
            vec![
                Polyhedron::from_box(&[-1.0], &[0.0]).unwrap(),
                Polyhedron::from_box(&[0.0], &[1.0]).unwrap(),
            ],
            Polyhedron::from_box(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap();
        let report = f.validate(&cfg()).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Discontinuity { i: 0, j: 1, .. })));
    }

    #[test]
    fn overlapping_boxes_flagged() {
        let f = PwaFunction::new(
            2,
            vec![AffinePiece::zero(2), AffinePiece::zero(2)],
            vec![
                Polyhedron::from_box(&[-1.0, -1.0], &[0.5, 1.0]).unwrap(),
                Polyhedron::from_box(&[0.0, -1.0], &[1.0, 1.0]).unwrap(),
            ],
            Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let report = f.validate(&cfg()).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::InteriorOverlap { i: 0, j: 1 })));
    }

    #[test]
    fn eval_picks_the_right_piece() {
        let c = cfg();
        assert!((abs_model().eval(&array![-0.5], &c).unwrap() - 0.5).abs() < 1e-12);
        // Zigzag at 1.5 takes the third piece: -1.5 + 2 = 0.5.
        assert!((zigzag_model().eval(&array![1.5], &c).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eval_outside_domain_errors() {
        let c = cfg();
        assert!(matches!(
            zigzag_model().eval(&array![7.0], &c),
            Err(Error::OutOfDomain)
        ));
    }

    #[test]
    fn eval_agrees_across_boundaries() {
        // At shared facet points both adjacent pieces give the same value.
        let f = zigzag_model();
        for (facet, pieces) in [(0.0, (0usize, 1usize)), (1.0, (1, 2))] {
            let x = array![facet];
            let v1 = f.pieces[pieces.0].eval(&x);
            let v2 = f.pieces[pieces.1].eval(&x);
            assert!((v1 - v2).abs() <= 1e-6);
        }
    }

    #[test]
    fn neighbor_pairs_chain() {
        let f = zigzag_model();
        let pairs = f.neighbor_pairs(&cfg()).unwrap();
        let expected: BTreeSet<_> = [(0, 1), (1, 2)].into_iter().collect();
        assert_eq!(pairs, expected);
    }

    #[test]
    fn neighbor_pairs_grid() {
        // 2x2 grid of unit boxes: 4 edge-sharing pairs, no diagonals.
        let boxes = vec![
            Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            Polyhedron::from_box(&[1.0, 0.0], &[2.0, 1.0]).unwrap(),
            Polyhedron::from_box(&[0.0, 1.0], &[1.0, 2.0]).unwrap(),
            Polyhedron::from_box(&[1.0, 1.0], &[2.0, 2.0]).unwrap(),
        ];
        let f = PwaFunction::new(
            2,
            vec![AffinePiece::zero(2); 4],
            boxes,
            Polyhedron::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap(),
        )
        .unwrap();
        let pairs = f.neighbor_pairs(&cfg()).unwrap();
        let expected: BTreeSet<_> = [(0, 1), (0, 2), (1, 3), (2, 3)].into_iter().collect();
        assert_eq!(pairs, expected);
    }

    #[test]
    fn single_region_has_no_neighbors() {
        let f = PwaFunction::new(
            1,
            vec![AffinePiece::new(array![1.0], 0.0).unwrap()],
            vec![Polyhedron::from_box(&[0.0], &[1.0]).unwrap()],
            Polyhedron::from_box(&[0.0], &[1.0]).unwrap(),
        )
        .unwrap();
        assert!(f.neighbor_pairs(&cfg()).unwrap().is_empty());
    }

    #[test]
    fn classify_folds_abs() {
        // |x|: pair (0,1), delta at the center of X_0 (c = -0.5) is
        // (-1-1)(-0.5) + 0 = 1 > 0, a convex fold.
        let c = cfg();
        let f = abs_model();
        let pairs = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&pairs, &c);
        assert_eq!(folds.convex.iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(folds.concave.is_empty());
        assert!(folds.check_invariants());
    }

    #[test]
    fn classify_folds_neg_abs() {
        let c = cfg();
        let f = neg_abs_model();
        let pairs = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&pairs, &c);
        assert!(folds.convex.is_empty());
        assert_eq!(folds.concave.iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn classify_folds_zigzag() {
        // Hand computation: delta at center -1 of [-2,0] for pair (0,1) is
        // (-2)(-1) = 2 > 0 (convex); at center 0.5 of [0,1] for (1,2) it is
        // (2)(0.5) - 2 = -1 < 0 (concave).
        let c = cfg();
        let f = zigzag_model();
        let pairs = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&pairs, &c);
        assert_eq!(folds.convex.iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(folds.concave.iter().copied().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn fold_sign_uniform_on_random_interior_samples() {
        // The decision rule samples one point; the sign must hold on many.
        let c = cfg();
        let f = zigzag_model();
        let pairs = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&pairs, &c);
        let mut rng = sample::rng(c.seed);
        for &(i, j) in &folds.convex {
            let diff = f.piece_diff(i, j);
            for _ in 0..100 {
                if let Some(x) = sample::sample_polyhedron(&mut rng, &f.regions[i], 1e-9, 1000) {
                    if !f.regions[j].contains(&x, 1e-9) {
                        assert!(diff.eval(&x) > 0.0);
                    }
                }
            }
        }
        for &(i, j) in &folds.concave {
            let diff = f.piece_diff(i, j);
            for _ in 0..100 {
                if let Some(x) = sample::sample_polyhedron(&mut rng, &f.regions[i], 1e-9, 1000) {
                    if !f.regions[j].contains(&x, 1e-9) {
                        assert!(diff.eval(&x) < 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn negating_f_swaps_fold_sets() {
        let c = cfg();
        let f = zigzag_model();
        let neg = PwaFunction::new(
            1,
            f.pieces
                .iter()
                .map(|p| AffinePiece::new(p.a.mapv(|v| -v), -p.b).unwrap())
                .collect(),
            f.regions.clone(),
            f.domain.clone(),
        )
        .unwrap();
        let pairs = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&pairs, &c);
        let neg_folds = neg.classify_folds(&pairs, &c);
        assert_eq!(folds.convex, neg_folds.concave);
        assert_eq!(folds.concave, neg_folds.convex);
    }
}
