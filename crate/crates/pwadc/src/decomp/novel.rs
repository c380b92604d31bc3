//! Fold-arrangement decomposition.
//!
//! Cut the domain by *every* fold hyperplane of `f` — convex and concave —
//! and relabel `f` on the resulting cells. The refined partition is a
//! hyperplane arrangement, hence regular, so the optimization-based route
//! is feasible on it by construction and `g`, `h` come out on the same
//! cell set with identical complexity.

use std::time::Instant;

use crate::arrange::{self, Arrangement};
use crate::config::Config;
use crate::decomp::{
    labels_for_cells, opt, ArrangementStats, Decomposition, Method,
};
use crate::decomp::folds::separating_hyperplane;
use crate::error::{Error, Result};
use crate::geom::{dedup_hyperplanes, Hyperplane, Polyhedron};
use crate::lp::lp_call_count;
use crate::pwa::{AffinePiece, FoldSets, PwaFunction};
use crate::scalar::Scalar;

/// Canonicalized, deduplicated separating hyperplanes of all fold pairs
/// (convex and concave alike).
pub fn fold_hyperplanes<T: Scalar>(
    f: &PwaFunction<T>,
    folds: &FoldSets,
    cfg: &Config,
) -> Result<Vec<Hyperplane<T>>> {
    let mut hps = Vec::new();
    for &(i, j) in folds.convex.iter().chain(folds.concave.iter()) {
        let h = separating_hyperplane(f, i, j, cfg).ok_or_else(|| {
            Error::Internal(format!("fold pair ({i},{j}) without a separating hyperplane"))
        })?;
        hps.push(h);
    }
    let (distinct, _) = dedup_hyperplanes(&hps, cfg.geo());
    Ok(distinct)
}

/// Full-dimensional cells of the fold arrangement restricted to `domain`.
pub fn build_cells<T: Scalar>(
    domain: &Polyhedron<T>,
    hps: &[Hyperplane<T>],
    cfg: &Config,
) -> Result<Vec<Polyhedron<T>>> {
    Ok(arrange::build(domain, hps, cfg)?.cell_polys())
}

/// Rebuild `f` on the given cells: each cell takes the piece of the lowest
/// region index whose interior meets the cell's interior.
pub fn relabel<T: Scalar>(
    f: &PwaFunction<T>,
    arrangement: &Arrangement<T>,
    cfg: &Config,
) -> Result<PwaFunction<T>> {
    let labels = labels_for_cells(f, &arrangement.cells, cfg)?;
    let pieces: Vec<AffinePiece<T>> = labels.iter().map(|&l| f.pieces[l].clone()).collect();
    PwaFunction::new(f.dim(), pieces, arrangement.cell_polys(), f.domain.clone())
}

/// End-to-end fold-arrangement decomposition. Infeasibility of the
/// optimization step contradicts the regular-by-construction partition and
/// is surfaced as a hard error, never silently repaired.
pub fn decompose_novel<T: Scalar>(f: &PwaFunction<T>, cfg: &Config) -> Result<Decomposition<T>> {
    let start = Instant::now();
    let lp0 = lp_call_count();
    let neighbors = f.neighbor_pairs(cfg)?;
    let folds = f.classify_folds(&neighbors, cfg);
    let hps = fold_hyperplanes(f, &folds, cfg)?;
    let arrangement = arrange::build(&f.domain, &hps, cfg)?;
    let adjacency = arrangement.adjacency(cfg)?;
    let relabeled = relabel(f, &arrangement, cfg)?;
    let sys = opt::assemble_from_arrangement(&relabeled, &arrangement, &adjacency, cfg)?;
    match opt::solve_decomposition(&sys, opt::Objective::FeasibilityOnly, cfg)? {
        opt::SolveOutcome::Feasible(mut d) => {
            d.method = Method::Novel;
            d.stats.arrangement = Some(ArrangementStats {
                hyperplanes: hps.len(),
                cells: arrangement.cells.len(),
            });
            d.stats.lp_calls = lp_call_count() - lp0;
            d.stats.wall_time_s = start.elapsed().as_secs_f64();
            Ok(d)
        }
        opt::SolveOutcome::Infeasible => Err(Error::NovelInfeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::folds::sampled_identity_residual;
    use crate::pwa::fixtures::{abs_model, zigzag_model};
    use ndarray::array;

    fn cfg() -> Config {
        Config { samples: 500, ..Config::default() }
    }

    #[test]
    fn zigzag_fold_hyperplanes_are_x0_and_x1() {
        let c = cfg();
        let f = zigzag_model();
        let neighbors = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&neighbors, &c);
        let hps = fold_hyperplanes(&f, &folds, &c).unwrap();
        assert_eq!(hps.len(), 2);
        let mut offsets: Vec<f64> = hps.iter().map(|h| h.offset / h.normal[0]).collect();
        offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((offsets[0] - 0.0).abs() < 1e-9);
        assert!((offsets[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn abs_model_single_fold_hyperplane() {
        let c = cfg();
        let f = abs_model();
        let neighbors = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&neighbors, &c);
        let hps = fold_hyperplanes(&f, &folds, &c).unwrap();
        assert_eq!(hps.len(), 1);
    }

    #[test]
    fn collinear_folds_dedup_to_one_hyperplane() {
        // Two fold pairs share the separating line x1 = 0: four boxes, the
        // function |x1| independent of x2. Dedup must keep one hyperplane.
        let f = PwaFunction::new(
            2,
            vec![
                AffinePiece::new(array![-1.0, 0.0], 0.0).unwrap(),
                AffinePiece::new(array![1.0, 0.0], 0.0).unwrap(),
                AffinePiece::new(array![-1.0, 0.0], 0.0).unwrap(),
                AffinePiece::new(array![1.0, 0.0], 0.0).unwrap(),
            ],
            vec![
                Polyhedron::from_box(&[-1.0, -1.0], &[0.0, 0.0]).unwrap(),
                Polyhedron::from_box(&[0.0, -1.0], &[1.0, 0.0]).unwrap(),
                Polyhedron::from_box(&[-1.0, 0.0], &[0.0, 1.0]).unwrap(),
                Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            ],
            Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let c = cfg();
        let neighbors = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&neighbors, &c);
        // Both (0,1) and (2,3) are convex folds across x1 = 0.
        assert_eq!(folds.convex.len(), 2);
        let hps = fold_hyperplanes(&f, &folds, &c).unwrap();
        assert_eq!(hps.len(), 1);
    }

    #[test]
    fn build_cells_one_dimensional() {
        let c = cfg();
        let domain = Polyhedron::from_box(&[-2.0], &[2.0]).unwrap();
        let hps = vec![
            Hyperplane::new(array![1.0], 0.0, &c).unwrap(),
            Hyperplane::new(array![1.0], 1.0, &c).unwrap(),
        ];
        let cells = build_cells(&domain, &hps, &c).unwrap();
        assert_eq!(cells.len(), 3);
    }

    #[test]
    fn build_cells_without_hyperplanes_is_domain() {
        let c = cfg();
        let domain = Polyhedron::from_box(&[-2.0, -1.0], &[2.0, 1.0]).unwrap();
        let cells = build_cells(&domain, &[], &c).unwrap();
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn relabel_zigzag_reproduces_pieces() {
        let c = cfg();
        let f = zigzag_model();
        let neighbors = f.neighbor_pairs(&c).unwrap();
        let folds = f.classify_folds(&neighbors, &c);
        let hps = fold_hyperplanes(&f, &folds, &c).unwrap();
        let arrangement = arrange::build(&f.domain, &hps, &c).unwrap();
        let relabeled = relabel(&f, &arrangement, &c).unwrap();
        assert_eq!(relabeled.num_pieces(), 3);
        // Pointwise identity on samples.
        for x in [-1.7, -0.4, 0.2, 0.9, 1.3, 1.9] {
            let pt = array![x];
            let lhs = f.eval(&pt, &c).unwrap();
            let rhs = relabeled.eval(&pt, &c).unwrap();
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn relabel_affine_uses_first_region() {
        let c = cfg();
        let f = PwaFunction::new(
            1,
            vec![AffinePiece::new(array![2.0], 1.0).unwrap()],
            vec![Polyhedron::from_box(&[0.0], &[1.0]).unwrap()],
            Polyhedron::from_box(&[0.0], &[1.0]).unwrap(),
        )
        .unwrap();
        let arrangement = arrange::build(&f.domain, &[], &c).unwrap();
        let relabeled = relabel(&f, &arrangement, &c).unwrap();
        assert_eq!(relabeled.num_pieces(), 1);
        assert!(relabeled.pieces[0].approx_eq(&f.pieces[0], 1e-12));
    }

    #[test]
    fn abs_model_novel_decomposition() {
        let c = cfg();
        let f = abs_model();
        let d = decompose_novel(&f, &c).unwrap();
        // Cells {[-1,0],[0,1]}; g and h share the cell count.
        assert_eq!(d.stats.cells_g, 2);
        assert_eq!(d.stats.cells_h, 2);
        assert_eq!(d.method, Method::Novel);
        let arr = d.stats.arrangement.unwrap();
        assert_eq!(arr.hyperplanes, 1);
        assert_eq!(arr.cells, 2);
        let res = sampled_identity_residual(&f, &d, 500, c.seed, &c).unwrap();
        assert!(res <= 1e-8, "identity residual {res}");
    }

    #[test]
    fn zigzag_novel_decomposition_identity() {
        let c = cfg();
        let f = zigzag_model();
        let d = decompose_novel(&f, &c).unwrap();
        assert_eq!(d.stats.cells_g, 3);
        assert_eq!(d.stats.cells_h, 3);
        let res = sampled_identity_residual(&f, &d, 500, c.seed, &c).unwrap();
        assert!(res <= 1e-8);
    }
}
