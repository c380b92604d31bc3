//! Incremental hyperplane-arrangement construction over a bounded domain.
//!
//! Cells are grown by splitting: each hyperplane is tested against every
//! current cell (bounding-box prefilter, then two support LPs) and cells it
//! passes through are cut in two. Only full-dimensional cells are kept, so
//! the result is exactly the set of full-dimensional arrangement cells
//! restricted to the domain — no power-set enumeration over sign vectors.
//!
//!Each cell carries row provenance (domain row or cut by hyperplane `t`),
//! which makes facet adjacency cheap to recover: two cells share a facet on
//! hyperplane `t` iff they carry opposite-side `t` rows whose traces on the
//! hyperplane overlap in an `(n-1)`-dimensional set.

use ndarray::Array1;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geom::{Hyperplane, Polyhedron};
use crate::scalar::{cst, Scalar};

/// Where a cell row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSource {
    /// Row `idx` of the domain polyhedron.
    Domain(usize),
    /// Cut by hyperplane `hyperplane`; `ge_side` marks the `≥` half.
    Cut { hyperplane: usize, ge_side: bool },
}

#[derive(Clone, Debug)]
pub struct Cell<T> {
    pub poly: Polyhedron<T>,
    pub sources: Vec<RowSource>,
    /// Side of each hyperplane this cell lies on: -1 for `≤`, +1 for `≥`.
    pub signs: Vec<i8>,
}

/// A shared facet between two cells, oriented so that cell `minus` lies in
/// the `≤` half of the hyperplane and `plus` in the `≥` half.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FacetPair {
    pub minus: usize,
    pub plus: usize,
    pub hyperplane: usize,
}

#[derive(Clone, Debug)]
pub struct Arrangement<T> {
    pub hyperplanes: Vec<Hyperplane<T>>,
    pub cells: Vec<Cell<T>>,
}

enum CutClass {
    Below,
    Above,
    Split,
}

fn classify_cut<T: Scalar>(cell: &Polyhedron<T>, h: &Hyperplane<T>, cfg: &Config) -> CutClass {
    let geo: T = cfg.geo();
    // Bounding-box interval of normalᵀx.
    let (lo, hi) = cell.bounding_box();
    let mut bb_lo = T::zero();
    let mut bb_hi = T::zero();
    for j in 0..cell.dim() {
        let c = h.normal[j];
        let a = c * lo[j];
        let b = c * hi[j];
        bb_lo = bb_lo + a.min(b);
        bb_hi = bb_hi + a.max(b);
    }
    if bb_hi <= h.offset + geo {
        return CutClass::Below;
    }
    if bb_lo >= h.offset - geo {
        return CutClass::Above;
    }
    // Exact support values.
    let max = cell
        .maximize(&h.normal)
        .map(|(_, v)| v)
        .unwrap_or_else(T::infinity);
    if max <= h.offset + geo {
        return CutClass::Below;
    }
    let min = cell
        .maximize(&h.normal.mapv(|v| -v))
        .map(|(_, v)| -v)
        .unwrap_or_else(|| -T::infinity());
    if min >= h.offset - geo {
        return CutClass::Above;
    }
    CutClass::Split
}

/// Build the arrangement of `hyperplanes` (assumed canonical and deduped)
/// restricted to `domain`.
pub fn build<T: Scalar>(
    domain: &Polyhedron<T>,
    hyperplanes: &[Hyperplane<T>],
    cfg: &Config,
) -> Result<Arrangement<T>> {
    if !domain.is_bounded() {
        return Err(Error::UnboundedDomain(
            "arrangement construction needs a bounded domain".into(),
        ));
    }
    if !domain.is_full_dim(cfg) {
        return Err(Error::InvalidInput("arrangement domain must be full-dimensional".into()));
    }
    let (base, kept) = domain.remove_redundant_indices(cfg)?;
    let root = Cell {
        poly: base,
        sources: kept.into_iter().map(RowSource::Domain).collect(),
        signs: Vec::new(),
    };
    let mut cells = vec![root];

    for (t, h) in hyperplanes.iter().enumerate() {
        let mut next: Vec<Cell<T>> = Vec::with_capacity(cells.len() + 16);
        for cell in cells.into_iter() {
            match classify_cut(&cell.poly, h, cfg) {
                CutClass::Below => {
                    let mut c = cell;
                    c.signs.push(-1);
                    next.push(c);
                }
                CutClass::Above => {
                    let mut c = cell;
                    c.signs.push(1);
                    next.push(c);
                }
                CutClass::Split => {
                    let le = cell.poly.with_row(&h.normal, h.offset)?;
                    let ge = cell.poly.with_row(&h.normal.mapv(|v| -v), -h.offset)?;
                    let le_full = le.is_full_dim(cfg);
                    let ge_full = ge.is_full_dim(cfg);
                    match (le_full, ge_full) {
                        (true, true) => {
                            for (side, ge_side) in [(le, false), (ge, true)] {
                                let (poly, kept) = side.remove_redundant_indices(cfg)?;
                                // `kept` maps surviving rows back to the
                                // parent rows plus the appended cut row.
                                let sources: Vec<RowSource> = kept
                                    .iter()
                                    .map(|&ri| {
                                        if ri < cell.sources.len() {
                                            cell.sources[ri]
                                        } else {
                                            RowSource::Cut { hyperplane: t, ge_side }
                                        }
                                    })
                                    .collect();
                                let mut signs = cell.signs.clone();
                                signs.push(if ge_side { 1 } else { -1 });
                                next.push(Cell { poly, sources, signs });
                            }
                        }
                        (true, false) => {
                            let mut c = cell;
                            c.signs.push(-1);
                            next.push(c);
                        }
                        (false, true) | (false, false) => {
                            let mut c = cell;
                            c.signs.push(1);
                            next.push(c);
                        }
                    }
                }
            }
            if next.len() > cfg.cell_cap {
                return Err(Error::CellExplosion { cap: cfg.cell_cap });
            }
        }
        cells = next;
    }

    Ok(Arrangement { hyperplanes: hyperplanes.to_vec(), cells })
}

impl<T: Scalar> Arrangement<T> {
    pub fn cell_polys(&self) -> Vec<Polyhedron<T>> {
        self.cells.iter().map(|c| c.poly.clone()).collect()
    }

    /// All facet-sharing cell pairs, oriented minus → plus per hyperplane.
    pub fn adjacency(&self, cfg: &Config) -> Result<Vec<FacetPair>> {
        let n = self.hyperplanes.first().map(|h| h.normal.len()).unwrap_or(0);
        let mut pairs = Vec::new();
        for t in 0..self.hyperplanes.len() {
            let h = &self.hyperplanes[t];
            // Cells with an irredundant row on this hyperplane, by side.
            let mut minus: Vec<usize> = Vec::new();
            let mut plus: Vec<usize> = Vec::new();
            for (ci, cell) in self.cells.iter().enumerate() {
                for (ri, src) in cell.sources.iter().enumerate() {
                    let on_t = match *src {
                        RowSource::Cut { hyperplane, .. } => hyperplane == t,
                        RowSource::Domain(_) => false,
                    };
                    if !on_t {
                        continue;
                    }
                    // Row orientation tells which side the cell is on.
                    let row = cell.poly.rows().row(ri).to_owned();
                    let d = row.dot(&h.normal);
                    if d > T::zero() {
                        minus.push(ci);
                    } else {
                        plus.push(ci);
                    }
                    break;
                }
            }
            match n {
                1 => {
                    for &i in &minus {
                        for &j in &plus {
                            pairs.push(FacetPair { minus: i, plus: j, hyperplane: t });
                        }
                    }
                }
                2 => {
                    let iv_minus = facet_intervals(self, &minus, t, cfg);
                    let iv_plus = facet_intervals(self, &plus, t, cfg);
                    let geo: T = cfg.geo();
                    for &(ci, lo_i, hi_i) in &iv_minus {
                        for &(cj, lo_j, hi_j) in &iv_plus {
                            let lo = lo_i.max(lo_j);
                            let hi = hi_i.min(hi_j);
                            if hi - lo > cst::<T>(10.0) * geo {
                                pairs.push(FacetPair { minus: ci, plus: cj, hyperplane: t });
                            }
                        }
                    }
                }
                _ => {
                    // General dimension: LP-certified facet overlap.
                    for &i in &minus {
                        for &j in &plus {
                            if boxes_touch(&self.cells[i].poly, &self.cells[j].poly, cfg)
                                && facet_overlap_radius(
                                    &self.cells[i].poly,
                                    &self.cells[j].poly,
                                    h,
                                    cfg,
                                )? >= cfg.dim_tol()
                            {
                                pairs.push(FacetPair { minus: i, plus: j, hyperplane: t });
                            }
                        }
                    }
                }
            }
        }
        Ok(pairs)
    }
}

fn boxes_touch<T: Scalar>(p: &Polyhedron<T>, q: &Polyhedron<T>, cfg: &Config) -> bool {
    let geo: T = cfg.geo();
    let (lo_p, hi_p) = p.bounding_box();
    let (lo_q, hi_q) = q.bounding_box();
    for k in 0..p.dim() {
        if lo_p[k] > hi_q[k] + geo || lo_q[k] > hi_p[k] + geo {
            return false;
        }
    }
    true
}

/// For 2-D cells touching hyperplane `t`: the parameter interval of the
/// cell's trace on the line, computed analytically from the rows.
fn facet_intervals<T: Scalar>(
    arr: &Arrangement<T>,
    cells: &[usize],
    t: usize,
    cfg: &Config,
) -> Vec<(usize, T, T)> {
    let h = &arr.hyperplanes[t];
    let q = h.normal.mapv(|v| v * h.offset); // point on the line
    let d = ndarray::array![-h.normal[1], h.normal[0]]; // direction
    let geo: T = cfg.geo();
    let mut out = Vec::with_capacity(cells.len());
    'cells: for &ci in cells {
        let poly = &arr.cells[ci].poly;
        let mut lo = -T::infinity();
        let mut hi = T::infinity();
        for r in 0..poly.num_rows() {
            let row = poly.rows().row(r);
            let coef = row.dot(&d);
            let rhs = poly.rhs()[r] - row.dot(&q);
            if coef.abs() <= cst(1e-12) {
                if rhs < -geo {
                    continue 'cells; // cell does not touch the line
                }
                continue;
            }
            let bound = rhs / coef;
            if coef > T::zero() {
                hi = hi.min(bound);
            } else {
                lo = lo.max(bound);
            }
        }
        if hi - lo > geo {
            out.push((ci, lo, hi));
        }
    }
    out
}

/// Relative-interior radius of `P ∩ Q` inside hyperplane `h`.
fn facet_overlap_radius<T: Scalar>(
    p: &Polyhedron<T>,
    q: &Polyhedron<T>,
    h: &Hyperplane<T>,
    cfg: &Config,
) -> Result<T> {
    use ndarray::{concatenate, Axis};
    let v = concatenate(Axis(0), &[p.rows().view(), q.rows().view()]).unwrap();
    let w = concatenate(Axis(0), &[p.rhs().view(), q.rhs().view()]).unwrap();
    let mut joined = Polyhedron::new(v, w)?;
    joined = joined.with_row(&h.normal, h.offset)?;
    let eq_row = joined.num_rows() - 1;
    // Fix the hyperplane as the single equality; measure the ball inside it.
    joined.relative_interior_radius(&[eq_row], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg() -> Config {
        Config::default()
    }

    fn hp(n: Vec<f64>, o: f64) -> Hyperplane<f64> {
        Hyperplane::new(Array1::from_vec(n), o, &cfg()).unwrap()
    }

    #[test]
    fn one_dimensional_three_cells() {
        let domain = Polyhedron::from_box(&[-2.0], &[2.0]).unwrap();
        let hps = vec![hp(vec![1.0], 0.0), hp(vec![1.0], 1.0)];
        let arr = build(&domain, &hps, &cfg()).unwrap();
        assert_eq!(arr.cells.len(), 3);
        // Cell centers must be one per interval [-2,0], [0,1], [1,2].
        let mut centers: Vec<f64> = arr
            .cells
            .iter()
            .map(|c| c.poly.chebyshev().0[0])
            .collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((centers[0] + 1.0).abs() < 1e-7);
        assert!((centers[1] - 0.5).abs() < 1e-7);
        assert!((centers[2] - 1.5).abs() < 1e-7);
        // Chain adjacency: two facet pairs.
        let adj = arr.adjacency(&cfg()).unwrap();
        assert_eq!(adj.len(), 2);
    }

    #[test]
    fn no_hyperplanes_single_cell() {
        let domain = Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let arr = build(&domain, &[], &cfg()).unwrap();
        assert_eq!(arr.cells.len(), 1);
        assert!(arr.adjacency(&cfg()).unwrap().is_empty());
    }

    #[test]
    fn two_crossing_lines_make_four_cells() {
        let domain = Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let hps = vec![hp(vec![1.0, 0.0], 0.0), hp(vec![0.0, 1.0], 0.0)];
        let arr = build(&domain, &hps, &cfg()).unwrap();
        assert_eq!(arr.cells.len(), 4);
        let adj = arr.adjacency(&cfg()).unwrap();
        // Quadrants share 4 edges (no diagonal adjacency).
        assert_eq!(adj.len(), 4);
        for p in &adj {
            let sm = &arr.cells[p.minus];
            let sp = &arr.cells[p.plus];
            assert_eq!(sm.signs[p.hyperplane], -1);
            assert_eq!(sp.signs[p.hyperplane], 1);
        }
    }

    #[test]
    fn non_cutting_hyperplane_keeps_cells() {
        let domain = Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let hps = vec![hp(vec![1.0, 0.0], 5.0)];
        let arr = build(&domain, &hps, &cfg()).unwrap();
        assert_eq!(arr.cells.len(), 1);
        assert_eq!(arr.cells[0].signs, vec![-1]);
    }

    #[test]
    fn generic_lines_cell_count() {
        // Three generic lines in a box: 1 + 3 + 3 = 7 cells.
        let domain = Polyhedron::from_box(&[-10.0, -10.0], &[10.0, 10.0]).unwrap();
        let hps = vec![
            hp(vec![1.0, 0.0], 0.0),
            hp(vec![0.0, 1.0], 1.0),
            hp(vec![1.0, 1.0], -2.0),
        ];
        let arr = build(&domain, &hps, &cfg()).unwrap();
        assert_eq!(arr.cells.len(), 7);
    }

    #[test]
    fn cells_partition_the_domain_on_samples() {
        let c = cfg();
        let domain = Polyhedron::from_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        let hps = vec![
            hp(vec![1.0, 0.5], 0.3),
            hp(vec![-0.2, 1.0], 0.1),
            hp(vec![1.0, -1.0], 0.0),
        ];
        let arr = build(&domain, &hps, &c).unwrap();
        let pts = crate::sample::sample_many(&domain, 500, 3, 1e-9);
        for x in &pts {
            let covering = arr.cells.iter().filter(|cell| cell.poly.contains(x, 1e-7)).count();
            assert!(covering >= 1, "point {x} not covered");
            let strict = arr
                .cells
                .iter()
                .filter(|cell| cell.poly.contains_interior(x, 1e-9))
                .count();
            assert!(strict <= 1, "point {x} interior to {strict} cells");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mut c = cfg();
        c.cell_cap = 3;
        let domain = Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let hps = vec![hp(vec![1.0, 0.0], 0.0), hp(vec![0.0, 1.0], 0.0)];
        assert!(matches!(build(&domain, &hps, &c), Err(Error::CellExplosion { cap: 3 })));
    }

    #[test]
    fn unbounded_domain_rejected() {
        let domain =
            Polyhedron::new(array![[1.0, 0.0], [0.0, 1.0]], array![1.0, 1.0]).unwrap();
        assert!(matches!(
            build(&domain, &[], &cfg()),
            Err(Error::UnboundedDomain(_))
        ));
    }
}
