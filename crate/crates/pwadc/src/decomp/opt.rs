//! Optimization-based decomposition on a fixed partition.
//!
//! `g` and `h` keep the partition of `f`: per region the unknowns are the
//! coefficient pairs `(k_i, c_i)` of `g` and `(l_i, d_i)` of `h`, tied by
//! `a_i = k_i - l_i`, `b_i = c_i - d_i`. Convexity of both functions across
//! every shared facet is a linear feasibility problem; by Farkas's lemma
//! the pointwise inequalities on each region turn into nonnegative
//! multiplier blocks against the region's H-form rows.
//!
//! Solving exploits that, for facet-sharing pairs, continuity pins the
//! coefficient jump across the facet to a multiple of the facet normal:
//! `k_j - k_i = γ_e η_e`, `c_j - c_i = -γ_e o_e`, with `γ_e ≥ max(0, σ_e)`
//! where `σ_e` is the corresponding jump of `f`. This facet-jump system is
//! equivalent to the multiplier system and stays small: the LP has one
//! vector unknown per region plus one scalar per facet pair. Multipliers
//! are recovered afterwards (the facet row of each region supports them)
//! and the full Farkas system is re-verified at the feasibility tolerance.
//!
//! Partitions that come from a hyperplane arrangement are regular by
//! construction; there a uniform jump per hyperplane (the largest fold
//! jump along it) is always feasible, which avoids solving an LP whose
//! size grows with the cell count.

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::{Array1, Array2};

use crate::arrange::{Arrangement, FacetPair};
use crate::config::Config;
use crate::decomp::{labels_for_cells, DecompStats, Decomposition, Method};
use crate::error::{Error, Result};
use crate::geom::{dedup_hyperplanes, Hyperplane, Polyhedron};
use crate::lp::{self, lp_call_count, LinearProgram, LpStatus, VarBound};
use crate::pwa::{AffinePiece, PwaFunction};
use crate::scalar::{cst, Scalar};

/// Facet geometry of one neighbor pair `(i, j)`: unit normal oriented so
/// that region `i` lies in the `≤` half, plus the fold jump of `f`.
#[derive(Clone, Debug)]
pub struct PairGeom<T> {
    pub i: usize,
    pub j: usize,
    pub normal: Array1<T>,
    pub offset: T,
    /// `a_j - a_i = sigma * normal`.
    pub sigma: T,
    /// Irredundant row of region `i` (resp. `j`) supporting the facet.
    pub row_in_i: Option<usize>,
    pub row_in_j: Option<usize>,
    /// Arrangement hyperplane index when the partition is an arrangement.
    pub hyperplane: Option<usize>,
}

/// Variable layout of the literal multiplier LP.
#[derive(Clone, Debug)]
pub struct VarLayout {
    pub n: usize,
    pub s: usize,
    /// Per pair: offsets of (λ_ij, μ_ij, λ_ji, μ_ji) blocks.
    pub mult_offsets: Vec<(usize, usize, usize, usize)>,
    pub total_vars: usize,
}

impl VarLayout {
    pub fn k(&self, i: usize) -> usize {
        i * self.n
    }
    pub fn c(&self, i: usize) -> usize {
        self.s * self.n + i
    }
    pub fn l(&self, i: usize) -> usize {
        self.s * (self.n + 1) + i * self.n
    }
    pub fn d(&self, i: usize) -> usize {
        self.s * (2 * self.n + 1) + i
    }
}

/// The assembled convexity system for a partition.
#[derive(Clone, Debug)]
pub struct FarkasSystem<T> {
    pub f: PwaFunction<T>,
    pub pairs: Vec<PairGeom<T>>,
    /// Dense materialization of the multiplier LP; skipped above
    /// [`MATERIALIZE_CAP`] matrix entries.
    pub lp: Option<LinearProgram<T>>,
    pub layout: VarLayout,
    /// Set when every pair carries an arrangement hyperplane tag.
    pub from_arrangement: bool,
}

/// Objective for the decomposition LP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    FeasibilityOnly,
    /// Minimize the summed absolute values of all coefficients via slack
    /// variables (LP-representable stand-in for a quadratic shrinkage).
    L1Coefficients,
}

/// Typed solve outcome: infeasibility is a result, not an error.
#[derive(Debug)]
pub enum SolveOutcome<T> {
    Feasible(Decomposition<T>),
    Infeasible,
}

const MATERIALIZE_CAP: usize = 40_000_000;
/// Facet-jump LPs above this tableau size are not attempted directly.
const DIRECT_LP_CAP: usize = 60_000_000;

fn find_facet_row<T: Scalar>(
    region: &Polyhedron<T>,
    normal: &Array1<T>,
    offset: T,
    cfg: &Config,
) -> Option<usize> {
    let geo: T = cfg.geo::<T>() * cst(10.0);
    for r in 0..region.num_rows() {
        let row = region.rows().row(r);
        let nrm = row.dot(&row).sqrt();
        if nrm < cst(1e-300) {
            continue;
        }
        let ok_n = row
            .iter()
            .zip(normal.iter())
            .all(|(&v, &u)| (v / nrm - u).abs() <= geo);
        if ok_n && (region.rhs()[r] / nrm - offset).abs() <= geo {
            return Some(r);
        }
    }
    None
}

/// Facet geometry for a pair of neighboring regions of `f`.
fn pair_geometry<T: Scalar>(
    f: &PwaFunction<T>,
    i: usize,
    j: usize,
    cfg: &Config,
) -> Result<PairGeom<T>> {
    let diff = f.piece_diff(j, i); // a_j - a_i
    let a_norm = diff.a.dot(&diff.a).sqrt();
    let (hp_normal, hp_offset) = if a_norm > cst(1e-9) {
        // Fold pair: the separating hyperplane is the zero set of the
        // piece difference.
        let h = Hyperplane::new(diff.a.clone(), -diff.b, cfg)
            .ok_or_else(|| Error::Internal("degenerate separating hyperplane".into()))?;
        (h.normal, h.offset)
    } else {
        // Coinciding pieces: take the affine hull of the intersection.
        let inter = Polyhedron::new(
            ndarray::concatenate(
                ndarray::Axis(0),
                &[f.regions[i].rows().view(), f.regions[j].rows().view()],
            )
            .unwrap(),
            ndarray::concatenate(
                ndarray::Axis(0),
                &[f.regions[i].rhs().view(), f.regions[j].rhs().view()],
            )
            .unwrap(),
        )?;
        let eq = inter.implicit_equalities(cfg)?;
        let &r = eq.first().ok_or_else(|| {
            Error::Internal(format!("pair ({i},{j}) shares no facet hyperplane"))
        })?;
        let row = inter.rows().row(r).to_owned();
        let h = Hyperplane::new(row, inter.rhs()[r], cfg)
            .ok_or_else(|| Error::Internal("zero facet normal".into()))?;
        (h.normal, h.offset)
    };

    // Orient i on the ≤ side.
    let (ci, _) = f.regions[i].chebyshev();
    let (mut normal, mut offset) = (hp_normal, hp_offset);
    if normal.dot(&ci) - offset > T::zero() {
        normal = normal.mapv(|v| -v);
        offset = -offset;
    }
    let (cj, _) = f.regions[j].chebyshev();
    if normal.dot(&cj) - offset < T::zero() {
        return Err(Error::Internal(format!(
            "regions {i} and {j} lie on the same side of their facet hyperplane"
        )));
    }

    let sigma = normal.dot(&diff.a);
    // a_j - a_i must be parallel to the facet normal (continuity of f).
    let residual = (0..f.dim())
        .map(|t| (diff.a[t] - sigma * normal[t]).abs())
        .fold(T::zero(), |acc, v| acc.max(v));
    if residual > cfg.cont::<T>() * (T::one() + a_norm) {
        return Err(Error::Internal(format!(
            "piece jump across pair ({i},{j}) is not normal to the shared facet"
        )));
    }

    let row_in_i = find_facet_row(&f.regions[i], &normal, offset, cfg);
    let neg = normal.mapv(|v| -v);
    let row_in_j = find_facet_row(&f.regions[j], &neg, -offset, cfg);
    Ok(PairGeom { i, j, normal, offset, sigma, row_in_i, row_in_j, hyperplane: None })
}

fn build_layout<T: Scalar>(f: &PwaFunction<T>, pairs: &[PairGeom<T>]) -> VarLayout {
    let n = f.dim();
    let s = f.num_pieces();
    let mut total = 2 * s * (n + 1);
    let mut mult_offsets = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mi = f.regions[p.i].num_rows();
        let mj = f.regions[p.j].num_rows();
        let lam_ij = total;
        let mu_ij = total + mi;
        let lam_ji = total + 2 * mi;
        let mu_ji = total + 2 * mi + mj;
        total += 2 * (mi + mj);
        mult_offsets.push((lam_ij, mu_ij, lam_ji, mu_ji));
    }
    VarLayout { n, s, mult_offsets, total_vars: total }
}

/// Materialize the literal LP: Eq-(7) coefficient ties plus the four
/// Farkas blocks per pair.
fn materialize_lp<T: Scalar>(
    f: &PwaFunction<T>,
    pairs: &[PairGeom<T>],
    layout: &VarLayout,
) -> Result<LinearProgram<T>> {
    let n = layout.n;
    let s = layout.s;
    let ne = s * (n + 1) + pairs.len() * 4 * n;
    let ni = pairs.len() * 4;
    let nv = layout.total_vars;

    let mut a_eq = Array2::<T>::zeros((ne, nv));
    let mut b_eq = Array1::<T>::zeros(ne);
    let mut a_ub = Array2::<T>::zeros((ni, nv));
    let b_ub = Array1::<T>::zeros(ni);

    let mut row = 0usize;
    for i in 0..s {
        for t in 0..n {
            a_eq[[row, layout.k(i) + t]] = T::one();
            a_eq[[row, layout.l(i) + t]] = -T::one();
            b_eq[row] = f.pieces[i].a[t];
            row += 1;
        }
        a_eq[[row, layout.c(i)]] = T::one();
        a_eq[[row, layout.d(i)]] = -T::one();
        b_eq[row] = f.pieces[i].b;
        row += 1;
    }

    let mut ub_row = 0usize;
    for (pi, p) in pairs.iter().enumerate() {
        let (lam_ij, mu_ij, lam_ji, mu_ji) = layout.mult_offsets[pi];
        let (i, j) = (p.i, p.j);
        let vi = f.regions[i].rows();
        let wi = f.regions[i].rhs();
        let vj = f.regions[j].rows();
        let wj = f.regions[j].rhs();
        let mi = vi.nrows();
        let mj = vj.nrows();

        // V_iᵀ λ_ij = k_j - k_i  and  V_iᵀ μ_ij = l_j - l_i.
        for t in 0..n {
            for r in 0..mi {
                a_eq[[row, lam_ij + r]] = vi[[r, t]];
            }
            a_eq[[row, layout.k(j) + t]] = -T::one();
            a_eq[[row, layout.k(i) + t]] = T::one();
            row += 1;
        }
        for t in 0..n {
            for r in 0..mi {
                a_eq[[row, mu_ij + r]] = vi[[r, t]];
            }
            a_eq[[row, layout.l(j) + t]] = -T::one();
            a_eq[[row, layout.l(i) + t]] = T::one();
            row += 1;
        }
        // Mirrored blocks on region j.
        for t in 0..n {
            for r in 0..mj {
                a_eq[[row, lam_ji + r]] = vj[[r, t]];
            }
            a_eq[[row, layout.k(i) + t]] = -T::one();
            a_eq[[row, layout.k(j) + t]] = T::one();
            row += 1;
        }
        for t in 0..n {
            for r in 0..mj {
                a_eq[[row, mu_ji + r]] = vj[[r, t]];
            }
            a_eq[[row, layout.l(i) + t]] = -T::one();
            a_eq[[row, layout.l(j) + t]] = T::one();
            row += 1;
        }

        // w_iᵀ λ_ij ≤ c_i - c_j, etc.
        for (off, m, w, plus, minus) in [
            (lam_ij, mi, wi, layout.c(i), layout.c(j)),
            (mu_ij, mi, wi, layout.d(i), layout.d(j)),
            (lam_ji, mj, wj, layout.c(j), layout.c(i)),
            (mu_ji, mj, wj, layout.d(j), layout.d(i)),
        ] {
            for r in 0..m {
                a_ub[[ub_row, off + r]] = w[r];
            }
            a_ub[[ub_row, plus]] = -T::one();
            a_ub[[ub_row, minus]] = T::one();
            ub_row += 1;
        }
    }

    let mut bounds = vec![VarBound::free(); nv];
    for vb in bounds.iter_mut().skip(2 * s * (n + 1)) {
        *vb = VarBound::nonneg();
    }
    LinearProgram::new(Array1::zeros(nv), a_ub, b_ub, a_eq, b_eq, bounds)
}

/// Assemble the convexity system for `f` on its own partition, with the
/// neighbor pairs `I`.
pub fn assemble<T: Scalar>(
    f: &PwaFunction<T>,
    neighbors: &std::collections::BTreeSet<(usize, usize)>,
    cfg: &Config,
) -> Result<FarkasSystem<T>> {
    let mut pairs = Vec::with_capacity(neighbors.len());
    for &(i, j) in neighbors {
        pairs.push(pair_geometry(f, i, j, cfg)?);
    }
    finish_assembly(f.clone(), pairs, false)
}

/// Assemble for an arrangement partition, reusing the builder's adjacency
/// and hyperplane tags.
pub fn assemble_from_arrangement<T: Scalar>(
    f: &PwaFunction<T>,
    arrangement: &Arrangement<T>,
    adjacency: &[FacetPair],
    cfg: &Config,
) -> Result<FarkasSystem<T>> {
    let mut pairs = Vec::with_capacity(adjacency.len());
    for fp in adjacency {
        let h = &arrangement.hyperplanes[fp.hyperplane];
        let (i, j) = (fp.minus, fp.plus);
        let diff = f.piece_diff(j, i);
        let sigma = h.normal.dot(&diff.a);
        let residual = (0..f.dim())
            .map(|t| (diff.a[t] - sigma * h.normal[t]).abs())
            .fold(T::zero(), |acc, v| acc.max(v));
        if residual > cfg.cont::<T>() * (T::one() + diff.a.dot(&diff.a).sqrt()) {
            return Err(Error::Internal(format!(
                "piece jump across cells ({i},{j}) is not normal to hyperplane {}",
                fp.hyperplane
            )));
        }
        let row_in_i = find_facet_row(&f.regions[i], &h.normal, h.offset, cfg);
        let neg = h.normal.mapv(|v| -v);
        let row_in_j = find_facet_row(&f.regions[j], &neg, -h.offset, cfg);
        pairs.push(PairGeom {
            i,
            j,
            normal: h.normal.clone(),
            offset: h.offset,
            sigma,
            row_in_i,
            row_in_j,
            hyperplane: Some(fp.hyperplane),
        });
    }
    finish_assembly(f.clone(), pairs, true)
}

fn finish_assembly<T: Scalar>(
    f: PwaFunction<T>,
    pairs: Vec<PairGeom<T>>,
    from_arrangement: bool,
) -> Result<FarkasSystem<T>> {
    let layout = build_layout(&f, &pairs);
    let n_rows = layout.s * (layout.n + 1) + pairs.len() * (4 * layout.n + 4);
    let lp = if layout.total_vars.saturating_mul(n_rows) <= MATERIALIZE_CAP {
        Some(materialize_lp(&f, &pairs, &layout)?)
    } else {
        None
    };
    Ok(FarkasSystem { f, pairs, lp, layout, from_arrangement })
}

/// A full coefficient solution with recovered multipliers.
#[derive(Clone, Debug)]
pub struct FarkasSolution<T> {
    pub k: Vec<Array1<T>>,
    pub c: Vec<T>,
    pub l: Vec<Array1<T>>,
    pub d: Vec<T>,
    /// Per pair: (λ_ij, μ_ij, λ_ji, μ_ji).
    pub multipliers: Vec<(Array1<T>, Array1<T>, Array1<T>, Array1<T>)>,
}

impl<T: Scalar> FarkasSolution<T> {
    /// Flat vector in the literal LP layout.
    pub fn to_vector(&self, layout: &VarLayout) -> Array1<T> {
        let mut x = Array1::<T>::zeros(layout.total_vars);
        for i in 0..layout.s {
            for t in 0..layout.n {
                x[layout.k(i) + t] = self.k[i][t];
                x[layout.l(i) + t] = self.l[i][t];
            }
            x[layout.c(i)] = self.c[i];
            x[layout.d(i)] = self.d[i];
        }
        for (pi, (lam_ij, mu_ij, lam_ji, mu_ji)) in self.multipliers.iter().enumerate() {
            let (o1, o2, o3, o4) = layout.mult_offsets[pi];
            for (r, &v) in lam_ij.iter().enumerate() {
                x[o1 + r] = v;
            }
            for (r, &v) in mu_ij.iter().enumerate() {
                x[o2 + r] = v;
            }
            for (r, &v) in lam_ji.iter().enumerate() {
                x[o3 + r] = v;
            }
            for (r, &v) in mu_ji.iter().enumerate() {
                x[o4 + r] = v;
            }
        }
        x
    }
}

/// Nonnegative multipliers for one Farkas block: `Vᵀλ = q`, `wᵀλ ≤ r`.
/// Uses the facet row directly when available, otherwise a small LP.
fn block_multipliers<T: Scalar>(
    region: &Polyhedron<T>,
    facet_row: Option<usize>,
    scale: T,
    q: &Array1<T>,
    r: T,
    cfg: &Config,
) -> Result<Array1<T>> {
    let m = region.num_rows();
    let mut lam = Array1::<T>::zeros(m);
    if scale.abs() <= cst(1e-14) {
        return Ok(lam);
    }
    if let Some(row) = facet_row {
        let v = region.rows().row(row);
        let nrm = v.dot(&v).sqrt();
        lam[row] = scale / nrm;
        return Ok(lam);
    }
    // Fallback LP: min Σλ s.t. Vᵀλ = q, wᵀλ ≤ r, λ ≥ 0.
    let n = region.dim();
    let mut a_eq = Array2::<T>::zeros((n, m));
    for t in 0..n {
        for rr in 0..m {
            a_eq[[t, rr]] = region.rows()[[rr, t]];
        }
    }
    let mut a_ub = Array2::<T>::zeros((1, m));
    for rr in 0..m {
        a_ub[[0, rr]] = region.rhs()[rr];
    }
    let lp = LinearProgram::new(
        Array1::ones(m),
        a_ub,
        Array1::from_elem(1, r),
        a_eq,
        q.clone(),
        vec![VarBound::nonneg(); m],
    )?;
    let res = lp::solve(&lp)?;
    match res.status {
        LpStatus::Optimal => Ok(res.x.unwrap()),
        _ => Err(Error::NumericalFailure(
            "multiplier recovery LP did not find a feasible block".into(),
        )),
    }
}

/// Verify a solution against the Farkas conditions pairwise, returning the
/// worst residual (works at any scale, materialized LP or not).
pub fn verify_solution<T: Scalar>(sys: &FarkasSystem<T>, sol: &FarkasSolution<T>) -> T {
    let f = &sys.f;
    let n = f.dim();
    let mut worst = T::zero();
    for i in 0..f.num_pieces() {
        for t in 0..n {
            worst = worst.max((sol.k[i][t] - sol.l[i][t] - f.pieces[i].a[t]).abs());
        }
        worst = worst.max((sol.c[i] - sol.d[i] - f.pieces[i].b).abs());
    }
    for (pi, p) in sys.pairs.iter().enumerate() {
        let (lam_ij, mu_ij, lam_ji, mu_ji) = &sol.multipliers[pi];
        let (i, j) = (p.i, p.j);
        let blocks = [
            (i, lam_ij, &sol.k[j] - &sol.k[i], sol.c[i] - sol.c[j]),
            (i, mu_ij, &sol.l[j] - &sol.l[i], sol.d[i] - sol.d[j]),
            (j, lam_ji, &sol.k[i] - &sol.k[j], sol.c[j] - sol.c[i]),
            (j, mu_ji, &sol.l[i] - &sol.l[j], sol.d[j] - sol.d[i]),
        ];
        for (reg, lam, q, r) in blocks {
            let region = &f.regions[reg];
            for &v in lam.iter() {
                worst = worst.max(-v);
            }
            let vt_lam = region.rows().t().dot(lam);
            for t in 0..n {
                worst = worst.max((vt_lam[t] - q[t]).abs());
            }
            let w_lam = region.rhs().dot(lam);
            worst = worst.max(w_lam - r);
        }
    }
    worst
}

/// Build the facet-jump LP. Variables: `(k_i, c_i)` per region then one
/// `γ_e` per pair (bounded below by `max(0, σ_e)`). Optional L1 slacks.
fn jump_lp<T: Scalar>(
    sys: &FarkasSystem<T>,
    objective: Objective,
) -> Result<(LinearProgram<T>, usize)> {
    let f = &sys.f;
    let n = f.dim();
    let s = f.num_pieces();
    let np = sys.pairs.len();
    let base = s * (n + 1);
    let (extra_vars, extra_rows) = match objective {
        Objective::FeasibilityOnly => (0, 0),
        Objective::L1Coefficients => (2 * s * (n + 1), 4 * s * (n + 1)),
    };
    let nv = base + np + extra_vars;
    let ne = np * (n + 1);
    let ni = extra_rows;

    let k_off = |i: usize| i * (n + 1);
    let c_off = |i: usize| i * (n + 1) + n;
    let gam_off = base;

    let mut a_eq = Array2::<T>::zeros((ne, nv));
    let b_eq = Array1::<T>::zeros(ne);
    let mut row = 0usize;
    for (pi, p) in sys.pairs.iter().enumerate() {
        for t in 0..n {
            a_eq[[row, k_off(p.j) + t]] = T::one();
            a_eq[[row, k_off(p.i) + t]] = -T::one();
            a_eq[[row, gam_off + pi]] = -p.normal[t];
            row += 1;
        }
        a_eq[[row, c_off(p.j)]] = T::one();
        a_eq[[row, c_off(p.i)]] = -T::one();
        a_eq[[row, gam_off + pi]] = p.offset;
        row += 1;
    }

    let mut bounds = vec![VarBound::free(); nv];
    for (pi, p) in sys.pairs.iter().enumerate() {
        bounds[gam_off + pi] = VarBound::lower(T::zero().max(p.sigma));
    }

    let mut cost = Array1::<T>::zeros(nv);
    let mut a_ub = Array2::<T>::zeros((ni, nv));
    let mut b_ub = Array1::<T>::zeros(ni);
    if objective == Objective::L1Coefficients {
        // Slack u bounds |k|,|c|; slack v bounds |l| = |k - a|, |d| = |c - b|.
        let u_off = base + np;
        let v_off = u_off + s * (n + 1);
        let mut r = 0usize;
        for i in 0..s {
            for t in 0..n + 1 {
                let coeff = if t < n { k_off(i) + t } else { c_off(i) };
                let target = if t < n { f.pieces[i].a[t] } else { f.pieces[i].b };
                let u = u_off + i * (n + 1) + t;
                let v = v_off + i * (n + 1) + t;
                a_ub[[r, coeff]] = T::one();
                a_ub[[r, u]] = -T::one();
                r += 1;
                a_ub[[r, coeff]] = -T::one();
                a_ub[[r, u]] = -T::one();
                r += 1;
                a_ub[[r, coeff]] = T::one();
                a_ub[[r, v]] = -T::one();
                b_ub[r] = target;
                r += 1;
                a_ub[[r, coeff]] = -T::one();
                a_ub[[r, v]] = -T::one();
                b_ub[r] = -target;
                r += 1;
                cost[u] = T::one();
                cost[v] = T::one();
                bounds[u] = VarBound::nonneg();
                bounds[v] = VarBound::nonneg();
            }
        }
    }

    Ok((LinearProgram::new(cost, a_ub, b_ub, a_eq, b_eq, bounds)?, gam_off))
}

/// Integrate the per-pair jumps into per-region coefficients over a BFS
/// spanning forest, then check every pair equation.
fn integrate_jumps<T: Scalar>(
    sys: &FarkasSystem<T>,
    gamma: &[T],
    cfg: &Config,
) -> Result<Option<FarkasSolution<T>>> {
    let f = &sys.f;
    let n = f.dim();
    let s = f.num_pieces();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); s];
    for (pi, p) in sys.pairs.iter().enumerate() {
        adj[p.i].push((p.j, pi));
        adj[p.j].push((p.i, pi));
    }
    let mut k: Vec<Option<Array1<T>>> = vec![None; s];
    let mut c: Vec<T> = vec![T::zero(); s];
    for root in 0..s {
        if k[root].is_some() {
            continue;
        }
        k[root] = Some(f.pieces[root].a.clone());
        c[root] = f.pieces[root].b;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let ki = k[i].clone().unwrap();
            let ci = c[i];
            for &(j, pi) in &adj[i] {
                if k[j].is_some() {
                    continue;
                }
                let p = &sys.pairs[pi];
                let g = gamma[pi];
                let (kj, cj) = if p.i == i {
                    (&ki + &p.normal.mapv(|v| v * g), ci - g * p.offset)
                } else {
                    (&ki - &p.normal.mapv(|v| v * g), ci + g * p.offset)
                };
                k[j] = Some(kj);
                c[j] = cj;
                queue.push_back(j);
            }
        }
    }
    let k: Vec<Array1<T>> = k.into_iter().map(|v| v.unwrap()).collect();

    // Every pair equation (tree and cycle-closing alike) must hold.
    let feas: T = cfg.feas();
    let scale = T::one()
        + k.iter()
            .flat_map(|v| v.iter())
            .fold(T::zero(), |acc, &v| acc.max(v.abs()));
    for (pi, p) in sys.pairs.iter().enumerate() {
        let g = gamma[pi];
        for t in 0..n {
            if (k[p.j][t] - k[p.i][t] - g * p.normal[t]).abs() > feas * scale * cst(100.0) {
                return Ok(None);
            }
        }
        if (c[p.j] - c[p.i] + g * p.offset).abs() > feas * scale * cst(100.0) {
            return Ok(None);
        }
    }

    let l: Vec<Array1<T>> = (0..s).map(|i| &k[i] - &f.pieces[i].a).collect();
    let d: Vec<T> = (0..s).map(|i| c[i] - f.pieces[i].b).collect();

    let mut multipliers = Vec::with_capacity(sys.pairs.len());
    for (pi, p) in sys.pairs.iter().enumerate() {
        let g = gamma[pi];
        let delta = g - p.sigma;
        let neg = p.normal.mapv(|v| -v);
        let q_k = p.normal.mapv(|v| v * g);
        let q_l = p.normal.mapv(|v| v * delta);
        let lam_ij = block_multipliers(
            &f.regions[p.i],
            p.row_in_i,
            g,
            &q_k,
            sol_r(&c, p, true),
            cfg,
        )?;
        let mu_ij = block_multipliers(
            &f.regions[p.i],
            p.row_in_i,
            delta,
            &q_l,
            sol_r(&d, p, true),
            cfg,
        )?;
        let lam_ji = block_multipliers(
            &f.regions[p.j],
            p.row_in_j,
            g,
            &neg.mapv(|v| v * g),
            sol_r(&c, p, false),
            cfg,
        )?;
        let mu_ji = block_multipliers(
            &f.regions[p.j],
            p.row_in_j,
            delta,
            &neg.mapv(|v| v * delta),
            sol_r(&d, p, false),
            cfg,
        )?;
        multipliers.push((lam_ij, mu_ij, lam_ji, mu_ji));
    }
    Ok(Some(FarkasSolution { k, c, l, d, multipliers }))
}

/// Right-hand side of the offset inequality for a block: `c_i - c_j` for
/// the forward block, `c_j - c_i` for the mirrored one.
fn sol_r<T: Scalar>(vals: &[T], p: &PairGeom<T>, forward: bool) -> T {
    if forward {
        vals[p.i] - vals[p.j]
    } else {
        vals[p.j] - vals[p.i]
    }
}

/// Solve the assembled system. Feasibility drives the facet-jump LP; on
/// arrangement partitions above the direct-LP cap a uniform jump per
/// hyperplane is constructed instead (always feasible there). Either way
/// the result is verified against the Farkas conditions before it is
/// returned as a decomposition.
pub fn solve_decomposition<T: Scalar>(
    sys: &FarkasSystem<T>,
    objective: Objective,
    cfg: &Config,
) -> Result<SolveOutcome<T>> {
    let start = Instant::now();
    let lp0 = lp_call_count();
    let f = &sys.f;
    let n = f.dim();
    let s = f.num_pieces();
    let np = sys.pairs.len();
    let est_rows = np * (n + 1);
    let est_cols = s * (n + 1) * 2 + np;
    let direct_ok = est_rows.saturating_mul(est_cols) <= DIRECT_LP_CAP;

    let gamma: Vec<T> = if direct_ok {
        let (lp, gam_off) = jump_lp(sys, objective)?;
        let res = lp::solve(&lp)?;
        match res.status {
            LpStatus::Infeasible => return Ok(SolveOutcome::Infeasible),
            LpStatus::Unbounded => {
                return Err(Error::NumericalFailure(
                    "facet-jump LP reported unbounded".into(),
                ))
            }
            LpStatus::Optimal => {
                let x = res.x.unwrap();
                (0..np).map(|pi| x[gam_off + pi]).collect()
            }
        }
    } else if sys.from_arrangement {
        if objective == Objective::L1Coefficients {
            return Err(Error::NumericalFailure(
                "L1 objective is not supported at this partition size".into(),
            ));
        }
        // Uniform jump per hyperplane: the largest fold jump along it.
        let n_h = sys
            .pairs
            .iter()
            .filter_map(|p| p.hyperplane)
            .max()
            .map_or(0, |m| m + 1);
        let mut gamma_t = vec![T::zero(); n_h];
        for p in &sys.pairs {
            let t = p.hyperplane.expect("arrangement pairs carry hyperplane tags");
            gamma_t[t] = gamma_t[t].max(p.sigma).max(T::zero());
        }
        sys.pairs
            .iter()
            .map(|p| gamma_t[p.hyperplane.unwrap()])
            .collect()
    } else {
        return Err(Error::NumericalFailure(format!(
            "convexity system too large for a direct solve ({np} pairs, {s} regions) \
             and the partition is not an arrangement"
        )));
    };

    let Some(sol) = integrate_jumps(sys, &gamma, cfg)? else {
        // Jump values satisfy no consistent potential: with an LP route this
        // cannot happen; the constructive route would signal a geometry bug.
        return Err(Error::Internal(
            "facet jumps admit no consistent coefficient field".into(),
        ));
    };

    // Certify against the Farkas conditions.
    let residual = verify_solution(sys, &sol);
    let scale = T::one()
        + sol
            .k
            .iter()
            .flat_map(|v| v.iter())
            .fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if residual > cfg.feas::<T>() * scale * cst(100.0) {
        return Err(Error::NumericalFailure(format!(
            "recovered solution violates the Farkas system by {residual}"
        )));
    }

    let g = PwaFunction::new(
        n,
        (0..s)
            .map(|i| AffinePiece::new(sol.k[i].clone(), sol.c[i]))
            .collect::<Result<Vec<_>>>()?,
        f.regions.clone(),
        f.domain.clone(),
    )?;
    let h = PwaFunction::new(
        n,
        (0..s)
            .map(|i| AffinePiece::new(sol.l[i].clone(), sol.d[i]))
            .collect::<Result<Vec<_>>>()?,
        f.regions.clone(),
        f.domain.clone(),
    )?;
    let stats = DecompStats {
        cells_g: g.num_pieces(),
        cells_h: h.num_pieces(),
        lp_calls: lp_call_count() - lp0,
        wall_time_s: start.elapsed().as_secs_f64(),
        regularized: false,
        arrangement: None,
        domain_convex: true,
    };
    Ok(SolveOutcome::Feasible(Decomposition { g, h, method: Method::Optim, stats }))
}

/// Extend every region facet hyperplane across the domain and rebuild `f`
/// on the resulting arrangement cells. The returned function equals `f`
/// pointwise; the partition is regular, so the optimization-based route
/// becomes feasible.
pub fn regularize_arrangement<T: Scalar>(
    f: &PwaFunction<T>,
    cfg: &Config,
) -> Result<(PwaFunction<T>, Arrangement<T>)> {
    if !f.domain.is_bounded() {
        return Err(Error::UnboundedDomain("regularization needs a bounded domain".into()));
    }
    let mut hps = Vec::new();
    for region in &f.regions {
        for r in 0..region.num_rows() {
            if let Some(h) =
                Hyperplane::new(region.rows().row(r).to_owned(), region.rhs()[r], cfg)
            {
                hps.push(h);
            }
        }
    }
    let (distinct, _) = dedup_hyperplanes(&hps, cfg.geo());
    let arrangement = crate::arrange::build(&f.domain, &distinct, cfg)?;
    let labels = labels_for_cells(f, &arrangement.cells, cfg)?;
    let pieces: Vec<AffinePiece<T>> =
        labels.iter().map(|&l| f.pieces[l].clone()).collect();
    let regions = arrangement.cell_polys();
    let out = PwaFunction::new(f.dim(), pieces, regions, f.domain.clone())?;
    Ok((out, arrangement))
}

/// Options for the end-to-end optimization-based route.
#[derive(Clone, Copy, Debug)]
pub struct OptimOptions {
    pub objective: Objective,
    /// Retry on the regularized partition when the raw one is infeasible.
    pub regularize_fallback: bool,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { objective: Objective::FeasibilityOnly, regularize_fallback: true }
    }
}

/// Raw-partition attempt with optional regularize-and-retry fallback.
pub fn decompose_optim<T: Scalar>(
    f: &PwaFunction<T>,
    opts: &OptimOptions,
    cfg: &Config,
) -> Result<SolveOutcome<T>> {
    let start = Instant::now();
    let lp0 = lp_call_count();
    let neighbors = f.neighbor_pairs(cfg)?;
    let sys = assemble(f, &neighbors, cfg)?;
    match solve_decomposition(&sys, opts.objective, cfg)? {
        SolveOutcome::Feasible(mut d) => {
            d.stats.lp_calls = lp_call_count() - lp0;
            d.stats.wall_time_s = start.elapsed().as_secs_f64();
            Ok(SolveOutcome::Feasible(d))
        }
        SolveOutcome::Infeasible => {
            if !opts.regularize_fallback {
                return Ok(SolveOutcome::Infeasible);
            }
            let (refined, arrangement) = regularize_arrangement(f, cfg)?;
            let adjacency = arrangement.adjacency(cfg)?;
            let sys = assemble_from_arrangement(&refined, &arrangement, &adjacency, cfg)?;
            match solve_decomposition(&sys, opts.objective, cfg)? {
                SolveOutcome::Feasible(mut d) => {
                    d.stats.regularized = true;
                    d.stats.lp_calls = lp_call_count() - lp0;
                    d.stats.wall_time_s = start.elapsed().as_secs_f64();
                    Ok(SolveOutcome::Feasible(d))
                }
                SolveOutcome::Infeasible => Err(Error::Internal(
                    "regularized partition must admit a decomposition".into(),
                )),
            }
        }
    }
}
