//! Polyhedral geometry kernel.
//!
//! Everything here is H-representation only: a polyhedron is `{x | Vx ≤ w}`
//! and every predicate (emptiness, full dimension, facet sharing, redundancy)
//! reduces to small dense LPs. No vertex enumeration is used by the
//! predicates; the 2-D vertex helpers at the bottom exist for the MPC
//! domain hull and as an independent cross-check in tests.

use std::sync::OnceLock;

use ndarray::{concatenate, Array1, Array2, Axis};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::lp;
use crate::lp::{LinearProgram, LpStatus, VarBound};
use crate::scalar::{cst, Scalar};

/// Closed convex polyhedron `{x ∈ R^n | V x ≤ w}`.
///
/// The rows are kept exactly as given (no silent rescaling). The Chebyshev
/// data and the bounding box are computed lazily and cached; `OnceLock`
/// makes concurrent reads safe.
#[derive(Debug)]
pub struct Polyhedron<T> {
    v: Array2<T>,
    w: Array1<T>,
    cheb: OnceLock<(Array1<T>, T)>,
    bbox: OnceLock<(Array1<T>, Array1<T>)>,
}

impl<T: Clone> Clone for Polyhedron<T> {
    fn clone(&self) -> Self {
        Self {
            v: self.v.clone(),
            w: self.w.clone(),
            cheb: self.cheb.clone(),
            bbox: self.bbox.clone(),
        }
    }
}

impl<T: Scalar> PartialEq for Polyhedron<T> {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v && self.w == other.w
    }
}

impl<T: Scalar> Polyhedron<T> {
    pub fn new(v: Array2<T>, w: Array1<T>) -> Result<Self> {
        if v.nrows() == 0 {
            return Err(Error::EmptyInput("polyhedron needs at least one row".into()));
        }
        if v.nrows() != w.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows vs {} rhs entries",
                v.nrows(),
                w.len()
            )));
        }
        if !v.iter().all(|x| x.is_finite()) || !w.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite polyhedron row".into()));
        }
        Ok(Self { v, w, cheb: OnceLock::new(), bbox: OnceLock::new() })
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`.
    pub fn from_box(lo: &[T], hi: &[T]) -> Result<Self> {
        let n = lo.len();
        if hi.len() != n || n == 0 {
            return Err(Error::DimensionMismatch("box bounds length mismatch".into()));
        }
        let mut v = Array2::<T>::zeros((2 * n, n));
        let mut w = Array1::<T>::zeros(2 * n);
        for j in 0..n {
            v[[2 * j, j]] = T::one();
            w[2 * j] = hi[j];
            v[[2 * j + 1, j]] = -T::one();
            w[2 * j + 1] = -lo[j];
        }
        Self::new(v, w)
    }

    pub fn rows(&self) -> &Array2<T> {
        &self.v
    }

    pub fn rhs(&self) -> &Array1<T> {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.v.nrows()
    }

    /// Chebyshev center and inscribed-ball radius (cached).
    ///
    /// A negative radius means the set is empty; `+∞` means the inscribed
    /// ball is unbounded.
    pub fn chebyshev(&self) -> (Array1<T>, T) {
        let (c, r) = self.cheb.get_or_init(|| {
            lp::chebyshev(&self.v, &self.w)
                .unwrap_or_else(|_| (Array1::zeros(self.dim()), -T::infinity()))
        });
        (c.clone(), *r)
    }

    pub fn chebyshev_radius(&self) -> T {
        self.chebyshev().1
    }

    pub fn is_empty(&self, cfg: &Config) -> bool {
        self.chebyshev_radius() < -cfg.geo::<T>()
    }

    /// Full-dimensional iff the inscribed-ball radius reaches the dimension
    /// tolerance. Empty sets report `false`.
    pub fn is_full_dim(&self, cfg: &Config) -> bool {
        self.chebyshev_radius() >= cfg.dim_tol()
    }

    /// Componentwise bounding box (cached). Unbounded directions saturate
    /// at infinity.
    pub fn bounding_box(&self) -> (Array1<T>, Array1<T>) {
        let (lo, hi) = self.bbox.get_or_init(|| {
            let n = self.dim();
            let mut lo = Array1::<T>::zeros(n);
            let mut hi = Array1::<T>::zeros(n);
            for j in 0..n {
                let mut cost = Array1::<T>::zeros(n);
                cost[j] = T::one();
                lo[j] = self
                    .support_value(&cost, true)
                    .unwrap_or_else(|| -T::infinity());
                hi[j] = self
                    .support_value(&cost, false)
                    .unwrap_or_else(|| T::infinity());
            }
            (lo, hi)
        });
        (lo.clone(), hi.clone())
    }

    /// `true` when every bounding-box entry is finite.
    pub fn is_bounded(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        lo.iter().chain(hi.iter()).all(|v| v.is_finite())
    }

    /// Minimum (`minimize = true`) or maximum of `dirᵀx` over the set.
    /// `None` when the LP is unbounded or the set is empty.
    fn support_value(&self, dir: &Array1<T>, minimize: bool) -> Option<T> {
        let cost = if minimize { dir.clone() } else { dir.mapv(|v| -v) };
        let lp = LinearProgram::inequality_form(
            cost,
            self.v.clone(),
            self.w.clone(),
            vec![VarBound::free(); self.dim()],
        )
        .ok()?;
        let res = lp::solve(&lp).ok()?;
        match res.status {
            LpStatus::Optimal => {
                let obj = res.objective.unwrap();
                Some(if minimize { obj } else { -obj })
            }
            _ => None,
        }
    }

    /// Maximum of `dirᵀx` over the set; `None` if unbounded or empty.
    pub fn maximize(&self, dir: &Array1<T>) -> Option<(Array1<T>, T)> {
        let cost = dir.mapv(|v| -v);
        let lp = LinearProgram::inequality_form(
            cost,
            self.v.clone(),
            self.w.clone(),
            vec![VarBound::free(); self.dim()],
        )
        .ok()?;
        let res = lp::solve(&lp).ok()?;
        match res.status {
            LpStatus::Optimal => {
                let x = res.x.unwrap();
                let val = dir.dot(&x);
                Some((x, val))
            }
            _ => None,
        }
    }

    /// Membership within `tol`, scaled by each row norm.
    pub fn contains(&self, x: &Array1<T>, tol: T) -> bool {
        for i in 0..self.num_rows() {
            let row = self.v.row(i);
            let norm = row.dot(&row).sqrt().max(T::one());
            if row.dot(x) > self.w[i] + tol * norm {
                return false;
            }
        }
        true
    }

    /// Strict interior membership within `tol`.
    pub fn contains_interior(&self, x: &Array1<T>, tol: T) -> bool {
        for i in 0..self.num_rows() {
            let row = self.v.row(i);
            let norm = row.dot(&row).sqrt().max(T::one());
            if row.dot(x) >= self.w[i] - tol * norm {
                return false;
            }
        }
        true
    }

    /// Intersection by row concatenation followed by redundancy removal
    /// (skipped when the result is empty).
    pub fn intersect(&self, other: &Polyhedron<T>, cfg: &Config) -> Result<Polyhedron<T>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(
                "intersecting polyhedra of different dimension".into(),
            ));
        }
        let v = concatenate(Axis(0), &[self.v.view(), other.v.view()])
            .expect("row concatenation of equal-width matrices");
        let w = concatenate(Axis(0), &[self.w.view(), other.w.view()]).unwrap();
        let joined = Polyhedron::new(v, w)?;
        if joined.is_empty(cfg) {
            return Ok(joined);
        }
        let (reduced, _) = joined.remove_redundant_indices(cfg)?;
        Ok(reduced)
    }

    /// Drop every redundant row; the set is unchanged and each surviving
    /// row is LP-certified irredundant. Errors on an empty input.
    pub fn remove_redundant(&self, cfg: &Config) -> Result<Polyhedron<T>> {
        Ok(self.remove_redundant_indices(cfg)?.0)
    }

    /// Same as [`Self::remove_redundant`] but also reports which original
    /// row indices survived (used to carry row provenance around).
    pub fn remove_redundant_indices(&self, cfg: &Config) -> Result<(Polyhedron<T>, Vec<usize>)> {
        if self.is_empty(cfg) {
            return Err(Error::EmptyInput("remove_redundant on an empty polyhedron".into()));
        }
        let n = self.dim();
        let geo: T = cfg.geo();

        // Cheap pass: drop duplicate rows (same normalized normal/offset).
        let mut kept: Vec<usize> = Vec::with_capacity(self.num_rows());
        let mut normalized: Vec<(Array1<T>, T)> = Vec::new();
        for i in 0..self.num_rows() {
            let row = self.v.row(i).to_owned();
            let norm = row.dot(&row).sqrt();
            if norm < cst(1e-300) {
                // Zero row: trivially redundant when w >= 0 (w < 0 would have
                // made the set empty, handled above).
                continue;
            }
            let nr = row.mapv(|v| v / norm);
            let no = self.w[i] / norm;
            let dup = normalized.iter().any(|(pn, po): &(Array1<T>, T)| {
                (*po - no).abs() <= geo
                    && pn.iter().zip(nr.iter()).all(|(&a, &b)| (a - b).abs() <= geo)
            });
            if !dup {
                normalized.push((nr, no));
                kept.push(i);
            }
        }

        // LP pass: a row is redundant when maximizing it over the others
        // (itself relaxed by one unit to keep the LP bounded) cannot exceed
        // its own bound.
        let mut idx = 0usize;
        while idx < kept.len() {
            if kept.len() == 1 {
                break;
            }
            let row_i = kept[idx];
            let m = kept.len();
            let mut a = Array2::<T>::zeros((m, n));
            let mut b = Array1::<T>::zeros(m);
            for (slot, &ri) in kept.iter().enumerate() {
                for j in 0..n {
                    a[[slot, j]] = self.v[[ri, j]];
                }
                b[slot] = self.w[ri];
            }
            let row = self.v.row(row_i).to_owned();
            let norm = row.dot(&row).sqrt().max(cst(1e-300));
            b[idx] = self.w[row_i] + norm; // relax the tested row
            let cost = row.mapv(|v| -v);
            let lp = LinearProgram::inequality_form(cost, a, b, vec![VarBound::free(); n])?;
            let res = lp::solve(&lp)?;
            let redundant = match res.status {
                LpStatus::Optimal => {
                    let max_val = -res.objective.unwrap();
                    max_val <= self.w[row_i] + geo * norm
                }
                // Unbounded in the relaxed direction: the row is binding.
                _ => false,
            };
            if redundant {
                kept.remove(idx);
            } else {
                idx += 1;
            }
        }

        if kept.is_empty() {
            // Entire space within tolerance; keep one row to satisfy m >= 1.
            kept.push(0);
        }
        let mut v = Array2::<T>::zeros((kept.len(), n));
        let mut w = Array1::<T>::zeros(kept.len());
        for (slot, &ri) in kept.iter().enumerate() {
            for j in 0..n {
                v[[slot, j]] = self.v[[ri, j]];
            }
            w[slot] = self.w[ri];
        }
        Ok((Polyhedron::new(v, w)?, kept))
    }

    /// Indices of rows that hold with equality everywhere on the set
    /// (slack maximum below tolerance).
    pub fn implicit_equalities(&self, cfg: &Config) -> Result<Vec<usize>> {
        let geo: T = cfg.geo();
        let mut eq = Vec::new();
        for i in 0..self.num_rows() {
            let row = self.v.row(i).to_owned();
            let norm = row.dot(&row).sqrt();
            if norm < cst(1e-300) {
                continue;
            }
            // max slack = w_i - min v_iᵀx over the set.
            let lp = LinearProgram::inequality_form(
                row.clone(),
                self.v.clone(),
                self.w.clone(),
                vec![VarBound::free(); self.dim()],
            )?;
            let res = lp::solve(&lp)?;
            if let (LpStatus::Optimal, Some(obj)) = (res.status, res.objective) {
                if self.w[i] - obj <= geo * norm {
                    eq.push(i);
                }
            }
        }
        Ok(eq)
    }

    /// Chebyshev radius inside the affine subspace fixed by the rows in
    /// `equalities` (ball measured in the subspace metric).
    pub fn relative_interior_radius(&self, equalities: &[usize], cfg: &Config) -> Result<T> {
        let n = self.dim();
        let eq_set: std::collections::HashSet<usize> = equalities.iter().copied().collect();
        // Orthonormal basis of the equality normals via Gram-Schmidt, used
        // to project inequality normals into the subspace.
        let mut basis: Vec<Array1<T>> = Vec::new();
        for &i in equalities {
            let mut v = self.v.row(i).to_owned();
            for b in &basis {
                let d = v.dot(b);
                v = &v - &b.mapv(|x| x * d);
            }
            let norm = v.dot(&v).sqrt();
            if norm > cfg.geo() {
                basis.push(v.mapv(|x| x / norm));
            }
        }
        let ineq: Vec<usize> = (0..self.num_rows()).filter(|i| !eq_set.contains(i)).collect();
        let m = ineq.len() + 1;
        let me = equalities.len();
        let mut a_ub = Array2::<T>::zeros((m, n + 1));
        let mut b_ub = Array1::<T>::zeros(m);
        for (slot, &i) in ineq.iter().enumerate() {
            let mut row = self.v.row(i).to_owned();
            for j in 0..n {
                a_ub[[slot, j]] = row[j];
            }
            for b in &basis {
                let d = row.dot(b);
                row = &row - &b.mapv(|x| x * d);
            }
            a_ub[[slot, n]] = row.dot(&row).sqrt();
            b_ub[slot] = self.w[i];
        }
        a_ub[[ineq.len(), n]] = T::one();
        b_ub[ineq.len()] = cst(1e9);
        let mut a_eq = Array2::<T>::zeros((me, n + 1));
        let mut b_eq = Array1::<T>::zeros(me);
        for (slot, &i) in equalities.iter().enumerate() {
            for j in 0..n {
                a_eq[[slot, j]] = self.v[[i, j]];
            }
            b_eq[slot] = self.w[i];
        }
        let mut cost = Array1::<T>::zeros(n + 1);
        cost[n] = -T::one();
        let lp =
            LinearProgram::new(cost, a_ub, b_ub, a_eq, b_eq, vec![VarBound::free(); n + 1])?;
        let res = lp::solve(&lp)?;
        match res.status {
            LpStatus::Optimal => Ok(res.x.unwrap()[n]),
            LpStatus::Infeasible => Ok(-T::one()),
            LpStatus::Unbounded => Ok(T::infinity()),
        }
    }

    /// Closed halves of `P` split by `H`. Each side is present iff it is
    /// full-dimensional; a hyperplane missing the interior returns the
    /// original set on its side.
    pub fn split_by(
        &self,
        h: &Hyperplane<T>,
        cfg: &Config,
    ) -> Result<(Option<Polyhedron<T>>, Option<Polyhedron<T>>)> {
        let le = self.with_row(&h.normal, h.offset)?;
        let ge = self.with_row(&h.normal.mapv(|v| -v), -h.offset)?;
        let le_full = le.is_full_dim(cfg);
        let ge_full = ge.is_full_dim(cfg);
        match (le_full, ge_full) {
            (true, true) => Ok((
                Some(le.remove_redundant(cfg)?),
                Some(ge.remove_redundant(cfg)?),
            )),
            (true, false) => Ok((Some(self.clone()), None)),
            (false, true) => Ok((None, Some(self.clone()))),
            (false, false) => Ok((None, None)),
        }
    }

    /// New polyhedron with one extra row appended.
    pub fn with_row(&self, normal: &Array1<T>, offset: T) -> Result<Polyhedron<T>> {
        let n = self.dim();
        let m = self.num_rows();
        let mut v = Array2::<T>::zeros((m + 1, n));
        let mut w = Array1::<T>::zeros(m + 1);
        v.slice_mut(ndarray::s![0..m, ..]).assign(&self.v);
        w.slice_mut(ndarray::s![0..m]).assign(&self.w);
        for j in 0..n {
            v[[m, j]] = normal[j];
        }
        w[m] = offset;
        Polyhedron::new(v, w)
    }
}

/// `true` iff `P ∩ Q` is a shared facet: affine hull of dimension exactly
/// `n - 1` with a relative interior of positive radius.
pub fn facet_dim_check<T: Scalar>(
    p: &Polyhedron<T>,
    q: &Polyhedron<T>,
    cfg: &Config,
) -> Result<bool> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch("facet check across dimensions".into()));
    }
    let v = concatenate(Axis(0), &[p.rows().view(), q.rows().view()]).unwrap();
    let w = concatenate(Axis(0), &[p.rhs().view(), q.rhs().view()]).unwrap();
    let inter = Polyhedron::new(v, w)?;
    let radius = inter.chebyshev_radius();
    if radius < -cfg.geo::<T>() {
        return Ok(false); // empty intersection
    }
    if radius >= cfg.dim_tol() {
        return Ok(false); // full-dimensional overlap, not a facet
    }
    let eq = inter.implicit_equalities(cfg)?;
    if eq.is_empty() {
        return Ok(false);
    }
    let normals: Vec<Array1<T>> = eq
        .iter()
        .map(|&i| {
            let row = inter.rows().row(i).to_owned();
            let norm = row.dot(&row).sqrt();
            row.mapv(|v| v / norm)
        })
        .collect();
    if rank(&normals, cfg.geo()) != 1 {
        return Ok(false);
    }
    let rel = inter.relative_interior_radius(&eq, cfg)?;
    Ok(rel >= cfg.dim_tol())
}

/// Rank of a set of vectors via Gram-Schmidt with tolerance `tol`.
pub fn rank<T: Scalar>(vectors: &[Array1<T>], tol: T) -> usize {
    let mut basis: Vec<Array1<T>> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        for b in &basis {
            let d = r.dot(b);
            r = &r - &b.mapv(|x| x * d);
        }
        let norm = r.dot(&r).sqrt();
        if norm > tol {
            basis.push(r.mapv(|x| x / norm));
        }
    }
    basis.len()
}

/// Oriented hyperplane `{x | normalᵀ x = offset}` in canonical form:
/// unit normal whose first non-negligible component is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane<T> {
    pub normal: Array1<T>,
    pub offset: T,
}

impl<T: Scalar> Hyperplane<T> {
    /// Canonicalize; `None` when the normal is (numerically) zero.
    pub fn new(normal: Array1<T>, offset: T, cfg: &Config) -> Option<Self> {
        let norm = normal.dot(&normal).sqrt();
        if norm <= cfg.geo() {
            return None;
        }
        let mut n = normal.mapv(|v| v / norm);
        let mut o = offset / norm;
        let geo: T = cfg.geo();
        let lead = n.iter().find(|v| v.abs() > geo);
        if let Some(&l) = lead {
            if l < T::zero() {
                n = n.mapv(|v| -v);
                o = -o;
            }
        }
        Some(Self { normal: n, offset: o })
    }

    /// Componentwise equality within `tol` of canonical forms.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        (self.offset - other.offset).abs() <= tol
            && self
                .normal
                .iter()
                .zip(other.normal.iter())
                .all(|(&a, &b)| (a - b).abs() <= tol)
    }

    /// Signed evaluation `normalᵀ x - offset`.
    pub fn eval(&self, x: &Array1<T>) -> T {
        self.normal.dot(x) - self.offset
    }
}

/// Deduplicate canonical hyperplanes within `tol`, preserving first
/// occurrences. Returns the dedup list and, per input, the index it maps to.
pub fn dedup_hyperplanes<T: Scalar>(
    hps: &[Hyperplane<T>],
    tol: T,
) -> (Vec<Hyperplane<T>>, Vec<usize>) {
    let mut out: Vec<Hyperplane<T>> = Vec::new();
    let mut map = Vec::with_capacity(hps.len());
    for h in hps {
        match out.iter().position(|o| o.approx_eq(h, tol)) {
            Some(i) => map.push(i),
            None => {
                out.push(h.clone());
                map.push(out.len() - 1);
            }
        }
    }
    (out, map)
}

/// All vertices of a 2-D polyhedron by row-pair intersection. Exact at desk
/// scale; used for the MPC domain hull and as a test oracle.
pub fn vertices_2d<T: Scalar>(p: &Polyhedron<T>, tol: T) -> Vec<(T, T)> {
    assert_eq!(p.dim(), 2, "vertices_2d expects a 2-D polyhedron");
    let m = p.num_rows();
    let mut verts: Vec<(T, T)> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let a11 = p.rows()[[i, 0]];
            let a12 = p.rows()[[i, 1]];
            let a21 = p.rows()[[j, 0]];
            let a22 = p.rows()[[j, 1]];
            let det = a11 * a22 - a12 * a21;
            let ni = (a11 * a11 + a12 * a12).sqrt();
            let nj = (a21 * a21 + a22 * a22).sqrt();
            if det.abs() <= cst::<T>(1e-12) * ni * nj {
                continue;
            }
            let b1 = p.rhs()[i];
            let b2 = p.rhs()[j];
            let x = (b1 * a22 - a12 * b2) / det;
            let y = (a11 * b2 - b1 * a21) / det;
            let pt = ndarray::array![x, y];
            if p.contains(&pt, tol) {
                let dup = verts
                    .iter()
                    .any(|&(vx, vy)| (vx - x).abs() <= tol && (vy - y).abs() <= tol);
                if !dup {
                    verts.push((x, y));
                }
            }
        }
    }
    verts
}

/// Convex hull of 2-D points (monotone chain), returned as an H-form
/// polygon. Needs at least three non-collinear points.
pub fn convex_hull_2d<T: Scalar>(points: &[(T, T)]) -> Result<Polyhedron<T>> {
    if points.len() < 3 {
        return Err(Error::InvalidInput("hull needs at least 3 points".into()));
    }
    let mut pts: Vec<(T, T)> = points.to_vec();
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < cst(1e-12) && (a.1 - b.1).abs() < cst(1e-12));
    let cross = |o: (T, T), a: (T, T), b: (T, T)| -> T {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(T, T)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero()
        {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero()
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::InvalidInput("hull degenerated to a segment".into()));
    }
    // Counter-clockwise hull: edge (p, q) has outward normal (dy, -dx).
    let m = hull.len();
    let mut v = Array2::<T>::zeros((m, 2));
    let mut w = Array1::<T>::zeros(m);
    for i in 0..m {
        let p = hull[i];
        let q = hull[(i + 1) % m];
        let dx = q.0 - p.0;
        let dy = q.1 - p.1;
        let norm = (dx * dx + dy * dy).sqrt();
        let nx = dy / norm;
        let ny = -dx / norm;
        v[[i, 0]] = nx;
        v[[i, 1]] = ny;
        w[i] = nx * p.0 + ny * p.1;
    }
    Polyhedron::new(v, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg() -> Config {
        Config::default()
    }

    fn unit_box() -> Polyhedron<f64> {
        Polyhedron::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()
    }

    fn sorted_verts(p: &Polyhedron<f64>) -> Vec<(i64, i64)> {
        let mut v: Vec<(i64, i64)> = vertices_2d(p, 1e-7)
            .into_iter()
            .map(|(x, y)| ((x * 1e6).round() as i64, (y * 1e6).round() as i64))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn unit_box_is_full_dim() {
        assert!(unit_box().is_full_dim(&cfg()));
    }

    #[test]
    fn zero_width_slab_is_not_full_dim() {
        // {x | x1 = 0, |x2| <= 1} written with inequality rows only.
        let p = Polyhedron::new(
            array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            array![0.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        assert!(!p.is_full_dim(&cfg()));
        assert!(!p.is_empty(&cfg()));
    }

    #[test]
    fn triangle_is_full_dim() {
        let p = Polyhedron::new(
            array![[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]],
            array![0.0, 0.0, 1.0],
        )
        .unwrap();
        assert!(p.is_full_dim(&cfg()));
        // Incircle radius of the right triangle: 1/(2+sqrt(2)).
        assert!((p.chebyshev_radius() - 1.0 / (2.0 + 2.0f64.sqrt())).abs() < 1e-7);
    }

    #[test]
    fn intersect_boxes() {
        let a = unit_box();
        let b = Polyhedron::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let i = a.intersect(&b, &cfg()).unwrap();
        let expected = Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sorted_verts(&i), sorted_verts(&expected));
    }

    #[test]
    fn intersect_disjoint_boxes_is_empty() {
        let a = unit_box();
        let b = Polyhedron::from_box(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        let i = a.intersect(&b, &cfg()).unwrap();
        assert!(i.is_empty(&cfg()));
        assert!(!i.is_full_dim(&cfg()));
    }

    #[test]
    fn intersect_halfspace_removes_redundant_rows() {
        // Clip the unit box by x1 <= 0.5; compare vertex sets against the
        // brute-force vertex enumeration of the expected box.
        let a = unit_box();
        let h = Polyhedron::new(array![[1.0, 0.0]], array![0.5]).unwrap();
        let clipped = a.intersect(&h, &cfg()).unwrap();
        let expected = Polyhedron::from_box(&[-1.0, -1.0], &[0.5, 1.0]).unwrap();
        assert_eq!(sorted_verts(&clipped), sorted_verts(&expected));
        // The original x1 <= 1 row must be gone.
        assert_eq!(clipped.num_rows(), 4);
    }

    #[test]
    fn remove_redundant_drops_duplicates_and_slack_rows() {
        // Unit box with a duplicated row and a slack row x1 <= 100.
        let p = Polyhedron::new(
            array![
                [1.0, 0.0],
                [1.0, 0.0],
                [-1.0, 0.0],
                [0.0, 1.0],
                [0.0, -1.0],
                [1.0, 0.0]
            ],
            array![1.0, 1.0, 1.0, 1.0, 1.0, 100.0],
        )
        .unwrap();
        let r = p.remove_redundant(&cfg()).unwrap();
        assert_eq!(r.num_rows(), 4);
        assert_eq!(sorted_verts(&r), sorted_verts(&unit_box()));
    }

    #[test]
    fn remove_redundant_random_polygon_preserves_vertices() {
        // Hexagon plus three redundant rows; vertex sets must agree.
        let base = Polyhedron::new(
            array![
                [1.0, 0.0],
                [0.0, 1.0],
                [-1.0, 0.0],
                [0.0, -1.0],
                [1.0, 1.0],
                [-1.0, 1.0]
            ],
            array![1.0, 1.0, 1.0, 1.0, 1.5, 1.5],
        )
        .unwrap();
        let padded = Polyhedron::new(
            array![
                [1.0, 0.0],
                [0.0, 1.0],
                [-1.0, 0.0],
                [0.0, -1.0],
                [1.0, 1.0],
                [-1.0, 1.0],
                [2.0, 0.0],
                [1.0, 2.0],
                [-3.0, -3.0]
            ],
            array![1.0, 1.0, 1.0, 1.0, 1.5, 1.5, 4.0, 5.0, 100.0],
        )
        .unwrap();
        let r = padded.remove_redundant(&cfg()).unwrap();
        assert_eq!(sorted_verts(&r), sorted_verts(&base));
    }

    #[test]
    fn remove_redundant_is_idempotent() {
        let p = Polyhedron::new(
            array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]],
            array![1.0, 1.0, 1.0, 1.0, 1.5],
        )
        .unwrap();
        let once = p.remove_redundant(&cfg()).unwrap();
        let twice = once.remove_redundant(&cfg()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn remove_redundant_errors_on_empty() {
        let p = Polyhedron::new(array![[1.0], [-1.0]], array![-1.0, -1.0]).unwrap();
        assert!(matches!(p.remove_redundant(&cfg()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn facet_check_shared_edge() {
        let a = Polyhedron::from_box(&[-1.0, 0.0], &[0.0, 1.0]).unwrap();
        let b = Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(facet_dim_check(&a, &b, &cfg()).unwrap());
        // Symmetry.
        assert!(facet_dim_check(&b, &a, &cfg()).unwrap());
    }

    #[test]
    fn facet_check_corner_only() {
        let a = Polyhedron::from_box(&[-1.0, -1.0], &[0.0, 0.0]).unwrap();
        let b = Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(!facet_dim_check(&a, &b, &cfg()).unwrap());
    }

    #[test]
    fn facet_check_one_dimensional_partition() {
        // In 1-D, facets are points: [-1,0] and [0,1] share the facet {0};
        // [-1,0] and [1,2] share nothing.
        let a = Polyhedron::from_box(&[-1.0], &[0.0]).unwrap();
        let b = Polyhedron::from_box(&[0.0], &[1.0]).unwrap();
        let c = Polyhedron::from_box(&[1.0], &[2.0]).unwrap();
        assert!(facet_dim_check(&a, &b, &cfg()).unwrap());
        assert!(!facet_dim_check(&a, &c, &cfg()).unwrap());
    }

    #[test]
    fn split_box_by_vertical_line() {
        let p = unit_box();
        let h = Hyperplane::new(array![1.0, 0.0], 0.0, &cfg()).unwrap();
        let (le, ge) = p.split_by(&h, &cfg()).unwrap();
        let le = le.unwrap();
        let ge = ge.unwrap();
        let expected_le = Polyhedron::from_box(&[-1.0, -1.0], &[0.0, 1.0]).unwrap();
        let expected_ge = Polyhedron::from_box(&[0.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sorted_verts(&le), sorted_verts(&expected_le));
        assert_eq!(sorted_verts(&ge), sorted_verts(&expected_ge));
    }

    #[test]
    fn split_by_non_cutting_hyperplane() {
        let p = unit_box();
        let h = Hyperplane::new(array![1.0, 0.0], 5.0, &cfg()).unwrap();
        let (le, ge) = p.split_by(&h, &cfg()).unwrap();
        assert!(ge.is_none());
        assert_eq!(le.unwrap(), p);
    }

    #[test]
    fn split_by_boundary_supporting_line() {
        // Splitting a triangle by the line of its own hypotenuse leaves the
        // triangle intact on one side.
        let p = Polyhedron::new(
            array![[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]],
            array![0.0, 0.0, 1.0],
        )
        .unwrap();
        let h = Hyperplane::new(array![1.0, 1.0], 1.0, &cfg()).unwrap();
        let (le, ge) = p.split_by(&h, &cfg()).unwrap();
        assert!(ge.is_none());
        assert_eq!(le.unwrap(), p);
    }

    #[test]
    fn split_sample_points_land_on_one_side() {
        // Every sampled interior point of P lies in exactly one side's
        // interior or on the splitting hyperplane.
        let p = unit_box();
        let h = Hyperplane::new(array![1.0, 2.0], 0.3, &cfg()).unwrap();
        let (le, ge) = p.split_by(&h, &cfg()).unwrap();
        let (le, ge) = (le.unwrap(), ge.unwrap());
        let tol = 1e-7;
        let mut seen_le = 0;
        let mut seen_ge = 0;
        for i in 0..20 {
            for j in 0..20 {
                let x = array![-0.95 + 0.1 * i as f64, -0.95 + 0.1 * j as f64];
                if !p.contains_interior(&x, tol) {
                    continue;
                }
                let on_plane = h.eval(&x).abs() <= tol;
                let in_le = le.contains_interior(&x, tol);
                let in_ge = ge.contains_interior(&x, tol);
                if on_plane {
                    continue;
                }
                assert!(in_le ^ in_ge, "point {x} must be in exactly one side");
                if in_le {
                    seen_le += 1;
                } else {
                    seen_ge += 1;
                }
            }
        }
        assert!(seen_le > 0 && seen_ge > 0);
    }

    #[test]
    fn hyperplane_canonical_form_identifies_equal_planes() {
        let c = cfg();
        let h1: Hyperplane<f64> = Hyperplane::new(array![2.0, 0.0], 4.0, &c).unwrap();
        let h2 = Hyperplane::new(array![-1.0, 0.0], -2.0, &c).unwrap();
        assert!(h1.approx_eq(&h2, 1e-7));
        let h3 = Hyperplane::new(array![1.0, 0.0], 1.9, &c).unwrap();
        assert!(!h1.approx_eq(&h3, 1e-7));
        assert!((h1.normal[0] - 1.0).abs() < 1e-12);
        assert!((h1.offset - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hull_of_box_vertices_is_box() {
        let pts = vec![(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (0.0, 0.0)];
        let hull = convex_hull_2d(&pts).unwrap();
        assert_eq!(sorted_verts(&hull), sorted_verts(&unit_box()));
    }

    #[test]
    fn chebyshev_cache_is_consistent() {
        let p = unit_box();
        let (c1, r1) = p.chebyshev();
        let (c2, r2) = p.chebyshev();
        assert_eq!(c1, c2);
        assert_eq!(r1, r2);
        assert!((r1 - 1.0).abs() < 1e-8);
    }
}
