//! Dense linear-programming kernel.
//!
//! Two-phase primal simplex on a dense tableau. Dantzig pricing with a
//! permanent switch to Bland's rule once the objective stalls, so cycling
//! cannot occur. Infeasibility is certified by a positive phase-one
//! optimum, unboundedness by an entering column without a blocking row.
//!
//! Every geometric predicate in the crate reduces to `solve` or
//! [`chebyshev`], so statuses here must be trustworthy: an `Optimal`
//! result is re-checked against the original constraints before it is
//! returned.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

/// Global count of simplex solves, for decomposition statistics.
static LP_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of LP solves since program start.
pub fn lp_call_count() -> u64 {
    LP_CALLS.load(Ordering::Relaxed)
}

/// Per-variable bounds; `None` means unbounded on that side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarBound<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: Scalar> VarBound<T> {
    pub fn free() -> Self {
        Self { lower: None, upper: None }
    }
    pub fn nonneg() -> Self {
        Self { lower: Some(T::zero()), upper: None }
    }
    pub fn lower(l: T) -> Self {
        Self { lower: Some(l), upper: None }
    }
    pub fn range(l: T, u: T) -> Self {
        Self { lower: Some(l), upper: Some(u) }
    }
}

/// `min costᵀx  s.t.  A_ub x ≤ b_ub,  A_eq x = b_eq,  bounds`.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    pub cost: Array1<T>,
    pub a_ub: Array2<T>,
    pub b_ub: Array1<T>,
    pub a_eq: Array2<T>,
    pub b_eq: Array1<T>,
    pub bounds: Vec<VarBound<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(
        cost: Array1<T>,
        a_ub: Array2<T>,
        b_ub: Array1<T>,
        a_eq: Array2<T>,
        b_eq: Array1<T>,
        bounds: Vec<VarBound<T>>,
    ) -> Result<Self> {
        let nv = cost.len();
        if a_ub.ncols() != nv && a_ub.nrows() > 0 {
            return Err(Error::DimensionMismatch(format!(
                "A_ub has {} columns, cost has {} entries",
                a_ub.ncols(),
                nv
            )));
        }
        if a_eq.ncols() != nv && a_eq.nrows() > 0 {
            return Err(Error::DimensionMismatch(format!(
                "A_eq has {} columns, cost has {} entries",
                a_eq.ncols(),
                nv
            )));
        }
        if a_ub.nrows() != b_ub.len() || a_eq.nrows() != b_eq.len() {
            return Err(Error::DimensionMismatch(
                "constraint matrix and rhs row counts differ".into(),
            ));
        }
        if bounds.len() != nv {
            return Err(Error::DimensionMismatch(
                "bounds length differs from variable count".into(),
            ));
        }
        let finite = |x: &T| x.is_finite();
        if !cost.iter().all(finite)
            || !a_ub.iter().all(finite)
            || !b_ub.iter().all(finite)
            || !a_eq.iter().all(finite)
            || !b_eq.iter().all(finite)
        {
            return Err(Error::InvalidInput("non-finite entry in LP data".into()));
        }
        Ok(Self { cost, a_ub, b_ub, a_eq, b_eq, bounds })
    }

    /// Inequality-only LP (`A_eq` empty).
    pub fn inequality_form(
        cost: Array1<T>,
        a_ub: Array2<T>,
        b_ub: Array1<T>,
        bounds: Vec<VarBound<T>>,
    ) -> Result<Self> {
        let nv = cost.len();
        Self::new(cost, a_ub, b_ub, Array2::zeros((0, nv)), Array1::zeros(0), bounds)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a_ub.nrows() + self.a_eq.nrows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult<T> {
    pub status: LpStatus,
    /// Primal point, present iff `Optimal`.
    pub x: Option<Array1<T>>,
    /// Objective value, present iff `Optimal`.
    pub objective: Option<T>,
    pub iterations: usize,
}

impl<T: Scalar> LpResult<T> {
    fn status_only(status: LpStatus, iterations: usize) -> Self {
        Self { status, x: None, objective: None, iterations }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOpts {
    /// Iteration cap; 0 means `50 * (rows + vars)` of the standard form.
    pub max_iter: usize,
    /// Absolute feasibility tolerance.
    pub feas_tol: f64,
}

impl Default for SimplexOpts {
    fn default() -> Self {
        Self { max_iter: 0, feas_tol: 1e-8 }
    }
}

/// How each original variable is recovered from standard-form columns.
#[derive(Clone, Copy)]
enum Recover<T> {
    /// `x = shift + sign * y[col]`
    Shifted { col: usize, shift: T, negated: bool },
    /// `x = y[pos] - y[neg]`
    Split { pos: usize, neg: usize },
}

struct StandardForm<T> {
    a: Array2<T>,
    b: Array1<T>,
    cost: Array1<T>,
    n_rows: usize,
    n_cols: usize,
    /// Row kinds: true for inequality (gets a slack), false for equality.
    is_ineq: Vec<bool>,
    recover: Vec<Recover<T>>,
    trivially_infeasible: bool,
}

fn build_standard_form<T: Scalar>(lp: &LinearProgram<T>) -> StandardForm<T> {
    let nv = lp.num_vars();
    let mut recover = Vec::with_capacity(nv);
    let mut n_cols = 0usize;
    // Extra single-variable rows from two-sided bounds.
    let mut extra_rows: Vec<(usize, T)> = Vec::new();
    let mut trivially_infeasible = false;

    for vb in &lp.bounds {
        match (vb.lower, vb.upper) {
            (Some(l), None) => {
                recover.push(Recover::Shifted { col: n_cols, shift: l, negated: false });
                n_cols += 1;
            }
            (None, Some(u)) => {
                recover.push(Recover::Shifted { col: n_cols, shift: u, negated: true });
                n_cols += 1;
            }
            (Some(l), Some(u)) => {
                if l > u {
                    trivially_infeasible = true;
                }
                recover.push(Recover::Shifted { col: n_cols, shift: l, negated: false });
                extra_rows.push((n_cols, u - l));
                n_cols += 1;
            }
            (None, None) => {
                recover.push(Recover::Split { pos: n_cols, neg: n_cols + 1 });
                n_cols += 2;
            }
        }
    }

    let m_ub = lp.a_ub.nrows();
    let m_eq = lp.a_eq.nrows();
    let n_rows = m_ub + m_eq + extra_rows.len();
    let mut a = Array2::<T>::zeros((n_rows, n_cols));
    let mut b = Array1::<T>::zeros(n_rows);
    let mut is_ineq = vec![false; n_rows];

    let fill_row = |a: &mut Array2<T>,
                        b: &mut Array1<T>,
                        row: usize,
                        coeffs: ndarray::ArrayView1<T>,
                        rhs: T| {
        let mut r = rhs;
        for (j, &coef) in coeffs.iter().enumerate() {
            if coef == T::zero() {
                continue;
            }
            match recover[j] {
                Recover::Shifted { col, shift, negated } => {
                    let sign = if negated { -T::one() } else { T::one() };
                    a[[row, col]] = a[[row, col]] + coef * sign;
                    r = r - coef * shift;
                }
                Recover::Split { pos, neg } => {
                    a[[row, pos]] = a[[row, pos]] + coef;
                    a[[row, neg]] = a[[row, neg]] - coef;
                }
            }
        }
        b[row] = r;
    };

    for i in 0..m_ub {
        fill_row(&mut a, &mut b, i, lp.a_ub.row(i), lp.b_ub[i]);
        is_ineq[i] = true;
    }
    for i in 0..m_eq {
        fill_row(&mut a, &mut b, m_ub + i, lp.a_eq.row(i), lp.b_eq[i]);
    }
    for (k, &(col, ub)) in extra_rows.iter().enumerate() {
        let row = m_ub + m_eq + k;
        a[[row, col]] = T::one();
        b[row] = ub;
        is_ineq[row] = true;
    }

    // Row scaling by the max-abs coefficient keeps tolerances meaningful.
    for i in 0..n_rows {
        let mut scale = T::zero();
        for j in 0..n_cols {
            scale = scale.max(a[[i, j]].abs());
        }
        scale = scale.max(b[i].abs());
        if scale > cst(1e-30) && (scale > cst(1e3) || scale < cst(1e-3)) {
            for j in 0..n_cols {
                a[[i, j]] = a[[i, j]] / scale;
            }
            b[i] = b[i] / scale;
        }
    }

    let mut cost = Array1::<T>::zeros(n_cols);
    for (j, &c) in lp.cost.iter().enumerate() {
        match recover[j] {
            Recover::Shifted { col, negated, .. } => {
                let sign = if negated { -T::one() } else { T::one() };
                cost[col] = cost[col] + c * sign;
            }
            Recover::Split { pos, neg } => {
                cost[pos] = cost[pos] + c;
                cost[neg] = cost[neg] - c;
            }
        }
    }

    StandardForm { a, b, cost, n_rows, n_cols, is_ineq, recover, trivially_infeasible }
}

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-9;

struct Tableau<T> {
    /// `(m + 2) x (total_cols + 1)`; row `m` holds phase-two reduced costs,
    /// row `m + 1` phase-one reduced costs. Last column is the rhs.
    t: Array2<T>,
    basis: Vec<usize>,
    m: usize,
    total_cols: usize,
    iterations: usize,
    bland: bool,
    stall: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> T {
        self.t[[i, self.total_cols]]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.m;
        let w = self.total_cols + 1;
        let piv = self.t[[row, col]];
        let inv = T::one() / piv;
        for j in 0..w {
            self.t[[row, j]] = self.t[[row, j]] * inv;
        }
        for i in 0..m + 2 {
            if i == row {
                continue;
            }
            let factor = self.t[[i, col]];
            if factor == T::zero() {
                continue;
            }
            for j in 0..w {
                let upd = self.t[[row, j]] * factor;
                self.t[[i, j]] = self.t[[i, j]] - upd;
            }
            self.t[[i, col]] = T::zero();
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// One simplex phase on cost row `cost_row`. Columns `>= col_limit`
    /// are never entered. Returns `None` when optimal, `Some(col)` when an
    /// unbounded direction was found in column `col`.
    fn run_phase(
        &mut self,
        cost_row: usize,
        col_limit: usize,
        max_iter: usize,
    ) -> Result<Option<usize>> {
        let cost_eps: T = cst(COST_TOL);
        let piv_eps: T = cst(PIVOT_TOL);
        loop {
            if self.iterations > max_iter {
                return Err(Error::NumericalFailure(format!(
                    "simplex iteration cap {} exceeded",
                    max_iter
                )));
            }
            // Entering column.
            let mut enter: Option<usize> = None;
            if self.bland {
                for j in 0..col_limit {
                    if self.t[[cost_row, j]] < -cost_eps {
                        enter = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -cost_eps;
                for j in 0..col_limit {
                    let c = self.t[[cost_row, j]];
                    if c < best {
                        best = c;
                        enter = Some(j);
                    }
                }
            }
            let Some(col) = enter else { return Ok(None) };

            // Ratio test: smallest rhs/a over positive entries, ties to the
            // smallest basis index (keeps Bland's rule sound).
            let mut leave: Option<usize> = None;
            let mut best_ratio = T::infinity();
            for i in 0..self.m {
                let aij = self.t[[i, col]];
                if aij > piv_eps {
                    let ratio = self.rhs(i) / aij;
                    let better = match leave {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio - piv_eps
                                || (ratio < best_ratio + piv_eps
                                    && self.basis[i] < self.basis[cur])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else { return Ok(Some(col)) };

            let before = self.t[[cost_row, self.total_cols]];
            self.pivot(row, col);
            let after = self.t[[cost_row, self.total_cols]];
            if !self.bland {
                if after > before - cst(1e-12) {
                    self.stall += 1;
                    if self.stall > 2 * (self.m + self.total_cols) {
                        self.bland = true;
                    }
                } else {
                    self.stall = 0;
                }
            }
        }
    }
}

/// Solve with default options.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpResult<T>> {
    solve_with(lp, &SimplexOpts::default())
}

pub fn solve_with<T: Scalar>(lp: &LinearProgram<T>, opts: &SimplexOpts) -> Result<LpResult<T>> {
    LP_CALLS.fetch_add(1, Ordering::Relaxed);
    let sf = build_standard_form(lp);
    if sf.trivially_infeasible {
        return Ok(LpResult::status_only(LpStatus::Infeasible, 0));
    }
    let m = sf.n_rows;
    let n = sf.n_cols;
    let max_iter = if opts.max_iter > 0 { opts.max_iter } else { 50 * (m + n) + 200 };

    // Count slacks and artificials. A row whose rhs is negative is negated,
    // which turns its slack coefficient to -1, so it needs an artificial;
    // equality rows always do.
    let n_slacks = sf.is_ineq.iter().filter(|&&s| s).count();
    let mut n_arts = 0usize;
    for i in 0..m {
        if !sf.is_ineq[i] || sf.b[i] < T::zero() {
            n_arts += 1;
        }
    }
    let art_start = n + n_slacks;
    let total_cols = art_start + n_arts;

    let mut t = Array2::<T>::zeros((m + 2, total_cols + 1));
    let mut basis = vec![0usize; m];
    let mut slack_idx = n;
    let mut art_idx = art_start;
    for i in 0..m {
        let negate = sf.b[i] < T::zero();
        let sign = if negate { -T::one() } else { T::one() };
        for j in 0..n {
            t[[i, j]] = sf.a[[i, j]] * sign;
        }
        t[[i, total_cols]] = sf.b[i] * sign;
        if sf.is_ineq[i] {
            t[[i, slack_idx]] = sign;
            if !negate {
                basis[i] = slack_idx;
            }
            slack_idx += 1;
        }
        if !sf.is_ineq[i] || negate {
            t[[i, art_idx]] = T::one();
            basis[i] = art_idx;
            art_idx += 1;
        }
    }

    // Phase-two cost row.
    for j in 0..n {
        t[[m, j]] = sf.cost[j];
    }
    // Phase-one cost row: minimize the artificial sum. Express the reduced
    // costs by subtracting every artificial-basic row.
    for i in 0..m {
        if basis[i] >= art_start {
            for j in 0..total_cols + 1 {
                let v = t[[i, j]];
                t[[m + 1, j]] = t[[m + 1, j]] - v;
            }
        }
    }

    let mut tab = Tableau {
        t,
        basis,
        m,
        total_cols,
        iterations: 0,
        bland: false,
        stall: 0,
    };

    let feas_eps: T = cst(opts.feas_tol);

    if n_arts > 0 {
        let unbounded = tab.run_phase(m + 1, art_start, max_iter)?;
        if unbounded.is_some() {
            return Err(Error::NumericalFailure(
                "phase one reported an unbounded direction".into(),
            ));
        }
        let phase1_obj = -tab.t[[m + 1, total_cols]];
        let scale = T::one() + sf.b.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        if phase1_obj > feas_eps * scale {
            return Ok(LpResult::status_only(LpStatus::Infeasible, tab.iterations));
        }
        // Drive leftover artificials out of the basis; a row where that is
        // impossible is redundant and can be neutralized.
        let piv_eps: T = cst(PIVOT_TOL);
        for i in 0..m {
            if tab.basis[i] >= art_start {
                let mut pivoted = false;
                for j in 0..art_start {
                    if tab.t[[i, j]].abs() > piv_eps {
                        tab.pivot(i, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    // Redundant constraint: zero the row so it cannot
                    // participate in any further ratio test.
                    for j in 0..total_cols + 1 {
                        tab.t[[i, j]] = T::zero();
                    }
                    tab.t[[i, tab.basis[i]]] = T::one();
                }
            }
        }
    }

    let unbounded = tab.run_phase(m, art_start, max_iter)?;
    if unbounded.is_some() {
        return Ok(LpResult::status_only(LpStatus::Unbounded, tab.iterations));
    }

    // Recover the standard-form solution, then the original variables.
    let mut y = vec![T::zero(); art_start];
    for i in 0..m {
        if tab.basis[i] < art_start {
            y[tab.basis[i]] = tab.rhs(i);
        }
    }
    let nv = lp.num_vars();
    let mut x = Array1::<T>::zeros(nv);
    for (j, rec) in sf.recover.iter().enumerate() {
        x[j] = match *rec {
            Recover::Shifted { col, shift, negated } => {
                if negated {
                    shift - y[col]
                } else {
                    shift + y[col]
                }
            }
            Recover::Split { pos, neg } => y[pos] - y[neg],
        };
    }

    // Certify primal feasibility of the recovered point.
    let viol = feasibility_violation(lp, &x);
    let scale = T::one()
        + lp.b_ub.iter().chain(lp.b_eq.iter()).fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if viol > cst::<T>(opts.feas_tol * 100.0) * scale {
        return Err(Error::NumericalFailure(format!(
            "simplex returned a point violating constraints by {viol}"
        )));
    }

    let objective = lp.cost.dot(&x);
    Ok(LpResult {
        status: LpStatus::Optimal,
        x: Some(x),
        objective: Some(objective),
        iterations: tab.iterations,
    })
}

/// Largest constraint violation of `x` (0 when feasible).
pub fn feasibility_violation<T: Scalar>(lp: &LinearProgram<T>, x: &Array1<T>) -> T {
    let mut worst = T::zero();
    if lp.a_ub.nrows() > 0 {
        let ax = lp.a_ub.dot(x);
        for (i, &v) in ax.iter().enumerate() {
            worst = worst.max(v - lp.b_ub[i]);
        }
    }
    if lp.a_eq.nrows() > 0 {
        let ax = lp.a_eq.dot(x);
        for (i, &v) in ax.iter().enumerate() {
            worst = worst.max((v - lp.b_eq[i]).abs());
        }
    }
    for (j, vb) in lp.bounds.iter().enumerate() {
        if let Some(l) = vb.lower {
            worst = worst.max(l - x[j]);
        }
        if let Some(u) = vb.upper {
            worst = worst.max(x[j] - u);
        }
    }
    worst
}

/// Radius used to detect an unbounded inscribed ball.
const RADIUS_CAP: f64 = 1e9;

/// Chebyshev center of `{x | rows · x ≤ rhs}`.
///
/// Maximizes the inscribed-ball radius with the radius variable left free,
/// so an empty set shows up as a negative radius instead of an infeasible
/// LP. An inscribed ball that grows past [`RADIUS_CAP`] is reported as
/// radius `+∞`; the center then comes from the bounded directions only.
pub fn chebyshev<T: Scalar>(rows: &Array2<T>, rhs: &Array1<T>) -> Result<(Array1<T>, T)> {
    let m = rows.nrows();
    let n = rows.ncols();
    if m == 0 {
        return Err(Error::EmptyInput("chebyshev needs at least one row".into()));
    }
    if rhs.len() != m {
        return Err(Error::DimensionMismatch("rows/rhs length mismatch".into()));
    }
    // Variables (x, r): min -r  s.t.  V x + ‖v_i‖ r ≤ w, r ≤ cap.
    let mut a = Array2::<T>::zeros((m + 1, n + 1));
    let mut b = Array1::<T>::zeros(m + 1);
    for i in 0..m {
        let mut norm_sq = T::zero();
        for j in 0..n {
            let v = rows[[i, j]];
            a[[i, j]] = v;
            norm_sq = norm_sq + v * v;
        }
        a[[i, n]] = norm_sq.sqrt();
        b[i] = rhs[i];
    }
    a[[m, n]] = T::one();
    b[m] = cst(RADIUS_CAP);
    let mut cost = Array1::<T>::zeros(n + 1);
    cost[n] = -T::one();
    // All variables free: the simplex only moves along the cost direction,
    // and the radius is the only costed variable, capped by the extra row.
    let bounds = vec![VarBound::free(); n + 1];
    let lp = LinearProgram::inequality_form(cost, a, b, bounds)?;
    let res = solve(&lp)?;
    match res.status {
        LpStatus::Optimal => {
            let xr = res.x.expect("optimal result carries a point");
            let center = xr.slice(ndarray::s![0..n]).to_owned();
            let mut radius = xr[n];
            if radius >= cst::<T>(RADIUS_CAP * 0.99) {
                radius = T::infinity();
            }
            Ok((center, radius))
        }
        // Unreachable with the caps in place, but keep honest fallbacks.
        LpStatus::Unbounded => Ok((Array1::zeros(n), T::infinity())),
        LpStatus::Infeasible => Err(Error::NumericalFailure(
            "chebyshev LP reported infeasible despite a free radius".into(),
        )),
    }
}
