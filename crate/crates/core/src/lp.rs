//! Dense phase-1 simplex for systems `G x <= h` with optional per-variable
//! lower bounds.
//!
//! Only feasibility is decided; there is no objective. A variable with a
//! lower bound `l` is shifted to `x = l + y, y >= 0`, a free variable is split
//! into `x = y+ - y-`. Rows whose shifted right-hand side is negative are
//! negated and receive an artificial variable; phase 1 then minimizes the
//! sum of artificials. Pricing is by most negative reduced cost; a run of
//! degenerate pivots switches to Bland's rule (smallest index for entering
//! and leaving), which rules out cycling.
//!
//! Rows are scaled by their largest coefficient before pivoting. If the
//! phase-1 vertex is so large that roundoff alone breaks the tolerance, a
//! second phase minimizes the sum of the shifted variables from there.

use thiserror::Error;

use crate::scalar::Real;

pub const PIVOT_TOL: f64 = 1e-9;
pub const FEAS_TOL: f64 = 1e-7;
pub const MAX_PIVOTS: usize = 1_000_000;
/// Consecutive non-improving pivots before pricing falls back to Bland's rule.
pub const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("system contains non-finite coefficients")]
    NonFinite,
    #[error("simplex stopped after {pivots} pivots without a verdict (phase-1 objective {objective:e})")]
    IterationLimit { pivots: usize, objective: f64 },
    #[error("recovered point violates a constraint by {violation:e}")]
    Numerical { violation: f64 },
}

/// `G x <= h`, row-major `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<T> {
    cols: usize,
    g: Vec<T>,
    h: Vec<T>,
    lower: Vec<Option<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility<T> {
    Feasible(Vec<T>),
    Infeasible,
}

impl<T> Feasibility<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn point(&self) -> Option<&[T]> {
        match self {
            Feasibility::Feasible(x) => Some(x),
            Feasibility::Infeasible => None,
        }
    }
}

impl<T: Real> LinearSystem<T> {
    /// Empty system over `cols` free variables.
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            g: Vec::new(),
            h: Vec::new(),
            lower: vec![None; cols],
        }
    }

    /// Builds a system from dense rows. Fails on ragged input.
    pub fn from_rows(g: &[Vec<T>], h: &[T], lower: Vec<Option<T>>) -> Result<Self, LpError> {
        if g.len() != h.len() {
            return Err(LpError::Dimension(format!(
                "{} constraint rows but {} bounds",
                g.len(),
                h.len()
            )));
        }
        let mut sys = Self::new(lower.len());
        sys.lower = lower;
        for (row, &b) in g.iter().zip(h) {
            sys.push_row(row, b)?;
        }
        Ok(sys)
    }

    pub fn push_row(&mut self, coeffs: &[T], rhs: T) -> Result<(), LpError> {
        if coeffs.len() != self.cols {
            return Err(LpError::Dimension(format!(
                "row has {} coefficients, system has {} variables",
                coeffs.len(),
                self.cols
            )));
        }
        self.g.extend_from_slice(coeffs);
        self.h.push(rhs);
        Ok(())
    }

    pub fn set_lower(&mut self, var: usize, bound: Option<T>) {
        self.lower[var] = bound;
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.h.len()
    }

    #[inline]
    pub fn num_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.g[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn rhs(&self, i: usize) -> T {
        self.h[i]
    }

    pub fn lower(&self, j: usize) -> Option<T> {
        self.lower[j]
    }

    /// Largest violation of any row or lower bound at `x` (zero if none).
    pub fn max_violation(&self, x: &[T]) -> T {
        let rows = (0..self.num_rows()).map(|i| crate::scalar::dot(self.row(i), x) - self.h[i]);
        let bounds = self
            .lower
            .iter()
            .zip(x)
            .filter_map(|(l, &xj)| l.map(|l| l - xj));
        rows.chain(bounds).fold(T::zero(), |m, v| m.max(v))
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.g.len() != self.h.len() * self.cols || self.lower.len() != self.cols {
            return Err(LpError::Dimension("inconsistent system storage".into()));
        }
        let finite = self.g.iter().chain(&self.h).all(|v| v.is_finite())
            && self.lower.iter().flatten().all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(LpError::NonFinite)
        }
    }
}

/// Decides whether `sys` has a solution; a returned point satisfies every
/// row and bound within [`FEAS_TOL`].
pub fn feasible<T: Real>(sys: &LinearSystem<T>) -> Result<Feasibility<T>, LpError> {
    sys.validate()?;
    let mut tab = Tableau::build(sys);
    tab.solve()?;
    if tab.objective() > T::lit(FEAS_TOL) {
        return Ok(Feasibility::Infeasible);
    }
    let mut x = tab.recover(sys);
    let mut violation = sys.max_violation(&x);
    if violation > T::lit(FEAS_TOL) {
        // Values read off the tableau carry the error of every pivot;
        // solving with the final basis against the original rows does not.
        tab.refine_into(sys, &mut x, &mut violation);
    }
    if violation > T::lit(FEAS_TOL) {
        // The vertex may be so large that even that is not enough; move to
        // a vertex of small magnitude instead.
        tab.minimize_magnitude()?;
        x = tab.recover(sys);
        violation = sys.max_violation(&x);
        if violation > T::lit(FEAS_TOL) {
            tab.refine_into(sys, &mut x, &mut violation);
        }
    }
    if violation > T::lit(FEAS_TOL) {
        return Err(LpError::Numerical {
            violation: violation.to_f64_lossy(),
        });
    }
    Ok(Feasibility::Feasible(x))
}

/// Yes/no version of [`feasible`]: whether the phase-1 optimum is within
/// [`FEAS_TOL`], without extracting a point.
///
/// Near the boundary of a parametrized family the only solutions can be so
/// large that no floating-point point meets the absolute tolerance, although
/// the system is feasible; [`feasible`] then reports
/// [`LpError::Numerical`] while this still answers `true`.
pub fn is_feasible<T: Real>(sys: &LinearSystem<T>) -> Result<bool, LpError> {
    sys.validate()?;
    let mut tab = Tableau::build(sys);
    tab.solve()?;
    Ok(tab.objective() <= T::lit(FEAS_TOL))
}

/// Structural column `c` maps to original variable `var` with sign `sign`.
#[derive(Clone, Copy)]
struct ColumnMap {
    var: usize,
    negated: bool,
}

struct Tableau<T> {
    m: usize,
    /// Structural + slack + artificial columns (RHS excluded).
    n: usize,
    width: usize,
    n_struct: usize,
    first_art: usize,
    data: Vec<T>,
    /// Reduced costs of the phase-1 objective; last slot holds `-w`.
    cost: Vec<T>,
    basis: Vec<usize>,
    dead: Vec<bool>,
    columns: Vec<ColumnMap>,
}

impl<T: Real> Tableau<T> {
    fn build(sys: &LinearSystem<T>) -> Self {
        let m = sys.num_rows();
        let mut columns = Vec::new();
        for j in 0..sys.cols {
            columns.push(ColumnMap { var: j, negated: false });
            if sys.lower[j].is_none() {
                columns.push(ColumnMap { var: j, negated: true });
            }
        }
        let n_struct = columns.len();

        let mut rhs = Vec::with_capacity(m);
        for i in 0..m {
            let shift: T = sys
                .row(i)
                .iter()
                .zip(&sys.lower)
                .map(|(&g, l)| l.map_or(T::zero(), |l| g * l))
                .sum();
            rhs.push(sys.h[i] - shift);
        }
        let n_art = rhs.iter().filter(|&&b| b < T::zero()).count();
        let first_art = n_struct + m;
        let n = first_art + n_art;
        let width = n + 1;

        let mut data = vec![T::zero(); m * width];
        let mut basis = Vec::with_capacity(m);
        let mut cost = vec![T::zero(); width];
        let mut art = first_art;
        for i in 0..m {
            let row = &mut data[i * width..(i + 1) * width];
            let coeffs = sys.row(i);
            // Row scaling leaves the feasible set unchanged and keeps the
            // tableau entries of order one.
            let scale = coeffs.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
            let scale = if scale > T::zero() { T::one() / scale } else { T::one() };
            let flip = rhs[i] < T::zero();
            let sign = if flip { -scale } else { scale };
            for (c, map) in columns.iter().enumerate() {
                let v = coeffs[map.var];
                row[c] = sign * if map.negated { -v } else { v };
            }
            row[n_struct + i] = if flip { -T::one() } else { T::one() };
            row[n] = sign * rhs[i];
            if flip {
                row[art] = T::one();
                basis.push(art);
                art += 1;
                for c in 0..first_art {
                    cost[c] -= row[c];
                }
                cost[n] -= row[n];
            } else {
                basis.push(n_struct + i);
            }
        }

        Self {
            m,
            n,
            width,
            n_struct,
            first_art,
            data,
            cost,
            basis,
            dead: vec![false; n],
            columns,
        }
    }

    /// Current phase-1 objective (sum of artificials).
    fn objective(&self) -> T {
        -self.cost[self.n]
    }

    fn solve(&mut self) -> Result<(), LpError> {
        // Run to the phase-1 optimum: stopping at a merely small objective
        // leaves residual artificials that show up as violations once the
        // row scaling is undone.
        let done_tol = T::epsilon() * T::lit(16.0);
        self.iterate(|tab| tab.objective() <= done_tol)
    }

    /// Phase 2 from a feasible basis: minimize the sum of the structural
    /// columns (shifted bounded variables and both halves of free ones).
    fn minimize_magnitude(&mut self) -> Result<(), LpError> {
        let w = self.width;
        // Artificials must stay at zero: forbid them from re-entering.
        for c in self.first_art..self.n {
            self.dead[c] = true;
        }
        let unit = |c: usize| if c < self.n_struct { T::one() } else { T::zero() };
        let mut cost = vec![T::zero(); w];
        for (c, v) in cost.iter_mut().enumerate().take(self.n) {
            *v = unit(c);
        }
        for i in 0..self.m {
            let cb = unit(self.basis[i]);
            if cb != T::zero() {
                for (c, v) in cost.iter_mut().enumerate() {
                    *v -= cb * self.data[i * w + c];
                }
            }
        }
        self.cost = cost;
        self.iterate(|_| false)
    }

    /// Primal simplex on the current cost row until no improving column is
    /// left or `done` holds.
    ///
    /// Columns are priced by the most negative reduced cost; after
    /// [`DEGENERATE_RUN`] pivots without progress the rule switches to
    /// Bland's (smallest index for entering and leaving), which cannot
    /// cycle, and stays there until the objective moves again.
    fn iterate(&mut self, done: impl Fn(&Self) -> bool) -> Result<(), LpError> {
        let pivot_tol = T::lit(PIVOT_TOL);
        let mut stalled = 0usize;
        for _ in 0..MAX_PIVOTS {
            if done(self) {
                return Ok(());
            }
            let before = self.cost[self.n];
            let Some((row, col)) = self.select(stalled >= DEGENERATE_RUN, pivot_tol) else {
                return Ok(());
            };
            self.pivot(row, col);
            if self.cost[self.n] == before {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        Err(LpError::IterationLimit {
            pivots: MAX_PIVOTS,
            objective: -self.cost[self.n].to_f64_lossy(),
        })
    }

    /// Entering column and leaving row. A column whose entries are all below
    /// the pivot tolerance only looks improving through roundoff in the cost
    /// row (the objectives here are bounded below), so it is passed over.
    fn select(&self, bland: bool, pivot_tol: T) -> Option<(usize, usize)> {
        let improving = (0..self.n).filter(|&c| !self.dead[c] && self.cost[c] < -pivot_tol);
        if bland {
            return improving
                .into_iter()
                .find_map(|c| self.ratio_test(c, pivot_tol).map(|r| (r, c)));
        }
        let mut cands: Vec<usize> = improving.collect();
        cands.sort_by(|&a, &b| self.cost[a].partial_cmp(&self.cost[b]).unwrap_or(std::cmp::Ordering::Equal));
        cands
            .into_iter()
            .find_map(|c| self.ratio_test(c, pivot_tol).map(|r| (r, c)))
    }

    /// Minimum-ratio row; ties go to the smallest basic variable index.
    fn ratio_test(&self, col: usize, pivot_tol: T) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for i in 0..self.m {
            let a = self.data[i * self.width + col];
            if a <= pivot_tol {
                continue;
            }
            let ratio = self.data[i * self.width + self.n] / a;
            best = match best {
                None => Some((i, ratio)),
                Some((r, br)) => {
                    if ratio < br || (ratio == br && self.basis[i] < self.basis[r]) {
                        Some((i, ratio))
                    } else {
                        Some((r, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let w = self.width;
        let inv = T::one() / self.data[prow * w + pcol];
        {
            let row = &mut self.data[prow * w..(prow + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[pcol] = T::one();
        }
        let nz: Vec<usize> = (0..w)
            .filter(|&j| self.data[prow * w + j] != T::zero())
            .collect();
        let pivot_row: Vec<T> = nz.iter().map(|&j| self.data[prow * w + j]).collect();

        for i in 0..self.m {
            if i == prow {
                continue;
            }
            let f = self.data[i * w + pcol];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (&j, &v) in nz.iter().zip(&pivot_row) {
                row[j] -= f * v;
            }
            row[pcol] = T::zero();
        }
        let f = self.cost[pcol];
        if f != T::zero() {
            for (&j, &v) in nz.iter().zip(&pivot_row) {
                self.cost[j] -= f * v;
            }
            self.cost[pcol] = T::zero();
        }

        let leaving = self.basis[prow];
        if leaving >= self.first_art {
            self.dead[leaving] = true;
        }
        self.basis[prow] = pcol;
    }

    /// Point of the current basis recomputed from the original rows:
    /// `row_i . y + s_i - a_i = rhs_i` restricted to the basic columns,
    /// solved by Gaussian elimination with partial pivoting. `None` if the
    /// basis matrix is numerically singular.
    fn refine(&self, sys: &LinearSystem<T>) -> Option<Vec<T>> {
        let m = self.m;
        let mut b = vec![T::zero(); m * m];
        let mut rhs = vec![T::zero(); m];
        for i in 0..m {
            let coeffs = sys.row(i);
            let shift: T = coeffs
                .iter()
                .zip(&sys.lower)
                .map(|(&g, l)| l.map_or(T::zero(), |l| g * l))
                .sum();
            rhs[i] = sys.h[i] - shift;
        }
        // Artificial k belongs to the k-th flipped row.
        let flipped: Vec<usize> = (0..m).filter(|&i| rhs[i] < T::zero()).collect();
        for (r, &col) in self.basis.iter().enumerate() {
            if col < self.n_struct {
                let map = self.columns[col];
                for i in 0..m {
                    let v = sys.row(i)[map.var];
                    b[i * m + r] = if map.negated { -v } else { v };
                }
            } else if col < self.first_art {
                b[(col - self.n_struct) * m + r] = T::one();
            } else {
                b[flipped[col - self.first_art] * m + r] = -T::one();
            }
        }
        let z = solve_dense(&mut b, &mut rhs, m)?;
        let mut x: Vec<T> = sys.lower.iter().map(|l| l.unwrap_or(T::zero())).collect();
        for (r, &col) in self.basis.iter().enumerate() {
            if col < self.n_struct {
                // Basic values may come out a hair negative.
                let v = z[r].max(T::zero());
                let map = self.columns[col];
                if map.negated {
                    x[map.var] -= v;
                } else {
                    x[map.var] += v;
                }
            }
        }
        Some(x)
    }

    /// Replaces `x` by the refined point if that violates less.
    fn refine_into(&self, sys: &LinearSystem<T>, x: &mut Vec<T>, violation: &mut T) {
        if let Some(refined) = self.refine(sys) {
            let v = sys.max_violation(&refined);
            if v < *violation {
                *x = refined;
                *violation = v;
            }
        }
    }

    fn recover(&self, sys: &LinearSystem<T>) -> Vec<T> {
        let mut x: Vec<T> = sys.lower.iter().map(|l| l.unwrap_or(T::zero())).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                let v = self.data[i * self.width + self.n];
                let map = self.columns[b];
                if map.negated {
                    x[map.var] -= v;
                } else {
                    x[map.var] += v;
                }
            }
        }
        x
    }
}

/// Solves `a x = b` in place (`a` row-major `n x n`).
fn solve_dense<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Option<Vec<T>> {
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| {
            a[i * n + k]
                .abs()
                .partial_cmp(&a[j * n + k].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv * n + k].abs() <= T::epsilon() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k * n + j] * x[j];
        }
        x[k] = acc / a[k * n + k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: &[(&[f64], f64)], lower: Vec<Option<f64>>) -> LinearSystem<f64> {
        let g: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r.to_vec()).collect();
        let h: Vec<f64> = rows.iter().map(|(_, b)| *b).collect();
        LinearSystem::from_rows(&g, &h, lower).unwrap()
    }

    #[test]
    fn interval_is_feasible() {
        let s = sys(&[(&[1.0], 1.0), (&[-1.0], 0.0)], vec![None]);
        let x = feasible(&s).unwrap();
        let p = x.point().unwrap();
        assert!(p[0] >= -FEAS_TOL && p[0] <= 1.0 + FEAS_TOL);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let s = sys(&[(&[1.0], 0.0), (&[-1.0], -1.0)], vec![None]);
        assert_eq!(feasible(&s).unwrap(), Feasibility::Infeasible);
    }

    #[test]
    fn lower_bounds_are_honoured() {
        // x <= 0.5 with x >= 1
        let s = sys(&[(&[1.0], 0.5)], vec![Some(1.0)]);
        assert!(!feasible(&s).unwrap().is_feasible());
        let s = sys(&[(&[1.0], 3.0)], vec![Some(1.0)]);
        let x = feasible(&s).unwrap();
        assert!(x.point().unwrap()[0] >= 1.0);
    }

    #[test]
    fn empty_system_is_feasible() {
        let s = LinearSystem::<f64>::new(3);
        assert_eq!(feasible(&s).unwrap(), Feasibility::Feasible(vec![0.0; 3]));
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let mut s = LinearSystem::<f64>::new(2);
        assert!(matches!(s.push_row(&[1.0], 0.0), Err(LpError::Dimension(_))));
        assert!(LinearSystem::from_rows(&[vec![1.0]], &[], vec![None]).is_err());
        s.push_row(&[f64::NAN, 1.0], 0.0).unwrap();
        assert_eq!(feasible(&s), Err(LpError::NonFinite));
    }

    #[test]
    fn works_in_single_precision() {
        let g = vec![vec![1.0f32, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let s = LinearSystem::from_rows(&g, &[1.0, -0.25, -0.25], vec![None, None]).unwrap();
        let x = feasible(&s).unwrap();
        assert!(s.max_violation(x.point().unwrap()) <= 1e-6);
    }
}
