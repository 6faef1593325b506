//! Bounded-variable two-phase primal simplex on a dense tableau.
//!
//! [`Simplex`] keeps its tableau between calls so that a program can be
//! re-optimized after an objective change, after appending columns, or after
//! appending rows (violated rows get a fresh artificial and phase one resumes
//! from the current basis).

use log::{debug, trace};

use super::scalar::{self, Scalar};
use super::{FarkasCertificate, LinearProgram, LpResult, RowDuals, Sense};
use crate::error::LpError;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Iteration cap per solve; `None` derives one from the problem size.
    pub max_iter: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_threshold: usize,
    /// Recompute basic values from scratch every this many pivots (inexact only).
    pub refresh_every: usize,
    /// Rebuild the tableau from the original columns every this many
    /// pivots, at least once per `rows` pivots (inexact only).
    pub reinvert_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: None,
            degeneracy_threshold: 50,
            refresh_every: 100,
            reinvert_every: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural(usize),
    Slack,
    Artificial { row: usize, negative: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Le(usize),
    Eq(usize),
}

enum PhaseEnd {
    Optimal,
    Unbounded { col: usize, dir: i8 },
}

/// Persistent simplex state over a [`LinearProgram`].
#[derive(Debug, Clone)]
pub struct Simplex<T = f64> {
    opts: SimplexOptions,
    sense: Sense,
    objective: Vec<T>,
    /// `t = B⁻¹ [A | I | art]`, row-major.
    t: Vec<Vec<T>>,
    beta: Vec<T>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    lo: Vec<Option<T>>,
    hi: Vec<Option<T>>,
    x: Vec<T>,
    cost: Vec<T>,
    d: Vec<T>,
    kinds: Vec<ColKind>,
    rows: Vec<RowKind>,
    rhs: Vec<T>,
    /// Structural coefficients, `a[row][k]`.
    a: Vec<Vec<T>>,
    struct_cols: Vec<usize>,
    slack_cols: Vec<usize>,
    le_rows: Vec<usize>,
    eq_rows: Vec<usize>,
    iterations: usize,
    /// Whether the basis comes from an earlier solve.
    warm: bool,
}

impl<T: Scalar> Simplex<T> {
    pub fn new(lp: &LinearProgram<T>, opts: SimplexOptions) -> Self {
        let n = lp.num_vars();
        let mut s = Simplex {
            opts,
            sense: lp.sense,
            objective: lp.objective.clone(),
            t: Vec::new(),
            beta: Vec::new(),
            basis: Vec::new(),
            pos: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            x: Vec::new(),
            cost: Vec::new(),
            d: Vec::new(),
            kinds: Vec::new(),
            rows: Vec::new(),
            rhs: Vec::new(),
            a: Vec::new(),
            struct_cols: Vec::new(),
            slack_cols: Vec::new(),
            le_rows: Vec::new(),
            eq_rows: Vec::new(),
            iterations: 0,
            warm: false,
        };
        for k in 0..n {
            let start = match (&lp.lower[k], &lp.upper[k]) {
                (Some(l), _) => l.clone(),
                (None, Some(h)) => h.clone(),
                (None, None) => T::zero(),
            };
            s.push_col(
                ColKind::Structural(k),
                lp.lower[k].clone(),
                lp.upper[k].clone(),
                start,
            );
            s.struct_cols.push(k);
        }
        for row in &lp.inequalities {
            s.add_row(&row.coef, row.rhs.clone(), false);
        }
        for row in &lp.equalities {
            s.add_row(&row.coef, row.rhs.clone(), true);
        }
        s
    }

    pub fn num_structural(&self) -> usize {
        self.struct_cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn set_objective(&mut self, sense: Sense, objective: Vec<T>) {
        assert_eq!(objective.len(), self.num_structural());
        self.sense = sense;
        self.objective = objective;
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    fn push_col(&mut self, kind: ColKind, lo: Option<T>, hi: Option<T>, start: T) -> usize {
        let j = self.kinds.len();
        self.kinds.push(kind);
        self.lo.push(lo);
        self.hi.push(hi);
        self.x.push(start);
        self.pos.push(None);
        self.cost.push(T::zero());
        self.d.push(T::zero());
        for row in self.t.iter_mut() {
            row.push(T::zero());
        }
        j
    }

    fn value(&self, j: usize) -> T {
        match self.pos[j] {
            Some(r) => self.beta[r].clone(),
            None => self.x[j].clone(),
        }
    }

    fn structural_values(&self) -> Vec<T> {
        self.struct_cols.iter().map(|&j| self.value(j)).collect()
    }

    /// Appends `coef · x ≤ rhs` (or `=` when `equality`). A row violated at
    /// the current point receives an artificial variable.
    fn add_row(&mut self, coef: &[T], rhs: T, equality: bool) -> usize {
        assert_eq!(coef.len(), self.num_structural());
        let i = self.rows.len();
        self.rows.push(if equality {
            RowKind::Eq(self.eq_rows.len())
        } else {
            RowKind::Le(self.le_rows.len())
        });
        if equality {
            self.eq_rows.push(i);
        } else {
            self.le_rows.push(i);
        }
        let (slack_lo, slack_hi) = if equality {
            (Some(T::zero()), Some(T::zero()))
        } else {
            (Some(T::zero()), None)
        };
        let slack = self.push_col(ColKind::Slack, slack_lo, slack_hi, T::zero());
        self.slack_cols.push(slack);

        // reduce the new row against the current basis
        let mut row = vec![T::zero(); self.ncols()];
        for (k, &j) in self.struct_cols.iter().enumerate() {
            row[j] = coef[k].clone();
        }
        row[slack] = T::one();
        for r in 0..self.basis.len() {
            let f = match self.kinds[self.basis[r]] {
                ColKind::Structural(k) => coef[k].clone(),
                _ => continue,
            };
            if f.is_zero() {
                continue;
            }
            for (v, tv) in row.iter_mut().zip(&self.t[r]) {
                if !tv.is_zero() {
                    *v = v.clone() - f.clone() * tv.clone();
                }
            }
        }
        let current: Vec<T> = self.structural_values();
        let resid = rhs.clone() - scalar::dot(coef, &current);
        self.rhs.push(rhs);
        self.a.push(coef.to_vec());

        let ok = if equality {
            resid.is_zero() || (!T::EXACT && resid.abs() <= T::feas_tol())
        } else {
            !resid.negative()
        };
        self.t.push(row);
        if ok {
            self.basis.push(slack);
            self.pos[slack] = Some(i);
            self.beta.push(resid);
        } else {
            let negative = resid.negative();
            let art = self.push_col(
                ColKind::Artificial { row: i, negative },
                Some(T::zero()),
                None,
                T::zero(),
            );
            if negative {
                for v in self.t[i].iter_mut() {
                    *v = -v.clone();
                }
            }
            self.t[i][art] = T::one();
            self.basis.push(art);
            self.pos[art] = Some(i);
            self.beta.push(resid.abs());
        }
        i
    }

    pub fn add_le_row(&mut self, coef: &[T], rhs: T) -> usize {
        let i = self.add_row(coef, rhs, false);
        match self.rows[i] {
            RowKind::Le(k) => k,
            RowKind::Eq(_) => unreachable!(),
        }
    }

    pub fn add_eq_row(&mut self, coef: &[T], rhs: T) -> usize {
        let i = self.add_row(coef, rhs, true);
        match self.rows[i] {
            RowKind::Eq(k) => k,
            RowKind::Le(_) => unreachable!(),
        }
    }

    /// Appends a structural column with coefficients given per inequality
    /// and per equality row index. The column starts nonbasic at zero, so
    /// zero must lie within its bounds.
    pub fn add_column(
        &mut self,
        le: &[(usize, T)],
        eq: &[(usize, T)],
        cost: T,
        lo: Option<T>,
        hi: Option<T>,
    ) -> usize {
        debug_assert!(lo.as_ref().is_none_or(|l| !l.positive()));
        debug_assert!(hi.as_ref().is_none_or(|h| !h.negative()));
        let k = self.num_structural();
        let j = self.push_col(ColKind::Structural(k), lo, hi, T::zero());
        self.struct_cols.push(j);
        self.objective.push(cost);
        let mut full = vec![T::zero(); self.rows.len()];
        for (idx, v) in le {
            full[self.le_rows[*idx]] = v.clone();
        }
        for (idx, v) in eq {
            full[self.eq_rows[*idx]] = v.clone();
        }
        for (i, row) in self.a.iter_mut().enumerate() {
            row.push(full[i].clone());
        }
        for r in 0..self.rows.len() {
            let mut acc = T::zero();
            for (i, fi) in full.iter().enumerate() {
                if !fi.is_zero() {
                    let binv = &self.t[r][self.slack_cols[i]];
                    if !binv.is_zero() {
                        acc = acc + binv.clone() * fi.clone();
                    }
                }
            }
            self.t[r][j] = acc;
        }
        k
    }

    /// Column `j` of `[A | I | art]` as a dense vector over rows.
    fn full_column(&self, j: usize) -> Vec<(usize, T)> {
        match self.kinds[j] {
            ColKind::Structural(k) => self
                .a
                .iter()
                .enumerate()
                .filter(|(_, row)| !row[k].is_zero())
                .map(|(i, row)| (i, row[k].clone()))
                .collect(),
            ColKind::Slack => {
                let i = self.slack_cols.iter().position(|&s| s == j).unwrap();
                vec![(i, T::one())]
            }
            ColKind::Artificial { row, negative } => {
                vec![(row, if negative { -T::one() } else { T::one() })]
            }
        }
    }

    /// `beta = B⁻¹ (b - N x_N)`, using the slack block of the tableau as `B⁻¹`.
    fn refresh_beta(&mut self) {
        let mut resid = self.rhs.clone();
        for j in 0..self.ncols() {
            if self.pos[j].is_some() || self.x[j].is_zero() {
                continue;
            }
            for (i, v) in self.full_column(j) {
                resid[i] = resid[i].clone() - v * self.x[j].clone();
            }
        }
        for r in 0..self.rows.len() {
            let mut v = T::zero();
            for (i, ri) in resid.iter().enumerate() {
                let binv = &self.t[r][self.slack_cols[i]];
                if !binv.is_zero() && !ri.is_zero() {
                    v = v + binv.clone() * ri.clone();
                }
            }
            self.beta[r] = v;
        }
    }

    /// Recomputes `t = B⁻¹ [A | I | art]` by Gauss-Jordan elimination on
    /// the basis columns, then the basic values and reduced costs. Leaves
    /// the state untouched when the basis matrix looks singular.
    fn reinvert(&mut self) {
        let m = self.rows.len();
        if m == 0 {
            return;
        }
        let mut b = vec![vec![T::zero(); 2 * m]; m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.full_column(j) {
                b[i][r] = v;
            }
        }
        for (i, row) in b.iter_mut().enumerate() {
            row[m + i] = T::one();
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&x, &y| {
                    b[x][c]
                        .abs()
                        .partial_cmp(&b[y][c].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("nonempty range");
            if b[piv][c].abs() <= T::pivot_tol() {
                trace!("reinversion skipped: singular basis");
                return;
            }
            b.swap(c, piv);
            let p = b[c][c].clone();
            for v in b[c].iter_mut() {
                *v = v.clone() / p.clone();
            }
            let prow = b[c].clone();
            for (i, row) in b.iter_mut().enumerate() {
                if i == c || row[c].is_zero() {
                    continue;
                }
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    if !pv.is_zero() {
                        *v = v.clone() - f.clone() * pv.clone();
                    }
                }
            }
        }
        // b now holds [I | B⁻¹]; row r of B⁻¹ belongs to basis position r
        let ncols = self.ncols();
        let cols: Vec<Vec<(usize, T)>> = (0..ncols).map(|j| self.full_column(j)).collect();
        for r in 0..m {
            let binv = &b[r][m..];
            let row = &mut self.t[r];
            for (j, col) in cols.iter().enumerate() {
                let mut acc = T::zero();
                for (i, v) in col {
                    if !binv[*i].is_zero() {
                        acc = acc + binv[*i].clone() * v.clone();
                    }
                }
                row[j] = acc;
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, row) in self.t.iter_mut().enumerate() {
                row[j] = if i == r { T::one() } else { T::zero() };
            }
        }
        self.refresh_beta();
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (dj, tj) in d.iter_mut().zip(&self.t[r]) {
                if !tj.is_zero() {
                    *dj = dj.clone() - cb.clone() * tj.clone();
                }
            }
        }
        for &b in &self.basis {
            d[b] = T::zero();
        }
        self.d = d;
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lo[j], &self.hi[j]), (Some(l), Some(h)) if l == h)
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, i8)> {
        let tol = T::opt_tol();
        let mut best: Option<(usize, i8, T)> = None;
        for j in 0..self.ncols() {
            if self.pos[j].is_some() || self.is_fixed(j) {
                continue;
            }
            let dj = &self.d[j];
            let at_lo = self.lo[j].as_ref().is_some_and(|l| self.x[j] <= *l);
            let at_hi = self.hi[j].as_ref().is_some_and(|h| self.x[j] >= *h);
            let dir = if *dj < -tol.clone() && !at_hi {
                1
            } else if *dj > tol && !at_lo {
                -1
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Blocking row (`None` for a bound flip) and step length, or `None`
    /// when the step is unbounded.
    fn ratio_test(&self, q: usize, dir: i8, bland: bool) -> Option<(Option<usize>, T)> {
        let ptol = T::pivot_tol();
        let delta = if T::EXACT { T::zero() } else { T::feas_tol() };
        let own = if dir > 0 {
            self.hi[q].as_ref().map(|h| h.clone() - self.x[q].clone())
        } else {
            self.lo[q].as_ref().map(|l| self.x[q].clone() - l.clone())
        };
        // (row, exact limit, limit with bounds relaxed by delta, |pivot|)
        let mut candidates: Vec<(usize, T, T, T)> = Vec::new();
        for r in 0..self.rows.len() {
            let tq = &self.t[r][q];
            if tq.abs() <= ptol {
                continue;
            }
            let rate = if dir > 0 { -tq.clone() } else { tq.clone() };
            let b = self.basis[r];
            let room = if rate.negative() {
                self.lo[b]
                    .as_ref()
                    .map(|l| self.beta[r].clone() - l.clone())
            } else {
                self.hi[b]
                    .as_ref()
                    .map(|h| h.clone() - self.beta[r].clone())
            };
            if let Some(room) = room {
                let rate = rate.abs();
                let lim = room.clone() / rate.clone();
                let lim = if lim.negative() { T::zero() } else { lim };
                let relaxed = (room + delta.clone()) / rate;
                let relaxed = if relaxed.negative() {
                    T::zero()
                } else {
                    relaxed
                };
                candidates.push((r, lim, relaxed, tq.abs()));
            }
        }
        let mut best: Option<(Option<usize>, T)> = own.map(|l| (None, l));
        let bound = candidates
            .iter()
            .map(|c| c.2.clone())
            .fold(None::<T>, |acc, v| match acc {
                Some(a) if a <= v => Some(a),
                _ => Some(v),
            });
        if let Some(bound) = bound {
            let eligible = || candidates.iter().filter(|c| c.1 <= bound);
            // Bland's order only among pivots of reasonable size
            let big = eligible()
                .map(|c| c.3.clone())
                .fold(T::zero(), |a, v| if v > a { v } else { a });
            let floor = if T::EXACT || !bland {
                T::zero()
            } else {
                big * T::from_f64(0.1)
            };
            let mut pick: Option<&(usize, T, T, T)> = None;
            for c in eligible().filter(|c| c.3 >= floor) {
                pick = Some(match pick {
                    None => c,
                    Some(p) => {
                        let better = if bland {
                            self.basis[c.0] < self.basis[p.0]
                        } else {
                            c.3 > p.3
                        };
                        if better {
                            c
                        } else {
                            p
                        }
                    }
                });
            }
            let pick = pick.expect("nonempty candidate set");
            if best.as_ref().is_none_or(|(_, l)| pick.1 < *l) {
                best = Some((Some(pick.0), pick.1.clone()));
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let mut prow = std::mem::take(&mut self.t[r]);
        let piv = prow[q].clone();
        for v in prow.iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / piv.clone();
            }
        }
        prow[q] = T::one();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                row[j] = row[j].clone() - f.clone() * prow[j].clone();
            }
            row[q] = T::zero();
        }
        let f = self.d[q].clone();
        if !f.is_zero() {
            for &j in &nz {
                self.d[j] = self.d[j].clone() - f.clone() * prow[j].clone();
            }
            self.d[q] = T::zero();
        }
        self.t[r] = prow;
    }

    fn run_phase(&mut self) -> Result<PhaseEnd, LpError> {
        let cap = self
            .opts
            .max_iter
            .unwrap_or(50 * (self.rows.len() + self.ncols()) + 1000);
        let mut bland = false;
        let mut degenerate = 0usize;
        let mut since_refresh = 0usize;
        let mut since_reinvert = 0usize;
        let reinvert_every = self.opts.reinvert_every.max(self.rows.len());
        let mut count = 0usize;
        loop {
            if count >= cap {
                return Err(LpError::Stall {
                    iterations: self.iterations,
                    basis: self.basis.clone(),
                });
            }
            let Some((q, dir)) = self.choose_entering(bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some((row, step)) = self.ratio_test(q, dir, bland) else {
                return Ok(PhaseEnd::Unbounded { col: q, dir });
            };
            count += 1;
            self.iterations += 1;

            if step.is_zero() || (!T::EXACT && step < T::feas_tol()) {
                degenerate += 1;
                if degenerate > self.opts.degeneracy_threshold && !bland {
                    trace!("switching to Bland's rule after {degenerate} degenerate pivots");
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            let signed = if dir > 0 { step.clone() } else { -step.clone() };
            if !signed.is_zero() {
                for rr in 0..self.rows.len() {
                    let tq = &self.t[rr][q];
                    if !tq.is_zero() {
                        self.beta[rr] = self.beta[rr].clone() - tq.clone() * signed.clone();
                    }
                }
            }
            match row {
                None => {
                    self.x[q] = if dir > 0 {
                        self.hi[q].clone().expect("upper bound")
                    } else {
                        self.lo[q].clone().expect("lower bound")
                    };
                }
                Some(r) => {
                    let xq = self.x[q].clone() + signed;
                    let b = self.basis[r];
                    let leaves_low = if dir > 0 {
                        self.t[r][q].positive()
                    } else {
                        self.t[r][q].negative()
                    };
                    self.x[b] = if leaves_low {
                        self.lo[b].clone().expect("lower bound")
                    } else {
                        self.hi[b].clone().expect("upper bound")
                    };
                    self.pos[b] = None;
                    self.pivot(r, q);
                    self.basis[r] = q;
                    self.pos[q] = Some(r);
                    self.beta[r] = xq;
                    self.x[q] = T::zero();
                    since_refresh += 1;
                    since_reinvert += 1;
                    if !T::EXACT && since_reinvert >= reinvert_every {
                        since_reinvert = 0;
                        since_refresh = 0;
                        self.reinvert();
                    } else if !T::EXACT && since_refresh >= self.opts.refresh_every {
                        since_refresh = 0;
                        self.refresh_beta();
                    }
                }
            }
        }
    }

    fn active_artificials(&self) -> Vec<usize> {
        (0..self.ncols())
            .filter(|&j| {
                matches!(self.kinds[j], ColKind::Artificial { .. }) && self.hi[j].is_none()
            })
            .collect()
    }

    /// Optimizes from the current basis. In floating point, a warm start
    /// that stalls or returns a point off its own rows is retried once
    /// from a freshly built tableau.
    pub fn solve(&mut self) -> Result<LpResult<T>, LpError> {
        let cold = !self.warm;
        self.warm = true;
        let out = self.solve_from_basis();
        if T::EXACT || cold {
            return out;
        }
        let suspect = match &out {
            Err(LpError::Stall { .. }) => true,
            Ok(LpResult::Optimal { point, .. }) | Ok(LpResult::Unbounded { point, .. }) => {
                !self.satisfies_rows(point)
            }
            _ => false,
        };
        if !suspect {
            return out;
        }
        debug!("warm start went astray after {} pivots; rebuilding", self.iterations);
        self.rebuild();
        self.warm = true;
        self.solve_from_basis()
    }

    /// Row and bound residuals within `1e-7` relative to the row's scale.
    fn satisfies_rows(&self, x: &[T]) -> bool {
        let x: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
        let rows_ok = self.a.iter().zip(&self.rhs).zip(&self.rows).all(|((row, rhs), kind)| {
            let rhs = rhs.to_f64();
            let (mut lhs, mut scale) = (0.0, 1.0 + rhs.abs());
            for (a, v) in row.iter().zip(&x) {
                let t = a.to_f64() * v;
                lhs += t;
                scale += t.abs();
            }
            let excess = match kind {
                RowKind::Le(_) => lhs - rhs,
                RowKind::Eq(_) => (lhs - rhs).abs(),
            };
            excess <= 1e-7 * scale
        });
        let bounds_ok = self.struct_cols.iter().zip(&x).all(|(&j, v)| {
            let tol = 1e-7 * (1.0 + v.abs());
            self.lo[j].as_ref().is_none_or(|l| l.to_f64() - v <= tol)
                && self.hi[j].as_ref().is_none_or(|h| v - h.to_f64() <= tol)
        });
        rows_ok && bounds_ok
    }

    /// Replaces the state by a fresh tableau over the same program.
    fn rebuild(&mut self) {
        let n = self.num_structural();
        let mut lp = LinearProgram::new(n, self.sense);
        lp.objective = self.objective.clone();
        for (k, &j) in self.struct_cols.iter().enumerate() {
            lp.set_bounds(k, self.lo[j].clone(), self.hi[j].clone());
        }
        for &i in &self.le_rows {
            lp.add_le(self.a[i].clone(), self.rhs[i].clone());
        }
        for &i in &self.eq_rows {
            lp.add_eq(self.a[i].clone(), self.rhs[i].clone());
        }
        let iterations = self.iterations;
        *self = Simplex::new(&lp, self.opts.clone());
        self.iterations = iterations;
    }

    fn solve_from_basis(&mut self) -> Result<LpResult<T>, LpError> {
        let arts = self.active_artificials();
        if !arts.is_empty() {
            self.cost.iter_mut().for_each(|c| *c = T::zero());
            for &j in &arts {
                self.cost[j] = T::one();
            }
            self.recompute_reduced_costs();
            match self.run_phase()? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded { .. } => unreachable!("phase one objective is bounded below"),
            }
            if !T::EXACT {
                self.refresh_beta();
            }
            let infeas = arts.iter().fold(T::zero(), |acc, &j| acc + self.value(j));
            let threshold = if T::EXACT {
                T::zero()
            } else {
                T::feas_tol() * (T::one() + scalar::max_abs(&self.rhs))
            };
            if infeas > threshold {
                return Ok(LpResult::Infeasible(self.farkas()));
            }
            for &j in &arts {
                self.hi[j] = Some(T::zero());
                if self.pos[j].is_none() {
                    self.x[j] = T::zero();
                }
            }
        }

        let flip = self.sense == Sense::Maximize;
        self.cost.iter_mut().for_each(|c| *c = T::zero());
        for (k, &j) in self.struct_cols.iter().enumerate() {
            let c = self.objective[k].clone();
            self.cost[j] = if flip { -c } else { c };
        }
        self.recompute_reduced_costs();
        let mut end = self.run_phase()?;
        if !T::EXACT {
            // accumulated update error can hide improving columns
            for _ in 0..3 {
                self.refresh_beta();
                self.recompute_reduced_costs();
                if !matches!(end, PhaseEnd::Optimal) || self.choose_entering(false).is_none() {
                    break;
                }
                end = self.run_phase()?;
            }
        }
        let point = self.structural_values();
        match end {
            PhaseEnd::Optimal => {
                self.recompute_reduced_costs();
                let value = scalar::dot(&self.objective, &point);
                let mut duals = RowDuals {
                    inequality: vec![T::zero(); self.le_rows.len()],
                    equality: vec![T::zero(); self.eq_rows.len()],
                };
                for (i, kind) in self.rows.iter().enumerate() {
                    // π_i = -d(slack_i) for the internal minimization
                    let pi = -self.d[self.slack_cols[i]].clone();
                    let dual = if flip { -pi } else { pi };
                    match *kind {
                        RowKind::Le(k) => duals.inequality[k] = dual,
                        RowKind::Eq(k) => duals.equality[k] = dual,
                    }
                }
                Ok(LpResult::Optimal {
                    point,
                    value,
                    duals,
                })
            }
            PhaseEnd::Unbounded { col, dir } => {
                let sign = if dir > 0 { T::one() } else { -T::one() };
                let mut ray = vec![T::zero(); self.num_structural()];
                if let ColKind::Structural(k) = self.kinds[col] {
                    ray[k] = sign.clone();
                }
                for r in 0..self.rows.len() {
                    if let ColKind::Structural(k) = self.kinds[self.basis[r]] {
                        ray[k] = -self.t[r][col].clone() * sign.clone();
                    }
                }
                Ok(LpResult::Unbounded { point, ray })
            }
        }
    }

    /// Farkas multipliers from the phase-one reduced costs: the row
    /// multiplier is the reduced cost of that row's slack and bound
    /// multipliers are the signed parts of structural reduced costs.
    fn farkas(&self) -> FarkasCertificate<T> {
        let mut cert = FarkasCertificate {
            inequality: vec![T::zero(); self.le_rows.len()],
            equality: vec![T::zero(); self.eq_rows.len()],
            lower: vec![T::zero(); self.num_structural()],
            upper: vec![T::zero(); self.num_structural()],
        };
        for (i, kind) in self.rows.iter().enumerate() {
            let y = self.d[self.slack_cols[i]].clone();
            match *kind {
                RowKind::Le(k) => cert.inequality[k] = if y.negative() { T::zero() } else { y },
                RowKind::Eq(k) => cert.equality[k] = y,
            }
        }
        for (k, &j) in self.struct_cols.iter().enumerate() {
            let dj = self.d[j].clone();
            if dj.positive() && self.lo[j].is_some() {
                cert.lower[k] = dj;
            } else if dj.negative() && self.hi[j].is_some() {
                cert.upper[k] = -dj;
            }
        }
        cert
    }
}

pub(super) fn solve<T: Scalar>(
    lp: &LinearProgram<T>,
    opts: &SimplexOptions,
) -> Result<LpResult<T>, LpError> {
    Simplex::new(lp, opts.clone()).solve()
}
