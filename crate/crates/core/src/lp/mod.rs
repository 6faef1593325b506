//! Dense linear programming engine.
//!
//! A bounded-variable two-phase primal simplex over any [`Scalar`] field,
//! returning optimal points with row duals, Farkas certificates for
//! infeasible programs and improving rays for unbounded ones. PSD
//! constraints are emulated on top of it with eigenvector cuts
//! ([`psd`]).

pub mod eigen;
pub mod linalg;
pub mod psd;
pub mod scalar;
mod simplex;

use serde::Serialize;

pub use scalar::Scalar;
pub use simplex::{Simplex, SimplexOptions};

use crate::error::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A row `coef · x (≤ | =) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow<T = f64> {
    pub coef: Vec<T>,
    pub rhs: T,
}

impl<T: Scalar> LinearRow<T> {
    pub fn new(coef: Vec<T>, rhs: T) -> Self {
        Self { coef, rhs }
    }

    pub fn eval(&self, x: &[T]) -> T {
        scalar::dot(&self.coef, x)
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram<T = f64> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub inequalities: Vec<LinearRow<T>>,
    pub equalities: Vec<LinearRow<T>>,
    pub lower: Vec<Option<T>>,
    pub upper: Vec<Option<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    /// A program over `n` free variables with a zero objective.
    pub fn new(n: usize, sense: Sense) -> Self {
        Self {
            sense,
            objective: vec![T::zero(); n],
            inequalities: Vec::new(),
            equalities: Vec::new(),
            lower: vec![None; n],
            upper: vec![None; n],
        }
    }

    pub fn maximize(objective: Vec<T>) -> Self {
        let mut lp = Self::new(objective.len(), Sense::Maximize);
        lp.objective = objective;
        lp
    }

    pub fn minimize(objective: Vec<T>) -> Self {
        let mut lp = Self::new(objective.len(), Sense::Minimize);
        lp.objective = objective;
        lp
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a fresh free variable and returns its index.
    pub fn add_var(&mut self) -> usize {
        self.objective.push(T::zero());
        self.lower.push(None);
        self.upper.push(None);
        for row in self
            .inequalities
            .iter_mut()
            .chain(self.equalities.iter_mut())
        {
            row.coef.push(T::zero());
        }
        self.objective.len() - 1
    }

    pub fn add_le(&mut self, coef: Vec<T>, rhs: T) -> usize {
        debug_assert_eq!(coef.len(), self.num_vars());
        self.inequalities.push(LinearRow::new(coef, rhs));
        self.inequalities.len() - 1
    }

    pub fn add_ge(&mut self, coef: Vec<T>, rhs: T) -> usize {
        let coef = coef.into_iter().map(|c| -c).collect();
        self.add_le(coef, -rhs)
    }

    pub fn add_eq(&mut self, coef: Vec<T>, rhs: T) -> usize {
        debug_assert_eq!(coef.len(), self.num_vars());
        self.equalities.push(LinearRow::new(coef, rhs));
        self.equalities.len() - 1
    }

    pub fn set_bounds(&mut self, j: usize, lo: Option<T>, hi: Option<T>) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn nonnegative(&mut self, j: usize) {
        self.lower[j] = Some(T::zero());
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        scalar::dot(&self.objective, x)
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(
                "bound vectors do not match variable count".into(),
            ));
        }
        for (k, row) in self
            .inequalities
            .iter()
            .chain(self.equalities.iter())
            .enumerate()
        {
            if row.coef.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {k} has {} coefficients, expected {n}",
                    row.coef.len()
                )));
            }
        }
        for j in 0..n {
            if let (Some(lo), Some(hi)) = (&self.lower[j], &self.upper[j]) {
                if lo > hi {
                    return Err(LpError::Malformed(format!(
                        "variable {j} has lower > upper"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        let mut bump = |v: T| {
            if v > worst {
                worst = v;
            }
        };
        for row in &self.inequalities {
            bump(row.eval(x) - row.rhs.clone());
        }
        for row in &self.equalities {
            bump((row.eval(x) - row.rhs.clone()).abs());
        }
        for (j, xj) in x.iter().enumerate() {
            if let Some(lo) = &self.lower[j] {
                bump(lo.clone() - xj.clone());
            }
            if let Some(hi) = &self.upper[j] {
                bump(xj.clone() - hi.clone());
            }
        }
        worst
    }
}

/// Row multipliers at an optimal basis.
///
/// `inequality[i]` and `equality[i]` are the marginal objective change per
/// unit increase of the corresponding right-hand side, in the program's own
/// sense. For a new column `a` with cost `c` the reduced cost is
/// `c - dualsᵀa`, improving when positive (maximize) or negative (minimize).
#[derive(Debug, Clone, PartialEq)]
pub struct RowDuals<T = f64> {
    pub inequality: Vec<T>,
    pub equality: Vec<T>,
}

impl<T: Scalar> RowDuals<T> {
    pub fn dot_column(&self, ineq: &[T], eq: &[T]) -> T {
        scalar::dot(&self.inequality, ineq) + scalar::dot(&self.equality, eq)
    }
}

/// Proof of infeasibility over the combined row system.
///
/// Rows are the inequalities `aᵢx ≤ bᵢ` (multiplier ≥ 0), the equalities
/// (free multiplier), lower bounds `-xⱼ ≤ -loⱼ` and upper bounds `xⱼ ≤ hiⱼ`
/// (multipliers ≥ 0). The weighted row sum has zero coefficients and a
/// negative right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate<T = f64> {
    pub inequality: Vec<T>,
    pub equality: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> FarkasCertificate<T> {
    /// Returns `(‖yᵀA‖∞, yᵀb)` for the combined system.
    pub fn residuals(&self, lp: &LinearProgram<T>) -> (T, T) {
        let n = lp.num_vars();
        let mut combo = vec![T::zero(); n];
        let mut rhs = T::zero();
        for (y, row) in self.inequality.iter().zip(&lp.inequalities) {
            for (c, a) in combo.iter_mut().zip(&row.coef) {
                *c = c.clone() + y.clone() * a.clone();
            }
            rhs = rhs + y.clone() * row.rhs.clone();
        }
        for (y, row) in self.equality.iter().zip(&lp.equalities) {
            for (c, a) in combo.iter_mut().zip(&row.coef) {
                *c = c.clone() + y.clone() * a.clone();
            }
            rhs = rhs + y.clone() * row.rhs.clone();
        }
        for j in 0..n {
            if let Some(lo) = &lp.lower[j] {
                combo[j] = combo[j].clone() - self.lower[j].clone();
                rhs = rhs - self.lower[j].clone() * lo.clone();
            }
            if let Some(hi) = &lp.upper[j] {
                combo[j] = combo[j].clone() + self.upper[j].clone();
                rhs = rhs + self.upper[j].clone() * hi.clone();
            }
        }
        (scalar::max_abs(&combo), rhs)
    }

    /// Whether all sign conditions hold, the combination vanishes within
    /// `tol` and the right-hand side is below `-tol`.
    pub fn verifies(&self, lp: &LinearProgram<T>, tol: &T) -> bool {
        let signs_ok = self
            .inequality
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .all(|y| *y >= -tol.clone());
        let (combo, rhs) = self.residuals(lp);
        signs_ok && combo <= tol.clone() && rhs < -tol.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult<T = f64> {
    Optimal {
        point: Vec<T>,
        value: T,
        duals: RowDuals<T>,
    },
    Infeasible(FarkasCertificate<T>),
    /// An improving direction of recession together with a feasible point.
    Unbounded {
        point: Vec<T>,
        ray: Vec<T>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl<T: Scalar> LpResult<T> {
    pub fn status(&self) -> LpStatus {
        match self {
            LpResult::Optimal { .. } => LpStatus::Optimal,
            LpResult::Infeasible(_) => LpStatus::Infeasible,
            LpResult::Unbounded { .. } => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            LpResult::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[T]> {
        match self {
            LpResult::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpResult::Optimal { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpResult::Infeasible(_))
    }
}

/// Solves `lp` with default simplex options.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpResult<T>, LpError> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with<T: Scalar>(
    lp: &LinearProgram<T>,
    opts: &SimplexOptions,
) -> Result<LpResult<T>, LpError> {
    lp.validate()?;
    simplex::solve(lp, opts)
}
