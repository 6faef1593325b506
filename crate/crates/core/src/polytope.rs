//! Polyhedra given by explicit row lists, and support queries over them.

use serde::Serialize;

use crate::error::LpError;
use crate::lp::scalar::{self, Scalar};
use crate::lp::{solve_lp, LinearProgram, LinearRow, LpResult, Sense, Simplex, SimplexOptions};

/// Value of `max dᵀv` over a set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Support<T = f64> {
    Value(T),
    Unbounded,
    Empty,
}

impl<T: Scalar> Support<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Support::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn expect_value(&self, what: &str) -> T {
        match self {
            Support::Value(v) => v.clone(),
            other => panic!("{what}: expected a finite support, got {other:?}"),
        }
    }

    pub fn to_f64(&self) -> Support<f64> {
        match self {
            Support::Value(v) => Support::Value(v.to_f64()),
            Support::Unbounded => Support::Unbounded,
            Support::Empty => Support::Empty,
        }
    }

    /// Pointwise maximum, treating `Empty` as `-∞`.
    pub fn max(self, other: Self) -> Self {
        match (self, other) {
            (Support::Unbounded, _) | (_, Support::Unbounded) => Support::Unbounded,
            (Support::Empty, s) | (s, Support::Empty) => s,
            (Support::Value(a), Support::Value(b)) => Support::Value(if a >= b { a } else { b }),
        }
    }
}

impl<T: Scalar> From<&LpResult<T>> for Support<T> {
    fn from(res: &LpResult<T>) -> Self {
        match res {
            LpResult::Optimal { value, .. } => Support::Value(value.clone()),
            LpResult::Infeasible(_) => Support::Empty,
            LpResult::Unbounded { .. } => Support::Unbounded,
        }
    }
}

/// `{v : rows·v ≤ rhs, equalities·v = rhs}` in dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetList<T = f64> {
    pub dim: usize,
    pub rows: Vec<LinearRow<T>>,
    pub equalities: Vec<LinearRow<T>>,
}

impl<T: Scalar> FacetList<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn push_le(&mut self, coef: Vec<T>, rhs: T) {
        debug_assert_eq!(coef.len(), self.dim);
        self.rows.push(LinearRow::new(coef, rhs));
    }

    pub fn push_eq(&mut self, coef: Vec<T>, rhs: T) {
        debug_assert_eq!(coef.len(), self.dim);
        self.equalities.push(LinearRow::new(coef, rhs));
    }

    /// Row `i` of the unit matrix scaled by `s`.
    pub fn unit(dim: usize, i: usize, s: T) -> Vec<T> {
        let mut v = vec![T::zero(); dim];
        v[i] = s;
        v
    }

    pub fn to_lp(&self, sense: Sense, objective: Vec<T>) -> LinearProgram<T> {
        let mut lp = LinearProgram::new(self.dim, sense);
        lp.objective = objective;
        lp.inequalities = self.rows.clone();
        lp.equalities = self.equalities.clone();
        lp
    }

    pub fn support(&self, d: &[T]) -> Result<Support<T>, LpError> {
        Ok(Support::from(&solve_lp(
            &self.to_lp(Sense::Maximize, d.to_vec()),
        )?))
    }

    /// Support together with a maximizer.
    pub fn argmax(&self, d: &[T]) -> Result<(Support<T>, Option<Vec<T>>), LpError> {
        let res = solve_lp(&self.to_lp(Sense::Maximize, d.to_vec()))?;
        let point = res.point().map(<[T]>::to_vec);
        Ok((Support::from(&res), point))
    }

    pub fn contains(&self, v: &[T], tol: &T) -> bool {
        self.rows
            .iter()
            .all(|r| r.eval(v) <= r.rhs.clone() + tol.clone())
            && self
                .equalities
                .iter()
                .all(|r| (r.eval(v) - r.rhs.clone()).abs() <= tol.clone())
    }

    pub fn is_empty(&self) -> Result<bool, LpError> {
        let d = vec![T::zero(); self.dim];
        Ok(matches!(self.support(&d)?, Support::Empty))
    }

    /// Drops rows implied by the remaining ones, certified one at a time by
    /// maximizing each row's left side over the others.
    pub fn without_redundant(&self) -> Result<Self, LpError> {
        let mut kept: Vec<LinearRow<T>> = self.rows.clone();
        let tol = if T::EXACT {
            T::zero()
        } else {
            T::from_f64(1e-9)
        };
        let mut i = 0;
        while i < kept.len() {
            let row = kept.remove(i);
            let mut probe = Self {
                dim: self.dim,
                rows: kept.clone(),
                equalities: self.equalities.clone(),
            };
            // keep the probe bounded by the row itself, pushed out by one
            probe
                .rows
                .push(LinearRow::new(row.coef.clone(), row.rhs.clone() + T::one()));
            let redundant = match probe.support(&row.coef)? {
                Support::Value(v) => v <= row.rhs.clone() + tol.clone(),
                Support::Empty => true,
                Support::Unbounded => false,
            };
            if !redundant {
                kept.insert(i, row);
                i += 1;
            }
        }
        Ok(Self {
            dim: self.dim,
            rows: kept,
            equalities: self.equalities.clone(),
        })
    }

    /// Finite support in every signed coordinate direction.
    pub fn is_bounded(&self) -> Result<bool, LpError> {
        let mut lp = self.to_lp(Sense::Maximize, vec![T::zero(); self.dim]);
        lp.objective[0] = T::one();
        let mut s = Simplex::new(&lp, SimplexOptions::default());
        for i in 0..self.dim {
            for sign in [T::one(), -T::one()] {
                s.set_objective(Sense::Maximize, Self::unit(self.dim, i, sign));
                if matches!(s.solve()?, LpResult::Unbounded { .. }) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Scales a row so that its largest coefficient magnitude is one.
pub fn normalize_row<T: Scalar>(row: &LinearRow<T>) -> LinearRow<T> {
    let m = scalar::max_abs(&row.coef);
    if m.is_zero() {
        return row.clone();
    }
    LinearRow::new(
        row.coef.iter().map(|c| c.clone() / m.clone()).collect(),
        row.rhs.clone() / m,
    )
}

/// Whether two normalized rows agree within `tol` entrywise.
pub fn rows_close<T: Scalar>(a: &LinearRow<T>, b: &LinearRow<T>, tol: &T) -> bool {
    (a.rhs.clone() - b.rhs.clone()).abs() <= tol.clone()
        && a.coef
            .iter()
            .zip(&b.coef)
            .all(|(x, y)| (x.clone() - y.clone()).abs() <= tol.clone())
}
