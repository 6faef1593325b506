//! Semidefinite constraints emulated by eigenvector cutting planes.
//!
//! A block is a symmetric matrix whose packed lower-triangular entries are
//! affine in the LP variables. Whenever an LP optimum (or an unbounded ray)
//! violates a block, each negative eigenvector `w` yields the valid linear
//! cut `wᵀ A(x) w ≥ 0`.

use log::debug;

use super::eigen::symmetric_eigen;
use super::{LinearProgram, LpResult, Sense, Simplex, SimplexOptions};
use crate::error::LpError;

/// Position of entry `(i, j)` in lower-triangular packed order.
pub fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

pub fn packed_len(order: usize) -> usize {
    order * (order + 1) / 2
}

/// A symmetric matrix of LP variables stored contiguously from `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetricMatrixVar {
    pub order: usize,
    pub offset: usize,
}

impl SymmetricMatrixVar {
    pub fn new(order: usize, offset: usize) -> Self {
        Self { order, offset }
    }

    pub fn len(&self) -> usize {
        packed_len(self.order)
    }

    pub fn is_empty(&self) -> bool {
        self.order == 0
    }

    /// LP variable holding entry `(i, j)`.
    pub fn var(&self, i: usize, j: usize) -> usize {
        self.offset + packed_index(i, j)
    }

    pub fn as_block(&self) -> PsdBlock {
        let entries = (0..self.len())
            .map(|k| AffineExpr::var(self.offset + k))
            .collect();
        PsdBlock {
            order: self.order,
            entries,
        }
    }
}

/// `constant + Σ coef · x[var]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(j: usize) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(j, 1.0)],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    fn eval_linear(&self, r: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * r[j]).sum()
    }
}

/// Symmetric block with entries in packed lower-triangular order.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub order: usize,
    pub entries: Vec<AffineExpr>,
}

impl PsdBlock {
    fn assemble(&self, f: impl Fn(&AffineExpr) -> f64) -> Vec<Vec<f64>> {
        let d = self.order;
        let mut m = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let v = f(&self.entries[packed_index(i, j)]);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    pub fn matrix_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.assemble(|e| e.eval(x))
    }

    /// The cut `wᵀ A(x) w ≥ 0` as a `≤` row `(coef, rhs)`.
    pub fn cut(&self, w: &[f64], n: usize) -> (Vec<f64>, f64) {
        let mut coef = vec![0.0; n];
        let mut constant = 0.0;
        for i in 0..self.order {
            for j in 0..=i {
                let weight = if i == j {
                    w[i] * w[i]
                } else {
                    2.0 * w[i] * w[j]
                };
                if weight == 0.0 {
                    continue;
                }
                let e = &self.entries[packed_index(i, j)];
                constant += weight * e.constant;
                for &(k, c) in &e.terms {
                    coef[k] += weight * c;
                }
            }
        }
        // -(Σ coef x) ≤ constant
        (coef.into_iter().map(|c| -c).collect(), constant)
    }
}

#[derive(Debug, Clone)]
pub struct PsdOptions {
    pub tol: f64,
    pub max_cuts: usize,
    /// Stop (unconverged) once this many consecutive cut rounds move the
    /// objective by less than `stall_tol * (1 + |value|)`.
    pub stall_rounds: usize,
    pub stall_tol: f64,
    /// Cap on rows a shared eigencut pool may add to one lifted program.
    /// Dense tableaus lose accuracy well before `max_cuts` near-parallel rows.
    pub pool_rows: usize,
}

impl PsdOptions {
    pub(crate) fn stall(&self) -> Stall {
        Stall {
            rounds: self.stall_rounds,
            tol: self.stall_tol,
            last: None,
            quiet: 0,
        }
    }
}

/// Tracks objective progress across cut rounds.
pub(crate) struct Stall {
    rounds: usize,
    tol: f64,
    last: Option<f64>,
    quiet: usize,
}

impl Stall {
    /// Records a round's value; true once progress has stalled.
    pub(crate) fn update(&mut self, value: Option<f64>) -> bool {
        let Some(v) = value else {
            self.last = None;
            self.quiet = 0;
            return false;
        };
        match self.last {
            Some(l) if (l - v).abs() <= self.tol * (1.0 + v.abs()) => self.quiet += 1,
            _ => {
                self.last = Some(v);
                self.quiet = 0;
            }
        }
        self.rounds > 0 && self.quiet >= self.rounds
    }
}

impl Default for PsdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_cuts: 5000,
            stall_rounds: 20,
            stall_tol: 1e-9,
            pool_rows: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PsdOutcome {
    pub result: LpResult<f64>,
    pub cuts_added: usize,
    /// False when the cut budget ran out; the result is then only the
    /// bound from the last LP.
    pub converged: bool,
    /// Smallest block eigenvalue at the returned point.
    pub min_eigenvalue: f64,
}

/// An LP with PSD blocks whose cut pool persists across solves, so that
/// re-optimizing for new objectives or after added rows reuses every cut.
#[derive(Debug, Clone)]
pub struct PsdProgram {
    simplex: Simplex<f64>,
    blocks: Vec<PsdBlock>,
    opts: PsdOptions,
    total_cuts: usize,
}

impl PsdProgram {
    pub fn new(lp: &LinearProgram<f64>, blocks: Vec<PsdBlock>, opts: PsdOptions) -> Self {
        Self {
            simplex: Simplex::new(lp, SimplexOptions::default()),
            blocks,
            opts,
            total_cuts: 0,
        }
    }

    pub fn set_objective(&mut self, sense: Sense, objective: Vec<f64>) {
        self.simplex.set_objective(sense, objective);
    }

    pub fn add_le_row(&mut self, coef: &[f64], rhs: f64) {
        self.simplex.add_le_row(coef, rhs);
    }

    pub fn total_cuts(&self) -> usize {
        self.total_cuts
    }

    /// Cutting-plane loop from the current state.
    pub fn solve(&mut self) -> Result<PsdOutcome, LpError> {
        let n = self.simplex.num_structural();
        let mut cuts_added = 0;
        let mut stall = self.opts.stall();
        loop {
            let result = self.simplex.solve()?;
            let (probe, linear_only) = match &result {
                LpResult::Optimal { point, .. } => (point.clone(), false),
                LpResult::Unbounded { ray, .. } => (ray.clone(), true),
                LpResult::Infeasible(_) => {
                    return Ok(PsdOutcome {
                        result,
                        cuts_added,
                        converged: true,
                        min_eigenvalue: f64::NAN,
                    })
                }
            };
            let mut min_eig = f64::INFINITY;
            let mut new_cuts = Vec::new();
            for block in &self.blocks {
                let mat = if linear_only {
                    block.assemble(|e| e.eval_linear(&probe))
                } else {
                    block.matrix_at(&probe)
                };
                let (vals, vecs) = symmetric_eigen(&mat);
                min_eig = min_eig.min(vals.first().copied().unwrap_or(f64::INFINITY));
                let threshold = if linear_only { -1e-12 } else { -self.opts.tol };
                for (val, w) in vals.iter().zip(&vecs) {
                    if *val < threshold {
                        new_cuts.push(block.cut(w, n));
                    }
                }
            }
            if new_cuts.is_empty() {
                return Ok(PsdOutcome {
                    result,
                    cuts_added,
                    converged: true,
                    min_eigenvalue: min_eig,
                });
            }
            let stalled = stall.update(result.value().copied());
            if stalled || cuts_added + new_cuts.len() > self.opts.max_cuts {
                debug!("psd cut loop stopped after {cuts_added} cuts (stalled: {stalled})");
                return Ok(PsdOutcome {
                    result,
                    cuts_added,
                    converged: false,
                    min_eigenvalue: min_eig,
                });
            }
            cuts_added += new_cuts.len();
            self.total_cuts += new_cuts.len();
            for (coef, rhs) in new_cuts {
                self.simplex.add_le_row(&coef, rhs);
            }
        }
    }
}

/// Solves `lp` subject to every block being PSD.
pub fn solve_with_psd(
    lp: &LinearProgram<f64>,
    blocks: &[PsdBlock],
    opts: &PsdOptions,
) -> Result<PsdOutcome, LpError> {
    PsdProgram::new(lp, blocks.to_vec(), opts.clone()).solve()
}
