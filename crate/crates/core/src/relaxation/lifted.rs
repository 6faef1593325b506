//! The lifted operators `N̂(C, D)` and `N̂₊(C, D)`.
//!
//! Variables are `(v, V)` with `V` symmetric and stored packed. `C_{k+1}`
//! is the projection onto `v` of `{v ∈ C₀, γ + 2qᵀv + Q•V ≤ 0}` over
//! `P_F ∪ P²(C_k, D₀)`, with the PSD block `[[1, vᵀ], [v, V]]` added for
//! `N̂₊`.

use crate::error::{Context, Result};
use crate::formulations::FormulationBundle;
use crate::lp::psd::{packed_index, packed_len, AffineExpr, PsdBlock, PsdOptions, PsdProgram};
use crate::lp::{LinearProgram, Sense, Simplex, SimplexOptions};
use crate::polytope::Support;

use super::{p2_cuts, DirectionSet, SupportTable};

fn lifted_lp(bundle: &FormulationBundle) -> LinearProgram {
    let n = bundle.n();
    let total = n + packed_len(n);
    let mut lp = LinearProgram::new(total, Sense::Maximize);
    let pad = |c: &[f64]| {
        let mut r = c.to_vec();
        r.resize(total, 0.0);
        r
    };
    for row in &bundle.c0.rows {
        lp.add_le(pad(&row.coef), row.rhs);
    }
    for row in &bundle.c0.equalities {
        lp.add_eq(pad(&row.coef), row.rhs);
    }
    for f in &bundle.pf {
        let (coef, rhs) = f.lifted_row();
        lp.add_le(coef, rhs);
    }
    lp
}

/// `[[1, vᵀ], [v, V]]` over the lifted variables.
fn moment_block(n: usize) -> PsdBlock {
    let mut entries = vec![AffineExpr::default(); packed_len(n + 1)];
    entries[packed_index(0, 0)] = AffineExpr::constant(1.0);
    for i in 0..n {
        entries[packed_index(i + 1, 0)] = AffineExpr::var(i);
        for j in 0..=i {
            entries[packed_index(i + 1, j + 1)] = AffineExpr::var(n + packed_index(i, j));
        }
    }
    PsdBlock {
        order: n + 1,
        entries,
    }
}

enum Engine {
    Lp(Box<Simplex>),
    Sdp(Box<PsdProgram>),
}

impl Engine {
    fn add_le_row(&mut self, coef: &[f64], rhs: f64) {
        match self {
            Engine::Lp(s) => {
                s.add_le_row(coef, rhs);
            }
            Engine::Sdp(p) => p.add_le_row(coef, rhs),
        }
    }

    fn support(&mut self, d: &[f64]) -> Result<(Support, bool)> {
        match self {
            Engine::Lp(s) => {
                s.set_objective(Sense::Maximize, d.to_vec());
                Ok((Support::from(&s.solve()?), true))
            }
            Engine::Sdp(p) => {
                p.set_objective(Sense::Maximize, d.to_vec());
                let out = p.solve()?;
                Ok((Support::from(&out.result), out.converged))
            }
        }
    }
}

/// One run of the lifted hierarchy. The program is persistent: each step
/// appends the `P²` rows built from the current support table, so every
/// earlier row stays in place and the relaxations are nested.
pub struct LiftedRelaxation {
    n: usize,
    c0: Box<Simplex>,
    engine: Engine,
    d0: DirectionSet,
    dbar: DirectionSet,
    c0_table: SupportTable,
    /// `α(C_k, d̄)`, kept as the minimum over all levels so far.
    pub beta: SupportTable,
    pub level: usize,
}

impl LiftedRelaxation {
    pub fn new(
        bundle: &FormulationBundle,
        d0: &DirectionSet,
        dbar: &DirectionSet,
        psd: bool,
        psd_opts: PsdOptions,
    ) -> Result<Self> {
        let n = bundle.n();
        let c0_table = SupportTable::of_c0(bundle, d0).context(|| "C₀ on D₀".into())?;
        let beta = SupportTable::of_c0(bundle, dbar).context(|| "C₀ on D̄".into())?;
        let lp = lifted_lp(bundle);
        let engine = if psd {
            Engine::Sdp(Box::new(PsdProgram::new(
                &lp,
                vec![moment_block(n)],
                psd_opts,
            )))
        } else {
            Engine::Lp(Box::new(Simplex::new(&lp, SimplexOptions::default())))
        };
        Ok(Self {
            n,
            c0: Box::new(Simplex::new(
                &bundle.c0.to_lp(Sense::Maximize, vec![0.0; n]),
                SimplexOptions::default(),
            )),
            engine,
            d0: d0.clone(),
            dbar: dbar.clone(),
            c0_table,
            beta,
            level: 0,
        })
    }

    /// `C_{k+1} = N̂(C_k, D₀)` (or `N̂₊`).
    pub fn step(&mut self) -> Result<()> {
        let cuts = p2_cuts(&self.c0_table, &self.beta, &self.d0, &self.dbar)?;
        for f in &cuts {
            let (coef, rhs) = f.lifted_row();
            self.engine.add_le_row(&coef, rhs);
        }
        self.level += 1;
        let dbar = self.dbar.clone();
        let fresh = SupportTable::compute(&dbar, |d| Ok(self.support(d)?.0))
            .context(|| format!("support table at level {}", self.level))?;
        self.beta.min_with(&fresh);
        Ok(())
    }

    /// Support of `C_k` in direction `d` over `v`, and whether the eigencut
    /// loop converged.
    pub fn support(&mut self, d: &[f64]) -> Result<(Support, bool)> {
        if self.level == 0 {
            self.c0.set_objective(Sense::Maximize, d.to_vec());
            return Ok((Support::from(&self.c0.solve()?), true));
        }
        let mut obj = d.to_vec();
        obj.resize(self.n + packed_len(self.n), 0.0);
        self.engine.support(&obj)
    }
}

fn one_shot(
    bundle: &FormulationBundle,
    ck_support: &SupportTable,
    d0: &DirectionSet,
    dbar: &DirectionSet,
    direction: &[f64],
    psd: bool,
) -> Result<Support> {
    let n = bundle.n();
    let c0_table = SupportTable::of_c0(bundle, d0)?;
    let mut lp = lifted_lp(bundle);
    for f in p2_cuts(&c0_table, ck_support, d0, dbar)? {
        let (coef, rhs) = f.lifted_row();
        lp.add_le(coef, rhs);
    }
    let mut obj = direction.to_vec();
    obj.resize(n + packed_len(n), 0.0);
    let mut engine = if psd {
        Engine::Sdp(Box::new(PsdProgram::new(
            &lp,
            vec![moment_block(n)],
            PsdOptions::default(),
        )))
    } else {
        Engine::Lp(Box::new(Simplex::new(&lp, SimplexOptions::default())))
    };
    Ok(engine.support(&obj)?.0)
}

/// Support of `N̂(C, D₀)` in `direction`, where `C` is known through
/// `ck_support` on `dbar`.
pub fn n_hat(
    bundle: &FormulationBundle,
    ck_support: &SupportTable,
    d0: &DirectionSet,
    dbar: &DirectionSet,
    direction: &[f64],
) -> Result<Support> {
    one_shot(bundle, ck_support, d0, dbar, direction, false)
}

/// As [`n_hat`] with the moment matrix constrained PSD.
pub fn n_hat_plus(
    bundle: &FormulationBundle,
    ck_support: &SupportTable,
    d0: &DirectionSet,
    dbar: &DirectionSet,
    direction: &[f64],
) -> Result<Support> {
    one_shot(bundle, ck_support, d0, dbar, direction, true)
}
