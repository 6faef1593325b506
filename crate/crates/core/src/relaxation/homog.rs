//! Homogeneous cone operators `K_{k+1} = {Y e₀ : Y ∈ M(K_k, T₀)}`.
//!
//! Points of `R^{1+n}` are `(λ, v)`. `K₀` is the homogenization of `C₀`,
//! `T₀* = cone{(α(C₀, d), -d) : d ∈ D₀}` and `Y ∈ M(K, T₀)` means `Y`
//! symmetric with `Y u ∈ K` for every generator `u` and `Y_ii = Y_0i` on the
//! binary coordinates. Supports are taken over the slice `λ = 1`.
//!
//! A level is answered either by one explicit LP that nests a certificate
//! matrix per generator and level, or by column generation over the level
//! below: `Y u_g = Σ_p μ_{g,p} (1, p)` with `p` drawn from the lower slice
//! and priced by that slice's own support queries.

use std::collections::BTreeMap;

use log::{debug, trace};
use serde::Serialize;

use crate::error::{Context, Error, Result};
use crate::formulations::FormulationBundle;
use crate::lp::eigen::symmetric_eigen;
use crate::lp::psd::{packed_index, packed_len, AffineExpr, PsdBlock, PsdOptions};
use crate::lp::{LinearProgram, LpResult, Sense, Simplex, SimplexOptions};
use crate::polytope::Support;

use super::{t0_generators, DirectionSet, SupportTable};

#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Largest explicit program, in constraint nonzeros.
    pub max_nonzeros: usize,
    /// Largest explicit program, in dense tableau entries.
    pub max_dense: usize,
    /// Column generation rounds per query.
    pub max_rounds: usize,
    pub pricing_tol: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            max_nonzeros: 200_000,
            max_dense: 2_000_000,
            max_rounds: 5_000,
            pricing_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageEngineKind {
    Base,
    Explicit,
    ColumnGeneration,
}

impl StageEngineKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::Explicit => "explicit",
            Self::ColumnGeneration => "column_generation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageSupport {
    pub support: Support,
    /// A maximizer `v` on the slice.
    pub point: Option<Vec<f64>>,
    pub converged: bool,
}

/// Data shared by every level.
#[derive(Debug, Clone)]
pub struct HomogBase {
    pub n: usize,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub generators: Vec<Vec<f64>>,
    /// Homogeneous indices `1+i` of the binary coordinates.
    pub binaries: Vec<usize>,
    /// `e₀ ∈ T₀*`, which makes `Y e₀ ∈ K_k` implied by the generator rows.
    pub e0_implied: bool,
}

impl HomogBase {
    pub fn new(bundle: &FormulationBundle, d0: &DirectionSet) -> Result<Self> {
        let table = SupportTable::of_c0(bundle, d0).context(|| "C₀ supports on D₀".into())?;
        let generators = t0_generators(&table, d0)?;
        let e0_implied = d0.dirs.iter().enumerate().any(|(a, d)| {
            d0.dirs.iter().enumerate().any(|(b, e)| {
                d.iter().zip(e).all(|(x, y)| (x + y).abs() <= 1e-12)
                    && table.values[a] + table.values[b] > 1e-9
            })
        });
        Ok(Self {
            n: bundle.n(),
            rows: bundle
                .c0
                .rows
                .iter()
                .map(|r| (r.coef.clone(), r.rhs))
                .collect(),
            equalities: bundle
                .c0
                .equalities
                .iter()
                .map(|r| (r.coef.clone(), r.rhs))
                .collect(),
            generators,
            binaries: bundle.layout.binaries().map(|i| i + 1).collect(),
            e0_implied,
        })
    }

    fn order(&self) -> usize {
        self.n + 1
    }

    fn base_rows(&self) -> usize {
        self.rows.len() + self.equalities.len() + 1
    }
}

fn combine(parts: &[(f64, &AffineExpr)]) -> AffineExpr {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut constant = 0.0;
    for &(s, e) in parts {
        if s == 0.0 {
            continue;
        }
        constant += s * e.constant;
        for &(j, c) in &e.terms {
            *acc.entry(j).or_insert(0.0) += s * c;
        }
    }
    AffineExpr {
        constant,
        terms: acc.into_iter().filter(|(_, c)| *c != 0.0).collect(),
    }
}

/// Sparse row system: `le` entries mean `expr ≤ 0`, `eq` entries `expr = 0`.
struct Builder<'a> {
    base: &'a HomogBase,
    nvars: usize,
    le: Vec<AffineExpr>,
    eq: Vec<AffineExpr>,
    blocks: Vec<Vec<AffineExpr>>,
    record_blocks: bool,
}

impl<'a> Builder<'a> {
    fn new(base: &'a HomogBase, record_blocks: bool) -> Self {
        Self {
            base,
            nvars: 0,
            le: Vec::new(),
            eq: Vec::new(),
            blocks: Vec::new(),
            record_blocks,
        }
    }

    fn fresh(&mut self) -> AffineExpr {
        self.nvars += 1;
        AffineExpr::var(self.nvars - 1)
    }

    /// Packed `Y` with `Y e₀ = w` and the binary diagonal tied to `w`.
    fn matrix(&mut self, w: &[AffineExpr]) -> Vec<AffineExpr> {
        let d = self.base.order();
        let mut y = vec![AffineExpr::default(); packed_len(d)];
        for i in 0..d {
            for j in 0..=i {
                // first column, and binary diagonal entries (z² = z)
                let tied = j == 0 || (i == j && self.base.binaries.contains(&i));
                y[packed_index(i, j)] = if tied {
                    w[i].clone()
                } else {
                    self.fresh()
                };
            }
        }
        if self.record_blocks {
            self.blocks.push(y.clone());
        }
        y
    }

    fn times(&self, y: &[AffineExpr], u: &[f64]) -> Vec<AffineExpr> {
        let d = self.base.order();
        (0..d)
            .map(|i| {
                let parts: Vec<(f64, &AffineExpr)> =
                    (0..d).map(|j| (u[j], &y[packed_index(i, j)])).collect();
                combine(&parts)
            })
            .collect()
    }

    fn base_membership(&mut self, w: &[AffineExpr]) {
        let base = self.base;
        let row = |coef: &[f64], rhs: f64| {
            let mut parts: Vec<(f64, &AffineExpr)> =
                coef.iter().zip(&w[1..]).map(|(c, e)| (*c, e)).collect();
            parts.push((-rhs, &w[0]));
            combine(&parts)
        };
        for (coef, rhs) in &base.rows {
            self.le.push(row(coef, *rhs));
        }
        for (coef, rhs) in &base.equalities {
            self.eq.push(row(coef, *rhs));
        }
        self.le.push(combine(&[(-1.0, &w[0])]));
    }

    /// Rows stating `w ∈ K_level`.
    fn membership(&mut self, level: usize, w: &[AffineExpr]) {
        if level == 0 {
            self.base_membership(w);
            return;
        }
        let y = self.matrix(w);
        if !self.base.e0_implied {
            self.base_membership(w);
        }
        for g in 0..self.base.generators.len() {
            let u = self.base.generators[g].clone();
            let col = self.times(&y, &u);
            self.membership(level - 1, &col);
        }
    }

    /// The slice point `(1, v)` with fresh `v`.
    fn top(&mut self) -> (Vec<AffineExpr>, Vec<usize>) {
        let n = self.base.n;
        let mut w = vec![AffineExpr::constant(1.0)];
        let mut idx = Vec::with_capacity(n);
        for _ in 0..n {
            let e = self.fresh();
            idx.push(e.terms[0].0);
            w.push(e);
        }
        (w, idx)
    }

    fn nonzeros(&self) -> usize {
        self.le.iter().chain(&self.eq).map(|e| e.terms.len()).sum()
    }
}

/// Dense program over the variables that occur in some row, plus `keep`.
struct Compacted {
    lp: LinearProgram,
    map: Vec<Option<usize>>,
}

fn compact(b: &Builder, keep: &[usize]) -> Compacted {
    let mut used = vec![false; b.nvars];
    for e in b.le.iter().chain(&b.eq) {
        for &(j, _) in &e.terms {
            used[j] = true;
        }
    }
    for &j in keep {
        used[j] = true;
    }
    let mut map = vec![None; b.nvars];
    let mut count = 0;
    for (j, u) in used.iter().enumerate() {
        if *u {
            map[j] = Some(count);
            count += 1;
        }
    }
    let mut lp = LinearProgram::new(count, Sense::Maximize);
    let dense = |e: &AffineExpr| {
        let mut row = vec![0.0; count];
        for &(j, c) in &e.terms {
            row[map[j].expect("used variable")] += c;
        }
        (row, -e.constant)
    };
    for e in &b.le {
        if e.terms.is_empty() && e.constant <= 1e-12 {
            continue;
        }
        let (row, rhs) = dense(e);
        lp.add_le(row, rhs);
    }
    for e in &b.eq {
        if e.terms.is_empty() && e.constant.abs() <= 1e-12 {
            continue;
        }
        let (row, rhs) = dense(e);
        lp.add_eq(row, rhs);
    }
    Compacted { lp, map }
}

fn remap(e: &AffineExpr, map: &[Option<usize>]) -> AffineExpr {
    AffineExpr {
        constant: e.constant,
        terms: e
            .terms
            .iter()
            .filter_map(|&(j, c)| map[j].map(|k| (k, c)))
            .collect(),
    }
}

struct BaseStage {
    simplex: Box<Simplex>,
}

struct ExplicitStage {
    simplex: Box<Simplex>,
    v_index: Vec<usize>,
    nvars: usize,
    blocks: Vec<PsdBlock>,
    /// Pool vectors already cut into every block.
    applied: usize,
}

struct ColumnStage {
    simplex: Box<Simplex>,
    v_index: Vec<usize>,
    /// Equality row index for generator `g`, coordinate `j`.
    gen_rows: Vec<Vec<usize>>,
    points: Vec<Vec<f64>>,
}

enum Engine {
    Base(BaseStage),
    Explicit(ExplicitStage),
    Columns(ColumnStage),
}

/// One level `k` of the hierarchy.
pub struct ConeStage {
    pub level: usize,
    pub psd: bool,
    engine: Engine,
}

impl ConeStage {
    pub fn kind(&self) -> StageEngineKind {
        match self.engine {
            Engine::Base(_) => StageEngineKind::Base,
            Engine::Explicit(_) => StageEngineKind::Explicit,
            Engine::Columns(_) => StageEngineKind::ColumnGeneration,
        }
    }
}

struct Shared<'a> {
    opts: &'a EngineOptions,
    psd: &'a PsdOptions,
    pool: &'a mut Vec<Vec<f64>>,
}

fn objective_on(v_index: &[usize], len: usize, d: &[f64]) -> Vec<f64> {
    let mut obj = vec![0.0; len];
    for (k, &j) in v_index.iter().enumerate() {
        obj[j] = d[k];
    }
    obj
}

fn from_result(res: &LpResult, v_index: &[usize], converged: bool) -> StageSupport {
    let point = match res {
        LpResult::Optimal { point, .. } => Some(v_index.iter().map(|&j| point[j]).collect()),
        _ => None,
    };
    StageSupport {
        support: Support::from(res),
        point,
        converged,
    }
}

impl ExplicitStage {
    fn apply_pool(&mut self, pool: &[Vec<f64>]) {
        for w in &pool[self.applied..] {
            for b in &self.blocks {
                let (coef, rhs) = b.cut(w, self.nvars);
                self.simplex.add_le_row(&coef, rhs);
            }
        }
        self.applied = pool.len();
    }

    fn support(&mut self, d: &[f64], sh: &mut Shared) -> Result<StageSupport> {
        let obj = objective_on(&self.v_index, self.nvars, d);
        self.simplex.set_objective(Sense::Maximize, obj);
        if self.blocks.is_empty() {
            let res = self.simplex.solve()?;
            return Ok(from_result(&res, &self.v_index, true));
        }
        let mut added = 0;
        let mut stall = sh.psd.stall();
        loop {
            self.apply_pool(sh.pool);
            let res = self.simplex.solve()?;
            let LpResult::Optimal { point, .. } = &res else {
                return Ok(from_result(&res, &self.v_index, true));
            };
            let mut fresh = Vec::new();
            for b in &self.blocks {
                let (vals, vecs) = symmetric_eigen(&b.matrix_at(point));
                for (val, w) in vals.iter().zip(vecs) {
                    if *val < -sh.psd.tol {
                        fresh.push(w);
                    }
                }
            }
            if fresh.is_empty() {
                return Ok(from_result(&res, &self.v_index, true));
            }
            // near-duplicates of pooled vectors only make the LP degenerate
            fresh.retain(|w| {
                !sh.pool
                    .iter()
                    .any(|p| p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs() > 1.0 - 1e-9)
            });
            added += fresh.len();
            let stalled = stall.update(res.value().copied()) || fresh.is_empty();
            // every pooled vector becomes one row per block at every level
            let rows = (sh.pool.len() + fresh.len()) * self.blocks.len();
            if stalled || rows > sh.psd.pool_rows {
                debug!("eigencut loop stopped after {added} pool vectors (stalled: {stalled})");
                return Ok(from_result(&res, &self.v_index, false));
            }
            sh.pool.extend(fresh);
        }
    }
}

impl ColumnStage {
    fn add_point(&mut self, p: &[f64]) -> bool {
        let dup = self
            .points
            .iter()
            .any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-10));
        if dup {
            return false;
        }
        for rows in &self.gen_rows {
            let mut eq = vec![(rows[0], -1.0)];
            for (j, &pj) in p.iter().enumerate() {
                if pj != 0.0 {
                    eq.push((rows[j + 1], -pj));
                }
            }
            self.simplex.add_column(&[], &eq, 0.0, Some(0.0), None);
        }
        self.points.push(p.to_vec());
        true
    }

    fn support(
        &mut self,
        d: &[f64],
        lower: &mut [ConeStage],
        sh: &mut Shared,
    ) -> Result<StageSupport> {
        for round in 0..sh.opts.max_rounds {
            let obj = objective_on(&self.v_index, self.simplex.num_structural(), d);
            self.simplex.set_objective(Sense::Maximize, obj);
            let res = self.simplex.solve()?;
            let y = match &res {
                LpResult::Optimal { duals, .. } => duals.equality.clone(),
                LpResult::Infeasible(cert) => cert.equality.clone(),
                LpResult::Unbounded { .. } => {
                    return Err(Error::Invalid(
                        "column generation master is unbounded".into(),
                    ))
                }
            };
            let scale = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut improved = false;
            for g in 0..self.gen_rows.len() {
                let rows = &self.gen_rows[g];
                let dir: Vec<f64> = rows[1..].iter().map(|&r| y[r]).collect();
                let y0 = y[rows[0]];
                let sub = stage_support(lower, &dir, sh)?;
                match sub.support {
                    Support::Value(val) => {
                        if y0 + val > sh.opts.pricing_tol * scale {
                            let p = sub.point.expect("maximizer");
                            improved |= self.add_point(&p);
                        }
                    }
                    Support::Empty => {
                        return Ok(StageSupport {
                            support: Support::Empty,
                            point: None,
                            converged: true,
                        })
                    }
                    Support::Unbounded => {
                        return Err(Error::Invalid("lower slice is unbounded".into()))
                    }
                }
            }
            if !improved {
                trace!("column generation settled after {round} rounds");
                return Ok(match res {
                    LpResult::Infeasible(_) => StageSupport {
                        support: Support::Empty,
                        point: None,
                        converged: true,
                    },
                    other => from_result(&other, &self.v_index, true),
                });
            }
        }
        Err(Error::Invalid(format!(
            "column generation did not settle within {} rounds",
            sh.opts.max_rounds
        )))
    }
}

fn stage_support(stages: &mut [ConeStage], d: &[f64], sh: &mut Shared) -> Result<StageSupport> {
    let (last, lower) = stages.split_last_mut().expect("at least the base level");
    match &mut last.engine {
        Engine::Base(b) => {
            b.simplex.set_objective(Sense::Maximize, d.to_vec());
            let res = b.simplex.solve()?;
            Ok(from_result(&res, &(0..d.len()).collect::<Vec<_>>(), true))
        }
        Engine::Explicit(e) => e.support(d, sh),
        Engine::Columns(c) => c.support(d, lower, sh),
    }
}

/// The chain `K₀ ⊇ K₁ ⊇ …` with one engine per level.
pub struct ConeTower {
    pub base: HomogBase,
    stages: Vec<ConeStage>,
    opts: EngineOptions,
    psd: bool,
    pub psd_options: PsdOptions,
    /// Eigencut vectors, applied to every certificate block of every level.
    pub pool: Vec<Vec<f64>>,
    /// Points of `F`, used as initial columns.
    seeds: Vec<Vec<f64>>,
}

impl ConeTower {
    pub fn new(
        bundle: &FormulationBundle,
        d0: &DirectionSet,
        opts: EngineOptions,
        psd: bool,
    ) -> Result<Self> {
        let base = HomogBase::new(bundle, d0)?;
        let lp = bundle.c0.to_lp(Sense::Maximize, vec![0.0; base.n]);
        let stage0 = ConeStage {
            level: 0,
            psd,
            engine: Engine::Base(BaseStage {
                simplex: Box::new(Simplex::new(&lp, SimplexOptions::default())),
            }),
        };
        let mut seeds = Vec::new();
        for piece in bundle.pieces() {
            let obj = vec![0.0; piece.facets.dim];
            if let LpResult::Optimal { point, .. } =
                crate::lp::solve_lp(&piece.facets.to_lp(Sense::Maximize, obj))?
            {
                seeds.push(point[..base.n].to_vec());
            }
        }
        Ok(Self {
            base,
            stages: vec![stage0],
            opts,
            psd,
            psd_options: PsdOptions::default(),
            pool: Vec::new(),
            seeds,
        })
    }

    pub fn levels(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn engine_kind(&self, level: usize) -> StageEngineKind {
        self.stages[level].kind()
    }

    /// Dense tableau estimate of the explicit program for `level`.
    fn explicit_estimate(&self, level: usize) -> f64 {
        let g = self.base.generators.len() as f64;
        let r0 = self.base.base_rows() as f64;
        let n_y: f64 = (0..level).map(|t| g.powi(t as i32)).sum();
        let mut rows = g.powi(level as i32) * r0;
        if !self.base.e0_implied {
            rows += n_y * r0;
        }
        let vars = n_y * packed_len(self.base.order()) as f64;
        rows * (rows + vars)
    }

    fn build_explicit(&self, level: usize) -> Option<ExplicitStage> {
        if self.explicit_estimate(level) > self.opts.max_dense as f64 {
            return None;
        }
        let mut b = Builder::new(&self.base, self.psd);
        let (w, v_idx) = b.top();
        b.membership(level, &w);
        if b.nonzeros() > self.opts.max_nonzeros {
            return None;
        }
        // block entries may occur in no row and must survive compaction
        let mut keep = v_idx.clone();
        keep.extend(
            b.blocks
                .iter()
                .flatten()
                .flat_map(|e| e.terms.iter().map(|t| t.0)),
        );
        let c = compact(&b, &keep);
        let nvars = c.lp.num_vars();
        let blocks = b
            .blocks
            .iter()
            .map(|y| PsdBlock {
                order: self.base.order(),
                entries: y.iter().map(|e| remap(e, &c.map)).collect(),
            })
            .collect();
        debug!(
            "explicit level {level}: {} vars, {} rows",
            nvars,
            c.lp.inequalities.len() + c.lp.equalities.len()
        );
        Some(ExplicitStage {
            simplex: Box::new(Simplex::new(&c.lp, SimplexOptions::default())),
            v_index: v_idx.iter().map(|&j| c.map[j].expect("kept")).collect(),
            nvars,
            blocks,
            applied: 0,
        })
    }

    fn build_columns(&self) -> ColumnStage {
        let mut b = Builder::new(&self.base, false);
        let (w, v_idx) = b.top();
        let y = b.matrix(&w);
        if !self.base.e0_implied {
            b.base_membership(&w);
        }
        let eq_start = b.eq.len();
        for u in &self.base.generators {
            let col = b.times(&y, u);
            b.eq.extend(col);
        }
        let c = compact(&b, &v_idx);
        // generator rows are rebuilt so that empty ones survive and their
        // indices are known
        let mut lp = c.lp;
        let order = self.base.order();
        let nvars = lp.num_vars();
        let mut eq_rows = Vec::new();
        lp.equalities.clear();
        for e in &b.eq[..eq_start] {
            let mut row = vec![0.0; nvars];
            for &(j, coef) in &e.terms {
                row[c.map[j].expect("used")] += coef;
            }
            lp.add_eq(row, -e.constant);
        }
        for g in 0..self.base.generators.len() {
            let mut rows = Vec::with_capacity(order);
            for i in 0..order {
                let e = &b.eq[eq_start + g * order + i];
                let mut row = vec![0.0; nvars];
                for &(j, coef) in &e.terms {
                    row[c.map[j].expect("used")] += coef;
                }
                rows.push(lp.add_eq(row, -e.constant));
            }
            eq_rows.push(rows);
        }
        let mut stage = ColumnStage {
            simplex: Box::new(Simplex::new(&lp, SimplexOptions::default())),
            v_index: v_idx.iter().map(|&j| c.map[j].expect("kept")).collect(),
            gen_rows: eq_rows,
            points: Vec::new(),
        };
        for p in &self.seeds {
            stage.add_point(p);
        }
        stage
    }

    /// Appends level `k+1`.
    pub fn homog_step(&mut self) -> Result<()> {
        let level = self.stages.len();
        let engine = match self.build_explicit(level) {
            Some(e) => Engine::Explicit(e),
            None if self.psd => {
                return Err(Error::SizeCap(format!(
                    "level {level} exceeds the explicit size cap, which PSD mode requires"
                )))
            }
            None => Engine::Columns(self.build_columns()),
        };
        let stage = ConeStage {
            level,
            psd: self.psd,
            engine,
        };
        debug!("level {level}: {} engine", stage.kind().name());
        self.stages.push(stage);
        Ok(())
    }

    /// `max dᵀv` over `{v : (1, v) ∈ K_level}`.
    pub fn support(&mut self, level: usize, d: &[f64]) -> Result<StageSupport> {
        if level >= self.stages.len() {
            return Err(Error::Invalid(format!(
                "level {level} not built (have {})",
                self.levels()
            )));
        }
        let mut sh = Shared {
            opts: &self.opts,
            psd: &self.psd_options,
            pool: &mut self.pool,
        };
        stage_support(&mut self.stages[..=level], d, &mut sh).context(|| format!("level {level}"))
    }

    /// Rows describing `w ∈ K_level` for a caller-supplied point `w`,
    /// appended to `lp` starting at variable `offset`. Returns the number of
    /// variables used.
    pub fn membership_rows(
        &self,
        level: usize,
        w: &[AffineExpr],
    ) -> (Vec<AffineExpr>, Vec<AffineExpr>, usize) {
        let mut b = Builder::new(&self.base, false);
        let first = w
            .iter()
            .flat_map(|e| e.terms.iter().map(|t| t.0))
            .max()
            .map_or(0, |m| m + 1);
        b.nvars = first;
        b.membership(level, w);
        (b.le, b.eq, b.nvars)
    }
}
