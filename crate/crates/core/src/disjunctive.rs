//! Facet strengthening on the explicit-`s` formulation over `(x, s, α)`,
//! the sequential face-sum (Balas) operator, and the projection
//! comparison against the binary hierarchy.
//!
//! Rows are stored as `a·v ≤ b`. In the `u` convention
//! `-Σ u_i v_i ≤ u₀` this is `u = -a`, `u₀ = b`, and the homogenized
//! cone is `K_k = {(λ, v) : a·v ≤ bλ, e·v = fλ, λ ≥ 0}`.

use log::{debug, trace};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Context, Error, Result};
use crate::formulations::{build_lcp_alpha, build_mip_alpha, FormulationBundle};
use crate::instance::LcpInstance;
use crate::lp::scalar::{self, Scalar};
use crate::lp::{LinearProgram, LinearRow, LpResult, Sense, Simplex, SimplexOptions};
use crate::polytope::{normalize_row, rows_close, FacetList, Support};
use crate::relaxation::{ConeTower, D0Preset, DirectionSet, EngineOptions};

/// Which side of pair `j` is fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    X,
    S,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrengthenOutcome<T = f64> {
    /// Both LPs solved; the row with the two coefficients replaced.
    Strengthened(LinearRow<T>),
    /// At least one LP infeasible; the equations `x_j = 0` and/or `s_j = 0`.
    Fixed(Vec<(Side, LinearRow<T>)>),
}

fn x_index(j: usize) -> usize {
    j
}

fn s_index(ell: usize, j: usize) -> usize {
    ell + j
}

/// `ℓ` for a facet list over `(x, s, α)`.
fn ell_of<T>(ck: &FacetList<T>) -> Result<usize> {
    if ck.dim % 2 != 1 {
        return Err(Error::Invalid(format!(
            "facet list has dimension {}, expected 2ℓ+1",
            ck.dim
        )));
    }
    Ok(ck.dim / 2)
}

fn equation<T: Scalar>(dim: usize, i: usize) -> LinearRow<T> {
    LinearRow::new(FacetList::unit(dim, i, T::one()), T::zero())
}

/// The homogenized program `{ξ ∈ K_k : ξ_{x_j} = 1, ξ_{s_j} = 0}` (or the
/// mirror for `Side::S`), variables `(λ, v)`.
fn face_lp<T: Scalar>(ck: &FacetList<T>, j: usize, side: Side) -> Result<LinearProgram<T>> {
    let ell = ell_of(ck)?;
    let d = ck.dim + 1;
    let mut lp = LinearProgram::new(d, Sense::Minimize);
    lp.nonnegative(0);
    let lift = |r: &LinearRow<T>| {
        let mut row = Vec::with_capacity(d);
        row.push(-r.rhs.clone());
        row.extend(r.coef.iter().cloned());
        row
    };
    for r in &ck.rows {
        lp.add_le(lift(r), T::zero());
    }
    for r in &ck.equalities {
        lp.add_eq(lift(r), T::zero());
    }
    let (one, zero) = match side {
        Side::X => (x_index(j), s_index(ell, j)),
        Side::S => (s_index(ell, j), x_index(j)),
    };
    lp.add_eq(FacetList::unit(d, 1 + one, T::one()), T::one());
    lp.add_eq(FacetList::unit(d, 1 + zero, T::one()), T::zero());
    Ok(lp)
}

/// `min uᵀξ` over the face program for every inequality row, where
/// `uᵀξ = bλ - a·ξ_v`. `None` when the face program is infeasible.
/// Negative values (only possible through rounding) are clamped to zero,
/// which leaves the row unchanged.
fn face_values<T: Scalar>(ck: &FacetList<T>, j: usize, side: Side) -> Result<Option<Vec<T>>> {
    let lp = face_lp(ck, j, side)?;
    let mut simplex = Simplex::new(&lp, SimplexOptions::default());
    let mut out = Vec::with_capacity(ck.rows.len());
    for (r, row) in ck.rows.iter().enumerate() {
        let mut obj = Vec::with_capacity(ck.dim + 1);
        obj.push(row.rhs.clone());
        obj.extend(row.coef.iter().map(|c| -c.clone()));
        simplex.set_objective(Sense::Minimize, obj);
        match simplex.solve()? {
            LpResult::Optimal { value, .. } => {
                out.push(if value.negative() { T::zero() } else { value });
            }
            LpResult::Infeasible(_) => return Ok(None),
            LpResult::Unbounded { .. } => {
                return Err(Error::Invalid(format!(
                    "face program for pair {j} ({side:?}) is unbounded on row {r}; \
                     the row is not valid for the current relaxation"
                )))
            }
        }
    }
    Ok(Some(out))
}

/// Strengthens one inequality row of `ck` on pair `j`.
pub fn strengthen_row<T: Scalar>(
    row: &LinearRow<T>,
    j: usize,
    ck: &FacetList<T>,
) -> Result<StrengthenOutcome<T>> {
    let with_row = |side| -> Result<Option<T>> {
        // the face program is built from all of ck, the objective from `row`
        let mut lp = face_lp(ck, j, side)?;
        lp.objective = Vec::with_capacity(ck.dim + 1);
        lp.objective.push(row.rhs.clone());
        lp.objective.extend(row.coef.iter().map(|c| -c.clone()));
        match crate::lp::solve_lp(&lp)? {
            LpResult::Optimal { value, .. } => {
                Ok(Some(if value.negative() { T::zero() } else { value }))
            }
            LpResult::Infeasible(_) => Ok(None),
            LpResult::Unbounded { .. } => Err(Error::Invalid(format!(
                "face program for pair {j} ({side:?}) is unbounded"
            ))),
        }
    };
    let vx = with_row(Side::X)?;
    let vs = with_row(Side::S)?;
    Ok(outcome(ck.dim, j, row, vx, vs))
}

fn outcome<T: Scalar>(
    dim: usize,
    j: usize,
    row: &LinearRow<T>,
    vx: Option<T>,
    vs: Option<T>,
) -> StrengthenOutcome<T> {
    let ell = dim / 2;
    match (vx, vs) {
        (Some(vx), Some(vs)) => {
            let mut coef = row.coef.clone();
            for (i, v) in [(x_index(j), vx), (s_index(ell, j), vs)] {
                coef[i] = cancel(coef[i].clone(), v);
            }
            StrengthenOutcome::Strengthened(LinearRow::new(coef, row.rhs.clone()))
        }
        (vx, vs) => {
            let mut eqs = Vec::new();
            if vx.is_none() {
                eqs.push((Side::X, equation(dim, x_index(j))));
            }
            if vs.is_none() {
                eqs.push((Side::S, equation(dim, s_index(ell, j))));
            }
            StrengthenOutcome::Fixed(eqs)
        }
    }
}

/// `a + v`, snapped to zero when the sum is cancellation noise.
fn cancel<T: Scalar>(a: T, v: T) -> T {
    let scale = a.abs() + v.abs();
    let sum = a + v;
    if !T::EXACT && sum.abs() <= T::from_f64(1e-12) * scale {
        T::zero()
    } else {
        sum
    }
}

/// Counts for one strengthening step.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StepStats {
    pub rows_in: usize,
    pub lps: usize,
    pub strengthened: usize,
    pub equations: usize,
    pub rows_out: usize,
}

/// Scales to max `|coef|` one and, for equations, makes the first nonzero
/// coefficient positive.
fn canonical<T: Scalar>(row: &LinearRow<T>, equality: bool) -> LinearRow<T> {
    let mut r = normalize_row(row);
    if equality {
        if let Some(first) = r.coef.iter().find(|c| !c.is_zero()).cloned() {
            if first.negative() {
                r.coef.iter_mut().for_each(|c| *c = -c.clone());
                r.rhs = -r.rhs.clone();
            }
        }
    }
    r
}

fn dedup_tol<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64(1e-9)
    }
}

fn push_unique<T: Scalar>(into: &mut Vec<LinearRow<T>>, row: LinearRow<T>, equality: bool) {
    let tol = dedup_tol::<T>();
    // a row with (numerically) no coefficients is trivial unless infeasible
    if scalar::max_abs(&row.coef) <= tol && !(row.rhs.clone() + tol.clone()).negative() {
        return;
    }
    let r = canonical(&row, equality);
    if !into.iter().any(|q| rows_close(q, &r, &tol)) {
        into.push(r);
    }
}

/// Normalized, deduplicated copy.
pub fn canonical_list<T: Scalar>(ck: &FacetList<T>) -> FacetList<T> {
    let mut out = FacetList::new(ck.dim);
    for r in &ck.rows {
        push_unique(&mut out.rows, r.clone(), false);
    }
    for r in &ck.equalities {
        push_unique(&mut out.equalities, r.clone(), true);
    }
    out
}

/// One pass of the strengthening step: every inequality row of `ck` on
/// every pair, `2ℓ·|rows|` LPs run as `2ℓ` warm-started sequences in
/// parallel.
pub fn algorithm41_step<T: Scalar>(ck: &FacetList<T>) -> Result<(FacetList<T>, StepStats)> {
    let ell = ell_of(ck)?;
    let ck = canonical_list(ck);
    let tasks: Vec<(usize, Side)> = (0..ell)
        .flat_map(|j| [(j, Side::X), (j, Side::S)])
        .collect();
    let values = tasks
        .par_iter()
        .map(|&(j, side)| face_values(&ck, j, side).context(|| format!("pair {j}, side {side:?}")))
        .collect::<Result<Vec<_>>>()?;
    let mut next = ck.clone();
    let mut stats = StepStats {
        rows_in: ck.rows.len(),
        lps: 2 * ell * ck.rows.len(),
        ..StepStats::default()
    };
    for j in 0..ell {
        let vx = &values[2 * j];
        let vs = &values[2 * j + 1];
        for (r, row) in ck.rows.iter().enumerate() {
            let o = outcome(
                ck.dim,
                j,
                row,
                vx.as_ref().map(|v| v[r].clone()),
                vs.as_ref().map(|v| v[r].clone()),
            );
            match o {
                StrengthenOutcome::Strengthened(new) => {
                    stats.strengthened += 1;
                    push_unique(&mut next.rows, new, false);
                }
                StrengthenOutcome::Fixed(eqs) => {
                    for (_, e) in eqs {
                        push_unique(&mut next.equalities, e, true);
                    }
                }
            }
            if vx.is_none() || vs.is_none() {
                // the equations do not depend on the row
                break;
            }
        }
    }
    stats.equations = next.equalities.len() - ck.equalities.len();
    stats.rows_out = next.rows.len();
    trace!("strengthening step: {stats:?}");
    Ok((next, stats))
}

/// One facet in the `u` convention `-Σ u_i v_i ≤ u₀`.
#[derive(Debug, Clone, Serialize)]
pub struct FacetRecord {
    pub u0: f64,
    pub u: Vec<f64>,
    pub equality: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FacetDump {
    pub k: usize,
    pub convention: &'static str,
    pub rows: Vec<FacetRecord>,
}

impl FacetDump {
    pub fn of<T: Scalar>(k: usize, ck: &FacetList<T>) -> Self {
        let rec = |r: &LinearRow<T>, equality| FacetRecord {
            // `+ 0.0` turns `-0.0` into `0.0`
            u0: r.rhs.to_f64() + 0.0,
            u: r.coef.iter().map(|c| -c.to_f64() + 0.0).collect(),
            equality,
        };
        Self {
            k,
            convention: "u0 + sum(u_i v_i) >= 0 over v = (x, s, alpha)",
            rows: ck
                .rows
                .iter()
                .map(|r| rec(r, false))
                .chain(ck.equalities.iter().map(|r| rec(r, true)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Algorithm41Iteration {
    pub k: usize,
    pub rows: usize,
    pub equalities: usize,
    pub stats: Option<StepStats>,
    /// Probe supports, `None` for an empty relaxation.
    pub supports: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct Algorithm41Run<T = f64> {
    pub bundle: FormulationBundle<T>,
    pub probes: Vec<Vec<T>>,
    /// `F(C_k)` for `k = 0..=max_iter`.
    pub facets: Vec<FacetList<T>>,
    pub iterations: Vec<Algorithm41Iteration>,
    /// Exact probe supports per iteration.
    pub supports: Vec<Vec<Support<T>>>,
}

fn probe_supports<T: Scalar>(ck: &FacetList<T>, probes: &[Vec<T>]) -> Result<Vec<Support<T>>> {
    let lp = ck.to_lp(Sense::Maximize, vec![T::zero(); ck.dim]);
    let mut s = Simplex::new(&lp, SimplexOptions::default());
    probes
        .iter()
        .map(|d| {
            s.set_objective(Sense::Maximize, d.clone());
            Ok(Support::from(&s.solve()?))
        })
        .collect()
}

/// `F(C₀)`: the explicit-`s` rows with LP-certified redundant rows removed.
pub fn initial_facets<T: Scalar>(bundle: &FormulationBundle<T>) -> Result<FacetList<T>> {
    Ok(canonical_list(&bundle.c0.without_redundant()?))
}

/// Runs `max_iter` strengthening steps from `F(C₀)`, recording supports on
/// `probes` (directions over `(x, s, α)`).
pub fn algorithm41_run<T: Scalar>(
    inst: &LcpInstance,
    max_iter: usize,
    probes: &[Vec<f64>],
) -> Result<Algorithm41Run<T>> {
    let bundle = build_lcp_alpha::<T>(inst, true);
    let probes: Vec<Vec<T>> = probes.iter().map(|d| scalar::from_f64_vec(d)).collect();
    let mut ck = initial_facets(&bundle).context(|| "initial facets".into())?;
    let mut facets = Vec::new();
    let mut iterations = Vec::new();
    let mut supports = Vec::new();
    for k in 0..=max_iter {
        let mut stats = None;
        if k > 0 {
            let (next, st) = algorithm41_step(&ck).context(|| format!("iteration {k}"))?;
            ck = next;
            stats = Some(st);
        }
        let s = probe_supports(&ck, &probes).context(|| format!("supports at iteration {k}"))?;
        debug!(
            "iteration {k}: {} rows, {} equations",
            ck.rows.len(),
            ck.equalities.len()
        );
        iterations.push(Algorithm41Iteration {
            k,
            rows: ck.rows.len(),
            equalities: ck.equalities.len(),
            stats,
            supports: s.iter().map(|v| v.value().map(Scalar::to_f64)).collect(),
        });
        supports.push(s);
        facets.push(ck.clone());
    }
    Ok(Algorithm41Run {
        bundle,
        probes,
        facets,
        iterations,
        supports,
    })
}

/// Slack of `row` over `ck`: `b - max a·v`; negative when some point of
/// `ck` violates the row. Empty `ck` gives `+∞` (`None`).
pub fn row_slack<T: Scalar>(row: &LinearRow<T>, ck: &FacetList<T>) -> Result<Option<T>> {
    match ck.support(&row.coef)? {
        Support::Value(v) => Ok(Some(row.rhs.clone() - v)),
        Support::Empty => Ok(None),
        Support::Unbounded => Err(Error::Invalid("row is unbounded over the set".into())),
    }
}

/// For a row valid on `ck` that need not be a facet, the gaps
/// `b' - max a'·v` over `next` of each of its strengthened copies
/// `(a', b')`, where `next` is the step output of `ck`. Nonnegative gaps
/// mean the strengthened copies are implied by the facet-seeded step.
pub fn facet_sufficiency_gaps<T: Scalar>(
    row: &LinearRow<T>,
    ck: &FacetList<T>,
    next: &FacetList<T>,
) -> Result<Vec<T>> {
    let ell = ell_of(ck)?;
    let mut gaps = Vec::new();
    for j in 0..ell {
        if let StrengthenOutcome::Strengthened(r) = strengthen_row(row, j, ck)? {
            if let Some(g) = row_slack(&r, next)? {
                gaps.push(g);
            }
        }
    }
    Ok(gaps)
}

/// `conv ∪ pieces`, queried through the maximum over pieces.
#[derive(Debug, Clone)]
pub struct UnionOfPolytopes<T = f64> {
    pub pieces: Vec<FacetList<T>>,
    /// `(j, side)` choices that produced each piece.
    pub labels: Vec<Vec<(usize, Side)>>,
}

impl<T: Scalar> UnionOfPolytopes<T> {
    pub fn support(&self, d: &[T]) -> Result<Support<T>> {
        let mut best = Support::Empty;
        for p in &self.pieces {
            best = best.max(p.support(d)?);
        }
        Ok(best)
    }
}

/// The sequential face-sum operator
/// `K_{k+1} = (K_k ∩ {x_{k+1} = 0}) + (K_k ∩ {s_{k+1} = 0})`: the slice of
/// `K_k` is kept as a union of pieces, each split on pair `k`. Empty pieces
/// are pruned. Returns the union after each step, starting with `C₀`.
pub fn balas_run<T: Scalar>(inst: &LcpInstance) -> Result<Vec<UnionOfPolytopes<T>>> {
    let bundle = build_lcp_alpha::<T>(inst, true);
    let ell = inst.ell;
    let mut cur = UnionOfPolytopes {
        pieces: vec![bundle.c0.clone()],
        labels: vec![Vec::new()],
    };
    let mut out = vec![cur.clone()];
    for k in 0..ell {
        let mut next = UnionOfPolytopes {
            pieces: Vec::new(),
            labels: Vec::new(),
        };
        for (p, label) in cur.pieces.iter().zip(&cur.labels) {
            for (side, i) in [(Side::X, x_index(k)), (Side::S, s_index(ell, k))] {
                let mut q = p.clone();
                q.push_eq(FacetList::unit(q.dim, i, T::one()), T::zero());
                if q.is_empty()
                    .context(|| format!("step {k}, piece {label:?}"))?
                {
                    trace!("pruned empty piece {label:?} + {side:?}{k}");
                    continue;
                }
                let mut l = label.clone();
                l.push((k, side));
                next.pieces.push(q);
                next.labels.push(l);
            }
        }
        out.push(next.clone());
        cur = next;
    }
    Ok(out)
}

/// One probe comparison between the two projected relaxations.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub k: usize,
    pub dir_id: String,
    pub support3: Option<f64>,
    pub support4: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceStatus {
    Ok,
    Violated,
    /// The containment at `k = 0` fails on some probe.
    Incomparable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dominance {
    pub status: DominanceStatus,
    pub tol: f64,
    pub reports: Vec<DominanceReport>,
}

/// Probe directions over the shared coordinates `(x, α)`.
pub fn projection_probes(ell: usize, random: usize, seed: u64) -> DirectionSet {
    let mut objective = vec![0.0; ell + 1];
    objective[ell] = 1.0;
    DirectionSet::probes_for(&objective, random, seed)
}

/// Embeds a direction over `(x, α)` into `(x, s, α)` with zeros on `s`.
fn embed4(ell: usize, d: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; 2 * ell + 1];
    v[..ell].copy_from_slice(&d[..ell]);
    v[2 * ell] = d[ell];
    v
}

/// Embeds a direction over `(x, α)` into `(α, x, z)` with zeros on `z`.
fn embed3(ell: usize, d: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; 2 * ell + 1];
    v[0] = d[ell];
    v[1..=ell].copy_from_slice(&d[..ell]);
    v
}

/// Compares, for `k ≤ k_max`, the `(x, α)` projections of the facet
/// relaxations of the explicit-`s` formulation with those of the binary
/// homogeneous hierarchy. The binary formulation carries the same
/// normalization row, so its `C₀` projects into the other one.
pub fn compare_dominance(
    inst: &LcpInstance,
    k_max: usize,
    probes: &DirectionSet,
    tol: f64,
) -> Result<Dominance> {
    let ell = inst.ell;
    let dirs4: Vec<Vec<f64>> = probes.dirs.iter().map(|d| embed4(ell, d)).collect();
    let run4 = algorithm41_run::<f64>(inst, k_max, &dirs4)?;
    let b3 = build_mip_alpha::<f64>(inst, true);
    let d0 = DirectionSet::d0(&b3, D0Preset::Minimal)?;
    let mut tower = ConeTower::new(&b3, &d0, EngineOptions::default(), false)?;
    let ids = probes.ids();
    let mut reports = Vec::new();
    for k in 0..=k_max {
        if k > 0 {
            tower.homog_step().context(|| format!("binary level {k}"))?;
        }
        for (p, d) in probes.dirs.iter().enumerate() {
            let s3 = tower
                .support(k, &embed3(ell, d))
                .context(|| format!("binary level {k}, probe {}", ids[p]))?
                .support;
            let s4 = &run4.supports[k][p];
            let ok = match (s3.value(), s4.value()) {
                (Some(a), Some(b)) => *a <= b + tol,
                (None, _) => true,
                (Some(_), None) => false,
            };
            reports.push(DominanceReport {
                k,
                dir_id: ids[p].clone(),
                support3: s3.value().copied(),
                support4: s4.value().copied(),
                ok,
            });
        }
    }
    let status = if reports.iter().filter(|r| r.k == 0).any(|r| !r.ok) {
        DominanceStatus::Incomparable
    } else if reports.iter().all(|r| r.ok) {
        DominanceStatus::Ok
    } else {
        DominanceStatus::Violated
    };
    Ok(Dominance {
        status,
        tol,
        reports,
    })
}
