//! Successive convex relaxations of `F`.
//!
//! Two families are provided. The lifted operators ([`lifted`]) describe
//! `C_{k+1}` by a linear (or eigencut-SDP) program over `(v, V)` with the
//! cut family `P²(C_k, D₀)` attached to `P_F`. The homogeneous operators
//! ([`homog`]) keep the nested cones `K_k` exactly, with one symmetric
//! certificate matrix per level. [`run_hierarchy`] drives either family
//! and records probe supports per iteration.

pub mod homog;
pub mod lemma;
pub mod lifted;

use std::collections::BTreeMap;
use std::time::Instant;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Context, Error, Result};
use crate::formulations::FormulationBundle;
use crate::oracle::hull_supports;
use crate::polytope::{FacetList, Support};
use crate::quadratic::QuadraticFunction;

pub use homog::{ConeTower, EngineOptions, StageEngineKind};
pub use lifted::{n_hat, n_hat_plus, LiftedRelaxation};

/// Uniform direction on the sphere via normalized Gaussian samples.
fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm(&v);
        if nv > 1e-6 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Finite set of unit directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionSet {
    pub dirs: Vec<Vec<f64>>,
    /// Set when `±e_i` is present for every binary coordinate.
    pub lemma31: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum D0Preset {
    /// `±e_i` for every coordinate.
    Full,
    /// `±e_i` for the binary coordinates only.
    Minimal,
}

impl std::str::FromStr for D0Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "minimal" => Ok(Self::Minimal),
            other => Err(format!("unknown direction preset {other:?}")),
        }
    }
}

impl DirectionSet {
    pub fn new(dirs: Vec<Vec<f64>>) -> Result<Self> {
        let dim = dirs.first().map_or(0, Vec::len);
        for (k, d) in dirs.iter().enumerate() {
            if d.len() != dim {
                return Err(Error::Invalid(format!(
                    "direction {k} has length {}",
                    d.len()
                )));
            }
            if (norm(d) - 1.0).abs() > 1e-10 {
                return Err(Error::Invalid(format!(
                    "direction {k} is not a unit vector"
                )));
            }
        }
        Ok(Self {
            dirs,
            lemma31: false,
        })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// `±e_i` for each listed coordinate in dimension `n`.
    pub fn signed_units(n: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut dirs = Vec::new();
        for i in coords {
            dirs.push(FacetList::unit(n, i, 1.0));
            dirs.push(FacetList::unit(n, i, -1.0));
        }
        Self {
            dirs,
            lemma31: false,
        }
    }

    pub fn d0<T>(bundle: &FormulationBundle<T>, preset: D0Preset) -> Result<Self> {
        let layout = &bundle.layout;
        let mut set = match preset {
            D0Preset::Full => Self::signed_units(layout.n, 0..layout.n),
            D0Preset::Minimal => {
                if layout.m == layout.n {
                    return Err(Error::Invalid(format!(
                        "the minimal direction preset needs binary coordinates ({} has none)",
                        bundle.kind.name()
                    )));
                }
                Self::signed_units(layout.n, layout.binaries())
            }
        };
        set.lemma31 = set.covers_binaries(layout.m, layout.n);
        Ok(set)
    }

    /// Whether `±e_i` is present for every `i` in `m..n`.
    pub fn covers_binaries(&self, m: usize, n: usize) -> bool {
        (m..n).all(|i| {
            [1.0, -1.0].iter().all(|&s| {
                let e = FacetList::unit(n, i, s);
                self.dirs.iter().any(|d| d == &e)
            })
        })
    }

    /// `±` coordinates plus the normalized facet normals of `C₀`.
    pub fn dbar_default(bundle: &FormulationBundle) -> Self {
        let n = bundle.n();
        let mut set = Self::signed_units(n, 0..n);
        for row in &bundle.c0.rows {
            let nr = norm(&row.coef);
            if nr < 1e-12 {
                continue;
            }
            let d: Vec<f64> = row.coef.iter().map(|c| c / nr).collect();
            set.push_unique(d);
        }
        set
    }

    /// Objective direction (when nonzero), `±` coordinates and `random`
    /// seeded unit vectors.
    pub fn probes(bundle: &FormulationBundle, random: usize, seed: u64) -> Self {
        Self::probes_for(&bundle.objective, random, seed)
    }

    /// As [`DirectionSet::probes`] in the space of `objective`.
    pub fn probes_for(objective: &[f64], random: usize, seed: u64) -> Self {
        let n = objective.len();
        let mut set = Self {
            dirs: Vec::new(),
            lemma31: false,
        };
        let no = norm(objective);
        if no > 0.0 {
            set.dirs.push(objective.iter().map(|c| c / no).collect());
        }
        for d in Self::signed_units(n, 0..n).dirs {
            set.push_unique(d);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random {
            set.dirs.push(unit_vector(&mut rng, n));
        }
        set
    }

    pub fn push_unique(&mut self, d: Vec<f64>) {
        let dup = self
            .dirs
            .iter()
            .any(|e| e.iter().zip(&d).all(|(a, b)| (a - b).abs() <= 1e-9));
        if !dup {
            self.dirs.push(d);
        }
    }

    /// Direction identifiers `p000`, `p001`, ...
    pub fn ids(&self) -> Vec<String> {
        (0..self.dirs.len()).map(|k| format!("p{k:03}")).collect()
    }
}

/// `α(C, d)` for each direction of a set, stored in the same order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportTable {
    pub dirs: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl SupportTable {
    /// Evaluates `support` on every direction; unbounded or empty supports
    /// are errors since `C₀` is compact and `F` is nonempty.
    pub fn compute(
        dirs: &DirectionSet,
        mut support: impl FnMut(&[f64]) -> Result<Support>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(dirs.len());
        for (k, d) in dirs.dirs.iter().enumerate() {
            match support(d).context(|| format!("direction {k}"))? {
                Support::Value(v) => values.push(v),
                other => {
                    return Err(Error::Invalid(format!(
                        "direction {k}: support is {other:?}, expected a finite value"
                    )))
                }
            }
        }
        Ok(Self {
            dirs: dirs.dirs.clone(),
            values,
        })
    }

    pub fn of_c0(bundle: &FormulationBundle, dirs: &DirectionSet) -> Result<Self> {
        let mut lp = crate::lp::Simplex::new(
            &bundle
                .c0
                .to_lp(crate::lp::Sense::Maximize, vec![0.0; bundle.n()]),
            crate::lp::SimplexOptions::default(),
        );
        Self::compute(dirs, |d| {
            lp.set_objective(crate::lp::Sense::Maximize, d.to_vec());
            Ok(Support::from(&lp.solve()?))
        })
    }

    pub fn get(&self, d: &[f64]) -> Option<f64> {
        self.dirs
            .iter()
            .position(|e| e.iter().zip(d).all(|(a, b)| (a - b).abs() <= 1e-12))
            .map(|k| self.values[k])
    }

    /// Entrywise minimum with another table over the same directions.
    pub fn min_with(&mut self, other: &SupportTable) {
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            if *w < *v {
                *v = *w;
            }
        }
    }
}

/// One generator `(α(C₀, d), -d)` of `T₀*` per direction of `d0`.
pub fn t0_generators(c0_support: &SupportTable, d0: &DirectionSet) -> Result<Vec<Vec<f64>>> {
    d0.dirs
        .iter()
        .map(|d| {
            let a = c0_support
                .get(d)
                .ok_or_else(|| Error::Invalid(format!("no support value for direction {d:?}")))?;
            let mut u = Vec::with_capacity(1 + d.len());
            u.push(a);
            u.extend(d.iter().map(|x| -x));
            Ok(u)
        })
        .collect()
}

/// `-(dᵀv - α(C₀, d))(d̄ᵀv - α(C, d̄))` for every `d ∈ d0`, `d̄ ∈ dbar`.
pub fn p2_cuts(
    c0_support: &SupportTable,
    ck_support: &SupportTable,
    d0: &DirectionSet,
    dbar: &DirectionSet,
) -> Result<Vec<QuadraticFunction>> {
    let mut out = Vec::with_capacity(d0.len() * dbar.len());
    for d in &d0.dirs {
        let a0 = c0_support
            .get(d)
            .ok_or_else(|| Error::Invalid("support table misses a D₀ direction".into()))?;
        for db in &dbar.dirs {
            let b0 = ck_support
                .get(db)
                .ok_or_else(|| Error::Invalid("support table misses a D̄ direction".into()))?;
            out.push(QuadraticFunction::negated_product(d, a0, db, b0));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ssilp,
    Ssdp,
    HomogLp,
    HomogSdp,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ssilp => "ssilp",
            Self::Ssdp => "ssdp",
            Self::HomogLp => "homog_lp",
            Self::HomogSdp => "homog_sdp",
        }
    }

    pub fn is_homogeneous(self) -> bool {
        matches!(self, Self::HomogLp | Self::HomogSdp)
    }

    pub fn is_psd(self) -> bool {
        matches!(self, Self::Ssdp | Self::HomogSdp)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ssilp" => Ok(Self::Ssilp),
            "ssdp" => Ok(Self::Ssdp),
            "homog_lp" => Ok(Self::HomogLp),
            "homog_sdp" => Ok(Self::HomogSdp),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    #[serde(rename = "hull reached")]
    HullReached,
    #[serde(rename = "max iter")]
    MaxIter,
    #[serde(rename = "empty")]
    Empty,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `null` marks an empty relaxation.
    pub supports: BTreeMap<String, Option<f64>>,
    pub engine: String,
    /// False when an eigencut loop ran out of budget at this level.
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyTrace {
    pub mode: Mode,
    pub formulation: String,
    pub probes: BTreeMap<String, Vec<f64>>,
    pub hull: BTreeMap<String, Option<f64>>,
    pub iterations: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// Index of the last relaxation computed.
    pub iteration_count: usize,
    pub wall_time: f64,
}

impl HierarchyTrace {
    /// Rows `k,dir_id,support,hull`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,dir_id,support,hull\n");
        let fmt = |v: &Option<f64>| v.map_or_else(String::new, |x| format!("{x:.12e}"));
        for it in &self.iterations {
            for (id, v) in &it.supports {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    it.k,
                    id,
                    fmt(v),
                    fmt(self.hull.get(id).unwrap_or(&None))
                ));
            }
        }
        out
    }

    pub fn support_series(&self, id: &str) -> Vec<Option<f64>> {
        self.iterations
            .iter()
            .map(|it| it.supports.get(id).copied().flatten())
            .collect()
    }

    /// Largest `support_{k+1} - support_k` over probes and levels.
    pub fn max_increase(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for id in self.probes.keys() {
            let s = self.support_series(id);
            for w in s.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    worst = worst.max(b - a);
                }
            }
        }
        worst
    }

    /// Largest `hull - support_k` over probes and levels.
    pub fn max_hull_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for it in &self.iterations {
            for (id, v) in &it.supports {
                if let (Some(v), Some(Some(h))) = (v, self.hull.get(id)) {
                    worst = worst.max(h - v);
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct HierarchyConfig {
    pub mode: Mode,
    pub d0: DirectionSet,
    pub dbar: DirectionSet,
    pub probes: DirectionSet,
    pub max_iter: usize,
    pub tol: f64,
    pub engine: EngineOptions,
    pub psd: crate::lp::psd::PsdOptions,
}

impl HierarchyConfig {
    /// Full `D₀`, default `D̄`, 32 seeded random probes, tolerance `1e-6`.
    pub fn new(bundle: &FormulationBundle, mode: Mode, max_iter: usize) -> Result<Self> {
        Ok(Self {
            mode,
            d0: DirectionSet::d0(bundle, D0Preset::Full)?,
            dbar: DirectionSet::dbar_default(bundle),
            probes: DirectionSet::probes(bundle, 32, 0),
            max_iter,
            tol: 1e-6,
            engine: EngineOptions::default(),
            psd: crate::lp::psd::PsdOptions::default(),
        })
    }
}

fn support_map(ids: &[String], values: &[Support]) -> BTreeMap<String, Option<f64>> {
    ids.iter()
        .cloned()
        .zip(values.iter().map(|s| s.value().copied()))
        .collect()
}

enum Driver {
    Lifted(LiftedRelaxation),
    Homog(ConeTower),
}

/// Iterates the chosen operator until every probe support agrees with the
/// hull within `tol` or `max_iter` steps were taken.
pub fn run_hierarchy(bundle: &FormulationBundle, cfg: &HierarchyConfig) -> Result<HierarchyTrace> {
    if cfg.probes.is_empty() {
        return Err(Error::Invalid("no probe directions".into()));
    }
    if cfg.max_iter == 0 {
        return Err(Error::Invalid("max_iter must be at least 1".into()));
    }
    if cfg.mode.is_homogeneous() && !bundle.kind.has_binaries() {
        return Err(Error::Invalid(format!(
            "mode {} needs a formulation with binary coordinates, got {}",
            cfg.mode.name(),
            bundle.kind.name()
        )));
    }
    let start = Instant::now();
    let ids = cfg.probes.ids();
    let hull_vals = hull_supports(bundle, &cfg.probes.dirs).context(|| "oracle hull".into())?;
    let hull = support_map(&ids, &hull_vals);

    let mut driver = if cfg.mode.is_homogeneous() {
        let mut tower = ConeTower::new(bundle, &cfg.d0, cfg.engine.clone(), cfg.mode.is_psd())?;
        tower.psd_options = cfg.psd.clone();
        Driver::Homog(tower)
    } else {
        Driver::Lifted(LiftedRelaxation::new(
            bundle,
            &cfg.d0,
            &cfg.dbar,
            cfg.mode.is_psd(),
            cfg.psd.clone(),
        )?)
    };

    let mut iterations = Vec::new();
    let mut stop = StopReason::MaxIter;
    for k in 0..=cfg.max_iter {
        if k > 0 {
            match &mut driver {
                Driver::Lifted(l) => l.step().context(|| format!("iteration {k}"))?,
                Driver::Homog(t) => t.homog_step().context(|| format!("iteration {k}"))?,
            }
        }
        let mut values = Vec::with_capacity(cfg.probes.len());
        let mut converged = true;
        for (p, d) in cfg.probes.dirs.iter().enumerate() {
            let s = match &mut driver {
                Driver::Lifted(l) => {
                    let (s, ok) = l
                        .support(d)
                        .context(|| format!("iteration {k}, probe {p}"))?;
                    converged &= ok;
                    s
                }
                Driver::Homog(t) => {
                    let out = t
                        .support(k, d)
                        .context(|| format!("iteration {k}, probe {p}"))?;
                    converged &= out.converged;
                    out.support
                }
            };
            values.push(s);
        }
        // C_{k+1} ⊆ C_k, so an earlier level's bound still holds; keeping
        // the least one hides feasibility-tolerance noise in the LP values
        if let Some(prev) = iterations.last().map(|it: &IterationRecord| &it.supports) {
            for (s, id) in values.iter_mut().zip(&ids) {
                if let Some(Some(p)) = prev.get(id) {
                    if let Support::Value(v) = s {
                        *v = v.min(*p);
                    }
                    if matches!(s, Support::Unbounded) {
                        *s = Support::Value(*p);
                    }
                }
            }
        }
        let engine = match &driver {
            Driver::Lifted(_) => cfg.mode.name().to_string(),
            Driver::Homog(t) => t.engine_kind(k).name().to_string(),
        };
        let empty = values.iter().any(|s| matches!(s, Support::Empty));
        let reached = values.iter().zip(&hull_vals).all(|(s, h)| match (s, h) {
            (Support::Value(a), Support::Value(b)) => (a - b).abs() <= cfg.tol,
            (Support::Empty, Support::Empty) => true,
            _ => false,
        });
        debug!("{} level {k}: hull reached = {reached}", cfg.mode.name());
        iterations.push(IterationRecord {
            k,
            supports: support_map(&ids, &values),
            engine,
            converged,
        });
        if reached {
            stop = StopReason::HullReached;
            break;
        }
        if empty {
            stop = StopReason::Empty;
            break;
        }
    }
    let iteration_count = iterations.last().map_or(0, |it| it.k);
    info!(
        "{} on {}: {:?} after {iteration_count} iterations",
        cfg.mode.name(),
        bundle.kind.name(),
        stop
    );
    Ok(HierarchyTrace {
        mode: cfg.mode,
        formulation: bundle.kind.name().to_string(),
        probes: ids
            .iter()
            .cloned()
            .zip(cfg.probes.dirs.iter().cloned())
            .collect(),
        hull,
        iterations,
        stop_reason: stop,
        iteration_count,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
