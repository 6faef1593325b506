use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use log::info;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;

use screlax::disjunctive::{
    algorithm41_run, compare_dominance, projection_probes, Algorithm41Iteration, Dominance,
    FacetDump,
};
use screlax::formulations::{build_lcp_alpha, build_named, FormulationKind};
use screlax::instance::{enumerate_solutions, load_instance, random_instance, InstanceClass};
use screlax::oracle::hull_supports;
use screlax::relaxation::{run_hierarchy, D0Preset, DirectionSet, HierarchyConfig, Mode};
use screlax::{LcpInstance, Support};

use crate::{
    Arith, ClassArg, CompareArgs, GenArgs, HullArgs, ProbeArgs, ReportArgs, RunArgs, SolveArgs,
};

/// Version stamped into every object written by the CLI.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Compute(m) => f.write_str(m),
        }
    }
}

impl From<screlax::Error> for CliError {
    fn from(e: screlax::Error) -> Self {
        Self::Compute(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read_instance(path: &Path) -> Result<LcpInstance> {
    load_instance(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", p.display()))),
        None => to_stdout(&format!("{text}\n")),
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn to_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Compute(format!("cannot write to stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn emit_json<S: Serialize>(value: &S, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(e.to_string()))?;
    emit(&text, output)
}

/// Serializes `value` and prepends a `version` field.
fn versioned<S: Serialize>(value: &S) -> Result<Value> {
    let mut map = serde_json::Map::new();
    map.insert("version".into(), FORMAT_VERSION.into());
    match serde_json::to_value(value).map_err(|e| CliError::Compute(e.to_string()))? {
        Value::Object(rest) => map.extend(rest),
        other => {
            map.insert("data".into(), other);
        }
    }
    Ok(Value::Object(map))
}

fn support_value(s: &Support) -> Option<f64> {
    s.value().copied()
}

pub fn gen(a: &GenArgs) -> Result<()> {
    let class = match a.class {
        ClassArg::General => InstanceClass::General,
        ClassArg::SymmetricPsd => InstanceClass::SymmetricPsd,
    };
    let inst = random_instance(a.ell, a.seed, class).map_err(usage)?;
    match &a.output {
        Some(p) => {
            emit(&inst.to_json(), Some(p))?;
            println!(
                "wrote {}: ell={} seed={} class={:?}",
                p.display(),
                inst.ell,
                a.seed,
                class
            );
            Ok(())
        }
        None => emit(&inst.to_json(), None),
    }
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let bound = a.bound.unwrap_or_else(|| inst.default_bound());
    if !(bound.is_finite() && bound > 0.0) {
        return Err(usage(format!("bound must be positive, got {bound}")));
    }
    let sols = enumerate_solutions(&inst, bound)?;
    let summary = if sols.is_empty() {
        "no solutions".to_string()
    } else {
        format!("{} feasible pattern(s)", sols.len())
    };
    if a.output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    emit_json(&sols, a.output.as_deref())
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T> {
    s.parse().map_err(CliError::Usage)
}

pub fn run(a: &RunArgs) -> Result<()> {
    let kind: FormulationKind = parse(&a.form)?;
    let mode: Mode = parse(&a.mode)?;
    let preset: D0Preset = parse(&a.d0)?;
    if mode.is_homogeneous() && !kind.has_binaries() {
        return Err(usage(format!(
            "mode {} needs a formulation with binary coordinates (big_m or mip_alpha), got {}",
            mode.name(),
            kind.name()
        )));
    }
    if preset == D0Preset::Minimal && !kind.has_binaries() {
        return Err(usage(format!(
            "--d0 minimal needs binary coordinates, {} has none",
            kind.name()
        )));
    }
    if a.max_iter == 0 {
        return Err(usage("--max-iter must be at least 1"));
    }
    let inst = read_instance(&a.instance)?;
    let bundle = build_named(kind, &inst)?;
    let mut cfg = HierarchyConfig::new(&bundle, mode, a.max_iter)?;
    cfg.d0 = DirectionSet::d0(&bundle, preset)?;
    cfg.probes = DirectionSet::probes(&bundle, a.probe.probes, a.probe.seed);
    cfg.tol = a.tol;
    let trace = run_hierarchy(&bundle, &cfg)?;
    info!("{:?} after {} iterations", trace.stop_reason, trace.iteration_count);
    if let Some(p) = &a.csv {
        std::fs::write(p, trace.to_csv())
            .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", p.display())))?;
    }
    emit_json(&versioned(&trace)?, a.output.as_deref())
}

#[derive(Serialize)]
struct HullIteration {
    k: usize,
    rows: usize,
    equalities: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<screlax::disjunctive::StepStats>,
    supports: BTreeMap<String, Option<f64>>,
}

#[derive(Serialize)]
struct HullReport {
    formulation: &'static str,
    arith: &'static str,
    ell: usize,
    probes: BTreeMap<String, Vec<f64>>,
    hull: BTreeMap<String, Option<f64>>,
    iterations: Vec<HullIteration>,
    facets: Vec<FacetDump>,
    stop_reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    dominance: Option<Dominance>,
    wall_time: f64,
}

fn keyed<T: Clone>(ids: &[String], values: &[T]) -> BTreeMap<String, T> {
    ids.iter().cloned().zip(values.iter().cloned()).collect()
}

fn hull_iterations(ids: &[String], its: Vec<Algorithm41Iteration>) -> Vec<HullIteration> {
    its.into_iter()
        .map(|it| HullIteration {
            k: it.k,
            rows: it.rows,
            equalities: it.equalities,
            stats: it.stats,
            supports: keyed(ids, &it.supports),
        })
        .collect()
}

pub fn hull(a: &HullArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let start = Instant::now();
    let max_iter = a.max_iter.unwrap_or(inst.ell);
    let bundle = build_lcp_alpha::<f64>(&inst, true);
    let probes = DirectionSet::probes(&bundle, a.probe.probes, a.probe.seed);
    let ids = probes.ids();
    let (iterations, facets, hull, reached) = match a.arith {
        Arith::Float => {
            let run = algorithm41_run::<f64>(&inst, max_iter, &probes.dirs)?;
            let hull = hull_supports(&bundle, &probes.dirs)?;
            let last = run.supports.last().expect("iteration 0 is always present");
            let reached = last.iter().zip(&hull).all(|(s, h)| match (s, h) {
                (Support::Value(x), Support::Value(y)) => (x - y).abs() <= a.tol,
                (x, y) => x == y,
            });
            let facets = run
                .facets
                .iter()
                .enumerate()
                .map(|(k, f)| FacetDump::of(k, f))
                .collect::<Vec<_>>();
            let hull: Vec<Option<f64>> = hull.iter().map(support_value).collect();
            (run.iterations, facets, hull, reached)
        }
        Arith::Rational => {
            let run = algorithm41_run::<BigRational>(&inst, max_iter, &probes.dirs)?;
            let hull = hull_supports(&run.bundle, &run.probes)?;
            let reached = run.supports.last().expect("iteration 0 is always present") == &hull;
            let facets = run
                .facets
                .iter()
                .enumerate()
                .map(|(k, f)| FacetDump::of(k, f))
                .collect::<Vec<_>>();
            let hull: Vec<Option<f64>> = hull
                .iter()
                .map(|s| support_value(&s.to_f64()))
                .collect();
            (run.iterations, facets, hull, reached)
        }
    };
    let dominance = if a.compare_dominance {
        let dirs = projection_probes(inst.ell, a.probe.probes, a.probe.seed);
        Some(compare_dominance(&inst, max_iter, &dirs, a.tol)?)
    } else {
        None
    };
    let report = HullReport {
        formulation: FormulationKind::LcpAlpha.name(),
        arith: match a.arith {
            Arith::Float => "float",
            Arith::Rational => "rational",
        },
        ell: inst.ell,
        probes: keyed(&ids, &probes.dirs),
        hull: keyed(&ids, &hull),
        iterations: hull_iterations(&ids, iterations),
        facets,
        stop_reason: if reached { "hull reached" } else { "max iter" },
        dominance,
        wall_time: start.elapsed().as_secs_f64(),
    };
    emit_json(&versioned(&report)?, a.output.as_deref())
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let max_iter = a.max_iter.unwrap_or(inst.ell);
    let ProbeArgs { probes, seed } = a.probe;
    let dirs = projection_probes(inst.ell, probes, seed);
    let d = compare_dominance(&inst, max_iter, &dirs, a.tol)?;
    eprintln!(
        "{:?}: {} of {} comparisons hold",
        d.status,
        d.reports.iter().filter(|r| r.ok).count(),
        d.reports.len()
    );
    emit_json(&versioned(&d)?, a.output.as_deref())
}

fn csv_value(v: Option<&Value>) -> String {
    match v.and_then(Value::as_f64) {
        Some(x) => format!("{x:.12e}"),
        None => String::new(),
    }
}

/// Rows `k,dir_id,support,hull` from a trace or a facet run.
pub fn trace_csv(trace: &Value) -> Result<String> {
    let bad = || usage("not a trace: expected \"iterations\" with \"supports\" maps");
    let its = trace
        .get("iterations")
        .and_then(Value::as_array)
        .ok_or_else(bad)?;
    let hull = trace.get("hull").and_then(Value::as_object);
    let mut out = String::from("k,dir_id,support,hull\n");
    for it in its {
        let k = it.get("k").and_then(Value::as_u64).ok_or_else(bad)?;
        let sup = it
            .get("supports")
            .and_then(Value::as_object)
            .ok_or_else(bad)?;
        for (id, v) in sup {
            out.push_str(&format!(
                "{k},{id},{},{}\n",
                csv_value(Some(v)),
                csv_value(hull.and_then(|h| h.get(id)))
            ));
        }
    }
    Ok(out)
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.trace)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.trace.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: {e}", a.trace.display())))?;
    let csv = trace_csv(&value)?;
    match &a.output {
        Some(p) => std::fs::write(p, csv)
            .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", p.display()))),
        None => to_stdout(&csv),
    }
}
