use screlax::formulations::{build_big_m, build_lcp_alpha, build_mip_alpha};
use screlax::instance::{enumerate_solutions, random_instance, InstanceClass, LcpInstance};
use screlax::relaxation::{
    run_hierarchy, ConeTower, D0Preset, DirectionSet, EngineOptions, HierarchyConfig, Mode,
    StopReason,
};
use screlax::FacetList;

fn one_dim() -> LcpInstance {
    LcpInstance::new(vec![vec![1.0]], vec![-1.0]).unwrap()
}

fn solvable(ell: usize, seed: u64) -> LcpInstance {
    (seed..)
        .map(|s| random_instance(ell, s, InstanceClass::General).unwrap())
        .find(|i| {
            !enumerate_solutions(i, i.default_bound())
                .unwrap()
                .is_empty()
        })
        .unwrap()
}

#[test]
fn level_one_reaches_alpha_one_for_mip_alpha() {
    let b = build_mip_alpha::<f64>(&one_dim(), false);
    let d0 = DirectionSet::d0(&b, D0Preset::Full).unwrap();
    let mut t = ConeTower::new(&b, &d0, EngineOptions::default(), false).unwrap();
    t.homog_step().unwrap();
    let e = FacetList::unit(b.n(), 0, 1.0);
    let s0 = t.support(0, &e).unwrap().support.expect_value("level 0");
    let s1 = t.support(1, &e).unwrap().support.expect_value("level 1");
    assert!((s1 - 1.0).abs() < 1e-9, "{s1}");
    assert!(s1 <= s0 + 1e-9);
}

#[test]
fn zero_direction_has_zero_support() {
    let b = build_mip_alpha::<f64>(&one_dim(), false);
    let d0 = DirectionSet::d0(&b, D0Preset::Minimal).unwrap();
    let mut t = ConeTower::new(&b, &d0, EngineOptions::default(), false).unwrap();
    t.homog_step().unwrap();
    for k in 0..2 {
        let s = t.support(k, &vec![0.0; b.n()]).unwrap().support;
        assert_eq!(s.expect_value("zero"), 0.0);
    }
}

#[test]
fn column_generation_agrees_with_explicit() {
    let inst = solvable(2, 11);
    let b = build_mip_alpha::<f64>(&inst, false);
    let d0 = DirectionSet::d0(&b, D0Preset::Minimal).unwrap();
    let mut explicit = ConeTower::new(&b, &d0, EngineOptions::default(), false).unwrap();
    let forced = EngineOptions {
        max_dense: 0,
        ..EngineOptions::default()
    };
    let mut columns = ConeTower::new(&b, &d0, forced, false).unwrap();
    let probes = DirectionSet::probes(&b, 6, 1);
    for _ in 0..2 {
        explicit.homog_step().unwrap();
        columns.homog_step().unwrap();
    }
    for k in 1..=2 {
        assert_eq!(columns.engine_kind(k).name(), "column_generation");
        for d in &probes.dirs {
            let a = explicit
                .support(k, d)
                .unwrap()
                .support
                .expect_value("explicit");
            let c = columns
                .support(k, d)
                .unwrap()
                .support
                .expect_value("columns");
            assert!((a - c).abs() < 1e-7, "level {k}: {a} vs {c}");
        }
    }
}

#[test]
fn homogeneous_hierarchy_terminates_in_ell_steps() {
    for (ell, seed) in [(1, 3), (2, 5), (2, 9)] {
        let inst = solvable(ell, seed);
        for b in [
            build_mip_alpha::<f64>(&inst, false),
            build_big_m::<f64>(&inst, inst.default_bound()).unwrap(),
        ] {
            let mut cfg = HierarchyConfig::new(&b, Mode::HomogLp, ell).unwrap();
            cfg.d0 = DirectionSet::d0(&b, D0Preset::Minimal).unwrap();
            cfg.probes = DirectionSet::probes(&b, 8, seed);
            let trace = run_hierarchy(&b, &cfg).unwrap();
            assert_eq!(
                trace.stop_reason,
                StopReason::HullReached,
                "{}",
                b.kind.name()
            );
            assert!(trace.iteration_count <= ell);
            assert!(trace.max_increase() <= 1e-7);
            assert!(trace.max_hull_violation() <= 1e-7);
        }
    }
}

#[test]
fn lifted_hierarchy_is_monotone_and_sound() {
    let inst = solvable(2, 4);
    let b = build_lcp_alpha::<f64>(&inst, false);
    for mode in [Mode::Ssilp, Mode::Ssdp] {
        let mut cfg = HierarchyConfig::new(&b, mode, 3).unwrap();
        cfg.probes = DirectionSet::probes(&b, 4, 2);
        let trace = run_hierarchy(&b, &cfg).unwrap();
        assert!(trace.max_increase() <= 1e-7, "{mode:?}");
        assert!(trace.max_hull_violation() <= 1e-7, "{mode:?}");
    }
}

#[test]
#[ignore]
fn timing_ell_three() {
    for seed in 0..4 {
        let inst = solvable(3, seed * 10);
        for b in [
            build_mip_alpha::<f64>(&inst, false),
            build_big_m::<f64>(&inst, inst.default_bound()).unwrap(),
        ] {
            let mut cfg = HierarchyConfig::new(&b, Mode::HomogLp, 3).unwrap();
            cfg.d0 = DirectionSet::d0(&b, D0Preset::Minimal).unwrap();
            let t = std::time::Instant::now();
            let trace = run_hierarchy(&b, &cfg).unwrap();
            eprintln!(
                "{} seed {seed}: {:?} k={} engines {:?} {:.2}s viol {:.2e} incr {:.2e}",
                b.kind.name(),
                trace.stop_reason,
                trace.iteration_count,
                trace
                    .iterations
                    .iter()
                    .map(|i| i.engine.clone())
                    .collect::<Vec<_>>(),
                t.elapsed().as_secs_f64(),
                trace.max_hull_violation(),
                trace.max_increase()
            );
        }
    }
}

#[test]
fn psd_tower_is_sound_and_inside_the_lp_tower() {
    for (ell, seed) in [(1, 1), (2, 1), (2, 6)] {
        let inst = solvable(ell, seed);
        let b = build_mip_alpha::<f64>(&inst, false);
        let mut traces = Vec::new();
        for mode in [Mode::HomogLp, Mode::HomogSdp] {
            let mut cfg = HierarchyConfig::new(&b, mode, ell).unwrap();
            cfg.d0 = DirectionSet::d0(&b, D0Preset::Minimal).unwrap();
            cfg.probes = DirectionSet::probes(&b, 8, seed);
            let trace = run_hierarchy(&b, &cfg).unwrap();
            assert!(trace.max_hull_violation() <= 1e-7, "{mode:?}");
            assert!(trace.max_increase() <= 1e-7, "{mode:?}");
            traces.push(trace);
        }
        let (lp, sdp) = (&traces[0], &traces[1]);
        for (a, b) in lp.iterations.iter().zip(&sdp.iterations) {
            for (id, v) in &b.supports {
                if let (Some(s), Some(l)) = (v, a.supports[id]) {
                    assert!(*s <= l + 1e-6, "level {} {id}: {s} > {l}", a.k);
                }
            }
        }
    }
}
