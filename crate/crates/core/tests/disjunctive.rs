use num_rational::BigRational;
use screlax::disjunctive::{
    algorithm41_run, algorithm41_step, balas_run, compare_dominance, facet_sufficiency_gaps,
    initial_facets, projection_probes, row_slack, DominanceStatus,
};
use screlax::formulations::build_lcp_alpha;
use screlax::instance::{enumerate_solutions, random_instance, InstanceClass, LcpInstance};
use screlax::lp::{solve_lp, LinearProgram, LinearRow, Sense};
use screlax::oracle::hull_supports;
use screlax::relaxation::DirectionSet;
use screlax::{FacetList, Support};

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

fn gap(a: &Support, b: &Support) -> f64 {
    match (a, b) {
        (Support::Value(x), Support::Value(y)) => (x - y).abs(),
        (x, y) if x == y => 0.0,
        _ => f64::INFINITY,
    }
}

#[test]
fn reaches_the_hull_at_ell() {
    for (ell, seed) in [(1, 0), (2, 0), (2, 5), (3, 0)] {
        let inst = solvable(ell, seed);
        let b = build_lcp_alpha::<f64>(&inst, true);
        let probes = DirectionSet::probes(&b, 32, 11);
        let run = algorithm41_run::<f64>(&inst, ell, &probes.dirs).unwrap();
        let hull = hull_supports(&b, &probes.dirs).unwrap();
        let worst = run.supports[ell]
            .iter()
            .zip(&hull)
            .map(|(s, h)| gap(s, h))
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "ℓ={ell} seed {seed}: {worst:e}");
        for k in 1..=ell {
            for (a, b) in run.supports[k].iter().zip(&run.supports[k - 1]) {
                if let (Support::Value(a), Support::Value(b)) = (a, b) {
                    assert!(*a <= b + 1e-9);
                }
            }
        }
    }
}

#[test]
fn rational_mode_is_exact_for_small_ell() {
    for (ell, seed) in [(1, 3), (2, 0)] {
        let inst = solvable(ell, seed);
        let b = build_lcp_alpha::<BigRational>(&inst, true);
        let probes = DirectionSet::probes(&build_lcp_alpha::<f64>(&inst, true), 4, 2);
        let run = algorithm41_run::<BigRational>(&inst, ell, &probes.dirs).unwrap();
        let exact: Vec<Vec<BigRational>> = run.probes.clone();
        let hull = hull_supports(&b, &exact).unwrap();
        assert_eq!(run.supports[ell], hull, "ℓ={ell}");
    }
}

#[test]
fn step_rows_are_valid_and_bounded_in_count() {
    let inst = solvable(2, 1);
    let b = build_lcp_alpha::<f64>(&inst, true);
    let f0 = initial_facets(&b).unwrap();
    let (f1, stats) = algorithm41_step(&f0).unwrap();
    assert_eq!(stats.lps, 4 * f0.rows.len());
    assert!(f1.rows.len() <= f0.rows.len() * 3);
    for row in &f1.rows {
        for p in b.pieces() {
            if let Some(g) = row_slack(row, &p.facets).unwrap() {
                assert!(g >= -1e-7, "row cuts piece {:?}: {g:e}", p.label);
            }
        }
    }
}

#[test]
fn redundant_seed_rows_are_dominated() {
    let inst = solvable(2, 2);
    let b = build_lcp_alpha::<f64>(&inst, true);
    let f0 = initial_facets(&b).unwrap();
    let (f1, _) = algorithm41_step(&f0).unwrap();
    // averages of facet pairs, and a facet pushed outward
    let mut seeds = Vec::new();
    for i in 0..f0.rows.len() {
        for j in (i + 1)..f0.rows.len() {
            let (a, c) = (&f0.rows[i], &f0.rows[j]);
            seeds.push(LinearRow::new(
                a.coef
                    .iter()
                    .zip(&c.coef)
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect(),
                0.5 * (a.rhs + c.rhs),
            ));
        }
    }
    seeds.push(LinearRow::new(
        f0.rows[0].coef.clone(),
        f0.rows[0].rhs + 0.25,
    ));
    for row in &seeds {
        for g in facet_sufficiency_gaps(row, &f0, &f1).unwrap() {
            assert!(g >= -1e-9, "{row:?}: {g:e}");
        }
    }
}

#[test]
fn balas_reaches_the_hull() {
    let inst = solvable(2, 4);
    let b = build_lcp_alpha::<f64>(&inst, true);
    let probes = DirectionSet::probes(&b, 16, 5);
    let steps = balas_run::<f64>(&inst).unwrap();
    for (k, u) in steps.iter().enumerate() {
        assert!(u.pieces.len() <= 1 << k);
    }
    let hull = hull_supports(&b, &probes.dirs).unwrap();
    for (d, h) in probes.dirs.iter().zip(&hull) {
        let s = steps[2].support(d).unwrap();
        assert!(gap(&s, h) <= 1e-6);
    }
}

#[test]
fn binary_hierarchy_projects_inside_facet_relaxations() {
    for seed in [0, 1] {
        let inst = solvable(2, seed);
        let probes = projection_probes(2, 12, seed);
        let d = compare_dominance(&inst, 2, &probes, 1e-6).unwrap();
        assert_eq!(
            d.status,
            DominanceStatus::Ok,
            "{:?}",
            d.reports.iter().find(|r| !r.ok)
        );
        assert_eq!(d.reports.len(), 3 * probes.len());
    }
}

/// Rows stating `w ∈ K_k` for the cones `K_{k+1} = ∩_j (K_k ∩ {x_j = 0}) + (K_k ∩ {s_j = 0})`,
/// with one pair of copies of `K_k` per `j`.
fn member(lp: &mut LinearProgram, c0: &FacetList, ell: usize, k: usize, w: &[usize]) {
    let n = c0.dim;
    if k == 0 {
        for r in &c0.rows {
            let mut row = vec![0.0; lp.num_vars()];
            row[w[0]] -= r.rhs;
            for (i, c) in r.coef.iter().enumerate() {
                row[w[1 + i]] += c;
            }
            lp.add_le(row, 0.0);
        }
        for r in &c0.equalities {
            let mut row = vec![0.0; lp.num_vars()];
            row[w[0]] -= r.rhs;
            for (i, c) in r.coef.iter().enumerate() {
                row[w[1 + i]] += c;
            }
            lp.add_eq(row, 0.0);
        }
        let mut row = vec![0.0; lp.num_vars()];
        row[w[0]] = -1.0;
        lp.add_le(row, 0.0);
        return;
    }
    for j in 0..ell {
        let a: Vec<usize> = (0..=n).map(|_| lp.add_var()).collect();
        let b: Vec<usize> = (0..=n).map(|_| lp.add_var()).collect();
        for i in 0..=n {
            let mut row = vec![0.0; lp.num_vars()];
            row[w[i]] = 1.0;
            row[a[i]] -= 1.0;
            row[b[i]] -= 1.0;
            lp.add_eq(row, 0.0);
        }
        let mut row = vec![0.0; lp.num_vars()];
        row[a[1 + j]] = 1.0;
        lp.add_eq(row, 0.0);
        let mut row = vec![0.0; lp.num_vars()];
        row[b[1 + ell + j]] = 1.0;
        lp.add_eq(row, 0.0);
        member(lp, c0, ell, k - 1, &a);
        member(lp, c0, ell, k - 1, &b);
    }
}

fn pad(lp: &mut LinearProgram) {
    let n = lp.num_vars();
    for r in lp.inequalities.iter_mut().chain(lp.equalities.iter_mut()) {
        r.coef.resize(n, 0.0);
    }
    lp.objective.resize(n, 0.0);
}

#[test]
fn matches_the_nested_face_sum_program() {
    for (ell, seed) in [(2, 3), (3, 0)] {
        let inst = solvable(ell, seed);
        let b = build_lcp_alpha::<f64>(&inst, true);
        let n = b.n();
        let probes = DirectionSet::probes(&b, 6, 13);
        let k_max = ell.min(2);
        let run = algorithm41_run::<f64>(&inst, k_max, &probes.dirs).unwrap();
        for k in 0..=k_max {
            for (p, d) in probes.dirs.iter().enumerate() {
                let mut lp = LinearProgram::new(1 + n, Sense::Maximize);
                let w: Vec<usize> = (0..=n).collect();
                member(&mut lp, &b.c0, ell, k, &w);
                let mut row = vec![0.0; lp.num_vars()];
                row[0] = 1.0;
                lp.add_eq(row, 1.0);
                pad(&mut lp);
                lp.objective[1..=n].copy_from_slice(d);
                let want = *solve_lp(&lp).unwrap().value().unwrap();
                let got = run.supports[k][p].expect_value("probe");
                assert!(
                    (got - want).abs() <= 1e-7,
                    "ℓ={ell} k={k} p={p}: {got} vs {want}"
                );
            }
        }
    }
}
