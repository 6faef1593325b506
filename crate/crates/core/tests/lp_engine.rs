use num_rational::BigRational;
use proptest::prelude::*;
use screlax::lp::scalar::{from_f64_vec, ratio};
use screlax::lp::{solve_lp, LinearProgram, LpResult, LpStatus, Scalar};

fn box_lp() -> LinearProgram {
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.add_le(vec![1.0], 1.0);
    lp.nonnegative(0);
    lp
}

#[test]
fn one_dimensional_box() {
    match solve_lp(&box_lp()).unwrap() {
        LpResult::Optimal {
            point,
            value,
            duals,
        } => {
            assert_eq!(point, vec![1.0]);
            assert_eq!(value, 1.0);
            assert_eq!(duals.inequality, vec![1.0]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unbounded_ray() {
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.nonnegative(0);
    match solve_lp(&lp).unwrap() {
        LpResult::Unbounded { ray, .. } => assert_eq!(ray, vec![1.0]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn infeasible_with_certificate() {
    let mut lp = LinearProgram::maximize(vec![0.0]);
    lp.add_le(vec![1.0], -1.0);
    lp.nonnegative(0);
    match solve_lp(&lp).unwrap() {
        LpResult::Infeasible(cert) => assert!(cert.verifies(&lp, &1e-8)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn infeasible_equalities_in_exact_arithmetic() {
    let mut lp = LinearProgram::<BigRational>::minimize(vec![ratio(0, 1), ratio(0, 1)]);
    lp.add_eq(vec![ratio(1, 1), ratio(1, 1)], ratio(1, 1));
    lp.add_eq(vec![ratio(1, 1), ratio(1, 1)], ratio(2, 1));
    match solve_lp(&lp).unwrap() {
        LpResult::Infeasible(cert) => assert!(cert.verifies(&lp, &ratio(0, 1))),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn free_variables_and_bounds() {
    // min x + y, x - y = 1, -3 <= y <= 2, x free
    let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
    lp.add_eq(vec![1.0, -1.0], 1.0);
    lp.set_bounds(1, Some(-3.0), Some(2.0));
    let res = solve_lp(&lp).unwrap();
    assert_eq!(res.value(), Some(&-5.0));
    assert_eq!(res.point().unwrap(), &[-2.0, -3.0]);
}

#[test]
fn deterministic_across_runs() {
    let mut lp = LinearProgram::maximize(vec![1.0, 2.0, -1.0]);
    lp.add_le(vec![1.0, 1.0, 1.0], 4.0);
    lp.add_le(vec![1.0, 3.0, 0.0], 6.0);
    lp.add_ge(vec![0.0, 1.0, 1.0], 1.0);
    for j in 0..3 {
        lp.nonnegative(j);
    }
    let a = solve_lp(&lp).unwrap();
    let b = solve_lp(&lp).unwrap();
    assert_eq!(a, b);
}

fn dense(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec((-8i32..=8).prop_map(|k| k as f64 / 4.0), cols),
        rows,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_duality(a in dense(4, 3), b in prop::collection::vec(1i32..8, 4), c in prop::collection::vec(-4i32..=4, 3)) {
        // max cᵀx, Ax ≤ b, 0 ≤ x ≤ 5; dual min bᵀy + 5ᵀw, Aᵀy + w ≥ c, y, w ≥ 0
        let c: Vec<f64> = c.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let mut primal = LinearProgram::maximize(c.clone());
        for (row, bi) in a.iter().zip(&b) {
            primal.add_le(row.clone(), *bi);
        }
        for j in 0..3 {
            primal.set_bounds(j, Some(0.0), Some(5.0));
        }
        let p = solve_lp(&primal).unwrap();
        prop_assert_eq!(p.status(), LpStatus::Optimal);
        let pv = *p.value().unwrap();
        prop_assert!(primal.max_violation(p.point().unwrap()) <= 1e-8);

        let mut obj = b.clone();
        obj.extend([5.0; 3]);
        let mut dual = LinearProgram::minimize(obj);
        for j in 0..3 {
            let mut coef: Vec<f64> = a.iter().map(|r| r[j]).collect();
            coef.extend((0..3).map(|k| if k == j { 1.0 } else { 0.0 }));
            dual.add_ge(coef, c[j]);
        }
        for k in 0..7 {
            dual.nonnegative(k);
        }
        let d = solve_lp(&dual).unwrap();
        prop_assert!((pv - d.value().unwrap()).abs() <= 1e-6);

        if let LpResult::Optimal { duals, .. } = &p {
            prop_assert!(duals.inequality.iter().all(|y| *y >= -1e-9));
        }
    }

    #[test]
    fn certificates_verify(a in dense(5, 3), b in prop::collection::vec(-6i32..6, 5), eq in dense(1, 3)) {
        let mut lp = LinearProgram::minimize(vec![1.0, -1.0, 0.5]);
        for (row, bi) in a.iter().zip(&b) {
            lp.add_le(row.clone(), f64::from(*bi) / 2.0);
        }
        lp.add_eq(eq[0].clone(), 1.0);
        for j in 0..3 {
            lp.set_bounds(j, Some(-2.0), Some(3.0));
        }
        let res = solve_lp(&lp).unwrap();
        match &res {
            LpResult::Infeasible(cert) => prop_assert!(cert.verifies(&lp, &1e-8)),
            LpResult::Optimal { point, .. } => prop_assert!(lp.max_violation(point) <= 1e-8),
            LpResult::Unbounded { .. } => prop_assert!(false, "bounded box"),
        }

        // exact arithmetic agrees on status and value
        let mut exact = LinearProgram::<BigRational>::minimize(from_f64_vec(&lp.objective));
        for row in &lp.inequalities {
            exact.add_le(from_f64_vec(&row.coef), BigRational::from_f64(row.rhs));
        }
        for row in &lp.equalities {
            exact.add_eq(from_f64_vec(&row.coef), BigRational::from_f64(row.rhs));
        }
        for j in 0..3 {
            exact.set_bounds(j, Some(ratio(-2, 1)), Some(ratio(3, 1)));
        }
        let ex = solve_lp(&exact).unwrap();
        prop_assert_eq!(ex.status(), res.status());
        if let LpResult::Infeasible(cert) = &ex {
            prop_assert!(cert.verifies(&exact, &ratio(0, 1)));
        }
        if let (Some(v), Some(w)) = (res.value(), ex.value()) {
            prop_assert!((v - w.to_f64()).abs() <= 1e-8);
        }
    }

    #[test]
    fn unbounded_rays_are_recession_directions(a in dense(3, 3), c in prop::collection::vec(-3i32..=3, 3)) {
        let c: Vec<f64> = c.into_iter().map(f64::from).collect();
        let mut lp = LinearProgram::maximize(c.clone());
        for row in &a {
            lp.add_le(row.clone(), 1.0);
        }
        for j in 0..3 {
            lp.nonnegative(j);
        }
        if let LpResult::Unbounded { ray, point } = solve_lp(&lp).unwrap() {
            prop_assert!(lp.max_violation(&point) <= 1e-8);
            for row in &lp.inequalities {
                prop_assert!(row.eval(&ray) <= 1e-9);
            }
            prop_assert!(ray.iter().all(|r| *r >= -1e-9));
            prop_assert!(screlax::lp::scalar::dot(&c, &ray) > 1e-9);
        }
    }
}

#[test]
fn warm_start_objective_change_matches_cold_solve() {
    use screlax::lp::{Sense, Simplex, SimplexOptions};
    let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.add_le(vec![1.0, 2.0], 4.0);
    lp.add_le(vec![3.0, 1.0], 6.0);
    lp.nonnegative(0);
    lp.nonnegative(1);
    let mut warm = Simplex::new(&lp, SimplexOptions::default());
    assert_eq!(warm.solve().unwrap().value(), Some(&2.8));
    for c in [[1.0, 0.0], [0.0, 1.0], [-1.0, 2.0], [2.0, -1.0]] {
        warm.set_objective(Sense::Maximize, c.to_vec());
        let mut cold = lp.clone();
        cold.objective = c.to_vec();
        let a = *warm.solve().unwrap().value().unwrap();
        let b = *solve_lp(&cold).unwrap().value().unwrap();
        assert!((a - b).abs() < 1e-12, "{c:?}: {a} vs {b}");
    }
}

#[test]
fn rows_and_columns_added_in_place() {
    use screlax::lp::{Simplex, SimplexOptions};
    // max x + y, x + y <= 3, x, y >= 0
    let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.add_le(vec![1.0, 1.0], 3.0);
    lp.nonnegative(0);
    lp.nonnegative(1);
    let mut s = Simplex::new(&lp, SimplexOptions::default());
    assert_eq!(s.solve().unwrap().value(), Some(&3.0));
    // cut x <= 1 and y <= 1 (violated at the current vertex)
    s.add_le_row(&[1.0, 0.0], 1.0);
    s.add_le_row(&[0.0, 1.0], 1.0);
    assert_eq!(s.solve().unwrap().value(), Some(&2.0));
    // new column w with cost 2 using one unit of the first row
    s.add_column(&[(0, 1.0)], &[], 2.0, Some(0.0), None);
    let res = s.solve().unwrap();
    assert_eq!(res.value(), Some(&6.0));
    // an infeasible cut, then a column that repairs it
    s.add_le_row(&[-1.0, -1.0, -1.0], -10.0);
    assert!(s.solve().unwrap().is_infeasible());
    s.add_column(&[(3, -1.0)], &[], 0.0, Some(0.0), None);
    assert!(s.solve().unwrap().is_optimal());
}
