//! Face-sum decomposition of a level `k+1` point:
//! `w = ŵ + w̃` with `ŵ ∈ K_k ∩ {x_i = 0}` and `w̃ ∈ K_k ∩ {s_i = 0}`,
//! where `s = Mx + qα` on the bundle's coordinates.
//!
//! The check is an LP that minimizes the largest violation `ε` of the
//! linking equations; the reported slack is `-ε`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulations::{AffineForm, FormulationBundle};
use crate::lp::psd::AffineExpr;
use crate::lp::{solve_lp, LinearProgram, LpResult, Sense};

use super::homog::ConeTower;

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub level: usize,
    pub index: usize,
    /// `-ε*`; zero when the decomposition is exact.
    pub slack: f64,
}

/// `(λ, v) ↦ c·λ + aᵀv` for the affine form `aᵀv + c`.
fn homogenized(form: &AffineForm, offset: usize) -> AffineExpr {
    let mut terms = vec![(offset, form.constant)];
    terms.extend(
        form.coef
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (offset + 1 + j, *c)),
    );
    AffineExpr {
        constant: 0.0,
        terms: terms.into_iter().filter(|t| t.1 != 0.0).collect(),
    }
}

fn dense(e: &AffineExpr, len: usize) -> (Vec<f64>, f64) {
    let mut row = vec![0.0; len];
    for &(j, c) in &e.terms {
        row[j] += c;
    }
    (row, -e.constant)
}

/// Slack of the best decomposition of `(1, v)` into the two faces of
/// `K_level` for complementarity index `i`.
pub fn face_sum_slack(
    tower: &ConeTower,
    bundle: &FormulationBundle,
    level: usize,
    v: &[f64],
    i: usize,
) -> Result<Decomposition> {
    if i >= bundle.x_forms.len() {
        return Err(Error::Invalid(format!("no complementarity index {i}")));
    }
    let d = v.len() + 1;
    let hat: Vec<AffineExpr> = (0..d).map(AffineExpr::var).collect();
    let (le_a, eq_a, used_a) = tower.membership_rows(level, &hat);
    let tilde: Vec<AffineExpr> = (0..d).map(|j| AffineExpr::var(used_a + j)).collect();
    let (le_b, eq_b, used_b) = tower.membership_rows(level, &tilde);
    let eps = used_b;
    let len = used_b + 1;

    let mut lp = LinearProgram::new(len, Sense::Minimize);
    lp.objective[eps] = 1.0;
    lp.nonnegative(eps);
    for e in le_a.iter().chain(&le_b) {
        let (row, rhs) = dense(e, len);
        lp.add_le(row, rhs);
    }
    for e in eq_a.iter().chain(&eq_b) {
        let (row, rhs) = dense(e, len);
        lp.add_eq(row, rhs);
    }
    // |link| ≤ ε for each linking equation
    let mut links: Vec<(AffineExpr, f64)> = Vec::new();
    for j in 0..d {
        let target = if j == 0 { 1.0 } else { v[j - 1] };
        let e = AffineExpr {
            constant: 0.0,
            terms: vec![(j, 1.0), (used_a + j, 1.0)],
        };
        links.push((e, target));
    }
    links.push((homogenized(&bundle.x_forms[i], 0), 0.0));
    links.push((homogenized(&bundle.s_forms[i], used_a), 0.0));
    for (e, target) in links {
        let (mut row, _) = dense(&e, len);
        row[eps] = -1.0;
        lp.add_le(row.clone(), target);
        for c in row.iter_mut().take(eps) {
            *c = -*c;
        }
        lp.add_le(row, -target);
    }
    match solve_lp(&lp)? {
        LpResult::Optimal { value, .. } => Ok(Decomposition {
            level,
            index: i,
            slack: -value,
        }),
        other => Err(Error::Invalid(format!(
            "decomposition LP ended {:?}",
            other.status()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::build_mip_alpha;
    use crate::instance::LcpInstance;
    use crate::relaxation::{D0Preset, DirectionSet, EngineOptions};

    #[test]
    fn one_dimensional_optimum_decomposes() {
        let inst = LcpInstance::new(vec![vec![1.0]], vec![-1.0]).unwrap();
        let b = build_mip_alpha::<f64>(&inst, false);
        let d0 = DirectionSet::d0(&b, D0Preset::Full).unwrap();
        let mut t = ConeTower::new(&b, &d0, EngineOptions::default(), false).unwrap();
        t.homog_step().unwrap();
        let mut e = vec![0.0; b.n()];
        e[0] = 1.0;
        let p = t.support(1, &e).unwrap().point.unwrap();
        let out = face_sum_slack(&t, &b, 0, &p, 0).unwrap();
        assert!(out.slack >= -1e-9, "{out:?}");
    }

    #[test]
    fn point_outside_the_face_sum_has_negative_slack() {
        // (α, x, z) = (0, 1/2, 1/2) is in C₀, but x = 1/2 can only come
        // from the face s = 0, where α = x
        let inst = LcpInstance::new(vec![vec![1.0]], vec![-1.0]).unwrap();
        let b = build_mip_alpha::<f64>(&inst, false);
        let d0 = DirectionSet::d0(&b, D0Preset::Full).unwrap();
        let t = ConeTower::new(&b, &d0, EngineOptions::default(), false).unwrap();
        let out = face_sum_slack(&t, &b, 0, &[0.0, 0.5, 0.5], 0).unwrap();
        assert!(out.slack < -1e-3, "{out:?}");
        let ok = face_sum_slack(&t, &b, 0, &[0.5, 0.5, 0.5], 0).unwrap();
        assert!(ok.slack >= -1e-9, "{ok:?}");
    }
}
