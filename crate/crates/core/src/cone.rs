//! Pointed polyhedral cones with both representations.
//!
//! `K = {x : Bx ≥ 0} = cone(G)`. The dual is `K* = cone(rows of B) =
//! {s : Gᵀs ≥ 0}`, so both descriptions are kept side by side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::linalg::{null_space, rank};
use crate::lp::{solve_lp, LinearProgram, LpResult};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralCone {
    pub dim: usize,
    /// Facet normals: `K = {x : b·x ≥ 0 for every row b}`.
    pub facets: Vec<Vec<f64>>,
    /// Extreme rays.
    pub generators: Vec<Vec<f64>>,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn scaled(v: &[f64]) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    v.iter().map(|x| x / m).collect()
}

/// Vectors `r` orthogonal to an `(dim-1)`-subset of `rows` with
/// `other·r ≥ 0` for every entry of `other`, deduplicated.
fn extreme_directions(rows: &[Vec<f64>], other: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for subset in subsets(rows.len(), dim - 1) {
        let sub: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        if dim > 1 && rank(&sub) != dim - 1 {
            continue;
        }
        let ns = null_space(&sub, dim);
        if ns.len() != 1 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let r: Vec<f64> = ns[0].iter().map(|x| sign * x).collect();
            let ok = other
                .iter()
                .all(|b| b.iter().zip(&r).map(|(p, q)| p * q).sum::<f64>() >= -TOL);
            if ok {
                let r = scaled(&r);
                if !out
                    .iter()
                    .any(|o| o.iter().zip(&r).all(|(a, b)| (a - b).abs() <= 1e-9))
                {
                    out.push(r);
                }
            }
        }
    }
    out
}

impl PolyhedralCone {
    /// `K = {x : Bx ≥ 0}`; extreme rays are computed by enumeration.
    pub fn from_inequalities(facets: Vec<Vec<f64>>) -> Result<Self> {
        let dim = facets.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Cone("empty description".into()));
        }
        let generators = extreme_directions(&facets, &facets, dim);
        let cone = Self {
            dim,
            facets,
            generators,
        };
        cone.check()?;
        Ok(cone)
    }

    /// `K = cone(G)`; facets are computed by enumeration.
    pub fn from_generators(generators: Vec<Vec<f64>>) -> Result<Self> {
        let dim = generators.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Cone("empty description".into()));
        }
        let facets = extreme_directions(&generators, &generators, dim);
        let cone = Self {
            dim,
            facets,
            generators,
        };
        cone.check()?;
        Ok(cone)
    }

    pub fn orthant(dim: usize) -> Self {
        let id: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            dim,
            facets: id.clone(),
            generators: id,
        }
    }

    /// Pointed (trivial lineality) with a strictly interior point.
    pub fn check(&self) -> Result<()> {
        if rank(&self.facets) != self.dim {
            return Err(Error::Cone("cone is not pointed".into()));
        }
        // max t s.t. Bx ≥ t, -1 ≤ x ≤ 1, t ≤ 1
        let mut lp = LinearProgram::maximize({
            let mut c = vec![0.0; self.dim + 1];
            c[self.dim] = 1.0;
            c
        });
        for b in &self.facets {
            let mut row: Vec<f64> = b.iter().map(|v| -v).collect();
            row.push(1.0);
            lp.add_le(row, 0.0);
        }
        for j in 0..self.dim {
            lp.set_bounds(j, Some(-1.0), Some(1.0));
        }
        lp.set_bounds(self.dim, None, Some(1.0));
        match solve_lp(&lp)? {
            LpResult::Optimal { value, .. } if value > TOL => Ok(()),
            _ => Err(Error::Cone("cone has empty interior".into())),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.facets
            .iter()
            .all(|b| b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() >= -tol)
    }

    pub fn dual_contains(&self, s: &[f64], tol: f64) -> bool {
        self.generators
            .iter()
            .all(|g| g.iter().zip(s).map(|(p, q)| p * q).sum::<f64>() >= -tol)
    }

    /// Smallest facet slack of `x`, positive iff `x ∈ int K`.
    pub fn interior_margin(&self, x: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|b| b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest generator slack of `s`, positive iff `s ∈ int K*`.
    pub fn dual_interior_margin(&self, s: &[f64]) -> f64 {
        self.generators
            .iter()
            .map(|g| g.iter().zip(s).map(|(p, q)| p * q).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of the extreme rays, interior to `K`.
    pub fn default_eta(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.generators.iter().map(|g| g[j]).sum())
            .collect()
    }

    /// Sum of the facet normals, interior to `K*`.
    pub fn default_eta_bar(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.facets.iter().map(|b| b[j]).sum())
            .collect()
    }

    /// A seeded pointed cone: `dim + extra` generators scattered around `e`
    /// on a dyadic grid.
    pub fn random(dim: usize, extra: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0_7e00);
        for _ in 0..100 {
            let gens: Vec<Vec<f64>> = (0..dim + extra)
                .map(|_| {
                    (0..dim)
                        .map(|_| 1.0 + f64::from(rng.gen_range(-6..=6)) / 8.0)
                        .collect()
                })
                .collect();
            if let Ok(cone) = Self::from_generators(gens) {
                // keep only genuine extreme rays
                let rays = extreme_directions(&cone.facets, &cone.facets, dim);
                return Ok(Self {
                    dim,
                    facets: cone.facets,
                    generators: rays,
                });
            }
        }
        Err(Error::Cone("no full-dimensional cone found".into()))
    }
}
