//! LCP instances, random generation and the brute-force pattern oracle.
//!
//! A solution of the LCP `(M, q)` is `x ≥ 0` with `s = Mx + q ≥ 0` and
//! `xᵀs = 0`. Pattern tag `0` at index `i` means `x_i = 0`; tag `1` means
//! `s_i = 0`.

use std::path::Path;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Context, InstanceError, Result};
use crate::lp::scalar::Scalar;
use crate::lp::{solve_lp, LpResult, Sense};
use crate::polytope::FacetList;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcpInstance {
    pub ell: usize,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceClass {
    General,
    SymmetricPsd,
}

impl std::str::FromStr for InstanceClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "general" => Ok(Self::General),
            "symmetric_psd" => Ok(Self::SymmetricPsd),
            other => Err(format!("unknown instance class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcpSolution {
    pub pattern: Vec<u8>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
}

/// One complementarity pattern's polytope in `x`-space.
#[derive(Debug, Clone)]
pub struct PatternPolytope {
    pub pattern: Vec<u8>,
    pub facets: FacetList,
}

impl LcpInstance {
    pub fn new(m: Vec<Vec<f64>>, q: Vec<f64>) -> Result<Self, InstanceError> {
        let inst = Self { ell: q.len(), m, q };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.ell == 0 {
            return Err(InstanceError::EmptyInstance);
        }
        if self.m.len() != self.ell {
            return Err(InstanceError::Dimension {
                field: "M".into(),
                expected: self.ell,
                found: self.m.len(),
            });
        }
        for (i, row) in self.m.iter().enumerate() {
            if row.len() != self.ell {
                return Err(InstanceError::Dimension {
                    field: format!("M[{i}]"),
                    expected: self.ell,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(InstanceError::NonFinite {
                    field: format!("M[{i}][{j}]"),
                });
            }
        }
        if self.q.len() != self.ell {
            return Err(InstanceError::Dimension {
                field: "q".into(),
                expected: self.ell,
                found: self.q.len(),
            });
        }
        if let Some(i) = self.q.iter().position(|v| !v.is_finite()) {
            return Err(InstanceError::NonFinite {
                field: format!("q[{i}]"),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let inst: Self = serde_json::from_str(text).map_err(|e| InstanceError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// `s = Mx + q`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        self.m
            .iter()
            .zip(&self.q)
            .map(|(row, qi)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + qi)
            .collect()
    }

    pub fn m_as<T: Scalar>(&self) -> Vec<Vec<T>> {
        self.m
            .iter()
            .map(|r| r.iter().map(|&v| T::from_f64(v)).collect())
            .collect()
    }

    pub fn q_as<T: Scalar>(&self) -> Vec<T> {
        self.q.iter().map(|&v| T::from_f64(v)).collect()
    }

    pub fn m_rational(&self) -> Vec<Vec<BigRational>> {
        self.m_as()
    }

    /// `10·(1 + ‖q‖∞)·(1 + ‖M‖∞)`, the default box and big-M radius.
    pub fn default_bound(&self) -> f64 {
        let qn = self.q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mn = self
            .m
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        10.0 * (1.0 + qn) * (1.0 + mn)
    }

    /// Simultaneous row/column permutation: new index `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            ell: self.ell,
            m: perm
                .iter()
                .map(|&i| perm.iter().map(|&j| self.m[i][j]).collect())
                .collect(),
            q: perm.iter().map(|&i| self.q[i]).collect(),
        }
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<LcpInstance, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    LcpInstance::from_json(&text)
}

/// Seeded instance with entries on a dyadic grid, so that every value is
/// exactly representable in rational arithmetic.
pub fn random_instance(
    ell: usize,
    seed: u64,
    class: InstanceClass,
) -> Result<LcpInstance, InstanceError> {
    if ell == 0 {
        return Err(InstanceError::EmptyInstance);
    }
    let tag = match class {
        InstanceClass::General => 0x5eed_0001,
        InstanceClass::SymmetricPsd => 0x5eed_0002,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (tag << 32));
    let mut grid = |den: i32, span: i32| f64::from(rng.gen_range(-span..=span)) / f64::from(den);
    let m = match class {
        InstanceClass::General => (0..ell)
            .map(|_| (0..ell).map(|_| grid(64, 64)).collect())
            .collect(),
        InstanceClass::SymmetricPsd => {
            let g: Vec<Vec<f64>> = (0..ell)
                .map(|_| (0..ell).map(|_| grid(8, 8)).collect())
                .collect();
            (0..ell)
                .map(|i| {
                    (0..ell)
                        .map(|j| (0..ell).map(|k| g[i][k] * g[j][k]).sum())
                        .collect()
                })
                .collect()
        }
    };
    let q = (0..ell).map(|_| grid(64, 64)).collect();
    Ok(LcpInstance { ell, m, q })
}

/// `x ≥ -tol`, `Mx + q ≥ -tol` and `xᵀ(Mx + q) ≤ tol`.
pub fn verify_solution(inst: &LcpInstance, x: &[f64], tol: f64) -> bool {
    if x.len() != inst.ell {
        return false;
    }
    let s = inst.slack(x);
    let gap: f64 = x.iter().zip(&s).map(|(a, b)| a * b).sum();
    x.iter().all(|&v| v >= -tol) && s.iter().all(|&v| v >= -tol) && gap <= tol
}

/// All `2^ℓ` tag vectors in lexicographic order.
pub fn patterns(ell: usize) -> Vec<Vec<u8>> {
    (0..1usize << ell)
        .map(|mask| {
            (0..ell)
                .map(|i| ((mask >> (ell - 1 - i)) & 1) as u8)
                .collect()
        })
        .collect()
}

pub fn pattern_polytopes(inst: &LcpInstance, bound: f64) -> Vec<PatternPolytope> {
    let ell = inst.ell;
    patterns(ell)
        .into_iter()
        .map(|pattern| {
            let mut f = FacetList::new(ell);
            for i in 0..ell {
                f.push_le(FacetList::unit(ell, i, -1.0), 0.0);
                f.push_le(FacetList::unit(ell, i, 1.0), bound);
                f.push_le(inst.m[i].iter().map(|v| -v).collect(), inst.q[i]);
            }
            for (i, &tag) in pattern.iter().enumerate() {
                if tag == 0 {
                    f.push_eq(FacetList::unit(ell, i, 1.0), 0.0);
                } else {
                    f.push_eq(inst.m[i].clone(), -inst.q[i]);
                }
            }
            PatternPolytope { pattern, facets: f }
        })
        .collect()
}

/// One representative (a vertex minimizing `eᵀx`) per feasible pattern.
pub fn enumerate_solutions(inst: &LcpInstance, bound: f64) -> Result<Vec<LcpSolution>> {
    let pieces = pattern_polytopes(inst, bound);
    let found: Vec<Option<LcpSolution>> = pieces
        .par_iter()
        .enumerate()
        .map(|(k, piece)| {
            let lp = piece.facets.to_lp(Sense::Minimize, vec![1.0; inst.ell]);
            let res = solve_lp(&lp).context(|| format!("pattern {k} ({:?})", piece.pattern))?;
            Ok(match res {
                LpResult::Optimal { point, .. } => Some(LcpSolution {
                    pattern: piece.pattern.clone(),
                    s: inst.slack(&point),
                    x: point,
                }),
                _ => None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patterns_are_lexicographic() {
        assert_eq!(
            patterns(2),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn default_bound_formula() {
        let inst =
            LcpInstance::new(vec![vec![1.0, -2.0], vec![0.5, 0.0]], vec![-3.0, 1.0]).unwrap();
        assert_eq!(inst.default_bound(), 10.0 * 4.0 * 4.0);
    }
}
