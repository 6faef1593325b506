//! Quadratic functions `γ + 2qᵀv + vᵀQv` and their linearization over the
//! lifted variables `(v, V)`.

use serde::{Deserialize, Serialize};

use crate::lp::psd::{packed_index, packed_len};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFunction {
    pub gamma: f64,
    pub q: Vec<f64>,
    #[serde(rename = "Q")]
    pub qmat: Vec<Vec<f64>>,
}

impl QuadraticFunction {
    /// Stores `(Q + Qᵀ)/2`.
    pub fn new(gamma: f64, q: Vec<f64>, qmat: Vec<Vec<f64>>) -> Self {
        let n = q.len();
        assert_eq!(qmat.len(), n);
        let sym = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (qmat[i][j] + qmat[j][i])).collect())
            .collect();
        Self {
            gamma,
            q,
            qmat: sym,
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let lin: f64 = self.q.iter().zip(v).map(|(a, b)| a * b).sum();
        let quad: f64 = (0..self.dim())
            .map(|i| v[i] * (0..self.dim()).map(|j| self.qmat[i][j] * v[j]).sum::<f64>())
            .sum();
        self.gamma + 2.0 * lin + quad
    }

    /// `-(aᵀv - a0)(bᵀv - b0)`, valid (≤ 0) wherever `aᵀv ≤ a0` and `bᵀv ≤ b0`.
    pub fn negated_product(a: &[f64], a0: f64, b: &[f64], b0: f64) -> Self {
        let n = a.len();
        let qmat = (0..n)
            .map(|i| (0..n).map(|j| -0.5 * (a[i] * b[j] + b[i] * a[j])).collect())
            .collect();
        let q = (0..n).map(|i| 0.5 * (b0 * a[i] + a0 * b[i])).collect();
        Self {
            gamma: -a0 * b0,
            q,
            qmat,
        }
    }

    /// The row `γ + 2qᵀv + Q•V ≤ 0` over `(v, packed V)` as `(coef, rhs)`.
    pub fn lifted_row(&self) -> (Vec<f64>, f64) {
        let n = self.dim();
        let mut coef = vec![0.0; n + packed_len(n)];
        for i in 0..n {
            coef[i] = 2.0 * self.q[i];
            for j in 0..=i {
                let w = if i == j { 1.0 } else { 2.0 };
                coef[n + packed_index(i, j)] = w * self.qmat[i][j];
            }
        }
        (coef, -self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_on_unit_interval() {
        // -(v - 1)(-v - 0) = v² - v
        let f = QuadraticFunction::negated_product(&[1.0], 1.0, &[-1.0], 0.0);
        assert_eq!(f.gamma, 0.0);
        assert_eq!(f.q, vec![-0.5]);
        assert_eq!(f.qmat, vec![vec![1.0]]);
        for v in [-1.0, 0.0, 0.3, 1.0, 2.0] {
            assert!((f.eval(&[v]) - (v * v - v)).abs() < 1e-15);
        }
    }

    #[test]
    fn swapping_factors_with_equal_supports_is_symmetric() {
        let a = [0.6, 0.8];
        let b = [-1.0, 0.0];
        let f = QuadraticFunction::negated_product(&a, 2.0, &b, 0.5);
        let g = QuadraticFunction::negated_product(&b, 0.5, &a, 2.0);
        assert_eq!(f, g);
    }

    #[test]
    fn lifted_row_matches_rank_one_lift() {
        let f = QuadraticFunction::new(0.5, vec![1.0, -2.0], vec![vec![1.0, 3.0], vec![-1.0, 2.0]]);
        let v = [0.7, -0.4];
        let (coef, rhs) = f.lifted_row();
        let mut lifted = v.to_vec();
        for i in 0..2 {
            for j in 0..=i {
                lifted.push(v[i] * v[j]);
            }
        }
        let lhs: f64 = coef.iter().zip(&lifted).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs - f.eval(&v)).abs() < 1e-12);
    }
}
