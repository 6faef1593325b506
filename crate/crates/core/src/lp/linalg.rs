//! Small dense helpers: row reduction, rank and null spaces.

use super::scalar::Scalar;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<T: Scalar>(a: &mut [Vec<T>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let tol = if T::EXACT {
        T::zero()
    } else {
        T::from_f64(1e-10)
    };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        if a[best][c].abs() <= tol {
            for row in a.iter_mut().skip(r) {
                row[c] = T::zero();
            }
            continue;
        }
        a.swap(r, best);
        let p = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let prow = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<T: Scalar>(a: &[Vec<T>]) -> usize {
    let mut m = a.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : a x = 0}`, one vector per free column.
pub fn null_space<T: Scalar>(a: &[Vec<T>], cols: usize) -> Vec<Vec<T>> {
    let mut m = a.to_vec();
    let pivots = rref(&mut m);
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![T::zero(); cols];
        v[free] = T::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solves the square system `a x = b`, `None` when singular.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = a.len();
    let mut aug: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_a_line() {
        let a = vec![vec![1.0, -1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let ns = null_space(&a, 3);
        assert_eq!(ns, vec![vec![1.0, 1.0, 0.0]]);
        assert_eq!(rank(&a), 2);
    }

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
    }
}
