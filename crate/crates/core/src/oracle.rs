//! Exact supports of `conv F` by enumerating the pieces of `F`.

use rayon::prelude::*;

use crate::error::{Context, Result};
use crate::formulations::{FormulationBundle, Piece};
use crate::lp::scalar::Scalar;
use crate::lp::{solve_lp, LpResult, Sense};
use crate::polytope::Support;

/// `max dᵀv` over one piece, with `d` padded by zeros on auxiliary
/// variables. Returns the maximizer truncated to the bundle's coordinates.
pub fn piece_argmax<T: Scalar>(
    piece: &Piece<T>,
    n: usize,
    d: &[T],
) -> Result<(Support<T>, Option<Vec<T>>)> {
    let mut obj = d.to_vec();
    obj.resize(piece.facets.dim, T::zero());
    let res = solve_lp(&piece.facets.to_lp(Sense::Maximize, obj))
        .context(|| format!("piece {:?}", piece.label))?;
    let point = match &res {
        LpResult::Optimal { point, .. } => Some(point[..n].to_vec()),
        _ => None,
    };
    Ok((Support::from(&res), point))
}

/// Support of `conv F` in direction `d`, with a maximizer when finite.
pub fn hull_argmax<T: Scalar>(
    pieces: &[Piece<T>],
    n: usize,
    d: &[T],
) -> Result<(Support<T>, Option<Vec<T>>)> {
    let all = pieces
        .par_iter()
        .map(|p| piece_argmax(p, n, d))
        .collect::<Result<Vec<_>>>()?;
    let mut best: (Support<T>, Option<Vec<T>>) = (Support::Empty, None);
    for (s, p) in all {
        best = match (&best.0, &s) {
            (Support::Unbounded, _) => best,
            (_, Support::Unbounded) => (s, None),
            (_, Support::Empty) => best,
            (Support::Empty, _) => (s, p),
            (Support::Value(a), Support::Value(b)) => {
                if b > a {
                    (s, p)
                } else {
                    best
                }
            }
        };
    }
    Ok(best)
}

pub fn hull_support<T: Scalar>(bundle: &FormulationBundle<T>, d: &[T]) -> Result<Support<T>> {
    Ok(hull_argmax(&bundle.pieces(), bundle.n(), d)?.0)
}

/// Supports in several directions, sharing one piece enumeration.
pub fn hull_supports<T: Scalar>(
    bundle: &FormulationBundle<T>,
    dirs: &[Vec<T>],
) -> Result<Vec<Support<T>>> {
    let pieces = bundle.pieces();
    dirs.iter()
        .map(|d| Ok(hull_argmax(&pieces, bundle.n(), d)?.0))
        .collect()
}
