//! Vertex enumeration for small polyhedra.
//!
//! A vertex of `{x : Ax <= b}` is the solution of `n` linearly independent
//! tight constraints that also satisfies the remaining ones. Enumerating all
//! `n`-subsets is exponential in general but exact, and the instances handled
//! here are tiny; a hard cap guards against accidental blowup.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const COMBINATION_CAP: u128 = 2_000_000;

fn binomial(p: u128, n: u128) -> u128 {
    if n > p {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..n {
        r = r.saturating_mul(p - i) / (i + 1);
        if r > COMBINATION_CAP * 4 {
            return u128::MAX;
        }
    }
    r
}

/// All vertices of `{x : Ax <= b}`, deduplicated. Returns an empty list when
/// no subset of tight constraints yields a feasible basic point.
pub(crate) fn enumerate_vertices(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<Vec<f64>>> {
    let p = a.nrows();
    let n = a.ncols();
    if binomial(p as u128, n as u128) > COMBINATION_CAP {
        return Err(Error::InvalidFeasibleSet(format!(
            "vertex enumeration over {p} constraints in dimension {n} exceeds the cap"
        )));
    }
    let scale = 1.0 + a.amax() + b.amax();
    let feas_tol = 1e-8 * scale;
    let mut verts: Vec<Vec<f64>> = Vec::new();

    let mut subset: Vec<usize> = (0..n).collect();
    if p < n {
        return Ok(verts);
    }
    loop {
        let sub = DMatrix::from_fn(n, n, |r, c| a[(subset[r], c)]);
        let rhs = DVector::from_iterator(n, subset.iter().map(|&i| b[i]));
        if let Some(x) = sub.clone().full_piv_lu().solve(&rhs) {
            // Reject ill-conditioned pseudo-solutions of singular subsets.
            let resid = (&sub * &x - &rhs).amax();
            if resid <= 1e-9 * scale * (1.0 + x.amax()) {
                let ax = a * &x;
                let feasible = (0..p).all(|i| ax[i] <= b[i] + feas_tol);
                if feasible {
                    let v = x.as_slice().to_vec();
                    let dup = verts.iter().any(|w| {
                        w.iter()
                            .zip(&v)
                            .all(|(wi, vi)| (wi - vi).abs() <= 1e-7 * scale)
                    });
                    if !dup {
                        verts.push(v);
                    }
                }
            }
        }
        // next n-combination of 0..p in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(verts);
            }
            i -= 1;
            if subset[i] != i + p - n {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Vertices of the symmetric polytope `{xi : |a_i^T xi| <= 1}`, obtained by
/// stacking `[A; -A]` against the all-ones right-hand side.
pub(crate) fn sym_polytope_vertices(rows: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let p = rows.nrows();
    let n = rows.ncols();
    let stacked = DMatrix::from_fn(2 * p, n, |r, c| {
        if r < p {
            rows[(r, c)]
        } else {
            -rows[(r - p, c)]
        }
    });
    let ones = DVector::from_element(2 * p, 1.0);
    enumerate_vertices(&stacked, &ones)
}
