//! Euclidean projection onto a polyhedron `{x : Ax <= b}`.
//!
//! Solves the strictly convex QP `min ||x - y||^2 s.t. Ax <= b` with a dual
//! active-set method. Each working-set subproblem is the projection onto an
//! affine subspace, solved through the Gram system `A_W A_W^T`; the working
//! set is kept linearly independent, so the Gram matrix stays positive
//! definite. When a violated constraint lies in the span of the active rows,
//! the blocking row chosen by the dual ratio test is dropped before the
//! constraint is retried (the degenerate step of Goldfarb-Idnani).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// KKT residual bound certified on return, relative to the data scale.
pub(crate) const KKT_TOL: f64 = 1e-10;

fn select_rows(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), a.ncols(), |r, c| a[(idx[r], c)])
}

/// Projects `y` onto `{x : Ax <= b}`. Errors when the constraints are
/// incompatible (empty polyhedron) or the iteration cap is hit.
pub(crate) fn project_polyhedron(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    y: &[f64],
) -> Result<Vec<f64>> {
    let p = a.nrows();
    let n = a.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let yv = DVector::from_column_slice(y);
    let scale = 1.0 + yv.amax() + b.amax() + a.amax();
    let tol_add = KKT_TOL * scale * 0.01;
    let tol_dual = KKT_TOL * scale * 0.01;

    let mut active: Vec<usize> = Vec::new();
    let max_iter = 300 + 30 * p;

    for _ in 0..max_iter {
        let (x, lambda, factors) = if active.is_empty() {
            (yv.clone(), DVector::zeros(0), None)
        } else {
            let aw = select_rows(a, &active);
            let bw = DVector::from_iterator(active.len(), active.iter().map(|&i| b[i]));
            let gram = &aw * aw.transpose();
            let Some(chol) = gram.cholesky() else {
                // The independence guard should prevent this; back out the
                // most recent row and continue.
                active.pop();
                continue;
            };
            let lambda = chol.solve(&(&aw * &yv - bw));
            let x = &yv - aw.transpose() * &lambda;
            (x, lambda, Some((aw, chol)))
        };

        // Drop the most negative multiplier first (lowest index on ties).
        let mut drop_pos: Option<usize> = None;
        let mut most_neg = -tol_dual;
        for (j, &l) in lambda.iter().enumerate() {
            if l < most_neg {
                most_neg = l;
                drop_pos = Some(j);
            }
        }
        if let Some(j) = drop_pos {
            active.remove(j);
            continue;
        }

        // Most violated constraint, if any.
        let resid = a * &x - b;
        let mut add_idx: Option<usize> = None;
        let mut worst = tol_add;
        for i in 0..p {
            if !active.contains(&i) && resid[i] > worst {
                worst = resid[i];
                add_idx = Some(i);
            }
        }
        let Some(add) = add_idx else {
            let kkt = kkt_residual(a, b, &yv, &x, &active, &lambda);
            if kkt > KKT_TOL * scale {
                return Err(Error::Infeasible(format!(
                    "projection KKT residual {kkt:.3e} exceeds tolerance"
                )));
            }
            return Ok(x.as_slice().to_vec());
        };

        let Some((aw, chol)) = factors else {
            active.push(add);
            continue;
        };
        // Independence test: component of a_add outside the active span.
        let ap = a.row(add).transpose();
        let r = chol.solve(&(&aw * &ap));
        let z = &ap - aw.transpose() * &r;
        if z.amax() > 1e-9 * (1.0 + ap.amax()) {
            active.push(add);
        } else {
            // Degenerate: a_add = A_W^T r. Swap out the blocking row with the
            // smallest multiplier-to-coefficient ratio and drive the violated
            // constraint in; the swap keeps the working set independent. If no
            // r_j > 0 exists the constraints are incompatible.
            let mut best: Option<(usize, f64)> = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-12 {
                    let ratio = lambda[j] / rj;
                    if best.is_none_or(|(_, cur)| ratio < cur) {
                        best = Some((j, ratio));
                    }
                }
            }
            match best {
                Some((j, _)) => {
                    active.remove(j);
                    active.push(add);
                }
                None => {
                    return Err(Error::Infeasible(
                        "constraints are incompatible; the polyhedron is empty".into(),
                    ))
                }
            }
        }
    }
    Err(Error::Infeasible(
        "active-set projection exceeded its iteration cap (degenerate polyhedron?)".into(),
    ))
}

fn kkt_residual(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    active: &[usize],
    lambda: &DVector<f64>,
) -> f64 {
    // Stationarity: x - y + A_W^T lambda = 0.
    let mut grad = x - y;
    for (j, &i) in active.iter().enumerate() {
        for c in 0..a.ncols() {
            grad[c] += lambda[j] * a[(i, c)];
        }
    }
    let mut r: f64 = grad.amax();
    let resid = a * x - b;
    for i in 0..a.nrows() {
        r = r.max(resid[i]); // primal feasibility
    }
    for (j, &i) in active.iter().enumerate() {
        r = r.max(-lambda[j]); // dual feasibility
        r = r.max(resid[i].abs()); // active rows are tight (complementarity)
    }
    r
}
