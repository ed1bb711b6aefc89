//! Rank-revealing dense least squares. Storage is nalgebra; the SVD is faer's.

use nalgebra::{DMatrix, DVector};

struct ThinSvd {
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    v: DMatrix<f64>,
}

fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = m.thin_svd().expect("svd of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    ThinSvd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        singular_values: DVector::from_fn(s.nrows(), |i, _| s[i]),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    }
}

/// Singular values below `max_sv * max(rows, cols) * f64::EPSILON` count as zero.
fn rank_tolerance(singular_values: &DVector<f64>, rows: usize, cols: usize) -> f64 {
    let max_sv = singular_values.iter().cloned().fold(0.0, f64::max);
    max_sv * rows.max(cols) as f64 * f64::EPSILON
}

#[derive(Clone, Debug)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> LstsqSolution {
    assert_eq!(a.nrows(), b.len(), "row count of a must match b");
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return LstsqSolution {
            x: DVector::zeros(cols),
            rank: 0,
        };
    }
    let svd = thin_svd(a);
    let tol = rank_tolerance(&svd.singular_values, rows, cols);

    let mut x = DVector::zeros(cols);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            continue;
        }
        rank += 1;
        let coeff = svd.u.column(k).dot(b) / s;
        x.axpy(coeff, &svd.v.column(k), 1.0);
    }
    LstsqSolution { x, rank }
}

/// Orthonormal basis (as columns) of `{ n : a n = 0 }`.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Pad short matrices with zero rows so the SVD returns a full V.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = thin_svd(&padded);
    let tol = rank_tolerance(&svd.singular_values, rows, cols);
    let basis: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(k, _)| svd.v.column(k).into_owned())
        .collect();
    if basis.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return 0;
    }
    let sv = thin_svd(a).singular_values;
    let tol = rank_tolerance(&sv, rows, cols);
    sv.iter().filter(|&&s| s > tol).count()
}
