//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Orthonormal basis of the numerical kernel of a matrix.
#[derive(Clone, Debug)]
pub struct NullSpace {
    /// Columns span the kernel.
    pub basis: DMatrix<f64>,
    /// All singular values of the zero-padded square matrix, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Smallest kept singular value over the largest discarded one
    /// (floored at `sigma_max * eps`).
    pub gap_ratio: f64,
}

/// Kernel of `a` via the SVD of `a` padded with zero rows to a square
/// matrix, so that the full right singular basis is available. Singular
/// values below `rel_tol * sigma_max` count as zero.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> NullSpace {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    // A tall matrix has only n singular values; the kernel lives in R^n.
    sv.resize(n, 0.0);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = rel_tol * smax;
    let rank = sv.iter().filter(|&&s| s > cut).count();
    let floor = (smax * f64::EPSILON).max(f64::MIN_POSITIVE);
    let gap_ratio = if rank == 0 {
        0.0
    } else if rank == n {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank].max(floor)
    };
    let k = n - rank;
    let mut basis = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().skip(rank).enumerate() {
        basis.set_column(col, &v_t.row(idx).transpose());
    }
    NullSpace { basis, singular_values: sv, rank, gap_ratio }
}

/// Smallest-norm least-squares solution of `a x = b` through the SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, rel_tol * smax.max(f64::MIN_POSITIVE))
        .expect("both singular bases were computed")
}

/// Numerical rank of `a`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Ratio of extreme singular values (infinite when rank deficient).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// Gauss-Newton with minimal-norm steps for an underdetermined system
/// `f(x) = 0`; `f` returns the residual and its Jacobian. Converges to
/// the nearest solution to first order, which is what the finite-difference
/// oracles need.
pub fn newton_project<F>(x0: &DVector<f64>, mut f: F, tol: f64, max_iter: usize) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = x0.clone();
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let (r, j) = f(&x);
        let norm = r.amax();
        if norm <= tol {
            return Ok(x);
        }
        if !norm.is_finite() || (norm > last * 2.0 && last < 1e-3) {
            return Err(Error::NoConvergence);
        }
        last = norm;
        let jjt = &j * j.transpose();
        let y = match jjt.clone().cholesky() {
            Some(ch) => ch.solve(&r),
            None => lstsq(&jjt, &r, 1e-14),
        };
        x -= j.transpose() * y;
    }
    let (r, _) = f(&x);
    if r.amax() <= tol * 10.0 {
        Ok(x)
    } else {
        Err(Error::NoConvergence)
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
