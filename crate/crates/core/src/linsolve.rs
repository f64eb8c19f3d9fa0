//! Rank-revealing least squares built on the SVD.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff: `s > RANK_RTOL * max(s_max, 1)` counts.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LeastSquares {
    /// Minimum-norm minimiser of `|A x - b|`.
    pub x: DVector<f64>,
    /// `max |A x - b|`.
    pub residual: f64,
    pub rank: usize,
    /// Orthonormal basis of `ker A`, one column per direction.
    pub null_basis: DMatrix<f64>,
}

impl LeastSquares {
    pub fn nullity(&self) -> usize {
        self.null_basis.ncols()
    }
}

struct FullSvd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v: DMatrix<f64>,
}

fn full_svd(a: &DMatrix<f64>) -> FullSvd {
    let (m, n) = a.shape();
    // pad wide systems so that V is square and carries the whole kernel
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").transpose();
    FullSvd { u, s: svd.singular_values.as_slice().to_vec(), v }
}

fn cutoff(s: &[f64]) -> f64 {
    RANK_RTOL * s.iter().cloned().fold(1.0, f64::max)
}

pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> LeastSquares {
    let (m, n) = a.shape();
    let FullSvd { u, s, v } = full_svd(a);
    let tol = cutoff(&s);
    let mut x = DVector::zeros(n);
    let mut keep = Vec::new();
    let mut drop = Vec::new();
    for (k, &sk) in s.iter().enumerate() {
        if sk > tol {
            let uk = u.column(k);
            let coef = uk.rows(0, m).dot(b) / sk;
            x += v.column(k) * coef;
            keep.push(k);
        } else {
            drop.push(k);
        }
    }
    let residual = (a * &x - b).amax();
    let null_basis = if drop.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&drop.iter().map(|&k| v.column(k)).collect::<Vec<_>>())
    };
    LeastSquares { x, residual, rank: keep.len(), null_basis }
}

/// Orthonormal basis of `ker A` (columns).
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    solve(a, &DVector::zeros(a.nrows())).null_basis
}

/// Numerical rank with the same relative cutoff.
pub fn rank(a: &DMatrix<f64>, rtol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.clone().singular_values();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_overdetermined() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let r = solve(&a, &b);
        assert!(r.residual < 1e-12);
        assert_eq!(r.nullity(), 0);
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = null_space(&a);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).amax() < 1e-12);
        let r = solve(&a, &DVector::from_vec(vec![2.0]));
        // minimum norm picks (1, 1, 0)
        assert!((r.x[0] - 1.0).abs() < 1e-12 && r.x[2].abs() < 1e-12);
    }

    #[test]
    fn inconsistent_reports_residual() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let r = solve(&a, &DVector::from_vec(vec![0.0, 2.0]));
        assert!((r.residual - 1.0).abs() < 1e-12);
    }
}
