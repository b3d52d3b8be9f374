//! Dense complex linear algebra helpers and an overflow-safe log-determinant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix carrying X, H, W, Y, Φ and the Wishart/Beta draws.
pub type ComplexMatrix = DMatrix<Complex64>;

/// ln|det| together with the determinant's sign (-1, 0 or 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogDet {
    pub log_abs: f64,
    pub sign: f64,
}

impl SignedLogDet {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

/// Eigenvalues of a Hermitian matrix in decreasing order.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let sym = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values in decreasing order; min(rows, cols) of them.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Upper-triangular T with positive real diagonal such that A = Tᴴ T.
pub fn upper_cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let chol = a.clone().cholesky().ok_or_else(|| {
        Error::DegenerateFactorization("matrix is not numerically positive definite".into())
    })?;
    Ok(chol.l().adjoint())
}

/// Signed log-determinant by LU with partial pivoting.
pub fn signed_log_det(a: &DMatrix<f64>) -> SignedLogDet {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let mut lu = a.clone();
    let n = lu.nrows();
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax == 0.0 || !pmax.is_finite() {
            return SignedLogDet { log_abs: f64::NEG_INFINITY, sign: 0.0 };
        }
        if piv != k {
            lu.swap_rows(piv, k);
            sign = -sign;
        }
        let p = lu[(k, k)];
        if p < 0.0 {
            sign = -sign;
        }
        log_abs += p.abs().ln();
        for i in k + 1..n {
            let f = lu[(i, k)] / p;
            if f != 0.0 {
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
    }
    SignedLogDet { log_abs, sign }
}

/// Log-determinant of a matrix with positive entries given by their logs.
///
/// Each row is divided by its largest entry, then each column by its
/// largest entry, with a second row pass; the factors are added back in
/// the log domain. Rows like e^{λσ²} with λσ² in the millions then neither
/// overflow nor collapse to identical rows before the factorization.
pub fn log_det_positive_entries(log_entries: &DMatrix<f64>) -> SignedLogDet {
    let mut scaled = log_entries.clone();
    let mut offset = 0.0;
    let row_pass = |m: &mut DMatrix<f64>| {
        let mut off = 0.0;
        for mut row in m.row_iter_mut() {
            let rmax = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            off += rmax;
            row.add_scalar_mut(-rmax);
        }
        off
    };
    offset += row_pass(&mut scaled);
    for mut col in scaled.column_iter_mut() {
        let cmax = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        offset += cmax;
        col.add_scalar_mut(-cmax);
    }
    offset += row_pass(&mut scaled);
    scaled.apply(|v| *v = v.exp());
    let d = signed_log_det(&scaled);
    SignedLogDet { log_abs: d.log_abs + offset, sign: d.sign }
}
