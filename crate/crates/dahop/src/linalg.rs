//! Thin LAPACK bindings for the three dense kernels the crate needs:
//! symmetric/Hermitian eigendecomposition (divide and conquer) and real
//! SVD. Linked through the system OpenBLAS.
//!
//! Buffers handed to LAPACK are column-major; the wrappers do the one
//! O(n²) layout copy internally and return eigenvectors column-wise
//! (column `j` of the returned array is the eigenvector of eigenvalue `j`,
//! ascending).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

extern crate openblas_src;

extern "C" {
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn zheevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn dgesdd_(
        jobz: *const u8,
        m: *const i32,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        s: *mut f64,
        u: *mut f64,
        ldu: *const i32,
        vt: *mut f64,
        ldvt: *const i32,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        info: *mut i32,
    );
}

fn lapack_err(routine: &'static str, info: i32) -> Error {
    Error::InvalidParameter(format!("LAPACK {routine} failed with info = {info}"))
}

/// Full spectrum (ascending) of a real symmetric matrix; eigenvectors as
/// columns when requested. The strictly lower triangle is the one read.
pub fn eigh_real(a: &Array2<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<Array2<f64>>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh_real needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| Array2::zeros((0, 0)))));
    }
    // Column-major copy. Symmetric input, so the transpose is itself.
    let mut buf = vec![0.0f64; n * n];
    for j in 0..n {
        for i in 0..n {
            buf[i + j * n] = a[[i, j]];
        }
    }
    let jobz = if want_vectors { b"V" } else { b"N" };
    let ni = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let (mut wkopt, mut iwkopt) = (0.0f64, 0i32);
    let query = -1i32;
    unsafe {
        dsyevd_(
            jobz.as_ptr(),
            b"L".as_ptr(),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dsyevd (workspace query)", info));
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            jobz.as_ptr(),
            b"L".as_ptr(),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dsyevd", info));
    }
    let vectors = want_vectors.then(|| {
        Array2::from_shape_fn((n, n), |(i, j)| buf[i + j * n])
    });
    Ok((w, vectors))
}

/// Full spectrum (ascending) of a complex Hermitian matrix; eigenvectors
/// as columns when requested.
pub fn eigh_complex(
    a: &Array2<Complex64>,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Array2<Complex64>>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh_complex needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| Array2::zeros((0, 0)))));
    }
    let mut buf = vec![Complex64::default(); n * n];
    for j in 0..n {
        for i in 0..n {
            buf[i + j * n] = a[[i, j]];
        }
    }
    let jobz = if want_vectors { b"V" } else { b"N" };
    let ni = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let mut wkopt = Complex64::default();
    let (mut rwkopt, mut iwkopt) = (0.0f64, 0i32);
    let query = -1i32;
    unsafe {
        zheevd_(
            jobz.as_ptr(),
            b"L".as_ptr(),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut rwkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("zheevd (workspace query)", info));
    }
    let lwork = wkopt.re as i32;
    let lrwork = rwkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![Complex64::default(); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            jobz.as_ptr(),
            b"L".as_ptr(),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("zheevd", info));
    }
    let vectors = want_vectors.then(|| {
        Array2::from_shape_fn((n, n), |(i, j)| buf[i + j * n])
    });
    Ok((w, vectors))
}

/// Thin SVD `A = U diag(s) Vᵀ` of a real matrix: `U` is m×k, `Vᵀ` is k×n
/// with `k = min(m, n)`; singular values descending.
pub fn svd_real(a: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    let k = m.min(n);
    if k == 0 {
        return Ok((Array2::zeros((m, 0)), Vec::new(), Array2::zeros((0, n))));
    }
    let mut buf = vec![0.0f64; m * n];
    for j in 0..n {
        for i in 0..m {
            buf[i + j * m] = a[[i, j]];
        }
    }
    let (mi, ni, ki) = (m as i32, n as i32, k as i32);
    let mut s = vec![0.0f64; k];
    let mut u = vec![0.0f64; m * k];
    let mut vt = vec![0.0f64; k * n];
    let mut iwork = vec![0i32; 8 * k];
    let mut info = 0i32;
    let mut wkopt = 0.0f64;
    let query = -1i32;
    unsafe {
        dgesdd_(
            b"S".as_ptr(),
            &mi,
            &ni,
            buf.as_mut_ptr(),
            &mi,
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &mi,
            vt.as_mut_ptr(),
            &ki,
            &mut wkopt,
            &query,
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dgesdd (workspace query)", info));
    }
    let lwork = wkopt as i32;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        dgesdd_(
            b"S".as_ptr(),
            &mi,
            &ni,
            buf.as_mut_ptr(),
            &mi,
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &mi,
            vt.as_mut_ptr(),
            &ki,
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dgesdd", info));
    }
    let u_arr = Array2::from_shape_fn((m, k), |(i, j)| u[i + j * m]);
    let vt_arr = Array2::from_shape_fn((k, n), |(i, j)| vt[i + j * k]);
    Ok((u_arr, s, vt_arr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_by_two_symmetric() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let (w, v) = eigh_real(&a, true).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14);
        assert!((w[1] - 1.0).abs() < 1e-14);
        let v = v.unwrap();
        // Residual ‖Av − λv‖ per pair.
        for j in 0..2 {
            for i in 0..2 {
                let av: f64 = (0..2).map(|l| a[[i, l]] * v[[l, j]]).sum();
                assert!((av - w[j] * v[[i, j]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_with_imaginary_coupling() {
        let a = array![
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
            [Complex64::new(0.0, -1.0), Complex64::new(0.0, 0.0)]
        ];
        let (w, v) = eigh_complex(&a, true).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        let v = v.unwrap();
        for j in 0..2 {
            for i in 0..2 {
                let av: Complex64 = (0..2).map(|l| a[[i, l]] * v[[l, j]]).sum();
                assert!((av - w[j] * v[[i, j]]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn svd_reconstructs() {
        let a = array![[1.0, 2.0, 0.5], [0.0, -1.0, 3.0]];
        let (u, s, vt) = svd_real(&a).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s[0] >= s[1] && s[1] > 0.0);
        for i in 0..2 {
            for j in 0..3 {
                let rec: f64 = (0..2).map(|k| u[[i, k]] * s[k] * vt[[k, j]]).sum();
                assert!((rec - a[[i, j]]).abs() < 1e-12);
            }
        }
    }
}
