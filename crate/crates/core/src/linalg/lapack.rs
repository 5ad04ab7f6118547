//! Thin wrappers over the LAPACK and BLAS routines that ndarray-linalg does
//! not expose: the generalized eigenvalue solver, the complex Schur
//! factorization and complex matrix multiplication.

use lapack_sys::__BindgenComplex;
use num_complex::Complex64;
use std::os::raw::{c_char, c_int};

use crate::error::{Error, Result};

extern "C" {
    // Level-3 BLAS complex matrix multiply; provided by the linked OpenBLAS.
    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const c_int,
        n: *const c_int,
        k: *const c_int,
        alpha: *const __BindgenComplex<f64>,
        a: *const __BindgenComplex<f64>,
        lda: *const c_int,
        b: *const __BindgenComplex<f64>,
        ldb: *const c_int,
        beta: *const __BindgenComplex<f64>,
        c: *mut __BindgenComplex<f64>,
        ldc: *const c_int,
    );
}

fn cptr(p: *const Complex64) -> *const __BindgenComplex<f64> {
    p.cast()
}

fn mptr(p: *mut Complex64) -> *mut __BindgenComplex<f64> {
    p.cast()
}

/// Generalized eigenvalues of the pencil `A - lambda B` as `(alpha, beta)`
/// pairs with `lambda = alpha / beta`. Buffers are destroyed. The pencil
/// spectrum is transpose-invariant, so callers may pass row-major data.
pub fn zggev_pairs(
    a: &mut [Complex64],
    b: &mut [Complex64],
    n: usize,
) -> Result<Vec<(Complex64, Complex64)>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n * n);
    let n_i = n as c_int;
    let jobv = b'N' as c_char;
    let mut alpha = vec![Complex64::new(0.0, 0.0); n];
    let mut beta = vec![Complex64::new(0.0, 0.0); n];
    let mut rwork = vec![0.0f64; (8 * n).max(1)];
    let mut info: c_int = 0;

    // Workspace query, then the real call.
    let mut query = [Complex64::new(0.0, 0.0)];
    let neg1: c_int = -1;
    unsafe {
        lapack_sys::zggev_(
            &jobv,
            &jobv,
            &n_i,
            mptr(a.as_mut_ptr()),
            &n_i,
            mptr(b.as_mut_ptr()),
            &n_i,
            mptr(alpha.as_mut_ptr()),
            mptr(beta.as_mut_ptr()),
            std::ptr::null_mut(),
            &1,
            std::ptr::null_mut(),
            &1,
            mptr(query.as_mut_ptr()),
            &neg1,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Solver {
            routine: "zggev (workspace query)",
            info,
        });
    }
    let lwork = (query[0].re as usize).max(2 * n).max(1);
    let lwork_i = lwork as c_int;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork];
    unsafe {
        lapack_sys::zggev_(
            &jobv,
            &jobv,
            &n_i,
            mptr(a.as_mut_ptr()),
            &n_i,
            mptr(b.as_mut_ptr()),
            &n_i,
            mptr(alpha.as_mut_ptr()),
            mptr(beta.as_mut_ptr()),
            std::ptr::null_mut(),
            &1,
            std::ptr::null_mut(),
            &1,
            mptr(work.as_mut_ptr()),
            &lwork_i,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Solver {
            routine: "zggev",
            info,
        });
    }
    Ok(alpha.into_iter().zip(beta).collect())
}

/// Complex Schur factorization `A = U T U*` of a column-major buffer.
/// On return `a` holds `T` and the returned vector holds `U`, both
/// column-major.
pub fn zgees_schur(a: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    assert_eq!(a.len(), n * n);
    let n_i = n as c_int;
    let jobvs = b'V' as c_char;
    let sort = b'N' as c_char;
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut vs = vec![Complex64::new(0.0, 0.0); n * n];
    let mut sdim: c_int = 0;
    let mut rwork = vec![0.0f64; n.max(1)];
    let mut info: c_int = 0;

    let mut query = [Complex64::new(0.0, 0.0)];
    let neg1: c_int = -1;
    unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &n_i,
            mptr(a.as_mut_ptr()),
            &n_i,
            &mut sdim,
            mptr(w.as_mut_ptr()),
            mptr(vs.as_mut_ptr()),
            &n_i,
            mptr(query.as_mut_ptr()),
            &neg1,
            rwork.as_mut_ptr(),
            std::ptr::null_mut(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Solver {
            routine: "zgees (workspace query)",
            info,
        });
    }
    let lwork = (query[0].re as usize).max(2 * n).max(1);
    let lwork_i = lwork as c_int;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork];
    unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &n_i,
            mptr(a.as_mut_ptr()),
            &n_i,
            &mut sdim,
            mptr(w.as_mut_ptr()),
            mptr(vs.as_mut_ptr()),
            &n_i,
            mptr(work.as_mut_ptr()),
            &lwork_i,
            rwork.as_mut_ptr(),
            std::ptr::null_mut(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Solver {
            routine: "zgees",
            info,
        });
    }
    Ok(vs)
}

/// `C = A B` for row-major buffers, via the column-major identity
/// `C^T = B^T A^T`.
pub fn zgemm_row_major(
    a: &[Complex64],
    b: &[Complex64],
    m: usize,
    k: usize,
    n: usize,
) -> Vec<Complex64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut c = vec![Complex64::new(0.0, 0.0); m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let trans = b'N' as c_char;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (mi, ni, ki) = (n as c_int, m as c_int, k as c_int);
    let (lda, ldb, ldc) = (n as c_int, k as c_int, n as c_int);
    unsafe {
        zgemm_(
            &trans,
            &trans,
            &mi,
            &ni,
            &ki,
            cptr(&one),
            cptr(b.as_ptr()),
            &lda,
            cptr(a.as_ptr()),
            &ldb,
            cptr(&zero),
            mptr(c.as_mut_ptr()),
            &ldc,
        );
    }
    c
}
