//! Thin dense linear-algebra layer: Hermitian eigensolver (LAPACK `zheevd`)
//! and small matrix helpers shared by the physics modules.

use std::sync::Once;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ShapeBuilder, Zip};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

// Links the system OpenBLAS, which provides both BLAS (for ndarray) and LAPACK.
extern crate openblas_src;

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

static SINGLE_THREAD: Once = Once::new();

/// Restricts OpenBLAS to the calling thread; parallelism lives in the
/// ensemble layer only. Idempotent.
pub fn pin_blas_single_thread() {
    // SAFETY: plain setter exported by the linked OpenBLAS.
    SINGLE_THREAD.call_once(|| unsafe { openblas_set_num_threads(1) });
}

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues (ascending) and optionally the unitary matrix whose columns are
/// the matching orthonormal eigenvectors, for a Hermitian matrix. Only the
/// lower triangle of `a` is read.
pub fn eigh(a: ArrayView2<'_, C64>, want_vectors: bool) -> Result<(Array1<f64>, Option<Array2<C64>>)> {
    pin_blas_single_thread();
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension { expected: n, found: a.ncols() });
    }
    if n == 0 {
        return Ok((Array1::zeros(0), want_vectors.then(|| Array2::zeros((0, 0)))));
    }
    let mut m = Array2::<C64>::zeros((n, n).f());
    m.assign(&a);
    let mut w = vec![0.0f64; n];
    let jobz: u8 = if want_vectors { b'V' } else { b'N' };
    let uplo: u8 = b'L';
    let nn = i32::try_from(n).map_err(|_| Error::invalid("matrix too large for LAPACK"))?;
    let mut info = 0i32;

    let mut work = vec![ZERO; 1];
    let mut rwork = vec![0.0f64; 1];
    let mut iwork = vec![0i32; 1];
    let query = -1i32;
    // SAFETY: all buffers are valid for the sizes LAPACK is told about; the
    // first call is a workspace query that only writes the first element of each
    // work array.
    unsafe {
        lapack_sys::zheevd_(
            &jobz as *const u8 as *const _,
            &uplo as *const u8 as *const _,
            &nn,
            m.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &query,
            rwork.as_mut_ptr(),
            &query,
            iwork.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let lwork = (work[0].re as i32).max(1);
    let lrwork = (rwork[0] as i32).max(1);
    let liwork = iwork[0].max(1);
    work = vec![ZERO; lwork as usize];
    rwork = vec![0.0; lrwork as usize];
    iwork = vec![0; liwork as usize];
    // SAFETY: work arrays now have the lengths reported by the query; `m` is a
    // column-major n x n buffer with leading dimension n.
    unsafe {
        lapack_sys::zheevd_(
            &jobz as *const u8 as *const _,
            &uplo as *const u8 as *const _,
            &nn,
            m.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let vectors = want_vectors.then(|| m.as_standard_layout().into_owned());
    Ok((Array1::from(w), vectors))
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn adjoint(a: ArrayView2<'_, C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}

pub fn commutator(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> Array2<C64> {
    a.dot(&b) - b.dot(&a)
}

pub fn frobenius_norm(a: ArrayView2<'_, C64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: ArrayView2<'_, C64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    Zip::from(a).and(b).for_each(|x, y| m = m.max((x - y).norm()));
    m
}

/// max |A - A^dagger| entrywise.
pub fn hermiticity_error(a: ArrayView2<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

/// max |U^dagger U - I| entrywise.
pub fn unitarity_error(u: ArrayView2<'_, C64>) -> f64 {
    let p = adjoint(u).dot(&u);
    max_abs_diff(p.view(), identity(u.nrows()).view())
}

/// V diag(f(lambda)) V^dagger.
pub fn spectral_function(
    values: ArrayView1<'_, f64>,
    vectors: ArrayView2<'_, C64>,
    f: impl Fn(f64) -> C64,
) -> Array2<C64> {
    let mut scaled = vectors.to_owned();
    for (mut col, &lam) in scaled.columns_mut().into_iter().zip(values.iter()) {
        let c = f(lam);
        col.mapv_inplace(|x| x * c);
    }
    scaled.dot(&adjoint(vectors))
}

/// Unitary exponential exp(A) of an anti-Hermitian matrix A, via the
/// Hermitian matrix iA.
pub fn expm_antihermitian(a: ArrayView2<'_, C64>) -> Result<Array2<C64>> {
    let h = a.mapv(|x| C64::new(0.0, 1.0) * x);
    let (w, v) = eigh(h.view(), true)?;
    let v = v.expect("vectors requested");
    // exp(A) = exp(-i (iA)).
    Ok(spectral_function(w.view(), v.view(), |lam| C64::from_polar(1.0, -lam)))
}
