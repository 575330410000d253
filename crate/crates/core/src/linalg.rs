//! Dense Hermitian eigensolvers (LAPACK divide and conquer) and small matrix helpers.

use std::ffi::c_char;

use ndarray::{Array1, Array2, ShapeBuilder};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug)]
pub struct RealEigen {
    pub values: Array1<f64>,
    /// Eigenvectors as columns.
    pub vectors: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

fn lapack_dim(n: usize) -> Result<i32> {
    i32::try_from(n).map_err(|_| Error::invalid(format!("matrix dimension {n} too large")))
}

fn dsyevd(a: &Array2<f64>, vectors: bool) -> Result<(Array1<f64>, Vec<f64>)> {
    let n = square_dim(a.dim())?;
    let ni = lapack_dim(n)?;
    // Column-major copy; symmetric input makes the layout irrelevant but the
    // returned eigenvectors are column-major.
    let mut buf: Vec<f64> = a.t().iter().copied().collect();
    let mut w = vec![0.0; n];
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let mut info = 0;
    let mut lwork_q = 0.0;
    let mut liwork_q = 0;
    unsafe {
        lapack_sys::dsyevd_(
            &jobz, &uplo, &ni, buf.as_mut_ptr(), &ni.max(1), w.as_mut_ptr(),
            &mut lwork_q, &-1, &mut liwork_q, &-1, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    let lwork = lwork_q as i32;
    let liwork = liwork_q;
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz, &uplo, &ni, buf.as_mut_ptr(), &ni.max(1), w.as_mut_ptr(),
            work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    Ok((Array1::from(w), buf))
}

fn zheevd(a: &Array2<C64>, vectors: bool) -> Result<(Array1<f64>, Vec<C64>)> {
    let n = square_dim(a.dim())?;
    let ni = lapack_dim(n)?;
    let mut buf: Vec<C64> = a.t().iter().copied().collect();
    let mut w = vec![0.0; n];
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let mut info = 0;
    let mut lwork_q = C64::new(0.0, 0.0);
    let mut lrwork_q = 0.0;
    let mut liwork_q = 0;
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &uplo, &ni, buf.as_mut_ptr() as *mut _, &ni.max(1), w.as_mut_ptr(),
            &mut lwork_q as *mut C64 as *mut _, &-1, &mut lrwork_q, &-1, &mut liwork_q, &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let lwork = lwork_q.re as i32;
    let lrwork = lrwork_q as i32;
    let liwork = liwork_q;
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &uplo, &ni, buf.as_mut_ptr() as *mut _, &ni.max(1), w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _, &lwork, rwork.as_mut_ptr(), &lrwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    Ok((Array1::from(w), buf))
}

fn square_dim((r, c): (usize, usize)) -> Result<usize> {
    if r != c {
        return Err(Error::invalid(format!("matrix is {r}x{c}, expected square")));
    }
    if r == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    Ok(r)
}

/// Spot-checks `A v = λ v` on three columns; guards against broken LAPACK
/// builds, which return correct eigenvalues with corrupted vectors.
fn self_check<T>(a: &Array2<T>, values: &Array1<f64>, vectors: &Array2<T>, routine: &'static str) -> Result<()>
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + From<f64>,
    T: Into<C64>,
{
    let n = a.nrows();
    let scale = values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for k in [0, n / 2, n - 1] {
        let v = vectors.column(k);
        let lam = T::from(values[k]);
        for i in 0..n {
            let av = a.row(i).iter().zip(v.iter()).fold(T::from(0.0), |acc, (x, y)| acc + *x * *y);
            let r: C64 = (av - lam * v[i]).into();
            if r.norm() > 1e-8 * scale {
                return Err(Error::Lapack { routine, info: -1000 });
            }
        }
    }
    Ok(())
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
pub fn eigh_real(a: &Array2<f64>) -> Result<RealEigen> {
    let n = a.nrows();
    let (values, buf) = dsyevd(a, true)?;
    let vectors = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    self_check(a, &values, &vectors, "dsyevd")?;
    Ok(RealEigen { values, vectors })
}

pub fn eigvalsh_real(a: &Array2<f64>) -> Result<Array1<f64>> {
    Ok(dsyevd(a, false)?.0)
}

/// Eigen-decomposition of a Hermitian matrix; takes the real path when the
/// imaginary part vanishes identically.
pub fn eigh(a: &Array2<C64>) -> Result<HermitianEigen> {
    if let Some(re) = real_part_if_real(a) {
        let e = eigh_real(&re)?;
        return Ok(HermitianEigen { values: e.values, vectors: to_complex(&e.vectors) });
    }
    let n = a.nrows();
    let (values, buf) = zheevd(a, true)?;
    let vectors = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    self_check(a, &values, &vectors, "zheevd")?;
    Ok(HermitianEigen { values, vectors })
}

pub fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>> {
    if let Some(re) = real_part_if_real(a) {
        return eigvalsh_real(&re);
    }
    Ok(zheevd(a, false)?.0)
}

pub fn real_part_if_real(a: &Array2<C64>) -> Option<Array2<f64>> {
    if a.iter().all(|z| z.im == 0.0) {
        Some(a.mapv(|z| z.re))
    } else {
        None
    }
}

pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

pub fn frobenius_sq(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩.
pub fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// (A + A†)/2.
pub fn symmetrize(a: &mut Array2<C64>) {
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]].im = 0.0;
        for j in (i + 1)..n {
            let avg = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = avg;
            a[[j, i]] = avg.conj();
        }
    }
}

/// V f(Λ) V† for an eigen-decomposition and complex weights.
pub fn spectral_function(e: &HermitianEigen, weights: &Array1<C64>) -> Array2<C64> {
    let scaled = &e.vectors * &weights.view().insert_axis(ndarray::Axis(0));
    scaled.dot(&dagger(&e.vectors))
}

/// Real symmetric product A·B that skips zeros when A is sparse.
pub fn sparse_aware_dot(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let nnz = a.iter().filter(|x| **x != 0.0).count();
    if nnz * 16 > n * a.ncols() {
        return a.dot(b);
    }
    let mut out = Array2::<f64>::zeros((n, b.ncols()));
    for i in 0..n {
        let mut row = out.row_mut(i);
        for (j, &x) in a.row(i).iter().enumerate() {
            if x != 0.0 {
                row.scaled_add(x, &b.row(j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn real_eigen_reconstructs() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, -1.0, 1.0]];
        let e = eigh_real(&a).unwrap();
        let rec = e.vectors.dot(&Array2::from_diag(&e.values)).dot(&e.vectors.t());
        assert!(rec.iter().zip(a.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
        assert!(e.values.windows(2).into_iter().all(|w| w[0] <= w[1]));
    }

    #[test]
    fn complex_eigen_of_pauli_y() {
        let y = array![[C64::new(0.0, 0.0), -I], [I, C64::new(0.0, 0.0)]];
        let e = eigh(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let av = y.dot(&e.vectors.column(1));
        let diff: f64 = av.iter().zip(e.vectors.column(1).iter()).map(|(a, b)| (a - b).norm()).sum();
        assert!(diff < 1e-13);
        assert_eq!(eigvalsh(&y).unwrap().len(), 2);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let mut a = Array2::<f64>::zeros((40, 40));
        for i in 0..40 {
            a[[i, (7 * i + 3) % 40]] = 1.0 + i as f64;
        }
        let b = Array2::from_shape_fn((40, 5), |(i, j)| (i * 5 + j) as f64 * 0.1);
        let d = a.dot(&b);
        let s = sparse_aware_dot(&a, &b);
        assert!(d.iter().zip(s.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn rejects_non_square() {
        assert!(eigh_real(&Array2::zeros((2, 3))).is_err());
    }
}
