//! Small dense linear-algebra helpers shared by the engines.

use ndarray::{Array1, Array2, ArrayView2, Zip};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
            .assign(&b.mapv(|y| x * y));
    }
    out
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_real(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn commutator(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Frobenius norm of `a - a^dagger`.
pub fn hermiticity_defect(a: &ArrayView2<C64>) -> f64 {
    let mut acc = 0.0;
    for ((i, j), &x) in a.indexed_iter() {
        if j > i {
            acc += 2.0 * (x - a[[j, i]].conj()).norm_sqr();
        } else if i == j {
            acc += x.im * x.im;
        }
    }
    acc.sqrt()
}

pub fn hermitize(a: &mut Array2<C64>) {
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]].im = 0.0;
        for j in i + 1..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]].conj());
            a[[i, j]] = m;
            a[[j, i]] = m.conj();
        }
    }
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// Hermitian eigendecomposition, ascending eigenvalues.
///
/// Matrices with vanishing imaginary part go through the real symmetric
/// solver, which is several times faster.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    if a.iter().all(|z| z.im == 0.0) {
        let re = a.mapv(|z| z.re);
        let (w, v) = re.eigh(UPLO::Lower)?;
        return Ok((w, v.mapv(|x| C64::new(x, 0.0))));
    }
    // Row-major complex input comes back with the eigenvectors of the
    // conjugate matrix, so hand LAPACK a column-major copy.
    Ok(column_major(a).eigh(UPLO::Lower)?)
}

fn column_major(a: &ArrayView2<C64>) -> Array2<C64> {
    use ndarray::ShapeBuilder;
    let mut f = Array2::zeros(a.dim().f());
    f.assign(a);
    f
}

pub fn eigvalsh(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    use ndarray_linalg::EigValsh;
    if a.iter().all(|z| z.im == 0.0) {
        return Ok(a.mapv(|z| z.re).eigvalsh(UPLO::Lower)?);
    }
    Ok(column_major(a).eigvalsh(UPLO::Lower)?)
}

/// `V diag(w) V^dagger` for real weights.
pub fn reassemble(v: &ArrayView2<C64>, w: &[f64]) -> Array2<C64> {
    let mut scaled = v.to_owned();
    for (mut col, &wk) in scaled.columns_mut().into_iter().zip(w) {
        col.mapv_inplace(|z| z * wk);
    }
    scaled.dot(&dagger(v))
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    let mut m = 0.0f64;
    Zip::from(a).and(b).for_each(|x, y| m = m.max((x - y).norm()));
    m
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} must be finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn kron_of_paulis() {
        let x = array![[ZERO, ONE], [ONE, ZERO]];
        let z = array![[ONE, ZERO], [ZERO, -ONE]];
        let xz = kron(&x.view(), &z.view());
        assert_eq!(xz[[0, 2]], ONE);
        assert_eq!(xz[[1, 3]], -ONE);
        assert_eq!(xz[[0, 0]], ZERO);
    }

    #[test]
    fn eigh_real_and_complex_paths_agree() {
        let y = array![[ZERO, -I], [I, ZERO]];
        let (w, _) = eigh(&y.view()).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        let z = array![[ONE, ZERO], [ZERO, -ONE]];
        let (w, v) = eigh(&z.view()).unwrap();
        let back = reassemble(&v.view(), w.as_slice().unwrap());
        assert!(max_abs_diff(&back.view(), &z.view()) < 1e-14);
    }

    #[test]
    fn hermitize_fixes_defect() {
        let mut a = array![[ONE, C64::new(1.0, 1.0)], [C64::new(0.0, 0.0), C64::new(2.0, 0.3)]];
        assert!(hermiticity_defect(&a.view()) > 0.1);
        hermitize(&mut a);
        assert!(hermiticity_defect(&a.view()) < 1e-15);
    }
}

#[cfg(test)]
mod eigh_check {
    use super::*;
    use ndarray::array;

    #[test]
    fn complex_eigenvectors_satisfy_equation() {
        let a = array![[ONE, C64::new(0.3, 0.7)], [C64::new(0.3, -0.7), C64::new(-0.5, 0.0)]];
        let (w, v) = eigh(&a.view()).unwrap();
        let av = a.dot(&v);
        for k in 0..2 {
            for i in 0..2 {
                assert!((av[[i, k]] - v[[i, k]] * w[k]).norm() < 1e-12);
            }
        }
    }
}
