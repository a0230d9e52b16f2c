//! Dense complex matrix helpers shared by the integrator, the exponential
//! and the diagnostics.

use ndarray::{Array1, Array2, ArrayView2, Zip, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

/// Conjugate transpose.
pub fn dagger(a: &ArrayView2<C64>) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// Largest entry modulus.
pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    let mut m = 0.0_f64;
    Zip::from(a).and(b).for_each(|x, y| m = m.max((x - y).norm()));
    m
}

/// `max |A - A†|` entrywise.
pub fn hermiticity_residual(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

/// Induced 1-norm (maximum column sum).
pub fn one_norm(a: &ArrayView2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().iter().sum()
}

pub fn all_finite(a: &ArrayView2<C64>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
pub fn hermitian_eigenvalues(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Ok(Array1::zeros(0));
    }
    let h = (a.to_owned() + dagger(a)).mapv(|z| z * 0.5);
    let (w, _) = h.eigh(UPLO::Lower)?;
    Ok(w)
}

/// Hermitian eigendecomposition `A = V diag(w) V†` of the Hermitian part.
pub fn hermitian_eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, CMatrix)> {
    // eigh hands back conj(V) for row-major complex input; go column-major.
    let mut h = CMatrix::zeros((a.nrows(), a.ncols()).f());
    h.assign(&((a.to_owned() + dagger(a)).mapv(|z| z * 0.5)));
    Ok(h.eigh(UPLO::Lower)?)
}
