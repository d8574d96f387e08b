//! Dense complex matrix helpers shared by the rest of the crate.
//!
//! LAPACK-backed factorizations come from `ndarray-linalg`; everything here is
//! thin glue plus a scaling-and-squaring matrix exponential.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, EigValsh, Inverse, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
            .zip_mut_with(b, |o, &y| *o = x * y);
    }
    out
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Tr[A† B]`.
pub fn hs_inner(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hermitian_part(a: &Array2<C64>) -> Array2<C64> {
    (a + &dagger(a)) * c(0.5, 0.0)
}

pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    max_abs(&(a - &dagger(a)))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_1(a: &Array2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &Array2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let (_, s, _) = a
        .svd(false, false)
        .map_err(|e| Error::Numeric(format!("SVD failed: {e}")))?;
    Ok(s.iter().cloned().fold(0.0, f64::max))
}

/// Column-major copy. The Hermitian eigensolver conjugates its eigenvectors
/// when handed a row-major matrix.
fn fortran(a: &Array2<C64>) -> Array2<C64> {
    let mut f = Array2::zeros(a.dim().f());
    f.assign(a);
    f
}

/// Eigenvalues (ascending) of a Hermitian matrix; only the lower triangle is read.
pub fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>> {
    fortran(a)
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::Numeric(format!("Hermitian eigensolver failed: {e}")))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors as columns.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    fortran(a)
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Numeric(format!("Hermitian eigensolver failed: {e}")))
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
pub fn eig(a: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    a.eig()
        .map_err(|e| Error::Numeric(format!("eigensolver did not converge: {e}")))
}

pub fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    a.inv()
        .map_err(|e| Error::Numeric(format!("matrix inversion failed: {e}")))
}

/// Singular values (descending) and right singular vectors as the rows of `Vᴴ`.
pub fn svd_right(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (_, s, vt) = a
        .svd(false, true)
        .map_err(|e| Error::Numeric(format!("SVD failed: {e}")))?;
    Ok((s, vt.expect("requested Vt")))
}

/// `ψ†ψ` as a real number.
pub fn norm_sqr(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨u|v⟩`.
pub fn inner(u: &Array1<C64>, v: &Array1<C64>) -> C64 {
    u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `H^{-1/2}` for a Hermitian positive-definite matrix.
pub fn inv_sqrt_hermitian(a: &Array2<C64>) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(a)?;
    if let Some(v) = vals.iter().find(|&&v| v <= 0.0) {
        return Err(Error::Numeric(format!(
            "matrix is not positive definite (eigenvalue {v:e})"
        )));
    }
    let scaled = &vecs * &vals.mapv(|v| c(v.powf(-0.5), 0.0));
    Ok(scaled.dot(&dagger(&vecs)))
}

/// `exp(-i H t)` for Hermitian `H`, through its eigen-decomposition.
pub fn unitary_propagator(h: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(h)?;
    let phases = vals.mapv(|e| (-I * e * t).exp());
    Ok((&vecs * &phases).dot(&dagger(&vecs)))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The matrix is scaled so its 1-norm is at most ½, the series is summed
/// until the next term drops below `tol` relative to the partial sum, and the
/// result is squared back.
pub fn expm(a: &Array2<C64>, tol: f64) -> Result<Array2<C64>> {
    let n = a.nrows();
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::Numeric("expm of a non-finite matrix".into()));
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a * c(0.5f64.powi(squarings as i32), 0.0);
    let mut result = eye(n);
    let mut term = eye(n);
    for k in 1..=60 {
        term = term.dot(&scaled) * c(1.0 / k as f64, 0.0);
        result += &term;
        if norm_1(&term) <= tol * norm_1(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

/// Condition number `σ_max / σ_min` in the spectral norm.
pub fn condition_number(a: ArrayView2<C64>) -> Result<f64> {
    let (_, s, _) = a
        .to_owned()
        .svd(false, false)
        .map_err(|e| Error::Numeric(format!("SVD failed: {e}")))?;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}
