//! Small complex linear-algebra kernel shared by every module.
//!
//! Matrices are dynamically sized `DMatrix<Complex64>`; problem dimensions
//! are a handful of antennas, so clarity wins over blocking.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, WsrmError};

pub type CMat = DMatrix<Complex64>;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(A + A^H) / 2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest entrywise magnitude of `A - A^H`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `Re tr(A B)`; for Hermitian arguments this is the real inner product
/// `<A, B>` used by the covariance solver.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
///
/// Fails when the Cholesky factorization breaks down or a pivot is
/// negligible relative to the largest diagonal entry.
pub fn ln_det_hpd(a: &CMat) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let h = hermitize(a);
    let scale = (0..n).map(|i| h[(i, i)].re.abs()).fold(0.0, f64::max);
    let chol =
        Cholesky::new(h).ok_or_else(|| WsrmError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..n {
        let pivot = l[(i, i)].re;
        if pivot.is_nan() || pivot * pivot <= 1e-14 * scale {
            return Err(WsrmError::NotPositiveDefinite(format!("pivot {pivot:e}")));
        }
        acc += pivot.ln();
    }
    Ok(2.0 * acc)
}

pub fn log2_det_hpd(a: &CMat) -> Result<f64> {
    Ok(ln_det_hpd(a)? / LN_2)
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_hpd(a: &CMat, b: &CMat) -> Result<CMat> {
    let chol = Cholesky::new(hermitize(a))
        .ok_or_else(|| WsrmError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    Ok(chol.solve(b))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`; each column is phase-normalized so
    /// that its first non-negligible entry is real and positive.
    pub vectors: CMat,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Columns for the `count` smallest eigenvalues.
    pub fn smallest(&self, count: usize) -> CMat {
        self.vectors.columns(0, count).into_owned()
    }

    /// Columns for the `count` largest eigenvalues, largest first.
    pub fn largest(&self, count: usize) -> (Vec<f64>, CMat) {
        let n = self.dim();
        let mut cols = zeros(n, count);
        let mut vals = Vec::with_capacity(count);
        for j in 0..count {
            let src = n - 1 - j;
            vals.push(self.values[src]);
            cols.set_column(j, &self.vectors.column(src));
        }
        (vals, cols)
    }

    /// `Q diag(values) Q^H` with caller-supplied eigenvalues.
    pub fn rebuild(&self, values: &[f64]) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        hermitize(&(scaled * self.vectors.adjoint()))
    }
}

fn phase_normalize(v: &mut nalgebra::DVector<Complex64>) {
    let norm_inf = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if norm_inf == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-10 * norm_inf).copied() {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

fn lex_cmp(a: &nalgebra::DVector<Complex64>, b: &nalgebra::DVector<Complex64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Hermitian eigendecomposition with a deterministic ordering: eigenvalues
/// ascending, near-ties resolved by lexicographic order of the
/// phase-normalized eigenvectors.
pub fn eigh(a: &CMat) -> Eigh {
    let n = a.nrows();
    let eig = SymmetricEigen::new(hermitize(a));
    let mut pairs: Vec<(f64, nalgebra::DVector<Complex64>)> = (0..n)
        .map(|i| {
            let mut v = eig.eigenvectors.column(i).into_owned();
            phase_normalize(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1e-300);
    let tie = 1e-12 * scale;
    // Insertion sort: the comparator is tolerance-based, so keep it simple
    // and deterministic for the tiny sizes used here.
    for i in 1..pairs.len() {
        let mut j = i;
        while j > 0 {
            let (a_val, b_val) = (pairs[j - 1].0, pairs[j].0);
            let swap = if (a_val - b_val).abs() <= tie {
                lex_cmp(&pairs[j - 1].1, &pairs[j].1) == Ordering::Greater
            } else {
                a_val > b_val
            };
            if !swap {
                break;
            }
            pairs.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut vectors = zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (j, (val, vec)) in pairs.into_iter().enumerate() {
        values.push(val);
        vectors.set_column(j, &vec);
    }
    Eigh { values, vectors }
}
