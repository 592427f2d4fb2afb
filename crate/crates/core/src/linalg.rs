//! Thin helpers over faer for dense complex matrices.

use crate::error::{Error, Result};
use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use num_complex::Complex64 as C64;

pub type CMat = Mat<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn zeros(r: usize, cl: usize) -> CMat {
    Mat::zeros(r, cl)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn norm_max(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// Inverse through partial-pivot LU; fails when the result is not finite.
pub fn inverse(m: &CMat) -> Option<CMat> {
    let inv = match m.nrows() {
        1 => CMat::from_fn(1, 1, |_, _| ONE / m[(0, 0)]),
        2 => {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let scale = norm_max(m);
            if det.norm() <= f64::EPSILON * scale * scale {
                return None;
            }
            CMat::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => m[(1, 1)] / det,
                (1, 1) => m[(0, 0)] / det,
                _ => -m[(i, j)] / det,
            })
        }
        _ => m.partial_piv_lu().inverse(),
    };
    for j in 0..inv.ncols() {
        for i in 0..inv.nrows() {
            if !inv[(i, j)].re.is_finite() || !inv[(i, j)].im.is_finite() {
                return None;
            }
        }
    }
    Some(inv)
}

pub fn solve(m: &CMat, rhs: &CMat) -> CMat {
    m.partial_piv_lu().solve(rhs)
}

pub fn matvec(m: &CMat, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

/// Transposed product mᵀ v (no conjugation).
pub fn matvec_t(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)] * v[i]).sum())
        .collect()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &CMat) -> f64 {
    match m.singular_values() {
        Ok(s) if !s.is_empty() => {
            let hi = s.iter().cloned().fold(0.0f64, f64::max);
            let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        _ => f64::INFINITY,
    }
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
pub fn eigen(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let e = m.eigen().map_err(|_| Error::EigenFailure)?;
    let n = m.nrows();
    let values: Vec<C64> = (0..n).map(|i| e.S()[i]).collect();
    let vectors = e.U().to_owned();
    Ok((values, vectors))
}

/// Singular values of a complex matrix in descending order.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    let mut s = m.singular_values().map_err(|_| Error::EigenFailure)?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors (columns).
pub fn hermitian_eigen(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let e = m.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenFailure)?;
    let n = m.nrows();
    let values = (0..n).map(|i| e.S()[i].re).collect();
    Ok((values, e.U().to_owned()))
}

/// Real symmetric eigenproblem: ascending eigenvalues and eigenvectors.
pub fn symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenFailure)?;
    let n = m.nrows();
    let values = (0..n).map(|i| e.S()[i]).collect();
    Ok((values, e.U().to_owned()))
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: C64,
    comp: C64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl KahanSum {
    pub fn add(&mut self, x: C64) {
        neumaier(&mut self.sum.re, &mut self.comp.re, x.re);
        neumaier(&mut self.sum.im, &mut self.comp.im, x.im);
    }

    pub fn value(&self) -> C64 {
        self.sum + self.comp
    }
}
