//! Random matrices and states for sweeps and property checks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::quantum::{validate_density, DensityOperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

/// Hermitian matrix `(G + G^H)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)].conj()))
}

/// Haar-ish unitary from Gram–Schmidt on the columns of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<Complex64> = (0..n).map(|i| g[(i, j)]).collect();
        for u in &cols {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Point on the probability simplex, uniform (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `G G^H / Tr` for Ginibre `G`: full rank with probability one.
pub fn random_density<R: Rng + ?Sized>(b: usize, rng: &mut R) -> Result<DensityOperator> {
    let g = ginibre(b, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    let m = ComplexMatrix::from_fn(b, b, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re / tr, 0.0)
        } else if i < j {
            m[(i, j)] / tr
        } else {
            m[(j, i)].conj() / tr
        }
    });
    validate_density(renormalize_trace(m))
}

/// `U diag(p) U^H`.
pub fn rotated_diagonal(u: &ComplexMatrix, p: &[f64]) -> Result<DensityOperator> {
    let m = u
        .matmul(&ComplexMatrix::from_real_diag(p))
        .matmul(&u.adjoint());
    let m = ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else if i < j {
            m[(i, j)]
        } else {
            m[(j, i)].conj()
        }
    });
    validate_density(renormalize_trace(m))
}

/// Random pair sharing an eigenbasis; `ρ` is full rank.
pub fn random_commuting_pair<R: Rng + ?Sized>(
    b: usize,
    rng: &mut R,
) -> Result<(DensityOperator, DensityOperator)> {
    let u = random_unitary(b, rng);
    let p = random_simplex(b, rng);
    let q = random_simplex(b, rng);
    Ok((rotated_diagonal(&u, &p)?, rotated_diagonal(&u, &q)?))
}

/// Divides the diagonal by the trace so that the trace is 1 to rounding.
fn renormalize_trace(mut m: ComplexMatrix) -> ComplexMatrix {
    let tr = m.trace().re;
    let n = m.rows();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] /= tr;
        }
    }
    m
}
