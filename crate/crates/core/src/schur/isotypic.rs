//! Isotypic projectors of `S_ℓ` acting on `(C^b)^{⊗ℓ}` by permuting factors.
//!
//! `Π_λ = (d_λ/ℓ!) Σ_π χ_λ(π) U_π`. Characters are class functions, so the
//! sum is taken one conjugacy class at a time: each class sum `Σ_{π∈c} U_π`
//! is accumulated as an integer matrix by applying the permutations to basis
//! indices directly.

use num_complex::Complex64;

use super::young::{
    cycle_type, enumerate_young_diagrams, factorial, hook_dimension, mn_character, YoungDiagram,
};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Largest block length for which `S_ℓ` is enumerated.
pub const MAX_BLOCK_LENGTH: usize = 8;

/// Largest `b^ℓ` for which projectors are built (covers `ℓ ≤ 8` at `b = 2`
/// and `ℓ ≤ 5` at `b = 3`).
pub const PVM_DIM_CAP: usize = 256;

/// Sums `Σ_{π∈c} U_π` for every cycle type `c` of `S_ℓ` on `(C^b)^{⊗ℓ}`.
pub struct ClassSums {
    pub ell: usize,
    pub base: usize,
    pub dim: usize,
    pub cycle_types: Vec<YoungDiagram>,
    /// Row-major `dim × dim` counts, one per cycle type.
    sums: Vec<Vec<u32>>,
}

impl ClassSums {
    pub fn new(ell: usize, base: usize) -> Result<Self> {
        check_caps(ell, base)?;
        let dim = base.pow(ell as u32);
        let cycle_types = enumerate_young_diagrams(ell, ell);
        let mut sums = vec![vec![0u32; dim * dim]; cycle_types.len()];

        // digits[x * ell + k] = k-th tensor factor of basis index x (most significant first)
        let mut digits = vec![0usize; dim * ell];
        for x in 0..dim {
            let mut rem = x;
            for k in (0..ell).rev() {
                digits[x * ell + k] = rem % base;
                rem /= base;
            }
        }
        let place: Vec<usize> = (0..ell).map(|k| base.pow((ell - 1 - k) as u32)).collect();

        for perm in Permutations::new(ell) {
            let class = cycle_types
                .iter()
                .position(|c| *c == cycle_type(&perm))
                .expect("every cycle type is enumerated");
            let sum = &mut sums[class];
            for x in 0..dim {
                let xd = &digits[x * ell..(x + 1) * ell];
                let y: usize = perm.iter().zip(&place).map(|(&src, &p)| xd[src] * p).sum();
                sum[y * dim + x] += 1;
            }
        }
        Ok(Self {
            ell,
            base,
            dim,
            cycle_types,
            sums,
        })
    }

    /// `Π_λ` for one diagram. Diagrams taller than `b` give the zero matrix.
    pub fn projector(&self, lambda: &YoungDiagram) -> Result<ComplexMatrix> {
        if lambda.boxes() != self.ell {
            return Err(Error::InvalidArgument(format!(
                "{lambda} is not a partition of {}",
                self.ell
            )));
        }
        let norm = hook_dimension(lambda) as f64 / factorial(self.ell) as f64;
        let coeffs: Vec<f64> = self
            .cycle_types
            .iter()
            .map(|c| mn_character(lambda, c).map(|chi| norm * chi as f64))
            .collect::<Result<_>>()?;
        let mut data = vec![0.0f64; self.dim * self.dim];
        for (sum, &coef) in self.sums.iter().zip(&coeffs) {
            if coef == 0.0 {
                continue;
            }
            for (d, &s) in data.iter_mut().zip(sum) {
                if s != 0 {
                    *d += coef * s as f64;
                }
            }
        }
        ComplexMatrix::new(
            self.dim,
            self.dim,
            data.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        )
    }
}

fn check_caps(ell: usize, base: usize) -> Result<()> {
    if ell == 0 || base == 0 {
        return Err(Error::InvalidArgument("ell and b must be positive".into()));
    }
    let dim = (base as u128).checked_pow(ell as u32).unwrap_or(u128::MAX);
    if ell > MAX_BLOCK_LENGTH || dim > PVM_DIM_CAP as u128 {
        return Err(Error::DimensionCapExceeded {
            dim,
            cap: PVM_DIM_CAP,
        });
    }
    Ok(())
}

/// `Π_λ` on `(C^b)^{⊗ℓ}`.
pub fn isotypic_projector(lambda: &YoungDiagram, ell: usize, b: usize) -> Result<ComplexMatrix> {
    ClassSums::new(ell, b)?.projector(lambda)
}

/// Every nonzero isotypic projector (diagrams with at most `b` rows).
pub fn isotypic_projectors(ell: usize, b: usize) -> Result<Vec<(YoungDiagram, ComplexMatrix)>> {
    let sums = ClassSums::new(ell, b)?;
    enumerate_young_diagrams(ell, b)
        .into_iter()
        .map(|l| {
            let p = sums.projector(&l)?;
            Ok((l, p))
        })
        .collect()
}

/// Lexicographic enumeration of `S_n` in one-line notation.
pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Permutations {
    pub fn new(n: usize) -> Self {
        Self {
            next: Some((0..n).collect()),
        }
    }
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut p = current.clone();
        let n = p.len();
        if n >= 2 {
            if let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) {
                let j = (i + 1..n)
                    .rev()
                    .find(|&j| p[j] > p[i])
                    .expect("pivot exists");
                p.swap(i, j);
                p[i + 1..].reverse();
                self.next = Some(p);
            }
        }
        Some(current)
    }
}
