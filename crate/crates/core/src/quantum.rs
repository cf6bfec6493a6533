//! Density operators, finite distributions, and relative entropies (nats).

use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, Spectrum};

/// Absolute tolerance on the Hermitian, PSD and trace checks.
pub const DENSITY_TOL: f64 = 1e-10;

/// Weight of `σ` outside `supp(ρ)` above which `S(σ‖ρ) = +∞`.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// A validated quantum state: Hermitian, PSD, unit trace.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    spectrum: Spectrum,
}

impl DensityOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn from_diag(probs: &[f64]) -> Result<Self> {
        validate_density(ComplexMatrix::from_real_diag(probs))
    }

    /// `|ψ⟩⟨ψ|` after normalizing `ψ`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        validate_density(ComplexMatrix::outer(&v))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::from_diag(&vec![1.0 / dim as f64; dim])
    }

    /// True when every eigenvalue is above the spectrum's zero tolerance.
    pub fn is_full_rank(&self) -> bool {
        self.spectrum.rank() == self.dim()
    }

    /// `‖[self, other]‖_F`.
    pub fn commutator_norm(&self, other: &DensityOperator) -> f64 {
        let ab = self.matrix.matmul(&other.matrix);
        let ba = other.matrix.matmul(&self.matrix);
        ab.sub(&ba).frobenius_norm()
    }

    pub fn to_file(&self) -> DensityFile {
        DensityFile::from_matrix(&self.matrix)
    }
}

/// Rejects anything that is not a density operator. Never renormalizes.
pub fn validate_density(m: ComplexMatrix) -> Result<DensityOperator> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let deviation = m.hermitian_deviation();
    if deviation > DENSITY_TOL {
        return Err(Error::NonHermitian { deviation });
    }
    let trace_dev = (m.trace() - Complex64::new(1.0, 0.0)).norm();
    if trace_dev > DENSITY_TOL {
        return Err(Error::TraceNotOne {
            deviation: trace_dev,
        });
    }
    let spectrum = hermitian_eig(&m)?;
    let min_eigenvalue = *spectrum.eigenvalues.last().expect("non-empty");
    if min_eigenvalue < -DENSITY_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(DensityOperator {
        matrix: m,
        spectrum,
    })
}

/// `S(σ‖ρ) = Tr[σ(log σ − log ρ)]`, or `+∞` when `σ` leaks outside `supp(ρ)`.
pub fn quantum_relative_entropy(sigma: &DensityOperator, rho: &DensityOperator) -> Result<f64> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let ss = sigma.spectrum();
    let sigma_log_sigma: f64 = (0..ss.dim())
        .filter(|&k| !ss.is_zero(k))
        .map(|k| ss.eigenvalues[k] * ss.eigenvalues[k].ln())
        .sum();

    let rs = rho.spectrum();
    let mut leak = 0.0;
    let mut sigma_log_rho = 0.0;
    for k in 0..rs.dim() {
        let weight = expectation(sigma.matrix(), &rs.eigenvector(k));
        if rs.is_zero(k) {
            leak += weight;
        } else {
            sigma_log_rho += weight * rs.eigenvalues[k].ln();
        }
    }
    if leak > SUPPORT_LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(sigma_log_sigma - sigma_log_rho)
}

/// `⟨v|A|v⟩` (real part).
fn expectation(a: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, vi) in v.iter().enumerate() {
        let row: Complex64 = a.row(i).iter().zip(v).map(|(aij, vj)| aij * vj).sum();
        acc += vi.conj() * row;
    }
    acc.re
}

/// A finite distribution over labeled outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
    labels: Vec<String>,
}

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if probs.len() != labels.len() || probs.is_empty() {
            return Err(Error::LabelMismatch);
        }
        let distinct: HashSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::LabelMismatch);
        }
        let sum: f64 = probs.iter().sum();
        let min_entry = probs.iter().copied().fold(f64::INFINITY, f64::min);
        if (sum - 1.0).abs() > 1e-9 || min_entry < 0.0 || !sum.is_finite() {
            return Err(Error::NormalizationFailure { sum, min_entry });
        }
        Ok(Self { probs, labels })
    }

    /// Labels `"0"`, `"1"`, ….
    pub fn unlabeled(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(probs, labels)
    }

    pub fn uniform(d: usize) -> Self {
        Self::unlabeled(vec![1.0 / d as f64; d]).expect("uniform is normalized")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `D(Q‖P) = Σ q_i log(q_i/p_i)` with `0·log(0/p) = 0`.
pub fn classical_relative_entropy(q: &ProbabilityVector, p: &ProbabilityVector) -> Result<f64> {
    if q.labels != p.labels {
        return Err(Error::LabelMismatch);
    }
    Ok(kl_divergence(&q.probs, &p.probs))
}

/// Unlabeled `D(q‖p)`; `+∞` if some `q_i > 0` meets `p_i = 0`.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            acc += qi * (qi / pi).ln();
        }
    }
    acc
}

/// On-disk density operator: `{"dim": b, "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl DensityFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.rows(),
            entries: m.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim * self.dim,
                actual: self.entries.len(),
            });
        }
        ComplexMatrix::new(
            self.dim,
            self.dim,
            self.entries
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        validate_density(self.to_matrix()?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}
