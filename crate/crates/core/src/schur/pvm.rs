//! Block measurements built from the pre-change state alone.
//!
//! Outcomes are pairs `(i, λ)`: `E_i` projects onto one eigenvalue class of
//! `ρ^{⊗ℓ}` and `Π_λ` onto one isotypic component of `S_ℓ`. `E_i` is diagonal
//! in the product eigenbasis of `ρ` with entries constant on permutation
//! orbits, so it commutes with `Π_λ` and `E_i Π_λ` is again a projector.
//! `Π_λ` also commutes with `V^{⊗ℓ}`, so it has the same matrix in the
//! computational basis and in the eigenbasis.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::isotypic::{ClassSums, MAX_BLOCK_LENGTH, PVM_DIM_CAP};
use super::young::{enumerate_young_diagrams, factorial, YoungDiagram};
use crate::error::{Error, Result};
use crate::linalg::{kron_all, tensor_dim, tensor_power_with_cap, ComplexMatrix, Spectrum};
use crate::quantum::{kl_divergence, quantum_relative_entropy, DensityOperator, ProbabilityVector};

const RHO_MERGE_RTOL: f64 = 1e-10;
const CLASS_MERGE_RTOL: f64 = 1e-9;

/// A distinct eigenvalue of `ρ^{⊗ℓ}` with the types that produce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueClass {
    pub value: f64,
    /// Occupation counts of `ρ`-eigenvalue indices; each sums to `ℓ`.
    pub member_types: Vec<Vec<usize>>,
    pub degeneracy: usize,
}

/// Groups the products `γ_{i_1}⋯γ_{i_ℓ}` into distinct values, largest first.
pub fn eigenvalue_classes(spec: &Spectrum, ell: usize) -> Result<Vec<EigenvalueClass>> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be positive".into()));
    }
    if let Some(k) = (0..spec.dim()).find(|&k| spec.is_zero(k)) {
        return Err(Error::RankDeficient {
            min_eigenvalue: spec.eigenvalues[k],
        });
    }
    let gammas = merged_eigenvalues(&spec.eigenvalues);

    let mut typed: Vec<(f64, Vec<usize>)> = compositions(ell, gammas.len())
        .into_iter()
        .map(|t| {
            let v = t
                .iter()
                .zip(&gammas)
                .map(|(&n, g)| g.powi(n as i32))
                .product();
            (v, t)
        })
        .collect();
    typed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| b.1.cmp(&a.1)));

    let mut classes: Vec<EigenvalueClass> = Vec::new();
    for (value, t) in typed {
        let deg = multinomial(ell, &t);
        match classes.last_mut() {
            Some(c) if c.value - value <= CLASS_MERGE_RTOL * c.value => {
                c.member_types.push(t);
                c.degeneracy += deg;
            }
            _ => classes.push(EigenvalueClass {
                value,
                member_types: vec![t],
                degeneracy: deg,
            }),
        }
    }
    Ok(classes)
}

/// Eigenvalues (descending) with near-equal runs replaced by their mean.
fn merged_eigenvalues(eigs: &[f64]) -> Vec<f64> {
    let mut out = eigs.to_vec();
    let mut start = 0;
    while start < out.len() {
        let mut end = start + 1;
        while end < out.len() && out[start] - out[end] <= RHO_MERGE_RTOL * out[start] {
            end += 1;
        }
        let mean = out[start..end].iter().sum::<f64>() / (end - start) as f64;
        out[start..end].iter_mut().for_each(|g| *g = mean);
        start = end;
    }
    out
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multinomial(n: usize, t: &[usize]) -> usize {
    let denom: u128 = t.iter().map(|&k| factorial(k)).product();
    (factorial(n) / denom) as usize
}

/// Identity of one PVM outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeLabel {
    pub class: usize,
    /// `None` for the type-only measurement.
    pub diagram: Option<YoungDiagram>,
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.diagram {
            Some(d) => write!(f, "class#{}:λ={}", self.class, d),
            None => write!(f, "class#{}", self.class),
        }
    }
}

/// Projection-valued measure on `(C^b)^{⊗ℓ}`.
#[derive(Debug, Clone)]
pub struct Pvm {
    pub ell: usize,
    pub base_dim: usize,
    pub dim: usize,
    pub projectors: Vec<ComplexMatrix>,
    pub labels: Vec<OutcomeLabel>,
    pub ranks: Vec<usize>,
    /// Eigenvalue of `ρ^{⊗ℓ}` on each outcome's range.
    pub class_values: Vec<f64>,
    pub classes: Vec<EigenvalueClass>,
    pub completeness_residual: f64,
}

/// Algebraic residuals of a PVM (all Frobenius norms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PvmResiduals {
    pub idempotence: f64,
    pub orthogonality: f64,
    pub completeness: f64,
}

impl Pvm {
    pub fn outcome_count(&self) -> usize {
        self.projectors.len()
    }

    /// `(ℓ+1)^b`.
    pub fn count_bound(&self) -> u128 {
        (self.ell as u128 + 1).pow(self.base_dim as u32)
    }

    pub fn label_strings(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.to_string()).collect()
    }

    /// Max over outcomes of `‖M_k² − M_k‖`, over pairs of `‖M_j M_k‖`, and `‖Σ M_k − I‖`.
    pub fn residuals(&self) -> PvmResiduals {
        let idempotence = self
            .projectors
            .par_iter()
            .map(|m| m.matmul(m).sub(m).frobenius_norm())
            .reduce(|| 0.0, f64::max);
        let k = self.projectors.len();
        let pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|j| (j + 1..k).map(move |l| (j, l)))
            .collect();
        let orthogonality = pairs
            .par_iter()
            .map(|&(j, l)| {
                self.projectors[j]
                    .matmul(&self.projectors[l])
                    .frobenius_norm()
            })
            .reduce(|| 0.0, f64::max);
        PvmResiduals {
            idempotence,
            orthogonality,
            completeness: completeness_residual(&self.projectors, self.dim),
        }
    }

    /// `Tr[M_k ξ]` for every outcome, clamped and renormalized.
    pub fn outcome_distribution(&self, xi: &ComplexMatrix) -> Result<Vec<f64>> {
        if xi.rows() != self.dim || xi.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: xi.rows(),
            });
        }
        let raw: Vec<f64> = self
            .projectors
            .iter()
            .map(|m| m.trace_product(xi).re)
            .collect();
        clamp_normalize(raw)
    }
}

fn completeness_residual(projectors: &[ComplexMatrix], dim: usize) -> f64 {
    let mut total = ComplexMatrix::zeros(dim, dim);
    for m in projectors {
        total.add_assign(m);
    }
    total.sub(&ComplexMatrix::identity(dim)).frobenius_norm()
}

/// Clamps round-off negatives (≥ −1e-12) to zero, then renormalizes if the
/// sum is within 1e-9 of one.
fn clamp_normalize(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    let min_entry = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = probs.iter().sum();
    if min_entry < -1e-12 || (sum - 1.0).abs() > 1e-9 || !sum.is_finite() {
        return Err(Error::NormalizationFailure { sum, min_entry });
    }
    probs.iter_mut().for_each(|p| *p = p.max(0.0));
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    Ok(probs)
}

/// Which refinement to apply on top of the eigenvalue classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvmKind {
    /// `E_i Π_λ`.
    Isotypic,
    /// `E_i` alone (ablation baseline).
    TypeOnly,
}

/// The `{E_i Π_λ}` measurement for block length `ell`, built from `ρ` only.
pub fn build_isotypic_pvm(rho: &DensityOperator, ell: usize) -> Result<Pvm> {
    build_pvm(rho, ell, PvmKind::Isotypic)
}

/// The unrefined `{E_i}` measurement.
pub fn build_type_pvm(rho: &DensityOperator, ell: usize) -> Result<Pvm> {
    build_pvm(rho, ell, PvmKind::TypeOnly)
}

pub fn build_pvm(rho: &DensityOperator, ell: usize, kind: PvmKind) -> Result<Pvm> {
    let b = rho.dim();
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be positive".into()));
    }
    if ell > MAX_BLOCK_LENGTH {
        return Err(Error::DimensionCapExceeded {
            dim: (b as u128).saturating_pow(ell as u32),
            cap: PVM_DIM_CAP,
        });
    }
    let dim = tensor_dim(b, ell, PVM_DIM_CAP)?;
    let spec = rho.spectrum();
    let classes = eigenvalue_classes(spec, ell)?;

    let mut class_of_type: HashMap<Vec<usize>, usize> = HashMap::new();
    for (i, c) in classes.iter().enumerate() {
        for t in &c.member_types {
            class_of_type.insert(t.clone(), i);
        }
    }
    // class membership of each product-eigenbasis index
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for x in 0..dim {
        let mut t = vec![0usize; b];
        let mut rem = x;
        for _ in 0..ell {
            t[rem % b] += 1;
            rem /= b;
        }
        members[class_of_type[&t]].push(x);
    }

    let w = tensor_power_with_cap(&spec.eigenvectors, ell, PVM_DIM_CAP)?;

    let refinements: Vec<(Option<YoungDiagram>, Option<ComplexMatrix>)> = match kind {
        PvmKind::Isotypic => {
            let sums = ClassSums::new(ell, b)?;
            enumerate_young_diagrams(ell, b)
                .into_iter()
                .map(|l| {
                    let p = sums.projector(&l)?;
                    Ok((Some(l), Some(p)))
                })
                .collect::<Result<_>>()?
        }
        PvmKind::TypeOnly => vec![(None, None)],
    };

    let mut projectors = Vec::new();
    let mut labels = Vec::new();
    let mut ranks = Vec::new();
    let mut class_values = Vec::new();
    for (i, support) in members.iter().enumerate() {
        let s = support.len();
        // columns of V^{⊗ℓ} spanning the class
        let w_s = ComplexMatrix::from_fn(dim, s, |r, c| w[(r, support[c])]);
        for (diagram, pi) in &refinements {
            let block = match pi {
                Some(pi) => ComplexMatrix::from_fn(s, s, |r, c| pi[(support[r], support[c])]),
                None => ComplexMatrix::identity(s),
            };
            let trace = block.trace().re;
            if trace < 0.5 {
                continue;
            }
            let m = w_s.matmul(&block).matmul(&w_s.adjoint());
            projectors.push(m);
            labels.push(OutcomeLabel {
                class: i,
                diagram: diagram.clone(),
            });
            ranks.push(trace.round() as usize);
            class_values.push(classes[i].value);
        }
    }

    let completeness_residual = completeness_residual(&projectors, dim);
    Ok(Pvm {
        ell,
        base_dim: b,
        dim,
        projectors,
        labels,
        ranks,
        class_values,
        classes,
        completeness_residual,
    })
}

/// Classical statistics induced by one block measurement.
#[derive(Debug, Clone)]
pub struct InducedModel {
    pub pvm: Pvm,
    /// `p_k = Tr[M_k ρ^{⊗ℓ}]`.
    pub p: ProbabilityVector,
    /// `q_k = Tr[M_k σ^{⊗ℓ}]`.
    pub q: ProbabilityVector,
    /// `hybrids[r-1]` is the distribution under `ρ^{⊗r} ⊗ σ^{⊗(ℓ-r)}`, `r ∈ [1, ℓ-1]`.
    pub hybrids: Vec<ProbabilityVector>,
}

impl InducedModel {
    pub fn ell(&self) -> usize {
        self.pvm.ell
    }

    pub fn outcome_count(&self) -> usize {
        self.p.len()
    }

    /// `D(Q^{(ℓ)}‖P^{(ℓ)})` in nats per block.
    pub fn divergence(&self) -> f64 {
        kl_divergence(self.q.probs(), self.p.probs())
    }

    /// Distribution of a block that switches after `r` pre-change copies.
    pub fn hybrid(&self, r: usize) -> &ProbabilityVector {
        match r {
            0 => &self.q,
            r if r >= self.ell() => &self.p,
            r => &self.hybrids[r - 1],
        }
    }
}

/// Pushes `ρ^{⊗ℓ}`, `σ^{⊗ℓ}` and every mid-block hybrid through the PVM.
pub fn induce(pvm: Pvm, rho: &DensityOperator, sigma: &DensityOperator) -> Result<InducedModel> {
    for state in [rho, sigma] {
        if state.dim() != pvm.base_dim {
            return Err(Error::DimensionMismatch {
                expected: pvm.base_dim,
                actual: state.dim(),
            });
        }
    }
    let ell = pvm.ell;
    let labels = pvm.label_strings();
    let rho_m = rho.matrix();
    let sigma_m = sigma.matrix();

    let p = pvm.outcome_distribution(&tensor_power_with_cap(rho_m, ell, PVM_DIM_CAP)?)?;
    let gamma_min = rho.spectrum().min_nonzero().unwrap_or(0.0);
    let floor = gamma_min.powi(ell as i32) - 1e-12;
    if let Some(bad) = p.iter().copied().find(|&pk| pk < floor) {
        return Err(Error::InvalidArgument(format!(
            "PVM does not match this pre-change state (p_k = {bad:e} < γ_min^ℓ = {:e})",
            gamma_min.powi(ell as i32)
        )));
    }
    let q = pvm.outcome_distribution(&tensor_power_with_cap(sigma_m, ell, PVM_DIM_CAP)?)?;

    let hybrids = (1..ell)
        .map(|r| {
            let factors: Vec<&ComplexMatrix> = std::iter::repeat_n(rho_m, r)
                .chain(std::iter::repeat_n(sigma_m, ell - r))
                .collect();
            let xi = kron_all(&factors);
            ProbabilityVector::new(pvm.outcome_distribution(&xi)?, labels.clone())
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(InducedModel {
        p: ProbabilityVector::new(p, labels.clone())?,
        q: ProbabilityVector::new(q, labels)?,
        hybrids,
        pvm,
    })
}

/// One row of the entropy-gap table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyGapRow {
    pub ell: usize,
    /// `(1/ℓ) D(Q^{(ℓ)}‖P^{(ℓ)})`.
    pub normalized_divergence: f64,
    /// `S(σ‖ρ)`.
    pub quantum_relative_entropy: f64,
    /// `S − (1/ℓ) D`; nonnegative up to round-off.
    pub gap: f64,
    pub outcome_count: usize,
}

/// `(1/ℓ) D(Q^{(ℓ)}‖P^{(ℓ)})` against `S(σ‖ρ)` for `ℓ = 1..=ell_max`.
pub fn entropy_gap_sweep(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    ell_max: usize,
    kind: PvmKind,
) -> Result<Vec<EntropyGapRow>> {
    let s = quantum_relative_entropy(sigma, rho)?;
    (1..=ell_max)
        .into_par_iter()
        .map(|ell| {
            let model = induce(build_pvm(rho, ell, kind)?, rho, sigma)?;
            let nd = model.divergence() / ell as f64;
            Ok(EntropyGapRow {
                ell,
                normalized_divergence: nd,
                quantum_relative_entropy: s,
                gap: s - nd,
                outcome_count: model.outcome_count(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn plus() -> DensityOperator {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        DensityOperator::pure(&[r, r]).unwrap()
    }

    #[test]
    fn classes_nondegenerate_qubit() {
        let rho = DensityOperator::from_diag(&[0.7, 0.3]).unwrap();
        let cls = eigenvalue_classes(rho.spectrum(), 2).unwrap();
        let values: Vec<f64> = cls.iter().map(|c| c.value).collect();
        assert_eq!(cls.len(), 3);
        for (v, e) in values.iter().zip([0.49, 0.21, 0.09]) {
            assert!((v - e).abs() < 1e-15);
        }
        assert_eq!(cls[1].degeneracy, 2);
    }

    #[test]
    fn classes_maximally_mixed() {
        let rho = DensityOperator::maximally_mixed(3).unwrap();
        for ell in 1..=4 {
            let cls = eigenvalue_classes(rho.spectrum(), ell).unwrap();
            assert_eq!(cls.len(), 1);
            assert_eq!(cls[0].degeneracy, 3usize.pow(ell as u32));
        }
    }

    #[test]
    fn classes_with_collisions() {
        let rho = DensityOperator::from_diag(&[0.5, 0.25, 0.25]).unwrap();
        let cls = eigenvalue_classes(rho.spectrum(), 2).unwrap();
        let values: Vec<f64> = cls.iter().map(|c| c.value).collect();
        assert_eq!(values, vec![0.25, 0.125, 0.0625]);
        assert_eq!(cls.iter().map(|c| c.degeneracy).sum::<usize>(), 9);
    }

    #[test]
    fn classes_reject_rank_deficient() {
        let rho = DensityOperator::from_diag(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            eigenvalue_classes(rho.spectrum(), 2),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            build_isotypic_pvm(&rho, 1),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn single_copy_pvm_is_eigenbasis() {
        let rho = DensityOperator::from_diag(&[0.2, 0.5, 0.3]).unwrap();
        let pvm = build_isotypic_pvm(&rho, 1).unwrap();
        assert_eq!(pvm.outcome_count(), 3);
        assert_eq!(pvm.ranks, vec![1, 1, 1]);
        let model = induce(pvm, &rho, &rho).unwrap();
        assert_eq!(model.p.probs().len(), 3);
        for (a, b) in model.p.probs().iter().zip([0.5, 0.3, 0.2]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_copy_qubit_outcomes() {
        let rho = DensityOperator::from_diag(&[0.7, 0.3]).unwrap();
        let pvm = build_isotypic_pvm(&rho, 2).unwrap();
        assert_eq!(
            pvm.label_strings(),
            vec![
                "class#0:λ=(2)",
                "class#1:λ=(2)",
                "class#1:λ=(1,1)",
                "class#2:λ=(2)"
            ]
        );
        assert_eq!(pvm.ranks, vec![1, 1, 1, 1]);
        assert!(pvm.completeness_residual < 1e-12);
    }

    #[test]
    fn maximally_mixed_three_qubits() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let pvm = build_isotypic_pvm(&rho, 3).unwrap();
        assert_eq!(
            pvm.label_strings(),
            vec!["class#0:λ=(3)", "class#0:λ=(2,1)"]
        );
        assert_eq!(pvm.ranks, vec![4, 4]);
    }

    #[test]
    fn induce_identical_states() {
        let rho = DensityOperator::from_diag(&[0.6, 0.4]).unwrap();
        let model = induce(build_isotypic_pvm(&rho, 3).unwrap(), &rho, &rho).unwrap();
        for (p, q) in model.p.probs().iter().zip(model.q.probs()) {
            assert!((p - q).abs() < 1e-10);
        }
        assert_eq!(model.hybrids.len(), 2);
        assert!(model.divergence().abs() < 1e-12);
    }

    #[test]
    fn induce_commuting_single_copy() {
        let rho = DensityOperator::from_diag(&[0.6, 0.4]).unwrap();
        let sigma = DensityOperator::from_diag(&[0.1, 0.9]).unwrap();
        let model = induce(build_isotypic_pvm(&rho, 1).unwrap(), &rho, &sigma).unwrap();
        assert!((model.q.probs()[0] - 0.1).abs() < 1e-12);
        assert!((model.q.probs()[1] - 0.9).abs() < 1e-12);
        assert!(model.hybrids.is_empty());
    }

    #[test]
    fn induce_rejects_dimension_mismatch() {
        let rho = DensityOperator::from_diag(&[0.7, 0.3]).unwrap();
        let pvm = build_isotypic_pvm(&rho, 2).unwrap();
        let qutrit = DensityOperator::maximally_mixed(3).unwrap();
        assert!(matches!(
            induce(pvm, &rho, &qutrit),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hybrid_lookup() {
        let rho = DensityOperator::from_diag(&[0.7, 0.3]).unwrap();
        let model = induce(build_isotypic_pvm(&rho, 3).unwrap(), &rho, &plus()).unwrap();
        assert_eq!(model.hybrid(0), &model.q);
        assert_eq!(model.hybrid(3), &model.p);
        assert_eq!(model.hybrid(1), &model.hybrids[0]);
    }

    #[test]
    fn type_only_is_coarser() {
        let rho = DensityOperator::from_diag(&[0.7, 0.3]).unwrap();
        let iso = induce(build_isotypic_pvm(&rho, 3).unwrap(), &rho, &plus()).unwrap();
        let typ = induce(build_type_pvm(&rho, 3).unwrap(), &rho, &plus()).unwrap();
        assert_eq!(typ.outcome_count(), 4);
        assert!(typ.divergence() <= iso.divergence() + 1e-12);
    }

    #[test]
    fn gap_sweep_identical_and_commuting() {
        let rho = DensityOperator::from_diag(&[0.7, 0.3]).unwrap();
        for row in entropy_gap_sweep(&rho, &rho, 3, PvmKind::Isotypic).unwrap() {
            assert!(row.normalized_divergence.abs() < 1e-12);
            assert!(row.quantum_relative_entropy.abs() < 1e-12);
        }
        let sigma = DensityOperator::from_diag(&[0.2, 0.8]).unwrap();
        for row in entropy_gap_sweep(&rho, &sigma, 4, PvmKind::Isotypic).unwrap() {
            assert!(row.gap.abs() < 1e-9, "{row:?}");
        }
    }
}
